//! `mdd`: command-line front end for weights, effective sample sizes and the
//! simulation experiments.
//!
//! Every subcommand accepts `--config cfg.json`; explicit flags override the
//! file, and `MDD_SEED` overrides the file's seed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mdd_core::ess::{ess_auto, ess_grid, jeffreys_exp_delta, jeffreys_exp_ess, JeffreysExponential};
use mdd_core::experiments::{run_mse_sim, MseConfig, MSE_HEADER};
use mdd_core::io::{emit_results, read_json, read_sample, write_json, RunMeta};
use mdd_core::logistic::{
    info_per_obs, logistic_ess_with_info, DoseDesign, LogisticEssResult, LogisticPriorSpec, PriorVariant,
    Standardization, DEFAULT_C, DEFAULT_DOSES, DEFAULT_DRAWS, DEFAULT_THETA_BAR, TABLE_PSI, TABLE_SIGMA2,
};
use mdd_core::resampling::{compute_weight, write_trace_jsonl, Algorithm, ResamplingConfig, Theta0Mode};
use mdd_core::{closed_form_ess, ConjugateModel, EssResult, Family, MddPrior};

#[derive(Parser)]
#[command(name = "mdd", version, about = "Mixture data-dependent priors: weights, ESS and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the mixture weight by resampling and write the trace as JSON lines.
    Resample(ResampleArgs),
    /// Effective sample size of an informative or mixture prior.
    Ess(EssArgs),
    /// Distance curves for the Jeffreys-baseline exponential model.
    JeffreysExp(JeffreysArgs),
    /// Effective sample sizes for the two-parameter logistic dose-toxicity model.
    LogisticEss(LogisticArgs),
    /// Mean squared error comparison of fixed, mixture and hierarchical priors.
    MseSim(MseArgs),
    /// Runs the logistic ESS tables, the Jeffreys curves and the MSE comparison.
    Tables(TablesArgs),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long, env = "MDD_SEED")]
    seed: Option<u64>,
}

impl Common {
    fn load<T: serde::de::DeserializeOwned + Default>(&self) -> Result<T> {
        match &self.config {
            Some(p) => Ok(read_json(p)?),
            None => Ok(T::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Res1,
    Res2,
    Natural,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Res1 => Algorithm::Res1,
            AlgoArg::Res2 => Algorithm::Res2,
            AlgoArg::Natural => Algorithm::Natural,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StdArg {
    CenteredLog,
    SampleSd,
    PopulationSd,
}

impl From<StdArg> for Standardization {
    fn from(s: StdArg) -> Self {
        match s {
            StdArg::CenteredLog => Standardization::CenteredLog,
            StdArg::SampleSd => Standardization::SampleSd,
            StdArg::PopulationSd => Standardization::PopulationSd,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum VariantArg {
    Informative,
    MddFlat,
    MddImproper,
}

impl VariantArg {
    fn with_psi(self, psi: f64) -> PriorVariant {
        match self {
            VariantArg::Informative => PriorVariant::Informative,
            VariantArg::MddFlat => PriorVariant::MddFlat { psi },
            VariantArg::MddImproper => PriorVariant::MddImproper { psi },
        }
    }
}

// ------------------------------------------------------------------ resample

#[derive(Args)]
struct ResampleArgs {
    #[command(flatten)]
    common: Common,
    /// Model JSON, e.g. `{"model":"NN","informative":{…},"c":100,"sigma2":10}`.
    #[arg(long)]
    model: PathBuf,
    /// Observations, one per row in the first CSV column.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    /// Stop tolerance on the posterior distance.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Known data-generating parameter; estimated by maximum likelihood if unset.
    #[arg(long)]
    theta0: Option<f64>,
    /// Trace destination; standard output if unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resample(args: ResampleArgs) -> Result<()> {
    let mut cfg: ResamplingConfig = args.common.load()?;
    if let Some(a) = args.algo {
        cfg.algorithm = a.into();
    }
    if let Some(e) = args.eps {
        cfg.epsilon = e;
    }
    if let Some(k) = args.k_max {
        cfg.k_max = k;
    }
    if let Some(value) = args.theta0 {
        cfg.theta0 = Theta0Mode::Known { value };
    }
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let model: ConjugateModel = read_json(&args.model)?;
    let data = read_sample(&args.data)?;
    let (psi, m_star, trace) = compute_weight(&model, &data, &cfg)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_trace_jsonl(&mut w, &trace, &cfg, &model)?;
            w.flush()?;
            let summary = serde_json::json!({
                "psi": psi,
                "m_star": m_star,
                "steps": trace.steps.len(),
                "terminated_by": trace.terminated_by,
                "seed": cfg.seed,
            });
            println!("{}", serde_json::to_string(&summary)?);
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_trace_jsonl(&mut w, &trace, &cfg, &model)?;
            w.flush()?;
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------- ess

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct EssConfig {
    /// Weight on the baseline component; the informative prior alone if unset.
    mdd_psi: Option<f64>,
    /// Grid size; grown automatically until the root is bracketed if unset.
    m_max: Option<usize>,
}

#[derive(Args)]
struct EssArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    mdd_psi: Option<f64>,
    #[arg(long)]
    m_max: Option<usize>,
    /// Curve CSV (`m,delta`); a `.summary.json` and `.meta.json` are written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EssSummary<'a> {
    ess: f64,
    raw: f64,
    method: mdd_core::EssMethod,
    theta_bar: f64,
    psi: Option<f64>,
    closed_form: Option<f64>,
    model: &'a ConjugateModel,
}

fn ess(args: EssArgs) -> Result<()> {
    let mut cfg: EssConfig = args.common.load()?;
    cfg.mdd_psi = args.mdd_psi.or(cfg.mdd_psi);
    cfg.m_max = args.m_max.or(cfg.m_max);
    let model: ConjugateModel = read_json(&args.model)?;
    let theta_bar = model.plug_in();
    let result: EssResult = match cfg.mdd_psi {
        Some(psi) => {
            let mix = MddPrior::new(psi, model)?.mixture();
            match cfg.m_max {
                Some(m) => ess_grid(&mix, &model, theta_bar, m)?,
                None => ess_auto(&mix, &model, theta_bar)?,
            }
        }
        None => {
            let prior = model.informative();
            match cfg.m_max {
                Some(m) => ess_grid(&prior, &model, theta_bar, m)?,
                None => ess_auto(&prior, &model, theta_bar)?,
            }
        }
    };
    let summary = EssSummary {
        ess: result.ess,
        raw: result.raw,
        method: result.method,
        theta_bar,
        psi: cfg.mdd_psi,
        closed_form: cfg.mdd_psi.is_none().then(|| closed_form_ess(&model)).transpose()?.map(|r| r.raw),
        model: &model,
    };
    if let Some(out) = &args.out {
        let meta = RunMeta::new("ess", 0, &serde_json::json!({ "model": model, "ess": cfg }))?;
        emit_results(out, &["m", "delta"], &result.curve, &meta)?;
        write_json(&out.with_extension("summary.json"), &summary)?;
    }
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

// ------------------------------------------------------------- jeffreys-exp

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct JeffreysConfig {
    /// Informative `Gamma(shape, rate)` prior.
    shape: f64,
    rate: f64,
    psis: Vec<f64>,
    m_max: usize,
}

impl Default for JeffreysConfig {
    fn default() -> Self {
        Self {
            shape: 4.0,
            rate: 8.0,
            psis: TABLE_PSI.to_vec(),
            m_max: 20,
        }
    }
}

#[derive(Args)]
struct JeffreysArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    shape: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    /// Mixture weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<f64>>,
    #[arg(long)]
    m_max: Option<usize>,
    /// Output stem; writes `<stem>.csv` and `<stem>.meta.json`.
    #[arg(long)]
    out: PathBuf,
}

fn jeffreys_exp(args: JeffreysArgs) -> Result<()> {
    let mut cfg: JeffreysConfig = args.common.load()?;
    cfg.shape = args.shape.unwrap_or(cfg.shape);
    cfg.rate = args.rate.unwrap_or(cfg.rate);
    cfg.psis = args.psi.unwrap_or(cfg.psis);
    cfg.m_max = args.m_max.unwrap_or(cfg.m_max);
    let summary = write_jeffreys(&cfg, &args.out)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn write_jeffreys(cfg: &JeffreysConfig, out: &Path) -> Result<serde_json::Value> {
    if cfg.m_max < 2 {
        bail!("m_max must be >= 2");
    }
    let prior = Family::gamma(cfg.shape, cfg.rate)?;
    let mut header = vec!["m".to_string(), "delta_pi".into(), "delta_j".into()];
    header.extend(cfg.psis.iter().map(|p| format!("delta_phi_{p}")));
    let mut rows = Vec::with_capacity(cfg.m_max);
    for m in 1..=cfg.m_max {
        let d = jeffreys_exp_delta(m, &prior, &cfg.psis)?;
        let mut row = vec![m as f64, d.delta_pi, d.delta_j];
        row.extend(d.delta_phi.iter().map(|&(_, v)| v));
        rows.push(row);
    }
    let theta_bar = prior.mean()?;
    let argmin_phi = cfg
        .psis
        .iter()
        .map(|&psi| {
            let mix = mdd_core::Mixture::new(psi, JeffreysExponential, prior)?;
            Ok(jeffreys_exp_ess(&mix, theta_bar, cfg.m_max)?.raw)
        })
        .collect::<Result<Vec<f64>>>()?;
    let summary = serde_json::json!({
        "theta_bar": theta_bar,
        "argmin_pi": jeffreys_exp_ess(&prior, theta_bar, cfg.m_max)?.raw,
        "argmin_j": jeffreys_exp_ess(&JeffreysExponential, theta_bar, cfg.m_max)?.raw,
        "argmin_phi": argmin_phi,
        "psis": cfg.psis,
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let meta = RunMeta::new("jeffreys-exp", 0, &serde_json::json!({ "config": cfg, "summary": summary }))?;
    emit_results(out, &header, &rows, &meta)?;
    Ok(summary)
}

// ------------------------------------------------------------- logistic-ess

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct LogisticConfig {
    variant: VariantArg,
    sigma2: Vec<f64>,
    psi: Vec<f64>,
    draws: usize,
    seed: u64,
    standardization: Standardization,
    doses: Vec<f64>,
    c: f64,
    theta_bar: (f64, f64),
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            variant: VariantArg::Informative,
            sigma2: TABLE_SIGMA2.to_vec(),
            psi: TABLE_PSI.to_vec(),
            draws: DEFAULT_DRAWS,
            seed: 0,
            standardization: Standardization::default(),
            doses: DEFAULT_DOSES.to_vec(),
            c: DEFAULT_C,
            theta_bar: DEFAULT_THETA_BAR,
        }
    }
}

#[derive(Args)]
struct LogisticArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Mixture weights, comma separated; ignored for the informative prior.
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<f64>>,
    /// Prior variances, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    /// Monte Carlo draws for the expected information.
    #[arg(long = "T", visible_alias = "draws")]
    draws: Option<usize>,
    #[arg(long, value_enum)]
    standardization: Option<StdArg>,
    /// Output stem; writes `<stem>.csv` and `<stem>.meta.json`.
    #[arg(long)]
    out: PathBuf,
}

const LOGISTIC_HEADER: [&str; 13] = [
    "sigma2", "psi", "ess", "ess_mu", "ess_beta", "se_mu", "se_beta", "variant", "ess_raw", "ess_mu_raw",
    "ess_beta_raw", "i1", "i2",
];

#[derive(Serialize)]
struct LogisticRow {
    sigma2: f64,
    psi: Option<f64>,
    ess: f64,
    ess_mu: f64,
    ess_beta: f64,
    se_mu: f64,
    se_beta: f64,
    variant: VariantArg,
    ess_raw: f64,
    ess_mu_raw: f64,
    ess_beta_raw: f64,
    i1: f64,
    i2: f64,
}

impl LogisticRow {
    fn new(variant: VariantArg, r: &LogisticEssResult) -> Self {
        Self {
            sigma2: r.sigma2,
            psi: r.psi,
            ess: r.global.ess,
            ess_mu: r.mu.ess,
            ess_beta: r.beta.ess,
            se_mu: r.mu.se,
            se_beta: r.beta.se,
            variant,
            ess_raw: r.global.raw,
            ess_mu_raw: r.mu.raw,
            ess_beta_raw: r.beta.raw,
            i1: r.info.i1,
            i2: r.info.i2,
        }
    }
}

fn logistic_rows(cfg: &LogisticConfig) -> Result<Vec<LogisticRow>> {
    let design = DoseDesign::new(&cfg.doses, cfg.standardization)?;
    let info = info_per_obs(&design, cfg.theta_bar, cfg.draws, cfg.seed)?;
    let psis: Vec<f64> = match cfg.variant {
        VariantArg::Informative => vec![f64::NAN],
        _ => cfg.psi.clone(),
    };
    let mut rows = Vec::new();
    for &sigma2 in &cfg.sigma2 {
        for &psi in &psis {
            let spec = LogisticPriorSpec {
                c: cfg.c,
                theta_bar: cfg.theta_bar,
                ..LogisticPriorSpec::new(cfg.variant.with_psi(psi), sigma2)?
            };
            rows.push(LogisticRow::new(cfg.variant, &logistic_ess_with_info(&spec, info)?));
        }
    }
    Ok(rows)
}

fn logistic_ess(args: LogisticArgs) -> Result<()> {
    let mut cfg: LogisticConfig = args.common.load()?;
    cfg.variant = args.variant.unwrap_or(cfg.variant);
    cfg.psi = args.psi.unwrap_or(cfg.psi);
    cfg.sigma2 = args.sigma2.unwrap_or(cfg.sigma2);
    cfg.draws = args.draws.unwrap_or(cfg.draws);
    cfg.seed = args.common.seed.unwrap_or(cfg.seed);
    cfg.standardization = args.standardization.map(Into::into).unwrap_or(cfg.standardization);
    let rows = logistic_rows(&cfg)?;
    let meta = RunMeta::new("logistic-ess", cfg.seed, &cfg)?;
    let (csv, _) = emit_results(&args.out, &LOGISTIC_HEADER, &rows, &meta)?;
    eprintln!("wrote {} rows to {}", rows.len(), csv.display());
    Ok(())
}

// ------------------------------------------------------------------ mse-sim

#[derive(Args)]
struct MseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    replications: Option<usize>,
    /// True parameter values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Fixed mixture weight for both resampling estimators.
    #[arg(long)]
    psi_override: Option<f64>,
    /// Output stem; writes `<stem>.csv` and `<stem>.meta.json`.
    #[arg(long)]
    out: PathBuf,
}

fn write_mse(cfg: &MseConfig, out: &Path) -> Result<PathBuf> {
    let rows = run_mse_sim(cfg)?;
    let meta = RunMeta::new("mse-sim", cfg.seed, cfg)?;
    Ok(emit_results(out, &MSE_HEADER, &rows, &meta)?.0)
}

fn mse_sim(args: MseArgs) -> Result<()> {
    let mut cfg: MseConfig = args.common.load()?;
    cfg.replications = args.replications.unwrap_or(cfg.replications);
    cfg.theta0_grid = args.grid.unwrap_or(cfg.theta0_grid);
    cfg.psi_override = args.psi_override.or(cfg.psi_override);
    cfg.seed = args.common.seed.unwrap_or(cfg.seed);
    let csv = write_mse(&cfg, &args.out)?;
    eprintln!("wrote {}", csv.display());
    Ok(())
}

// ------------------------------------------------------------------- tables

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct TablesConfig {
    seed: u64,
    draws: usize,
    standardization: Standardization,
    jeffreys: JeffreysConfig,
    mse: MseConfig,
}

impl Default for TablesConfig {
    fn default() -> Self {
        Self {
            seed: 2019,
            draws: DEFAULT_DRAWS,
            standardization: Standardization::default(),
            jeffreys: JeffreysConfig::default(),
            mse: MseConfig::default(),
        }
    }
}

#[derive(Args)]
struct TablesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "T", visible_alias = "draws")]
    draws: Option<usize>,
    /// Replications for the MSE comparison.
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, value_enum)]
    standardization: Option<StdArg>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

fn tables(args: TablesArgs) -> Result<()> {
    let mut cfg: TablesConfig = args.common.load()?;
    cfg.seed = args.common.seed.unwrap_or(cfg.seed);
    cfg.draws = args.draws.unwrap_or(cfg.draws);
    cfg.standardization = args.standardization.map(Into::into).unwrap_or(cfg.standardization);
    cfg.mse.replications = args.replications.unwrap_or(cfg.mse.replications);
    cfg.mse.seed = cfg.seed;
    let dir = &args.out_dir;
    for (variant, stem) in [
        (VariantArg::Informative, "logistic_informative"),
        (VariantArg::MddFlat, "logistic_mdd_flat"),
        (VariantArg::MddImproper, "logistic_mdd_improper"),
    ] {
        let lc = LogisticConfig {
            variant,
            draws: cfg.draws,
            seed: cfg.seed,
            standardization: cfg.standardization,
            ..LogisticConfig::default()
        };
        let rows = logistic_rows(&lc)?;
        let meta = RunMeta::new("logistic-ess", lc.seed, &lc)?;
        let (csv, _) = emit_results(&dir.join(stem), &LOGISTIC_HEADER, &rows, &meta)?;
        eprintln!("wrote {}", csv.display());
    }
    write_jeffreys(&cfg.jeffreys, &dir.join("jeffreys_exp"))?;
    eprintln!("wrote {}", dir.join("jeffreys_exp.csv").display());
    let csv = write_mse(&cfg.mse, &dir.join("mse"))?;
    eprintln!("wrote {}", csv.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Resample(a) => resample(a),
        Command::Ess(a) => ess(a),
        Command::JeffreysExp(a) => jeffreys_exp(a),
        Command::LogisticEss(a) => logistic_ess(a),
        Command::MseSim(a) => mse_sim(a),
        Command::Tables(a) => tables(a),
    }
}
