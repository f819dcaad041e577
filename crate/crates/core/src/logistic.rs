//! Effective sample size of priors for a two-parameter logistic dose-toxicity
//! model, `logit p(X) = μ + β·X`, with doses standardized on the log scale.
//!
//! The expected information per observation is estimated by Monte Carlo over
//! doses drawn uniformly from the design levels, at the plug-in point. Because
//! the information is additive, the expected posterior curvature after `m`
//! observations is `D_b + m·ī_j`, with `D_b` the baseline-prior curvature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugate::{neg_log_curvature, Mixture};
use crate::dist::{Family, LogDensity};
use crate::error::{MddError, Result};
use crate::ess::{interpolate_root, ESS_FLOOR};

/// Default doses (mg/m²).
pub const DEFAULT_DOSES: [f64; 6] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0];
/// Informative prior means of `(μ, β)`, also the plug-in point.
pub const DEFAULT_THETA_BAR: (f64, f64) = (-0.11313, 2.3980);
pub const DEFAULT_C: f64 = 1e4;
pub const DEFAULT_DRAWS: usize = 100_000;
/// Prior variances swept by the tables.
pub const TABLE_SIGMA2: [f64; 5] = [0.25, 1.0, 4.0, 9.0, 25.0];
/// Mixture weights swept by the tables.
pub const TABLE_PSI: [f64; 3] = [0.2, 0.5, 0.8];

const CHUNK: usize = 4096;

/// How log-doses are turned into covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// `ln x − mean(ln x)`, no scaling.
    #[default]
    CenteredLog,
    /// Centered and divided by the sample standard deviation (`n − 1`).
    SampleSd,
    /// Centered and divided by the population standard deviation (`n`).
    PopulationSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseDesign {
    pub raw: Vec<f64>,
    pub x: Vec<f64>,
    pub standardization: Standardization,
}

/// Standardizes doses on the log scale with the `n − 1` standard deviation.
pub fn standardize_doses(raw: &[f64]) -> Result<DoseDesign> {
    DoseDesign::new(raw, Standardization::SampleSd)
}

impl DoseDesign {
    pub fn new(raw: &[f64], standardization: Standardization) -> Result<Self> {
        if raw.len() < 2 {
            return Err(MddError::InsufficientData {
                needed: 2,
                got: raw.len(),
            });
        }
        if let Some(bad) = raw.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(MddError::domain(format!("doses must be positive, got {bad}")));
        }
        let logs: Vec<f64> = raw.iter().map(|d| d.ln()).collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let ss: f64 = logs.iter().map(|l| (l - mean).powi(2)).sum();
        if ss == 0.0 {
            return Err(MddError::DegenerateData("all doses are equal".into()));
        }
        let scale = match standardization {
            Standardization::CenteredLog => 1.0,
            Standardization::SampleSd => (ss / (n - 1.0)).sqrt(),
            Standardization::PopulationSd => (ss / n).sqrt(),
        };
        Ok(Self {
            raw: raw.to_vec(),
            x: logs.iter().map(|l| (l - mean) / scale).collect(),
            standardization,
        })
    }

    /// The default six-dose design with the default standardization.
    pub fn default_design() -> Self {
        Self::new(&DEFAULT_DOSES, Standardization::default()).expect("valid default doses")
    }
}

/// Expected per-observation information `(ī₁, ī₂) = (E[p(1−p)], E[X²p(1−p)])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoEstimate {
    pub i1: f64,
    pub i2: f64,
    pub se1: f64,
    pub se2: f64,
    /// Monte Carlo draws; 0 for the exact expectation.
    pub draws: usize,
}

impl InfoEstimate {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2
    }
}

fn weights(x: f64, theta: (f64, f64)) -> (f64, f64) {
    let eta = theta.0 + theta.1 * x;
    let p = 1.0 / (1.0 + (-eta).exp());
    let w = p * (1.0 - p);
    (w, x * x * w)
}

/// Exact expectation over equally likely design levels.
pub fn info_exact(design: &DoseDesign, theta: (f64, f64)) -> InfoEstimate {
    let n = design.x.len() as f64;
    let (s1, s2) = design
        .x
        .iter()
        .map(|&x| weights(x, theta))
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    InfoEstimate {
        i1: s1 / n,
        i2: s2 / n,
        se1: 0.0,
        se2: 0.0,
        draws: 0,
    }
}

/// Monte Carlo estimate with `draws` doses drawn uniformly from the design.
///
/// Draws are split into fixed chunks, each with its own stream of the root
/// seed, and reduced in chunk order, so the result does not depend on the
/// number of worker threads.
pub fn info_per_obs(design: &DoseDesign, theta: (f64, f64), draws: usize, seed: u64) -> Result<InfoEstimate> {
    if draws < 2 {
        return Err(MddError::Argument("at least 2 Monte Carlo draws are needed".into()));
    }
    let levels = design.x.len();
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<[f64; 4]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(draws - c * CHUNK);
            let mut acc = [0.0; 4];
            for _ in 0..len {
                let (a, b) = weights(design.x[rng.random_range(0..levels)], theta);
                acc[0] += a;
                acc[1] += a * a;
                acc[2] += b;
                acc[3] += b * b;
            }
            acc
        })
        .collect();
    let s = partial.iter().fold([0.0; 4], |mut t, p| {
        for (ti, pi) in t.iter_mut().zip(p) {
            *ti += pi;
        }
        t
    });
    let t = draws as f64;
    let se = |sum: f64, sq: f64| {
        let mean = sum / t;
        ((sq / t - mean * mean).max(0.0) * t / (t - 1.0) / t).sqrt()
    };
    Ok(InfoEstimate {
        i1: s[0] / t,
        i2: s[2] / t,
        se1: se(s[0], s[1]),
        se2: se(s[2], s[3]),
        draws,
    })
}

/// Prior family on both parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum PriorVariant {
    /// `N(μ̃, σ²)` on each parameter.
    Informative,
    /// `ψ·N(μ̃, cσ²) + (1 − ψ)·N(μ̃, σ²)`.
    MddFlat { psi: f64 },
    /// `ψ·1 + (1 − ψ)·N(μ̃, σ²)`, with an improper flat baseline.
    MddImproper { psi: f64 },
}

impl PriorVariant {
    pub fn psi(&self) -> Option<f64> {
        match *self {
            PriorVariant::Informative => None,
            PriorVariant::MddFlat { psi } | PriorVariant::MddImproper { psi } => Some(psi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticPriorSpec {
    pub variant: PriorVariant,
    /// Common prior variance of `μ` and `β`.
    pub sigma2: f64,
    pub c: f64,
    pub theta_bar: (f64, f64),
}

impl LogisticPriorSpec {
    pub fn new(variant: PriorVariant, sigma2: f64) -> Result<Self> {
        let spec = Self {
            variant,
            sigma2,
            c: DEFAULT_C,
            theta_bar: DEFAULT_THETA_BAR,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(MddError::domain(format!("sigma2 must be > 0, got {}", self.sigma2)));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(MddError::domain(format!("c must be >= 1, got {}", self.c)));
        }
        if let Some(psi) = self.variant.psi() {
            if !(0.0..=1.0).contains(&psi) {
                return Err(MddError::domain(format!("psi must be in [0, 1], got {psi}")));
            }
        }
        Ok(())
    }

    /// Prior curvature of one parameter at its prior mean, and the curvature of
    /// the baseline prior that enters the posterior.
    fn curvatures(&self, mean: f64) -> Result<(f64, f64)> {
        let pi = Family::normal(mean, self.sigma2)?;
        let inflated = Family::normal(mean, self.c * self.sigma2)?;
        let inflated_d = 1.0 / (self.c * self.sigma2);
        Ok(match self.variant {
            PriorVariant::Informative => (1.0 / self.sigma2, inflated_d),
            PriorVariant::MddFlat { psi } => (curv(&Mixture::new(psi, inflated, pi)?, mean)?, inflated_d),
            PriorVariant::MddImproper { psi } => {
                (curv(&Mixture::new(psi, Family::ImproperFlat, pi)?, mean)?, 0.0)
            }
        })
    }
}

fn curv<D: LogDensity>(d: &D, x: f64) -> Result<f64> {
    neg_log_curvature(d, x)
}

/// ESS of one curvature comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentEss {
    /// Interpolated, floored at 1.
    pub ess: f64,
    /// Interpolated, unfloored.
    pub raw: f64,
    /// Integer minimizer of `δ`, floored at 1.
    pub grid: f64,
    /// Monte Carlo standard error of `raw`.
    pub se: f64,
    /// Set when the prior curvature is not finite; `ess` is then the floor.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticEssResult {
    pub sigma2: f64,
    pub psi: Option<f64>,
    pub global: ComponentEss,
    pub mu: ComponentEss,
    pub beta: ComponentEss,
    pub info: InfoEstimate,
}

fn component_ess(d_prior: f64, d_base: f64, info: f64, info_se: f64) -> Result<ComponentEss> {
    if !d_prior.is_finite() {
        return Ok(ComponentEss {
            ess: ESS_FLOOR,
            raw: f64::NAN,
            grid: ESS_FLOOR,
            se: f64::NAN,
            flagged: true,
        });
    }
    let exact = ((d_prior - d_base) / info).max(0.0);
    let m_max = (exact.ceil() as usize + 2).max(2);
    let (raw, curve) = interpolate_root(d_prior, d_base, info, m_max)?;
    let grid = curve
        .iter()
        .min_by(|a, b| a.delta.total_cmp(&b.delta))
        .map_or(0, |p| p.m) as f64;
    Ok(ComponentEss {
        ess: raw.max(ESS_FLOOR),
        raw,
        grid: grid.max(ESS_FLOOR),
        se: raw * info_se / info,
        flagged: false,
    })
}

/// ESS of each parameter and of both jointly, given the information estimate.
pub fn logistic_ess_with_info(spec: &LogisticPriorSpec, info: InfoEstimate) -> Result<LogisticEssResult> {
    spec.validate()?;
    let (d1, b1) = spec.curvatures(spec.theta_bar.0)?;
    let (d2, b2) = spec.curvatures(spec.theta_bar.1)?;
    let se_total = (info.se1 * info.se1 + info.se2 * info.se2).sqrt();
    Ok(LogisticEssResult {
        sigma2: spec.sigma2,
        psi: spec.variant.psi(),
        global: component_ess(d1 + d2, b1 + b2, info.total(), se_total)?,
        mu: component_ess(d1, b1, info.i1, info.se1)?,
        beta: component_ess(d2, b2, info.i2, info.se2)?,
        info,
    })
}

/// Monte Carlo ESS with `draws` dose draws.
pub fn logistic_ess(spec: &LogisticPriorSpec, design: &DoseDesign, draws: usize, seed: u64) -> Result<LogisticEssResult> {
    let info = info_per_obs(design, spec.theta_bar, draws, seed)?;
    logistic_ess_with_info(spec, info)
}

/// Rows of the three ESS tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssTables {
    pub informative: Vec<LogisticEssResult>,
    pub mdd_flat: Vec<LogisticEssResult>,
    pub mdd_improper: Vec<LogisticEssResult>,
}

/// Sweeps the table grid of variances and mixture weights.
///
/// One information estimate is shared by every cell since it does not depend
/// on the prior.
pub fn reproduce_tables(design: &DoseDesign, draws: usize, seed: u64) -> Result<EssTables> {
    let info = info_per_obs(design, DEFAULT_THETA_BAR, draws, seed)?;
    let cell = |variant, sigma2| logistic_ess_with_info(&LogisticPriorSpec::new(variant, sigma2)?, info);
    let mut tables = EssTables {
        informative: Vec::new(),
        mdd_flat: Vec::new(),
        mdd_improper: Vec::new(),
    };
    for &s2 in &TABLE_SIGMA2 {
        tables.informative.push(cell(PriorVariant::Informative, s2)?);
        for &psi in &TABLE_PSI {
            tables.mdd_flat.push(cell(PriorVariant::MddFlat { psi }, s2)?);
            tables.mdd_improper.push(cell(PriorVariant::MddImproper { psi }, s2)?);
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_identities() {
        let d = standardize_doses(&DEFAULT_DOSES).unwrap();
        let n = d.x.len() as f64;
        let mean = d.x.iter().sum::<f64>() / n;
        let sd = (d.x.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 1e-12);
        assert!((sd - 1.0).abs() < 1e-12);
        assert!(d.x.windows(2).all(|w| w[0] < w[1]));
        assert!(d.x[0] < 0.0 && d.x[5] > 0.0);
        assert!(standardize_doses(&[3.0, 3.0]).is_err());
        assert!(standardize_doses(&[3.0]).is_err());
    }

    #[test]
    fn information_limits_and_symmetry() {
        let d = DoseDesign::default_design();
        assert!(info_exact(&d, (-60.0, 2.4)).i1 < 1e-20);
        let sym = DoseDesign {
            raw: vec![],
            x: vec![-1.0, -0.3, 0.3, 1.0],
            standardization: Standardization::CenteredLog,
        };
        let a = info_exact(&sym, (0.0, 1.7));
        let b = info_exact(&sym, (0.0, -1.7));
        assert!((a.i1 - b.i1).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_matches_exact_and_is_deterministic() {
        let d = DoseDesign::default_design();
        let exact = info_exact(&d, DEFAULT_THETA_BAR);
        let mc = info_per_obs(&d, DEFAULT_THETA_BAR, 100_000, 5).unwrap();
        assert!((mc.i1 - exact.i1).abs() < 5.0 * mc.se1);
        assert!((mc.i2 - exact.i2).abs() < 5.0 * mc.se2);
        assert_eq!(mc, info_per_obs(&d, DEFAULT_THETA_BAR, 100_000, 5).unwrap());
        let one_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        assert_eq!(
            mc,
            one_thread
                .install(|| info_per_obs(&d, DEFAULT_THETA_BAR, 100_000, 5))
                .unwrap()
        );
    }

    #[test]
    fn ess_is_floored_and_ordered() {
        let info = info_exact(&DoseDesign::default_design(), DEFAULT_THETA_BAR);
        let r = logistic_ess_with_info(&LogisticPriorSpec::new(PriorVariant::Informative, 25.0).unwrap(), info).unwrap();
        assert_eq!(r.mu.ess, 1.0);
        assert!(r.beta.raw > r.mu.raw);
        let r = logistic_ess_with_info(&LogisticPriorSpec::new(PriorVariant::Informative, 1.0).unwrap(), info).unwrap();
        assert!(r.mu.raw <= r.global.raw && r.global.raw <= r.beta.raw);
        assert!((r.mu.raw - (1.0 - 1e-4) / info.i1).abs() < 1e-9);
    }

    #[test]
    fn mixture_weight_validation() {
        assert!(LogisticPriorSpec::new(PriorVariant::MddFlat { psi: 1.5 }, 1.0).is_err());
        assert!(LogisticPriorSpec::new(PriorVariant::Informative, 0.0).is_err());
    }
}
