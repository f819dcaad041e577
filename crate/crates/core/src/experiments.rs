//! Simulation harness comparing posterior-mean estimators of a Normal mean:
//! MDD priors with resampled weights, the two fixed priors, and a two-level
//! hierarchical model fitted by Gibbs sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugate::{mdd_posterior, ConjugateModel, MddPrior};
use crate::dist::{Family, Sample};
use crate::error::{MddError, Result};
use crate::resampling::{compute_weight, Algorithm, PsiTrace, ResamplingConfig};

/// Hierarchical model `y ~ N(θ, σ²)`, `θ | z ~ N(0, ζ²)` if `z = 0` and
/// `N(0, cζ²)` if `z = 1`, `z | p ~ Bernoulli(p)`, `p ~ Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub c: f64,
    pub zeta2: f64,
    pub sigma2: f64,
    pub a: f64,
    pub b: f64,
    pub iters: usize,
    pub burn_in: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            c: 100.0,
            zeta2: 1.0,
            sigma2: 5.0,
            a: 1.0,
            b: 1.0,
            iters: 5000,
            burn_in: 1000,
        }
    }
}

impl GibbsConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("zeta2", self.zeta2), ("sigma2", self.sigma2), ("a", self.a), ("b", self.b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MddError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.iters <= self.burn_in {
            return Err(MddError::Config("iters must exceed burn_in".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsResult {
    /// Posterior mean of `θ`.
    pub theta_mean: f64,
    /// Batch-means standard error of `theta_mean`.
    pub theta_se: f64,
    pub p_mean: f64,
    /// Fraction of kept draws with the diffuse component (`z = 1`).
    pub z_mean: f64,
}

/// Gibbs sampler over `(θ, z, p)`; every full conditional is conjugate.
pub fn gibbs_hierarchical<R: Rng + ?Sized>(data: &Sample, cfg: &GibbsConfig, rng: &mut R) -> Result<GibbsResult> {
    cfg.validate()?;
    let m = data.len() as f64;
    let sum = data.sum();
    let vars = [cfg.zeta2, cfg.c * cfg.zeta2];
    let mut theta = if data.is_empty() { 0.0 } else { data.mean() };
    let mut p = 0.5;
    let kept = cfg.iters - cfg.burn_in;
    let mut thetas = Vec::with_capacity(kept);
    let (mut p_sum, mut z_sum) = (0.0, 0.0);
    for it in 0..cfg.iters {
        // z | θ, p, compared on the log scale.
        let log_w = |v: f64, w: f64| w.ln() - 0.5 * v.ln() - theta * theta / (2.0 * v);
        let l1 = log_w(vars[1], p);
        let l0 = log_w(vars[0], 1.0 - p);
        let p1 = 1.0 / (1.0 + (l0 - l1).exp());
        let z = usize::from(rng.random::<f64>() < p1);
        // p | z
        let zf = z as f64;
        p = Beta::new(cfg.a + zf, cfg.b + 1.0 - zf)
            .map_err(|e| MddError::domain(e.to_string()))?
            .sample(rng);
        // θ | z, y
        let precision = 1.0 / vars[z] + m / cfg.sigma2;
        let mean = sum / cfg.sigma2 / precision;
        let eps: f64 = StandardNormal.sample(rng);
        theta = mean + eps / precision.sqrt();
        if it >= cfg.burn_in {
            thetas.push(theta);
            p_sum += p;
            z_sum += zf;
        }
    }
    let n = kept as f64;
    let theta_mean = thetas.iter().sum::<f64>() / n;
    Ok(GibbsResult {
        theta_mean,
        theta_se: batch_means_se(&thetas),
        p_mean: p_sum / n,
        z_mean: z_sum / n,
    })
}

fn batch_means_se(xs: &[f64]) -> f64 {
    let batches = 20.min(xs.len());
    let size = xs.len() / batches;
    if size < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let k = means.len() as f64;
    let grand = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    MddRes1,
    MddRes2,
    Informative,
    Baseline,
    HierarchicalGibbs,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::MddRes1,
        Estimator::MddRes2,
        Estimator::Informative,
        Estimator::Baseline,
        Estimator::HierarchicalGibbs,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MseConfig {
    pub c: f64,
    pub zeta2: f64,
    pub sigma2: f64,
    /// Observations per replication.
    pub m: usize,
    pub replications: usize,
    pub theta0_grid: Vec<f64>,
    pub seed: u64,
    pub epsilon: f64,
    pub k_max: usize,
    pub gibbs_iters: usize,
    pub gibbs_burn_in: usize,
    /// Skips resampling and uses this weight for both MDD estimators.
    pub psi_override: Option<f64>,
    pub estimators: Vec<Estimator>,
}

impl Default for MseConfig {
    fn default() -> Self {
        Self {
            c: 100.0,
            zeta2: 1.0,
            sigma2: 5.0,
            m: 5,
            replications: 50,
            theta0_grid: (-6..=6).map(|i| 2.0 * i as f64).collect(),
            seed: 2019,
            epsilon: 0.05,
            k_max: 1000,
            gibbs_iters: 4000,
            gibbs_burn_in: 1000,
            psi_override: None,
            estimators: Estimator::ALL.to_vec(),
        }
    }
}

impl MseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(MddError::Config("replications must be >= 1".into()));
        }
        if self.theta0_grid.is_empty() {
            return Err(MddError::Config("theta0 grid is empty".into()));
        }
        if self.m == 0 {
            return Err(MddError::Config("m must be >= 1".into()));
        }
        if let Some(psi) = self.psi_override {
            if !(0.0..=1.0).contains(&psi) {
                return Err(MddError::Config(format!("psi override must be in [0, 1], got {psi}")));
            }
        }
        self.model()?;
        self.gibbs().validate()
    }

    pub fn model(&self) -> Result<ConjugateModel> {
        ConjugateModel::normal_normal(0.0, self.zeta2, self.sigma2, self.c)
    }

    fn gibbs(&self) -> GibbsConfig {
        GibbsConfig {
            c: self.c,
            zeta2: self.zeta2,
            sigma2: self.sigma2,
            a: 1.0,
            b: 1.0,
            iters: self.gibbs_iters,
            burn_in: self.gibbs_burn_in,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub theta0: f64,
    pub estimator: Estimator,
    pub mse: f64,
    /// Monte Carlo standard error of `mse`.
    pub se: f64,
    pub replications: usize,
    /// Average weight, MDD estimators only.
    pub mean_psi: Option<f64>,
    /// Average augmented sample size, resampled MDD estimators only.
    pub mean_m_star: Option<f64>,
    pub seed: u64,
}

pub const MSE_HEADER: [&str; 8] = [
    "theta0",
    "estimator",
    "mse",
    "se",
    "replications",
    "mean_psi",
    "mean_m_star",
    "seed",
];

/// SplitMix64 finalizer over `(root, a, b)`, for per-task seeds.
pub fn derive_seed(root: u64, a: u64, b: u64) -> u64 {
    let mut z = root
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
struct Estimate {
    value: f64,
    psi: Option<f64>,
    m_star: Option<usize>,
}

fn one_replication(cfg: &MseConfig, model: &ConjugateModel, theta0: f64, seed: u64) -> Result<Vec<Estimate>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Family::normal(theta0, cfg.sigma2)?.sample(cfg.m, &mut rng)?;
    let mdd = |algorithm: Algorithm, salt: u64| -> Result<Estimate> {
        let (psi, m_star) = match cfg.psi_override {
            Some(psi) => (psi, None),
            None => {
                let rc = ResamplingConfig {
                    epsilon: cfg.epsilon,
                    k_max: cfg.k_max,
                    algorithm,
                    seed: derive_seed(seed, salt, 0),
                    psi_trace: PsiTrace::FinalOnly,
                    ..Default::default()
                };
                let (psi, m_star, _) = compute_weight(model, &data, &rc)?;
                (psi, Some(m_star))
            }
        };
        let post = mdd_posterior(&MddPrior::new(psi, *model)?, &data)?;
        Ok(Estimate {
            value: post.mean()?,
            psi: Some(psi),
            m_star,
        })
    };
    let plain = |which| -> Result<Estimate> {
        Ok(Estimate {
            value: model.posterior(which, &data)?.mean()?,
            psi: None,
            m_star: None,
        })
    };
    cfg.estimators
        .iter()
        .map(|e| match e {
            Estimator::MddRes1 => mdd(Algorithm::Res1, 1),
            Estimator::MddRes2 => mdd(Algorithm::Res2, 2),
            Estimator::Informative => plain(crate::conjugate::Component::Informative),
            Estimator::Baseline => plain(crate::conjugate::Component::Baseline),
            Estimator::HierarchicalGibbs => {
                let mut g = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3, 0));
                Ok(Estimate {
                    value: gibbs_hierarchical(&data, &cfg.gibbs(), &mut g)?.theta_mean,
                    psi: None,
                    m_star: None,
                })
            }
        })
        .collect()
}

/// Mean squared error of each estimator at each `θ₀`, over independent
/// replications run in parallel. Seeds derive from `(seed, θ₀ index,
/// replication)`, so results do not depend on scheduling.
pub fn run_mse_sim(cfg: &MseConfig) -> Result<Vec<MseRow>> {
    cfg.validate()?;
    let model = cfg.model()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.theta0_grid.len())
        .flat_map(|i| (0..cfg.replications).map(move |r| (i, r)))
        .collect();
    let results: Vec<Vec<Estimate>> = tasks
        .par_iter()
        .map(|&(i, r)| {
            one_replication(cfg, &model, cfg.theta0_grid[i], derive_seed(cfg.seed, i as u64, r as u64))
        })
        .collect::<Result<_>>()?;
    let reps = cfg.replications;
    let mut rows = Vec::new();
    for (i, &theta0) in cfg.theta0_grid.iter().enumerate() {
        let block = &results[i * reps..(i + 1) * reps];
        for (j, &estimator) in cfg.estimators.iter().enumerate() {
            let errs: Vec<f64> = block.iter().map(|e| (e[j].value - theta0).powi(2)).collect();
            let n = reps as f64;
            let mse = errs.iter().sum::<f64>() / n;
            let se = if reps > 1 {
                (errs.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                f64::NAN
            };
            let avg = |f: &dyn Fn(&Estimate) -> Option<f64>| -> Option<f64> {
                block.iter().map(|e| f(&e[j])).sum::<Option<f64>>().map(|s| s / n)
            };
            rows.push(MseRow {
                theta0,
                estimator,
                mse,
                se,
                replications: reps,
                mean_psi: avg(&|e| e.psi),
                mean_m_star: avg(&|e| e.m_star.map(|v| v as f64)),
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}
