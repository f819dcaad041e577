//! Parametric families used as likelihoods and priors.
//!
//! Every family exposes its log-density, a seeded sampler, closed-form
//! maximum-likelihood fits (where one exists) and the negative second
//! log-derivative used by the effective-sample-size machinery.
//!
//! The Normal family is parameterized by its **variance**, never its
//! standard deviation.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{MddError, Result};

/// A parametric density or mass function with validated parameters.
///
/// Construct through the checked constructors ([`Family::normal`], ...) or by
/// deserializing; both enforce the parameter domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub enum Family {
    /// Mean and variance.
    Normal { mean: f64, var: f64 },
    /// Shape and rate.
    Gamma { shape: f64, rate: f64 },
    Beta { alpha: f64, beta: f64 },
    Exponential { rate: f64 },
    Poisson { rate: f64 },
    /// Number of trials and success probability in (0, 1).
    Binomial { trials: u64, prob: f64 },
    /// Improper density equal to one everywhere on the real line.
    ImproperFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Normal,
    Gamma,
    Beta,
    Exponential,
    Poisson,
    Binomial,
    ImproperFlat,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
enum FamilyRepr {
    Normal { mean: f64, var: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { alpha: f64, beta: f64 },
    Exponential { rate: f64 },
    Poisson { rate: f64 },
    Binomial { trials: u64, prob: f64 },
    ImproperFlat,
}

impl TryFrom<FamilyRepr> for Family {
    type Error = MddError;

    fn try_from(repr: FamilyRepr) -> Result<Self> {
        match repr {
            FamilyRepr::Normal { mean, var } => Family::normal(mean, var),
            FamilyRepr::Gamma { shape, rate } => Family::gamma(shape, rate),
            FamilyRepr::Beta { alpha, beta } => Family::beta(alpha, beta),
            FamilyRepr::Exponential { rate } => Family::exponential(rate),
            FamilyRepr::Poisson { rate } => Family::poisson(rate),
            FamilyRepr::Binomial { trials, prob } => Family::binomial(trials, prob),
            FamilyRepr::ImproperFlat => Ok(Family::ImproperFlat),
        }
    }
}

impl From<Family> for FamilyRepr {
    fn from(f: Family) -> Self {
        match f {
            Family::Normal { mean, var } => FamilyRepr::Normal { mean, var },
            Family::Gamma { shape, rate } => FamilyRepr::Gamma { shape, rate },
            Family::Beta { alpha, beta } => FamilyRepr::Beta { alpha, beta },
            Family::Exponential { rate } => FamilyRepr::Exponential { rate },
            Family::Poisson { rate } => FamilyRepr::Poisson { rate },
            Family::Binomial { trials, prob } => FamilyRepr::Binomial { trials, prob },
            Family::ImproperFlat => FamilyRepr::ImproperFlat,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(MddError::domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Value of a log-density together with its first two derivatives in the argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Anything with a twice-differentiable log-density on the real line.
///
/// Improper densities (flat, Jeffreys) implement this too; they simply do not
/// integrate to one.
pub trait LogDensity {
    fn log_derivs(&self, x: f64) -> Result<LogDerivs>;
}

/// Known nuisance parameters for [`ml_estimate`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KnownParams {
    /// Known Normal variance.
    pub var: Option<f64>,
    /// Known Binomial number of trials (defaults to 1).
    pub trials: Option<u64>,
}

impl Family {
    pub fn normal(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(MddError::domain(format!("normal mean must be finite, got {mean}")));
        }
        Ok(Family::Normal {
            mean,
            var: positive("normal variance", var)?,
        })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Family::Gamma {
            shape: positive("gamma shape", shape)?,
            rate: positive("gamma rate", rate)?,
        })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Family::Beta {
            alpha: positive("beta alpha", alpha)?,
            beta: positive("beta beta", beta)?,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Family::Exponential {
            rate: positive("exponential rate", rate)?,
        })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        Ok(Family::Poisson {
            rate: positive("poisson rate", rate)?,
        })
    }

    pub fn binomial(trials: u64, prob: f64) -> Result<Self> {
        if trials == 0 {
            return Err(MddError::domain("binomial trials must be >= 1"));
        }
        if !(prob > 0.0 && prob < 1.0) {
            return Err(MddError::domain(format!(
                "binomial probability must lie in (0, 1), got {prob}"
            )));
        }
        Ok(Family::Binomial { trials, prob })
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            Family::Normal { .. } => FamilyTag::Normal,
            Family::Gamma { .. } => FamilyTag::Gamma,
            Family::Beta { .. } => FamilyTag::Beta,
            Family::Exponential { .. } => FamilyTag::Exponential,
            Family::Poisson { .. } => FamilyTag::Poisson,
            Family::Binomial { .. } => FamilyTag::Binomial,
            Family::ImproperFlat => FamilyTag::ImproperFlat,
        }
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, Family::ImproperFlat)
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Family::Poisson { .. } | Family::Binomial { .. })
    }

    /// Mean of a proper family.
    pub fn mean(&self) -> Result<f64> {
        Ok(match *self {
            Family::Normal { mean, .. } => mean,
            Family::Gamma { shape, rate } => shape / rate,
            Family::Beta { alpha, beta } => alpha / (alpha + beta),
            Family::Exponential { rate } => 1.0 / rate,
            Family::Poisson { rate } => rate,
            Family::Binomial { trials, prob } => trials as f64 * prob,
            Family::ImproperFlat => {
                return Err(MddError::unsupported("improper flat density has no mean"))
            }
        })
    }

    /// Variance of a proper family.
    pub fn variance(&self) -> Result<f64> {
        Ok(match *self {
            Family::Normal { var, .. } => var,
            Family::Gamma { shape, rate } => shape / (rate * rate),
            Family::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            Family::Exponential { rate } => 1.0 / (rate * rate),
            Family::Poisson { rate } => rate,
            Family::Binomial { trials, prob } => trials as f64 * prob * (1.0 - prob),
            Family::ImproperFlat => {
                return Err(MddError::unsupported("improper flat density has no variance"))
            }
        })
    }

    fn check_support(&self, y: f64) -> Result<()> {
        let ok = match *self {
            Family::Normal { .. } | Family::ImproperFlat => y.is_finite(),
            Family::Gamma { .. } | Family::Exponential { .. } => y.is_finite() && y >= 0.0,
            Family::Beta { .. } => (0.0..=1.0).contains(&y),
            Family::Poisson { .. } => y.is_finite() && y >= 0.0 && y.fract() == 0.0,
            Family::Binomial { trials, .. } => {
                y >= 0.0 && y <= trials as f64 && y.fract() == 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(MddError::domain(format!("{y} is outside the support of {self:?}")))
        }
    }

    /// Natural log of the density (continuous) or mass (discrete) at `y`.
    ///
    /// Boundary points of closed supports (0 for Gamma, 0 and 1 for Beta)
    /// return the limiting value, which may be infinite.
    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        Ok(match *self {
            Family::Normal { mean, var } => {
                let z = y - mean;
                -0.5 * (2.0 * PI * var).ln() - z * z / (2.0 * var)
            }
            Family::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + xlogy(shape - 1.0, y) - rate * y
            }
            Family::Beta { alpha, beta } => {
                xlogy(alpha - 1.0, y) + xlogy(beta - 1.0, 1.0 - y) - ln_beta(alpha, beta)
            }
            Family::Exponential { rate } => rate.ln() - rate * y,
            Family::Poisson { rate } => y * rate.ln() - rate - ln_gamma(y + 1.0),
            Family::Binomial { trials, prob } => {
                let n = trials as f64;
                ln_gamma(n + 1.0) - ln_gamma(y + 1.0) - ln_gamma(n - y + 1.0)
                    + y * prob.ln()
                    + (n - y) * (1.0 - prob).ln()
            }
            Family::ImproperFlat => 0.0,
        })
    }

    /// Density (or mass) at `y`; zero outside the support.
    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).map(f64::exp).unwrap_or(0.0)
    }

    /// Draws `m` i.i.d. values. Deterministic for a given generator state.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Sample> {
        if m == 0 {
            return Err(MddError::Argument("sample size must be >= 1".into()));
        }
        let mut values = Vec::with_capacity(m);
        for _ in 0..m {
            values.push(self.draw(rng)?);
        }
        Ok(Sample::new(values))
    }

    /// A single draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let bad = |e: &dyn std::fmt::Display| MddError::domain(format!("sampler: {e}"));
        Ok(match *self {
            Family::Normal { mean, var } => rand_distr::Normal::new(mean, var.sqrt())
                .map_err(|e| bad(&e))?
                .sample(rng),
            Family::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .map_err(|e| bad(&e))?
                .sample(rng),
            Family::Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta)
                .map_err(|e| bad(&e))?
                .sample(rng),
            Family::Exponential { rate } => {
                rand_distr::Exp::new(rate).map_err(|e| bad(&e))?.sample(rng)
            }
            Family::Poisson { rate } => rand_distr::Poisson::new(rate)
                .map_err(|e| bad(&e))?
                .sample(rng),
            Family::Binomial { trials, prob } => rand_distr::Binomial::new(trials, prob)
                .map_err(|e| bad(&e))?
                .sample(rng) as f64,
            Family::ImproperFlat => {
                return Err(MddError::unsupported("cannot sample an improper flat density"))
            }
        })
    }

    /// `-d²/dθ² log f(θ)`: the negative log-curvature of this family read as a
    /// density in its argument (a prior on θ).
    pub fn neg_log_curvature(&self, theta: f64) -> Result<f64> {
        match self {
            Family::Poisson { .. } | Family::Binomial { .. } => Err(MddError::unsupported(
                "curvature is defined for continuous densities only",
            )),
            _ => {
                if !self.in_interior(theta) {
                    return Err(MddError::domain(format!(
                        "{theta} is not an interior point of the support of {self:?}"
                    )));
                }
                Ok(-self.log_derivs(theta)?.d2)
            }
        }
    }

    fn in_interior(&self, x: f64) -> bool {
        match self {
            Family::Gamma { .. } | Family::Exponential { .. } => x.is_finite() && x > 0.0,
            Family::Beta { .. } => x > 0.0 && x < 1.0,
            _ => x.is_finite(),
        }
    }
}

impl LogDensity for Family {
    fn log_derivs(&self, x: f64) -> Result<LogDerivs> {
        if self.is_discrete() {
            return Err(MddError::unsupported("log-derivatives need a continuous family"));
        }
        if !self.in_interior(x) {
            return Err(MddError::domain(format!(
                "{x} is not an interior point of the support of {self:?}"
            )));
        }
        let value = self.log_pdf(x)?;
        let (d1, d2) = match *self {
            Family::Normal { mean, var } => (-(x - mean) / var, -1.0 / var),
            Family::Gamma { shape, rate } => {
                ((shape - 1.0) / x - rate, -(shape - 1.0) / (x * x))
            }
            Family::Beta { alpha, beta } => {
                let y = 1.0 - x;
                (
                    (alpha - 1.0) / x - (beta - 1.0) / y,
                    -(alpha - 1.0) / (x * x) - (beta - 1.0) / (y * y),
                )
            }
            Family::Exponential { rate } => (-rate, 0.0),
            Family::ImproperFlat => (0.0, 0.0),
            Family::Poisson { .. } | Family::Binomial { .. } => unreachable!(),
        };
        Ok(LogDerivs { value, d1, d2 })
    }
}

/// `a * ln(y)` with the convention `0 * ln(0) = 0`.
fn xlogy(a: f64, y: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * y.ln()
    }
}

/// An observed data vector `y_1, ..., y_m`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sample mean; `NaN` for an empty sample.
    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Unbiased (n - 1) sample variance; `NaN` below two observations.
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return f64::NAN;
        }
        let mean = self.mean();
        self.values.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    pub fn push(&mut self, y: f64) {
        self.values.push(y);
    }

    /// Checks that every value lies in the support of `f`.
    pub fn check_support(&self, f: &Family) -> Result<()> {
        self.values.iter().try_for_each(|&y| f.check_support(y))
    }
}

impl From<Vec<f64>> for Sample {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Closed-form maximum-likelihood fit of a likelihood family.
///
/// Supported: Normal (mean; variance known or estimated), Exponential rate,
/// Poisson rate and Binomial probability. Estimates on the boundary of the
/// parameter space (infinite or zero rates, probability 0 or 1) are reported as
/// [`MddError::DegenerateData`].
pub fn ml_estimate(tag: FamilyTag, data: &Sample, known: KnownParams) -> Result<Family> {
    if data.is_empty() {
        return Err(MddError::InsufficientData { needed: 1, got: 0 });
    }
    let ybar = data.mean();
    let degenerate = |what: &str| MddError::DegenerateData(format!("{what} (mean {ybar})"));
    match tag {
        FamilyTag::Normal => {
            let var = match known.var {
                Some(v) => v,
                None => {
                    let n = data.len() as f64;
                    let ss: f64 = data.values().iter().map(|y| (y - ybar).powi(2)).sum();
                    if ss == 0.0 {
                        return Err(degenerate("zero spread, variance estimate is 0"));
                    }
                    ss / n
                }
            };
            Family::normal(ybar, var)
        }
        FamilyTag::Exponential => {
            if ybar <= 0.0 {
                return Err(degenerate("exponential rate estimate is infinite"));
            }
            Family::exponential(1.0 / ybar)
        }
        FamilyTag::Poisson => {
            if ybar <= 0.0 {
                return Err(degenerate("poisson rate estimate is 0"));
            }
            Family::poisson(ybar)
        }
        FamilyTag::Binomial => {
            let n = known.trials.unwrap_or(1);
            let p = ybar / n as f64;
            if p <= 0.0 || p >= 1.0 {
                return Err(degenerate("binomial probability estimate is on the boundary"));
            }
            Family::binomial(n, p)
        }
        FamilyTag::Gamma | FamilyTag::Beta | FamilyTag::ImproperFlat => Err(
            MddError::unsupported(format!("no closed-form ML estimate for {tag:?}")),
        ),
    }
}
