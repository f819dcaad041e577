//! The four univariate conjugate models, their baseline priors, posterior
//! updates and the two-component MDD mixture.

use serde::{Deserialize, Serialize};

use crate::dist::{ml_estimate, Family, FamilyTag, KnownParams, LogDensity, LogDerivs, Sample};
use crate::error::{MddError, Result};
use crate::hellinger::hellinger_cf;

/// Likelihood structure of a conjugate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Normal likelihood with known variance, Normal prior on the mean.
    NN { sigma2: f64 },
    /// Poisson likelihood, Gamma prior on the rate.
    GP,
    /// Exponential likelihood, Gamma prior on the rate.
    GExp,
    /// Binomial likelihood with `trials` per observation, Beta prior.
    BB { trials: u64 },
}

/// Which of the two prior components to update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Baseline,
    Informative,
}

/// A conjugate model: likelihood, informative prior and variance inflation `c`.
///
/// The baseline prior is derived from the informative one so that both share
/// the same mean while the baseline has the larger variance:
/// `N(μ, cτ²)`, `Ga(α/c, β/c)` or `Be(α/c, β/c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct ConjugateModel {
    kind: ModelKind,
    informative: Family,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
enum ModelTag {
    NN,
    GP,
    #[serde(rename = "GExp")]
    GExp,
    BB,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    model: ModelTag,
    informative: Family,
    c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
}

impl TryFrom<ModelRepr> for ConjugateModel {
    type Error = MddError;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let kind = match r.model {
            ModelTag::NN => ModelKind::NN {
                sigma2: r
                    .sigma2
                    .ok_or_else(|| MddError::Config("NN model needs \"sigma2\"".into()))?,
            },
            ModelTag::GP => ModelKind::GP,
            ModelTag::GExp => ModelKind::GExp,
            ModelTag::BB => ModelKind::BB {
                trials: r.trials.unwrap_or(1),
            },
        };
        ConjugateModel::new(kind, r.informative, r.c)
    }
}

impl From<ConjugateModel> for ModelRepr {
    fn from(m: ConjugateModel) -> Self {
        let (model, sigma2, trials) = match m.kind {
            ModelKind::NN { sigma2 } => (ModelTag::NN, Some(sigma2), None),
            ModelKind::GP => (ModelTag::GP, None, None),
            ModelKind::GExp => (ModelTag::GExp, None, None),
            ModelKind::BB { trials } => (ModelTag::BB, None, Some(trials)),
        };
        ModelRepr {
            model,
            informative: m.informative,
            c: m.c,
            sigma2,
            trials,
        }
    }
}

impl ConjugateModel {
    pub fn new(kind: ModelKind, informative: Family, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 1.0) {
            return Err(MddError::domain(format!("inflation c must be finite and >= 1, got {c}")));
        }
        let ok = match (kind, informative) {
            (ModelKind::NN { sigma2 }, Family::Normal { .. }) => {
                if !(sigma2.is_finite() && sigma2 > 0.0) {
                    return Err(MddError::domain(format!("sigma2 must be > 0, got {sigma2}")));
                }
                true
            }
            (ModelKind::GP | ModelKind::GExp, Family::Gamma { .. }) => true,
            (ModelKind::BB { trials }, Family::Beta { .. }) => {
                if trials == 0 {
                    return Err(MddError::domain("binomial trials must be >= 1"));
                }
                true
            }
            _ => false,
        };
        if !ok {
            return Err(MddError::Argument(format!(
                "{informative:?} is not the conjugate prior of {kind:?}"
            )));
        }
        Ok(Self {
            kind,
            informative,
            c,
        })
    }

    pub fn normal_normal(mean: f64, tau2: f64, sigma2: f64, c: f64) -> Result<Self> {
        Self::new(ModelKind::NN { sigma2 }, Family::normal(mean, tau2)?, c)
    }

    pub fn gamma_poisson(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        Self::new(ModelKind::GP, Family::gamma(alpha, beta)?, c)
    }

    pub fn gamma_exponential(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        Self::new(ModelKind::GExp, Family::gamma(alpha, beta)?, c)
    }

    pub fn beta_binomial(alpha: f64, beta: f64, trials: u64, c: f64) -> Result<Self> {
        Self::new(ModelKind::BB { trials }, Family::beta(alpha, beta)?, c)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn informative(&self) -> Family {
        self.informative
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// The variance-inflated baseline prior.
    pub fn baseline(&self) -> Family {
        let c = self.c;
        match self.informative {
            Family::Normal { mean, var } => Family::Normal { mean, var: c * var },
            Family::Gamma { shape, rate } => Family::Gamma {
                shape: shape / c,
                rate: rate / c,
            },
            Family::Beta { alpha, beta } => Family::Beta {
                alpha: alpha / c,
                beta: beta / c,
            },
            other => other,
        }
    }

    pub fn prior(&self, which: Component) -> Family {
        match which {
            Component::Baseline => self.baseline(),
            Component::Informative => self.informative,
        }
    }

    /// Tag of the likelihood family.
    pub fn likelihood_tag(&self) -> FamilyTag {
        match self.kind {
            ModelKind::NN { .. } => FamilyTag::Normal,
            ModelKind::GP => FamilyTag::Poisson,
            ModelKind::GExp => FamilyTag::Exponential,
            ModelKind::BB { .. } => FamilyTag::Binomial,
        }
    }

    /// Sampling density of one observation given the parameter.
    pub fn likelihood(&self, theta: f64) -> Result<Family> {
        match self.kind {
            ModelKind::NN { sigma2 } => Family::normal(theta, sigma2),
            ModelKind::GP => Family::poisson(theta),
            ModelKind::GExp => Family::exponential(theta),
            ModelKind::BB { trials } => Family::binomial(trials, theta),
        }
    }

    /// Maximum-likelihood estimate of the parameter from `data`.
    pub fn ml_theta(&self, data: &Sample) -> Result<f64> {
        let known = match self.kind {
            ModelKind::NN { sigma2 } => KnownParams {
                var: Some(sigma2),
                trials: None,
            },
            ModelKind::BB { trials } => KnownParams {
                var: None,
                trials: Some(trials),
            },
            _ => KnownParams::default(),
        };
        Ok(theta_of(&ml_estimate(self.likelihood_tag(), data, known)?))
    }

    /// Checks that every observation lies in the likelihood support.
    pub fn check_data(&self, data: &Sample) -> Result<()> {
        let probe = match self.kind {
            ModelKind::NN { sigma2 } => Family::normal(0.0, sigma2)?,
            ModelKind::GP => Family::poisson(1.0)?,
            ModelKind::GExp => Family::exponential(1.0)?,
            ModelKind::BB { trials } => Family::binomial(trials, 0.5)?,
        };
        data.check_support(&probe)
    }

    /// Conjugate update of one prior component.
    pub fn posterior(&self, which: Component, data: &Sample) -> Result<Family> {
        self.check_data(data)?;
        update(self.kind, self.prior(which), data)
    }

    /// Prior mean of the parameter, the plug-in point of the curvature distances.
    pub fn plug_in(&self) -> f64 {
        self.informative
            .mean()
            .expect("conjugate priors are proper and have a mean")
    }

    /// Intercept and slope of the expected baseline-posterior curvature
    /// `E[D_q(m)] = a + b·m` at `theta`, where the data sum is replaced by its
    /// expectation `m·E[y | theta]`.
    pub fn posterior_curvature_line(&self, theta: f64) -> Result<(f64, f64)> {
        let c = self.c;
        let t2 = theta * theta;
        match (self.kind, self.informative) {
            (ModelKind::NN { sigma2 }, _) => Ok((0.0, 1.0 / sigma2)),
            (ModelKind::GP, Family::Gamma { shape, .. }) => {
                positive_theta(theta)?;
                Ok(((shape / c - 1.0) / t2, theta / t2))
            }
            (ModelKind::GExp, Family::Gamma { shape, .. }) => {
                positive_theta(theta)?;
                Ok(((shape / c - 1.0) / t2, 1.0 / t2))
            }
            (ModelKind::BB { trials }, Family::Beta { alpha, beta }) => {
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(MddError::domain(format!("theta must be in (0, 1), got {theta}")));
                }
                let n = trials as f64;
                let u2 = (1.0 - theta).powi(2);
                Ok((
                    (alpha / c - 1.0) / t2 + (beta / c - 1.0) / u2,
                    n * theta / t2 + n * (1.0 - theta) / u2,
                ))
            }
            _ => unreachable!("validated in ConjugateModel::new"),
        }
    }
}

fn positive_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(MddError::domain(format!("theta must be > 0, got {theta}")))
    }
}

/// The parameter indexing a likelihood family.
pub fn theta_of(f: &Family) -> f64 {
    match *f {
        Family::Normal { mean, .. } => mean,
        Family::Poisson { rate } | Family::Exponential { rate } => rate,
        Family::Binomial { prob, .. } => prob,
        Family::Gamma { shape, rate } => shape / rate,
        Family::Beta { alpha, beta } => alpha / (alpha + beta),
        Family::ImproperFlat => f64::NAN,
    }
}

fn update(kind: ModelKind, prior: Family, data: &Sample) -> Result<Family> {
    let m = data.len() as f64;
    let sum = data.sum();
    match (kind, prior) {
        (ModelKind::NN { sigma2 }, Family::Normal { mean, var }) => {
            let precision = 1.0 / var + m / sigma2;
            Family::normal((mean / var + sum / sigma2) / precision, 1.0 / precision)
        }
        (ModelKind::GP, Family::Gamma { shape, rate }) => Family::gamma(shape + sum, rate + m),
        (ModelKind::GExp, Family::Gamma { shape, rate }) => Family::gamma(shape + m, rate + sum),
        (ModelKind::BB { trials }, Family::Beta { alpha, beta }) => {
            Family::beta(alpha + sum, beta + m * trials as f64 - sum)
        }
        _ => unreachable!("validated in ConjugateModel::new"),
    }
}

/// Two-component mixture `ψ·baseline + (1 − ψ)·informative`.
///
/// Components only need a log-density, so improper baselines (flat, Jeffreys)
/// are allowed; the mixture is then unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mixture<B = Family, I = Family> {
    pub psi: f64,
    pub baseline: B,
    pub informative: I,
}

impl<B, I> Mixture<B, I> {
    pub fn new(psi: f64, baseline: B, informative: I) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi) {
            return Err(MddError::domain(format!("mixture weight must be in [0, 1], got {psi}")));
        }
        Ok(Self {
            psi,
            baseline,
            informative,
        })
    }
}

impl Mixture<Family, Family> {
    pub fn pdf(&self, x: f64) -> f64 {
        let mut p = 0.0;
        if self.psi > 0.0 {
            p += self.psi * self.baseline.pdf(x);
        }
        if self.psi < 1.0 {
            p += (1.0 - self.psi) * self.informative.pdf(x);
        }
        p
    }

    pub fn mean(&self) -> Result<f64> {
        let mut m = 0.0;
        if self.psi > 0.0 {
            m += self.psi * self.baseline.mean()?;
        }
        if self.psi < 1.0 {
            m += (1.0 - self.psi) * self.informative.mean()?;
        }
        Ok(m)
    }
}

impl<B: LogDensity, I: LogDensity> LogDensity for Mixture<B, I> {
    /// Log-derivatives of the mixture through the component responsibilities
    /// `r_k`: `(log φ)'' = Σ r_k l_k'' + Var_r(l_k')`.
    fn log_derivs(&self, x: f64) -> Result<LogDerivs> {
        if self.psi == 0.0 {
            return self.informative.log_derivs(x);
        }
        if self.psi == 1.0 {
            return self.baseline.log_derivs(x);
        }
        let a = self.baseline.log_derivs(x)?;
        let b = self.informative.log_derivs(x)?;
        let la = self.psi.ln() + a.value;
        let lb = (-self.psi).ln_1p() + b.value;
        let top = la.max(lb);
        if top == f64::NEG_INFINITY {
            return Err(MddError::domain(format!("mixture density vanishes at {x}")));
        }
        let (ea, eb) = ((la - top).exp(), (lb - top).exp());
        let (ra, rb) = (ea / (ea + eb), eb / (ea + eb));
        let spread = a.d1 - b.d1;
        Ok(LogDerivs {
            value: top + (ea + eb).ln(),
            d1: ra * a.d1 + rb * b.d1,
            d2: ra * a.d2 + rb * b.d2 + ra * rb * spread * spread,
        })
    }
}

/// `-d²/dθ² log` of any log-density.
pub fn neg_log_curvature<D: LogDensity + ?Sized>(d: &D, theta: f64) -> Result<f64> {
    Ok(-d.log_derivs(theta)?.d2)
}

/// An MDD prior over a conjugate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MddPrior {
    pub psi: f64,
    pub model: ConjugateModel,
}

impl MddPrior {
    pub fn new(psi: f64, model: ConjugateModel) -> Result<Self> {
        Mixture::new(psi, (), ())?;
        Ok(Self { psi, model })
    }

    pub fn mixture(&self) -> Mixture {
        Mixture {
            psi: self.psi,
            baseline: self.model.baseline(),
            informative: self.model.informative(),
        }
    }
}

/// Negative log-curvature of the MDD prior at `theta`.
pub fn mdd_log_curvature(prior: &MddPrior, theta: f64) -> Result<f64> {
    neg_log_curvature(&prior.mixture(), theta)
}

/// Component-wise conjugate update keeping the prior weight unchanged.
pub fn mdd_posterior(prior: &MddPrior, data: &Sample) -> Result<Mixture> {
    Ok(Mixture {
        psi: prior.psi,
        baseline: prior.model.posterior(Component::Baseline, data)?,
        informative: prior.model.posterior(Component::Informative, data)?,
    })
}

/// Weight of the natural MDD prior: Hellinger distance between the informative
/// prior and its posterior.
pub fn natural_weight(model: &ConjugateModel, data: &Sample) -> Result<f64> {
    let post = model.posterior(Component::Informative, data)?;
    Ok(hellinger_cf(&model.informative(), &post)?.value)
}
