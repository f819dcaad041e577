//! Curvature-based effective sample size.
//!
//! The ESS of a prior is the sample size `m` at which the expected curvature
//! of the baseline posterior, `D_q(m) = a + b·m`, matches the prior curvature
//! `D_prior` at the plug-in point. `δ(m) = |D_prior − D_q(m)|` is evaluated on
//! the integers and the sign change of `D_prior − D_q(m)` is interpolated
//! linearly.

use serde::{Deserialize, Serialize};

use crate::conjugate::{neg_log_curvature, ConjugateModel, Mixture, MddPrior, ModelKind};
use crate::dist::{Family, LogDensity, LogDerivs};
use crate::error::{MddError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssMethod {
    ClosedForm,
    GridInterpolated,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssResult {
    /// Interpolated ESS, floored at 1.
    pub ess: f64,
    /// Interpolated ESS before the floor; 0 when the prior is no more curved
    /// than the baseline posterior with no data.
    pub raw: f64,
    pub curve: Vec<CurvePoint>,
    pub method: EssMethod,
    pub plug_in: f64,
}

/// Smallest ESS reported.
pub const ESS_FLOOR: f64 = 1.0;

/// Locates the sign change of `g(m) = d_prior − (intercept + slope·m)` on
/// `m ∈ {0, …, m_max}` and interpolates it.
///
/// Returns the interpolated root (0 if `g(0) ≤ 0`) and the `δ` curve.
pub fn interpolate_root(
    d_prior: f64,
    intercept: f64,
    slope: f64,
    m_max: usize,
) -> Result<(f64, Vec<CurvePoint>)> {
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(MddError::domain(format!(
            "posterior curvature must increase with m, slope = {slope}"
        )));
    }
    if !d_prior.is_finite() || !intercept.is_finite() {
        return Err(MddError::domain("non-finite curvature"));
    }
    let g = |m: usize| d_prior - (intercept + slope * m as f64);
    let curve: Vec<CurvePoint> = (0..=m_max)
        .map(|m| CurvePoint {
            m,
            delta: g(m).abs(),
        })
        .collect();
    if g(0) <= 0.0 {
        return Ok((0.0, curve));
    }
    let hi = (1..=m_max)
        .find(|&m| g(m) <= 0.0)
        .ok_or(MddError::RangeExceeded { m_max })?;
    let (g0, g1) = (g(hi - 1), g(hi));
    Ok(((hi - 1) as f64 + g0 / (g0 - g1), curve))
}

fn grid_result(d_prior: f64, intercept: f64, slope: f64, m_max: usize, plug_in: f64) -> Result<EssResult> {
    let (raw, curve) = interpolate_root(d_prior, intercept, slope, m_max)?;
    Ok(EssResult {
        ess: raw.max(ESS_FLOOR),
        raw,
        curve,
        method: EssMethod::GridInterpolated,
        plug_in,
    })
}

/// `δ(m) = |D_prior(θ̄) − E[D_q(m)](θ̄)|` for a conjugate model.
pub fn delta<P: LogDensity + ?Sized>(
    m: usize,
    theta_bar: f64,
    prior: &P,
    model: &ConjugateModel,
) -> Result<f64> {
    let d = neg_log_curvature(prior, theta_bar)?;
    let (a, b) = model.posterior_curvature_line(theta_bar)?;
    Ok((d - a - b * m as f64).abs())
}

/// Grid ESS of `prior` under `model` at `theta_bar`.
pub fn ess_grid<P: LogDensity + ?Sized>(
    prior: &P,
    model: &ConjugateModel,
    theta_bar: f64,
    m_max: usize,
) -> Result<EssResult> {
    if m_max < 2 {
        return Err(MddError::Argument("m_max must be >= 2".into()));
    }
    let d = neg_log_curvature(prior, theta_bar)?;
    let (a, b) = model.posterior_curvature_line(theta_bar)?;
    grid_result(d, a, b, m_max, theta_bar)
}

/// Default grid size: ten times the closed-form ESS of the informative prior.
pub fn default_m_max(model: &ConjugateModel) -> usize {
    let bound = closed_form_ess(model).map(|r| r.raw).unwrap_or(10.0);
    ((10.0 * bound).ceil() as usize).max(10)
}

/// [`ess_grid`] with the default `m_max`, doubled until the root is bracketed.
pub fn ess_auto<P: LogDensity + ?Sized>(
    prior: &P,
    model: &ConjugateModel,
    theta_bar: f64,
) -> Result<EssResult> {
    let mut m_max = default_m_max(model);
    loop {
        match ess_grid(prior, model, theta_bar, m_max) {
            Err(MddError::RangeExceeded { .. }) if m_max < 1 << 24 => m_max *= 2,
            other => return other,
        }
    }
}

/// ESS of an MDD prior, at the informative prior mean.
pub fn ess_mdd(prior: &MddPrior, m_max: usize) -> Result<EssResult> {
    ess_grid(&prior.mixture(), &prior.model, prior.model.plug_in(), m_max)
}

/// Exact ESS of the informative prior:
/// `σ²/τ²`, `β(1 − 1/c)`, `α(1 − 1/c)`, `(α + β)(1 − 1/c)/n`.
pub fn closed_form_ess(model: &ConjugateModel) -> Result<EssResult> {
    let shrink = 1.0 - 1.0 / model.c();
    let raw = match (model.kind(), model.informative()) {
        (ModelKind::NN { sigma2 }, Family::Normal { var, .. }) => sigma2 / var,
        (ModelKind::GP, Family::Gamma { rate, .. }) => rate * shrink,
        (ModelKind::GExp, Family::Gamma { shape, .. }) => shape * shrink,
        (ModelKind::BB { trials }, Family::Beta { alpha, beta }) => {
            (alpha + beta) * shrink / trials as f64
        }
        _ => unreachable!("validated in ConjugateModel::new"),
    };
    Ok(EssResult {
        ess: raw.max(ESS_FLOOR),
        raw,
        curve: Vec::new(),
        method: EssMethod::ClosedForm,
        plug_in: model.plug_in(),
    })
}

/// The improper Jeffreys prior `j(θ) = 1/θ` of the exponential rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JeffreysExponential;

impl LogDensity for JeffreysExponential {
    fn log_derivs(&self, x: f64) -> Result<LogDerivs> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(MddError::domain(format!("Jeffreys prior needs theta > 0, got {x}")));
        }
        Ok(LogDerivs {
            value: -x.ln(),
            d1: -1.0 / x,
            d2: 1.0 / (x * x),
        })
    }
}

/// Distances for the exponential model with a Gamma prior, the Jeffreys prior
/// and their mixtures, all against the Jeffreys posterior `Ga(m, Σy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JeffreysDeltas {
    pub m: usize,
    pub delta_pi: f64,
    pub delta_j: f64,
    /// `(ψ, δ_φ)` pairs.
    pub delta_phi: Vec<(f64, f64)>,
}

/// Curvature line of the Jeffreys posterior at `θ̄`: `D = (m − 1)/θ̄²`.
fn jeffreys_line(theta_bar: f64) -> (f64, f64) {
    let t2 = theta_bar * theta_bar;
    (-1.0 / t2, 1.0 / t2)
}

fn gamma_prior(prior: &Family) -> Result<f64> {
    match *prior {
        Family::Gamma { .. } => Ok(prior.mean()?),
        _ => Err(MddError::Argument("the exponential-model prior must be a Gamma".into())),
    }
}

/// `δ_π(m)`, `δ_j(m)` and `δ_φ(m)` for each `ψ` at `θ̄ = α/β`.
///
/// The mixture `ψ·j + (1 − ψ)·π` is left unnormalized since `j` is improper.
pub fn jeffreys_exp_delta(m: usize, prior: &Family, psis: &[f64]) -> Result<JeffreysDeltas> {
    if m == 0 {
        return Err(MddError::domain("the Jeffreys posterior is improper for m = 0"));
    }
    let theta_bar = gamma_prior(prior)?;
    let (a, b) = jeffreys_line(theta_bar);
    let dq = a + b * m as f64;
    let delta_phi = psis
        .iter()
        .map(|&psi| {
            let mix = Mixture::new(psi, JeffreysExponential, *prior)?;
            Ok((psi, (neg_log_curvature(&mix, theta_bar)? - dq).abs()))
        })
        .collect::<Result<_>>()?;
    Ok(JeffreysDeltas {
        m,
        delta_pi: (neg_log_curvature(prior, theta_bar)? - dq).abs(),
        delta_j: (neg_log_curvature(&JeffreysExponential, theta_bar)? - dq).abs(),
        delta_phi,
    })
}

/// Interpolated minimizer of `δ` for any prior on the exponential rate,
/// against the Jeffreys posterior.
pub fn jeffreys_exp_ess<P: LogDensity + ?Sized>(
    prior: &P,
    theta_bar: f64,
    m_max: usize,
) -> Result<EssResult> {
    let (a, b) = jeffreys_line(theta_bar);
    grid_result(neg_log_curvature(prior, theta_bar)?, a, b, m_max, theta_bar)
}
