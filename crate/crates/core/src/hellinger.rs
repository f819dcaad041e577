//! Hellinger distances between densities, between a density and a sample, and
//! between i.i.d. product densities.
//!
//! All distances use the normalization `H(f, g) = sqrt(1/2 ∫ (√f - √g)²)`, so
//! `H ∈ [0, 1]` and `H² = 1 - BC` with `BC` the Bhattacharyya coefficient.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::dist::{Family, Sample};
use crate::error::{MddError, Result};
use crate::kde::GaussianKde;
use crate::quad::{integrate, QuadControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HellingerMethod {
    ClosedForm,
    Quadrature,
    SampleKde,
    /// Discrete family against the empirical frequencies of a sample.
    SampleEmpirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HellingerValue {
    pub value: f64,
    pub method: HellingerMethod,
}

impl HellingerValue {
    fn new(value: f64, method: HellingerMethod) -> Self {
        let value = if value.is_nan() { 1.0 } else { value.clamp(0.0, 1.0) };
        Self { value, method }
    }

    fn from_squared(h2: f64, method: HellingerMethod) -> Self {
        Self::new(h2.max(0.0).sqrt(), method)
    }
}

/// Log Bhattacharyya coefficient of two members of the same family.
pub fn log_bhattacharyya(f: &Family, g: &Family) -> Result<f64> {
    let lbc = match (*f, *g) {
        (Family::Normal { mean: m1, var: v1 }, Family::Normal { mean: m2, var: v2 }) => {
            let s = v1 + v2;
            0.5 * (2.0 * (v1 * v2).sqrt() / s).ln() - (m1 - m2).powi(2) / (4.0 * s)
        }
        (Family::Gamma { shape: a1, rate: b1 }, Family::Gamma { shape: a2, rate: b2 }) => {
            let a = 0.5 * (a1 + a2);
            // Paired terms are grouped so swapping the arguments is bit-exact.
            ln_gamma(a) - 0.5 * (ln_gamma(a1) + ln_gamma(a2))
                + 0.5 * (a1 * b1.ln() + a2 * b2.ln())
                - a * (0.5 * (b1 + b2)).ln()
        }
        (Family::Beta { alpha: a1, beta: b1 }, Family::Beta { alpha: a2, beta: b2 }) => {
            ln_beta(0.5 * (a1 + a2), 0.5 * (b1 + b2)) - 0.5 * (ln_beta(a1, b1) + ln_beta(a2, b2))
        }
        (Family::Exponential { rate: l1 }, Family::Exponential { rate: l2 }) => {
            (2.0 * (l1 * l2).sqrt() / (l1 + l2)).ln()
        }
        (Family::Poisson { rate: l1 }, Family::Poisson { rate: l2 }) => {
            -0.5 * (l1.sqrt() - l2.sqrt()).powi(2)
        }
        (
            Family::Binomial { trials: n1, prob: p1 },
            Family::Binomial { trials: n2, prob: p2 },
        ) if n1 == n2 => n1 as f64 * ((p1 * p2).sqrt() + ((1.0 - p1) * (1.0 - p2)).sqrt()).ln(),
        _ => {
            return Err(MddError::unsupported(format!(
                "no closed-form Bhattacharyya coefficient for {f:?} vs {g:?}; use hellinger_num"
            )))
        }
    };
    Ok(lbc.min(0.0))
}

/// Closed-form Hellinger distance between two members of the same family.
pub fn hellinger_cf(f: &Family, g: &Family) -> Result<HellingerValue> {
    let lbc = log_bhattacharyya(f, g)?;
    Ok(HellingerValue::from_squared(-lbc.exp_m1(), HellingerMethod::ClosedForm))
}

/// How a support is mapped onto the real line for integration.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Support {
    Real,
    Positive,
    Unit,
}

impl Support {
    fn of(f: &Family) -> Option<Support> {
        match f {
            Family::Normal { .. } => Some(Support::Real),
            Family::Gamma { .. } | Family::Exponential { .. } => Some(Support::Positive),
            Family::Beta { .. } => Some(Support::Unit),
            _ => None,
        }
    }

    /// Point in the original scale and the log-Jacobian at `t`.
    fn map(self, t: f64) -> (f64, f64) {
        match self {
            Support::Real => (t, 0.0),
            Support::Positive => (t.exp(), t),
            Support::Unit => {
                let lx = -softplus(-t);
                let l1x = -softplus(t);
                (lx.exp(), lx + l1x)
            }
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            Support::Real => x,
            Support::Positive => x.ln(),
            Support::Unit => (x / (1.0 - x)).ln(),
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Log density of `f` transported to the integration variable `t`.
fn transformed_log_pdf(f: &Family, support: Support, t: f64) -> f64 {
    let (x, log_jac) = support.map(t);
    match f.log_pdf(x) {
        Ok(lp) if lp.is_finite() => lp + log_jac,
        _ => f64::NEG_INFINITY,
    }
}

/// A point near the bulk of `f` in the integration variable, plus a scale.
fn center_and_scale(f: &Family, support: Support) -> (f64, f64) {
    let mean = f.mean().unwrap_or(0.0);
    match *f {
        Family::Normal { var, .. } => (mean, var.sqrt()),
        Family::Gamma { shape, .. } => (support.inverse(mean), 1.0 / shape.sqrt()),
        Family::Exponential { .. } => (support.inverse(mean), 1.0),
        Family::Beta { alpha, beta } => (support.inverse(mean), (1.0 / alpha + 1.0 / beta).sqrt()),
        _ => (0.0, 1.0),
    }
}

/// Walks outward from `start` until the log density drops below `log_cut`.
fn tail_bound<F: Fn(f64) -> f64>(log_h: &F, start: f64, dir: f64, scale: f64, log_cut: f64) -> f64 {
    let mut t = start;
    let mut step = scale.max(1e-8);
    for _ in 0..400 {
        if log_h(t) < log_cut {
            return t;
        }
        t += dir * step;
        step *= 1.3;
        if !t.is_finite() {
            break;
        }
    }
    t
}

/// Hellinger distance by numerical integration (continuous) or summation (discrete).
pub fn hellinger_num(f: &Family, g: &Family, ctl: &QuadControl) -> Result<HellingerValue> {
    if !f.is_proper() || !g.is_proper() {
        return Err(MddError::unsupported("Hellinger distance needs proper densities"));
    }
    match (f.is_discrete(), g.is_discrete()) {
        (true, true) => Ok(hellinger_sum(f, g)),
        (false, false) => hellinger_continuous(f, g, ctl),
        _ => Err(MddError::unsupported(
            "Hellinger distance between a discrete and a continuous family",
        )),
    }
}

fn hellinger_continuous(f: &Family, g: &Family, ctl: &QuadControl) -> Result<HellingerValue> {
    let (sf, sg) = (Support::of(f), Support::of(g));
    let support = match (sf, sg) {
        (Some(a), Some(b)) if a == b => a,
        _ => {
            return Err(MddError::unsupported(format!(
                "{f:?} and {g:?} do not share a support"
            )))
        }
    };
    let lf = |t: f64| transformed_log_pdf(f, support, t);
    let lg = |t: f64| transformed_log_pdf(g, support, t);
    let log_cut = ctl.truncation.ln();
    let (cf, scf) = center_and_scale(f, support);
    let (cg, scg) = center_and_scale(g, support);
    let (flo, fhi) = (
        tail_bound(&lf, cf, -1.0, scf, log_cut),
        tail_bound(&lf, cf, 1.0, scf, log_cut),
    );
    let (glo, ghi) = (
        tail_bound(&lg, cg, -1.0, scg, log_cut),
        tail_bound(&lg, cg, 1.0, scg, log_cut),
    );
    // Effective supports do not overlap.
    if fhi <= glo || ghi <= flo {
        return Ok(HellingerValue::new(1.0, HellingerMethod::Quadrature));
    }
    let integrand = |t: f64| {
        let a = (0.5 * lf(t)).exp();
        let b = (0.5 * lg(t)).exp();
        (a - b).powi(2)
    };
    let extra = [cf, cg, 0.5 * (cf + cg)];
    let integral = integrate(&integrand, flo.min(glo), fhi.max(ghi), &extra, ctl);
    Ok(HellingerValue::from_squared(0.5 * integral, HellingerMethod::Quadrature))
}

fn discrete_range(f: &Family, g: &Family) -> (u64, u64) {
    let bounds = |h: &Family| -> (f64, f64) {
        match *h {
            Family::Binomial { trials, .. } => (0.0, trials as f64),
            Family::Poisson { rate } => {
                let w = 40.0 * rate.sqrt() + 40.0;
                ((rate - w).max(0.0), rate + w)
            }
            _ => (0.0, 0.0),
        }
    };
    let (a, b) = bounds(f);
    let (c, d) = bounds(g);
    (a.min(c).floor() as u64, b.max(d).ceil() as u64)
}

fn hellinger_sum(f: &Family, g: &Family) -> HellingerValue {
    let (lo, hi) = discrete_range(f, g);
    let total: f64 = (lo..=hi)
        .map(|k| {
            let y = k as f64;
            (f.pdf(y).sqrt() - g.pdf(y).sqrt()).powi(2)
        })
        .sum();
    HellingerValue::from_squared(0.5 * total, HellingerMethod::Quadrature)
}

/// Range in the original scale covering the bulk of a continuous family.
fn effective_range(f: &Family, truncation: f64) -> (f64, f64) {
    let support = Support::of(f).unwrap_or(Support::Real);
    let lf = |t: f64| transformed_log_pdf(f, support, t);
    let (c, s) = center_and_scale(f, support);
    let cut = truncation.ln();
    let lo = support.map(tail_bound(&lf, c, -1.0, s, cut)).0;
    let hi = support.map(tail_bound(&lf, c, 1.0, s, cut)).0;
    (lo, hi)
}

/// Hellinger distance between a density and a numerical sample.
///
/// Continuous families are compared with a Gaussian kernel density estimate of
/// the sample (Silverman bandwidth unless `bandwidth` is given). Discrete
/// families are compared with the empirical frequencies.
pub fn hellinger_sample(
    f: &Family,
    data: &Sample,
    bandwidth: Option<f64>,
) -> Result<HellingerValue> {
    if !f.is_proper() {
        return Err(MddError::unsupported("Hellinger distance needs a proper density"));
    }
    if data.is_empty() {
        return Err(MddError::InsufficientData { needed: 1, got: 0 });
    }
    if f.is_discrete() {
        return Ok(hellinger_empirical(f, data));
    }
    let kde = GaussianKde::new(data.values(), bandwidth)?;
    let ctl = QuadControl {
        abs_tol: 1e-9,
        ..QuadControl::default()
    };
    let (flo, fhi) = effective_range(f, ctl.truncation);
    let (klo, khi) = kde.range();
    let lo = flo.min(klo);
    let hi = fhi.max(khi);
    let integrand = |x: f64| {
        let a = f.pdf(x);
        let a = if a.is_finite() { a.sqrt() } else { 0.0 };
        (a - kde.density(x).sqrt()).powi(2)
    };
    let mut extra = vec![0.0, 1.0, flo, fhi, klo, khi];
    if let Ok(m) = f.mean() {
        extra.push(m);
    }
    let integral = integrate(&integrand, lo, hi, &extra, &ctl);
    Ok(HellingerValue::from_squared(0.5 * integral, HellingerMethod::SampleKde))
}

fn hellinger_empirical(f: &Family, data: &Sample) -> HellingerValue {
    let mut counts = std::collections::BTreeMap::<u64, usize>::new();
    for &y in data.values() {
        if y >= 0.0 && y.fract() == 0.0 {
            *counts.entry(y as u64).or_default() += 1;
        }
    }
    let n = data.len() as f64;
    // BC = Σ sqrt(p_k q_k); values outside the support contribute nothing.
    let bc: f64 = counts
        .iter()
        .map(|(&k, &c)| (f.pdf(k as f64) * c as f64 / n).sqrt())
        .sum();
    HellingerValue::from_squared(1.0 - bc, HellingerMethod::SampleEmpirical)
}

/// `m` i.i.d. coordinates drawn from `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub base: Family,
    pub m: usize,
}

impl JointSpec {
    pub fn new(base: Family, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(MddError::Argument("joint dimension m must be >= 1".into()));
        }
        Ok(Self { base, m })
    }
}

/// Hellinger distance between two product densities of `m` i.i.d. coordinates:
/// `sqrt(1 - BC^m)`.
pub fn hellinger_joint(a: &JointSpec, b: &JointSpec) -> Result<HellingerValue> {
    if a.m != b.m {
        return Err(MddError::Argument(format!(
            "joint dimensions differ: {} vs {}",
            a.m, b.m
        )));
    }
    if a.base.tag() != b.base.tag() {
        return Err(MddError::Argument("joint densities must share a family".into()));
    }
    let lbc = log_bhattacharyya(&a.base, &b.base)?;
    Ok(HellingerValue::from_squared(
        -(a.m as f64 * lbc).exp_m1(),
        HellingerMethod::ClosedForm,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n(m: f64, v: f64) -> Family {
        Family::normal(m, v).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(hellinger_cf(&n(0.0, 1.0), &n(0.0, 1.0)).unwrap().value, 0.0);
        let h = hellinger_cf(&n(0.0, 1.0), &n(2.0, 1.0)).unwrap().value;
        assert!((h - (1.0 - (-0.5f64).exp()).sqrt()).abs() < 1e-14);
        assert!((h - 0.627_271_345).abs() < 1e-9);
        let e = hellinger_cf(
            &Family::exponential(1.0).unwrap(),
            &Family::exponential(4.0).unwrap(),
        )
        .unwrap()
        .value;
        assert!((e - 0.2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_rejects_mismatched_families() {
        assert!(hellinger_cf(&n(0.0, 1.0), &Family::exponential(1.0).unwrap()).is_err());
        assert!(hellinger_cf(
            &Family::binomial(3, 0.5).unwrap(),
            &Family::binomial(4, 0.5).unwrap()
        )
        .is_err());
    }

    #[test]
    fn quadrature_matches_closed_form_oracle() {
        let ctl = QuadControl::default();
        let h = hellinger_num(&n(0.0, 1.0), &n(2.0, 1.0), &ctl).unwrap().value;
        let oracle = (1.0 - (-0.5f64).exp()).sqrt();
        assert!((h - oracle).abs() < 1e-6);

        let p2 = Family::poisson(2.0).unwrap();
        let p5 = Family::poisson(5.0).unwrap();
        let h = hellinger_num(&p2, &p5, &ctl).unwrap().value;
        let oracle = (1.0 - (-(2f64.sqrt() - 5f64.sqrt()).powi(2) / 2.0).exp()).sqrt();
        assert!((h - oracle).abs() < 1e-8);
    }

    #[test]
    fn quadrature_self_distance_is_zero() {
        let ctl = QuadControl::default();
        for f in [
            n(3.0, 0.2),
            Family::gamma(0.4, 2.0).unwrap(),
            Family::beta(0.7, 3.0).unwrap(),
            Family::binomial(12, 0.3).unwrap(),
        ] {
            assert!(hellinger_num(&f, &f, &ctl).unwrap().value < 1e-10);
        }
    }

    #[test]
    fn disjoint_supports_give_one() {
        let h = hellinger_num(&n(0.0, 1e-4), &n(1e4, 1e-4), &QuadControl::default()).unwrap();
        assert_eq!(h.value, 1.0);
    }

    #[test]
    fn sample_distance_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = n(0.0, 1.0);
        let same = f.sample(100_000, &mut rng).unwrap();
        assert!(hellinger_sample(&f, &same, None).unwrap().value < 0.05);
        let far = n(10.0, 1.0).sample(100_000, &mut rng).unwrap();
        assert!(hellinger_sample(&f, &far, None).unwrap().value > 0.99);
        assert!(matches!(
            hellinger_sample(&f, &vec![0.3].into(), None),
            Err(MddError::InsufficientData { .. })
        ));
    }

    #[test]
    fn empirical_distance_for_discrete_families() {
        let f = Family::binomial(1, 0.5).unwrap();
        let h = hellinger_sample(&f, &vec![0.0, 1.0, 0.0, 1.0].into(), None).unwrap();
        assert_eq!(h.method, HellingerMethod::SampleEmpirical);
        assert!(h.value < 1e-7);
    }

    #[test]
    fn joint_examples() {
        let a = JointSpec::new(n(0.0, 1.0), 1).unwrap();
        let b = JointSpec::new(n(1e-3, 1.0), 1).unwrap();
        let h = hellinger_joint(&a, &b).unwrap().value;
        let ratio = h * h / 1e-6;
        assert!((ratio - 0.125).abs() < 0.125 * 0.01);

        let z = JointSpec::new(n(2.0, 3.0), 5).unwrap();
        assert_eq!(hellinger_joint(&z, &z).unwrap().value, 0.0);

        let h1 = hellinger_joint(
            &JointSpec::new(n(0.0, 1.0), 7).unwrap(),
            &JointSpec::new(n(1.0, 1.0), 7).unwrap(),
        )
        .unwrap();
        let h2 = hellinger_joint(
            &JointSpec::new(n(100.0, 1.0), 7).unwrap(),
            &JointSpec::new(n(101.0, 1.0), 7).unwrap(),
        )
        .unwrap();
        assert!((h1.value - h2.value).abs() < 1e-12);

        assert!(hellinger_joint(&JointSpec::new(n(0.0, 1.0), 2).unwrap(), &a).is_err());
    }

    #[test]
    fn value_serializes_with_method() {
        let v = HellingerValue::new(0.25, HellingerMethod::SampleKde);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"value":0.25,"method":"sample_kde"}"#
        );
    }
}
