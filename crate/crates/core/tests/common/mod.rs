//! Strategies and helpers shared by the integration tests.
#![allow(dead_code)]

use mdd_core::{ConjugateModel, Family, LogDensity};
use proptest::prelude::*;

pub fn normal() -> impl Strategy<Value = Family> {
    (-5.0..5.0f64, 0.1..5.0f64).prop_map(|(m, v)| Family::normal(m, v).unwrap())
}

pub fn gamma() -> impl Strategy<Value = Family> {
    (0.5..20.0f64, 0.2..5.0f64).prop_map(|(a, b)| Family::gamma(a, b).unwrap())
}

pub fn beta() -> impl Strategy<Value = Family> {
    (0.5..20.0f64, 0.5..20.0f64).prop_map(|(a, b)| Family::beta(a, b).unwrap())
}

pub fn exponential() -> impl Strategy<Value = Family> {
    (0.1..10.0f64).prop_map(|r| Family::exponential(r).unwrap())
}

pub fn poisson() -> impl Strategy<Value = Family> {
    (0.1..50.0f64).prop_map(|r| Family::poisson(r).unwrap())
}

pub fn binomial(trials: u64) -> impl Strategy<Value = Family> {
    (0.05..0.95f64).prop_map(move |p| Family::binomial(trials, p).unwrap())
}

/// Two members of the same family.
pub fn same_family_pair() -> impl Strategy<Value = (Family, Family)> {
    prop_oneof![
        (normal(), normal()),
        (gamma(), gamma()),
        (beta(), beta()),
        (exponential(), exponential()),
        (poisson(), poisson()),
        (binomial(20), binomial(20)),
    ]
}

/// Three members of the same family.
pub fn same_family_triple() -> impl Strategy<Value = (Family, Family, Family)> {
    prop_oneof![
        (normal(), normal(), normal()),
        (gamma(), gamma(), gamma()),
        (beta(), beta(), beta()),
        (exponential(), exponential(), exponential()),
        (poisson(), poisson(), poisson()),
        (binomial(20), binomial(20), binomial(20)),
    ]
}

/// Conjugate models with proper priors whose ESS is at least one observation.
pub fn model() -> impl Strategy<Value = ConjugateModel> {
    let c = 2.0..1e4f64;
    prop_oneof![
        (-10.0..10.0f64, 0.05..5.0f64, 0.5..20.0f64, c.clone())
            .prop_map(|(m, t, s, c)| ConjugateModel::normal_normal(m, t, s, c).unwrap()),
        (1.5..30.0f64, 0.2..10.0f64, c.clone())
            .prop_map(|(a, b, c)| ConjugateModel::gamma_poisson(a, b, c).unwrap()),
        (1.5..30.0f64, 0.2..10.0f64, c.clone())
            .prop_map(|(a, b, c)| ConjugateModel::gamma_exponential(a, b, c).unwrap()),
        (1.5..30.0f64, 1.5..30.0f64, 1..5u64, c)
            .prop_map(|(a, b, n, c)| ConjugateModel::beta_binomial(a, b, n, c).unwrap()),
    ]
}

/// Five-point central second difference of a log-density, negated.
pub fn fd_curvature<D: LogDensity + ?Sized>(d: &D, x: f64, h: f64) -> f64 {
    let l = |t: f64| d.log_derivs(t).unwrap().value;
    -(-l(x + 2.0 * h) + 16.0 * l(x + h) - 30.0 * l(x) + 16.0 * l(x - h) - l(x - 2.0 * h)) / (12.0 * h * h)
}

/// Integral of a density over its support, via a log or logit substitution
/// for the bounded supports so that edge singularities stay integrable.
pub fn total_mass<F: Fn(f64) -> f64>(pdf: F, support: Support, center: f64, spread: f64) -> f64 {
    use mdd_core::quad::{integrate, QuadControl};
    let ctl = QuadControl {
        abs_tol: 1e-12,
        ..QuadControl::default()
    };
    match support {
        Support::Real => integrate(&pdf, center - 40.0 * spread, center + 40.0 * spread, &[center], &ctl),
        Support::Positive { lo, hi } => {
            let g = |u: f64| {
                let x = u.exp();
                pdf(x) * x
            };
            integrate(&g, lo, hi, &[center.ln()], &ctl)
        }
        Support::Unit { lo, hi } => {
            let g = |t: f64| {
                let x = 1.0 / (1.0 + (-t).exp());
                pdf(x) * x * (1.0 - x)
            };
            integrate(&g, lo, hi, &[0.0], &ctl)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Support {
    Real,
    /// Bounds on `ln x`.
    Positive { lo: f64, hi: f64 },
    /// Bounds on `logit x`.
    Unit { lo: f64, hi: f64 },
}
