//! Conjugate updates, baseline construction and mixture priors.

mod common;

use common::{model, total_mass, Support};
use mdd_core::conjugate::neg_log_curvature;
use mdd_core::{mdd_log_curvature, mdd_posterior, Component, ConjugateModel, Family, MddPrior, ModelKind, Sample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Integer-valued data keeps the data sums exact, so the count-model updates
/// can be compared without tolerance.
fn data_for(model: &ConjugateModel, seed: u64, m: usize) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = model.informative().draw(&mut rng).unwrap();
    let lik = match model.kind() {
        ModelKind::NN { sigma2 } => Family::normal(theta, sigma2).unwrap(),
        ModelKind::GP => Family::poisson(theta).unwrap(),
        ModelKind::GExp => Family::exponential(theta).unwrap(),
        ModelKind::BB { trials } => Family::binomial(trials, theta).unwrap(),
    };
    lik.sample(m, &mut rng).unwrap()
}

fn sum_in_order(data: &Sample) -> f64 {
    data.values().iter().sum()
}

proptest! {
    #[test]
    fn posterior_updates_follow_the_conjugate_formulas(model in model(), seed in any::<u64>(), m in 1usize..40) {
        let data = data_for(&model, seed, m);
        let (mf, s) = (m as f64, sum_in_order(&data));
        for which in [Component::Informative, Component::Baseline] {
            let prior = model.prior(which);
            let post = model.posterior(which, &data).unwrap();
            match (model.kind(), prior, post) {
                (ModelKind::NN { sigma2 }, Family::Normal { mean, var }, Family::Normal { mean: pm, var: pv }) => {
                    let want_var = sigma2 * var / (sigma2 + mf * var);
                    let want_mean = (sigma2 * mean + var * s) / (sigma2 + mf * var);
                    prop_assert!((pv - want_var).abs() <= 1e-12 * want_var);
                    prop_assert!((pm - want_mean).abs() <= 1e-12 * (1.0 + want_mean.abs()));
                }
                (ModelKind::GP, Family::Gamma { shape, rate }, post) => {
                    prop_assert_eq!(post, Family::gamma(shape + s, rate + mf).unwrap());
                }
                (ModelKind::GExp, Family::Gamma { shape, rate }, Family::Gamma { shape: ps, rate: pr }) => {
                    prop_assert_eq!(ps, shape + mf);
                    prop_assert!((pr - (rate + s)).abs() <= 1e-12 * (rate + s));
                }
                (ModelKind::BB { trials }, Family::Beta { alpha, beta }, post) => {
                    let n = trials as f64;
                    prop_assert_eq!(post, Family::beta(alpha + s, beta + mf * n - s).unwrap());
                }
                other => prop_assert!(false, "posterior left the family: {:?}", other),
            }
        }
    }

    #[test]
    fn baseline_keeps_the_prior_mean(model in model()) {
        let (a, b) = (model.informative().mean().unwrap(), model.baseline().mean().unwrap());
        prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(1e-300), "{} vs {}", a, b);
        prop_assert!(model.baseline().variance().unwrap() >= model.informative().variance().unwrap());
    }

    #[test]
    fn mdd_posterior_keeps_the_weight(model in model(), psi in 0.0..=1.0f64, seed in any::<u64>(), m in 1usize..20) {
        let data = data_for(&model, seed, m);
        let post = mdd_posterior(&MddPrior::new(psi, model).unwrap(), &data).unwrap();
        prop_assert_eq!(post.psi, psi);
        prop_assert_eq!(post.baseline, model.posterior(Component::Baseline, &data).unwrap());
        prop_assert_eq!(post.informative, model.posterior(Component::Informative, &data).unwrap());
    }
}

/// With `c` moderate relative to the hyperparameters all mass of the diffuse
/// component lies where doubles can resolve it; for very large `c` a shape of
/// `α/c` puts visible mass below the smallest representable `x`.
#[test]
fn mixture_priors_are_normalized() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let psi = rng.random_range(0.0..1.0);
        let c = rng.random_range(2.0..20.0);
        let models = [
            ConjugateModel::normal_normal(rng.random_range(-5.0..5.0), rng.random_range(0.1..4.0), 4.0, c).unwrap(),
            ConjugateModel::gamma_exponential(rng.random_range(10.0..40.0), rng.random_range(0.5..8.0), c).unwrap(),
            ConjugateModel::beta_binomial(rng.random_range(20.0..40.0), rng.random_range(20.0..40.0), 1, c).unwrap(),
        ];
        for model in models {
            let mix = MddPrior::new(psi, model).unwrap().mixture();
            let pdf = |x: f64| mix.pdf(x);
            let mass = match model.informative() {
                Family::Normal { mean, var } => total_mass(pdf, Support::Real, mean, (c * var).sqrt()),
                Family::Gamma { .. } => {
                    let mid = model.plug_in().ln();
                    total_mass(pdf, Support::Positive { lo: mid - 700.0, hi: mid + 12.0 }, model.plug_in(), 0.0)
                }
                _ => total_mass(pdf, Support::Unit { lo: -700.0, hi: 36.0 }, 0.5, 0.0),
            };
            assert!((mass - 1.0).abs() < 1e-8, "{model:?} psi {psi}: {mass}");
        }
    }
}

/// Reference hyperparameters: the mixture is never more curved than the
/// informative prior at its mean.
#[test]
fn mixture_curvature_is_bounded_by_the_informative_curvature() {
    let models = [
        ConjugateModel::normal_normal(0.0, 1.0, 4.0, 100.0).unwrap(),
        ConjugateModel::normal_normal(2.0, 0.25, 10.0, 1e4).unwrap(),
        ConjugateModel::gamma_poisson(4.0, 8.0, 10.0).unwrap(),
        ConjugateModel::gamma_poisson(20.0, 2.0, 1e4).unwrap(),
        ConjugateModel::gamma_exponential(4.0, 8.0, 10.0).unwrap(),
        ConjugateModel::gamma_exponential(9.0, 3.0, 1e4).unwrap(),
        ConjugateModel::beta_binomial(2.0, 3.0, 1, 10.0).unwrap(),
        ConjugateModel::beta_binomial(10.0, 30.0, 5, 1e4).unwrap(),
    ];
    for model in models {
        let theta = model.plug_in();
        let d_pi = neg_log_curvature(&model.informative(), theta).unwrap();
        for i in 1..=19 {
            let psi = 0.05 * i as f64;
            let d_phi = mdd_log_curvature(&MddPrior::new(psi, model).unwrap(), theta).unwrap();
            assert!(d_phi <= d_pi + 1e-12 * d_pi.abs(), "{model:?} psi {psi}: {d_phi} > {d_pi}");
        }
    }
}
