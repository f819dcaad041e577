//! Contract of the resampling weight algorithms.

use mdd_core::resampling::{compute_weight, Algorithm, PsiSample, ResamplingConfig, Termination};
use mdd_core::{ConjugateModel, Family, Sample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(kind: usize, shift: f64, seed: u64, m: usize) -> (ConjugateModel, Sample) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (model, truth) = match kind {
        0 => (
            ConjugateModel::normal_normal(0.0, 1.0, 5.0, 100.0).unwrap(),
            Family::normal(shift, 5.0).unwrap(),
        ),
        1 => (
            ConjugateModel::gamma_poisson(8.0, 2.0, 10.0).unwrap(),
            Family::poisson(4.0 + shift.abs()).unwrap(),
        ),
        2 => (
            ConjugateModel::gamma_exponential(4.0, 8.0, 10.0).unwrap(),
            Family::exponential(0.5 + 0.2 * shift.abs()).unwrap(),
        ),
        _ => (
            ConjugateModel::beta_binomial(2.0, 3.0, 5, 10.0).unwrap(),
            Family::binomial(5, 0.5).unwrap(),
        ),
    };
    (model, truth.sample(m, &mut rng).unwrap())
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop_oneof![Just(Algorithm::Res1), Just(Algorithm::Res2), Just(Algorithm::Natural)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_run_honours_the_contract(
        kind in 0usize..4,
        shift in -10.0..10.0f64,
        data_seed in any::<u64>(),
        m in 3usize..12,
        algorithm in algorithm(),
        seed in any::<u64>(),
        epsilon in 0.01..0.5f64,
        pooled in any::<bool>(),
    ) {
        let (model, data) = setup(kind, shift, data_seed, m);
        let cfg = ResamplingConfig {
            algorithm,
            seed,
            epsilon,
            k_max: 200,
            psi_sample: if pooled { PsiSample::Pooled } else { PsiSample::GeneratedOnly },
            ..Default::default()
        };
        let Ok((psi, m_star, trace)) = compute_weight(&model, &data, &cfg) else {
            // Degenerate data (e.g. all-zero counts) is reported, never looped on.
            return Ok(());
        };
        prop_assert!((0.0..=1.0).contains(&psi));
        for s in &trace.steps {
            prop_assert!((0.0..=1.0).contains(&s.omega));
            if let Some(p) = s.psi {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
        match trace.terminated_by {
            Termination::Tolerance => prop_assert!(trace.steps.last().unwrap().omega < epsilon),
            Termination::Cap => prop_assert_eq!(trace.steps.len(), cfg.k_max),
            Termination::Natural => prop_assert_eq!(algorithm, Algorithm::Natural),
        }
        if algorithm != Algorithm::Natural {
            prop_assert_eq!(m_star, m + trace.steps.len());
            prop_assert!(trace.steps[..trace.steps.len() - 1].iter().all(|s| s.omega >= epsilon));
        }
        let again = compute_weight(&model, &data, &cfg).unwrap();
        prop_assert_eq!(again.2, trace);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    0.5 * (v[(n - 1) / 2] + v[n / 2])
}

/// Posteriors under the two priors merge as data accumulate.
#[test]
fn posterior_distance_shrinks_with_more_data() {
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let (model, data) = setup(0, 3.0, 1000 + seed, 5);
        let cfg = ResamplingConfig {
            algorithm: Algorithm::Res2,
            seed,
            epsilon: 1e-12,
            k_max: 500,
            ..Default::default()
        };
        let (_, _, trace) = compute_weight(&model, &data, &cfg).unwrap();
        assert_eq!(trace.steps.len(), 500);
        early.push(trace.steps[4].omega);
        late.push(trace.steps[499].omega);
    }
    let (e, l) = (median(early), median(late));
    assert!(l < e, "median omega at k=500 ({l}) not below k=5 ({e})");
}
