//! Resampling algorithms that compute the data-dependent mixture weight.
//!
//! Both algorithms draw `θ*` once from the informative prior, then append one
//! generated observation per step. Each step records `ψ`, a Hellinger distance
//! that becomes the mixture weight, and `ω`, the Hellinger distance between the
//! baseline and informative posteriors on all data held so far. The loop stops
//! at the first `ω < ε` or after `k_max` steps.
//!
//! - `res1` generates from `f(·|θ*)` and compares `f(·|θ₀)` with the sample.
//! - `res2` generates from `f(·|θ̂₀)`, the current ML fit, and compares
//!   `f(·|θ̂₀)` with `f(·|θ*)`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conjugate::{natural_weight, Component, ConjugateModel};
use crate::dist::Sample;
use crate::error::{MddError, Result};
use crate::hellinger::{hellinger_cf, hellinger_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Res1,
    Res2,
    /// Hellinger distance between the informative prior and its posterior; no resampling.
    Natural,
}

/// How the data-generating parameter `θ₀` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Theta0Mode {
    Known { value: f64 },
    MlEstimated,
}

/// Which observations the `res1` sample distance is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSample {
    /// Original data pooled with the generated data.
    Pooled,
    /// Generated data only.
    GeneratedOnly,
}

/// Whether `ψ` is computed at every step or only at the last one.
///
/// The stop rule depends on `ω` alone, so skipping intermediate `ψ` values
/// does not change `m*` or the final weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiTrace {
    EveryStep,
    FinalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResamplingConfig {
    pub epsilon: f64,
    pub k_max: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub theta0: Theta0Mode,
    pub psi_sample: PsiSample,
    pub psi_trace: PsiTrace,
    /// Uses this value instead of drawing `θ*` from the informative prior.
    pub theta_star: Option<f64>,
    /// Kernel bandwidth for the `res1` sample distance; Silverman's rule if unset.
    pub bandwidth: Option<f64>,
}

impl Default for ResamplingConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            k_max: 1000,
            algorithm: Algorithm::Res1,
            seed: 0,
            theta0: Theta0Mode::MlEstimated,
            psi_sample: PsiSample::Pooled,
            psi_trace: PsiTrace::EveryStep,
            theta_star: None,
            bandwidth: None,
        }
    }
}

impl ResamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(MddError::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.k_max == 0 {
            return Err(MddError::Config("k_max must be >= 1".into()));
        }
        if let Theta0Mode::Known { value } = self.theta0 {
            if !value.is_finite() {
                return Err(MddError::Config("known theta0 must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    Cap,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplingTrace {
    pub algorithm: Algorithm,
    /// Size of the original sample.
    pub m: usize,
    pub theta0: Option<f64>,
    pub theta_star: Option<f64>,
    pub steps: Vec<TraceStep>,
    pub final_m_star: usize,
    pub final_psi: f64,
    pub terminated_by: Termination,
}

/// Posterior distance `ω` on the given data.
fn omega(model: &ConjugateModel, data: &Sample) -> Result<f64> {
    let q = model.posterior(Component::Baseline, data)?;
    let p = model.posterior(Component::Informative, data)?;
    Ok(hellinger_cf(&q, &p)?.value)
}

fn start(model: &ConjugateModel, data: &Sample, cfg: &ResamplingConfig) -> Result<ChaCha8Rng> {
    cfg.validate()?;
    model.check_data(data)?;
    Ok(ChaCha8Rng::seed_from_u64(cfg.seed))
}

fn draw_theta_star(model: &ConjugateModel, cfg: &ResamplingConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    match cfg.theta_star {
        Some(t) => {
            model.likelihood(t)?;
            Ok(t)
        }
        None => model.informative().draw(rng),
    }
}

fn initial_theta0(model: &ConjugateModel, data: &Sample, cfg: &ResamplingConfig) -> Result<f64> {
    match cfg.theta0 {
        Theta0Mode::Known { value } => Ok(value),
        Theta0Mode::MlEstimated => model.ml_theta(data),
    }
}

fn finish(
    algorithm: Algorithm,
    m: usize,
    theta0: Option<f64>,
    theta_star: Option<f64>,
    steps: Vec<TraceStep>,
    terminated_by: Termination,
) -> ResamplingTrace {
    let last = steps.last().expect("at least one step");
    ResamplingTrace {
        algorithm,
        m,
        theta0,
        theta_star,
        final_m_star: m + if terminated_by == Termination::Natural { 0 } else { steps.len() },
        final_psi: last.psi.expect("last step always carries psi"),
        steps,
        terminated_by,
    }
}

/// Runs the stop loop. `step(k, held, last)` appends one observation to `held`
/// and returns `ψ` when `last` or when every step is traced.
fn run_loop<F>(
    model: &ConjugateModel,
    data: &Sample,
    cfg: &ResamplingConfig,
    mut step: F,
) -> Result<(Vec<TraceStep>, Termination)>
where
    F: FnMut(usize, &mut Sample, bool) -> Result<Option<f64>>,
{
    let mut held = data.clone();
    let mut steps = Vec::new();
    for k in 1..=cfg.k_max {
        let wrap = |e: MddError| e.at_step(k);
        let want_psi = cfg.psi_trace == PsiTrace::EveryStep;
        let psi = step(k, &mut held, false).map_err(wrap)?;
        let w = omega(model, &held).map_err(wrap)?;
        let done = w < cfg.epsilon;
        let psi = match psi {
            Some(p) if want_psi || done || k == cfg.k_max => Some(p),
            _ if done || k == cfg.k_max => step(k, &mut held, true).map_err(wrap)?,
            _ => None,
        };
        steps.push(TraceStep { k, psi, omega: w });
        if done {
            return Ok((steps, Termination::Tolerance));
        }
    }
    Ok((steps, Termination::Cap))
}

/// Resampling algorithm 1.
pub fn run_res1(model: &ConjugateModel, data: &Sample, cfg: &ResamplingConfig) -> Result<ResamplingTrace> {
    let mut rng = start(model, data, cfg)?;
    let theta_star = draw_theta_star(model, cfg, &mut rng)?;
    let theta0 = initial_theta0(model, data, cfg)?;
    let f0 = model.likelihood(theta0)?;
    let gen = model.likelihood(theta_star)?;
    let m = data.len();
    let trace_all = cfg.psi_trace == PsiTrace::EveryStep;
    let psi_of = |held: &Sample| -> Result<f64> {
        match cfg.psi_sample {
            PsiSample::Pooled => Ok(hellinger_sample(&f0, held, cfg.bandwidth)?.value),
            PsiSample::GeneratedOnly => {
                let generated = Sample::new(held.values()[m..].to_vec());
                if generated.len() < 2 && !f0.is_discrete() {
                    Ok(hellinger_cf(&f0, &gen)?.value)
                } else {
                    Ok(hellinger_sample(&f0, &generated, cfg.bandwidth)?.value)
                }
            }
        }
    };
    let (steps, term) = run_loop(model, data, cfg, |_, held, last| {
        if last {
            return psi_of(held).map(Some);
        }
        held.push(gen.draw(&mut rng)?);
        if trace_all {
            psi_of(held).map(Some)
        } else {
            Ok(None)
        }
    })?;
    Ok(finish(Algorithm::Res1, m, Some(theta0), Some(theta_star), steps, term))
}

/// Resampling algorithm 2.
///
/// A known `θ₀` is used for the first step only; later steps refit by maximum
/// likelihood on all observations held.
pub fn run_res2(model: &ConjugateModel, data: &Sample, cfg: &ResamplingConfig) -> Result<ResamplingTrace> {
    let mut rng = start(model, data, cfg)?;
    let theta_star = draw_theta_star(model, cfg, &mut rng)?;
    let f_star = model.likelihood(theta_star)?;
    let theta0 = initial_theta0(model, data, cfg).map_err(|e| e.at_step(1))?;
    let mut current = model.likelihood(theta0)?;
    let trace_all = cfg.psi_trace == PsiTrace::EveryStep;
    let (steps, term) = run_loop(model, data, cfg, |k, held, last| {
        if !last {
            if k > 1 {
                current = model.likelihood(model.ml_theta(held)?)?;
            }
            held.push(current.draw(&mut rng)?);
        }
        if trace_all || last {
            Ok(Some(hellinger_cf(&current, &f_star)?.value))
        } else {
            Ok(None)
        }
    })?;
    Ok(finish(Algorithm::Res2, data.len(), Some(theta0), Some(theta_star), steps, term))
}

/// Natural weight as a one-step trace with `m* = m`.
pub fn run_natural(model: &ConjugateModel, data: &Sample, cfg: &ResamplingConfig) -> Result<ResamplingTrace> {
    cfg.validate()?;
    let psi = natural_weight(model, data)?;
    let steps = vec![TraceStep {
        k: 0,
        psi: Some(psi),
        omega: omega(model, data)?,
    }];
    Ok(finish(Algorithm::Natural, data.len(), None, None, steps, Termination::Natural))
}

/// Dispatches on `cfg.algorithm`; returns `(ψ_{m*}, m*, trace)`.
pub fn compute_weight(
    model: &ConjugateModel,
    data: &Sample,
    cfg: &ResamplingConfig,
) -> Result<(f64, usize, ResamplingTrace)> {
    let trace = match cfg.algorithm {
        Algorithm::Res1 => run_res1(model, data, cfg)?,
        Algorithm::Res2 => run_res2(model, data, cfg)?,
        Algorithm::Natural => run_natural(model, data, cfg)?,
    };
    Ok((trace.final_psi, trace.final_m_star, trace))
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TraceRecord<'a> {
    Header {
        config: &'a ResamplingConfig,
        model: &'a ConjugateModel,
        m: usize,
        theta0: Option<f64>,
        theta_star: Option<f64>,
    },
    Step(&'a TraceStep),
    Summary {
        final_m_star: usize,
        final_psi: f64,
        terminated_by: Termination,
    },
}

/// Writes a trace as JSON lines: a header with the configuration, one line per
/// step, then a summary line.
pub fn write_trace_jsonl<W: Write>(
    mut w: W,
    trace: &ResamplingTrace,
    cfg: &ResamplingConfig,
    model: &ConjugateModel,
) -> Result<()> {
    let mut line = |rec: &TraceRecord| -> Result<()> {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|source| MddError::Io {
            path: "<trace>".into(),
            source,
        })
    };
    line(&TraceRecord::Header {
        config: cfg,
        model,
        m: trace.m,
        theta0: trace.theta0,
        theta_star: trace.theta_star,
    })?;
    for s in &trace.steps {
        line(&TraceRecord::Step(s))?;
    }
    line(&TraceRecord::Summary {
        final_m_star: trace.final_m_star,
        final_psi: trace.final_psi,
        terminated_by: trace.terminated_by,
    })
}
