//! Mixture data-dependent priors.
//!
//! A mixture data-dependent (MDD) prior is `φ = ψ·π_b + (1 − ψ)·π`, a mixture
//! of a diffuse baseline prior `π_b` and an informative prior `π` whose weight
//! `ψ` is a Hellinger distance computed from data. This crate provides the
//! parametric families, Hellinger distances, the four conjugate models, the
//! resampling algorithms that compute `ψ`, and curvature-based effective
//! sample sizes, including the logistic dose-finding case.

mod error;

pub mod conjugate;
pub mod dist;
pub mod ess;
pub mod experiments;
pub mod hellinger;
pub mod io;
pub mod kde;
pub mod logistic;
pub mod quad;
pub mod resampling;

pub use conjugate::{
    mdd_log_curvature, mdd_posterior, natural_weight, Component, ConjugateModel, MddPrior, Mixture,
    ModelKind,
};
pub use dist::{ml_estimate, Family, FamilyTag, KnownParams, LogDensity, LogDerivs, Sample};
pub use ess::{
    closed_form_ess, ess_auto, ess_grid, ess_mdd, jeffreys_exp_delta, EssMethod, EssResult,
    JeffreysExponential,
};
pub use error::{MddError, Result};
pub use hellinger::{
    hellinger_cf, hellinger_joint, hellinger_num, hellinger_sample, HellingerMethod,
    HellingerValue, JointSpec,
};
pub use quad::QuadControl;
