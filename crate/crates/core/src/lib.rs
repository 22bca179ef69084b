//! Temporal point processes fitted by weighted score matching.
//!
//! The crate provides intensity models with analytic time and parameter
//! derivatives, score-matching, likelihood and denoising objectives,
//! an Ogata-thinning simulator, and an Adam optimizer.

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod models;
pub mod objectives;
pub mod optimize;
pub mod params;
pub mod quadrature;
pub mod sequence;
pub mod simulate;
pub mod weights;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use models::{IntensityModel, ScoreKind};
pub use objectives::{Evaluation, Objective};
pub use optimize::{fit, FitResult, OptimConfig};
pub use params::{ParamSpec, ParamVector};
pub use sequence::{EventSequence, History};
pub use weights::{WeightFunction, WeightKind, WindowMode};
