//! Sequential Monte Carlo samplers whose particles move with HMC trajectories
//! of ChEES-adapted length, optionally jittered by quasi-random sequences,
//! together with benchmark targets, NUTS and fixed-length HMC baselines and
//! the metrics used to compare them.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the crate-root aliases fix it to `f64`.

pub mod chees;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod hmc;
pub mod nuts;
pub mod quasirandom;
pub mod rng;
pub mod scalar;
pub mod smc;
pub mod targets;

pub use error::{Error, Result};
pub use quasirandom::{generate_jitter, JitterScheme};
pub use scalar::Real;
pub use smc::{run_smc, Proposal};
pub use targets::Target;

pub type ParticleEnsemble = smc::ParticleEnsemble<f64>;
pub type ProposalOutcome = smc::ProposalOutcome<f64>;
pub type SmcConfig = smc::SmcConfig<f64>;
pub type SmcRun = smc::SmcRun<f64>;
pub type JitterMatrix = quasirandom::JitterMatrix<f64>;
pub type CheesConfig = chees::CheesConfig<f64>;
pub type CheesAdaptState = chees::CheesAdaptState<f64>;
pub type PhaseState = hmc::PhaseState<f64>;

pub type ParticleEnsembleF32 = smc::ParticleEnsemble<f32>;
pub type SmcConfigF32 = smc::SmcConfig<f32>;
pub type JitterMatrixF32 = quasirandom::JitterMatrix<f32>;
