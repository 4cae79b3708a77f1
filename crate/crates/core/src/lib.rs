//! Scenario-based stochastic model predictive control for nonlinear latent
//! force models.
//!
//! A temporally correlated disturbance is modelled as a Matérn Gaussian
//! process, recast as a linear SDE ([`gp_ssm`]), and appended to the physical
//! state of a nonlinear model ([`lfm`]). A bootstrap particle filter
//! ([`estimator`]) tracks the augmented state, and a scenario MPC
//! ([`scenario_mpc`]) plans over sampled noise realizations using the
//! projected quasi-Newton solver in [`nlp`]. [`harness`] wires all of it into
//! a closed-loop vehicle motion-planning experiment.
//!
//! Runnable walkthroughs live in this crate's `examples/` directory.

pub mod error;
pub mod estimator;
pub mod gp_ssm;
pub mod harness;
pub mod kernels;
pub mod lfm;
pub mod nlp;
pub mod scenario_mpc;

pub use error::{Error, Result};
