//! Finite bisimulations for flat systems and the two example ODE models.
//!
//! * [`bnf`]: slice-and-orthant partition of a single integrator chain
//!   `x1' = x2, ..., xn' = u` and its quotient.
//! * [`window`]: the `k`-window (shift graph) quotient of a memory-`k`
//!   difference-flat system.
//! * [`ode`] and [`recover`]: fixed-step simulation of the social-movement
//!   and circadian models, and recovery of every state and the input from the
//!   flat output alone.

pub mod bnf;
pub mod deriv;
pub mod ode;
pub mod recover;
pub mod window;

pub use bnf::{bnf_quotient, bnf_slice_partition, BnfChain, Sign, SliceState};
pub use ode::{simulate_ode, CircadianReadings, OdeKind, OdeModel, Trajectory};
pub use recover::{recover_circadian, recover_social, CircadianRecovery, SocialRecovery};
pub use window::{difference_flat_quotient, FlatAlphabetSpec};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlatError {
    #[error("invalid integrator chain: {0}")]
    InvalidChain(String),
    #[error("point {point:?} lies outside the chain's box")]
    OutsideBox { point: Vec<f64> },
    #[error("invalid alphabet spec: {0}")]
    InvalidAlphabet(String),
    #[error("window quotient needs {states} states, above the budget of {budget}")]
    BudgetExceeded { states: u128, budget: u64 },
    #[error("{model} model is missing parameter `{name}`")]
    MissingParameter { model: &'static str, name: String },
    #[error("{model} model: {reason}")]
    InvalidModel { model: &'static str, reason: String },
    #[error("non-finite state in {model} simulation at t = {time}")]
    BlowUp { model: &'static str, time: f64 },
    #[error("singular inversion of equation {equation} at t = {time}: {reason}")]
    Singularity { equation: usize, time: f64, reason: String },
    #[error("need at least {needed} samples for recovery, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("trajectory CSV: {0}")]
    Csv(String),
}
