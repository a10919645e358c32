//! Finite bisimulation abstractions of hybrid systems with flat continuous
//! dynamics, and LTL vulnerability assessment on those abstractions by
//! bounded model checking.
//!
//! The pieces, bottom up:
//!
//! * [`ts`]: finite transition systems, quotients and bisimulation checks.
//! * [`lattice`]: hypercubic-lattice abstraction of linear control systems.
//! * [`flat`]: slice quotients of integrator chains, shift-window quotients
//!   of difference-flat systems, and flat-output recovery for two example
//!   ODE models.
//! * [`hds`]: hybrid models and the product of supervisor and plant
//!   abstractions.
//! * [`ltl`]: LTL parsing, trace semantics, the BMC encoder, a CDCL solver
//!   and DIMACS export.
//! * [`model`] and [`assess`]: the JSON model format and the end-to-end
//!   assessment pipeline behind the `vulnscope` binary.

pub mod assess;
pub mod flat;
pub mod hds;
pub mod lattice;
pub mod ltl;
pub mod model;
pub mod ts;
