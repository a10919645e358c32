//! LTL over `(mode, label)` atoms: parsing, trace semantics, bounded model
//! checking and the SAT back end.

mod bmc;
mod cnf;
mod formula;
mod parse;
mod sat;
mod trace;

pub use bmc::{
    atom_states, bmc_check, decode_witness, encode_bmc, trace_of_states, BmcEncoding, BmcOutcome, BmcStats, Witness,
};
pub use cnf::{lit_value, Cnf, Lit};
pub use formula::{Atom, Ltl, Nnf};
pub use parse::{parse_ltl, parse_ltl_unchecked, split_output, Alphabet};
pub use sat::{sat_solve, sat_solve_with, SatResult, SolveStats, SolverConfig};
pub use trace::{eval_trace, Trace, TraceStep};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LtlError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: unknown mode `{name}`")]
    UnknownMode { name: String, line: usize, col: usize },
    #[error("{line}:{col}: unknown guard label `{name}`")]
    UnknownLabel { name: String, line: usize, col: usize },
    #[error("atom {atom} matches no output of the system")]
    AlphabetMismatch { atom: String },
    #[error("the bound must be at least 1")]
    Bound,
    #[error("DIMACS line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("malformed witness (encoder bug): {0}")]
    MalformedWitness(String),
}
