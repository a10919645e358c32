//! Window quotient of a memory-`k` difference-flat system.
//!
//! The state is an algebraic function of the next `k` flat-output values, so
//! partitioning the flat output into symbols `Y` makes the `k`-symbol window
//! a finite bisimulation class. Windows shift by one symbol per step and the
//! entering symbol is unconstrained, giving the de Bruijn graph `B(|Y|, k)`.

use super::FlatError;
use crate::ts::TransitionSystem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatAlphabetSpec {
    symbols: Vec<String>,
    memory: usize,
}

impl FlatAlphabetSpec {
    pub fn new(symbols: Vec<String>, memory: usize) -> Result<Self, FlatError> {
        if symbols.is_empty() {
            return Err(FlatError::InvalidAlphabet("alphabet is empty".into()));
        }
        if memory == 0 {
            return Err(FlatError::InvalidAlphabet("memory must be at least 1".into()));
        }
        let mut sorted = symbols.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != symbols.len() {
            return Err(FlatError::InvalidAlphabet("duplicate symbol".into()));
        }
        Ok(Self { symbols, memory })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn window_count(&self) -> u128 {
        (0..self.memory).try_fold(1u128, |acc, _| acc.checked_mul(self.symbols.len() as u128)).unwrap_or(u128::MAX)
    }

    /// Symbol indices of window `id`, oldest (current) symbol first.
    pub fn window(&self, mut id: usize) -> Vec<usize> {
        let y = self.symbols.len();
        let mut w = vec![0; self.memory];
        for slot in (0..self.memory).rev() {
            w[slot] = id % y;
            id /= y;
        }
        w
    }

    pub fn window_id(&self, window: &[usize]) -> usize {
        window.iter().fold(0, |acc, &s| acc * self.symbols.len() + s)
    }

    pub fn window_label(&self, window: &[usize]) -> String {
        let parts: Vec<&str> = window.iter().map(|&s| self.symbols[s].as_str()).collect();
        format!("w[{}]", parts.join(","))
    }
}

/// States: all `k`-symbol windows; output: the first symbol; edges: shift
/// left and append any symbol.
pub fn difference_flat_quotient(spec: &FlatAlphabetSpec, budget: u64) -> Result<TransitionSystem, FlatError> {
    let count = spec.window_count();
    if count > budget as u128 {
        return Err(FlatError::BudgetExceeded { states: count, budget });
    }
    let count = count as usize;
    let y = spec.symbols.len();
    let names: Vec<String> = (0..count).map(|id| spec.window_label(&spec.window(id))).collect();
    let output_map: Vec<usize> = (0..count).map(|id| spec.window(id)[0]).collect();
    // dropping the leading symbol and appending one is `(id mod y^(k-1)) * y + sym`
    let tail = count / y;
    let edges = (0..count).flat_map(|id| (0..y).map(move |sym| (id, (id % tail) * y + sym)));
    Ok(TransitionSystem::new(names, spec.symbols.clone(), output_map, edges).expect("window quotient is well formed"))
}
