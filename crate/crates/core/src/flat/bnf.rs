//! Slice quotient of one Brunovsky chain.
//!
//! The state space is cut into slices `x1 in [lo + i eps, lo + (i+1) eps)`
//! crossed with the sign orthant of `(x2, ..., xn)`. Transitions between
//! face-adjacent classes follow from the sign of the derivative on the
//! shared face:
//!
//! * `x1` moves up a slice when `x2 > 0` and down when `x2 < 0`;
//! * `x_{j+1}` changes sign toward the sign of `x_{j+2}`;
//! * `xn` is driven by `u` and may change sign either way.
//!
//! A single integrator (`n = 1`) moves freely between neighbouring slices.
//! Every class carries a self-loop. The outer box faces are absorbing.

use std::fmt;

use super::FlatError;
use crate::ts::TransitionSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `sign(0)` is `+`.
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnfChain {
    n: usize,
    epsilon: f64,
    lo: f64,
    hi: f64,
    orthant_bound: f64,
    slices: usize,
}

impl BnfChain {
    pub fn new(n: usize, epsilon: f64, x1_range: (f64, f64), orthant_bound: f64) -> Result<Self, FlatError> {
        let (lo, hi) = x1_range;
        if n == 0 {
            return Err(FlatError::InvalidChain("chain length must be at least 1".into()));
        }
        if n > 20 {
            return Err(FlatError::InvalidChain(format!("chain length {n} exceeds 20")));
        }
        if !(epsilon > 0.0 && lo < hi && orthant_bound > 0.0 && epsilon.is_finite() && hi.is_finite() && lo.is_finite())
        {
            return Err(FlatError::InvalidChain("need eps > 0, lo < hi and a positive orthant bound".into()));
        }
        let ratio = (hi - lo) / epsilon;
        let slices = ratio.round();
        if slices < 1.0 || (ratio - slices).abs() > 1e-9 * slices {
            return Err(FlatError::InvalidChain(format!("eps = {epsilon} does not tile [{lo}, {hi})")));
        }
        Ok(Self { n, epsilon, lo, hi, orthant_bound, slices: slices as usize })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x1_range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn orthant_bound(&self) -> f64 {
        self.orthant_bound
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn orthants(&self) -> usize {
        1 << (self.n - 1)
    }

    pub fn state_count(&self) -> usize {
        self.slices * self.orthants()
    }

    /// Dense id: slice-major, then the sign pattern with `s_1` most
    /// significant and `+` before `-`.
    pub fn state_id(&self, state: &SliceState) -> usize {
        let pattern = state
            .signs
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | usize::from(s == Sign::Minus));
        state.slice * self.orthants() + pattern
    }

    pub fn state_from_id(&self, id: usize) -> SliceState {
        let orthants = self.orthants();
        let pattern = id % orthants;
        let signs = (0..self.n - 1)
            .map(|j| if (pattern >> (self.n - 2 - j)) & 1 == 1 { Sign::Minus } else { Sign::Plus })
            .collect();
        SliceState { slice: id / orthants, signs }
    }

    /// Axis-aligned closure `[lower, upper]` of a class.
    pub fn state_box(&self, state: &SliceState) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![self.lo + state.slice as f64 * self.epsilon];
        let mut upper = vec![self.lo + (state.slice + 1) as f64 * self.epsilon];
        for s in &state.signs {
            match s {
                Sign::Plus => {
                    lower.push(0.0);
                    upper.push(self.orthant_bound);
                }
                Sign::Minus => {
                    lower.push(-self.orthant_bound);
                    upper.push(0.0);
                }
            }
        }
        (lower, upper)
    }

    /// Centre of the class: mid-slice, and `+-bound/2` on the other axes.
    pub fn state_center(&self, state: &SliceState) -> Vec<f64> {
        let mut c = vec![self.lo + (state.slice as f64 + 0.5) * self.epsilon];
        c.extend(state.signs.iter().map(|s| match s {
            Sign::Plus => 0.5 * self.orthant_bound,
            Sign::Minus => -0.5 * self.orthant_bound,
        }));
        c
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n
            && x[0] >= self.lo
            && x[0] < self.hi
            && x[1..].iter().all(|v| v.abs() <= self.orthant_bound)
    }
}

/// A class `y_{i,s}` of the slice partition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceState {
    pub slice: usize,
    pub signs: Vec<Sign>,
}

impl fmt::Display for SliceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.slice)?;
        if !self.signs.is_empty() {
            f.write_str(":")?;
            for s in &self.signs {
                write!(f, "{}", s.symbol())?;
            }
        }
        Ok(())
    }
}

pub fn bnf_slice_partition(chain: &BnfChain, x: &[f64]) -> Result<SliceState, FlatError> {
    if !chain.contains(x) {
        return Err(FlatError::OutsideBox { point: x.to_vec() });
    }
    let slice = (((x[0] - chain.lo) / chain.epsilon).floor() as usize).min(chain.slices - 1);
    Ok(SliceState { slice, signs: x[1..].iter().map(|&v| Sign::of(v)).collect() })
}

/// Successor classes of `state` other than itself.
pub fn bnf_successors(chain: &BnfChain, state: &SliceState) -> Vec<SliceState> {
    let mut out = Vec::new();
    let i = state.slice;
    let up = |out: &mut Vec<SliceState>| {
        if i + 1 < chain.slices {
            out.push(SliceState { slice: i + 1, signs: state.signs.clone() });
        }
    };
    let down = |out: &mut Vec<SliceState>| {
        if i > 0 {
            out.push(SliceState { slice: i - 1, signs: state.signs.clone() });
        }
    };
    match state.signs.first() {
        None => {
            up(&mut out);
            down(&mut out);
        }
        Some(Sign::Plus) => up(&mut out),
        Some(Sign::Minus) => down(&mut out),
    }
    let last = state.signs.len();
    for j in 0..last {
        let target = state.signs[j].flip();
        if j + 1 == last || state.signs[j + 1] == target {
            let mut signs = state.signs.clone();
            signs[j] = target;
            out.push(SliceState { slice: i, signs });
        }
    }
    out
}

/// The quotient `(Y, ->, Y, id)` of the slice partition.
pub fn bnf_quotient(chain: &BnfChain) -> TransitionSystem {
    let count = chain.state_count();
    let names: Vec<String> = (0..count).map(|id| chain.state_from_id(id).to_string()).collect();
    let mut edges = Vec::new();
    for id in 0..count {
        edges.push((id, id));
        let state = chain.state_from_id(id);
        edges.extend(bnf_successors(chain, &state).iter().map(|t| (id, chain.state_id(t))));
    }
    TransitionSystem::new(names.clone(), names, (0..count).collect(), edges).expect("slice quotient is well formed")
}
