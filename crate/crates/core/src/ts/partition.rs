use std::collections::{BTreeSet, HashMap};

use super::{StateId, TransitionSystem, TsError};

/// A partition of a system's states into contiguous, non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePartition {
    blocks: Vec<usize>,
    block_count: usize,
}

impl StatePartition {
    /// Validates an explicit block assignment: ids must be exactly `0..count`
    /// with every block used.
    pub fn new(blocks: Vec<usize>) -> Result<Self, TsError> {
        let block_count = blocks.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; block_count];
        for &b in &blocks {
            used[b] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(TsError::EmptyBlock(empty));
        }
        Ok(Self { blocks, block_count })
    }

    /// Renumbers arbitrary keys into block ids by order of first appearance.
    pub fn from_keys<K: std::hash::Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let blocks: Vec<usize> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Self { block_count: ids.len(), blocks }
    }

    pub fn singletons(n: usize) -> Self {
        Self { blocks: (0..n).collect(), block_count: n }
    }

    pub fn total(n: usize) -> Self {
        Self { blocks: vec![0; n], block_count: usize::from(n > 0) }
    }

    pub fn block(&self, s: StateId) -> usize {
        self.blocks[s]
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn members(&self) -> Vec<Vec<StateId>> {
        let mut out = vec![Vec::new(); self.block_count];
        for (s, &b) in self.blocks.iter().enumerate() {
            out[b].push(s);
        }
        out
    }

    pub fn is_singleton(&self) -> bool {
        self.block_count == self.blocks.len()
    }

    fn check_against(&self, ts: &TransitionSystem) -> Result<Vec<usize>, TsError> {
        if self.blocks.len() != ts.num_states() {
            return Err(TsError::PartitionLength { expected: ts.num_states(), got: self.blocks.len() });
        }
        let mut block_output: Vec<Option<StateId>> = vec![None; self.block_count];
        for s in 0..ts.num_states() {
            let b = self.blocks[s];
            match block_output[b] {
                None => block_output[b] = Some(s),
                Some(rep) if ts.output_index(rep) != ts.output_index(s) => {
                    return Err(TsError::MixedOutputs {
                        block: b,
                        first: ts.output(rep).to_string(),
                        second: ts.output(s).to_string(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(block_output.into_iter().map(|rep| ts.output_index(rep.expect("non-empty block"))).collect())
    }
}

/// A relation between the states of two systems.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinaryRelation {
    pairs: BTreeSet<(StateId, StateId)>,
}

impl BinaryRelation {
    pub fn new(pairs: impl IntoIterator<Item = (StateId, StateId)>) -> Self {
        Self { pairs: pairs.into_iter().collect() }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(|s| (s, s)))
    }

    /// The graph `{(s, block(s))}` of a partition map.
    pub fn graph_of(part: &StatePartition) -> Self {
        Self::new(part.blocks().iter().copied().enumerate())
    }

    pub fn contains(&self, s: StateId, p: StateId) -> bool {
        self.pairs.contains(&(s, p))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// The quotient `T/~`: one state per block, block outputs shared by their
/// members, and `b -> b'` iff some member of `b` steps into `b'`.
pub fn quotient(ts: &TransitionSystem, part: &StatePartition) -> Result<TransitionSystem, TsError> {
    let block_outputs = part.check_against(ts)?;
    let names = (0..part.block_count()).map(|b| format!("b{b}")).collect();
    let edges: BTreeSet<(usize, usize)> =
        ts.edges().map(|(s, t)| (part.block(s), part.block(t))).collect();
    let q = TransitionSystem::new(names, ts.outputs().to_vec(), block_outputs, edges)?;
    let initial = ts.initial().map(|init| init.iter().map(|&s| part.block(s)).collect());
    q.with_initial(initial)
}

fn successor_blocks(ts: &TransitionSystem, part: &StatePartition, s: StateId) -> Vec<usize> {
    let mut out: Vec<usize> = ts.successors(s).iter().map(|&t| part.block(t)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Whether every member of a block reaches every block the quotient says the
/// block reaches; when it holds, `T` and `T/~` are bisimilar.
pub fn check_quotient_condition(ts: &TransitionSystem, part: &StatePartition) -> Result<bool, TsError> {
    part.check_against(ts)?;
    let mut expected: Vec<Option<Vec<usize>>> = vec![None; part.block_count()];
    for s in 0..ts.num_states() {
        let sig = successor_blocks(ts, part, s);
        let slot = &mut expected[part.block(s)];
        match slot {
            None => *slot = Some(sig),
            Some(prev) if *prev != sig => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// Coarsest output-respecting partition satisfying the quotient condition,
/// computed by splitting blocks on successor-block signatures until stable.
/// Block ids are numbered by first appearance in state order.
pub fn coarsest_bisimulation(ts: &TransitionSystem) -> StatePartition {
    let mut part = StatePartition::from_keys(ts.output_map().iter().copied());
    loop {
        let refined = StatePartition::from_keys(
            (0..ts.num_states()).map(|s| (part.block(s), successor_blocks(ts, &part, s))),
        );
        if refined.block_count() == part.block_count() {
            return refined;
        }
        part = refined;
    }
}

/// Checks the three bisimulation conditions for `rel` between `ts1` and `ts2`.
///
/// The relation must also be total in both directions (every state of either
/// system related to something), and when a system declares initial states
/// each of them must be related to an initial state of the other.
pub fn check_bisimulation(ts1: &TransitionSystem, ts2: &TransitionSystem, rel: &BinaryRelation) -> bool {
    let (n1, n2) = (ts1.num_states(), ts2.num_states());
    if rel.pairs().any(|(s, p)| s >= n1 || p >= n2) {
        return false;
    }
    let mut left = vec![Vec::new(); n1];
    let mut right = vec![Vec::new(); n2];
    for (s, p) in rel.pairs() {
        left[s].push(p);
        right[p].push(s);
    }
    if left.iter().any(Vec::is_empty) || right.iter().any(Vec::is_empty) {
        return false;
    }
    for (s, p) in rel.pairs() {
        if ts1.output(s) != ts2.output(p) {
            return false;
        }
        let forth = ts1
            .successors(s)
            .iter()
            .all(|&s2| ts2.successors(p).iter().any(|&p2| rel.contains(s2, p2)));
        let back = ts2
            .successors(p)
            .iter()
            .all(|&p2| ts1.successors(s).iter().any(|&s2| rel.contains(s2, p2)));
        if !forth || !back {
            return false;
        }
    }
    let init1 = ts1.initial_states();
    let init2 = ts2.initial_states();
    let covered = |from: &[StateId], partners: &[Vec<StateId>], to: &[StateId]| {
        from.iter().all(|&s| partners[s].iter().any(|p| to.binary_search(p).is_ok()))
    };
    if (ts1.initial().is_some() || ts2.initial().is_some())
        && !(covered(&init1, &left, &init2) && covered(&init2, &right, &init1))
    {
        return false;
    }
    true
}
