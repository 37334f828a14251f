//! Justifications, MUPS, MIPS and minimal hitting sets.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::reasoner::{Reasoner, ReasonerError};
use crate::syntax::{Axiom, AxiomId, Concept, Signature, TBox};

/// Ceiling on hitting-set tree nodes.
pub const DEFAULT_HS_NODE_LIMIT: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagnosisError {
    #[error("the axiom is not entailed")]
    NotEntailed,
    #[error("concept {0} is satisfiable")]
    NotUnsatisfiable(String),
    #[error("conflict collection contains an empty set")]
    EmptyConflict,
    #[error("search exceeded {limit} nodes")]
    ResourceExceeded { limit: usize },
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

/// A set of axiom ids, ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxiomSet(pub BTreeSet<AxiomId>);

impl AxiomSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: AxiomId) -> bool {
        self.0.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = AxiomId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &AxiomSet) -> bool {
        self.0.is_subset(&other.0)
    }

    fn sort_key(&self) -> (usize, Vec<AxiomId>) {
        (self.0.len(), self.0.iter().copied().collect())
    }
}

impl FromIterator<AxiomId> for AxiomSet {
    fn from_iter<I: IntoIterator<Item = AxiomId>>(iter: I) -> Self {
        AxiomSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[u32; N]> for AxiomSet {
    fn from(ids: [u32; N]) -> Self {
        ids.into_iter().map(AxiomId).collect()
    }
}

impl fmt::Display for AxiomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", ids.join(", "))
    }
}

impl Serialize for AxiomSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|i| i.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    Justifications,
    Mups,
    Mips,
    Conflicts,
    HittingSets,
}

/// Sets sorted by size, then by their id sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictCollection {
    pub kind: ConflictKind,
    pub sets: Vec<AxiomSet>,
}

impl ConflictCollection {
    pub fn new(kind: ConflictKind, sets: impl IntoIterator<Item = AxiomSet>) -> Self {
        let mut sets: Vec<AxiomSet> = sets.into_iter().collect();
        sets.sort_by_key(|s| s.sort_key());
        sets.dedup();
        ConflictCollection { kind, sets }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn union(&self) -> AxiomSet {
        self.sets.iter().flat_map(|s| s.iter()).collect()
    }

    /// Keeps only the subset-minimal members.
    pub fn minimised(&self, kind: ConflictKind) -> Self {
        ConflictCollection::new(kind, subset_minimal(&self.sets))
    }
}

/// Subset-minimal members of `sets`, duplicates removed.
pub fn subset_minimal(sets: &[AxiomSet]) -> Vec<AxiomSet> {
    let mut sorted: Vec<&AxiomSet> = sets.iter().collect();
    sorted.sort_by_key(|s| s.sort_key());
    let mut out: Vec<AxiomSet> = Vec::new();
    for s in sorted {
        if !out.iter().any(|kept| kept.is_subset(s)) {
            out.push(s.clone());
        }
    }
    out
}

fn entailed_by(t: &TBox, ids: &BTreeSet<AxiomId>, goal: &Axiom) -> Result<bool, DiagnosisError> {
    Ok(Reasoner::new(&t.restrict(ids)).entails_open(goal)?)
}

/// Axioms of `pool` grouped into layers of increasing distance from the
/// goal's symbols; symbol-free axioms and those never reached come last.
fn relevance_layers(t: &TBox, pool: &BTreeSet<AxiomId>, goal: &Axiom) -> Vec<Vec<AxiomId>> {
    let mut reached: Signature = goal.signature();
    let mut remaining: Vec<(AxiomId, Signature, bool)> = t
        .axioms()
        .iter()
        .filter(|s| pool.contains(&s.id))
        .map(|s| {
            let top_lhs = matches!(&s.axiom, Axiom::Gci { lhs: Concept::Top, .. });
            (s.id, s.axiom.signature(), top_lhs)
        })
        .collect();
    let mut layers = Vec::new();
    loop {
        let (layer, rest): (Vec<_>, Vec<_>) =
            remaining.into_iter().partition(|(_, sig, top_lhs)| *top_lhs || reached.intersects(sig));
        remaining = rest;
        if layer.is_empty() {
            break;
        }
        for (_, sig, _) in &layer {
            reached.extend(sig);
        }
        layers.push(layer.into_iter().map(|(id, _, _)| id).collect());
    }
    if !remaining.is_empty() {
        layers.push(remaining.into_iter().map(|(id, _, _)| id).collect());
    }
    layers
}

/// One minimal subset of `pool` entailing `goal`, if any.
pub fn single_justification(
    t: &TBox,
    pool: &BTreeSet<AxiomId>,
    goal: &Axiom,
) -> Result<Option<AxiomSet>, DiagnosisError> {
    if !entailed_by(t, pool, goal)? {
        return Ok(None);
    }
    let mut current: BTreeSet<AxiomId> = BTreeSet::new();
    for layer in relevance_layers(t, pool, goal) {
        current.extend(layer);
        if entailed_by(t, &current, goal)? {
            break;
        }
    }
    let mut order: Vec<AxiomId> = current.iter().copied().collect();
    // coarse pass with a sliding window, then a single-axiom pass
    let window = order.len() / 4;
    if window > 1 {
        let mut start = 0;
        while start < order.len() {
            let end = (start + window).min(order.len());
            let trial: BTreeSet<AxiomId> =
                order[..start].iter().chain(order[end..].iter()).copied().collect();
            if entailed_by(t, &trial, goal)? {
                order.drain(start..end);
            } else {
                start = end;
            }
        }
    }
    let mut i = 0;
    while i < order.len() {
        let trial: BTreeSet<AxiomId> =
            order.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &id)| id).collect();
        if entailed_by(t, &trial, goal)? {
            order.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(Some(order.into_iter().collect()))
}

/// Every justification of `goal` in `t`.
pub fn all_justifications(t: &TBox, goal: &Axiom) -> Result<ConflictCollection, DiagnosisError> {
    all_justifications_with_limit(t, goal, DEFAULT_HS_NODE_LIMIT)
}

pub fn all_justifications_with_limit(
    t: &TBox,
    goal: &Axiom,
    node_limit: usize,
) -> Result<ConflictCollection, DiagnosisError> {
    let everything: BTreeSet<AxiomId> = t.ids().collect();
    let Some(first) = single_justification(t, &everything, goal)? else {
        return Err(DiagnosisError::NotEntailed);
    };
    let mut found: Vec<AxiomSet> = vec![first.clone()];
    let mut closed: Vec<BTreeSet<AxiomId>> = Vec::new();
    let mut visited: HashSet<BTreeSet<AxiomId>> = HashSet::new();
    let mut queue: VecDeque<(BTreeSet<AxiomId>, AxiomSet)> = VecDeque::from([(BTreeSet::new(), first)]);
    let mut nodes = 1usize;
    while let Some((path, label)) = queue.pop_front() {
        for id in label.iter() {
            let mut next = path.clone();
            next.insert(id);
            if !visited.insert(next.clone()) || closed.iter().any(|c| c.is_subset(&next)) {
                continue;
            }
            nodes += 1;
            if nodes > node_limit {
                return Err(DiagnosisError::ResourceExceeded { limit: node_limit });
            }
            let reuse = found.iter().find(|j| j.0.is_disjoint(&next)).cloned();
            let label = match reuse {
                Some(j) => Some(j),
                None => {
                    let pool: BTreeSet<AxiomId> = everything.difference(&next).copied().collect();
                    let j = single_justification(t, &pool, goal)?;
                    if let Some(j) = &j {
                        found.push(j.clone());
                    }
                    j
                }
            };
            match label {
                Some(j) => queue.push_back((next, j)),
                None => closed.push(next),
            }
        }
    }
    Ok(ConflictCollection::new(ConflictKind::Justifications, found))
}

/// Minimal subsets of `t` in which `concept` is unsatisfiable.
pub fn mups(t: &TBox, concept: &str) -> Result<ConflictCollection, DiagnosisError> {
    let goal = Axiom::unsat(concept);
    if !Reasoner::new(t).entails(&goal)? {
        return Err(DiagnosisError::NotUnsatisfiable(concept.to_string()));
    }
    let mut c = all_justifications(t, &goal)?;
    c.kind = ConflictKind::Mups;
    Ok(c)
}

/// MUPS of every unsatisfiable concept name.
pub fn all_mups(t: &TBox) -> Result<BTreeMap<String, ConflictCollection>, DiagnosisError> {
    let unsat = Reasoner::new(t).unsatisfiable_concepts()?;
    unsat.into_iter().map(|p| Ok((p.clone(), mups(t, &p)?))).collect()
}

/// Minimal incoherence-preserving sub-TBoxes.
pub fn mips(t: &TBox) -> Result<ConflictCollection, DiagnosisError> {
    let all: Vec<AxiomSet> = all_mups(t)?.into_values().flat_map(|c| c.sets).collect();
    Ok(ConflictCollection::new(ConflictKind::Mips, subset_minimal(&all)))
}

/// All subset-minimal hitting sets of `conflicts`.
pub fn minimal_hitting_sets(conflicts: &ConflictCollection) -> Result<ConflictCollection, DiagnosisError> {
    minimal_hitting_sets_with_limit(&conflicts.sets, DEFAULT_HS_NODE_LIMIT)
}

pub fn minimal_hitting_sets_with_limit(
    sets: &[AxiomSet],
    node_limit: usize,
) -> Result<ConflictCollection, DiagnosisError> {
    if sets.iter().any(|s| s.is_empty()) {
        return Err(DiagnosisError::EmptyConflict);
    }
    let sets = subset_minimal(sets);
    let mut hits: Vec<BTreeSet<AxiomId>> = Vec::new();
    let mut visited: HashSet<BTreeSet<AxiomId>> = HashSet::new();
    let mut queue: VecDeque<BTreeSet<AxiomId>> = VecDeque::from([BTreeSet::new()]);
    let mut nodes = 0usize;
    while let Some(path) = queue.pop_front() {
        nodes += 1;
        if nodes > node_limit {
            return Err(DiagnosisError::ResourceExceeded { limit: node_limit });
        }
        if hits.iter().any(|h| h.is_subset(&path)) {
            continue;
        }
        match sets.iter().find(|s| s.0.is_disjoint(&path)) {
            None => hits.push(path),
            Some(open) => {
                for id in open.iter() {
                    let mut next = path.clone();
                    next.insert(id);
                    if visited.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let as_sets: Vec<AxiomSet> = hits.into_iter().map(AxiomSet).collect();
    Ok(ConflictCollection::new(ConflictKind::HittingSets, subset_minimal(&as_sets)))
}

/// Axioms of the MIPS ordered by how many MIPS contain them, then by id.
pub fn rank_axioms_by_mips_arity(mips: &ConflictCollection) -> Vec<(AxiomId, usize)> {
    let mut counts: BTreeMap<AxiomId, usize> = BTreeMap::new();
    for s in &mips.sets {
        for id in s.iter() {
            *counts.entry(id).or_default() += 1;
        }
    }
    let mut ranked: Vec<(AxiomId, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}
