//! Exhaustive reference computations for small inputs.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ontorepair_core::{Axiom, AxiomId, AxiomSet, Concept, Reasoner, TBox};

fn subsets(ids: &[AxiomId]) -> impl Iterator<Item = BTreeSet<AxiomId>> + '_ {
    (0u32..(1 << ids.len())).map(move |mask| {
        ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &id)| id).collect()
    })
}

fn minimal(mut found: Vec<BTreeSet<AxiomId>>) -> BTreeSet<AxiomSet> {
    found.sort_by_key(|s| s.len());
    let mut out: Vec<BTreeSet<AxiomId>> = Vec::new();
    for s in found {
        if !out.iter().any(|m| m.is_subset(&s)) {
            out.push(s);
        }
    }
    out.into_iter().map(AxiomSet).collect()
}

/// Every subset-minimal sub-TBox satisfying `holds`.
pub fn minimal_subsets(t: &TBox, mut holds: impl FnMut(&TBox) -> bool) -> BTreeSet<AxiomSet> {
    let ids: Vec<AxiomId> = t.ids().collect();
    assert!(ids.len() <= 14, "brute force is for small inputs");
    let found = subsets(&ids).filter(|s| holds(&t.restrict(s))).collect();
    minimal(found)
}

pub fn justifications(t: &TBox, goal: &Axiom) -> BTreeSet<AxiomSet> {
    minimal_subsets(t, |sub| Reasoner::new(sub).entails_open(goal).unwrap())
}

pub fn mups(t: &TBox, concept: &str) -> BTreeSet<AxiomSet> {
    justifications(t, &Axiom::unsat(concept))
}

pub fn mips(t: &TBox) -> BTreeSet<AxiomSet> {
    let names: Vec<String> = t.concept_names().iter().cloned().collect();
    minimal_subsets(t, |sub| {
        let mut r = Reasoner::new(sub);
        names.iter().any(|n| !r.is_satisfiable(&Concept::atomic(n.as_str())).unwrap())
    })
}

pub fn minimal_hitting_sets(conflicts: &[AxiomSet]) -> BTreeSet<AxiomSet> {
    let universe: BTreeSet<AxiomId> = conflicts.iter().flat_map(|c| c.iter()).collect();
    let ids: Vec<AxiomId> = universe.into_iter().collect();
    assert!(ids.len() <= 16, "brute force is for small inputs");
    let found = subsets(&ids).filter(|h| conflicts.iter().all(|c| c.iter().any(|id| h.contains(&id)))).collect();
    minimal(found)
}
