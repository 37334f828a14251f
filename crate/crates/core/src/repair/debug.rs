//! Repairs that only delete axioms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Cdp, Repair, RepairError};
use crate::diagnosis::{all_justifications, minimal_hitting_sets, mips, subset_minimal, AxiomSet, ConflictCollection, ConflictKind};
use crate::oracle::Verdict;
use crate::reasoner::Reasoner;
use crate::syntax::{Axiom, AxiomId, Concept, TBox};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebugMode {
    /// One repair per minimal hitting set of the filtered conflicts.
    HittingSet,
    /// A single repair deleting every removable conflict axiom.
    #[default]
    RemoveAllFalse,
}

/// Sets of axioms each of which must lose a member: justifications of an
/// inconsistency, of every entailed wrong axiom and, when unsatisfiability
/// is at stake, the MIPS.
pub fn conflict_sets(t: &TBox, wrong: &[Axiom]) -> Result<ConflictCollection, RepairError> {
    let mut reasoner = Reasoner::new(t);
    let mut sets: Vec<AxiomSet> = Vec::new();
    if !reasoner.is_consistent()? {
        sets.extend(all_justifications(t, &Axiom::gci(Concept::Top, Concept::Bottom))?.sets);
    }
    let mut incoherence_matters = wrong.is_empty();
    for w in wrong {
        incoherence_matters |= w.unsat_target().is_some();
        if reasoner.entails_open(w)? {
            sets.extend(all_justifications(t, w)?.sets);
        }
    }
    if incoherence_matters && !reasoner.unsatisfiable_concepts()?.is_empty() {
        sets.extend(mips(t)?.sets);
    }
    Ok(ConflictCollection::new(ConflictKind::Conflicts, subset_minimal(&sets)))
}

/// Removes axioms the oracle confirms and protected axioms from each conflict.
pub fn filter_conflicts(cdp: &Cdp, t: &TBox, conflicts: &ConflictCollection) -> Result<ConflictCollection, RepairError> {
    let mut filtered = Vec::new();
    for set in &conflicts.sets {
        let mut kept = BTreeSet::new();
        for id in set.iter() {
            let axiom = &t.get(id).expect("conflict ids come from the TBox").axiom;
            if cdp.protected.contains(&id) || cdp.is_protected(axiom) {
                continue;
            }
            let v = cdp.oracle.ask(axiom)?;
            if v != Verdict::True && cdp.policy.may_delete(v) {
                kept.insert(id);
            }
        }
        if kept.is_empty() {
            return Err(RepairError::NoRepairWithoutCorrectRemoval {
                conflict: set.iter().map(|id| t.get(id).unwrap().axiom.clone()).collect(),
            });
        }
        filtered.push(AxiomSet(kept));
    }
    Ok(ConflictCollection::new(ConflictKind::Conflicts, subset_minimal(&filtered)))
}

fn axioms_of(t: &TBox, ids: impl IntoIterator<Item = AxiomId>) -> Vec<Axiom> {
    ids.into_iter().map(|id| t.get(id).unwrap().axiom.clone()).collect()
}

pub(crate) fn debug_tbox(cdp: &Cdp, t: &TBox, mode: DebugMode) -> Result<Vec<Repair>, RepairError> {
    let conflicts = conflict_sets(t, &cdp.wrong)?;
    let filtered = filter_conflicts(cdp, t, &conflicts)?;
    Ok(match mode {
        DebugMode::RemoveAllFalse => vec![Repair::new([], axioms_of(t, filtered.union().iter()))],
        DebugMode::HittingSet => minimal_hitting_sets(&filtered)?
            .sets
            .iter()
            .map(|h| Repair::new([], axioms_of(t, h.iter())))
            .collect(),
    })
}

/// Deletion-only repairs; missing axioms are ignored.
pub fn debug_repairs(cdp: &Cdp, mode: DebugMode) -> Result<Vec<Repair>, RepairError> {
    debug_tbox(cdp, &cdp.tbox, mode)
}
