//! Complete-debug problems and their repairs.
//!
//! A problem bundles a TBox, an oracle, axioms that should follow (missing)
//! and axioms that should not (wrong). A repair adds oracle-true axioms and
//! removes oracle-false ones so that both lists are honoured.

mod combined;
mod complete;
mod debug;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnosis::DiagnosisError;
use crate::oracle::{Oracle, OracleError, Verdict};
use crate::reasoner::{Reasoner, ReasonerError};
use crate::syntax::{Axiom, AxiomId, Provenance, Signature, TBox};

pub use combined::{combined_repair, CombinedOptions};
pub use complete::{
    candidate_axioms, choose_candidate, complete_repair, completion_candidates, Candidate, CandidateReport,
    ChoicePolicy, DEFAULT_COMPLETION_ROUNDS,
};
pub use debug::{conflict_sets, debug_repairs, filter_conflicts, DebugMode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepairError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("axiom to delete is not in the TBox: {0}")]
    DeleteNotPresent(Axiom),
    #[error("every axiom of a conflict is oracle-true or protected: {}", display_axioms(.conflict))]
    NoRepairWithoutCorrectRemoval { conflict: Vec<Axiom> },
    #[error("no validated candidate yields missing axiom {0}")]
    UnrepairableMissing(Axiom),
    #[error("unsupported axiom shape for completion: {0}")]
    UnsupportedShape(Axiom),
    #[error("no repair found within {rounds} rounds")]
    NoRepairFound { rounds: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn display_axioms(v: &[Axiom]) -> String {
    v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("; ")
}

/// Treatment of Unknown oracle verdicts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    /// Unknown axioms are never added but may be deleted.
    #[default]
    Prudent,
    /// Unknown axioms are neither added nor deleted.
    Strict,
    /// Unknown axioms may be added and deleted.
    Credulous,
}

impl UnknownPolicy {
    pub fn may_add(self, v: Verdict) -> bool {
        v == Verdict::True || (v == Verdict::Unknown && self == UnknownPolicy::Credulous)
    }

    pub fn may_delete(self, v: Verdict) -> bool {
        v == Verdict::False || (v == Verdict::Unknown && self != UnknownPolicy::Strict)
    }
}

/// A complete-debug problem.
#[derive(Debug, Clone)]
pub struct Cdp {
    pub tbox: TBox,
    pub oracle: Arc<Oracle>,
    pub missing: Vec<Axiom>,
    pub wrong: Vec<Axiom>,
    pub protected: BTreeSet<AxiomId>,
    pub policy: UnknownPolicy,
}

impl Cdp {
    pub fn new(tbox: TBox, oracle: Arc<Oracle>, missing: Vec<Axiom>, wrong: Vec<Axiom>) -> Result<Self, RepairError> {
        if let Some(a) = missing.iter().find(|a| wrong.contains(a)) {
            return Err(RepairError::InvalidProblem(format!("{a} is both missing and wrong")));
        }
        let mut extra = Signature::default();
        for a in missing.iter().chain(&wrong) {
            a.collect_names(&mut extra.concepts, &mut extra.roles);
        }
        Ok(Cdp { tbox: tbox.with_signature(&extra), oracle, missing, wrong, protected: BTreeSet::new(), policy: UnknownPolicy::default() })
    }

    pub fn with_protected(mut self, protected: impl IntoIterator<Item = AxiomId>) -> Result<Self, RepairError> {
        for id in protected {
            if self.tbox.get(id).is_none() {
                return Err(RepairError::InvalidProblem(format!("protected axiom {id} is not in the TBox")));
            }
            self.protected.insert(id);
        }
        Ok(self)
    }

    pub fn with_policy(mut self, policy: UnknownPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Same problem with different missing and wrong lists.
    pub fn with_defects(&self, tbox: TBox, missing: Vec<Axiom>, wrong: Vec<Axiom>) -> Cdp {
        Cdp { tbox, missing, wrong, ..self.clone() }
    }

    pub fn concepts(&self) -> &BTreeSet<String> {
        self.tbox.concept_names()
    }

    pub fn is_protected(&self, axiom: &Axiom) -> bool {
        self.tbox.axioms().iter().any(|s| &s.axiom == axiom && self.protected.contains(&s.id))
    }
}

/// Axioms to add and axioms to delete, each kept in canonical text order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Repair {
    add: Vec<Axiom>,
    delete: Vec<Axiom>,
}

fn canonical_order(mut v: Vec<Axiom>) -> Vec<Axiom> {
    v.sort_by_cached_key(|a| a.to_string());
    v.dedup();
    v
}

impl Repair {
    pub fn new(add: impl IntoIterator<Item = Axiom>, delete: impl IntoIterator<Item = Axiom>) -> Self {
        Repair { add: canonical_order(add.into_iter().collect()), delete: canonical_order(delete.into_iter().collect()) }
    }

    pub fn empty() -> Self {
        Repair::default()
    }

    pub fn add(&self) -> &[Axiom] {
        &self.add
    }

    pub fn delete(&self) -> &[Axiom] {
        &self.delete
    }

    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.delete.is_empty()
    }

    /// Both parts are subsets of the other repair's parts.
    pub fn is_subset_of(&self, other: &Repair) -> bool {
        self.add.iter().all(|a| other.add.contains(a)) && self.delete.iter().all(|d| other.delete.contains(d))
    }

    /// Normalises after deserialisation.
    pub fn canonical(self) -> Self {
        Repair::new(self.add, self.delete)
    }
}

/// A repair with an identifier, as stored in repair list files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedRepair {
    pub id: String,
    #[serde(flatten)]
    pub repair: Repair,
}

/// Reads a JSON list of `{"id", "add", "delete"}` objects.
pub fn parse_named_repairs(json: &str) -> Result<Vec<NamedRepair>, serde_json::Error> {
    let list: Vec<NamedRepair> = serde_json::from_str(json)?;
    Ok(list.into_iter().map(|n| NamedRepair { id: n.id, repair: n.repair.canonical() }).collect())
}

/// Outcome of one clause of the repair definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseCheck {
    pub holds: bool,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub axiom: Axiom,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl ClauseCheck {
    fn from_witnesses(witnesses: Vec<Witness>) -> Self {
        ClauseCheck { holds: witnesses.is_empty(), witnesses }
    }
}

/// Per-clause verification of a candidate repair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    /// every added axiom is oracle-true
    #[serde(rename = "i")]
    pub additions_true: ClauseCheck,
    /// every deleted axiom is oracle-false
    #[serde(rename = "ii")]
    pub deletions_false: ClauseCheck,
    #[serde(rename = "iii")]
    pub consistent: ClauseCheck,
    /// every missing axiom is entailed
    #[serde(rename = "iv")]
    pub missing_entailed: ClauseCheck,
    /// no wrong axiom is entailed
    #[serde(rename = "v")]
    pub wrong_excluded: ClauseCheck,
    pub protected_untouched: ClauseCheck,
    pub is_repair: bool,
}

/// `(T ∪ A) \ D`; deletions that are not stated are ignored.
pub fn apply_lenient(t: &TBox, r: &Repair) -> TBox {
    let drop: BTreeSet<AxiomId> = t.axioms().iter().filter(|s| r.delete.contains(&s.axiom)).map(|s| s.id).collect();
    let kept_add: Vec<&Axiom> = r.add.iter().filter(|a| !r.delete.contains(a)).collect();
    t.without(&drop).with_added(kept_add, &Provenance::Added("repair".into()))
}

/// `(T ∪ A) \ D`. Deleted axioms must be stated in `t`.
pub fn apply_repair(t: &TBox, r: &Repair) -> Result<TBox, RepairError> {
    if let Some(d) = r.delete.iter().find(|d| !t.contains(d)) {
        return Err(RepairError::DeleteNotPresent(d.clone()));
    }
    Ok(apply_lenient(t, r))
}

pub fn verify_repair(cdp: &Cdp, r: &Repair) -> Result<VerificationReport, RepairError> {
    let mut bad_add = Vec::new();
    for a in &r.add {
        let v = cdp.oracle.ask(a)?;
        if !cdp.policy.may_add(v) {
            bad_add.push(Witness { axiom: a.clone(), verdict: Some(v) });
        }
    }
    let mut bad_delete = Vec::new();
    let mut protected = Vec::new();
    for d in &r.delete {
        let v = cdp.oracle.ask(d)?;
        if !cdp.policy.may_delete(v) {
            bad_delete.push(Witness { axiom: d.clone(), verdict: Some(v) });
        }
        if cdp.is_protected(d) {
            protected.push(Witness { axiom: d.clone(), verdict: None });
        }
    }
    let repaired = apply_lenient(&cdp.tbox, r);
    let mut reasoner = Reasoner::new(&repaired);
    let consistent = if reasoner.is_consistent()? {
        Vec::new()
    } else {
        vec![Witness { axiom: Axiom::gci(crate::syntax::Concept::Top, crate::syntax::Concept::Bottom), verdict: None }]
    };
    let mut unentailed = Vec::new();
    for m in &cdp.missing {
        if !reasoner.entails_open(m)? {
            unentailed.push(Witness { axiom: m.clone(), verdict: None });
        }
    }
    let mut entailed = Vec::new();
    for w in &cdp.wrong {
        if reasoner.entails_open(w)? {
            entailed.push(Witness { axiom: w.clone(), verdict: None });
        }
    }
    let report = VerificationReport {
        additions_true: ClauseCheck::from_witnesses(bad_add),
        deletions_false: ClauseCheck::from_witnesses(bad_delete),
        consistent: ClauseCheck::from_witnesses(consistent),
        missing_entailed: ClauseCheck::from_witnesses(unentailed),
        wrong_excluded: ClauseCheck::from_witnesses(entailed),
        protected_untouched: ClauseCheck::from_witnesses(protected),
        is_repair: false,
    };
    let is_repair = [
        &report.additions_true,
        &report.deletions_false,
        &report.consistent,
        &report.missing_entailed,
        &report.wrong_excluded,
        &report.protected_untouched,
    ]
    .iter()
    .all(|c| c.holds);
    Ok(VerificationReport { is_repair, ..report })
}

/// Drops deletions (in TBox order), then additions (in canonical order),
/// keeping each drop only if the result is still a repair.
pub fn remove_redundancy(cdp: &Cdp, r: &Repair) -> Result<Repair, RepairError> {
    if !verify_repair(cdp, r)?.is_repair {
        return Err(RepairError::Precondition("input is not a repair".into()));
    }
    let mut current = r.clone();
    let mut deletions = current.delete.clone();
    deletions.sort_by_key(|d| cdp.tbox.find(d).map_or(u32::MAX, |s| s.id.0));
    for d in deletions {
        let trial = Repair::new(current.add.clone(), current.delete.iter().filter(|x| **x != d).cloned());
        if verify_repair(cdp, &trial)?.is_repair {
            current = trial;
        }
    }
    for a in current.add.clone() {
        let trial = Repair::new(current.add.iter().filter(|x| **x != a).cloned(), current.delete.clone());
        if verify_repair(cdp, &trial)?.is_repair {
            current = trial;
        }
    }
    Ok(current)
}
