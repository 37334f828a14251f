//! Comparing repairs by what they entail and by what they change.
//!
//! Completeness and correctness are measured over a finite universe of
//! axioms: a repair is more complete when it entails more oracle-true members
//! and less incorrect when it entails fewer oracle-false members.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{OracleError, Verdict};
use crate::reasoner::{Reasoner, ReasonerError};
use crate::repair::{apply_lenient, verify_repair, Cdp, Repair, RepairError};
use crate::syntax::{Axiom, Concept};

pub const REPORT_SCHEMA: &str = "ontorepair.preferences/v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreferenceError {
    #[error("the preference set is empty")]
    EmptyPreferenceSet,
    #[error("{0:?} is used both to select and to compare")]
    OverlappingPreference(Preference),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Finite set of axioms over which entailments are compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomUniverse {
    members: Vec<Axiom>,
}

impl AxiomUniverse {
    pub fn new(members: impl IntoIterator<Item = Axiom>) -> Self {
        let set: BTreeSet<Axiom> = members.into_iter().filter(|a| !a.is_trivial() && a.sides().is_some()).collect();
        let mut members: Vec<Axiom> = set.into_iter().collect();
        members.sort_by_cached_key(|a| a.to_string());
        AxiomUniverse { members }
    }

    pub fn members(&self) -> &[Axiom] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, a: &Axiom) -> bool {
        self.members.contains(a)
    }

    /// Adds further axioms, typically the ones under discussion.
    pub fn with_anchors<'a>(&'a self, anchors: impl IntoIterator<Item = &'a Axiom>) -> Self {
        AxiomUniverse::new(self.members.iter().chain(anchors).cloned())
    }

    /// Shape universe extended with the problem's axioms and every axiom the
    /// candidates add or delete.
    pub fn for_problem(cdp: &Cdp, repairs: &[Repair]) -> Self {
        let base = comparison_universe(cdp.concepts(), cdp.tbox.role_names());
        let anchors: Vec<&Axiom> = cdp
            .tbox
            .logical_axioms()
            .chain(&cdp.missing)
            .chain(&cdp.wrong)
            .chain(repairs.iter().flat_map(|r| r.add().iter().chain(r.delete())))
            .collect();
        base.with_anchors(anchors)
    }
}

/// `A ⊑ B` for distinct names and `∃r.A ⊑ B`, `A ⊑ ∃r.B` for all names.
pub fn comparison_universe(concepts: &BTreeSet<String>, roles: &BTreeSet<String>) -> AxiomUniverse {
    let mut members = Vec::new();
    for a in concepts {
        for b in concepts {
            if a != b {
                members.push(Axiom::named(a, b));
            }
            for r in roles {
                members.push(Axiom::gci(Concept::exists(r.as_str(), Concept::atomic(a.as_str())), Concept::atomic(b.as_str())));
                members.push(Axiom::gci(Concept::atomic(a.as_str()), Concept::exists(r.as_str(), Concept::atomic(b.as_str()))));
            }
        }
    }
    AxiomUniverse::new(members)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntailmentProfile {
    pub entailed_true: BTreeSet<Axiom>,
    pub entailed_false: BTreeSet<Axiom>,
    /// Entailed members the oracle could not judge; excluded from both sets.
    pub entailed_unknown: BTreeSet<Axiom>,
    pub maximally_complete: bool,
    pub minimally_incorrect: bool,
}

impl EntailmentProfile {
    pub fn oracle_unknown(&self) -> bool {
        !self.entailed_unknown.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    MoreComplete,
    LessIncorrect,
    Subset,
}

impl Preference {
    pub const ALL: [Preference; 3] = [Preference::MoreComplete, Preference::LessIncorrect, Preference::Subset];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    MoreComplete,
    LessComplete,
    EquallyComplete,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Correctness {
    LessIncorrect,
    MoreIncorrect,
    EquallyIncorrect,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetRelation {
    StrictSubset,
    StrictSuperset,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PreferenceVerdict {
    pub completeness: Completeness,
    pub correctness: Correctness,
    pub subset: SubsetRelation,
}

enum Order {
    Less,
    Greater,
    Equal,
    Incomparable,
}

fn set_order<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Order {
    match (a.is_subset(b), b.is_subset(a)) {
        (true, true) => Order::Equal,
        (true, false) => Order::Less,
        (false, true) => Order::Greater,
        (false, false) => Order::Incomparable,
    }
}

impl PreferenceVerdict {
    /// `first` is strictly preferred to `second` for `p`.
    pub fn strictly(&self, p: Preference) -> bool {
        match p {
            Preference::MoreComplete => self.completeness == Completeness::MoreComplete,
            Preference::LessIncorrect => self.correctness == Correctness::LessIncorrect,
            Preference::Subset => self.subset == SubsetRelation::StrictSubset,
        }
    }

    /// `first` is preferred to or tied with `second` for `p`.
    pub fn at_least(&self, p: Preference) -> bool {
        self.strictly(p)
            || match p {
                Preference::MoreComplete => self.completeness == Completeness::EquallyComplete,
                Preference::LessIncorrect => self.correctness == Correctness::EquallyIncorrect,
                Preference::Subset => self.subset == SubsetRelation::Equal,
            }
    }

    pub fn dominates(&self, prefs: &[Preference]) -> bool {
        prefs.iter().all(|&p| self.at_least(p)) && prefs.iter().any(|&p| self.strictly(p))
    }
}

/// Caches entailment profiles of repairs of one problem over one universe.
pub struct PreferenceContext<'a> {
    cdp: &'a Cdp,
    universe: AxiomUniverse,
    verdicts: Vec<Verdict>,
    profiles: HashMap<Repair, EntailmentProfile>,
}

impl<'a> PreferenceContext<'a> {
    pub fn new(cdp: &'a Cdp, universe: AxiomUniverse) -> Result<Self, PreferenceError> {
        let verdicts = universe.members().iter().map(|a| cdp.oracle.ask(a)).collect::<Result<Vec<_>, _>>()?;
        Ok(PreferenceContext { cdp, universe, verdicts, profiles: HashMap::new() })
    }

    pub fn universe(&self) -> &AxiomUniverse {
        &self.universe
    }

    pub fn profile(&mut self, r: &Repair) -> Result<EntailmentProfile, PreferenceError> {
        if let Some(p) = self.profiles.get(r) {
            return Ok(p.clone());
        }
        let repaired = apply_lenient(&self.cdp.tbox, r);
        let mut reasoner = Reasoner::new(&repaired);
        let entailed = reasoner.entails_all(self.universe.members())?;
        let mut profile = EntailmentProfile {
            entailed_true: BTreeSet::new(),
            entailed_false: BTreeSet::new(),
            entailed_unknown: BTreeSet::new(),
            maximally_complete: false,
            minimally_incorrect: false,
        };
        let mut all_true = 0;
        for ((a, &v), e) in self.universe.members().iter().zip(&self.verdicts).zip(entailed) {
            if v == Verdict::True {
                all_true += 1;
            }
            if !e {
                continue;
            }
            match v {
                Verdict::True => profile.entailed_true.insert(a.clone()),
                Verdict::False => profile.entailed_false.insert(a.clone()),
                Verdict::Unknown => profile.entailed_unknown.insert(a.clone()),
            };
        }
        profile.maximally_complete = profile.entailed_true.len() == all_true;
        profile.minimally_incorrect = profile.entailed_false.is_empty();
        self.profiles.insert(r.clone(), profile.clone());
        Ok(profile)
    }

    pub fn relate(&mut self, first: &Repair, second: &Repair) -> Result<PreferenceVerdict, PreferenceError> {
        let p1 = self.profile(first)?;
        let p2 = self.profile(second)?;
        let completeness = match set_order(&p1.entailed_true, &p2.entailed_true) {
            Order::Greater => Completeness::MoreComplete,
            Order::Less => Completeness::LessComplete,
            Order::Equal => Completeness::EquallyComplete,
            Order::Incomparable => Completeness::Incomparable,
        };
        let correctness = match set_order(&p1.entailed_false, &p2.entailed_false) {
            Order::Less => Correctness::LessIncorrect,
            Order::Greater => Correctness::MoreIncorrect,
            Order::Equal => Correctness::EquallyIncorrect,
            Order::Incomparable => Correctness::Incomparable,
        };
        let subset = match (first == second, first.is_subset_of(second), second.is_subset_of(first)) {
            (true, _, _) => SubsetRelation::Equal,
            (false, true, _) => SubsetRelation::StrictSubset,
            (false, false, true) => SubsetRelation::StrictSuperset,
            _ => SubsetRelation::Incomparable,
        };
        Ok(PreferenceVerdict { completeness, correctness, subset })
    }

    pub fn dominates(&mut self, first: &Repair, second: &Repair, prefs: &[Preference]) -> Result<bool, PreferenceError> {
        if prefs.is_empty() {
            return Err(PreferenceError::EmptyPreferenceSet);
        }
        Ok(self.relate(first, second)?.dominates(prefs))
    }

    /// Indices of candidates no other candidate dominates with respect to `prefs`.
    pub fn skyline_within(&mut self, candidates: &[Repair], prefs: &[Preference]) -> Result<Vec<usize>, PreferenceError> {
        if prefs.is_empty() {
            return Err(PreferenceError::EmptyPreferenceSet);
        }
        let all: Vec<usize> = (0..candidates.len()).collect();
        self.undominated(candidates, &all, prefs)
    }

    fn undominated(&mut self, candidates: &[Repair], pool: &[usize], prefs: &[Preference]) -> Result<Vec<usize>, PreferenceError> {
        let mut out = Vec::new();
        for &i in pool {
            let mut beaten = false;
            for &j in pool {
                if i != j && self.dominates(&candidates[j], &candidates[i], prefs)? {
                    beaten = true;
                    break;
                }
            }
            if !beaten {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Candidates that are `x`-preferred within the set and, among those,
    /// not dominated with respect to `prefs`.
    pub fn optimal_within(
        &mut self,
        candidates: &[Repair],
        x: Preference,
        prefs: &[Preference],
    ) -> Result<Vec<usize>, PreferenceError> {
        if prefs.contains(&x) {
            return Err(PreferenceError::OverlappingPreference(x));
        }
        let mut preferred = Vec::new();
        for i in 0..candidates.len() {
            let mut beaten = false;
            for j in 0..candidates.len() {
                if i != j && self.relate(&candidates[j], &candidates[i])?.strictly(x) {
                    beaten = true;
                    break;
                }
            }
            if !beaten {
                preferred.push(i);
            }
        }
        if prefs.is_empty() {
            return Ok(preferred);
        }
        self.undominated(candidates, &preferred, prefs)
    }

    /// Pairwise verdicts, certificates, skylines and optimal sets for named candidates.
    pub fn report(&mut self, named: &[(String, Repair)]) -> Result<PreferenceReport, PreferenceError> {
        let ids: Vec<String> = named.iter().map(|(id, _)| id.clone()).collect();
        let repairs: Vec<Repair> = named.iter().map(|(_, r)| r.clone()).collect();
        let mut matrix = BTreeMap::new();
        let mut certificates = BTreeMap::new();
        let mut verified = BTreeMap::new();
        for (i, r) in repairs.iter().enumerate() {
            let p = self.profile(r)?;
            certificates.insert(
                ids[i].clone(),
                Certificate {
                    maximally_complete: p.maximally_complete,
                    minimally_incorrect: p.minimally_incorrect,
                    entailed_true: p.entailed_true.len(),
                    entailed_false: p.entailed_false.len(),
                    oracle_unknown: p.oracle_unknown(),
                },
            );
            verified.insert(ids[i].clone(), verify_repair(self.cdp, r)?.is_repair);
            let mut row = BTreeMap::new();
            for (j, s) in repairs.iter().enumerate() {
                if i != j {
                    row.insert(ids[j].clone(), self.relate(r, s)?);
                }
            }
            matrix.insert(ids[i].clone(), row);
        }
        let subsets = preference_subsets();
        let mut skyline = BTreeMap::new();
        for ps in subsets.iter().filter(|ps| !ps.is_empty()) {
            let idx = self.skyline_within(&repairs, ps)?;
            skyline.insert(preference_key(ps), idx.into_iter().map(|i| ids[i].clone()).collect());
        }
        let mut optimal = BTreeMap::new();
        for x in Preference::ALL {
            for ps in subsets.iter().filter(|ps| !ps.contains(&x)) {
                let idx = self.optimal_within(&repairs, x, ps)?;
                let key = format!("{}|{}", preference_key(&[x]), preference_key(ps));
                optimal.insert(key, idx.into_iter().map(|i| ids[i].clone()).collect());
            }
        }
        Ok(PreferenceReport {
            schema: REPORT_SCHEMA.to_string(),
            universe_size: self.universe.len(),
            repairs: ids,
            verified,
            matrix,
            certificates,
            skyline,
            optimal,
        })
    }
}

fn preference_subsets() -> Vec<Vec<Preference>> {
    (0..8u8)
        .map(|mask| Preference::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &p)| p).collect())
        .collect()
}

fn preference_key(ps: &[Preference]) -> String {
    if ps.is_empty() {
        return "none".into();
    }
    ps.iter()
        .map(|p| match p {
            Preference::MoreComplete => "more_complete",
            Preference::LessIncorrect => "less_incorrect",
            Preference::Subset => "subset",
        })
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub maximally_complete: bool,
    pub minimally_incorrect: bool,
    pub entailed_true: usize,
    pub entailed_false: usize,
    pub oracle_unknown: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreferenceReport {
    pub schema: String,
    pub universe_size: usize,
    pub repairs: Vec<String>,
    pub verified: BTreeMap<String, bool>,
    /// `matrix[a][b]` relates repair `a` to repair `b`.
    pub matrix: BTreeMap<String, BTreeMap<String, PreferenceVerdict>>,
    pub certificates: BTreeMap<String, Certificate>,
    /// Keyed by the preference set, e.g. `more_complete+subset`.
    pub skyline: BTreeMap<String, Vec<String>>,
    /// Keyed by `selection|comparison`, e.g. `less_incorrect|more_complete`.
    pub optimal: BTreeMap<String, Vec<String>>,
}

pub fn entailment_profile(cdp: &Cdp, r: &Repair, universe: &AxiomUniverse) -> Result<EntailmentProfile, PreferenceError> {
    PreferenceContext::new(cdp, universe.clone())?.profile(r)
}

pub fn relate(cdp: &Cdp, first: &Repair, second: &Repair, universe: &AxiomUniverse) -> Result<PreferenceVerdict, PreferenceError> {
    PreferenceContext::new(cdp, universe.clone())?.relate(first, second)
}
