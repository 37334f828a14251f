//! Entailment checking over TBoxes.
//!
//! EL inputs are answered by saturation, everything else by the tableau.

mod el;
mod tableau;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{Axiom, Concept, Signature, TBox};

use el::ElSaturation;
use tableau::Tableau;

/// Per-query ceiling on tableau nodes.
pub const DEFAULT_NODE_LIMIT: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReasonerError {
    #[error("symbol {0:?} is not in the TBox signature")]
    UnknownSymbol(String),
    #[error("input is outside the EL fragment")]
    NotElFragment,
    #[error("tableau exceeded {limit} nodes")]
    ResourceExceeded { limit: usize },
}

/// Named subsumers of every concept name, `top` included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub subsumers: BTreeMap<String, BTreeSet<String>>,
}

impl Classification {
    pub fn subsumes(&self, sub: &str, sup: &str) -> bool {
        self.subsumers.get(sub).is_some_and(|s| s.contains(sup))
    }
}

/// A TBox prepared for repeated entailment queries.
pub struct Reasoner {
    axioms: Vec<Axiom>,
    signature: Signature,
    is_el: bool,
    role_sups: BTreeMap<String, BTreeSet<String>>,
    el: Option<ElSaturation>,
    tableau: Option<Tableau>,
    memo: HashMap<Axiom, bool>,
    node_limit: usize,
}

impl Reasoner {
    pub fn new(t: &TBox) -> Self {
        Self::with_node_limit(t, DEFAULT_NODE_LIMIT)
    }

    pub fn with_node_limit(t: &TBox, node_limit: usize) -> Self {
        let axioms: Vec<Axiom> = t.logical_axioms().cloned().collect();
        let mut role_sups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in t.role_names() {
            role_sups.entry(r.clone()).or_default().insert(r.clone());
        }
        loop {
            let mut changed = false;
            for ax in &axioms {
                if let Axiom::RoleInclusion { sub, sup } = ax {
                    let above = role_sups.get(sup).cloned().unwrap_or_default();
                    let entry = role_sups.entry(sub.clone()).or_default();
                    for s in above {
                        changed |= entry.insert(s);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Reasoner {
            is_el: t.is_el(),
            axioms,
            signature: t.signature().clone(),
            role_sups,
            el: None,
            tableau: None,
            memo: HashMap::new(),
            node_limit,
        }
    }

    /// Answers every query with the tableau, even on EL input.
    pub fn tableau_only(mut self) -> Self {
        self.is_el = false;
        self
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Total tableau nodes created so far.
    pub fn tableau_nodes(&self) -> usize {
        self.tableau.as_ref().map_or(0, |t| t.nodes_created)
    }

    fn check_symbols(&self, a: &Axiom) -> Result<(), ReasonerError> {
        let sig = a.signature();
        if let Some(n) = sig.concepts.iter().find(|n| !self.signature.concepts.contains(*n)) {
            return Err(ReasonerError::UnknownSymbol(n.clone()));
        }
        if let Some(r) = sig.roles.iter().find(|r| !self.signature.roles.contains(*r)) {
            return Err(ReasonerError::UnknownSymbol(r.clone()));
        }
        Ok(())
    }

    /// `T ⊨ a`; names outside the signature are rejected.
    pub fn entails(&mut self, a: &Axiom) -> Result<bool, ReasonerError> {
        self.check_symbols(a)?;
        self.entails_open(a)
    }

    /// `T ⊨ a`, treating unknown names as fresh.
    pub fn entails_open(&mut self, a: &Axiom) -> Result<bool, ReasonerError> {
        if let Some(&v) = self.memo.get(a) {
            return Ok(v);
        }
        let v = match a {
            Axiom::RoleInclusion { sub, sup } => {
                sub == sup || self.role_sups.get(sub).is_some_and(|s| s.contains(sup))
            }
            Axiom::Gci { lhs, rhs } => self.subsumes(lhs, rhs)?,
        };
        self.memo.insert(a.clone(), v);
        Ok(v)
    }

    /// Answers a batch of queries, sharing one saturation on EL inputs.
    pub fn entails_all(&mut self, axioms: &[Axiom]) -> Result<Vec<bool>, ReasonerError> {
        if self.is_el {
            let concepts: Vec<&Concept> = axioms
                .iter()
                .filter(|a| a.is_el() && !self.memo.contains_key(*a))
                .filter_map(|a| a.sides())
                .flat_map(|(l, r)| [l, r])
                .collect();
            if !concepts.is_empty() {
                self.el().prepare(concepts);
            }
        }
        axioms.iter().map(|a| self.entails_open(a)).collect()
    }

    fn el(&mut self) -> &mut ElSaturation {
        let axioms = &self.axioms;
        self.el.get_or_insert_with(|| ElSaturation::new(axioms))
    }

    fn tableau(&mut self) -> &mut Tableau {
        let axioms = &self.axioms;
        let limit = self.node_limit;
        self.tableau.get_or_insert_with(|| Tableau::new(axioms, limit))
    }

    fn subsumes(&mut self, lhs: &Concept, rhs: &Concept) -> Result<bool, ReasonerError> {
        if lhs == rhs || *rhs == Concept::Top || *lhs == Concept::Bottom {
            return Ok(true);
        }
        if self.is_el {
            if lhs.is_el() && rhs.is_el() {
                return Ok(self.el().subsumes(lhs, rhs));
            }
            // EL concepts are satisfiable with respect to EL TBoxes
            if lhs.is_el() && *rhs == Concept::Bottom {
                return Ok(false);
            }
        }
        let query = Concept::and(lhs.clone(), Concept::not(rhs.clone()));
        let limit = self.node_limit;
        let sat = self.tableau().satisfiable(&query).map_err(|_| ReasonerError::ResourceExceeded { limit })?;
        Ok(!sat)
    }

    pub fn is_satisfiable(&mut self, c: &Concept) -> Result<bool, ReasonerError> {
        Ok(!self.entails_open(&Axiom::gci(c.clone(), Concept::Bottom))?)
    }

    pub fn is_consistent(&mut self) -> Result<bool, ReasonerError> {
        self.is_satisfiable(&Concept::Top)
    }

    /// Concept names `P` with `T ⊨ P ⊑ ⊥`, sorted.
    pub fn unsatisfiable_concepts(&mut self) -> Result<Vec<String>, ReasonerError> {
        let names: Vec<String> = self.signature.concepts.iter().cloned().collect();
        let mut out = Vec::new();
        for n in names {
            if !self.is_satisfiable(&Concept::Atomic(n.clone()))? {
                out.push(n);
            }
        }
        Ok(out)
    }

    pub fn classify(&mut self) -> Result<Classification, ReasonerError> {
        if !self.is_el {
            return Err(ReasonerError::NotElFragment);
        }
        let names: Vec<Concept> = self.signature.concepts.iter().map(|n| Concept::Atomic(n.clone())).collect();
        self.el().prepare(names.iter());
        let mut subsumers: BTreeMap<String, BTreeSet<String>> = self
            .el()
            .taxonomy()
            .into_iter()
            .map(|(n, sups)| (n, sups.into_iter().collect()))
            .collect();
        subsumers.retain(|n, _| self.signature.concepts.contains(n));
        for sups in subsumers.values_mut() {
            sups.retain(|s| s == "top" || self.signature.concepts.contains(s));
        }
        Ok(Classification { subsumers })
    }
}

pub fn entails(t: &TBox, a: &Axiom) -> Result<bool, ReasonerError> {
    Reasoner::new(t).entails(a)
}

pub fn is_consistent(t: &TBox) -> Result<bool, ReasonerError> {
    Reasoner::new(t).is_consistent()
}

pub fn unsatisfiable_concepts(t: &TBox) -> Result<Vec<String>, ReasonerError> {
    Reasoner::new(t).unsatisfiable_concepts()
}

pub fn classify(t: &TBox) -> Result<Classification, ReasonerError> {
    Reasoner::new(t).classify()
}
