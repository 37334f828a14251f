//! Ontology networks: ontologies connected by alignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnosis::{minimal_hitting_sets, AxiomSet, ConflictCollection, ConflictKind, DiagnosisError};
use crate::oracle::{Oracle, OracleError, Verdict};
use crate::reasoner::{Reasoner, ReasonerError};
use crate::repair::{conflict_sets, Repair, RepairError};
use crate::syntax::{Axiom, AxiomId, Concept, Provenance, Signature, StatedAxiom, TBox};

/// Separator between ontology id and local name in a network TBox.
pub const QUALIFIER: &str = "__";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("mapping endpoint {ontology}:{concept} does not exist")]
    DanglingEndpoint { ontology: String, concept: String },
    #[error("mapping connects {0} with itself")]
    SameOntology(String),
    #[error("line {line}: {message}")]
    AlignmentSyntax { line: usize, message: String },
    #[error("confidence {0} outside [0, 1]")]
    BadConfidence(f64),
    #[error("every axiom of a conflict is oracle-true: {0}")]
    NoRepairWithoutCorrectRemoval(String),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingKind {
    Equivalence,
    IsA,
    InverseIsA,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub ontology: String,
    pub concept: String,
}

impl Endpoint {
    pub fn qualified(&self) -> String {
        qualify(&self.ontology, &self.concept)
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ontology, self.concept)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub left: Endpoint,
    pub right: Endpoint,
    pub kind: MappingKind,
    pub confidence: f64,
}

impl Mapping {
    /// The GCIs the mapping contributes, in qualified names.
    pub fn axioms(&self) -> Vec<Axiom> {
        let (l, r) = (self.left.qualified(), self.right.qualified());
        match self.kind {
            MappingKind::IsA => vec![Axiom::named(&l, &r)],
            MappingKind::InverseIsA => vec![Axiom::named(&r, &l)],
            MappingKind::Equivalence => vec![Axiom::named(&l, &r), Axiom::named(&r, &l)],
        }
    }
}

pub fn qualify(ontology: &str, name: &str) -> String {
    format!("{ontology}{QUALIFIER}{name}")
}

fn qualify_concept(ontology: &str, c: &Concept) -> Concept {
    match c {
        Concept::Top | Concept::Bottom => c.clone(),
        Concept::Atomic(n) => Concept::Atomic(qualify(ontology, n)),
        Concept::Not(x) => Concept::not(qualify_concept(ontology, x)),
        Concept::And(a, b) => Concept::and(qualify_concept(ontology, a), qualify_concept(ontology, b)),
        Concept::Or(a, b) => Concept::or(qualify_concept(ontology, a), qualify_concept(ontology, b)),
        Concept::Exists(r, x) => Concept::exists(qualify(ontology, r), qualify_concept(ontology, x)),
        Concept::Forall(r, x) => Concept::forall(qualify(ontology, r), qualify_concept(ontology, x)),
    }
}

pub fn qualify_axiom(ontology: &str, a: &Axiom) -> Axiom {
    match a {
        Axiom::Gci { lhs, rhs } => Axiom::gci(qualify_concept(ontology, lhs), qualify_concept(ontology, rhs)),
        Axiom::RoleInclusion { sub, sup } => Axiom::RoleInclusion { sub: qualify(ontology, sub), sup: qualify(ontology, sup) },
    }
}

#[derive(Debug, Clone, Default)]
pub struct OntologyNetwork {
    pub ontologies: BTreeMap<String, TBox>,
    pub alignments: BTreeMap<String, Vec<Mapping>>,
}

/// Where an axiom of the union TBox came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Ontology { ontology: String, axiom: AxiomId },
    Mapping { alignment: String, index: usize, confidence: f64 },
}

/// The union of a network as one TBox over qualified names.
#[derive(Debug, Clone)]
pub struct NetworkTBox {
    pub tbox: TBox,
    pub origins: BTreeMap<AxiomId, Origin>,
}

impl NetworkTBox {
    pub fn is_mapping(&self, id: AxiomId) -> bool {
        matches!(self.origins.get(&id), Some(Origin::Mapping { .. }))
    }

    fn confidence(&self, id: AxiomId) -> f64 {
        match self.origins.get(&id) {
            Some(Origin::Mapping { confidence, .. }) => *confidence,
            _ => 0.0,
        }
    }
}

impl OntologyNetwork {
    pub fn validate(&self) -> Result<(), NetworkError> {
        for mappings in self.alignments.values() {
            for m in mappings {
                if m.left.ontology == m.right.ontology {
                    return Err(NetworkError::SameOntology(m.left.ontology.clone()));
                }
                if !(0.0..=1.0).contains(&m.confidence) {
                    return Err(NetworkError::BadConfidence(m.confidence));
                }
                for e in [&m.left, &m.right] {
                    let known = self.ontologies.get(&e.ontology).is_some_and(|t| t.concept_names().contains(&e.concept));
                    if !known {
                        return Err(NetworkError::DanglingEndpoint { ontology: e.ontology.clone(), concept: e.concept.clone() });
                    }
                }
            }
        }
        Ok(())
    }

    fn mappings(&self) -> impl Iterator<Item = (&String, usize, &Mapping)> + '_ {
        self.alignments.iter().flat_map(|(id, ms)| ms.iter().enumerate().map(move |(i, m)| (id, i, m)))
    }
}

/// Ontology axioms and mapping axioms in one TBox.
pub fn network_to_tbox(network: &OntologyNetwork) -> Result<NetworkTBox, NetworkError> {
    network.validate()?;
    let mut stated = Vec::new();
    let mut origins = BTreeMap::new();
    let mut signature = Signature::default();
    let mut next = 1u32;
    for (oid, t) in &network.ontologies {
        for n in t.concept_names() {
            signature.concepts.insert(qualify(oid, n));
        }
        for r in t.role_names() {
            signature.roles.insert(qualify(oid, r));
        }
        for s in t.axioms() {
            let id = AxiomId(next);
            next += 1;
            stated.push(StatedAxiom { id, axiom: qualify_axiom(oid, &s.axiom), provenance: Provenance::Ontology(oid.clone()) });
            origins.insert(id, Origin::Ontology { ontology: oid.clone(), axiom: s.id });
        }
    }
    for (aid, index, m) in network.mappings() {
        for axiom in m.axioms() {
            let id = AxiomId(next);
            next += 1;
            stated.push(StatedAxiom { id, axiom, provenance: Provenance::Alignment(aid.clone()) });
            origins.insert(id, Origin::Mapping { alignment: aid.clone(), index, confidence: m.confidence });
        }
    }
    let tbox = TBox::new(stated, signature).expect("ids are sequential");
    Ok(NetworkTBox { tbox, origins })
}

/// An is-a relation that one ontology is missing, stated in its local names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LocalAxiom {
    pub ontology: String,
    pub axiom: Axiom,
}

/// Pairs of equivalence mappings `A≡A'`, `B≡B'` where one side has `A ⊑ B`
/// and the other lacks `A' ⊑ B'`.
pub fn detect_candidate_missing_isa(network: &OntologyNetwork) -> Result<Vec<LocalAxiom>, NetworkError> {
    network.validate()?;
    let mut reasoners: BTreeMap<&String, Reasoner> =
        network.ontologies.iter().map(|(id, t)| (id, Reasoner::new(t))).collect();
    let mut equivalences: Vec<(&Endpoint, &Endpoint)> = Vec::new();
    for (_, _, m) in network.mappings() {
        if m.kind == MappingKind::Equivalence {
            equivalences.push((&m.left, &m.right));
            equivalences.push((&m.right, &m.left));
        }
    }
    let mut out = BTreeSet::new();
    for &(a1, a2) in &equivalences {
        for &(b1, b2) in &equivalences {
            if a1.ontology != b1.ontology || a2.ontology != b2.ontology || a1.concept == b1.concept || a2.concept == b2.concept {
                continue;
            }
            let here = Axiom::named(&a1.concept, &b1.concept);
            let there = Axiom::named(&a2.concept, &b2.concept);
            if reasoners.get_mut(&a1.ontology).unwrap().entails(&here)?
                && !reasoners.get_mut(&a2.ontology).unwrap().entails(&there)?
            {
                out.insert(LocalAxiom { ontology: a2.ontology.clone(), axiom: there });
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Subsumptions between names of one ontology that only the network entails.
pub fn conservativity_violations(network: &OntologyNetwork) -> Result<Vec<LocalAxiom>, NetworkError> {
    let union = network_to_tbox(network)?;
    let mut whole = Reasoner::new(&union.tbox);
    let mut out = Vec::new();
    for (oid, t) in &network.ontologies {
        let mut local = Reasoner::new(t);
        for a in t.concept_names() {
            for b in t.concept_names() {
                if a == b {
                    continue;
                }
                let ax = Axiom::named(a, b);
                if whole.entails(&Axiom::named(&qualify(oid, a), &qualify(oid, b)))? && !local.entails(&ax)? {
                    out.push(LocalAxiom { ontology: oid.clone(), axiom: ax });
                }
            }
        }
    }
    Ok(out)
}

/// Deletions restoring the network, in qualified names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingRepair {
    pub repair: Repair,
    pub deleted_ontology_axioms: usize,
    pub deleted_mapping_axioms: usize,
    pub deleted_confidence: f64,
    /// Some conflict consists of ontology axioms only.
    pub ontology_edit_required: bool,
}

#[derive(Debug, Default)]
pub struct MappingRepairOptions<'a> {
    /// Qualified axioms that must not follow.
    pub wrong: Vec<Axiom>,
    /// Confirmed axioms are kept.
    pub oracle: Option<&'a Oracle>,
}

/// A minimal deletion preferring mapping axioms over ontology axioms, then
/// fewer deletions, then lower deleted confidence.
pub fn mapping_repair(network: &OntologyNetwork, options: &MappingRepairOptions<'_>) -> Result<MappingRepair, NetworkError> {
    let union = network_to_tbox(network)?;
    let conflicts = conflict_sets(&union.tbox, &options.wrong)?;
    let ontology_edit_required = conflicts.sets.iter().any(|s| s.iter().all(|id| !union.is_mapping(id)));
    let mut filtered = Vec::new();
    for set in &conflicts.sets {
        let mut kept = BTreeSet::new();
        for id in set.iter() {
            let axiom = &union.tbox.get(id).unwrap().axiom;
            let confirmed = match options.oracle {
                Some(o) => o.ask(axiom)? == Verdict::True,
                None => false,
            };
            if !confirmed {
                kept.insert(id);
            }
        }
        if kept.is_empty() {
            return Err(NetworkError::NoRepairWithoutCorrectRemoval(set.to_string()));
        }
        filtered.push(AxiomSet(kept));
    }
    let hitting = minimal_hitting_sets(&ConflictCollection::new(ConflictKind::Conflicts, filtered))?;
    let cost = |h: &AxiomSet| {
        let onto = h.iter().filter(|&id| !union.is_mapping(id)).count();
        let conf: f64 = h.iter().map(|id| union.confidence(id)).sum();
        (onto, h.len(), conf)
    };
    let best = hitting
        .sets
        .iter()
        .min_by(|a, b| {
            let (ca, cb) = (cost(a), cost(b));
            ca.0.cmp(&cb.0).then(ca.1.cmp(&cb.1)).then(ca.2.total_cmp(&cb.2)).then(a.cmp(b))
        })
        .cloned()
        .unwrap_or_default();
    let (onto, total, conf) = cost(&best);
    Ok(MappingRepair {
        repair: Repair::new([], best.iter().map(|id| union.tbox.get(id).unwrap().axiom.clone())),
        deleted_ontology_axioms: onto,
        deleted_mapping_axioms: total - onto,
        deleted_confidence: conf,
        ontology_edit_required,
    })
}

/// Parses lines like `O1:A equiv O2:B 0.95`; `isa` and `inverse-isa` are
/// also accepted and the confidence defaults to 1.
pub fn parse_alignment(text: &str) -> Result<Vec<Mapping>, NetworkError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: &str| NetworkError::AlignmentSyntax { line, message: message.to_string() };
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(err("expected `onto:concept relation onto:concept [confidence]`"));
        }
        let endpoint = |s: &str| -> Result<Endpoint, NetworkError> {
            let (o, c) = s.split_once(':').ok_or_else(|| err("endpoint must read ontology:concept"))?;
            if o.is_empty() || c.is_empty() {
                return Err(err("endpoint must read ontology:concept"));
            }
            Ok(Endpoint { ontology: o.to_string(), concept: c.to_string() })
        };
        let kind = match parts[1] {
            "equiv" => MappingKind::Equivalence,
            "isa" => MappingKind::IsA,
            "inverse-isa" => MappingKind::InverseIsA,
            other => return Err(err(&format!("unknown relation {other:?}"))),
        };
        let confidence = match parts.get(3) {
            Some(c) => c.parse::<f64>().map_err(|_| err("confidence must be a number"))?,
            None => 1.0,
        };
        if !(0.0..=1.0).contains(&confidence) {
            return Err(NetworkError::BadConfidence(confidence));
        }
        out.push(Mapping { left: endpoint(parts[0])?, right: endpoint(parts[2])?, kind, confidence });
    }
    Ok(out)
}
