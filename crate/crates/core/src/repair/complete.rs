//! Repairs that only add axioms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{verify_repair, Cdp, Repair, RepairError};
use crate::oracle::Verdict;
use crate::reasoner::Reasoner;
use crate::syntax::{Axiom, Concept, Provenance, TBox};

pub const DEFAULT_COMPLETION_ROUNDS: usize = 10;

/// How one candidate is picked among the validated ones for a missing axiom.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoicePolicy {
    /// The candidate entailing most other validated candidates, then the
    /// lexicographically smallest.
    #[default]
    MostGeneral,
    /// The missing axiom itself.
    MissingItself,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub axiom: Axiom,
    pub verdict: Verdict,
    /// Already follows from the problem's TBox.
    pub already_entailed: bool,
    /// Obtained by repairing the fillers of two existentials.
    pub lifted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateReport {
    pub missing: Axiom,
    pub candidates: Vec<Candidate>,
}

impl CandidateReport {
    fn with_verdict(&self, v: Verdict) -> Vec<&Candidate> {
        self.candidates.iter().filter(|c| c.verdict == v).collect()
    }

    pub fn validated(&self) -> Vec<&Candidate> {
        self.with_verdict(Verdict::True)
    }

    pub fn rejected(&self) -> Vec<&Candidate> {
        self.with_verdict(Verdict::False)
    }

    pub fn unknown(&self) -> Vec<&Candidate> {
        self.with_verdict(Verdict::Unknown)
    }
}

fn supported_side(c: &Concept) -> bool {
    matches!(c, Concept::Atomic(_)) || matches!(c, Concept::Exists(_, f) if matches!(**f, Concept::Atomic(_)))
}

/// Named concepts and `(role, filler)` existentials related to a concept.
type Related = (Vec<String>, Vec<(String, String)>);

struct Neighbourhood<'a> {
    reasoner: Reasoner,
    named: Vec<&'a String>,
    existentials: Vec<(String, String)>,
}

impl Neighbourhood<'_> {
    fn ex(role: &str, filler: &str) -> Concept {
        Concept::exists(role, Concept::atomic(filler))
    }

    fn above(&mut self, c: &Concept) -> Result<Related, RepairError> {
        let mut named = Vec::new();
        for x in &self.named {
            if self.reasoner.entails_open(&Axiom::gci(c.clone(), Concept::atomic(x.as_str())))? {
                named.push(x.to_string());
            }
        }
        let mut ex = Vec::new();
        for (r, x) in &self.existentials {
            if self.reasoner.entails_open(&Axiom::gci(c.clone(), Self::ex(r, x)))? {
                ex.push((r.clone(), x.clone()));
            }
        }
        Ok((named, ex))
    }

    fn below(&mut self, c: &Concept) -> Result<Related, RepairError> {
        let mut named = Vec::new();
        for x in &self.named {
            if self.reasoner.entails_open(&Axiom::gci(Concept::atomic(x.as_str()), c.clone()))? {
                named.push(x.to_string());
            }
        }
        let mut ex = Vec::new();
        for (r, x) in &self.existentials {
            if self.reasoner.entails_open(&Axiom::gci(Self::ex(r, x), c.clone()))? {
                ex.push((r.clone(), x.clone()));
            }
        }
        Ok((named, ex))
    }
}

fn pairs(sups: &[String], subs: &[String], out: &mut Vec<Axiom>) {
    for l in sups {
        for r in subs {
            if l != r {
                out.push(Axiom::named(l, r));
            }
        }
    }
}

/// Candidate additions for `m` over `base`, with a flag for lifted ones.
///
/// Direct candidates `X ⊑ Y` pair a named subsumer `X` of the left side with
/// a named subsumee `Y` of the right side. When the left side is below
/// `∃r.X` and the right side above `∃r.Y`, the candidates for `X ⊑ Y` are
/// added as lifted candidates.
pub fn candidate_axioms(base: &TBox, concepts: &BTreeSet<String>, m: &Axiom) -> Result<Vec<(Axiom, bool)>, RepairError> {
    let Some((lhs, rhs)) = m.sides() else {
        return Err(RepairError::UnsupportedShape(m.clone()));
    };
    if !supported_side(lhs) || !supported_side(rhs) {
        return Err(RepairError::UnsupportedShape(m.clone()));
    }
    let mut reasoner = Reasoner::new(base);
    let mut named = Vec::new();
    for c in concepts {
        if reasoner.is_satisfiable(&Concept::atomic(c.as_str()))? {
            named.push(c);
        }
    }
    let existentials: Vec<(String, String)> = base
        .role_names()
        .iter()
        .flat_map(|r| named.iter().map(move |x| (r.clone(), x.to_string())))
        .collect();
    let mut batch = Vec::new();
    for side in [lhs, rhs] {
        for x in &named {
            batch.push(Axiom::gci(side.clone(), Concept::atomic(x.as_str())));
            batch.push(Axiom::gci(Concept::atomic(x.as_str()), side.clone()));
        }
        for (r, x) in &existentials {
            batch.push(Axiom::gci(side.clone(), Neighbourhood::ex(r, x)));
            batch.push(Axiom::gci(Neighbourhood::ex(r, x), side.clone()));
        }
    }
    for x in &named {
        for y in &named {
            batch.push(Axiom::named(x, y));
        }
    }
    reasoner.entails_all(&batch)?;
    let mut hood = Neighbourhood { reasoner, named, existentials };

    let (sup_named, sup_ex) = hood.above(lhs)?;
    let (sub_named, sub_ex) = hood.below(rhs)?;
    let mut direct = Vec::new();
    pairs(&sup_named, &sub_named, &mut direct);
    if !direct.contains(m) {
        direct.push(m.clone());
    }
    direct.sort_by_cached_key(|a| a.to_string());

    let mut lifted = Vec::new();
    for (r1, x) in &sup_ex {
        for (r2, y) in &sub_ex {
            if r1 != r2 || x == y {
                continue;
            }
            let (above_x, _) = hood.above(&Concept::atomic(x.as_str()))?;
            let (below_y, _) = hood.below(&Concept::atomic(y.as_str()))?;
            pairs(&above_x, &below_y, &mut lifted);
        }
    }
    lifted.sort_by_cached_key(|a| a.to_string());
    lifted.dedup();
    lifted.retain(|a| !direct.contains(a));

    Ok(direct.into_iter().map(|a| (a, false)).chain(lifted.into_iter().map(|a| (a, true))).collect())
}

/// Oracle-checked candidates for `m`, generated over the TBox together with
/// all missing axioms.
pub fn completion_candidates(cdp: &Cdp, m: &Axiom) -> Result<CandidateReport, RepairError> {
    let base = cdp.tbox.with_added(&cdp.missing, &Provenance::Added("missing".into()));
    let generated = candidate_axioms(&base, cdp.concepts(), m)?;
    let mut reasoner = Reasoner::new(&cdp.tbox);
    let mut candidates = Vec::new();
    for (axiom, lifted) in generated {
        let verdict = cdp.oracle.ask(&axiom)?;
        let already_entailed = reasoner.entails_open(&axiom)?;
        candidates.push(Candidate { axiom, verdict, already_entailed, lifted });
    }
    Ok(CandidateReport { missing: m.clone(), candidates })
}

/// Picks a validated candidate that makes `current` entail `m`.
pub fn choose_candidate(
    current: &TBox,
    m: &Axiom,
    validated: &[Axiom],
    policy: ChoicePolicy,
) -> Result<Option<Axiom>, RepairError> {
    if policy == ChoicePolicy::MissingItself {
        return Ok(validated.contains(m).then(|| m.clone()));
    }
    let mut best: Option<(usize, String, Axiom)> = None;
    for c in validated {
        let mut r = Reasoner::new(&current.with_added([c], &Provenance::Added("candidate".into())));
        if !r.entails_open(m)? {
            continue;
        }
        let mut score = 0;
        for v in validated {
            if r.entails_open(v)? {
                score += 1;
            }
        }
        let text = c.to_string();
        let better = match &best {
            None => true,
            Some((s, t, _)) => score > *s || (score == *s && text < *t),
        };
        if better {
            best = Some((score, text, c.clone()));
        }
    }
    Ok(best.map(|(_, _, c)| c))
}

/// Additions making `working` entail every axiom in `missing`.
pub(crate) fn complete_on(
    cdp: &Cdp,
    working: &TBox,
    missing: &[Axiom],
    policy: ChoicePolicy,
    max_rounds: usize,
) -> Result<Vec<Axiom>, RepairError> {
    let provenance = Provenance::Added("completion".into());
    let mut reasoner = Reasoner::new(working);
    let mut targets = Vec::new();
    for m in missing {
        if !reasoner.entails_open(m)? {
            targets.push(m.clone());
        }
    }
    let mut added: Vec<Axiom> = Vec::new();
    for round in 0..max_rounds {
        let mut fresh: Vec<Axiom> = Vec::new();
        for m in &targets {
            let current = working.with_added(added.iter().chain(&fresh), &provenance);
            let base = current.with_added(missing.iter().chain(&targets), &provenance);
            // later rounds look for axioms that explain an earlier addition
            let context = working.with_added(added.iter().chain(&fresh).filter(|a| *a != m), &provenance);
            let mut now = Reasoner::new(&current);
            let mut validated = Vec::new();
            for (c, _) in candidate_axioms(&base, cdp.concepts(), m)? {
                let fresh_content = round == 0 || !now.entails_open(&c)?;
                if fresh_content && cdp.policy.may_add(cdp.oracle.ask(&c)?) {
                    validated.push(c);
                }
            }
            match choose_candidate(&context, m, &validated, policy)? {
                Some(c) => {
                    if !current.contains(&c) && !fresh.contains(&c) {
                        fresh.push(c);
                    }
                }
                None if round == 0 => return Err(RepairError::UnrepairableMissing(m.clone())),
                None => {}
            }
        }
        if fresh.is_empty() {
            break;
        }
        added.extend(fresh.iter().cloned());
        targets = fresh;
    }
    Ok(added)
}

/// Addition-only repair of a problem with no wrong axioms.
pub fn complete_repair(cdp: &Cdp, policy: ChoicePolicy, max_rounds: usize) -> Result<Repair, RepairError> {
    if !cdp.wrong.is_empty() {
        return Err(RepairError::Precondition("completion expects no wrong axioms".into()));
    }
    if max_rounds == 0 {
        return Err(RepairError::Precondition("at least one round is required".into()));
    }
    let added = complete_on(cdp, &cdp.tbox, &cdp.missing, policy, max_rounds)?;
    let repair = Repair::new(added, []);
    if !verify_repair(cdp, &repair)?.is_repair {
        return Err(RepairError::NoRepairFound { rounds: max_rounds });
    }
    Ok(repair)
}
