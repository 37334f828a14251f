//! Event-sourced repair sessions.
//!
//! Every request becomes an input event; the engine then recomputes the
//! pending queries and the candidate repairs from the inputs alone. Replaying
//! the inputs of a log therefore regenerates the whole log.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use ontorepair_core::diagnosis::rank_axioms_by_mips_arity;
use ontorepair_core::preferences::{AxiomUniverse, PreferenceContext, PreferenceReport};
use ontorepair_core::reasoner::Reasoner;
use ontorepair_core::repair::{
    apply_repair, candidate_axioms, combined_repair, complete_repair, conflict_sets, debug_repairs, verify_repair,
    ChoicePolicy, CombinedOptions, DebugMode, DEFAULT_COMPLETION_ROUNDS,
};
use ontorepair_core::{
    parse_axiom, parse_tbox, Axiom, AxiomId, Cdp, NamedRepair, Oracle, Provenance, Repair, RepairError, TBox, UnknownPolicy,
    VerificationReport, Verdict,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Event, EventKind};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("replay diverged at event {seq}")]
    ReplayDiverged { seq: usize },
    #[error("engine failure: {0}")]
    Engine(String),
}

impl SessionError {
    fn engine(e: impl std::fmt::Display) -> Self {
        SessionError::Engine(e.to_string())
    }
}

/// Order in which conflict axioms are asked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictOrder {
    /// Axioms occurring in more conflicts first.
    #[default]
    MipsArity,
    /// TBox order.
    Stated,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionOptions {
    pub policy: UnknownPolicy,
    /// Candidate repairs supplied up front, offered once they verify.
    pub repairs: Vec<NamedRepair>,
    /// Ids of axioms that must not be deleted.
    pub protected: Vec<u32>,
    pub conflict_order: Option<ConflictOrder>,
}

/// The create request as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub tbox: String,
    #[serde(default)]
    pub missing: Vec<String>,
    #[serde(default)]
    pub wrong: Vec<String>,
    #[serde(default)]
    pub options: SessionOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Detecting,
    Validating,
    Repairing,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryReason {
    /// Confirms a reported missing axiom.
    Missing,
    /// Confirms a reported wrong axiom.
    Wrong,
    Conflict { arity: usize },
    Candidate { missing: Axiom },
    /// Needed while constructing or verifying repairs.
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub axiom: Axiom,
    pub reason: QueryReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairStatus {
    /// Supplied at creation and not yet verified.
    Seeded,
    Active,
    /// Verified once, no longer after a revision.
    Stale,
    Executed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairEntry {
    pub id: String,
    #[serde(flatten)]
    pub repair: Repair,
    pub status: RepairStatus,
    pub verification: Option<VerificationReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Defects,
    Axioms,
    Construction,
    Ready,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerRecord {
    pub axiom: Axiom,
    pub verdict: Verdict,
}

/// The externally visible state of a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub phase: Phase,
    pub axioms: usize,
    pub missing: Vec<Axiom>,
    pub wrong: Vec<Axiom>,
    pub pending: Vec<Query>,
    pub answers: Vec<AnswerRecord>,
    pub repairs: Vec<RepairEntry>,
    pub executed: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairDelta {
    pub enabled: Vec<String>,
    pub disabled: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerOutcome {
    pub phase: Phase,
    pub pending: Vec<Query>,
    pub repairs: RepairDelta,
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecuteOutcome {
    pub id: String,
    pub result: String,
}

pub struct Session {
    id: String,
    spec: SessionSpec,
    tbox: TBox,
    missing: Vec<Axiom>,
    wrong: Vec<Axiom>,
    protected: BTreeSet<AxiomId>,
    answers: BTreeMap<Axiom, Verdict>,
    issued: BTreeSet<Axiom>,
    pending: Vec<Query>,
    stage: Stage,
    defect_free: bool,
    repairs: Vec<RepairEntry>,
    notes: Vec<String>,
    executed: Option<String>,
    result: Option<String>,
    events: Vec<Event>,
}

fn parse_list(field: &str, items: &[String]) -> Result<Vec<Axiom>, SessionError> {
    items
        .iter()
        .map(|s| parse_axiom(s).map_err(|e| SessionError::Parse { field: field.into(), message: e.to_string() }))
        .collect()
}

fn push_unique(out: &mut Vec<Query>, axiom: &Axiom, reason: QueryReason) {
    if !out.iter().any(|q| &q.axiom == axiom) {
        out.push(Query { axiom: axiom.clone(), reason });
    }
}

impl Session {
    pub fn create(id: &str, spec: SessionSpec, at: &str) -> Result<Session, SessionError> {
        let tbox = parse_tbox(&spec.tbox).map_err(|e| SessionError::Parse { field: "tbox".into(), message: e.to_string() })?;
        let missing = parse_list("missing", &spec.missing)?;
        let wrong = parse_list("wrong", &spec.wrong)?;
        for a in missing.iter().chain(&wrong) {
            let sig = a.signature();
            if !tbox.signature().contains_all(&sig) {
                return Err(SessionError::Parse { field: "defects".into(), message: format!("{a} uses names outside the TBox signature") });
            }
        }
        if let Some(a) = missing.iter().find(|a| wrong.contains(a)) {
            return Err(SessionError::BadRequest(format!("{a} is both missing and wrong")));
        }
        let mut protected = BTreeSet::new();
        for &p in &spec.options.protected {
            if tbox.get(AxiomId(p)).is_none() {
                return Err(SessionError::BadRequest(format!("protected axiom ax{p} is not in the TBox")));
            }
            protected.insert(AxiomId(p));
        }
        let mut seen = BTreeSet::new();
        let repairs = spec
            .options
            .repairs
            .iter()
            .map(|n| {
                if !seen.insert(n.id.clone()) {
                    return Err(SessionError::BadRequest(format!("repair id {} given twice", n.id)));
                }
                Ok(RepairEntry { id: n.id.clone(), repair: n.repair.clone().canonical(), status: RepairStatus::Seeded, verification: None })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut session = Session {
            id: id.to_string(),
            spec: spec.clone(),
            tbox,
            missing,
            wrong,
            protected,
            answers: BTreeMap::new(),
            issued: BTreeSet::new(),
            pending: Vec::new(),
            stage: Stage::Defects,
            defect_free: false,
            repairs,
            notes: Vec::new(),
            executed: None,
            result: None,
            events: Vec::new(),
        };
        session.log(at, EventKind::TBoxLoaded { session: id.to_string(), spec });
        session.refresh(at)?;
        Ok(session)
    }

    /// Rebuilds a session from its log and checks that the derived events match.
    pub fn replay(events: &[Event]) -> Result<Session, SessionError> {
        let Some(Event { at, kind: EventKind::TBoxLoaded { session, spec }, .. }) = events.first() else {
            return Err(SessionError::ReplayDiverged { seq: 0 });
        };
        let mut s = Session::create(session, spec.clone(), at)?;
        for e in &events[1..] {
            match &e.kind {
                EventKind::AnswerReceived { axiom, verdict } => {
                    s.answer(axiom, *verdict, false, &e.at)?;
                }
                EventKind::AnswerRevised { axiom, verdict, .. } => {
                    s.answer(axiom, *verdict, true, &e.at)?;
                }
                EventKind::RepairExecuted { id } => {
                    s.execute(id, &e.at)?;
                }
                _ => {}
            }
        }
        if let Some(seq) = (0..events.len().max(s.events.len())).find(|&i| events.get(i) != s.events.get(i)) {
            return Err(SessionError::ReplayDiverged { seq });
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn result(&self) -> Option<&str> {
        self.result.as_deref()
    }

    pub fn pending(&self) -> &[Query] {
        &self.pending
    }

    pub fn phase(&self) -> Phase {
        if self.executed.is_some() {
            return Phase::Done;
        }
        match self.stage {
            Stage::Defects => Phase::Detecting,
            Stage::Axioms | Stage::Construction => Phase::Validating,
            Stage::Ready if self.defect_free => Phase::Done,
            Stage::Ready => Phase::Repairing,
        }
    }

    pub fn view(&self) -> SessionView {
        let (missing, wrong) = self.defects();
        SessionView {
            id: self.id.clone(),
            phase: self.phase(),
            axioms: self.tbox.len(),
            missing,
            wrong,
            pending: self.pending.clone(),
            answers: self.answers.iter().map(|(a, v)| AnswerRecord { axiom: a.clone(), verdict: *v }).collect(),
            repairs: self.repairs.clone(),
            executed: self.executed.clone(),
            notes: self.notes.clone(),
        }
    }

    pub fn repairs(&self) -> &[RepairEntry] {
        &self.repairs
    }

    fn log(&mut self, at: &str, kind: EventKind) {
        let seq = self.events.len();
        self.events.push(Event { seq, at: at.to_string(), kind });
    }

    /// Reported defects the expert has not rejected.
    fn defects(&self) -> (Vec<Axiom>, Vec<Axiom>) {
        let rejected = |a: &Axiom, bad: Verdict| self.answers.get(a) == Some(&bad);
        (
            self.missing.iter().filter(|a| !rejected(a, Verdict::False)).cloned().collect(),
            self.wrong.iter().filter(|a| !rejected(a, Verdict::True)).cloned().collect(),
        )
    }

    fn problem(&self, oracle: Arc<Oracle>) -> Result<Cdp, SessionError> {
        let (missing, wrong) = self.defects();
        Ok(Cdp::new(self.tbox.clone(), oracle, missing, wrong)
            .and_then(|c| c.with_protected(self.protected.iter().copied()))
            .map_err(SessionError::engine)?
            .with_policy(self.spec.options.policy))
    }

    fn answer_oracle(&self) -> Arc<Oracle> {
        Arc::new(Oracle::with_answers(&self.id, self.answers.iter().map(|(a, v)| (a.clone(), *v))))
    }

    pub fn answer(&mut self, axiom: &Axiom, verdict: Verdict, revise: bool, at: &str) -> Result<AnswerOutcome, SessionError> {
        if self.executed.is_some() {
            return Err(SessionError::Conflict("the session has already executed a repair".into()));
        }
        let previous = self.answers.get(axiom).copied();
        let is_pending = self.pending.iter().any(|q| &q.axiom == axiom);
        let before: BTreeSet<String> = self.active_ids();
        match previous {
            Some(prev) if revise => {
                self.log(at, EventKind::AnswerRevised { axiom: axiom.clone(), verdict, previous: prev });
            }
            Some(_) => return Err(SessionError::Conflict(format!("{axiom} was already answered; set revise to change it"))),
            None if is_pending => {
                self.log(at, EventKind::AnswerReceived { axiom: axiom.clone(), verdict });
            }
            None => return Err(SessionError::Conflict(format!("{axiom} is not pending"))),
        }
        self.answers.insert(axiom.clone(), verdict);
        self.refresh(at)?;
        let after = self.active_ids();
        Ok(AnswerOutcome {
            phase: self.phase(),
            pending: self.pending.clone(),
            repairs: RepairDelta {
                enabled: after.difference(&before).cloned().collect(),
                disabled: before.difference(&after).cloned().collect(),
            },
            stale: previous.is_some_and(|p| p != verdict),
        })
    }

    pub fn execute(&mut self, id: &str, at: &str) -> Result<ExecuteOutcome, SessionError> {
        if self.executed.is_some() {
            return Err(SessionError::Conflict("a repair was already executed".into()));
        }
        let Some(idx) = self.repairs.iter().position(|r| r.id == id) else {
            return Err(SessionError::NotFound(format!("unknown repair {id}")));
        };
        if self.repairs[idx].status != RepairStatus::Active {
            return Err(SessionError::Conflict(format!("repair {id} is not currently verified")));
        }
        let cdp = self.problem(self.answer_oracle())?;
        let repair = self.repairs[idx].repair.clone();
        let report = verify_repair(&cdp, &repair).map_err(SessionError::engine)?;
        if !report.is_repair {
            return Err(SessionError::Conflict(format!("repair {id} no longer verifies")));
        }
        let repaired = apply_repair(&self.tbox, &repair).map_err(SessionError::engine)?;
        self.log(at, EventKind::RepairExecuted { id: id.to_string() });
        self.repairs[idx].status = RepairStatus::Executed;
        self.executed = Some(id.to_string());
        self.pending.clear();
        let text = repaired.to_canonical_string();
        self.result = Some(text.clone());
        Ok(ExecuteOutcome { id: id.to_string(), result: text })
    }

    fn active_ids(&self) -> BTreeSet<String> {
        self.repairs.iter().filter(|r| r.status == RepairStatus::Active).map(|r| r.id.clone()).collect()
    }

    /// Recomputes queries and candidates from the current answers.
    fn refresh(&mut self, at: &str) -> Result<(), SessionError> {
        let check = self.problem(self.answer_oracle())?;
        for entry in &mut self.repairs {
            if entry.status == RepairStatus::Active {
                let report = verify_repair(&check, &entry.repair).map_err(SessionError::engine)?;
                if !report.is_repair {
                    entry.status = RepairStatus::Stale;
                }
                entry.verification = Some(report);
            }
        }
        self.notes.clear();
        let mut queries = Vec::new();
        for a in &self.missing {
            if !self.answers.contains_key(a) {
                push_unique(&mut queries, a, QueryReason::Missing);
            }
        }
        for a in &self.wrong {
            if !self.answers.contains_key(a) {
                push_unique(&mut queries, a, QueryReason::Wrong);
            }
        }
        self.stage = Stage::Defects;
        if queries.is_empty() {
            self.stage = Stage::Axioms;
            queries = self.axiom_queries(&check)?;
        }
        if queries.is_empty() {
            self.stage = Stage::Construction;
            let oracle = self.answer_oracle();
            let cdp = self.problem(oracle.clone())?;
            let built = self.construct(&cdp)?;
            for a in oracle.requested() {
                if !self.answers.contains_key(&a) {
                    push_unique(&mut queries, &a, QueryReason::Repair);
                }
            }
            if queries.is_empty() {
                self.stage = Stage::Ready;
                self.defect_free = verify_repair(&check, &Repair::empty()).map_err(SessionError::engine)?.is_repair;
                self.offer(&check, built, at)?;
            }
        }
        for q in &queries {
            if self.issued.insert(q.axiom.clone()) {
                self.log(at, EventKind::QueryIssued { axiom: q.axiom.clone() });
            }
        }
        self.pending = queries;
        Ok(())
    }

    /// Unanswered conflict axioms by rank, then completion candidates.
    fn axiom_queries(&self, cdp: &Cdp) -> Result<Vec<Query>, SessionError> {
        let mut out = Vec::new();
        let conflicts = conflict_sets(&self.tbox, &cdp.wrong).map_err(SessionError::engine)?;
        let mut ranked = rank_axioms_by_mips_arity(&conflicts);
        if self.spec.options.conflict_order == Some(ConflictOrder::Stated) {
            ranked.sort_by_key(|(id, _)| *id);
        }
        for (id, arity) in ranked {
            if self.protected.contains(&id) {
                continue;
            }
            let axiom = &self.tbox.get(id).expect("conflict ids come from the TBox").axiom;
            if !self.answers.contains_key(axiom) {
                push_unique(&mut out, axiom, QueryReason::Conflict { arity });
            }
        }
        let base = self.tbox.with_added(&cdp.missing, &Provenance::Added("missing".into()));
        let mut reasoner = Reasoner::new(&self.tbox);
        for m in &cdp.missing {
            if reasoner.entails_open(m).map_err(SessionError::engine)? {
                continue;
            }
            let candidates = match candidate_axioms(&base, cdp.concepts(), m) {
                Ok(c) => c,
                // shapes outside the completion fragment get no candidates
                Err(RepairError::UnsupportedShape(_)) => Vec::new(),
                Err(e) => return Err(SessionError::engine(e)),
            };
            for (c, _) in candidates {
                if !self.answers.contains_key(&c) {
                    push_unique(&mut out, &c, QueryReason::Candidate { missing: m.clone() });
                }
            }
        }
        Ok(out)
    }

    /// Repairs built from debugging followed by completion, plus the
    /// combined strategy; failures are kept as notes.
    fn construct(&mut self, cdp: &Cdp) -> Result<Vec<Repair>, SessionError> {
        let mut out: Vec<Repair> = Vec::new();
        let push = |r: Repair, out: &mut Vec<Repair>| {
            if !out.contains(&r) {
                out.push(r);
            }
        };
        for mode in [DebugMode::RemoveAllFalse, DebugMode::HittingSet] {
            let deletions = match debug_repairs(cdp, mode) {
                Ok(d) if d.is_empty() => vec![Repair::empty()],
                Ok(d) => d,
                Err(e) => {
                    self.notes.push(format!("debugging ({mode:?}): {e}"));
                    continue;
                }
            };
            for d in deletions {
                if cdp.missing.is_empty() {
                    push(d, &mut out);
                    continue;
                }
                let rest = match apply_repair(&cdp.tbox, &d) {
                    Ok(t) => t,
                    Err(e) => {
                        self.notes.push(format!("debugging ({mode:?}): {e}"));
                        continue;
                    }
                };
                let sub = cdp.with_defects(rest, cdp.missing.clone(), Vec::new());
                match complete_repair(&sub, ChoicePolicy::MostGeneral, DEFAULT_COMPLETION_ROUNDS) {
                    Ok(a) => push(Repair::new(a.add().to_vec(), d.delete().to_vec()), &mut out),
                    Err(e) => self.notes.push(format!("completion after {mode:?}: {e}")),
                }
            }
        }
        match combined_repair(cdp, CombinedOptions::default()) {
            Ok(r) => push(r, &mut out),
            Err(e) => self.notes.push(format!("combined: {e}")),
        }
        for entry in &self.repairs {
            if entry.status == RepairStatus::Seeded {
                verify_repair(cdp, &entry.repair).map_err(SessionError::engine)?;
            }
        }
        Ok(out)
    }

    /// Offers every verified repair, reusing ids for known content.
    fn offer(&mut self, cdp: &Cdp, built: Vec<Repair>, at: &str) -> Result<(), SessionError> {
        let mut proposals = Vec::new();
        for idx in 0..self.repairs.len() {
            let entry = &self.repairs[idx];
            if matches!(entry.status, RepairStatus::Seeded | RepairStatus::Stale) {
                let report = verify_repair(cdp, &entry.repair).map_err(SessionError::engine)?;
                if report.is_repair {
                    proposals.push(idx);
                }
                self.repairs[idx].verification = Some(report);
            }
        }
        for r in built {
            if self.repairs.iter().any(|e| e.repair == r) {
                continue;
            }
            let report = verify_repair(cdp, &r).map_err(SessionError::engine)?;
            if !report.is_repair {
                self.notes.push(format!("constructed candidate {} did not verify", describe(&r)));
                continue;
            }
            let id = self.fresh_id();
            self.repairs.push(RepairEntry { id, repair: r, status: RepairStatus::Seeded, verification: Some(report) });
            proposals.push(self.repairs.len() - 1);
        }
        for idx in proposals {
            self.repairs[idx].status = RepairStatus::Active;
            let (id, repair) = (self.repairs[idx].id.clone(), self.repairs[idx].repair.clone());
            self.log(at, EventKind::RepairProposed { id, repair });
        }
        Ok(())
    }

    fn fresh_id(&self) -> String {
        (1..).map(|n| format!("R{n}")).find(|id| self.repairs.iter().all(|e| &e.id != id)).expect("unbounded")
    }

    /// Pairwise preferences over the currently verified repairs.
    ///
    /// Axioms the expert has not judged are settled from the answers where
    /// possible: true when the confirmed axioms entail them, false when adding
    /// them to the confirmed axioms entails a rejected one.
    pub fn analysis(&self) -> Result<PreferenceReport, SessionError> {
        let named: Vec<(String, Repair)> =
            self.repairs.iter().filter(|r| r.status == RepairStatus::Active).map(|r| (r.id.clone(), r.repair.clone())).collect();
        if named.is_empty() {
            return Err(SessionError::Conflict("no verified candidate repairs yet".into()));
        }
        let plain = self.problem(self.answer_oracle())?;
        let repairs: Vec<Repair> = named.iter().map(|(_, r)| r.clone()).collect();
        let universe = AxiomUniverse::for_problem(&plain, &repairs);
        let settled = self.settle(universe.members())?;
        let cdp = self.problem(Arc::new(Oracle::with_answers(&self.id, settled)))?;
        let mut ctx = PreferenceContext::new(&cdp, universe).map_err(SessionError::engine)?;
        ctx.report(&named).map_err(SessionError::engine)
    }

    fn settle(&self, members: &[Axiom]) -> Result<Vec<(Axiom, Verdict)>, SessionError> {
        let confirmed: Vec<Axiom> = self.answers.iter().filter(|(_, v)| **v == Verdict::True).map(|(a, _)| a.clone()).collect();
        let rejected: Vec<Axiom> = self.answers.iter().filter(|(_, v)| **v == Verdict::False).map(|(a, _)| a.clone()).collect();
        let known = TBox::from_axioms(confirmed, "answers").with_signature(self.tbox.signature());
        let mut reasoner = Reasoner::new(&known);
        let mut out: Vec<(Axiom, Verdict)> = self.answers.iter().map(|(a, v)| (a.clone(), *v)).collect();
        for a in members {
            if self.answers.contains_key(a) {
                continue;
            }
            if reasoner.entails_open(a).map_err(SessionError::engine)? {
                out.push((a.clone(), Verdict::True));
                continue;
            }
            let mut with = Reasoner::new(&known.with_added([a], &Provenance::Added("probe".into())));
            for f in &rejected {
                if with.entails_open(f).map_err(SessionError::engine)? {
                    out.push((a.clone(), Verdict::False));
                    break;
                }
            }
        }
        Ok(out)
    }
}

fn describe(r: &Repair) -> String {
    let list = |v: &[Axiom]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("; ");
    format!("(add [{}], delete [{}])", list(r.add()), list(r.delete()))
}
