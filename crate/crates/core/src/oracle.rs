//! Oracles deciding whether an axiom holds in the intended domain.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::reasoner::{Reasoner, ReasonerError};
use crate::syntax::{Axiom, TBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    fn flipped(self) -> Self {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unknown => Verdict::Unknown,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "true" | "t" | "yes" => Ok(Verdict::True),
            "false" | "f" | "no" => Ok(Verdict::False),
            "unknown" | "?" => Ok(Verdict::Unknown),
            other => Err(OracleError::BadConfig(format!("unrecognised verdict {other:?}"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("bad oracle configuration: {0}")]
    BadConfig(String),
    #[error("axiom {0} was never answered")]
    NeverAnswered(String),
    #[error(transparent)]
    Reasoner(#[from] ReasonerError),
}

/// How an oracle decides.
#[derive(Debug, Clone)]
pub enum OracleConfig {
    /// True exactly for the axioms the reference theory entails.
    TruthTBox { reference: TBox },
    /// As `TruthTBox` on `known`, Unknown elsewhere.
    Limited { reference: TBox, known: Vec<Axiom> },
    /// Flips the reference verdict on a pseudo-random fraction of axioms.
    Erroneous { reference: TBox, error_rate: f64, seed: u64 },
    /// A verdict only when all members agree.
    Skeptical { members: Vec<OracleConfig> },
    /// The verdict with at least `quorum` votes, a strict majority by default.
    Voting { members: Vec<OracleConfig>, quorum: Option<usize> },
    /// Answers recorded by a person; Unknown until answered.
    Interactive { session: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLogEntry {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub source: String,
    pub ts: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub revises: Option<usize>,
}

/// Append-only record of answers; later entries on an axiom supersede earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLog {
    entries: Vec<QueryLogEntry>,
}

/// Outcome of a revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Revision {
    pub index: usize,
    /// The effective verdict changed, so results derived from it are stale.
    pub stale: bool,
}

impl QueryLog {
    pub fn entries(&self) -> &[QueryLogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: QueryLogEntry) {
        self.entries.push(entry);
    }

    fn latest_index(&self, axiom: &Axiom) -> Option<usize> {
        self.entries.iter().rposition(|e| &e.axiom == axiom)
    }

    pub fn effective(&self, axiom: &Axiom) -> Option<Verdict> {
        self.latest_index(axiom).map(|i| self.entries[i].verdict)
    }

    /// Effective verdict of every answered axiom.
    pub fn effective_all(&self) -> BTreeMap<Axiom, Verdict> {
        self.entries.iter().map(|e| (e.axiom.clone(), e.verdict)).collect()
    }

    pub fn revise(&mut self, axiom: &Axiom, verdict: Verdict, source: &str, ts: &str) -> Result<Revision, OracleError> {
        let prev = self.latest_index(axiom).ok_or_else(|| OracleError::NeverAnswered(axiom.to_string()))?;
        let stale = self.entries[prev].verdict != verdict;
        self.entries.push(QueryLogEntry {
            axiom: axiom.clone(),
            verdict,
            source: source.to_string(),
            ts: ts.to_string(),
            revises: Some(prev),
        });
        Ok(Revision { index: self.entries.len() - 1, stale })
    }

    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entries serialise") + "\n")
            .collect()
    }

    pub fn from_json_lines(text: &str) -> Result<Self, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QueryLog { entries })
    }
}

enum Kind {
    Reference { reasoner: Box<Mutex<Reasoner>>, known: Option<Vec<Axiom>>, flip: Option<(f64, u64)> },
    Skeptical(Vec<Oracle>),
    Voting(Vec<Oracle>, usize),
    Interactive(Mutex<BTreeMap<Axiom, Verdict>>),
}

struct State {
    memo: HashMap<Axiom, Verdict>,
    log: QueryLog,
    requested: Vec<Axiom>,
}

/// An oracle with a memo and a query log; safe to share across threads.
pub struct Oracle {
    kind: Kind,
    source: String,
    state: Mutex<State>,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle").field("source", &self.source).finish_non_exhaustive()
    }
}

/// Position in [0, 1) derived from the seed and the axiom text.
pub fn error_draw(seed: u64, axiom: &Axiom) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(axiom.to_string().as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Result<Self, OracleError> {
        let (kind, source) = match config {
            OracleConfig::TruthTBox { reference } => (Self::reference(&reference, None, None), "truth".to_string()),
            OracleConfig::Limited { reference, known } => {
                (Self::reference(&reference, Some(known), None), "limited".to_string())
            }
            OracleConfig::Erroneous { reference, error_rate, seed } => {
                if !(0.0..=1.0).contains(&error_rate) || error_rate.is_nan() {
                    return Err(OracleError::BadConfig(format!("error rate {error_rate} outside [0, 1]")));
                }
                (Self::reference(&reference, None, Some((error_rate, seed))), format!("erroneous:{error_rate}:{seed}"))
            }
            OracleConfig::Skeptical { members } => {
                if members.is_empty() {
                    return Err(OracleError::BadConfig("skeptical oracle needs members".into()));
                }
                let members = members.into_iter().map(Oracle::new).collect::<Result<Vec<_>, _>>()?;
                (Kind::Skeptical(members), "skeptical".to_string())
            }
            OracleConfig::Voting { members, quorum } => {
                let n = members.len();
                let quorum = quorum.unwrap_or(n / 2 + 1);
                if n == 0 || quorum == 0 || quorum > n {
                    return Err(OracleError::BadConfig(format!("quorum {quorum} invalid for {n} members")));
                }
                let members = members.into_iter().map(Oracle::new).collect::<Result<Vec<_>, _>>()?;
                (Kind::Voting(members, quorum), format!("voting:{quorum}"))
            }
            OracleConfig::Interactive { session } => {
                (Kind::Interactive(Mutex::new(BTreeMap::new())), format!("user:{session}"))
            }
        };
        Ok(Oracle { kind, source, state: Mutex::new(State { memo: HashMap::new(), log: QueryLog::default(), requested: Vec::new() }) })
    }

    pub fn truth(reference: &TBox) -> Self {
        Oracle::new(OracleConfig::TruthTBox { reference: reference.clone() }).expect("truth oracles need no validation")
    }

    /// An interactive oracle preloaded with answers.
    pub fn with_answers(session: &str, answers: impl IntoIterator<Item = (Axiom, Verdict)>) -> Self {
        let o = Oracle::new(OracleConfig::Interactive { session: session.to_string() }).expect("valid");
        for (a, v) in answers {
            o.record(a, v);
        }
        o
    }

    fn reference(t: &TBox, known: Option<Vec<Axiom>>, flip: Option<(f64, u64)>) -> Kind {
        Kind::Reference { reasoner: Box::new(Mutex::new(Reasoner::new(t))), known, flip }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Records a human answer on an interactive oracle.
    pub fn record(&self, axiom: Axiom, verdict: Verdict) {
        if let Kind::Interactive(answers) = &self.kind {
            answers.lock().unwrap().insert(axiom.clone(), verdict);
            self.state.lock().unwrap().memo.remove(&axiom);
        }
    }

    pub fn ask(&self, axiom: &Axiom) -> Result<Verdict, OracleError> {
        if let Some(&v) = self.state.lock().unwrap().memo.get(axiom) {
            return Ok(v);
        }
        let verdict = self.decide(axiom)?;
        let mut st = self.state.lock().unwrap();
        if matches!(self.kind, Kind::Interactive(_)) && verdict == Verdict::Unknown {
            if !st.requested.contains(axiom) {
                st.requested.push(axiom.clone());
            }
            return Ok(verdict);
        }
        st.memo.insert(axiom.clone(), verdict);
        let ts = format!("q{}", st.log.len() + 1);
        st.log.push(QueryLogEntry { axiom: axiom.clone(), verdict, source: self.source.clone(), ts, revises: None });
        Ok(verdict)
    }

    fn decide(&self, axiom: &Axiom) -> Result<Verdict, OracleError> {
        match &self.kind {
            Kind::Reference { reasoner, known, flip } => {
                if known.as_ref().is_some_and(|k| !k.contains(axiom)) {
                    return Ok(Verdict::Unknown);
                }
                let truth = Verdict::from_bool(reasoner.lock().unwrap().entails_open(axiom)?);
                Ok(match flip {
                    Some((rate, seed)) if error_draw(*seed, axiom) < *rate => truth.flipped(),
                    _ => truth,
                })
            }
            Kind::Skeptical(members) => {
                let mut agreed: Option<Verdict> = None;
                for m in members {
                    let v = m.ask(axiom)?;
                    if v == Verdict::Unknown || agreed.is_some_and(|a| a != v) {
                        return Ok(Verdict::Unknown);
                    }
                    agreed = Some(v);
                }
                Ok(agreed.unwrap_or(Verdict::Unknown))
            }
            Kind::Voting(members, quorum) => {
                let (mut yes, mut no) = (0usize, 0usize);
                for m in members {
                    match m.ask(axiom)? {
                        Verdict::True => yes += 1,
                        Verdict::False => no += 1,
                        Verdict::Unknown => {}
                    }
                }
                Ok(if yes > no && yes >= *quorum {
                    Verdict::True
                } else if no > yes && no >= *quorum {
                    Verdict::False
                } else {
                    Verdict::Unknown
                })
            }
            Kind::Interactive(answers) => Ok(answers.lock().unwrap().get(axiom).copied().unwrap_or(Verdict::Unknown)),
        }
    }

    /// Replaces the logged answer for `axiom`; the memo follows the new verdict.
    pub fn revise_answer(&self, axiom: &Axiom, verdict: Verdict) -> Result<Revision, OracleError> {
        let mut st = self.state.lock().unwrap();
        let ts = format!("q{}", st.log.len() + 1);
        let rev = st.log.revise(axiom, verdict, &self.source, &ts)?;
        st.memo.insert(axiom.clone(), verdict);
        if let Kind::Interactive(answers) = &self.kind {
            answers.lock().unwrap().insert(axiom.clone(), verdict);
        }
        Ok(rev)
    }

    pub fn log(&self) -> QueryLog {
        self.state.lock().unwrap().log.clone()
    }

    /// Axioms an interactive oracle was asked about but could not answer.
    pub fn requested(&self) -> Vec<Axiom> {
        self.state.lock().unwrap().requested.clone()
    }
}
