//! The append-only session log.

use ontorepair_core::{Axiom, Repair, Verdict};
use serde::{Deserialize, Serialize};

use crate::session::SessionSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: usize,
    pub at: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventKind {
    TBoxLoaded { session: String, spec: SessionSpec },
    QueryIssued { axiom: Axiom },
    AnswerReceived { axiom: Axiom, verdict: Verdict },
    AnswerRevised { axiom: Axiom, verdict: Verdict, previous: Verdict },
    RepairProposed { id: String, repair: Repair },
    RepairExecuted { id: String },
}

impl EventKind {
    /// Events recorded from requests rather than derived by the engine.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            EventKind::TBoxLoaded { .. }
                | EventKind::AnswerReceived { .. }
                | EventKind::AnswerRevised { .. }
                | EventKind::RepairExecuted { .. }
        )
    }
}

pub fn to_json_lines(events: &[Event]) -> String {
    events.iter().map(|e| serde_json::to_string(e).expect("events serialize") + "\n").collect()
}

pub fn from_json_lines(text: &str) -> Result<Vec<Event>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
