//! Interleaved debugging and completion.

use serde::{Deserialize, Serialize};

use super::complete::{complete_on, ChoicePolicy, DEFAULT_COMPLETION_ROUNDS};
use super::debug::{debug_tbox, DebugMode};
use super::{apply_lenient, verify_repair, Cdp, Repair, RepairError};
use crate::reasoner::Reasoner;
use crate::syntax::Axiom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedOptions {
    pub mode: DebugMode,
    pub choice: ChoicePolicy,
    pub max_rounds: usize,
    pub completion_rounds: usize,
}

impl Default for CombinedOptions {
    fn default() -> Self {
        CombinedOptions {
            mode: DebugMode::RemoveAllFalse,
            choice: ChoicePolicy::MostGeneral,
            max_rounds: 10,
            completion_rounds: DEFAULT_COMPLETION_ROUNDS,
        }
    }
}

/// Alternates a debugging phase and a completion phase on the working TBox
/// until the accumulated changes form a repair.
pub fn combined_repair(cdp: &Cdp, options: CombinedOptions) -> Result<Repair, RepairError> {
    let mut add: Vec<Axiom> = Vec::new();
    let mut delete: Vec<Axiom> = Vec::new();
    for _ in 0..options.max_rounds {
        let working = apply_lenient(&cdp.tbox, &Repair::new(add.clone(), delete.clone()));
        let mut reasoner = Reasoner::new(&working);
        let mut needs_debug = !reasoner.is_consistent()?;
        for w in &cdp.wrong {
            needs_debug |= reasoner.entails_open(w)?;
        }
        let working = if needs_debug {
            let sub = cdp.with_defects(working.clone(), Vec::new(), cdp.wrong.clone());
            let chosen = debug_tbox(&sub, &working, options.mode)?.into_iter().next().unwrap_or_default();
            for d in chosen.delete() {
                if !delete.contains(d) {
                    delete.push(d.clone());
                }
            }
            apply_lenient(&cdp.tbox, &Repair::new(add.clone(), delete.clone()))
        } else {
            working
        };
        let extra = complete_on(cdp, &working, &cdp.missing, options.choice, options.completion_rounds)?;
        for a in extra {
            if !add.contains(&a) {
                add.push(a);
            }
        }
        let candidate = Repair::new(add.clone(), delete.clone());
        if verify_repair(cdp, &candidate)?.is_repair {
            return Ok(candidate);
        }
    }
    Err(RepairError::NoRepairFound { rounds: options.max_rounds })
}
