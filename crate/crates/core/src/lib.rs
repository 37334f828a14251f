//! Debugging and completion of description-logic TBoxes.
//!
//! The crate covers parsing, reasoning (EL saturation and an ALC tableau),
//! justification and hitting-set computation, oracles, repair construction,
//! preference relations between repairs and ontology networks.

pub mod diagnosis;
pub mod network;
pub mod oracle;
pub mod preferences;
pub mod reasoner;
pub mod repair;
pub mod syntax;

pub use diagnosis::{AxiomSet, ConflictCollection, DiagnosisError};
pub use oracle::{Oracle, OracleConfig, OracleError, Verdict};
pub use reasoner::{Reasoner, ReasonerError};
pub use repair::{parse_named_repairs, Cdp, NamedRepair, Repair, RepairError, UnknownPolicy, VerificationReport};
pub use syntax::{parse_axiom, parse_concept, parse_tbox, Axiom, AxiomId, Concept, ParseError, Provenance, StatedAxiom, TBox};
