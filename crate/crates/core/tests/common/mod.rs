#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use ontorepair_core::syntax::parse_axiom_list;
use ontorepair_core::{parse_named_repairs, parse_tbox, Axiom, Cdp, Oracle, Repair, TBox};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn tbox(name: &str) -> TBox {
    parse_tbox(&read(name)).unwrap()
}

pub fn axioms(name: &str) -> Vec<Axiom> {
    parse_axiom_list(&read(name)).unwrap()
}

pub fn ax(text: &str) -> Axiom {
    ontorepair_core::parse_axiom(text).unwrap()
}

fn problem(prefix: &str, with_missing: bool) -> Cdp {
    let oracle = Arc::new(Oracle::truth(&tbox(&format!("{prefix}_truth.tbox"))));
    let missing = if with_missing { axioms(&format!("{prefix}_missing.txt")) } else { Vec::new() };
    Cdp::new(tbox(&format!("{prefix}.tbox")), oracle, missing, axioms(&format!("{prefix}_wrong.txt"))).unwrap()
}

pub fn fig3() -> Cdp {
    problem("fig3", true)
}

pub fn fig3_debug_only() -> Cdp {
    problem("fig3", false)
}

pub fn galen() -> Cdp {
    problem("galen", true)
}

pub fn repairs(name: &str) -> Vec<(String, Repair)> {
    parse_named_repairs(&read(name)).unwrap().into_iter().map(|n| (n.id, n.repair)).collect()
}

pub fn fig3_repairs() -> Vec<(String, Repair)> {
    repairs("fig3_repairs.json")
}

pub fn galen_repairs() -> Vec<(String, Repair)> {
    repairs("galen_repairs.json")
}

pub mod gen;
pub mod brute;
