//! Random TBoxes over a small fixed signature.
#![allow(dead_code)]

use ontorepair_core::{Axiom, Concept, TBox};
use proptest::prelude::*;

pub const NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];
pub const ROLES: [&str; 2] = ["r", "s"];

fn name() -> impl Strategy<Value = Concept> {
    prop::sample::select(&NAMES[..]).prop_map(Concept::atomic)
}

fn role() -> impl Strategy<Value = String> {
    prop::sample::select(&ROLES[..]).prop_map(str::to_string)
}

pub fn el_concept(depth: u32) -> BoxedStrategy<Concept> {
    let leaf = prop_oneof![8 => name(), 1 => Just(Concept::Top)];
    leaf.prop_recursive(depth, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Concept::and(a, b)),
            (role(), inner).prop_map(|(r, c)| Concept::exists(r, c)),
        ]
    })
    .boxed()
}

pub fn alc_concept(depth: u32) -> BoxedStrategy<Concept> {
    let leaf = prop_oneof![8 => name(), 1 => Just(Concept::Top), 1 => Just(Concept::Bottom)];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Concept::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Concept::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Concept::or(a, b)),
            (role(), inner.clone()).prop_map(|(r, c)| Concept::exists(r, c)),
            (role(), inner).prop_map(|(r, c)| Concept::forall(r, c)),
        ]
    })
    .boxed()
}

pub fn el_axiom() -> impl Strategy<Value = Axiom> {
    (el_concept(2), el_concept(2)).prop_map(|(l, r)| Axiom::gci(l, r))
}

pub fn el_tbox(max: usize) -> impl Strategy<Value = TBox> {
    prop::collection::vec(el_axiom(), 1..=max).prop_map(|axs| TBox::from_axioms(axs, "main"))
}

/// Axioms `X ⊑ Y`, `X ⊑ ¬Y` and `X ⊑ ∃r.Y` / `X ⊑ ∀r.Y` over named concepts:
/// small, often incoherent, and cheap to enumerate exhaustively.
pub fn conflict_axiom() -> impl Strategy<Value = Axiom> {
    (name(), name(), 0..4u8).prop_map(|(l, r, kind)| {
        let rhs = match kind {
            0 | 1 => r,
            2 => Concept::not(r),
            _ => Concept::exists("r", r),
        };
        Axiom::gci(l, rhs)
    })
}

pub fn conflict_tbox(max: usize) -> impl Strategy<Value = TBox> {
    prop::collection::vec(conflict_axiom(), 2..=max).prop_map(|mut axs| {
        axs.sort();
        axs.dedup();
        TBox::from_axioms(axs.into_iter().filter(|a| !a.is_trivial()), "main")
    })
}

pub fn alc_tbox(max: usize) -> impl Strategy<Value = TBox> {
    prop::collection::vec(
        prop_oneof![
            conflict_axiom().boxed(),
            (name(), alc_concept(2)).prop_map(|(l, r)| Axiom::gci(l, r)).boxed(),
        ],
        1..=max,
    )
    .prop_map(|axs| TBox::from_axioms(axs, "main"))
}
