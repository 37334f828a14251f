mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::gen::{conflict_tbox, NAMES};
use common::{ax, brute};
use ontorepair_core::oracle::Verdict;
use ontorepair_core::repair::{
    apply_repair, candidate_axioms, combined_repair, complete_repair, completion_candidates, debug_repairs, remove_redundancy,
    verify_repair, ChoicePolicy, CombinedOptions, DebugMode,
};
use ontorepair_core::syntax::serialize_tbox;
use ontorepair_core::{Axiom, AxiomId, AxiomSet, Cdp, Concept, Oracle, Reasoner, Repair, RepairError, TBox, UnknownPolicy};
use proptest::prelude::*;

fn by_id<'a>(list: &'a [(String, Repair)], id: &str) -> &'a Repair {
    &list.iter().find(|(n, _)| n == id).unwrap().1
}

fn axioms_of(t: &TBox, ids: &[u32]) -> Vec<Axiom> {
    ids.iter().map(|&i| t.get(AxiomId(i)).unwrap().axiom.clone()).collect()
}

#[test]
fn fig3_listed_repairs_verify() {
    let cdp = common::fig3();
    for (id, r) in common::fig3_repairs() {
        let report = verify_repair(&cdp, &r).unwrap();
        assert!(report.is_repair, "{id}: {report:?}");
    }
}

#[test]
fn galen_listed_repairs_verify() {
    let cdp = common::galen();
    for (id, r) in common::galen_repairs() {
        assert!(verify_repair(&cdp, &r).unwrap().is_repair, "{id}");
    }
}

#[test]
fn empty_repair_fails_missing_and_wrong_clauses() {
    let cdp = common::fig3();
    let report = verify_repair(&cdp, &Repair::empty()).unwrap();
    assert!(!report.is_repair);
    assert!(report.additions_true.holds && report.deletions_false.holds && report.consistent.holds);
    assert!(!report.missing_entailed.holds);
    assert!(!report.wrong_excluded.holds);
    assert_eq!(report.wrong_excluded.witnesses.len(), 2);
}

#[test]
fn dropping_any_element_of_r3_or_r4_breaks_it() {
    let cdp = common::fig3();
    let list = common::fig3_repairs();
    for id in ["R3", "R4"] {
        let r = by_id(&list, id);
        for a in r.add() {
            let v = Repair::new(r.add().iter().filter(|x| *x != a).cloned(), r.delete().to_vec());
            assert!(!verify_repair(&cdp, &v).unwrap().is_repair, "{id} without {a}");
        }
        for d in r.delete() {
            let v = Repair::new(r.add().to_vec(), r.delete().iter().filter(|x| *x != d).cloned());
            assert!(!verify_repair(&cdp, &v).unwrap().is_repair, "{id} keeping {d}");
        }
    }
}

#[test]
fn verification_flags_each_clause() {
    let cdp = common::fig3();
    let false_add = Repair::new([ax("P1 SubClassOf P2")], []);
    let report = verify_repair(&cdp, &false_add).unwrap();
    assert!(!report.additions_true.holds);
    assert_eq!(report.additions_true.witnesses[0].verdict, Some(Verdict::False));
    let true_delete = Repair::new([], [ax("P2 SubClassOf P4")]);
    assert!(!verify_repair(&cdp, &true_delete).unwrap().deletions_false.holds);
    let protected = common::fig3().with_protected([AxiomId(1)]).unwrap();
    let r1 = by_id(&common::fig3_repairs(), "R1").clone();
    let report = verify_repair(&protected, &r1).unwrap();
    assert!(!report.protected_untouched.holds && !report.is_repair);
    assert!(report.additions_true.holds && report.deletions_false.holds);
}

#[test]
fn verification_report_json_names_clauses() {
    let cdp = common::fig3();
    let json = serde_json::to_value(verify_repair(&cdp, &Repair::empty()).unwrap()).unwrap();
    for k in ["i", "ii", "iii", "iv", "v", "protected_untouched", "is_repair"] {
        assert!(json.get(k).is_some(), "{k}");
    }
    assert_eq!(json["v"]["witnesses"][0]["axiom"], "P1 SubClassOf bottom");
}

#[test]
fn apply_repair_counts_and_galen_r1_text() {
    let cdp = common::fig3();
    let r1 = by_id(&common::fig3_repairs(), "R1").clone();
    assert_eq!(apply_repair(&cdp.tbox, &r1).unwrap().len(), 9);
    assert_eq!(apply_repair(&cdp.tbox, &Repair::empty()).unwrap(), cdp.tbox);
    let galen = common::galen();
    let repaired = apply_repair(&galen.tbox, by_id(&common::galen_repairs(), "R1")).unwrap();
    assert_eq!(serialize_tbox(&repaired), common::read("galen_r1.tbox"));
    let bogus = Repair::new([], [ax("P1 SubClassOf P8")]);
    assert_eq!(apply_repair(&cdp.tbox, &bogus), Err(RepairError::DeleteNotPresent(ax("P1 SubClassOf P8"))));
}

#[test]
fn fig3_debugging_with_truth_oracle() {
    let cdp = common::fig3_debug_only();
    let t = &cdp.tbox;
    let all = debug_repairs(&cdp, DebugMode::RemoveAllFalse).unwrap();
    assert_eq!(all, vec![Repair::new([], axioms_of(t, &[1, 6, 10]))]);
    let hs = debug_repairs(&cdp, DebugMode::HittingSet).unwrap();
    assert_eq!(hs, vec![Repair::new([], axioms_of(t, &[1, 6])), Repair::new([], axioms_of(t, &[1, 10]))]);

    // independent recomputation: exhaustive MIPS, filter by the oracle, exhaustive hitting sets
    let filtered: Vec<AxiomSet> = brute::mips(t)
        .into_iter()
        .map(|m| m.iter().filter(|&id| cdp.oracle.ask(&t.get(id).unwrap().axiom).unwrap() == Verdict::False).collect())
        .collect();
    let union: BTreeSet<AxiomId> = filtered.iter().flat_map(|s| s.iter()).collect();
    assert_eq!(union, [1, 6, 10].map(AxiomId).into());
    let expected: Vec<Repair> = brute::minimal_hitting_sets(&filtered)
        .into_iter()
        .map(|h| Repair::new([], h.iter().map(|id| t.get(id).unwrap().axiom.clone())))
        .collect();
    assert_eq!(hs.len(), expected.len());
    for r in &expected {
        assert!(hs.contains(r));
    }
    for r in hs.iter().chain(&all) {
        assert!(verify_repair(&cdp, r).unwrap().is_repair);
    }
}

#[test]
fn debugging_without_removable_axioms_fails() {
    let t = common::tbox("fig3.tbox");
    let oracle = Arc::new(Oracle::truth(&t));
    let cdp = Cdp::new(t, oracle, vec![], common::axioms("fig3_wrong.txt")).unwrap();
    assert!(matches!(debug_repairs(&cdp, DebugMode::RemoveAllFalse), Err(RepairError::NoRepairWithoutCorrectRemoval { .. })));
}

#[test]
fn protected_axioms_are_never_deleted() {
    let cdp = common::fig3_debug_only().with_protected([AxiomId(6)]).unwrap();
    let hs = debug_repairs(&cdp, DebugMode::HittingSet).unwrap();
    assert_eq!(hs, vec![Repair::new([], axioms_of(&cdp.tbox, &[1, 10]))]);
    assert!(common::fig3().with_protected([AxiomId(99)]).is_err());
}

#[test]
fn strict_policy_keeps_unknown_axioms() {
    let t = common::tbox("fig3.tbox");
    let known = vec![ax("P1 SubClassOf P2")];
    let limited = ontorepair_core::OracleConfig::Limited { reference: common::tbox("fig3_truth.tbox"), known };
    let oracle = Arc::new(Oracle::new(limited).unwrap());
    let base = Cdp::new(t, oracle, vec![], common::axioms("fig3_wrong.txt")).unwrap();
    let prudent = debug_repairs(&base, DebugMode::RemoveAllFalse).unwrap();
    // prudent: unknown axioms may go, so every non-true MIPS axiom is removed
    assert_eq!(prudent[0].delete().len(), 9);
    let strict = base.clone().with_policy(UnknownPolicy::Strict);
    assert!(matches!(debug_repairs(&strict, DebugMode::RemoveAllFalse), Err(RepairError::NoRepairWithoutCorrectRemoval { .. })));
}

#[test]
fn galen_completion_candidates() {
    let cdp = common::galen();
    let m = ax("Endocarditis SubClassOf PathologicalPhenomenon");
    let report = completion_candidates(&cdp, &m).unwrap();
    let validated: Vec<&Axiom> = report.validated().iter().map(|c| &c.axiom).collect();
    assert!(validated.contains(&&ax("Carditis SubClassOf CardioVascularDisease")));
    assert!(validated.contains(&&m));
    let lifted: Vec<&Axiom> = report.candidates.iter().filter(|c| c.lifted).map(|c| &c.axiom).collect();
    assert!(lifted.contains(&&ax("InflammationProcess SubClassOf PathologicalProcess")), "{lifted:?}");
    assert!(report.validated().iter().any(|c| c.axiom == ax("InflammationProcess SubClassOf PathologicalProcess")));
}

#[test]
fn fig3_completion_candidate_through_taxonomy() {
    // unsatisfiable names are not offered as candidate endpoints, so use the
    // fragment where P3 is satisfiable
    let full = common::fig3();
    let fragment = full.tbox.without(&[AxiomId(1), AxiomId(10)].into());
    let cdp = full.with_defects(fragment, full.missing.clone(), vec![]);
    let report = completion_candidates(&cdp, &ax("P4 SubClassOf P5")).unwrap();
    let validated: Vec<&Axiom> = report.validated().iter().map(|c| &c.axiom).collect();
    assert!(validated.contains(&&ax("P7 SubClassOf P3")), "{validated:?}");
    let full_report = completion_candidates(&full, &ax("P4 SubClassOf P5")).unwrap();
    assert!(!full_report.candidates.iter().any(|c| c.axiom == ax("P7 SubClassOf P3")));
}

#[test]
fn already_entailed_missing_axiom_is_marked() {
    let cdp = common::galen();
    let m = ax("Endocarditis SubClassOf Carditis");
    let report = completion_candidates(&cdp, &m).unwrap();
    let c = report.candidates.iter().find(|c| c.axiom == m).unwrap();
    assert!(c.already_entailed);
}

#[test]
fn unsupported_shapes_rejected() {
    let t = common::tbox("galen.tbox");
    let m = Axiom::gci(Concept::and(Concept::atomic("Fracture"), Concept::atomic("Carditis")), Concept::atomic("Carditis"));
    assert_eq!(candidate_axioms(&t, t.concept_names(), &m), Err(RepairError::UnsupportedShape(m)));
}

fn galen_completion_only() -> Cdp {
    let g = common::galen();
    g.with_defects(g.tbox.clone(), g.missing.clone(), vec![])
}

#[test]
fn galen_completion_repair() {
    let cdp = galen_completion_only();
    let r = complete_repair(&cdp, ChoicePolicy::MostGeneral, 3).unwrap();
    assert!(r.delete().is_empty());
    assert!(verify_repair(&cdp, &r).unwrap().is_repair);
    let expected = [ax("Carditis SubClassOf CardioVascularDisease"), ax("GranulomaProcess SubClassOf PathologicalProcess")];
    assert_eq!(r.add(), expected);
    // later rounds only add axioms that are not yet entailed, so this is a fixpoint
    assert_eq!(complete_repair(&cdp, ChoicePolicy::MostGeneral, 1).unwrap().add(), expected);
    let itself = complete_repair(&cdp, ChoicePolicy::MissingItself, 1).unwrap();
    assert_eq!(itself.add(), Repair::new(cdp.missing.clone(), []).add());
    assert!(matches!(complete_repair(&common::galen(), ChoicePolicy::MostGeneral, 3), Err(RepairError::Precondition(_))));
}

#[test]
fn completion_with_rejecting_oracle_fails() {
    let g = galen_completion_only();
    let nothing = Arc::new(Oracle::truth(&TBox::empty()));
    let cdp = Cdp::new(g.tbox.clone(), nothing, g.missing.clone(), vec![]).unwrap();
    assert!(matches!(complete_repair(&cdp, ChoicePolicy::MostGeneral, 3), Err(RepairError::UnrepairableMissing(_))));
}

#[test]
fn combined_repairs_on_fixtures() {
    let galen = common::galen();
    let r = combined_repair(&galen, CombinedOptions::default()).unwrap();
    assert!(verify_repair(&galen, &r).unwrap().is_repair);
    assert_eq!(
        r.delete().iter().collect::<BTreeSet<_>>(),
        [ax("PathologicalProcess SubClassOf InflammationProcess"), ax("InflammationProcess SubClassOf GranulomaProcess")].iter().collect()
    );
    assert_eq!(r, by_id(&common::galen_repairs(), "R6").clone());

    let fig3 = common::fig3();
    let r = combined_repair(&fig3, CombinedOptions::default()).unwrap();
    assert_eq!(r, Repair::new([ax("P4 SubClassOf P5")], axioms_of(&fig3.tbox, &[1, 6, 10])));
    assert!(verify_repair(&fig3, &r).unwrap().is_repair);
}

#[test]
fn combined_reduces_to_single_phases() {
    let debug_only = common::fig3_debug_only();
    assert_eq!(
        combined_repair(&debug_only, CombinedOptions::default()).unwrap(),
        debug_repairs(&debug_only, DebugMode::RemoveAllFalse).unwrap()[0]
    );
    let complete_only = galen_completion_only();
    assert_eq!(
        combined_repair(&complete_only, CombinedOptions::default()).unwrap(),
        complete_repair(&complete_only, ChoicePolicy::MostGeneral, 10).unwrap()
    );
}

#[test]
fn redundancy_removal() {
    let fig3 = common::fig3();
    let list = common::fig3_repairs();
    assert_eq!(remove_redundancy(&fig3, by_id(&list, "R1")).unwrap(), by_id(&list, "R3").clone());
    for id in ["R3", "R4"] {
        assert_eq!(remove_redundancy(&fig3, by_id(&list, id)).unwrap(), by_id(&list, id).clone());
    }
    let galen = common::galen();
    let glist = common::galen_repairs();
    let reduced = remove_redundancy(&galen, by_id(&glist, "R8")).unwrap();
    assert_eq!(reduced.add(), by_id(&glist, "R7").add());
    assert!(!reduced.add().contains(&ax("Carditis SubClassOf CardioVascularDisease")));
    assert!(reduced.is_subset_of(by_id(&glist, "R8")));
    assert!(verify_repair(&galen, &reduced).unwrap().is_repair);
    assert!(matches!(remove_redundancy(&fig3, &Repair::empty()), Err(RepairError::Precondition(_))));
}

#[test]
fn missing_and_wrong_must_be_disjoint() {
    let t = common::tbox("fig3.tbox");
    let o = Arc::new(Oracle::truth(&t));
    let a = ax("P1 SubClassOf P2");
    assert!(matches!(Cdp::new(t, o, vec![a.clone()], vec![a]), Err(RepairError::InvalidProblem(_))));
}

/// A random problem: the TBox, a reference made of some of its axioms plus
/// extras, every unsatisfiable name as wrong, and one named subsumption the
/// reference entails but the TBox does not as missing.
fn random_problem() -> impl Strategy<Value = Cdp> {
    (conflict_tbox(7), prop::collection::vec(any::<bool>(), 7), conflict_tbox(3)).prop_map(|(t, keep, extra)| {
        let mut reference: Vec<Axiom> =
            t.logical_axioms().zip(keep.iter().cycle()).filter(|(_, k)| **k).map(|(a, _)| a.clone()).collect();
        reference.extend(extra.logical_axioms().cloned());
        let reference = TBox::from_axioms(reference, "ref");
        let mut r = Reasoner::new(&t);
        let wrong: Vec<Axiom> = t
            .concept_names()
            .iter()
            .filter(|n| !r.is_satisfiable(&Concept::atomic(n.as_str())).unwrap())
            .map(|n| Axiom::unsat(n))
            .collect();
        let mut refr = Reasoner::new(&reference);
        let mut missing = Vec::new();
        'outer: for a in NAMES {
            for b in NAMES {
                let m = Axiom::named(a, b);
                if a != b && !wrong.iter().any(|w| w.unsat_target() == Some(a)) && refr.entails_open(&m).unwrap() && !r.entails_open(&m).unwrap() {
                    missing.push(m);
                    break 'outer;
                }
            }
        }
        Cdp::new(t, Arc::new(Oracle::truth(&reference)), missing, wrong).unwrap()
    })
}

fn acceptable(e: &RepairError) -> bool {
    matches!(
        e,
        RepairError::NoRepairWithoutCorrectRemoval { .. } | RepairError::UnrepairableMissing(_) | RepairError::NoRepairFound { .. }
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Every emitted repair passes verification, deletes only false axioms and
    /// adds only true ones.
    #[test]
    fn emitted_repairs_verify(cdp in random_problem()) {
        let mut emitted = Vec::new();
        match combined_repair(&cdp, CombinedOptions::default()) {
            Ok(r) => emitted.push(r),
            Err(e) => prop_assert!(acceptable(&e), "{e}"),
        }
        let debug_only = cdp.with_defects(cdp.tbox.clone(), vec![], cdp.wrong.clone());
        for mode in [DebugMode::HittingSet, DebugMode::RemoveAllFalse] {
            match debug_repairs(&debug_only, mode) {
                Ok(rs) => {
                    for r in rs {
                        prop_assert!(verify_repair(&debug_only, &r).unwrap().is_repair);
                    }
                }
                Err(e) => prop_assert!(acceptable(&e), "{e}"),
            }
        }
        for r in emitted.clone() {
            if let Ok(min) = remove_redundancy(&cdp, &r) {
                prop_assert!(min.is_subset_of(&r));
                emitted.push(min);
            }
        }
        for r in &emitted {
            prop_assert!(verify_repair(&cdp, r).unwrap().is_repair, "{:?}", r);
            for d in r.delete() {
                prop_assert_eq!(cdp.oracle.ask(d).unwrap(), Verdict::False);
            }
            for a in r.add() {
                prop_assert_eq!(cdp.oracle.ask(a).unwrap(), Verdict::True);
            }
        }
    }

    /// Hitting-set repairs are exactly the minimal oracle-compliant deletions.
    #[test]
    fn hitting_set_repairs_are_minimal(cdp in random_problem()) {
        let cdp = cdp.with_defects(cdp.tbox.clone(), vec![], cdp.wrong.clone());
        let Ok(found) = debug_repairs(&cdp, DebugMode::HittingSet) else { return Ok(()); };
        let removable: Vec<Axiom> = cdp.tbox.logical_axioms().filter(|a| cdp.oracle.ask(a).unwrap() != Verdict::True).cloned().collect();
        prop_assume!(removable.len() <= 7);
        let mut repairs: Vec<BTreeSet<Axiom>> = Vec::new();
        for mask in 0u32..(1 << removable.len()) {
            let d: BTreeSet<Axiom> = removable.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a.clone()).collect();
            if verify_repair(&cdp, &Repair::new([], d.iter().cloned())).unwrap().is_repair {
                repairs.push(d);
            }
        }
        let minimal: BTreeSet<BTreeSet<Axiom>> = repairs.iter().filter(|d| !repairs.iter().any(|e| e != *d && e.is_subset(d))).cloned().collect();
        let got: BTreeSet<BTreeSet<Axiom>> = found.iter().map(|r| r.delete().iter().cloned().collect()).collect();
        prop_assert_eq!(got, minimal);
    }
}
