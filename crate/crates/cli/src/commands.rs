use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ontorepair_core::diagnosis::{all_justifications, minimal_hitting_sets, mips, mups, rank_axioms_by_mips_arity, AxiomSet};
use ontorepair_core::network::{
    conservativity_violations, detect_candidate_missing_isa, mapping_repair, network_to_tbox, parse_alignment,
    MappingRepairOptions, OntologyNetwork,
};
use ontorepair_core::preferences::{comparison_universe, AxiomUniverse, PreferenceContext};
use ontorepair_core::reasoner::Reasoner;
use ontorepair_core::repair::{
    combined_repair, complete_repair, completion_candidates, debug_repairs, verify_repair, ChoicePolicy, CombinedOptions,
    DebugMode,
};
use ontorepair_core::syntax::{parse_axiom_list, parse_tbox_as};
use ontorepair_core::{
    parse_axiom, parse_named_repairs, parse_tbox, Axiom, Cdp, DiagnosisError, NamedRepair, Oracle,
    OracleConfig, Repair, TBox, UnknownPolicy,
};
use ontorepair_service::ServiceConfig;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::{Choice, Cli, Command, Mode, NetworkAction, Policy, ProblemArgs, Universe};

pub const SCHEMA: &str = "ontorepair.cli/v1";

pub struct Outcome {
    pub code: u8,
    pub text: String,
    pub report: Value,
}

struct Report {
    fields: Map<String, Value>,
    text: String,
}

impl Report {
    fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("schema".into(), json!(SCHEMA));
        fields.insert("command".into(), json!(command));
        Report { fields, text: String::new() }
    }

    fn set(&mut self, key: &str, value: impl serde::Serialize) {
        self.fields.insert(key.into(), serde_json::to_value(value).expect("reports serialize"));
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn finish(self, code: u8) -> Outcome {
        Outcome { code, text: self.text, report: Value::Object(self.fields) }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

fn load_tbox(path: &Path) -> Result<TBox, CliError> {
    parse_tbox(&read(path)?).map_err(|e| CliError::read(path, e))
}

fn load_axioms(path: &Path) -> Result<Vec<Axiom>, CliError> {
    parse_axiom_list(&read(path)?).map_err(|e| CliError::read(path, e))
}

fn load_repairs(path: &Path) -> Result<Vec<NamedRepair>, CliError> {
    parse_named_repairs(&read(path)?).map_err(|e| CliError::read(path, e))
}

#[derive(Deserialize)]
struct AnswerLine {
    axiom: Axiom,
    verdict: Option<ontorepair_core::Verdict>,
}

/// JSON lines carrying `axiom` and `verdict`, such as a session history; lines
/// without a verdict are skipped and later lines win. Unlisted axioms are Unknown.
fn load_answers(path: &Path) -> Result<Vec<(Axiom, ontorepair_core::Verdict)>, CliError> {
    let mut answers: BTreeMap<Axiom, ontorepair_core::Verdict> = BTreeMap::new();
    for (n, line) in read(path)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parsed: AnswerLine =
            serde_json::from_str(line).map_err(|e| CliError::read(path, format!("line {}: {e}", n + 1)))?;
        if let Some(v) = parsed.verdict {
            answers.insert(parsed.axiom, v);
        }
    }
    Ok(answers.into_iter().collect())
}

fn axiom_arg(text: &str) -> Result<Axiom, CliError> {
    parse_axiom(text).map_err(|e| CliError::Usage(format!("--axiom: {e}")))
}

struct Context {
    seed: u64,
    error_rate: Option<f64>,
}

impl Context {
    fn oracle(&self, truth: Option<&PathBuf>) -> Result<Arc<Oracle>, CliError> {
        let Some(path) = truth else {
            return Err(CliError::Usage("this command needs --oracle <truth.tbox>".into()));
        };
        if path.extension().is_some_and(|e| e == "jsonl") {
            if self.error_rate.is_some() {
                return Err(CliError::Usage("--error-rate needs a truth TBox oracle, not an answer log".into()));
            }
            return Ok(Arc::new(Oracle::with_answers("log", load_answers(path)?)));
        }
        let reference = load_tbox(path)?;
        let config = match self.error_rate {
            Some(error_rate) => OracleConfig::Erroneous { reference, error_rate, seed: self.seed },
            None => OracleConfig::TruthTBox { reference },
        };
        Ok(Arc::new(Oracle::new(config)?))
    }

    /// A problem; without `--oracle` every verdict is Unknown.
    fn problem(&self, p: &ProblemArgs, need_oracle: bool) -> Result<Cdp, CliError> {
        let tbox = load_tbox(&p.tbox)?;
        let oracle = match (&p.oracle, need_oracle) {
            (None, false) => Arc::new(Oracle::with_answers("none", [])),
            (truth, _) => self.oracle(truth.as_ref())?,
        };
        let missing = p.missing.as_deref().map(load_axioms).transpose()?.unwrap_or_default();
        let wrong = p.wrong.as_deref().map(load_axioms).transpose()?.unwrap_or_default();
        let policy = match p.policy {
            Policy::Prudent => UnknownPolicy::Prudent,
            Policy::Strict => UnknownPolicy::Strict,
            Policy::Credulous => UnknownPolicy::Credulous,
        };
        Ok(Cdp::new(tbox, oracle, missing, wrong)?
            .with_protected(p.protect.iter().map(|&i| ontorepair_core::AxiomId(i)))?
            .with_policy(policy))
    }
}

fn set_text(t: &TBox, s: &AxiomSet) -> String {
    let axioms: Vec<String> = s.iter().filter_map(|id| t.get(id)).map(|a| a.axiom.to_string()).collect();
    format!("{s}  {}", axioms.join("; "))
}

fn set_json(t: &TBox, s: &AxiomSet) -> Value {
    let axioms: Vec<String> = s.iter().filter_map(|id| t.get(id)).map(|a| a.axiom.to_string()).collect();
    json!({ "ids": s, "axioms": axioms })
}

fn repair_text(r: &Repair) -> String {
    let list = |v: &[Axiom]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("; ");
    format!("add [{}] delete [{}]", list(r.add()), list(r.delete()))
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let ctx = Context { seed: cli.seed, error_rate: cli.error_rate };
    match cli.command {
        Command::Check { tbox } => check(&load_tbox(&tbox)?),
        Command::Justify { tbox, axiom } => justify(&load_tbox(&tbox)?, &axiom_arg(&axiom)?),
        Command::Mups { tbox, concept } => mups_cmd(&load_tbox(&tbox)?, &concept),
        Command::Mips { tbox } => mips_cmd(&load_tbox(&tbox)?),
        Command::Hst { tbox } => hst(&load_tbox(&tbox)?),
        Command::Debug { problem, mode } => debug(&ctx.problem(&problem, true)?, mode),
        Command::Complete { problem, rounds, choice } => complete(&ctx.problem(&problem, true)?, rounds, choice),
        Command::Repair { problem, mode } => combined(&ctx.problem(&problem, true)?, mode),
        Command::Verify { problem, repairs } => verify(&ctx.problem(&problem, true)?, &load_repairs(&repairs)?),
        Command::Compare { problem, repairs, universe } => {
            compare(&ctx.problem(&problem, true)?, &load_repairs(&repairs)?, universe)
        }
        Command::Network { action } => match action {
            NetworkAction::Check { manifest } => network_check(&load_network(&manifest)?),
            NetworkAction::Repair { manifest, wrong, oracle } => {
                let wrong = wrong.as_deref().map(load_axioms).transpose()?.unwrap_or_default();
                let oracle = oracle.as_ref().map(|p| ctx.oracle(Some(p))).transpose()?;
                network_repair(&load_network(&manifest)?, wrong, oracle.as_deref())
            }
        },
        Command::Serve { port, data_dir, config } => serve(port, data_dir, config),
    }
}

fn check(t: &TBox) -> Result<Outcome, CliError> {
    let mut r = Reasoner::new(t);
    let consistent = r.is_consistent()?;
    let unsat = if consistent { r.unsatisfiable_concepts()? } else { Vec::new() };
    let mut rep = Report::new("check");
    rep.set("axioms", t.len());
    rep.set("el", t.is_el());
    rep.set("consistent", consistent);
    rep.set("unsatisfiable", &unsat);
    rep.line(format!("axioms: {}", t.len()));
    rep.line(format!("consistent: {}", if consistent { "yes" } else { "no" }));
    rep.line(format!("unsatisfiable: {}", if unsat.is_empty() { "none".to_string() } else { unsat.join(", ") }));
    let defective = !consistent || !unsat.is_empty();
    Ok(rep.finish(u8::from(defective)))
}

fn justify(t: &TBox, goal: &Axiom) -> Result<Outcome, CliError> {
    let mut rep = Report::new("justify");
    rep.set("axiom", goal);
    match all_justifications(t, goal) {
        Ok(js) => {
            rep.set("entailed", true);
            rep.set("justifications", js.sets.iter().map(|s| set_json(t, s)).collect::<Vec<_>>());
            rep.line(format!("{} justification(s) for {goal}", js.len()));
            for s in &js.sets {
                rep.line(set_text(t, s));
            }
            Ok(rep.finish(0))
        }
        Err(DiagnosisError::NotEntailed) => {
            rep.set("entailed", false);
            rep.set("justifications", Vec::<Value>::new());
            rep.line(format!("{goal} is not entailed"));
            Ok(rep.finish(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn mups_cmd(t: &TBox, concept: &str) -> Result<Outcome, CliError> {
    if !t.concept_names().contains(concept) {
        return Err(CliError::Usage(format!("--concept: {concept} is not a concept name of the TBox")));
    }
    let mut rep = Report::new("mups");
    rep.set("concept", concept);
    match mups(t, concept) {
        Ok(sets) => {
            rep.set("satisfiable", false);
            rep.set("mups", sets.sets.iter().map(|s| set_json(t, s)).collect::<Vec<_>>());
            rep.line(format!("{} MUPS for {concept}", sets.len()));
            for s in &sets.sets {
                rep.line(set_text(t, s));
            }
            Ok(rep.finish(0))
        }
        Err(DiagnosisError::NotUnsatisfiable(_)) => {
            rep.set("satisfiable", true);
            rep.set("mups", Vec::<Value>::new());
            rep.line(format!("{concept} is satisfiable"));
            Ok(rep.finish(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn mips_cmd(t: &TBox) -> Result<Outcome, CliError> {
    let sets = mips(t)?;
    let rank = rank_axioms_by_mips_arity(&sets);
    let mut rep = Report::new("mips");
    rep.set("mips", sets.sets.iter().map(|s| set_json(t, s)).collect::<Vec<_>>());
    rep.set("arity", rank.iter().map(|(id, n)| json!({ "id": id.to_string(), "arity": n })).collect::<Vec<_>>());
    rep.line(format!("{} MIPS", sets.len()));
    for s in &sets.sets {
        rep.line(set_text(t, s));
    }
    if !rank.is_empty() {
        let ranked: Vec<String> = rank.iter().map(|(id, n)| format!("{id}:{n}")).collect();
        rep.line(format!("arity: {}", ranked.join(" ")));
    }
    Ok(rep.finish(0))
}

fn hst(t: &TBox) -> Result<Outcome, CliError> {
    let conflicts = mips(t)?;
    let sets = minimal_hitting_sets(&conflicts)?;
    let mut rep = Report::new("hst");
    rep.set("conflicts", conflicts.len());
    rep.set("hitting_sets", sets.sets.iter().map(|s| set_json(t, s)).collect::<Vec<_>>());
    rep.line(format!("{} minimal hitting sets over {} MIPS", sets.len(), conflicts.len()));
    for s in &sets.sets {
        rep.line(set_text(t, s));
    }
    Ok(rep.finish(0))
}

fn debug_mode(mode: Mode) -> DebugMode {
    match mode {
        Mode::Hs => DebugMode::HittingSet,
        Mode::AllFalse => DebugMode::RemoveAllFalse,
    }
}

fn verified_list(cdp: &Cdp, repairs: &[Repair]) -> Result<Vec<Value>, CliError> {
    repairs
        .iter()
        .map(|r| Ok(json!({ "add": r.add(), "delete": r.delete(), "is_repair": verify_repair(cdp, r)?.is_repair })))
        .collect()
}

fn debug(cdp: &Cdp, mode: Mode) -> Result<Outcome, CliError> {
    let mut rep = Report::new("debug");
    rep.set("mode", debug_mode(mode));
    let repairs = match debug_repairs(cdp, debug_mode(mode)) {
        Ok(r) => r,
        Err(e @ ontorepair_core::RepairError::NoRepairWithoutCorrectRemoval { .. }) => {
            rep.set("repairs", Vec::<Value>::new());
            rep.set("error", e.to_string());
            rep.line(e.to_string());
            return Ok(rep.finish(1));
        }
        Err(e) => return Err(e.into()),
    };
    rep.set("repairs", verified_list(cdp, &repairs)?);
    rep.line(format!("{} repair(s)", repairs.len()));
    for r in &repairs {
        let ids: AxiomSet = r.delete().iter().filter_map(|a| cdp.tbox.find(a)).map(|s| s.id).collect();
        rep.line(set_text(&cdp.tbox, &ids));
    }
    Ok(rep.finish(if repairs.is_empty() { 1 } else { 0 }))
}

fn complete(cdp: &Cdp, rounds: usize, choice: Choice) -> Result<Outcome, CliError> {
    if cdp.missing.is_empty() {
        return Err(CliError::Usage("complete needs --missing <file>".into()));
    }
    let mut rep = Report::new("complete");
    let mut reports = Vec::new();
    for m in &cdp.missing {
        let c = completion_candidates(cdp, m)?;
        rep.line(format!("candidates for {m}:"));
        for cand in &c.candidates {
            let mut flags = vec![cand.verdict.to_string()];
            if cand.already_entailed {
                flags.push("entailed".into());
            }
            if cand.lifted {
                flags.push("lifted".into());
            }
            rep.line(format!("  {} [{}]", cand.axiom, flags.join(", ")));
        }
        reports.push(c);
    }
    rep.set("candidates", &reports);
    let policy = match choice {
        Choice::MostGeneral => ChoicePolicy::MostGeneral,
        Choice::MissingItself => ChoicePolicy::MissingItself,
    };
    match complete_repair(cdp, policy, rounds) {
        Ok(r) => {
            rep.set("repair", json!({ "add": r.add(), "delete": r.delete() }));
            rep.line(format!("repair: {}", repair_text(&r)));
            Ok(rep.finish(0))
        }
        Err(e) => {
            let err: CliError = e.clone().into();
            if err.code() != 1 {
                return Err(err);
            }
            rep.set("repair", Value::Null);
            rep.set("error", e.to_string());
            rep.line(format!("no repair: {e}"));
            Ok(rep.finish(1))
        }
    }
}

fn combined(cdp: &Cdp, mode: Mode) -> Result<Outcome, CliError> {
    let mut rep = Report::new("repair");
    let options = CombinedOptions { mode: debug_mode(mode), ..CombinedOptions::default() };
    match combined_repair(cdp, options) {
        Ok(r) => {
            let v = verify_repair(cdp, &r)?;
            rep.set("repair", json!({ "add": r.add(), "delete": r.delete() }));
            rep.set("verification", &v);
            rep.line(repair_text(&r));
            Ok(rep.finish(if v.is_repair { 0 } else { 1 }))
        }
        Err(e) => {
            let err: CliError = e.clone().into();
            if err.code() != 1 {
                return Err(err);
            }
            rep.set("repair", Value::Null);
            rep.set("error", e.to_string());
            rep.line(format!("no repair: {e}"));
            Ok(rep.finish(1))
        }
    }
}

fn verify(cdp: &Cdp, repairs: &[NamedRepair]) -> Result<Outcome, CliError> {
    let mut rep = Report::new("verify");
    let mut all = true;
    let mut out = BTreeMap::new();
    for n in repairs {
        let v = verify_repair(cdp, &n.repair)?;
        all &= v.is_repair;
        let clauses = [
            ("i", v.additions_true.holds),
            ("ii", v.deletions_false.holds),
            ("iii", v.consistent.holds),
            ("iv", v.missing_entailed.holds),
            ("v", v.wrong_excluded.holds),
        ];
        let failed: Vec<&str> = clauses.iter().filter(|(_, h)| !h).map(|(c, _)| *c).collect();
        if v.is_repair {
            rep.line(format!("{}: repair", n.id));
        } else {
            rep.line(format!("{}: not a repair (fails {})", n.id, failed.join(", ")));
        }
        out.insert(n.id.clone(), v);
    }
    rep.set("repairs", out);
    rep.set("all_repairs", all);
    Ok(rep.finish(if all { 0 } else { 1 }))
}

fn compare(cdp: &Cdp, repairs: &[NamedRepair], universe: Universe) -> Result<Outcome, CliError> {
    let plain: Vec<Repair> = repairs.iter().map(|n| n.repair.clone()).collect();
    let u = match universe {
        Universe::Auto => AxiomUniverse::for_problem(cdp, &plain),
        Universe::Shape => comparison_universe(cdp.concepts(), cdp.tbox.role_names()),
    };
    let mut ctx = PreferenceContext::new(cdp, u)?;
    let named: Vec<(String, Repair)> = repairs.iter().map(|n| (n.id.clone(), n.repair.clone())).collect();
    let report = ctx.report(&named)?;
    let mut rep = Report::new("compare");
    rep.set("report", &report);
    rep.line(format!("universe: {} axioms", report.universe_size));
    let value = serde_json::to_value(&report).expect("reports serialize");
    if let Some(matrix) = value["matrix"].as_object() {
        for (a, row) in matrix {
            for (b, cell) in row.as_object().into_iter().flatten() {
                if a != b {
                    let s = |k: &str| cell[k].as_str().unwrap_or("").to_string();
                    rep.line(format!("{a} vs {b}: {} {} {}", s("completeness"), s("correctness"), s("subset")));
                }
            }
        }
    }
    if let Some(optimal) = value["optimal"].as_object() {
        for (k, v) in optimal {
            let ids: Vec<&str> = v.as_array().into_iter().flatten().filter_map(|x| x.as_str()).collect();
            rep.line(format!("optimal {k}: {}", ids.join(" ")));
        }
    }
    if let Some(sky) = value["skyline"].as_object() {
        for (k, v) in sky {
            let ids: Vec<&str> = v.as_array().into_iter().flatten().filter_map(|x| x.as_str()).collect();
            rep.line(format!("skyline {k}: {}", ids.join(" ")));
        }
    }
    Ok(rep.finish(0))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    ontologies: BTreeMap<String, PathBuf>,
    #[serde(default)]
    alignments: BTreeMap<String, PathBuf>,
}

fn load_network(path: &Path) -> Result<OntologyNetwork, CliError> {
    let manifest: Manifest = serde_json::from_str(&read(path)?).map_err(|e| CliError::read(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut n = OntologyNetwork::default();
    for (id, file) in manifest.ontologies {
        let p = base.join(file);
        let t = parse_tbox_as(&read(&p)?, &id).map_err(|e| CliError::read(&p, e))?;
        n.ontologies.insert(id, t);
    }
    for (id, file) in manifest.alignments {
        let p = base.join(file);
        n.alignments.insert(id, parse_alignment(&read(&p)?).map_err(|e| CliError::read(&p, e))?);
    }
    n.validate()?;
    Ok(n)
}

fn network_check(n: &OntologyNetwork) -> Result<Outcome, CliError> {
    let union = network_to_tbox(n)?;
    let mut r = Reasoner::new(&union.tbox);
    let consistent = r.is_consistent()?;
    let unsat = if consistent { r.unsatisfiable_concepts()? } else { Vec::new() };
    let violations = conservativity_violations(n)?;
    let candidates = detect_candidate_missing_isa(n)?;
    let mut rep = Report::new("network check");
    rep.set("axioms", union.tbox.len());
    rep.set("consistent", consistent);
    rep.set("unsatisfiable", &unsat);
    rep.set("conservativity_violations", &violations);
    rep.set("candidate_missing_isa", &candidates);
    rep.line(format!("union: {} axioms, consistent: {}", union.tbox.len(), if consistent { "yes" } else { "no" }));
    rep.line(format!("unsatisfiable: {}", if unsat.is_empty() { "none".to_string() } else { unsat.join(", ") }));
    for v in &violations {
        rep.line(format!("conservativity: {} gains {}", v.ontology, v.axiom));
    }
    for c in &candidates {
        rep.line(format!("candidate missing in {}: {}", c.ontology, c.axiom));
    }
    let _ = writeln!(rep.text, "{} violation(s), {} candidate(s)", violations.len(), candidates.len());
    let defective = !consistent || !unsat.is_empty() || !violations.is_empty();
    Ok(rep.finish(u8::from(defective)))
}

fn network_repair(n: &OntologyNetwork, wrong: Vec<Axiom>, oracle: Option<&Oracle>) -> Result<Outcome, CliError> {
    let result = mapping_repair(n, &MappingRepairOptions { wrong, oracle })?;
    let mut rep = Report::new("network repair");
    rep.set("repair", json!({ "add": result.repair.add(), "delete": result.repair.delete() }));
    rep.set("deleted_ontology_axioms", result.deleted_ontology_axioms);
    rep.set("deleted_mapping_axioms", result.deleted_mapping_axioms);
    rep.set("deleted_confidence", result.deleted_confidence);
    rep.set("ontology_edit_required", result.ontology_edit_required);
    for d in result.repair.delete() {
        rep.line(format!("delete {d}"));
    }
    rep.line(format!(
        "{} mapping and {} ontology deletion(s), confidence {:.3}",
        result.deleted_mapping_axioms, result.deleted_ontology_axioms, result.deleted_confidence
    ));
    if result.ontology_edit_required {
        rep.line("a conflict lies inside one ontology; that ontology needs editing");
    }
    Ok(rep.finish(u8::from(result.ontology_edit_required)))
}

fn serve(port: Option<u16>, data_dir: Option<PathBuf>, config: Option<PathBuf>) -> Result<Outcome, CliError> {
    let mut cfg = ServiceConfig::load(config.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(p) = port {
        cfg.port = p;
    }
    if let Some(d) = data_dir {
        cfg.data_dir = d;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Resource(e.to_string()))?;
    eprintln!("listening on port {} with data in {}", cfg.port, cfg.data_dir.display());
    runtime.block_on(ontorepair_service::serve(cfg)).map_err(|e| CliError::Input(e.to_string()))?;
    let mut rep = Report::new("serve");
    rep.line("stopped");
    Ok(rep.finish(0))
}
