use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ontorepair_core::{parse_axiom, parse_tbox, Oracle};
use ontorepair_service::session::ConflictOrder;
use ontorepair_service::{router, AppState, Event, EventKind, ServiceConfig, Session, Store};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn lines(name: &str) -> Vec<String> {
    fixture(name).lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}

fn spec(prefix: &str) -> Value {
    json!({
        "tbox": fixture(&format!("{prefix}.tbox")),
        "missing": lines(&format!("{prefix}_missing.txt")),
        "wrong": lines(&format!("{prefix}_wrong.txt")),
    })
}

fn app() -> Router {
    router(AppState::new(Store::memory(), ConflictOrder::MipsArity))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, String) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    (status, serde_json::from_str(&text).unwrap_or(Value::Null), text)
}

async fn create(app: &Router, spec: Value) -> String {
    let (status, v, text) = call(app, "POST", "/sessions", Some(spec)).await;
    assert_eq!(status, StatusCode::CREATED, "{text}");
    v["id"].as_str().unwrap().to_string()
}

/// Answers every pending query from a truth TBox until none remain.
async fn answer_all(app: &Router, id: &str, truth: &str) -> usize {
    let oracle = Oracle::truth(&parse_tbox(&fixture(truth)).unwrap());
    let mut answered = 0;
    loop {
        let (_, q, _) = call(app, "GET", &format!("/sessions/{id}/queries"), None).await;
        let pending = q["pending"].as_array().unwrap().clone();
        if pending.is_empty() {
            return answered;
        }
        for p in pending {
            let axiom = p["axiom"].as_str().unwrap();
            let verdict = oracle.ask(&parse_axiom(axiom).unwrap()).unwrap();
            let (status, _, text) =
                call(app, "POST", &format!("/sessions/{id}/answers"), Some(json!({ "axiom": axiom, "verdict": verdict }))).await;
            if status == StatusCode::CONFLICT {
                // an earlier answer in this batch removed the query
                continue;
            }
            assert_eq!(status, StatusCode::OK, "{text}");
            answered += 1;
        }
    }
}

fn find_repair<'a>(repairs: &'a Value, add: &[&str], delete: &[&str]) -> Option<&'a Value> {
    let strings = |v: &Value| v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect::<Vec<_>>();
    let mut want_add: Vec<String> = add.iter().map(|s| s.to_string()).collect();
    let mut want_delete: Vec<String> = delete.iter().map(|s| s.to_string()).collect();
    want_add.sort();
    want_delete.sort();
    repairs.as_array().unwrap().iter().find(|r| strings(&r["add"]) == want_add && strings(&r["delete"]) == want_delete)
}

const AX1: &str = "P1 SubClassOf P2";
const AX6: &str = "P3 SubClassOf P5";
const AX10: &str = "P6 SubClassOf exists s. (not P8)";

#[tokio::test]
async fn fig3_first_queries_are_the_defects() {
    let app = app();
    let (status, v, _) = call(&app, "POST", "/sessions", Some(spec("fig3"))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["phase"], "Detecting");
    let axioms: Vec<&str> = v["pending"].as_array().unwrap().iter().map(|q| q["axiom"].as_str().unwrap()).collect();
    assert_eq!(axioms, ["P4 SubClassOf P5", "P1 SubClassOf bottom", "P3 SubClassOf bottom"]);
    assert_eq!(v["pending"][0]["reason"]["kind"], "missing");
    assert_eq!(v["pending"][1]["reason"]["kind"], "wrong");
}

#[tokio::test]
async fn fig3_conflict_queries_follow_mips_arity() {
    let app = app();
    let id = create(&app, spec("fig3")).await;
    for (axiom, verdict) in [("P4 SubClassOf P5", "true"), ("P1 SubClassOf bottom", "false"), ("P3 SubClassOf bottom", "false")] {
        let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/answers"), Some(json!({ "axiom": axiom, "verdict": verdict }))).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, q, _) = call(&app, "GET", &format!("/sessions/{id}/queries"), None).await;
    assert_eq!(q["phase"], "Validating");
    let pending = q["pending"].as_array().unwrap();
    let arities: Vec<u64> = pending.iter().filter(|p| p["reason"]["kind"] == "conflict").map(|p| p["reason"]["arity"].as_u64().unwrap()).collect();
    assert!(arities.windows(2).all(|w| w[0] >= w[1]));
    let top: Vec<&str> = pending.iter().take(4).map(|p| p["axiom"].as_str().unwrap()).collect();
    assert_eq!(top, [AX1, "P3 SubClassOf P6", "P5 SubClassOf forall s. P8", AX10]);
    let first_candidate = pending.iter().position(|p| p["reason"]["kind"] == "candidate").unwrap();
    assert!(pending[..first_candidate].iter().all(|p| p["reason"]["kind"] == "conflict"));
}

#[tokio::test]
async fn fig3_session_reaches_execution_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig { data_dir: dir.path().to_path_buf(), ..ServiceConfig::default() };
    let app = router(AppState::open(&config).unwrap());
    let id = create(&app, spec("fig3")).await;
    assert!(answer_all(&app, &id, "fig3_truth.tbox").await > 3);

    let (_, view, _) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["phase"], "Repairing");
    let chosen = find_repair(&view["repairs"], &["P4 SubClassOf P5"], &[AX1, AX6, AX10]).expect("remove-all-false repair offered");
    assert_eq!(chosen["status"], "active");
    assert_eq!(chosen["verification"]["is_repair"], true);
    assert!(find_repair(&view["repairs"], &["P4 SubClassOf P5"], &[AX1, AX6]).is_some());
    // with P3 ⊑ P5 kept, the most general completion is P7 ⊑ P3
    assert!(find_repair(&view["repairs"], &["P7 SubClassOf P3"], &[AX1, AX10]).is_some());

    let (status, analysis, _) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(analysis["schema"], "ontorepair.preferences/v1");

    let repair_id = chosen["id"].as_str().unwrap().to_string();
    let (status, done, text) = call(&app, "POST", &format!("/sessions/{id}/execute"), Some(json!({ "repairId": repair_id }))).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    assert_eq!(done["phase"], "Done");
    let (status, _, result) = call(&app, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::OK);
    let repaired = parse_tbox(&result).unwrap();
    assert!(ontorepair_core::reasoner::unsatisfiable_concepts(&repaired).unwrap().is_empty());
    assert!(repaired.contains(&parse_axiom("P4 SubClassOf P5").unwrap()));
    assert_eq!(std::fs::read_to_string(dir.path().join("results").join(format!("{id}.tbox"))).unwrap(), result);
    let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/execute"), Some(json!({ "repairId": repair_id }))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    // no query is issued twice
    let (_, history, history_text) = call(&app, "GET", &format!("/sessions/{id}/history"), None).await;
    let events: Vec<Event> = serde_json::from_value(history["events"].clone()).unwrap();
    let issued: Vec<_> = events.iter().filter_map(|e| match &e.kind { EventKind::QueryIssued { axiom } => Some(axiom.clone()), _ => None }).collect();
    let mut unique = issued.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), issued.len());
    assert!(matches!(events.last().unwrap().kind, EventKind::RepairExecuted { .. }));

    // replay in memory and from disk
    let (_, _, state_live) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let replayed = Session::replay(&events).unwrap();
    assert_eq!(serde_json::to_string(&replayed.view()).unwrap(), state_live);
    let reopened = router(AppState::open(&config).unwrap());
    let (_, _, state_disk) = call(&reopened, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(state_disk, state_live);
    let (_, _, history_disk) = call(&reopened, "GET", &format!("/sessions/{id}/history"), None).await;
    assert_eq!(history_disk, history_text);
    let (_, _, result_disk) = call(&reopened, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(result_disk, result);
}

#[tokio::test]
async fn replay_reproduces_analysis_bytes() {
    let app = app();
    let id = create(&app, spec("fig3")).await;
    answer_all(&app, &id, "fig3_truth.tbox").await;
    let (_, _, analysis) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    let (_, _, queries) = call(&app, "GET", &format!("/sessions/{id}/queries"), None).await;
    let (_, history, _) = call(&app, "GET", &format!("/sessions/{id}/history"), None).await;
    let events: Vec<Event> = serde_json::from_value(history["events"].clone()).unwrap();
    let replayed = Session::replay(&events).unwrap();
    assert_eq!(serde_json::to_string(&replayed.analysis().unwrap()).unwrap(), analysis);
    let pending = json!({ "phase": replayed.phase(), "pending": replayed.pending(), "answered": replayed.view().answers.len() });
    assert_eq!(pending.to_string(), queries);

    let mut tampered = events.clone();
    let idx = tampered.iter().position(|e| matches!(e.kind, EventKind::QueryIssued { .. })).unwrap();
    tampered.remove(idx);
    assert!(Session::replay(&tampered).is_err());
}

#[tokio::test]
async fn revision_withdraws_stale_repairs() {
    let app = app();
    let id = create(&app, spec("fig3")).await;
    answer_all(&app, &id, "fig3_truth.tbox").await;
    let (_, view, _) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let with_ax10: Vec<String> = view["repairs"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["delete"].as_array().unwrap().iter().any(|d| d == AX10))
        .map(|r| r["id"].as_str().unwrap().to_string())
        .collect();
    assert!(!with_ax10.is_empty());

    let uri = format!("/sessions/{id}/answers");
    let (status, _, _) = call(&app, "POST", &uri, Some(json!({ "axiom": AX10, "verdict": "true" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, outcome, text) = call(&app, "POST", &uri, Some(json!({ "axiom": AX10, "verdict": "true", "revise": true }))).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    assert_eq!(outcome["stale"], true);
    let disabled: Vec<String> = outcome["repairs"]["disabled"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    for r in &with_ax10 {
        assert!(disabled.contains(r), "{r} should be withdrawn");
    }
    let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/execute"), Some(json!({ "repairId": with_ax10[0] }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, history, _) = call(&app, "GET", &format!("/sessions/{id}/history"), None).await;
    assert!(history["events"].as_array().unwrap().iter().any(|e| e["type"] == "AnswerRevised"));
}

#[tokio::test]
async fn unknown_verdicts_are_never_added() {
    let app = app();
    let id = create(&app, spec("fig3")).await;
    let oracle = Oracle::truth(&parse_tbox(&fixture("fig3_truth.tbox")).unwrap());
    let mut unknown = Vec::new();
    loop {
        let (_, q, _) = call(&app, "GET", &format!("/sessions/{id}/queries"), None).await;
        let Some(p) = q["pending"].as_array().unwrap().first().cloned() else { break };
        let axiom = p["axiom"].as_str().unwrap().to_string();
        let verdict = if p["reason"]["kind"] == "candidate" && unknown.is_empty() {
            unknown.push(axiom.clone());
            json!("unknown")
        } else {
            json!(oracle.ask(&parse_axiom(&axiom).unwrap()).unwrap())
        };
        let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/answers"), Some(json!({ "axiom": axiom, "verdict": verdict }))).await;
        assert_eq!(status, StatusCode::OK);
    }
    assert_eq!(unknown.len(), 1);
    let (_, r, _) = call(&app, "GET", &format!("/sessions/{id}/repairs"), None).await;
    let repairs = r["repairs"].as_array().unwrap();
    assert!(!repairs.is_empty());
    assert!(repairs.iter().all(|r| r["add"].as_array().unwrap().iter().all(|a| a != &json!(unknown[0]))));
}

#[tokio::test]
async fn clean_session_is_done_immediately() {
    let app = app();
    let tbox = "A SubClassOf B\nB SubClassOf C\n";
    let (status, v, _) = call(&app, "POST", "/sessions", Some(json!({ "tbox": tbox }))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["phase"], "Done");
    let id = v["id"].as_str().unwrap();
    let (_, r, _) = call(&app, "GET", &format!("/sessions/{id}/repairs"), None).await;
    assert_eq!(r["repairs"][0]["add"], json!([]));
    assert_eq!(r["repairs"][0]["delete"], json!([]));
    let (status, _, _) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/execute"), Some(json!({ "repairId": "R1" }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, _, text) = call(&app, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(text, parse_tbox(tbox).unwrap().to_canonical_string());
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let (status, v, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not_found");
    let (status, _, _) = call(&app, "POST", "/sessions/nope/answers", Some(json!({ "axiom": "A SubClassOf B", "verdict": "true" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let mut bad = spec("fig3");
    bad["missing"] = json!(["P4 SubClassOf"]);
    let (status, v, _) = call(&app, "POST", "/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "parse_error");
    let mut bad = spec("fig3");
    bad["wrong"] = json!(["Q1 SubClassOf bottom"]);
    let (status, _, _) = call(&app, "POST", "/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, "POST", "/sessions", Some(json!({ "tbox": "A SubClassOf" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, "POST", "/sessions", Some(json!({ "tbox": 3 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let id = create(&app, spec("fig3")).await;
    let uri = format!("/sessions/{id}/answers");
    let (status, _, _) = call(&app, "POST", &uri, Some(json!({ "axiom": "P7 SubClassOf P1", "verdict": "true" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _, _) = call(&app, "POST", &uri, Some(json!({ "axiom": "P7 SubClassOf", "verdict": "true" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _, _) = call(&app, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/execute"), Some(json!({ "repairId": "R99" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn galen_session_with_seeded_repairs() {
    let app = app();
    let mut s = spec("galen");
    let seeded: Value = serde_json::from_str(&fixture("galen_repairs.json")).unwrap();
    s["options"] = json!({ "repairs": seeded });
    let (_, v, _) = call(&app, "POST", "/sessions", Some(s)).await;
    let id = v["id"].as_str().unwrap().to_string();
    let first: Vec<&str> = v["pending"].as_array().unwrap().iter().take(2).map(|q| q["axiom"].as_str().unwrap()).collect();
    assert_eq!(first, ["Endocarditis SubClassOf PathologicalPhenomenon", "GranulomaProcess SubClassOf NonNormalProcess"]);
    answer_all(&app, &id, "galen_truth.tbox").await;
    let (_, view, _) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["phase"], "Repairing");
    for n in 1..=8 {
        let r = view["repairs"].as_array().unwrap().iter().find(|r| r["id"] == format!("R{n}")).unwrap();
        assert_eq!(r["status"], "active", "R{n}");
    }
    let (status, analysis, _) = call(&app, "GET", &format!("/sessions/{id}/analysis"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(analysis["matrix"]["R8"]["R7"]["completeness"], "more_complete");
    assert_eq!(analysis["matrix"]["R2"]["R3"]["completeness"], "equally_complete");

    let id_r1 = "R1";
    let (status, _, _) = call(&app, "POST", &format!("/sessions/{id}/execute"), Some(json!({ "repairId": id_r1 }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, _, text) = call(&app, "GET", &format!("/sessions/{id}/result"), None).await;
    assert_eq!(text, parse_tbox(&fixture("galen_r1.tbox")).unwrap().to_canonical_string());
}

#[test]
fn config_sources() {
    let cfg = ServiceConfig::from_toml("port = 9000\ndata_dir = \"/tmp/x\"\nconflict_order = \"stated\"\n").unwrap();
    assert_eq!(cfg.port, 9000);
    assert_eq!(cfg.conflict_order, ConflictOrder::Stated);
    assert!(ServiceConfig::from_toml("colour = 1\n").is_err());
    let mut cfg = ServiceConfig::default();
    cfg.apply_env(|k| match k {
        "ONTOREPAIR_PORT" => Some("1234".into()),
        "ONTOREPAIR_DATA_DIR" => Some("/data".into()),
        _ => None,
    })
    .unwrap();
    assert_eq!((cfg.port, cfg.data_dir), (1234, PathBuf::from("/data")));
    assert!(ServiceConfig::default().apply_env(|_| Some("x".into())).is_err());
}
