use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use ehmi::data::{bundled_answer, bundled_answers};
use ehmi::engine::Schemas;
use ehmi::service::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(Schemas::bundled().unwrap(), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body.to_string())).await
}

fn fbl() -> Value {
    serde_json::to_value(bundled_answer("fbl").unwrap()).unwrap()
}

#[tokio::test]
async fn schemas_listing() {
    let app = app();
    let (status, body) = get(&app, "/api/schemas").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["variant"], "results");
    assert_eq!(body["schemas"].as_array().unwrap().len(), 7);
    assert_eq!(body["variants"], json!(["appendix", "results"]));

    let (_, appendix) = get(&app, "/api/schemas?r_variant=appendix").await;
    let (_, results) = get(&app, "/api/schemas").await;
    assert_eq!(appendix["total_questions"].as_u64().unwrap(), results["total_questions"].as_u64().unwrap() + 3);

    let (status, _) = get(&app, "/api/schemas?r_variant=nope").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn single_schema() {
    let app = app();
    let (status, body) = get(&app, "/api/schemas/A").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["questions"].as_array().unwrap().len(), 73);
    assert_eq!(get(&app, "/api/schemas/ce").await.1["category"], "CE");
    assert_eq!(get(&app, "/api/schemas/XYZ").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn validate_reports_errors_without_failing() {
    let app = app();
    let (status, body) = post(&app, "/api/validate", fbl()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["valid"], true);
    assert_eq!(body["warnings"].as_array().unwrap().len(), 3);

    let mut broken = fbl();
    broken["accessibility"]["answers"]["A1"] = json!(7);
    let (status, body) = post(&app, "/api/validate", broken).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["valid"], false);
    assert!(!body["errors"].as_array().unwrap().is_empty());
    assert_eq!(body["normalized"], Value::Null);
}

#[tokio::test]
async fn gate_a1_no_zeroes_a9_to_a14() {
    let app = app();
    let mut set = fbl();
    set["accessibility"]["answers"]["A1"] = json!("no");
    let (_, body) = post(&app, "/api/validate", set).await;
    let items = body["normalized"]["accessibility"]["items"].as_array().unwrap();
    for n in 9..=14 {
        let item = items.iter().find(|i| i["id"] == format!("A{n}")).unwrap();
        assert_eq!(item["value"], 0.0);
        assert_eq!(item["source"]["kind"], "forced");
    }
}

#[tokio::test]
async fn score_with_weights() {
    let app = app();
    let (status, body) = post(&app, "/api/score", fbl()).await;
    assert_eq!(status, StatusCode::OK);
    let total = body["evaluation"]["total"].as_f64().unwrap();
    assert!((total - 31.84).abs() <= 0.02);

    let (status, body) = post(&app, "/api/score?weights=7,0,0,0,0,0,0", fbl()).await;
    assert_eq!(status, StatusCode::OK);
    let s = body["evaluation"]["scores"]["categories"][0]["score"].as_f64().unwrap();
    assert!((body["evaluation"]["total"].as_f64().unwrap() - 7.0 * s).abs() < 1e-9);

    let (status, body) = post(&app, "/api/score?weights=2,1,1,1,1,1,1", fbl()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("sum to 7"));
    assert_eq!(post(&app, "/api/score?weights=1,1", fbl()).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&app, "/api/score?r_variant=appendix", fbl()).await.0, StatusCode::OK);
}

#[tokio::test]
async fn invalid_answers_are_unprocessable() {
    let app = app();
    let mut set = fbl();
    set["ease"]["answers"]["EU2"] = json!(140);
    let (status, body) = post(&app, "/api/score", set).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["proposal"], "FBL");
    assert!(!body["errors"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let app = app();
    for uri in ["/api/validate", "/api/score", "/api/compare", "/api/sweep"] {
        let (status, body) = call(&app, Method::POST, uri, Some("{not json".into())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].is_string());
    }
    let (status, _) = post(&app, "/api/compare", json!({ "proposals": "x" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn compare_reproduces_the_final_table() {
    let app = app();
    let proposals = serde_json::to_value(bundled_answers()).unwrap();
    let (status, body) = post(&app, "/api/compare", json!({ "proposals": proposals })).await;
    assert_eq!(status, StatusCode::OK);
    let order: Vec<&str> =
        body["ranking"].as_array().unwrap().iter().map(|r| r["proposal"].as_str().unwrap()).collect();
    assert_eq!(order, ["No eHMI", "BTD", "FBL", "BSD", "KRD"]);

    // object weights work too; the entry totals follow the dot product
    let weights = json!({ "s": 0.0, "ce": 0.0, "a": 3.5, "eu": 0.0, "cc": 0.0, "p": 0.0, "r": 3.5 });
    let (_, body) = post(&app, "/api/compare", json!({ "proposals": proposals, "weights": weights })).await;
    for e in body["entries"].as_array().unwrap() {
        let s = e["scores"]["categories"].as_array().unwrap();
        let want = 3.5 * s[2]["score"].as_f64().unwrap() + 3.5 * s[6]["score"].as_f64().unwrap();
        assert!((e["total"].as_f64().unwrap() - want).abs() < 0.005);
    }
    assert_eq!(body["ranking"][0]["proposal"], "BTD");

    let (status, _) = post(&app, "/api/compare", json!({ "proposals": [] })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn sweep_endpoint() {
    let app = app();
    let proposals = serde_json::to_value(bundled_answers()).unwrap();
    let spec = json!({ "vary": ["A"], "step": 1.0 });
    let (status, body) = post(&app, "/api/sweep", json!({ "proposals": proposals, "spec": spec })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["points"].as_array().unwrap().len(), 8);
    assert_eq!(body["baseline_winner"], "No eHMI");

    let (_, degenerate) = post(&app, "/api/sweep", json!({ "proposals": proposals })).await;
    assert_eq!(degenerate["points"].as_array().unwrap().len(), 1);
    assert_eq!(degenerate["rank_stability"], 1.0);

    let bad = json!({ "vary": ["A"], "step": 0.0 });
    let (status, _) = post(&app, "/api/sweep", json!({ "proposals": proposals, "spec": bad })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn drafts_use_versions() {
    let app = app();
    assert_eq!(get(&app, "/api/drafts/d1").await.0, StatusCode::NOT_FOUND);
    let put = |v: u64, draft: Value| {
        call(&app, Method::PUT, "/api/drafts/d1", Some(json!({ "version": v, "draft": draft }).to_string()))
    };

    let (status, body) = put(0, json!({ "proposal": "x" })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], 1);
    let (status, body) = put(0, json!({ "proposal": "y" })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["current_version"], 1);
    assert_eq!(put(1, json!({ "proposal": "z" })).await.1["version"], 2);
    assert_eq!(get(&app, "/api/drafts/d1").await.1["draft"]["proposal"], "z");

    assert_eq!(get(&app, "/api/drafts/bad%20id").await.0, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, Method::PUT, "/api/drafts/d1", Some("[]".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_writers_get_exactly_one_success() {
    let app = Arc::new(app());
    for round in 0..20u64 {
        let mut tasks = Vec::new();
        for writer in 0..8 {
            let app = app.clone();
            tasks.push(tokio::spawn(async move {
                let body = json!({ "version": round, "draft": { "writer": writer } }).to_string();
                call(&app, Method::PUT, "/api/drafts/shared", Some(body)).await.0
            }));
        }
        let mut ok = 0;
        for t in tasks {
            match t.await.unwrap() {
                StatusCode::OK => ok += 1,
                StatusCode::CONFLICT => {}
                other => panic!("unexpected {other}"),
            }
        }
        assert_eq!(ok, 1, "round {round}");
    }
    assert_eq!(get(&app, "/api/drafts/shared").await.1["version"], 20);
}

#[tokio::test]
async fn replication_and_fallback() {
    let app = app();
    let (status, body) = get(&app, "/api/replication").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["proposals"].as_array().unwrap().len(), 5);
    assert_eq!(body["comparison"]["ranking"][0]["proposal"], "No eHMI");

    let (status, body) = get(&app, "/api/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn cors_preflight() {
    let app = app();
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/api/compare")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let res = app.oneshot(req).await.unwrap();
    assert!(res.status().is_success());
    assert!(res.headers().contains_key("access-control-allow-origin"));
}
