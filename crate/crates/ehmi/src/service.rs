//! JSON-over-HTTP API.
//!
//! | route | |
//! |---|---|
//! | `GET /api/schemas` | every schema of a readability variant (`?r_variant=`) |
//! | `GET /api/schemas/{category}` | one schema |
//! | `POST /api/validate` | answer set in, `{valid, errors, warnings, normalized}` out |
//! | `POST /api/score` | answer set in (`?weights=1,1,1,1,1,1,1&r_variant=`), evaluation out |
//! | `POST /api/compare` | `{proposals, weights?, r_variant?}` in, comparison report out |
//! | `POST /api/sweep` | `{proposals, spec?, r_variant?}` in, sensitivity report out |
//! | `GET/PUT /api/drafts/{id}` | draft storage; PUT must carry the current version |
//! | `GET /api/replication` | the five bundled answer sets and their comparison |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ehmi_core::answers::{validate, ProposalAnswerSet};
use ehmi_core::report::{compare, weight_sweep, SweepSpec};
use ehmi_core::schema::{Category, SchemaDocument, SchemaSet};
use ehmi_core::scoring::{Evaluation, WeightVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::data::bundled_answers;
use crate::engine::{evaluate, EvaluateError, Schemas};

#[derive(Clone)]
pub struct AppState {
    schemas: Arc<Schemas>,
    drafts: Arc<Mutex<HashMap<String, Draft>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Draft {
    pub id: String,
    pub version: u64,
    pub draft: Value,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl std::fmt::Display) -> Self {
        Self { status, body: json!({ "error": message.to_string() }) }
    }

    fn bad_request(message: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<EvaluateError> for ApiError {
    fn from(e: EvaluateError) -> Self {
        match e {
            EvaluateError::Invalid { proposal, report } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{proposal}: invalid answers"))
                    .with("proposal", json!(proposal))
                    .with("errors", json!(report.errors))
                    .with("warnings", json!(report.warnings))
            }
            EvaluateError::Score { proposal, source } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{proposal}: {source}"))
                    .with("proposal", json!(proposal))
            }
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

/// Weights either as `[w_S, …, w_R]` or as `{s, ce, a, eu, cc, p, r}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WeightsInput {
    Array([f64; 7]),
    Object(WeightVector),
}

impl WeightsInput {
    fn vector(&self) -> WeightVector {
        match self {
            WeightsInput::Array(a) => WeightVector::from_array(*a),
            WeightsInput::Object(w) => *w,
        }
    }
}

fn checked_weights(w: Option<&WeightsInput>) -> Result<WeightVector, ApiError> {
    let w = w.map_or(WeightVector::UNIT, WeightsInput::vector);
    w.validate().map_err(ApiError::bad_request)?;
    Ok(w)
}

fn schema_set<'a>(state: &'a AppState, variant: Option<&str>) -> Result<&'a SchemaSet, ApiError> {
    state.schemas.get(variant).map_err(ApiError::bad_request)
}

#[derive(Debug, Default, Deserialize)]
struct VariantQuery {
    r_variant: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct ScoreQuery {
    weights: Option<String>,
    r_variant: Option<String>,
}

#[derive(Serialize)]
struct SchemasResponse {
    variant: String,
    variants: Vec<String>,
    total_questions: usize,
    schemas: Vec<SchemaDocument>,
}

async fn list_schemas(State(state): State<AppState>, Query(q): Query<VariantQuery>) -> ApiResult<SchemasResponse> {
    let set = schema_set(&state, q.r_variant.as_deref())?;
    Ok(Json(SchemasResponse {
        variant: q.r_variant.unwrap_or_else(|| state.schemas.default_variant().to_string()),
        variants: state.schemas.variants().map(String::from).collect(),
        total_questions: set.total_questions(),
        schemas: set.iter().map(|s| s.to_document()).collect(),
    }))
}

async fn one_schema(
    State(state): State<AppState>,
    Path(category): Path<String>,
    Query(q): Query<VariantQuery>,
) -> ApiResult<SchemaDocument> {
    let category: Category = category.parse().map_err(ApiError::not_found)?;
    let set = schema_set(&state, q.r_variant.as_deref())?;
    Ok(Json(set.get(category).to_document()))
}

async fn validate_answers(
    State(state): State<AppState>,
    Query(q): Query<VariantQuery>,
    body: Bytes,
) -> ApiResult<Value> {
    let answers: ProposalAnswerSet = parse_body(&body)?;
    let set = schema_set(&state, q.r_variant.as_deref())?;
    Ok(Json(match validate(&answers, set) {
        Ok(v) => json!({ "valid": true, "errors": [], "warnings": v.warnings, "normalized": v.answers }),
        Err(report) => {
            json!({ "valid": false, "errors": report.errors, "warnings": report.warnings, "normalized": null })
        }
    }))
}

fn parse_weight_list(text: &str) -> Result<WeightsInput, ApiError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| ApiError::bad_request(format!("weights: {e}")))?;
    let array: [f64; 7] = values
        .try_into()
        .map_err(|v: Vec<f64>| ApiError::bad_request(format!("weights: expected 7 values, got {}", v.len())))?;
    Ok(WeightsInput::Array(array))
}

async fn score(State(state): State<AppState>, Query(q): Query<ScoreQuery>, body: Bytes) -> ApiResult<Value> {
    let answers: ProposalAnswerSet = parse_body(&body)?;
    let weights = q.weights.as_deref().map(parse_weight_list).transpose()?;
    let weights = checked_weights(weights.as_ref())?;
    let set = schema_set(&state, q.r_variant.as_deref())?;
    let scored = evaluate(&answers, set, &weights)?;
    Ok(Json(json!({
        "evaluation": scored.evaluation,
        "warnings": scored.warnings,
        "normalized": scored.normalized,
    })))
}

#[derive(Deserialize)]
struct CompareRequest {
    proposals: Vec<ProposalAnswerSet>,
    #[serde(default)]
    weights: Option<WeightsInput>,
    #[serde(default)]
    r_variant: Option<String>,
}

fn evaluate_many(
    state: &AppState,
    proposals: &[ProposalAnswerSet],
    variant: Option<&str>,
    weights: &WeightVector,
) -> Result<Vec<Evaluation>, ApiError> {
    let set = schema_set(state, variant)?;
    proposals.iter().map(|p| Ok(evaluate(p, set, weights)?.evaluation)).collect()
}

async fn compare_proposals(State(state): State<AppState>, body: Bytes) -> ApiResult<Value> {
    let req: CompareRequest = parse_body(&body)?;
    let weights = checked_weights(req.weights.as_ref())?;
    let evaluations = evaluate_many(&state, &req.proposals, req.r_variant.as_deref(), &weights)?;
    let report = compare(&evaluations).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e))?;
    Ok(Json(json!(report)))
}

#[derive(Deserialize)]
struct SweepRequest {
    proposals: Vec<ProposalAnswerSet>,
    #[serde(default = "SweepSpec::degenerate")]
    spec: SweepSpec,
    #[serde(default)]
    r_variant: Option<String>,
}

async fn sweep(State(state): State<AppState>, body: Bytes) -> ApiResult<Value> {
    let req: SweepRequest = parse_body(&body)?;
    req.spec.base.validate().map_err(ApiError::bad_request)?;
    let evaluations = evaluate_many(&state, &req.proposals, req.r_variant.as_deref(), &req.spec.base)?;
    let report =
        weight_sweep(&evaluations, &req.spec).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e))?;
    Ok(Json(json!(report)))
}

fn check_draft_id(id: &str) -> Result<(), ApiError> {
    let ok = !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ApiError::bad_request("draft ids use 1 to 128 letters, digits, '-' or '_'"))
    }
}

async fn get_draft(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Draft> {
    check_draft_id(&id)?;
    let drafts = state.drafts.lock().expect("draft store poisoned");
    drafts.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("no draft {id:?}")))
}

#[derive(Deserialize)]
struct PutDraft {
    version: u64,
    draft: Value,
}

/// Compare-and-swap: `version` must be the stored version (0 for a new
/// draft). The stored version is then incremented.
async fn put_draft(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Draft> {
    check_draft_id(&id)?;
    let req: PutDraft = parse_body(&body)?;
    let mut drafts = state.drafts.lock().expect("draft store poisoned");
    let current = drafts.get(&id).map_or(0, |d| d.version);
    if req.version != current {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("stale version {} (current {current})", req.version))
            .with("current_version", json!(current)));
    }
    let draft = Draft { id: id.clone(), version: current + 1, draft: req.draft };
    drafts.insert(id, draft.clone());
    Ok(Json(draft))
}

async fn replication(State(state): State<AppState>) -> ApiResult<Value> {
    let proposals = bundled_answers();
    let evaluations = evaluate_many(&state, &proposals, None, &WeightVector::UNIT)?;
    let report = compare(&evaluations).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?;
    Ok(Json(json!({ "proposals": proposals, "comparison": report })))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

/// `cors_origin: None` allows any origin.
pub fn router(schemas: Schemas, cors_origin: Option<HeaderValue>) -> Router {
    let state = AppState { schemas: Arc::new(schemas), drafts: Arc::default() };
    let cors = match cors_origin {
        Some(origin) => CorsLayer::permissive().allow_origin(AllowOrigin::exact(origin)),
        None => CorsLayer::permissive(),
    };
    Router::new()
        .route("/api/schemas", get(list_schemas))
        .route("/api/schemas/{category}", get(one_schema))
        .route("/api/validate", post(validate_answers))
        .route("/api/score", post(score))
        .route("/api/compare", post(compare_proposals))
        .route("/api/sweep", post(sweep))
        .route("/api/drafts/{id}", get(get_draft).put(put_draft))
        .route("/api/replication", get(replication))
        .fallback(not_found)
        .layer(cors)
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, schemas: Schemas, cors_origin: Option<HeaderValue>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(schemas, cors_origin))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
