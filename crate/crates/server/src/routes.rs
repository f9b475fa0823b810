use std::collections::BTreeSet;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use labelscope_core::corpus::{export_manifest_json, write_export_lines, CorpusSnapshot};
use labelscope_core::explain::{explain, ExplainConfig};
use labelscope_core::projector::{layout_records, select_polygon, ProjectionConfig};
use labelscope_core::quality::{confidence_report, cooccurrence, density_report, duplication_report};
use labelscope_core::relabel::RelabelOp;
use labelscope_core::surrogate::{evaluate, stratified_split, train, TrainingConfig};
use labelscope_core::vectorizer::{Tokenizer, VectorizerConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::error::{ApiError, ApiResult};
use crate::state::{projection_key, JobStatus, LoadedModel, SharedState};

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/snapshot", get(snapshot))
        .route("/labels/tree", get(label_tree))
        .route("/labels/cooccurrence", get(label_cooccurrence))
        .route("/records", get(records))
        .route("/train", post(start_train))
        .route("/metrics", get(metrics))
        .route("/model", get(model_file))
        .route("/confidence", get(confidence))
        .route("/density", get(density))
        .route("/projection", post(start_projection))
        .route("/projection/select", post(projection_select))
        .route("/explain", post(explain_record))
        .route("/relabel/propose", post(relabel_propose))
        .route("/relabel/revert", post(relabel_revert))
        .route("/relabel/apply", post(relabel_apply))
        .route("/relabel/history", get(relabel_history))
        .route("/export", get(export_jsonl))
        .route("/export/schema", get(export_schema))
        .route("/jobs/{id}", get(job))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn envelope(version: u64, data: impl Serialize) -> Json<Value> {
    Json(json!({ "snapshot_version": version, "data": data }))
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))
}

fn current(state: &SharedState) -> (CorpusSnapshot, Option<LoadedModel>) {
    let s = state.read();
    (s.snapshot().clone(), s.model.clone())
}

fn require_model(model: Option<LoadedModel>) -> ApiResult<LoadedModel> {
    model.ok_or_else(ApiError::model_not_trained)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn health(State(state): State<SharedState>) -> Json<Value> {
    let s = state.read();
    envelope(s.version(), json!({ "status": "ok", "model": s.model.as_ref().map(|m| m.id.clone()) }))
}

async fn snapshot(State(state): State<SharedState>) -> Json<Value> {
    let s = state.read();
    let pending = s.history.has_pending();
    envelope(
        s.version(),
        json!({
            "stats": s.snapshot().stats(),
            "fields": s.snapshot().field_names(),
            "schema": s.snapshot().schema(),
            "model": s.model.as_ref().map(|m| m.id.clone()),
            "pending_ops": pending,
        }),
    )
}

async fn label_tree(State(state): State<SharedState>) -> Json<Value> {
    let (snap, _) = current(&state);
    let report = duplication_report(&snap);
    let ann = snap.annotations();
    let categories: Vec<Value> = snap
        .schema()
        .categories()
        .iter()
        .map(|cat| {
            let labels: Vec<Value> = cat
                .labels
                .iter()
                .map(|l| json!({ "name": l, "count": ann.usage(l) }))
                .collect();
            let count: usize = cat.labels.iter().map(|l| ann.usage(l)).sum();
            let dup = report.category(&cat.name).expect("report covers schema");
            json!({ "name": cat.name, "count": count, "duplication": dup.score, "labels": labels })
        })
        .collect();
    envelope(snap.version(), json!({ "categories": categories }))
}

#[derive(Deserialize)]
struct CategoryQuery {
    category: Option<String>,
}

async fn label_cooccurrence(
    State(state): State<SharedState>,
    Query(q): Query<CategoryQuery>,
) -> ApiResult<Json<Value>> {
    let (snap, _) = current(&state);
    let category = q
        .category
        .ok_or_else(|| ApiError::bad_request("invalid_request", "missing query parameter: category"))?;
    let stats = cooccurrence(&snap, &category)?;
    let dup = duplication_report(&snap);
    let pairs = dup.category(&category).map(|c| c.pairs.clone()).unwrap_or_default();
    Ok(envelope(
        snap.version(),
        json!({ "category": stats.category, "labels": stats.labels, "matrix": stats.counts, "pairs": pairs }),
    ))
}

#[derive(Deserialize)]
struct RecordsQuery {
    label: Option<String>,
    ids: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn records(State(state): State<SharedState>, Query(q): Query<RecordsQuery>) -> ApiResult<Json<Value>> {
    let (snap, _) = current(&state);
    let mut ids: Vec<String> = match (&q.label, &q.ids) {
        (Some(label), _) => snap.query_by_label(label)?,
        (None, Some(list)) => list.split(',').filter(|s| !s.is_empty()).map(String::from).collect(),
        (None, None) => snap.records().iter().map(|r| r.id.clone()).collect(),
    };
    if let (Some(_), Some(list)) = (&q.label, &q.ids) {
        let wanted: BTreeSet<&str> = list.split(',').collect();
        ids.retain(|id| wanted.contains(id.as_str()));
    }
    let total = ids.len();
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(usize::MAX);
    let ann = snap.annotations();
    let mut rows = Vec::new();
    for id in ids.iter().skip(offset).take(limit) {
        let r = snap
            .record(id)
            .ok_or_else(|| ApiError::from(labelscope_core::Error::UnknownRecord(id.clone())))?;
        rows.push(json!({ "id": r.id, "fields": r.text_fields, "labels": ann.by_category(&r.id) }));
    }
    Ok(envelope(snap.version(), json!({ "total": total, "records": rows })))
}

#[derive(Default, Deserialize)]
#[serde(default)]
struct TrainRequest {
    vectorizer: VectorizerConfig,
    training: TrainingConfig,
}

fn spawn_job(
    state: &SharedState,
    kind: &'static str,
    version: u64,
    work: impl FnOnce(SharedState) -> ApiResult<Value> + Send + 'static,
) -> u64 {
    let id = state.jobs().create(kind, version);
    let st = state.clone();
    tokio::spawn(async move {
        let Ok(_permit) = st.workers.acquire().await else {
            return;
        };
        st.jobs().update(id, |j| j.status = JobStatus::Running);
        let inner = st.clone();
        let outcome = tokio::task::spawn_blocking(move || work(inner)).await;
        st.jobs().update(id, |j| match outcome {
            Ok(Ok(v)) => {
                j.status = JobStatus::Succeeded;
                j.result = Some(v);
            }
            Ok(Err(e)) => {
                j.status = JobStatus::Failed;
                j.error = Some(json!({ "code": e.code, "message": e.message }));
            }
            Err(e) => {
                j.status = JobStatus::Failed;
                j.error = Some(json!({ "code": "internal", "message": e.to_string() }));
            }
        });
    });
    id
}

fn accepted(version: u64, job_id: u64) -> Response {
    (StatusCode::ACCEPTED, envelope(version, json!({ "job_id": job_id }))).into_response()
}

async fn start_train(State(state): State<SharedState>, body: Bytes) -> ApiResult<Response> {
    let req: TrainRequest = parse_body(&body)?;
    let (snap, _) = current(&state);
    let version = snap.version();
    let id = spawn_job(&state, "train", version, move |st| {
        let out = train(&snap, &req.vectorizer, &req.training)?;
        let metrics = out.metrics;
        let warnings = out.warnings.clone();
        let model_id = st.write().install_model(out.model, Some(metrics), out.warnings);
        Ok(json!({
            "model_id": model_id,
            "trained_on_version": version,
            "metrics": metrics,
            "warnings": warnings,
            "validation_records": out.validation_ids.len(),
        }))
    });
    Ok(accepted(version, id))
}

async fn job(State(state): State<SharedState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    let job = state
        .jobs()
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("unknown_job", format!("unknown job id {id}")))?;
    Ok(envelope(job.snapshot_version, job))
}

async fn metrics(State(state): State<SharedState>) -> ApiResult<Json<Value>> {
    let (snap, model) = current(&state);
    let loaded = require_model(model)?;
    let version = snap.version();
    let metrics = match loaded.metrics {
        Some(m) => m,
        None => {
            let model = loaded.model.clone();
            blocking(move || {
                let cfg = &model.training_config;
                let split = stratified_split(&snap, cfg.validation_fraction, cfg.calibration_fraction, cfg.seed)?;
                let ids: Vec<&str> = split.validation.iter().map(|&i| snap.records()[i].id.as_str()).collect();
                Ok(evaluate(&model, &snap, &ids)?)
            })
            .await?
        }
    };
    Ok(envelope(
        version,
        json!({
            "model_id": loaded.id,
            "trained_on_version": loaded.model.trained_on_version,
            "metrics": metrics,
            "warnings": loaded.warnings,
        }),
    ))
}

async fn model_file(State(state): State<SharedState>) -> ApiResult<Response> {
    let (snap, model) = current(&state);
    let loaded = require_model(model)?;
    let body = blocking(move || Ok(loaded.model.to_json())).await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/json".to_string()),
            (header::HeaderName::from_static("x-snapshot-version"), snap.version().to_string()),
        ],
        body,
    )
        .into_response())
}

async fn confidence(State(state): State<SharedState>) -> ApiResult<Json<Value>> {
    let (snap, model) = current(&state);
    let loaded = require_model(model)?;
    let version = snap.version();
    let data = blocking(move || {
        let entries = confidence_report(&loaded.model, &snap);
        Ok(json!({
            "model_id": loaded.id,
            "label_order": loaded.model.label_order(),
            "entries": entries,
        }))
    })
    .await?;
    Ok(envelope(version, data))
}

#[derive(Deserialize)]
struct DensityQuery {
    order: Option<String>,
}

async fn density(State(state): State<SharedState>, Query(q): Query<DensityQuery>) -> ApiResult<Json<Value>> {
    let (snap, model) = current(&state);
    let version = snap.version();
    let data = blocking(move || {
        let tokenizer: Tokenizer = match &model {
            Some(m) => m.model.vectorizer.tfidf.tokenizer().clone(),
            None => VectorizerConfig::default().build_tokenizer(),
        };
        let report = density_report(&snap, &tokenizer);
        let entries = match q.order.as_deref() {
            None => serde_json::to_value(&report.entries),
            Some("asc") => serde_json::to_value(report.ascending()),
            Some("desc") => serde_json::to_value(report.descending()),
            Some(other) => {
                return Err(ApiError::bad_request(
                    "invalid_request",
                    format!("order must be asc or desc, got {other:?}"),
                ))
            }
        }
        .expect("report serializes");
        Ok(json!({ "entries": entries }))
    })
    .await?;
    Ok(envelope(version, data))
}

async fn start_projection(State(state): State<SharedState>, body: Bytes) -> ApiResult<Response> {
    let config: ProjectionConfig = parse_body(&body)?;
    let (snap, model) = current(&state);
    if config.needs_model() && model.is_none() {
        return Err(ApiError::model_not_trained());
    }
    let version = snap.version();
    let key = projection_key(version, model.as_ref().map(|m| m.id.as_str()), &config);
    let id = spawn_job(&state, "projection", version, move |st| {
        let cached = st.read().projections.get(&key).cloned();
        let projection = match cached {
            Some(p) => p,
            None => {
                let p = std::sync::Arc::new(layout_records(model.as_ref().map(|m| &*m.model), &snap, &config)?);
                let mut s = st.write();
                if s.version() == version {
                    s.projections.insert(key.clone(), p.clone());
                }
                p
            }
        };
        Ok(json!({ "cache_key": key, "projection": &*projection }))
    });
    Ok(accepted(version, id))
}

#[derive(Deserialize)]
struct SelectRequest {
    cache_key: String,
    polygon: Vec<(f64, f64)>,
}

async fn projection_select(State(state): State<SharedState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: SelectRequest = parse_required(&body)?;
    let (projection, version) = {
        let s = state.read();
        let p = s.projections.get(&req.cache_key).cloned().ok_or_else(|| {
            ApiError::not_found(
                "unknown_projection",
                format!("no cached projection {:?} for snapshot version {}", req.cache_key, s.version()),
            )
        })?;
        (p, s.version())
    };
    let ids = select_polygon(&projection, &req.polygon)?;
    Ok(envelope(version, json!({ "count": ids.len(), "ids": ids })))
}

#[derive(Deserialize)]
struct ExplainRequest {
    record_id: String,
    category: String,
    #[serde(default)]
    config: ExplainConfig,
}

async fn explain_record(State(state): State<SharedState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: ExplainRequest = parse_required(&body)?;
    let (snap, model) = current(&state);
    let loaded = require_model(model)?;
    let version = snap.version();
    let data = blocking(move || {
        let record = snap
            .record(&req.record_id)
            .ok_or_else(|| labelscope_core::Error::UnknownRecord(req.record_id.clone()))?;
        Ok(explain(&*loaded.model, record, &req.category, &req.config)?)
    })
    .await?;
    Ok(envelope(version, data))
}

async fn relabel_propose(State(state): State<SharedState>, body: Bytes) -> ApiResult<Json<Value>> {
    let op: RelabelOp = parse_required(&body)?;
    let mut s = state.write();
    let id = s.history.propose(op)?;
    Ok(envelope(s.version(), json!({ "op_id": id })))
}

#[derive(Deserialize)]
struct RevertRequest {
    op_id: u64,
}

async fn relabel_revert(State(state): State<SharedState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: RevertRequest = parse_required(&body)?;
    let mut s = state.write();
    s.history.revert(req.op_id)?;
    Ok(envelope(s.version(), json!({ "op_id": req.op_id, "status": "reverted" })))
}

#[derive(Deserialize)]
struct ApplyRequest {
    base_version: u64,
}

async fn relabel_apply(State(state): State<SharedState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: ApplyRequest = parse_required(&body)?;
    let mut s = state.write();
    let previous = s.version();
    if req.base_version != previous {
        return Err(labelscope_core::Error::StaleVersion {
            expected: previous,
            found: req.base_version,
        }
        .into());
    }
    let head = s.snapshot().clone();
    let next = s.history.apply(&head)?;
    if next.version() != previous {
        s.projections.clear();
    }
    Ok(envelope(
        next.version(),
        json!({ "previous_version": previous, "version": next.version(), "stats": next.stats() }),
    ))
}

async fn relabel_history(State(state): State<SharedState>) -> Json<Value> {
    let s = state.read();
    envelope(s.version(), json!({ "entries": s.history.history_list() }))
}

async fn export_jsonl(State(state): State<SharedState>) -> ApiResult<Response> {
    let (snap, _) = current(&state);
    let version = snap.version();
    let body = blocking(move || {
        let mut out = Vec::new();
        write_export_lines(&snap, &mut out)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?;
        Ok(out)
    })
    .await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/x-ndjson".to_string()),
            (header::HeaderName::from_static("x-snapshot-version"), version.to_string()),
        ],
        Body::from(body),
    )
        .into_response())
}

async fn export_schema(State(state): State<SharedState>) -> Response {
    let (snap, _) = current(&state);
    (
        [
            (header::CONTENT_TYPE, "application/json".to_string()),
            (header::HeaderName::from_static("x-snapshot-version"), snap.version().to_string()),
        ],
        export_manifest_json(&snap),
    )
        .into_response()
}
