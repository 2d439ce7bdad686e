use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use super::bundle::{load_bundle, BundleMetadata, ModelBundle};
use super::store::{now_rfc3339, RecordStore, StoredRecord};
use crate::dataset::{RawRecord, RecordSchema};
use crate::error::{Error, FieldError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRequest {
    /// Feature name to value; strings, with numbers and null accepted.
    pub features: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResponse {
    pub label: String,
    pub score: f64,
    pub threshold: f64,
    pub model: BundleMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRequest {
    pub features: BTreeMap<String, Value>,
    #[serde(default)]
    pub outcome: Option<String>,
}

fn to_raw(features: &BTreeMap<String, Value>) -> Result<RawRecord> {
    let mut record = RawRecord::new();
    let mut errors = Vec::new();
    for (k, v) in features {
        let cell = match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            Value::Null => None,
            _ => {
                errors.push(FieldError {
                    field: k.clone(),
                    message: "expected a string".into(),
                });
                continue;
            }
        };
        record.set(k, cell);
    }
    if errors.is_empty() {
        Ok(record)
    } else {
        Err(Error::Validation(errors))
    }
}

/// Shared server state: the served bundle snapshot and the record store.
pub struct AppState {
    bundle: RwLock<Option<Arc<ModelBundle>>>,
    bundle_path: Option<PathBuf>,
    store: RecordStore,
    fallback_schema: RecordSchema,
}

impl AppState {
    pub fn new(store: RecordStore, schema: RecordSchema) -> Self {
        AppState {
            bundle: RwLock::new(None),
            bundle_path: None,
            store,
            fallback_schema: schema,
        }
    }

    pub fn with_bundle(self, bundle: ModelBundle, path: Option<PathBuf>) -> Self {
        *self.bundle.write().unwrap_or_else(|p| p.into_inner()) = Some(Arc::new(bundle));
        AppState {
            bundle_path: path,
            ..self
        }
    }

    pub fn current(&self) -> Option<Arc<ModelBundle>> {
        self.bundle
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }

    pub fn store(&self) -> &RecordStore {
        &self.store
    }

    /// The served bundle's schema, or the configured one when no model is loaded.
    pub fn schema(&self) -> RecordSchema {
        self.current()
            .map_or_else(|| self.fallback_schema.clone(), |b| b.schema.clone())
    }

    pub fn handle_predict(&self, request: &PredictionRequest) -> Result<PredictionResponse> {
        let bundle = self.current().ok_or(Error::Unavailable)?;
        let record = to_raw(&request.features)?;
        let score = bundle.score_record(&record)?;
        Ok(PredictionResponse {
            label: bundle.label_for(score).to_string(),
            score,
            threshold: bundle.metadata.threshold,
            model: bundle.metadata.clone(),
        })
    }

    pub fn append_record(&self, request: &RecordRequest) -> Result<u64> {
        let schema = self.schema();
        let mut record = to_raw(&request.features)?;
        if record.get(&schema.target.name).is_some() {
            return Err(Error::Validation(vec![FieldError {
                field: schema.target.name.clone(),
                message: "send the outcome in `outcome`".into(),
            }]));
        }
        record.set(&schema.target.name, request.outcome.clone());
        let errors = schema.check_record(&record, true);
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        self.store.append(record, now_rfc3339())
    }

    pub fn list_records(&self, limit: usize, offset: usize) -> Result<(Vec<StoredRecord>, usize)> {
        self.store.list(limit, offset)
    }

    /// Loads a bundle and swaps it in. On failure the old bundle keeps serving.
    pub fn reload_model(&self, path: Option<&Path>) -> Result<BundleMetadata> {
        let path = path
            .or(self.bundle_path.as_deref())
            .ok_or_else(|| Error::InvalidArgument("no bundle path given or configured".into()))?;
        let bundle = Arc::new(load_bundle(path)?);
        let meta = bundle.metadata.clone();
        *self.bundle.write().unwrap_or_else(|p| p.into_inner()) = Some(bundle);
        Ok(meta)
    }
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
            Error::Json(_) | Error::InvalidArgument(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match &e {
            Error::Validation(fields) => json!({"error": "validation failed", "fields": fields}),
            other => json!({"error": other.to_string()}),
        };
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = std::result::Result<T, ApiError>;

fn parse<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| Error::Json(e).into())
}

async fn predict(State(s): State<Shared>, body: Bytes) -> ApiResult<Json<PredictionResponse>> {
    let req: PredictionRequest = parse(&body)?;
    Ok(Json(s.handle_predict(&req)?))
}

async fn add_record(State(s): State<Shared>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: RecordRequest = parse(&body)?;
    let id = tokio::task::spawn_blocking(move || s.append_record(&req))
        .await
        .map_err(|e| Error::Experiment(format!("append task failed: {e}")))??;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

#[derive(Deserialize)]
struct Page {
    #[serde(default = "default_limit")]
    limit: usize,
    #[serde(default)]
    offset: usize,
}

fn default_limit() -> usize {
    50
}

async fn records(State(s): State<Shared>, Query(page): Query<Page>) -> ApiResult<Json<Value>> {
    let (records, total) =
        tokio::task::spawn_blocking(move || s.list_records(page.limit.min(1000), page.offset))
            .await
            .map_err(|e| Error::Experiment(format!("list task failed: {e}")))??;
    Ok(Json(json!({ "records": records, "total": total })))
}

async fn model(State(s): State<Shared>) -> ApiResult<Json<BundleMetadata>> {
    let b = s.current().ok_or(Error::Unavailable)?;
    Ok(Json(b.metadata.clone()))
}

#[derive(Deserialize)]
struct ReloadRequest {
    #[serde(default)]
    path: Option<PathBuf>,
}

async fn reload(State(s): State<Shared>, body: Bytes) -> ApiResult<Json<BundleMetadata>> {
    let req: ReloadRequest = if body.is_empty() {
        ReloadRequest { path: None }
    } else {
        parse(&body)?
    };
    let result = tokio::task::spawn_blocking(move || s.reload_model(req.path.as_deref()))
        .await
        .map_err(|e| Error::Experiment(format!("reload task failed: {e}")))?;
    result.map(Json).map_err(|e| ApiError {
        status: StatusCode::BAD_REQUEST,
        body: json!({"error": e.to_string()}),
    })
}

async fn schema(State(s): State<Shared>) -> Json<RecordSchema> {
    Json(s.schema())
}

/// API routes under `/api/v1`, with static assets served from `assets` for any other path.
pub fn router(state: Shared, assets: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/v1/predict", post(predict))
        .route("/api/v1/records", post(add_record).get(records))
        .route("/api/v1/model", get(model))
        .route("/api/v1/model/reload", post(reload))
        .route("/api/v1/schema", get(schema))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub bundle: Option<PathBuf>,
    pub store: PathBuf,
    pub assets: Option<PathBuf>,
    pub schema: Option<PathBuf>,
}

pub fn build_state(config: &ServeConfig) -> Result<AppState> {
    let schema = match &config.schema {
        Some(p) => RecordSchema::from_path(p)?,
        None => RecordSchema::default(),
    };
    let state = AppState::new(RecordStore::open(&config.store)?, schema);
    Ok(match &config.bundle {
        Some(p) => state.with_bundle(load_bundle(p)?, Some(p.clone())),
        None => state,
    })
}

/// Serves until ctrl-c.
pub async fn serve(config: ServeConfig) -> Result<()> {
    let state = Arc::new(build_state(&config)?);
    let app = router(state, config.assets.as_deref());
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|e| Error::io(config.addr.to_string(), e))?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(config.addr.to_string(), e))
}
