//! JSON HTTP API over an immutable, atomically reloadable knowledge base.
//!
//! | method | path                  | body                              |
//! |--------|-----------------------|-----------------------------------|
//! | GET    | `/v1/health`          |                                   |
//! | GET    | `/v1/ontology`        |                                   |
//! | GET    | `/v1/schema`          |                                   |
//! | POST   | `/v1/encode`          | `{values: [..]}`                  |
//! | POST   | `/v1/decode`          | `{code}`                          |
//! | POST   | `/v1/distance`        | `{a, b}`                          |
//! | POST   | `/v1/diagnose`        | `{case_id?, symptoms, k?, lambda?}` |
//! | GET    | `/v1/diseases/{id}`   |                                   |
//! | POST   | `/v1/admin/reload`    | header `x-admin-token`            |
//!
//! Errors are `{"error": {"kind", "detail", "witness"}}`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::codec::{ElementDef, ValidationReport};
use crate::diagnosis::{diagnose, ListDistanceParams, RankedDiagnosis};
use crate::error::{Error, ErrorKind, Result};
use crate::kb::{CaseInput, KnowledgeBase, RawSymptom, RawValue};
use crate::ontology::OntologyTree;
use crate::ENGINE_VERSION;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub bundle_dir: PathBuf,
    pub params: ListDistanceParams,
    pub max_body_bytes: usize,
    pub max_symptoms: usize,
    /// Token required by `/v1/admin/reload`; reload is disabled when unset.
    pub admin_token: Option<String>,
}

impl ServiceConfig {
    pub fn new(bundle_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            bundle_dir: bundle_dir.into(),
            params: ListDistanceParams::default(),
            max_body_bytes: 64 * 1024,
            max_symptoms: 256,
            admin_token: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Shared request handling, also used by the CLI so both emit identical JSON.

/// Rank a raw case against the knowledge base.
pub fn diagnose_input(kb: &KnowledgeBase, input: &CaseInput, params: &ListDistanceParams) -> Result<RankedDiagnosis> {
    params.validate()?;
    let case = kb.ingest_case(input)?;
    diagnose(&case, kb, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub a: String,
    pub b: String,
    pub distance: f64,
    pub element_distances: Vec<f64>,
    pub bundle_version: String,
    pub engine_version: String,
}

pub fn distance_between(kb: &KnowledgeBase, a: &RawSymptom, b: &RawSymptom) -> Result<DistanceReport> {
    let input = |raw: &RawSymptom, name: &str| -> Result<_> {
        let s = raw.resolve(kb.schema()).map_err(|e| e.within(name))?;
        kb.schema().validate(&s, kb.ontology()).into_result(name)?;
        Ok(s)
    };
    let (x, y) = (input(a, "a")?, input(b, "b")?);
    let element_distances = kb.relations().element_distances(&x, &y)?;
    let schema = kb.schema();
    Ok(DistanceReport {
        a: schema.render(schema.encode(&x)?),
        b: schema.render(schema.encode(&y)?),
        distance: crate::metric::euclidean(&element_distances),
        element_distances,
        bundle_version: kb.bundle_version().to_string(),
        engine_version: ENGINE_VERSION.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub code: String,
    pub values: Vec<u32>,
    pub bundle_version: String,
    pub engine_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResponse {
    pub code: String,
    pub values: Vec<u32>,
    /// Values zero-padded to their element widths.
    pub text: String,
    pub validation: ValidationReport,
    pub bundle_version: String,
    pub engine_version: String,
}

#[derive(Debug, Clone, Serialize)]
struct SchemaResponse<'a> {
    total_width: usize,
    elements: &'a [ElementDef],
    bundle_version: &'a str,
    engine_version: &'a str,
}

#[derive(Debug, Clone, Serialize)]
struct OntologyResponse<'a> {
    tree: Vec<OntologyTree>,
    bundle_version: &'a str,
    engine_version: &'a str,
}

#[derive(Debug, Deserialize)]
struct EncodeRequest {
    values: Vec<RawValue>,
}

#[derive(Debug, Deserialize)]
struct DecodeRequest {
    code: RawSymptom,
}

#[derive(Debug, Deserialize)]
struct DistanceRequest {
    a: RawSymptom,
    b: RawSymptom,
}

#[derive(Debug, Deserialize)]
struct DiagnoseRequest {
    #[serde(default)]
    case_id: String,
    symptoms: Vec<RawSymptom>,
    k: Option<usize>,
    lambda: Option<f64>,
}

// ---------------------------------------------------------------------------

pub struct AppState {
    kb: RwLock<Arc<KnowledgeBase>>,
    config: ServiceConfig,
}

impl AppState {
    /// Load the bundle named in `config`; any load or audit failure is fatal.
    pub fn load(config: ServiceConfig) -> Result<Self> {
        config.params.validate()?;
        let kb = KnowledgeBase::load(&config.bundle_dir)?;
        Ok(Self::with_kb(kb, config))
    }

    pub fn with_kb(kb: KnowledgeBase, config: ServiceConfig) -> Self {
        AppState {
            kb: RwLock::new(Arc::new(kb)),
            config,
        }
    }

    /// Snapshot of the current knowledge base.
    pub fn kb(&self) -> Arc<KnowledgeBase> {
        self.kb.read().expect("kb lock poisoned").clone()
    }

    /// Load the bundle directory again and swap it in whole.
    pub fn reload(&self) -> Result<String> {
        let kb = KnowledgeBase::load(&self.config.bundle_dir)?;
        let version = kb.bundle_version().to_string();
        *self.kb.write().expect("kb lock poisoned") = Arc::new(kb);
        Ok(version)
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.kind() {
            ErrorKind::Validation | ErrorKind::Range => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Format => StatusCode::BAD_REQUEST,
            ErrorKind::Audit => StatusCode::CONFLICT,
            ErrorKind::Config | ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, axum::Json(self.0.to_json())).into_response()
    }
}

type ApiResult = std::result::Result<Response, ApiError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::format("request body", e))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn json_value<T: Serialize>(value: &T) -> Response {
    json_text(serde_json::to_string_pretty(value).expect("response serializes") + "\n")
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let kb = state.kb();
    json_value(&json!({
        "status": "ok",
        "bundle_version": kb.bundle_version(),
        "engine_version": ENGINE_VERSION,
        "diseases": kb.diseases().len(),
    }))
}

async fn ontology(State(state): State<Arc<AppState>>) -> Response {
    let kb = state.kb();
    json_value(&OntologyResponse {
        tree: kb.ontology().tree(),
        bundle_version: kb.bundle_version(),
        engine_version: ENGINE_VERSION,
    })
}

async fn schema(State(state): State<Arc<AppState>>) -> Response {
    let kb = state.kb();
    json_value(&SchemaResponse {
        total_width: kb.schema().total_width(),
        elements: kb.schema().elements(),
        bundle_version: kb.bundle_version(),
        engine_version: ENGINE_VERSION,
    })
}

pub fn encode_values(kb: &KnowledgeBase, values: Vec<RawValue>) -> Result<EncodeResponse> {
    let symptom = RawSymptom::Values(values).resolve(kb.schema())?;
    kb.schema().validate(&symptom, kb.ontology()).into_result("values")?;
    let code = kb.schema().encode(&symptom)?;
    Ok(EncodeResponse {
        code: kb.schema().render(code),
        values: symptom.0,
        bundle_version: kb.bundle_version().to_string(),
        engine_version: ENGINE_VERSION.to_string(),
    })
}

pub fn decode_code(kb: &KnowledgeBase, code: &RawSymptom) -> Result<DecodeResponse> {
    if let RawSymptom::Values(_) = code {
        return Err(Error::validation("code", "expected a characteristic value, not element values"));
    }
    let schema = kb.schema();
    let symptom = code.resolve(schema)?;
    Ok(DecodeResponse {
        code: schema.render(schema.encode(&symptom)?),
        text: schema.format_values(&symptom),
        validation: schema.validate(&symptom, kb.ontology()),
        values: symptom.0,
        bundle_version: kb.bundle_version().to_string(),
        engine_version: ENGINE_VERSION.to_string(),
    })
}

async fn encode(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: EncodeRequest = parse_body(&body)?;
    Ok(json_value(&encode_values(&state.kb(), req.values)?))
}

async fn decode(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: DecodeRequest = parse_body(&body)?;
    Ok(json_value(&decode_code(&state.kb(), &req.code)?))
}

async fn distance(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: DistanceRequest = parse_body(&body)?;
    Ok(json_value(&distance_between(&state.kb(), &req.a, &req.b)?))
}

async fn diagnose_handler(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: DiagnoseRequest = parse_body(&body)?;
    if req.symptoms.len() > state.config.max_symptoms {
        return Err(Error::validation(
            "request",
            format!("{} symptoms exceed the limit of {}", req.symptoms.len(), state.config.max_symptoms),
        )
        .into());
    }
    let defaults = state.config.params;
    let params = ListDistanceParams {
        lambda: req.lambda.unwrap_or(defaults.lambda),
        k: req.k.unwrap_or(defaults.k),
    };
    let input = CaseInput {
        case_id: req.case_id,
        symptoms: req.symptoms,
    };
    let kb = state.kb();
    let ranking = tokio::task::spawn_blocking(move || diagnose_input(&kb, &input, &params))
        .await
        .map_err(|e| Error::Config(format!("diagnose task failed: {e}")))??;
    Ok(json_text(ranking.to_json()))
}

async fn disease(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let kb = state.kb();
    let record = kb.lookup(&id)?;
    Ok(json_value(&json!({
        "id": record.id,
        "name": record.name,
        "category": record.category,
        "symptoms": record.codes.iter().map(|&c| kb.schema().render(c)).collect::<Vec<_>>(),
        "bundle_version": kb.bundle_version(),
        "engine_version": ENGINE_VERSION,
    })))
}

async fn reload(State(state): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult {
    let presented = headers.get("x-admin-token").and_then(|v| v.to_str().ok());
    match (&state.config.admin_token, presented) {
        (Some(expected), Some(given)) if expected == given => {}
        _ => {
            let body: Value = json!({ "error": { "kind": "FORBIDDEN", "detail": "admin token required", "witness": null } });
            return Ok((StatusCode::FORBIDDEN, axum::Json(body)).into_response());
        }
    }
    let version = state.reload()?;
    Ok(json_value(&json!({ "status": "reloaded", "bundle_version": version, "engine_version": ENGINE_VERSION })))
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_body_bytes;
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/ontology", get(ontology))
        .route("/v1/schema", get(schema))
        .route("/v1/encode", post(encode))
        .route("/v1/decode", post(decode))
        .route("/v1/distance", post(distance))
        .route("/v1/diagnose", post(diagnose_handler))
        .route("/v1/diseases/{id}", get(disease))
        .route("/v1/admin/reload", post(reload))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Load the bundle, bind, and serve until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let bind = config.bind;
    let state = Arc::new(AppState::load(config)?);
    let listener = tokio::net::TcpListener::bind(bind).await.map_err(|source| Error::Io {
        path: bind.to_string(),
        source,
    })?;
    eprintln!(
        "serving bundle {} on http://{}",
        state.kb().bundle_version(),
        listener.local_addr().map_or(bind, |a| a)
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| Error::Io {
            path: bind.to_string(),
            source,
        })
}
