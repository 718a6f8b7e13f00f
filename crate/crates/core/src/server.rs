//! JSON HTTP API over a loaded model and floor graph.
//!
//! | Method | Path               | Body                                   |
//! |--------|--------------------|----------------------------------------|
//! | POST   | `/api/detect`      | `{"query": "..."}`                     |
//! | POST   | `/api/route`       | `{"origin_id": 3, "dest_id": 2}`       |
//! | GET    | `/api/departments` |                                        |
//! | GET    | `/api/health`      |                                        |
//!
//! Errors come back as `{"error": {"code": "...", "message": "..."}}`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::cnn::{CnnModel, HeadPrediction};
use crate::corpus::Department;
use crate::encode::tokenize;
use crate::navigate::{render_instructions, shortest_path, FloorGraph, Step};
use crate::{Error, Result};

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(2);

/// A model plus the version tag reported with every prediction.
#[derive(Debug)]
pub struct ModelSnapshot {
    pub model: CnnModel,
    pub version: String,
}

impl ModelSnapshot {
    pub fn new(model: CnnModel) -> Result<Self> {
        let version = model.to_checkpoint().fingerprint()?;
        Ok(Self { model, version })
    }
}

#[derive(Debug)]
pub struct AppState {
    model: RwLock<Option<Arc<ModelSnapshot>>>,
    pub graph: Arc<FloorGraph>,
    pub departments: Vec<Department>,
    pub deadline: Duration,
}

impl AppState {
    pub fn new(graph: FloorGraph, departments: Vec<Department>) -> Self {
        Self {
            model: RwLock::new(None),
            graph: Arc::new(graph),
            departments,
            deadline: DEFAULT_DEADLINE,
        }
    }

    /// Replace the served model. In-flight requests keep the snapshot they
    /// started with.
    pub fn set_model(&self, snapshot: Option<ModelSnapshot>) {
        *self.model.write().unwrap_or_else(|e| e.into_inner()) = snapshot.map(Arc::new);
    }

    pub fn snapshot(&self) -> Option<Arc<ModelSnapshot>> {
        self.model.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::EmptyQuery => (StatusCode::BAD_REQUEST, "empty_query"),
            Error::InvalidArgument(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            Error::UnknownDepartment(_) | Error::UnknownNode(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::NoRoute { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "no_route"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectRequest {
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    pub name: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectHead {
    pub id: usize,
    pub name: String,
    pub prob: f64,
    pub top_k: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub origin: DetectHead,
    pub destination: DetectHead,
    pub model_version: String,
}

fn detect_head(h: HeadPrediction, names: &[String]) -> DetectHead {
    DetectHead {
        id: h.id,
        name: h.name,
        prob: h.prob,
        top_k: h
            .top_k
            .into_iter()
            .map(|(id, prob)| Candidate {
                id,
                name: names[id].clone(),
                prob,
            })
            .collect(),
    }
}

async fn detect(State(state): State<Arc<AppState>>, body: std::result::Result<Json<DetectRequest>, JsonRejection>) -> ApiResult<DetectResponse> {
    let Json(req) = body?;
    if tokenize(&req.query).tokens.is_empty() {
        return Err(Error::EmptyQuery.into());
    }
    let snap = state
        .snapshot()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "model_not_loaded", "model not loaded"))?;
    let task = tokio::task::spawn_blocking(move || {
        let p = snap.model.predict(&req.query)?;
        let names = &snap.model.departments;
        Ok::<_, Error>(DetectResponse {
            origin: detect_head(p.origin, names),
            destination: detect_head(p.destination, names),
            model_version: snap.version.clone(),
        })
    });
    match tokio::time::timeout(state.deadline, task).await {
        Err(_) => Err(ApiError::new(StatusCode::GATEWAY_TIMEOUT, "deadline_exceeded", "prediction timed out")),
        Ok(Err(e)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())),
        Ok(Ok(r)) => Ok(Json(r?)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteRequest {
    pub origin_id: usize,
    pub dest_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub id: u32,
    pub floor: i32,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResponse {
    pub origin_id: usize,
    pub dest_id: usize,
    pub length: f64,
    pub path: Vec<PathPoint>,
    pub steps: Vec<Step>,
    pub narration: String,
}

pub fn plan_route(graph: &FloorGraph, origin_id: usize, dest_id: usize) -> Result<RouteResponse> {
    let from = graph.department_node(origin_id)?;
    let to = graph.department_node(dest_id)?;
    let route = shortest_path(graph, from, to)?;
    let instructions = render_instructions(graph, &route.nodes)?;
    let path = route
        .nodes
        .iter()
        .map(|&id| {
            let n = graph.node(id)?;
            Ok(PathPoint {
                id,
                floor: n.floor,
                x: n.x,
                y: n.y,
                name: n.name.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(RouteResponse {
        origin_id,
        dest_id,
        length: route.length,
        path,
        narration: instructions.narrate(),
        steps: instructions.steps,
    })
}

async fn route(State(state): State<Arc<AppState>>, body: std::result::Result<Json<RouteRequest>, JsonRejection>) -> ApiResult<RouteResponse> {
    let Json(req) = body?;
    Ok(Json(plan_route(&state.graph, req.origin_id, req.dest_id)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartmentEntry {
    pub id: usize,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<u32>,
}

async fn departments(State(state): State<Arc<AppState>>) -> Json<Vec<DepartmentEntry>> {
    Json(
        state
            .departments
            .iter()
            .map(|d| DepartmentEntry {
                id: d.id,
                name: d.name.clone(),
                node: state.graph.department_node(d.id).ok(),
            })
            .collect(),
    )
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let snap = state.snapshot();
    Json(json!({
        "status": "ok",
        "model_loaded": snap.is_some(),
        "model_version": snap.as_ref().map(|s| s.version.clone()),
        "departments": state.departments.len(),
    }))
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/detect", post(detect))
        .route("/api/route", post(route))
        .route("/api/departments", get(departments))
        .route("/api/health", get(health))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Bind and serve until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    log::info!("listening on http://{}", listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
