//! HTTP API. Solves run as background jobs polled through `/api/jobs/{id}`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower_http::services::ServeDir;

use crate::{random_instance, simulate_request, solve_request, SimulateRequest, SolveRequest};

pub const DEFAULT_JOB_CAPACITY: usize = 32;
pub const ADDR_ENV: &str = "HSARA_ADDR";
pub const STATIC_DIR_ENV: &str = "HSARA_STATIC_DIR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Done { result: Value },
    Failed { error: String },
}

struct Job {
    created: u64,
    status: JobStatus,
}

/// Bounded job table; the oldest job is evicted when a new one needs room.
pub struct JobTable {
    capacity: usize,
    counter: u64,
    jobs: HashMap<String, Job>,
}

impl JobTable {
    pub fn new(capacity: usize) -> Self {
        JobTable {
            capacity: capacity.max(1),
            counter: 0,
            jobs: HashMap::new(),
        }
    }

    /// Registers `id` as pending; `false` when it is already known.
    pub fn insert(&mut self, id: &str) -> bool {
        if self.jobs.contains_key(id) {
            return false;
        }
        if self.jobs.len() >= self.capacity {
            if let Some(oldest) = self.jobs.iter().min_by_key(|(_, j)| j.created).map(|(k, _)| k.clone()) {
                self.jobs.remove(&oldest);
            }
        }
        self.counter += 1;
        self.jobs.insert(
            id.to_string(),
            Job {
                created: self.counter,
                status: JobStatus::Pending,
            },
        );
        true
    }

    pub fn finish(&mut self, id: &str, status: JobStatus) {
        if let Some(job) = self.jobs.get_mut(id) {
            job.status = status;
        }
    }

    pub fn status(&self, id: &str) -> Option<JobStatus> {
        self.jobs.get(id).map(|j| j.status.clone())
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

#[derive(Clone)]
pub struct AppState {
    jobs: Arc<Mutex<JobTable>>,
}

impl AppState {
    pub fn new(capacity: usize) -> Self {
        AppState {
            jobs: Arc::new(Mutex::new(JobTable::new(capacity))),
        }
    }
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(DEFAULT_JOB_CAPACITY)
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.to_string())
}

/// Parses a body, reporting the path of the offending field.
fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad_request(format!("field `{path}`: {}", e.into_inner()))
    })
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/solve", post(solve))
        .route("/api/jobs/{id}", get(job))
        .route("/api/simulate", post(simulate))
        .route("/api/random-instance", get(random))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn health() -> &'static str {
    "ok"
}

fn job_id(req: &SolveRequest) -> String {
    let canonical = serde_json::to_vec(req).expect("requests serialize");
    let digest = Sha256::digest(&canonical);
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

async fn solve(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: SolveRequest = parse(&body)?;
    let instance = req.instance.clone().into_instance().map_err(bad_request)?;
    req.config.validate().map_err(bad_request)?;
    let id = job_id(&req);
    let fresh = state.jobs.lock().unwrap().insert(&id);
    if fresh {
        let jobs = state.jobs.clone();
        let job = id.clone();
        let config = req.config;
        tokio::task::spawn_blocking(move || {
            let status = match solve_request(&instance, &config) {
                Ok(res) => JobStatus::Done {
                    result: serde_json::to_value(res).expect("responses serialize"),
                },
                Err(e) => JobStatus::Failed { error: e.to_string() },
            };
            jobs.lock().unwrap().finish(&job, status);
        });
    }
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": id }))).into_response())
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<JobStatus>, ApiError> {
    state
        .jobs
        .lock()
        .unwrap()
        .status(&id)
        .map(Json)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown job `{id}`")))
}

async fn simulate(body: Bytes) -> Result<Response, ApiError> {
    let req: SimulateRequest = parse(&body)?;
    let (report, _) = tokio::task::spawn_blocking(move || simulate_request(req, None))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(bad_request)?;
    Ok(Json(report).into_response())
}

#[derive(Deserialize)]
struct SeedQuery {
    seed: Option<u64>,
}

async fn random(Query(q): Query<SeedQuery>) -> Response {
    Json(random_instance(q.seed.unwrap_or(0))).into_response()
}

/// Serves until the process is stopped.
pub async fn serve(addr: &str, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::default(), static_dir)).await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_evicts_oldest() {
        let mut t = JobTable::new(2);
        assert!(t.insert("a"));
        assert!(t.insert("b"));
        assert!(!t.insert("a"));
        assert!(t.insert("c"));
        assert_eq!(t.len(), 2);
        assert!(t.status("a").is_none());
        assert_eq!(t.status("b"), Some(JobStatus::Pending));
        t.finish("b", JobStatus::Failed { error: "x".into() });
        assert_eq!(t.status("b"), Some(JobStatus::Failed { error: "x".into() }));
    }
}
