//! Client for a remote solver service speaking a small versioned JSON
//! protocol: `POST {endpoint}/v1/solve` with the model document and a time
//! limit, answered by raw samples. Whatever the service claims, energy and
//! feasibility are recomputed locally; its verdicts are advisory only.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Assignment;
use crate::model::CqmModel;
use crate::sample::{aggregate, SampleSet, SolveParams};
use crate::solvers::{Solver, SolverError};

/// Path of the solve endpoint, relative to the service base URL.
pub const SOLVE_PATH: &str = "/v1/solve";

/// Extra wait beyond the requested solver time limit before a request is
/// abandoned.
pub const TIMEOUT_GRACE: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("invalid endpoint {url:?}: {reason}")]
    InvalidEndpoint { url: String, reason: String },
    #[error("connection to {url} failed: {message}")]
    Connection { url: String, message: String },
    #[error("request to {url} timed out after {after:?}")]
    Timeout { url: String, after: Duration },
    #[error("server returned status {status}{}", format_server_error(.code, .message))]
    Status { status: u16, code: Option<String>, message: Option<String> },
    #[error("malformed response body: {reason}")]
    MalformedResponse { reason: String },
    #[error("response sample has {got} bits, model has {expected} variables")]
    WrongLength { expected: usize, got: usize },
}

fn format_server_error(code: &Option<String>, message: &Option<String>) -> String {
    match (code, message) {
        (Some(c), Some(m)) => format!(" ({c}: {m})"),
        (Some(c), None) => format!(" ({c})"),
        (None, Some(m)) => format!(" ({m})"),
        (None, None) => String::new(),
    }
}

#[derive(Serialize)]
struct SolveRequest<'a> {
    model: &'a CqmModel,
    time_limit_s: f64,
    max_samples: u32,
}

#[derive(Deserialize)]
struct SolveResponse {
    samples: Vec<WireSample>,
    #[serde(default)]
    solver_info: Option<SolverInfo>,
}

#[derive(Deserialize)]
struct WireSample {
    bits: Vec<i64>,
    count: u64,
    /// Advisory energy some services report; parsed and discarded in favor
    /// of local recomputation.
    #[serde(default)]
    #[allow(dead_code)]
    energy: Option<f64>,
}

#[derive(Deserialize)]
struct SolverInfo {
    name: String,
}

#[derive(Deserialize)]
struct WireError {
    error: WireErrorBody,
}

#[derive(Deserialize)]
struct WireErrorBody {
    code: Option<String>,
    message: Option<String>,
}

/// Submits the model and aggregates the returned raw samples. Each
/// protocol failure mode maps to its own [`RemoteError`] variant.
pub fn solve_remote(
    model: &CqmModel,
    endpoint: &str,
    token: Option<&str>,
    params: &SolveParams,
) -> Result<SampleSet, SolverError> {
    params.validate()?;
    let started = Instant::now();

    let base = reqwest::Url::parse(endpoint).map_err(|e| RemoteError::InvalidEndpoint {
        url: endpoint.to_string(),
        reason: e.to_string(),
    })?;
    let url = format!("{}{}", base.as_str().trim_end_matches('/'), SOLVE_PATH);
    let timeout = params.time_limit + TIMEOUT_GRACE;

    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| RemoteError::Connection { url: url.clone(), message: e.to_string() })?;

    let mut request = client.post(&url).json(&SolveRequest {
        model,
        time_limit_s: params.time_limit.as_secs_f64(),
        max_samples: params.num_reads,
    });
    if let Some(token) = token {
        request = request.bearer_auth(token);
    }

    let response = request.send().map_err(|e| {
        if e.is_timeout() {
            RemoteError::Timeout { url: url.clone(), after: timeout }
        } else {
            RemoteError::Connection { url: url.clone(), message: e.to_string() }
        }
    })?;

    let status = response.status();
    let body = response.text().map_err(|e| {
        if e.is_timeout() {
            RemoteError::Timeout { url: url.clone(), after: timeout }
        } else {
            RemoteError::Connection { url: url.clone(), message: e.to_string() }
        }
    })?;

    if !status.is_success() {
        let (code, message) = match serde_json::from_str::<WireError>(&body) {
            Ok(w) => (w.error.code, w.error.message),
            Err(_) => (None, (!body.is_empty()).then(|| truncated(&body))),
        };
        return Err(RemoteError::Status { status: status.as_u16(), code, message }.into());
    }

    let parsed: SolveResponse = serde_json::from_str(&body)
        .map_err(|e| RemoteError::MalformedResponse { reason: e.to_string() })?;

    let mut raw = Vec::with_capacity(parsed.samples.len());
    for sample in parsed.samples {
        if sample.bits.len() != model.num_variables() {
            return Err(RemoteError::WrongLength {
                expected: model.num_variables(),
                got: sample.bits.len(),
            }
            .into());
        }
        let assignment = Assignment::from_ints(sample.bits)
            .map_err(|e| RemoteError::MalformedResponse { reason: e.to_string() })?;
        if sample.count == 0 {
            return Err(RemoteError::MalformedResponse {
                reason: "sample count must be at least 1".to_string(),
            }
            .into());
        }
        raw.push((assignment, sample.count));
    }

    let backend_name = match parsed.solver_info {
        Some(info) => format!("remote:{}", info.name),
        None => "remote".to_string(),
    };
    aggregate(model, raw, backend_name, started.elapsed())
}

fn truncated(body: &str) -> String {
    const LIMIT: usize = 200;
    if body.len() <= LIMIT {
        return body.to_string();
    }
    let mut end = LIMIT;
    while !body.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &body[..end])
}

/// The remote protocol client as a registry strategy.
pub struct RemoteSolver {
    pub endpoint: String,
    pub token: Option<String>,
}

impl Solver for RemoteSolver {
    fn name(&self) -> &str {
        "remote"
    }

    fn solve(&self, model: &CqmModel, params: &SolveParams) -> Result<SampleSet, SolverError> {
        solve_remote(model, &self.endpoint, self.token.as_deref(), params)
    }
}
