//! Solver backends behind one trait. Each backend is registered by name
//! and selected at runtime; all of them return the same canonical
//! [`SampleSet`](crate::sample::SampleSet) with locally recomputed energy
//! and feasibility.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{CqmModel, ModelError};
use crate::qubo::{PenaltyPolicy, TransformError};
use crate::sample::{SampleSet, SolveParams};

pub mod exact;
pub mod mock;
pub mod remote;
pub mod sa;

pub use exact::{solve_exact, solve_exact_with_stats, ExactSolver, OneHotStructure};
pub use remote::{solve_remote, RemoteError, RemoteSolver};
pub use sa::{solve_sa, AnnealingSolver};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("unknown backend {name:?}; available backends: {available}")]
    UnknownBackend { name: String, available: String },
    #[error("search space too large: the model has {variables} variables (full-enumeration cap {full_cap}) and {cartesian_note}")]
    SizeLimit { variables: usize, full_cap: usize, cartesian_note: String },
    #[error("invalid solve parameters: {reason}")]
    InvalidParams { reason: String },
    #[error("qubo does not belong to this model: {reason}")]
    ProvenanceMismatch { reason: String },
    #[error("the remote backend requires an endpoint")]
    MissingEndpoint,
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A solving strategy: anything that can turn a model into a sample set.
pub trait Solver: Send + Sync {
    /// Registry name of the backend.
    fn name(&self) -> &str;

    fn solve(&self, model: &CqmModel, params: &SolveParams) -> Result<SampleSet, SolverError>;
}

/// Options a factory may consume when instantiating a backend.
#[derive(Debug, Clone)]
pub struct BackendConfig {
    /// How many best samples the exact enumerator keeps.
    pub top_k: usize,
    /// Penalty policy for backends that solve through the QUBO transform.
    pub penalty: PenaltyPolicy,
    /// Remote endpoint base URL.
    pub endpoint: Option<String>,
    /// Bearer token passed through to the remote endpoint.
    pub token: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            penalty: PenaltyPolicy::default(),
            endpoint: None,
            token: None,
        }
    }
}

type SolverFactory = Box<dyn Fn(&BackendConfig) -> Result<Box<dyn Solver>, SolverError> + Send + Sync>;

/// Name-keyed registry of solver factories. The built-in set covers the
/// exhaustive enumerator ("exact"), the annealing sampler ("sa"), and the
/// remote protocol client ("remote"); additional strategies can be
/// registered under new names.
#[derive(Default)]
pub struct SolverRegistry {
    factories: BTreeMap<String, SolverFactory>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with the built-in backends.
    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry.register("exact", |cfg| {
            Ok(Box::new(ExactSolver { top_k: cfg.top_k }) as Box<dyn Solver>)
        });
        registry.register("sa", |cfg| {
            Ok(Box::new(AnnealingSolver { penalty: cfg.penalty }) as Box<dyn Solver>)
        });
        registry.register("remote", |cfg| {
            let endpoint = cfg.endpoint.clone().ok_or(SolverError::MissingEndpoint)?;
            Ok(Box::new(RemoteSolver { endpoint, token: cfg.token.clone() }) as Box<dyn Solver>)
        });
        registry
    }

    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn(&BackendConfig) -> Result<Box<dyn Solver>, SolverError> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    /// Instantiates the named backend, or lists what exists.
    pub fn create(&self, name: &str, config: &BackendConfig) -> Result<Box<dyn Solver>, SolverError> {
        match self.factories.get(name) {
            Some(factory) => factory(config),
            None => Err(SolverError::UnknownBackend {
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}
