use thiserror::Error;

use dsr_milp::{LpError, ModelError};

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{entity}: {message}")]
    Invalid { entity: String, message: String },
    #[error("structural cycle of non-switchable closed edges: {edges:?}")]
    StructuralCycle { edges: Vec<usize> },
    #[error("feeder graph is not connected: bus {bus} cannot reach the root")]
    Disconnected { bus: usize },
}

impl FeederError {
    pub(crate) fn invalid(entity: impl Into<String>, message: impl Into<String>) -> Self {
        FeederError::Invalid {
            entity: entity.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("edge {0} does not exist")]
    UnknownEdge(usize),
    #[error("edge {0} cannot fail: only in-service lines, switches and regulators are outage candidates")]
    NotFailable(usize),
    #[error("switch state given for edge {0}, which is not a switch")]
    NotSwitch(usize),
    #[error("switch state for edge {edge} must be 0 or 1, got {value}")]
    BadSwitchState { edge: usize, value: u8 },
    #[error("bus {0} does not host a non-black-start generator")]
    NotSolar(usize),
    #[error("solar availability {value} kW at bus {bus} outside [0, {rated}]")]
    SolarRange { bus: usize, value: f64, rated: f64 },
    #[error("cannot draw {k} outages from {available} eligible lines")]
    TooManyOutages { k: usize, available: usize },
    #[error("unknown edge label `{0}`")]
    UnknownLabel(String),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cycle budget exceeded: more than {limit} simple cycles")]
    CycleBudget { limit: usize },
    #[error("path budget exceeded: more than {limit} simple paths")]
    PathBudget { limit: usize },
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("failed edge {0} is listed as in service in the post-outage state")]
    FailedEdgeInService(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("malformed plan: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum DsrError {
    #[error(transparent)]
    Feeder(#[from] FeederError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("scenario {index} (k = {k}) is infeasible; the post-outage state should always be feasible\n{scenario}")]
    InfeasibleScenario { k: usize, index: usize, scenario: String },
    #[error("plan for scenario {index} (k = {k}) failed validation: {violations}\nreplay with: {scenario}")]
    ValidationFailed {
        k: usize,
        index: usize,
        violations: String,
        scenario: String,
    },
    #[error("invalid batch specification: {0}")]
    BadBatch(String),
}
