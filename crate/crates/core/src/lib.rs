//! Simulation and analysis toolkit for nonlinear network dynamics under
//! feedback with limited information: graph metrics, plant functions,
//! the closed-loop engine, information-flow views, the feedback laws, the
//! adaptive adversary and the capacity calculations.

pub mod adversary;
pub mod capacity;
pub mod controllers;
pub mod dynamics;
pub mod flow;
pub mod function_space;
pub mod graph;
pub mod harness;

use thiserror::Error;

/// Top-level error with a process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Function(#[from] function_space::FunctionError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Flow(#[from] flow::FlowError),
    #[error(transparent)]
    Controller(#[from] controllers::ControllerError),
    #[error(transparent)]
    Adversary(#[from] adversary::AdversaryError),
    #[error(transparent)]
    Capacity(#[from] capacity::CapacityError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 2 for bad input, 3 for an internal invariant failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            Error::Adversary(e) if e.is_invariant() => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
