use l2gcn::controller::ControllerError;
use l2gcn::graph::GraphError;
use l2gcn::probe::ProbeError;
use l2gcn::train::TrainError;
use serde::Serialize;
use thiserror::Error;

/// Command failure, split by exit code: configuration and validation
/// problems exit with 2, everything else with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'static str,
    message: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<&'a str>,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// `{"error": {"kind", "message", "exit_code", "command"?}}` on one line.
    pub fn to_json(&self, command: Option<&str>) -> String {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        };
        serde_json::to_string(&ErrorObject {
            error: ErrorBody {
                kind,
                message: self.to_string(),
                exit_code: self.exit_code(),
                command,
            },
        })
        .expect("error object serializes")
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io { .. } => CliError::Runtime(e.to_string()),
            // malformed or missing input data is a validation failure
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Graph(g) => g.into(),
            TrainError::Config(_)
            | TrainError::EmptyTrainMask
            | TrainError::EmptySplit(_)
            | TrainError::DimensionChain { .. }
            | TrainError::LossKindMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ControllerError> for CliError {
    fn from(e: ControllerError) -> Self {
        match e {
            ControllerError::Train(t) => t.into(),
            ControllerError::Config(_) | ControllerError::Corrupt { .. } | ControllerError::Version { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Graph(g) => g.into(),
            ProbeError::Train(t) => t.into(),
            ProbeError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}
