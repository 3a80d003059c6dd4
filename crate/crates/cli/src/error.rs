use finmf_core::char_table::CharTableError;
use finmf_core::cyclotomic::CycloError;
use finmf_core::double::DoubleError;
use finmf_core::engine::{EngineError, ErrorKind};
use finmf_core::group::GroupError;
use finmf_core::surfaces::SurfaceError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Cap(String),
    #[error("{message}")]
    Violation { message: String, payload: serde_json::Value },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Cap(_) => 2,
            CliError::Violation { .. } => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Cap(_) => "cap",
            CliError::Violation { .. } => "violation",
        }
    }

    /// The JSON diagnostic written to the error stream.
    pub fn diagnostic(&self) -> serde_json::Value {
        let mut d = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Violation { payload, .. } = self {
            d["details"] = payload.clone();
        }
        d
    }

    pub fn violation(message: impl Into<String>, payload: serde_json::Value) -> CliError {
        CliError::Violation { message: message.into(), payload }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> CliError {
        let message = e.to_string();
        match (&e, e.kind()) {
            (EngineError::Double(d), _) => d.clone().into(),
            (_, ErrorKind::Usage) => CliError::Usage(message),
            (_, ErrorKind::Cap) => CliError::Cap(message),
            (_, ErrorKind::Violation) => CliError::Violation { message, payload: e.payload() },
        }
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> CliError {
        EngineError::from(e).into()
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> CliError {
        match e {
            GroupError::OrderCapExceeded { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CharTableError> for CliError {
    fn from(e: CharTableError) -> CliError {
        match e {
            CharTableError::Group(g) => g.into(),
            CharTableError::NoSuitablePrime { .. } | CharTableError::Overflow => CliError::Cap(e.to_string()),
            _ => CliError::violation(e.to_string(), json!({ "check": "character table" })),
        }
    }
}

impl From<DoubleError> for CliError {
    fn from(e: DoubleError) -> CliError {
        match e {
            DoubleError::UnknownLabel(_) => CliError::Usage(e.to_string()),
            DoubleError::CharTable(c) => c.into(),
            DoubleError::Cyclo(CycloError::Overflow) => CliError::Cap(e.to_string()),
            _ => CliError::violation(e.to_string(), json!({ "check": "drinfeld double" })),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Usage(e.to_string())
    }
}
