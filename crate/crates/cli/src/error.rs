//! CLI error channel: every failure maps to an exit code and a one-line
//! machine-readable JSON object on stderr.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Unusable scenario: parse failure or semantic violations. The list
    /// carries every violation found, not just the first.
    Config(Vec<String>),
    /// The query is well formed but cannot be satisfied: blocked endpoint,
    /// disconnected goal, or a dynamic run that timed out.
    NoPath(String),
    /// Everything else (I/O, serialization, internal contract breaches).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoPath(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::NoPath(_) => "no-path",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(v) => format!("{} config violation(s)", v.len()),
            CliError::NoPath(m) | CliError::Internal(m) => m.clone(),
        }
    }

    /// One-line JSON for stderr. Keys serialize in alphabetical order, so
    /// the bytes are stable for a given error.
    pub fn to_json(&self) -> String {
        let violations = match self {
            CliError::Config(v) => v.clone(),
            _ => Vec::new(),
        };
        serde_json::json!({
            "error": {
                "code": self.exit_code(),
                "kind": self.kind(),
                "message": self.message(),
                "violations": violations,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(v) => write!(f, "invalid config: {}", v.join("; ")),
            CliError::NoPath(m) => write!(f, "no path: {m}"),
            CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<vrm_core::Error> for CliError {
    fn from(e: vrm_core::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("json error: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
