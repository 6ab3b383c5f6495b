use serde::Serialize;

/// Failures of a command, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    SizeCap(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(qbus::Error),
}

impl From<qbus::Error> for CliError {
    fn from(e: qbus::Error) -> Self {
        use qbus::Error as E;
        match e {
            E::SizeCap { .. } => CliError::SizeCap(e.to_string()),
            E::Invariant(_) => CliError::Invariant(e.to_string()),
            E::InvalidArgument(_)
            | E::TooFewParameters { .. }
            | E::ParameterCount { .. }
            | E::DimensionMismatch(_)
            | E::DegenerateGap(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(qbus::Error::from(e))
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::SizeCap(_) => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Invariant(_) => "invariant",
            CliError::SizeCap(_) => "size_cap",
            CliError::Io(_) => "io",
            CliError::Core(_) => "internal",
        }
    }

    /// One-line JSON description for stderr.
    pub fn to_json(&self) -> String {
        let r = ErrorReport { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&r).expect("plain struct serializes")
    }
}
