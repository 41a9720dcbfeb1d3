use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] otoc_core::Error),

    #[error("oracle check failed: {0}")]
    OracleMismatch(String),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// Process exit code, as listed in `--help`.
    pub fn code(&self) -> u8 {
        use otoc_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::OracleMismatch(_) => 8,
            CliError::Io { .. } => 6,
            CliError::Core(e) => match e {
                E::InvalidParameter(_)
                | E::InvalidGeometry(_)
                | E::TooSmall { .. }
                | E::BondOutOfRange { .. }
                | E::Parse(_) => 3,
                E::TruncationCeiling { .. }
                | E::SignalLost { .. }
                | E::DegenerateNormalization { .. }
                | E::NumericalIntegrity(_)
                | E::FlavorMismatch { .. } => 4,
                E::FitInsufficient { .. } | E::FitBelowNoise { .. } => 5,
                E::Io(_) => 6,
                E::UnsupportedEnsemble(_) | E::Unsupported(_) => 7,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.code() {
            2 => "usage",
            3 => "invalid-config",
            4 => "engine",
            5 => "fit-insufficient",
            6 => "io",
            7 => "unsupported",
            _ => "oracle-mismatch",
        }
    }

    /// `error code=<n> kind=<kind> message="<text>"` on a single line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        format!("error code={} kind={} message=\"{}\"", self.code(), self.kind(), msg.trim())
    }
}
