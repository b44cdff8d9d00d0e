use thiserror::Error;

pub type Result<T> = std::result::Result<T, GateError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("time {tau} outside trajectory domain [0, {total}]")]
    Domain { tau: f64, total: f64 },

    #[error("oscillator level {level} unsupported (maximum {max})")]
    UnsupportedLevel { level: usize, max: usize },

    #[error("separation {a} at or below degeneracy floor {floor}")]
    DegenerateSeparation { a: f64, floor: f64 },

    #[error("quadrature resolution insufficient: {0}")]
    Resolution(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("separation {a} outside tabulated range [{lo}, {hi}]")]
    TableCoverage { a: f64, lo: f64, hi: f64 },

    #[error("split-operator instability: {0}")]
    Stability(String),

    #[error("unknown computational label `{0}`")]
    UnknownLabel(String),

    #[error("entropy undefined: {0}")]
    UndefinedEntropy(String),

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config: unknown key `{0}`")]
    UnknownKey(String),

    #[error("config: field `{field}` out of range: {reason}")]
    Range { field: String, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl GateError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        GateError::InvalidParameter { field: field.into(), reason: reason.into() }
    }

    /// Machine-readable category, used in manifests and as the CLI error tag.
    pub fn category(&self) -> &'static str {
        match self {
            GateError::InvalidParameter { .. } => "invalid-parameter",
            GateError::Domain { .. } => "domain",
            GateError::UnsupportedLevel { .. } => "unsupported-level",
            GateError::DegenerateSeparation { .. } => "degenerate-separation",
            GateError::Resolution(_) => "resolution",
            GateError::BasisMismatch(_) => "basis-mismatch",
            GateError::StepUnderflow { .. } => "step-underflow",
            GateError::TableCoverage { .. } => "table-coverage",
            GateError::Stability(_) => "stability",
            GateError::UnknownLabel(_) => "unknown-label",
            GateError::UndefinedEntropy(_) => "undefined-entropy",
            GateError::ConfigSyntax { .. } => "config-syntax",
            GateError::UnknownKey(_) => "config-unknown-key",
            GateError::Range { .. } => "config-range",
            GateError::Io(_) => "io",
        }
    }

    /// Process exit status for the CLI; 0 is reserved for success.
    pub fn exit_code(&self) -> i32 {
        match self {
            GateError::ConfigSyntax { .. } | GateError::UnknownKey(_) | GateError::Range { .. } => 2,
            GateError::Io(_) => 3,
            GateError::InvalidParameter { .. } | GateError::UnknownLabel(_) => 4,
            _ => 5,
        }
    }
}

impl From<std::io::Error> for GateError {
    fn from(e: std::io::Error) -> Self {
        GateError::Io(e.to_string())
    }
}

impl From<csv::Error> for GateError {
    fn from(e: csv::Error) -> Self {
        GateError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GateError {
    fn from(e: serde_json::Error) -> Self {
        GateError::Io(e.to_string())
    }
}
