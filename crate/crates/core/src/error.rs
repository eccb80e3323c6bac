use std::fmt;

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Weights,
    Hill,
    TailRatio,
    Dependence,
    Optimization,
    Assembly,
    DirectExpectile,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Weights => "weights",
            Stage::Hill => "hill",
            Stage::TailRatio => "tail-ratio",
            Stage::Dependence => "dependence",
            Stage::Optimization => "optimization",
            Stage::Assembly => "assembly",
            Stage::DirectExpectile => "direct-expectile",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range (valid range 0..{len})")]
    Index { index: usize, len: usize },

    #[error("no observation within bandwidth h = {h}")]
    EmptyNeighborhood { h: f64 },

    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),

    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    #[error("tail index estimate {gamma} >= 1 implies an infinite mean")]
    InfiniteMean { gamma: f64 },

    #[error("log/power domain error: {what} = {value}")]
    LogDomain { what: &'static str, value: f64 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance: value {value}, error estimate {error}")]
    Quadrature { value: f64, error: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<MeeError>,
    },
}

impl MeeError {
    pub fn at(self, stage: Stage) -> MeeError {
        MeeError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stage that failed, if the error was raised inside the pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            MeeError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The innermost error, with stage wrappers stripped.
    pub fn root(&self) -> &MeeError {
        match self {
            MeeError::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for MeeError {
    fn from(e: std::io::Error) -> Self {
        MeeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MeeError>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
