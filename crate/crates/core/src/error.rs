use alloc::string::String;
use core::fmt;

/// Everything that can go wrong between parsing a field and issuing a verdict.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown variable `{0}` for this surface")]
    UnknownVariable(String),
    #[error("exponent at byte {position} is not a non-negative integer")]
    NonIntegerExponent { position: usize },
    #[error("{what} at chart point ({s}, {t})")]
    Domain { what: &'static str, s: f64, t: f64 },
    #[error("field is defined on a {found:?} but a {expected:?} was required")]
    SurfaceMismatch {
        expected: crate::SurfaceKind,
        found: crate::SurfaceKind,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("array of length {found} does not match a grid with {expected} nodes")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("0 is not a regular value: |grad f| = {min_grad:e} < {tol:e} near ({s}, {t})")]
    NonRegularZero {
        min_grad: f64,
        tol: f64,
        s: f64,
        t: f64,
    },
    #[error("zero curve {curve} enters the polar cell rows; rotate the field")]
    PoleContact { curve: usize },
    #[error("zero-set topology is ambiguous at this resolution: {0}")]
    AmbiguousTopology(String),
    #[error("collar of curve {curve} is {halfwidth:e}, below the resolvable {required:e}")]
    CollarTooThin {
        curve: usize,
        halfwidth: f64,
        required: f64,
    },
    #[error("cut-off volumes do not settle: successive differences {first:e} then {second:e}")]
    NonConvergent { first: f64, second: f64 },
    #[error("region {region} carries both signs of f")]
    SignInconsistent { region: usize },
    #[error("sphere region graph is not a tree ({vertices} vertices, {edges} edges)")]
    TreeViolation { vertices: usize, edges: usize },
    #[error("winding displacement {value} is not an integer multiple of 2π")]
    NonInteger { value: f64 },
    #[error("moduli coordinates are only defined on the sphere")]
    TorusUnsupported,
    #[error("deformation changed the number of zero curves from {before} to {after}")]
    TopologyChanged { before: usize, after: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "Syntax",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::NonIntegerExponent { .. } => "NonIntegerExponent",
            Error::Domain { .. } => "Domain",
            Error::SurfaceMismatch { .. } => "SurfaceMismatch",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NonRegularZero { .. } => "NonRegularZero",
            Error::PoleContact { .. } => "PoleContact",
            Error::AmbiguousTopology(_) => "AmbiguousTopology",
            Error::CollarTooThin { .. } => "CollarTooThin",
            Error::NonConvergent { .. } => "NonConvergent",
            Error::SignInconsistent { .. } => "SignInconsistent",
            Error::TreeViolation { .. } => "TreeViolation",
            Error::NonInteger { .. } => "NonInteger",
            Error::TorusUnsupported => "TorusUnsupported",
            Error::TopologyChanged { .. } => "TopologyChanged",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Sample,
    ZeroSet,
    Topology,
    Periods,
    Volume,
    Classify,
    Deform,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Sample => "sample",
            Stage::ZeroSet => "zero_set",
            Stage::Topology => "topology",
            Stage::Periods => "periods",
            Stage::Volume => "volume",
            Stage::Classify => "classify",
            Stage::Deform => "deform",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An [`Error`] labelled with the stage that produced it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage}: {error}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub error: Error,
}

impl PipelineError {
    pub fn new(stage: Stage, error: Error) -> Self {
        PipelineError { stage, error }
    }

    pub fn kind(&self) -> &'static str {
        self.error.kind()
    }
}

pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}
