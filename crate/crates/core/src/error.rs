use thiserror::Error;

/// Errors raised across the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    Hermiticity { deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:.3e})")]
    Unitarity { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    Normalization { norm: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time {t} lies outside the schedule grid [{start}, {end}]")]
    Grid { t: f64, start: f64, end: f64 },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid history: {0}")]
    History(String),

    #[error("family shape mismatch: {0}")]
    FamilyShape(String),

    #[error("history family is inconsistent: {0} overlapping pair(s)")]
    InconsistentFamily(usize),

    #[error("history is not a member of the family")]
    NotInFamily,

    #[error("no allowed fixed point at time index {index} (t = {t})")]
    EmptyFamily { index: usize, t: f64 },

    #[error("degenerate family: every history has zero weight")]
    DegenerateFamily,

    #[error("degenerate selection: denominator {denominator:.3e} vanishes")]
    DegenerateSelection { denominator: f64 },

    #[error("time ordering violated: {0}")]
    TimeOrder(String),

    #[error("basis is not orthonormal (max deviation {deviation:.3e})")]
    Basis { deviation: f64 },

    #[error("contingent absorber configuration passed to the fixed-absorber calculator")]
    Contingency,

    #[error("invalid absorber configuration: {0}")]
    AbsorberConfig(String),

    #[error("parse error at `{path}`: {reason}")]
    Parse { path: String, reason: String },

    #[error("scenario `{name}`: {source}")]
    Scenario { name: String, source: Box<Error> },
}

impl Error {
    /// True for failures caused by the physics of a well-formed input
    /// (vanishing denominators, all-zero families), as opposed to malformed
    /// input.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::DegenerateSelection { .. } | Error::DegenerateFamily => true,
            Error::Scenario { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }

    pub(crate) fn in_scenario(self, name: &str) -> Error {
        match self {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario {
                name: name.to_string(),
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
