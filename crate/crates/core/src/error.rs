use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("symbolic budget exceeded: degree {degree} (cap {max_degree}), {bits} coefficient bits (cap {max_bits})")]
    SymbolicBudgetExceeded {
        degree: usize,
        max_degree: usize,
        bits: u64,
        max_bits: u64,
    },

    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,

    #[error("piecewise functions live on different domains")]
    DomainMismatch,

    #[error("iterate stays on boundary {boundary} over a whole parameter cell at round {round} (near {near})")]
    DegenerateTrajectory {
        round: u32,
        boundary: usize,
        near: f64,
    },

    #[error("no piece defined for sign vector {0}")]
    MissingPiece(String),

    #[error("iterate became non-finite at parameter {param} in round {round}")]
    NonFiniteIterate { param: f64, round: u32 },

    #[error("exhaustive search capped at {cap}, requested {requested}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("too many boundaries: {count} exceeds cap {cap}")]
    BudgetExceeded { count: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("instance {label}: {source}")]
    InInstance { label: String, source: Box<Error> },
}

impl Error {
    /// Stable machine-readable code used by the command line error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::SymbolicBudgetExceeded { .. } => "symbolic_budget_exceeded",
            Error::ZeroPolynomial => "zero_polynomial",
            Error::DomainMismatch => "domain_mismatch",
            Error::DegenerateTrajectory { .. } => "degenerate_trajectory",
            Error::MissingPiece(_) => "missing_piece",
            Error::NonFiniteIterate { .. } => "non_finite_iterate",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Empty(_) => "empty",
            Error::InInstance { source, .. } => source.code(),
        }
    }

    /// The error with any instance context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InInstance { source, .. } => source.root(),
            e => e,
        }
    }

    /// Label of the offending instance, if known.
    pub fn instance(&self) -> Option<&str> {
        match self {
            Error::InInstance { label, .. } => Some(label),
            _ => None,
        }
    }

    pub fn in_instance(self, label: &str) -> Self {
        match self {
            e @ Error::InInstance { .. } => e,
            e => Error::InInstance {
                label: label.into(),
                source: Box::new(e),
            },
        }
    }

    /// Failures of a single traced instance that a resampling loop may skip.
    pub fn is_resamplable(&self) -> bool {
        matches!(
            self.root(),
            Error::SymbolicBudgetExceeded { .. } | Error::DegenerateTrajectory { .. } | Error::BudgetExceeded { .. }
        )
    }
}
