use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state component encountered ({context})")]
    NonFinite { context: String },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("integration left the admissible region at t = {t}")]
    Escaped { t: f64 },

    #[error("no interior equilibrium exists for these parameters")]
    NoInteriorEquilibrium,

    #[error("interior equilibrium is not unique ({count} roots); the tracked branch is ambiguous")]
    AmbiguousEquilibrium { count: usize },

    #[error("no sign change of {what} over [{lo}, {hi}]")]
    NoSignChange { what: &'static str, lo: f64, hi: f64 },

    #[error("degenerate Hopf point at {value}: determinant {det} is not positive")]
    DegenerateHopf { value: f64, det: f64 },

    #[error("no positive root: {0}")]
    NoPositiveRoot(String),

    #[error("Turing instability impossible: {0}")]
    TuringImpossible(String),

    #[error("no tangency found for k in (0, {k_max}] with {scanned} samples")]
    NoTangency { k_max: f64, scanned: usize },

    #[error("prey-free front undefined: b11 = {b11} <= 0 (E2 is stable)")]
    PreyFreeFrontUndefined { b11: f64 },

    #[error("no admissible saddle point of the spreading speed in K in (0, {k_max}], q in [0, {q_max}]")]
    NoSaddlePoint { k_max: f64, q_max: f64 },

    #[error("source equilibrium {0} is not a saddle or repeller")]
    NotASaddle(&'static str),

    #[error("integration budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("classification inconclusive: {0}")]
    Inconclusive(String),

    #[error("field does not cross level {level} on the requested side")]
    NoCrossing { level: f64 },

    #[error("fit window too short: {samples} samples, need at least {needed}")]
    WindowTooShort { samples: usize, needed: usize },

    #[error("front within {margin} of the boundary at t = {t}")]
    BoundaryContamination { t: f64, margin: f64 },

    #[error("insufficient tail: {have} snapshots, need at least {need}")]
    InsufficientTail { have: usize, need: usize },

    #[error("simulation blew up at t = {t} (max|u| = {max_u}, max|v| = {max_v})")]
    SimulationBlowUp { t: f64, max_u: f64, max_v: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
