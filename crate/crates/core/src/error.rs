use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the layer that raises them; [`Error::exit_code`]
/// maps each group onto the command-line exit status.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // --- state layer -----------------------------------------------------
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("time {t} is not on the history grid (t0 = {t0}, dt = {dt})")]
    OffGridTime { t: f64, t0: f64, dt: f64 },
    #[error("phase-bearing quantity requested on a mixed-state history")]
    PhaseUndefinedForMixed,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    // --- Hamiltonian assembly ----------------------------------------------
    #[error("memory reaches before the start of the history: t - a = {requested} < t0 = {t0}")]
    MemoryUnderflow { requested: f64, t0: f64 },
    #[error("memory distance {a} is not an integer multiple of dt = {dt}")]
    OffGridDistance { a: f64, dt: f64 },
    #[error("coupling evaluated to a non-finite value at t = {t}")]
    NonFiniteCoupling { t: f64 },
    #[error("projector set is not a complete orthonormal rank-1 basis")]
    IncompleteBasis,
    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    // --- integration -----------------------------------------------------
    #[error("purity drift {drift:.3e} exceeded the monitor bound at t = {t}")]
    PurityDriftExceeded { drift: f64, t: f64 },
    #[error("coupling schedule became singular at t = {t}")]
    ScheduleSingularity { t: f64 },
    #[error("coupling root became complex at t = {t}")]
    ComplexRoot { t: f64 },

    // --- reformulation ---------------------------------------------------
    #[error("history overlap too close to 1 (w = {w})")]
    DegenerateOverlap { w: f64 },
    #[error("operation requires a single qubit (dimension 2), got {0}")]
    NonQubit(usize),
    #[error("memory distance makes the closed form singular")]
    SingularMemoryDistance,
    #[error("trace-product matrix is ill conditioned (cond = {cond:.3e})")]
    SingularT { cond: f64 },

    // --- deformation oracles ---------------------------------------------
    #[error("deformation coupling must be nonzero")]
    ZeroXi,
    #[error("1 + scaled imaginary coupling vanishes")]
    UnitDenominator,
    #[error("time {t} is at or past landing time {t_land}")]
    PastLanding { t: f64, t_land: f64 },
    #[error("ground-state population is zero")]
    ZeroPopulation,
    #[error("coupling {0} outside the admissible range")]
    XiOutOfRange(f64),

    // --- phases ----------------------------------------------------------
    #[error("analysis window too short: {0}")]
    WindowTooShort(String),

    // --- circuit ---------------------------------------------------------
    #[error("gate is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },
    #[error("operator is zero")]
    ZeroOperator,
    #[error("step budget exceeded: {0}")]
    StepBudgetExceeded(String),

    // --- plumbing --------------------------------------------------------
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    #[error("tolerance breach: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the command-line front end:
    /// 2 configuration, 3 numeric failure, 4 resource budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::OffGridDistance { .. }
            | Error::OffGridTime { .. }
            | Error::InvalidState(_)
            | Error::DimensionMismatch(_)
            | Error::IncompleteBasis
            | Error::NonQubit(_)
            | Error::XiOutOfRange(_)
            | Error::ZeroXi
            | Error::WindowTooShort(_)
            | Error::Io(_) => 2,
            Error::Budget(_) | Error::StepBudgetExceeded(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
