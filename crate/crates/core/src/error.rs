use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("no unique steady state: every dissipative rate is zero")]
    NoUniqueSteadyState,

    #[error(
        "multiple steady states: two smallest singular values of the generator are \
         {smallest:.3e} and {second:.3e} (relative to norm {norm:.3e})"
    )]
    MultipleSteadyStates { smallest: f64, second: f64, norm: f64 },

    #[error("steady-state verification failed: {0}")]
    SteadyStateVerification(String),

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    StepLimit(usize),

    #[error("Fock cutoff violated: top-level population {population:.3e} at t = {time}")]
    CutoffViolation { population: f64, time: f64 },

    #[error("dark steady state: <{operator}> = {value:.3e}")]
    DarkSteadyState { operator: &'static str, value: f64 },

    #[error("unsupported emitter count {0}: Dicke populations are defined for N = 2 only")]
    UnsupportedEmitterCount(usize),

    #[error("undefined contrast: p_plus = {0:.3e}")]
    UndefinedContrast(f64),

    #[error("undefined cooperativity: <J+J> = {0:.3e}")]
    UndefinedCooperativity(f64),

    #[error("imaginary residue {0:.3e} in a real observable")]
    ImaginaryResidue(f64),

    #[error("invalid sweep spec: {0}")]
    InvalidSweep(String),

    #[error("no peak: every grid point is undefined")]
    NoPeak,

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("normalization window is empty or too small ({0} bins, need at least 20)")]
    EmptyWindow(usize),

    #[error("normalization plateau mean is zero")]
    ZeroPlateau,

    #[error("histogram is not normalized")]
    NotNormalized,

    #[error("fit did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("singular Jacobian in fit")]
    SingularJacobian,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
