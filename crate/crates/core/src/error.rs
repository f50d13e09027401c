use thiserror::Error;

/// Errors surfaced by model construction, solvers, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time grid must be non-empty, ascending, and non-negative")]
    BadTimeGrid,

    #[error("generator contains a non-finite rate")]
    NonFiniteRate,

    #[error("transient block is singular; the FAIL state may be unreachable")]
    SingularTransientBlock,

    #[error("horizon too short: survival mass {remaining:e} remains at t_max")]
    HorizonTooShort { remaining: f64 },

    #[error("step size too coarse: the delay must span at least {min} steps, got {got}")]
    StepTooCoarse { min: usize, got: usize },

    #[error("probability component {value:e} fell below tolerance at t = {t}; bad generator?")]
    NegativeProbability { value: f64, t: f64 },

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("mass conservation drift {0:e} exceeds tolerance")]
    MassDrift(f64),

    #[error("Lambert W iteration did not converge for z = {0}")]
    LambertNoConvergence(String),

    #[error("z = -1/e is the Lambert branch point; characteristic roots are not simple")]
    LambertBranchPoint,

    #[error("moment order must lie in 1..=4, got {0}")]
    BadMomentOrder(u32),

    #[error("silent-corruption mapping needs at least two check drives (M >= 2)")]
    InsufficientCheckDrives,

    #[error("alternating eigen-form sum is unreliable for T > {max}; use the binomial form")]
    EigenFormOverflow { max: u32 },

    #[error("model `{0}` is not supported by this operation")]
    UnsupportedModel(String),

    #[error("unknown model tag `{0}`")]
    UnknownModel(String),

    #[error("trial exceeded the event cap; absorption is too slow to simulate directly")]
    EventCapExceeded,
}

pub type Result<T> = std::result::Result<T, Error>;
