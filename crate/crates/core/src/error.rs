use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: half width {half_width} must be > 0 and points {points} must be >= 3")]
    InvalidGrid { half_width: f64, points: usize },

    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("non-finite value in {context} at sample {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("missing or unexpected preset parameter `{0}`")]
    PresetParameter(String),

    #[error("reaction needs at least one coefficient function")]
    EmptyReaction,

    #[error("iteration blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("horizon {horizon} reaches the comparison blow-up time {blow_up_time}")]
    BeyondBlowUp { horizon: f64, blow_up_time: f64 },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("probe at t = {t} is not inside a single segment of the {steps}-step trajectory")]
    ProbeStraddlesNode { t: f64, steps: usize },

    #[error("need at least {required} refinement levels, found {found}")]
    TooFewLevels { required: usize, found: usize },

    #[error("refinement levels must be strictly increasing and >= 1")]
    InvalidLevels,

    #[error("constant-state oracle needs a periodic grid with spatially constant coefficients")]
    NotConstantState,

    #[error("ODE solver failed to reach tolerance after {refinements} step halvings")]
    SolverStalled { refinements: usize },

    #[error("level with {steps} steps: {source}")]
    AtLevel { steps: usize, source: Box<Error> },
}

impl Error {
    /// Step index of a blow-up, looking through a level wrapper.
    pub fn blow_up_step(&self) -> Option<usize> {
        match self {
            Error::BlowUp { step, .. } => Some(*step),
            Error::AtLevel { source, .. } => source.blow_up_step(),
            _ => None,
        }
    }
}
