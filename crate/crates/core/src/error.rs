use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("schedule infeasible: T_M must be at least 2*tau_C + T_C; short by {deficit}")]
    ScheduleInfeasible { deficit: f64 },

    #[error("assembled Hamiltonian is not Hermitian at t = {t} (max |H - H^dag| = {deviation:e})")]
    NonHermitian { t: f64, deviation: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("norm drift {drift:e} exceeded bound {bound:e} at t = {t}")]
    NormDrift { t: f64, drift: f64, bound: f64 },

    #[error("target amplitude magnitude {magnitude:e} too small to define a phase ({what})")]
    DegenerateAmplitude { what: &'static str, magnitude: f64 },

    #[error("no acceptable transfer maximum: best p = {best_p} at T_C = {best_t_c} (floor {floor})")]
    NoAcceptableMaximum { best_t_c: f64, best_p: f64, floor: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag used by the CLI and sweep status column.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::ScheduleInfeasible { .. } => "schedule_infeasible",
            Error::NonHermitian { .. } => "non_hermitian",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::TooManySteps { .. } => "too_many_steps",
            Error::NormDrift { .. } => "norm_drift",
            Error::DegenerateAmplitude { .. } => "degenerate_amplitude",
            Error::NoAcceptableMaximum { .. } => "no_acceptable_maximum",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
