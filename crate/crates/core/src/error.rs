use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for trajectories of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("all weights zero")]
    AllWeightsZero,

    #[error("weights not normalized: sum = {sum}")]
    Unnormalized { sum: f64 },

    #[error("weight degeneracy at step {step}: all weights zero")]
    WeightDegeneracy { step: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("measurement bound infinite at y=0 (observation {index})")]
    InfiniteBound { index: usize },

    #[error("tobit observation negative: z_{index} = {value}")]
    NegativeObservation { index: usize, value: f64 },

    #[error("bound violated: log acceptance ratio {log_ratio} > 0")]
    BoundViolated { log_ratio: f64 },

    #[error("acceptance too rare: no acceptance after {attempts} attempts")]
    AcceptanceTooRare { attempts: u64 },

    #[error("window starting at m={m}: {source}")]
    Window { m: usize, source: Box<Error> },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "calibration exhausted at w_max={w_max}: largest failing index {index} with z-score {z}"
    )]
    CalibrationExhausted { w_max: usize, index: usize, z: f64 },
}

impl Error {
    pub(crate) fn in_window(self, m: usize) -> Self {
        Error::Window {
            m,
            source: Box::new(self),
        }
    }
}
