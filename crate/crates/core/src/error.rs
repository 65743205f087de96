use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A density was zero, negative or not finite where positivity is assumed.
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// The exact one-step observation predictor vanished.
    #[error("likelihood degenerate at time {time}")]
    LikelihoodDegenerate { time: usize },

    /// Every particle weight was zero.
    #[error("weight degeneracy at time {time}: all {particles} weights are zero")]
    WeightDegeneracy { time: usize, particles: usize },

    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical rank deficiency: {0}")]
    Rank(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input error in {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Time index attached to a degeneracy error, looking through replicate wrappers.
    pub fn time_index(&self) -> Option<usize> {
        match self {
            Error::LikelihoodDegenerate { time } | Error::WeightDegeneracy { time, .. } => {
                Some(*time)
            }
            Error::Replicate { source, .. } => source.time_index(),
            _ => None,
        }
    }
}
