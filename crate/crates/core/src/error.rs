use thiserror::Error;

/// Errors raised by the estimation and bound routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("prior is not derivable (rectangular prior has no Van Trees bound)")]
    NonDerivablePrior,

    #[error("singular information matrix (det = {det:e})")]
    SingularInformation { det: f64 },

    #[error("degenerate posterior: outcome {outcome} has zero likelihood at every particle")]
    DegeneratePosterior { outcome: usize },

    #[error("circular mean undefined: resultant length {0:e} on component")]
    UndefinedMean(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("run {run} (seed {seed:#018x}) failed: {source}")]
    RunFailed {
        run: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
