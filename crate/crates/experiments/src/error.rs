use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] chronobasis::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error("realization with seed {seed}: {source}")]
    Realization {
        seed: u64,
        #[source]
        source: chronobasis::Error,
    },

    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;
