use thiserror::Error;

/// Errors raised by the simulator, its oracles and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("event scheduled in the past: t={time} < clock={clock}")]
    Causality { time: f64, clock: f64 },

    #[error("event cap of {0} events exceeded")]
    EventCap(u64),

    #[error("engine logic error: {0}")]
    Logic(String),

    #[error("unstable system: {0}")]
    Unstable(String),

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("no scenario defined (set `scheme` or `su_rates`)")]
    NoScenario,

    #[error("aggregation: {0}")]
    Aggregate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
