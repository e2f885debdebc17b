use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("parameter `{field}` out of domain: {reason}")]
    Domain { field: String, reason: String },

    /// A call violated the operation contract (e.g. transmitter not in the
    /// transmit set, or a stable-only routine called on an unstable queue).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested closed form does not cover this network shape.
    #[error("wrong model: {0}")]
    WrongModel(String),

    /// Exhaustive enumeration would exceed the supported size.
    #[error("enumeration over {n} users exceeds the limit of {limit}")]
    ResourceBound { n: usize, limit: usize },

    /// The relay queue is not stable (arrival rate at or above service rate).
    #[error("relay queue unstable: drift surplus {drift_surplus:.3e}{}", q0_min.map(|q| format!(", q0_min = {q:.6}")).unwrap_or_default())]
    Unstable {
        /// Mean per-slot growth of a nonempty queue, `lambda1 - mu`.
        drift_surplus: f64,
        q0_min: Option<f64>,
    },

    /// The truncated chain still carries too much mass beyond its last level.
    #[error("truncation at {levels} levels leaves tail mass {tail_mass:.3e}; increase truncation")]
    Truncation { levels: usize, tail_mass: f64 },

    /// Malformed experiment configuration.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// Reading or writing an artifact failed.
    #[error("i/o: {0}")]
    Io(String),

    /// A relayed fraction was requested for a user with zero throughput.
    #[error("relayed fraction undefined for zero throughput")]
    UndefinedFraction,
}

impl Error {
    pub fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Domain {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
