//! Canned experiments: figure families and the oracle-agreement suite.

use super::config::{Engine, ExperimentSpec};
use crate::error::{Error, Result};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    ThroughputVsN,
    DelayVsN,
    QueueVsN,
    RelayedVsN,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::ThroughputVsN,
        Figure::DelayVsN,
        Figure::QueueVsN,
        Figure::RelayedVsN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Figure::ThroughputVsN => "thr-vs-n",
            Figure::DelayVsN => "delay-vs-n",
            Figure::QueueVsN => "queue-vs-n",
            Figure::RelayedVsN => "relayed-vs-n",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::domain("figure", format!("unknown preset `{s}`")))
    }
}

/// Self-interference levels swept by every figure.
pub const FIGURE_G: [f64; 3] = [1e-10, 1e-8, 1.0];

/// `n = 1..50` against the three cancelation levels at one threshold. The
/// throughput figure also sweeps both relay access probabilities, since
/// they only matter once the queue is unstable.
pub fn figure_spec(figure: Figure, gamma: f64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default();
    spec.axes.n = (1..=50).collect();
    spec.axes.gamma = vec![gamma];
    spec.axes.g = FIGURE_G.to_vec();
    spec.axes.q0 = match figure {
        Figure::ThroughputVsN => vec![0.95, 0.99],
        _ => vec![0.99],
    };
    spec.prefix = format!("{}-gamma{}", figure.as_str(), gamma);
    spec
}

pub const VALIDATE_SLOTS: u64 = 200_000;
/// Many simultaneous comparisons are made, so the suite only flags
/// deviations beyond this many standard errors.
pub const VALIDATE_SIGMA: f64 = 5.0;
pub const VALIDATE_SEED: u64 = 1;

/// Oracle-agreement suite: closed forms against enumeration, the Markov
/// chain and simulation over thresholds, cancelation levels and sizes.
pub fn validate_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::default();
    spec.axes.n = vec![2, 5, 8];
    spec.axes.gamma = vec![0.6, 1.2, 2.5];
    spec.axes.g = FIGURE_G.to_vec();
    spec.engines = Engine::ALL.to_vec();
    spec.sim = SimConfig::new(VALIDATE_SLOTS, VALIDATE_SEED);
    spec.sigma = VALIDATE_SIGMA;
    spec.prefix = "validate".into();
    spec
}
