//! Analytical model, exact oracles and slot-level simulator for a slotted
//! random-access network in which saturated users reach a destination either
//! directly or through a full-duplex relay with multi-packet reception.
//!
//! The pipeline is layered:
//!
//! * [`phy`] turns a [`NetworkParams`] into SINR capture success probabilities.
//! * [`drift`] builds the per-slot relay-queue change laws, both from the
//!   closed forms and from an exhaustive event-space enumeration.
//! * [`queue`] derives service rate, empty probability, mean queue length and
//!   the stability threshold, with a truncated Markov-chain oracle.
//! * [`metrics`] computes throughput, relayed fraction and delay.
//! * [`sim`] replays the network slot by slot and reports batch-means
//!   estimates of every analytical quantity.
//! * [`experiment`] is the configuration, sweep and CSV layer used by the CLI.

pub mod drift;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod params;
pub mod phy;
pub mod queue;
pub mod sim;

mod math;

pub use drift::{DriftDistribution, QueueState};
pub use error::{Error, Result};
pub use metrics::{Baseline, Delay, DelayConvention, Evaluation, PerformanceReport, UserThroughput};
pub use params::{NetworkParams, Node, Receiver, SymmetricParams, UserParams};
pub use phy::{SuccessTable, TableMode, TransmitSet};
pub use queue::{Q0Min, RelayQueueMetrics};
pub use sim::{SamplingMode, SimConfig, SimResult, StabilityVerdict};
