//! Throughput, relayed fraction and per-packet delay for the relay network
//! and for the same users without a relay.

use std::fmt;

use crate::drift::DriftDistribution;
use crate::error::{Error, Result};
use crate::math::{bernoulli_pattern, binomial};
use crate::params::{NetworkParams, Node, Receiver};
use crate::phy::{build_success_table, ChannelModel, SuccessTable, TableMode};
use crate::queue::{analyze, RelayQueueMetrics};

/// Per-user delivery rates, packets per slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserThroughput {
    pub t_direct: f64,
    pub t_relayed: f64,
    pub t_total: f64,
}

impl UserThroughput {
    fn new(t_direct: f64, t_relayed: f64) -> Self {
        Self {
            t_direct,
            t_relayed,
            t_total: t_direct + t_relayed,
        }
    }
}

/// A mean delay in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Finite(f64),
    /// The relay queue grows without bound; carries `lambda1 - mu`.
    Unbounded {
        drift_surplus: f64,
    },
    /// No packet is ever delivered on this path.
    Undefined,
}

impl Delay {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Delay::Finite(x) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Finite(x) => write!(f, "{x}"),
            Delay::Unbounded { drift_surplus } => write!(f, "unbounded (drift {drift_surplus:e})"),
            Delay::Undefined => write!(f, "undefined"),
        }
    }
}

/// How the time a relayed packet spends at the relay is split.
///
/// By Little's law `Q/lambda` is the mean number of slot boundaries a packet
/// spends in the relay queue, from arrival up to and including the slot in
/// which it is delivered. That already contains the head-of-line service
/// time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum DelayConvention {
    /// `D_R = Q/lambda` and `D_Q = D_R - 1/mu` (waiting before reaching the
    /// head of the relay queue). Matches the simulated delay.
    #[default]
    HeadOfLine,
    /// `D_Q = Q/lambda` and `D_R = D_Q + 1/mu`, counting the service time a
    /// second time.
    AdditiveService,
}

impl DelayConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            DelayConvention::HeadOfLine => "head-of-line",
            DelayConvention::AdditiveService => "additive-service",
        }
    }
}

impl std::str::FromStr for DelayConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head-of-line" => Ok(DelayConvention::HeadOfLine),
            "additive-service" => Ok(DelayConvention::AdditiveService),
            other => Err(Error::domain(
                "delay_convention",
                format!("unknown convention `{other}`"),
            )),
        }
    }
}

/// Throughput and delay of the relay-assisted network.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub users: Vec<UserThroughput>,
    pub t_aggr: f64,
    /// Share of all delivered traffic that went through the relay.
    pub relayed_fraction: Option<f64>,
    pub d_queue: Delay,
    pub d_relay: Delay,
    pub delay: Vec<Delay>,
    pub stable: bool,
}

/// Delays of the relay-less network.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub throughput: Vec<f64>,
    pub delay: Vec<Delay>,
}

/// Everything the analytical engine produces for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub drift: DriftDistribution,
    pub queue: RelayQueueMetrics,
    pub report: PerformanceReport,
    pub baseline: Baseline,
}

/// Probability that the relay transmits in a slot.
fn relay_activity(metrics: &RelayQueueMetrics, q0: f64) -> f64 {
    if metrics.stable {
        metrics.relay_activity(q0)
    } else {
        q0
    }
}

fn two_user_rates(table: &SuccessTable, params: &NetworkParams, activity: f64) -> Result<Vec<UserThroughput>> {
    if params.n() != 2 {
        return Err(Error::WrongModel(format!(
            "two-user form needs n = 2, got {}",
            params.n()
        )));
    }
    let t = table.links()?;
    let r = Node::Relay;
    Ok((0..2)
        .map(|i| {
            let j = 1 - i;
            let (qi, qj) = (params.users[i].q, params.users[j].q);
            let (ui, uj) = (Node::User(i), Node::User(j));
            let d = |set: &[Node]| t.p(ui, Receiver::Destination, set);
            let o = |set: &[Node]| t.p(ui, Receiver::Relay, set);
            let direct_on = qi * ((1.0 - qj) * d(&[r, ui]) + qj * d(&[r, ui, uj]));
            let direct_off = qi * ((1.0 - qj) * d(&[ui]) + qj * d(&[ui, uj]));
            let relayed_on =
                qi * ((1.0 - qj) * (1.0 - d(&[r, ui])) * o(&[r, ui]) + qj * (1.0 - d(&[r, ui, uj])) * o(&[r, ui, uj]));
            let relayed_off =
                qi * ((1.0 - qj) * (1.0 - d(&[ui])) * o(&[ui]) + qj * (1.0 - d(&[ui, uj])) * o(&[ui, uj]));
            UserThroughput::new(
                activity * direct_on + (1.0 - activity) * direct_off,
                activity * relayed_on + (1.0 - activity) * relayed_off,
            )
        })
        .collect())
}

fn n_user_rate(table: &SuccessTable, params: &NetworkParams, activity: f64) -> Result<UserThroughput> {
    let s = table.symmetric()?;
    let q = params.common_user().expect("symmetric table implies identical users").q;
    let n = params.n();
    let (mut direct, mut relayed) = (0.0, 0.0);
    for k in 0..n {
        let w = binomial(n - 1, k) * q * bernoulli_pattern(q, n - 1, k);
        for (relay_tx, a) in [(true, activity), (false, 1.0 - activity)] {
            let pd = s.pd(k + 1, relay_tx);
            direct += a * w * pd;
            relayed += a * w * (1.0 - pd) * s.p0(k + 1, relay_tx);
        }
    }
    Ok(UserThroughput::new(direct, relayed))
}

fn require_stable(metrics: &RelayQueueMetrics) -> Result<()> {
    if metrics.stable {
        Ok(())
    } else {
        Err(Error::Unstable {
            drift_surplus: metrics.drift_surplus(),
            q0_min: Some(metrics.q0_min.value()),
        })
    }
}

/// Two-user direct and relayed throughput on a stable queue.
pub fn throughput_two_user(
    metrics: &RelayQueueMetrics,
    table: &SuccessTable,
    params: &NetworkParams,
) -> Result<Vec<UserThroughput>> {
    require_stable(metrics)?;
    two_user_rates(table, params, relay_activity(metrics, params.q0))
}

/// Per-user throughput of a symmetric network on a stable queue.
pub fn throughput_n_user(
    metrics: &RelayQueueMetrics,
    table: &SuccessTable,
    params: &NetworkParams,
) -> Result<UserThroughput> {
    require_stable(metrics)?;
    n_user_rate(table, params, relay_activity(metrics, params.q0))
}

/// Rates with the relay transmitting with probability `activity`; the
/// relayed column is then each user's arrival rate into the queue.
fn rates_at(table: &SuccessTable, params: &NetworkParams, activity: f64) -> Result<Vec<UserThroughput>> {
    if table.symmetric.is_some() && params.is_symmetric() {
        Ok(vec![n_user_rate(table, params, activity)?; params.n()])
    } else {
        two_user_rates(table, params, activity)
    }
}

/// Per-user rates of a saturated relay: direct throughput with the relay
/// always backlogged, and the relay's service split by arrival share.
fn saturated_rates(
    table: &SuccessTable,
    params: &NetworkParams,
    metrics: &RelayQueueMetrics,
) -> Result<Vec<UserThroughput>> {
    let rates = rates_at(table, params, params.q0)?;
    let arrivals: f64 = rates.iter().map(|u| u.t_relayed).sum();
    Ok(rates
        .iter()
        .map(|u| {
            let share = if arrivals > 0.0 { u.t_relayed / arrivals } else { 0.0 };
            UserThroughput::new(u.t_direct, metrics.mu * share)
        })
        .collect())
}

/// Aggregate delivery rate with an unstable, permanently backlogged relay:
/// the direct throughput of all users plus the relay service rate.
pub fn aggregate_throughput_unstable(
    table: &SuccessTable,
    params: &NetworkParams,
    metrics: &RelayQueueMetrics,
) -> Result<f64> {
    if metrics.stable {
        return Err(Error::Contract(
            "unstable aggregate throughput requested for a stable queue".into(),
        ));
    }
    let direct: f64 = rates_at(table, params, params.q0)?.iter().map(|u| u.t_direct).sum();
    Ok(direct + metrics.mu)
}

/// `T_R / T` for one user.
pub fn relayed_fraction(u: &UserThroughput) -> Result<f64> {
    if !(u.t_total > 0.0) {
        return Err(Error::UndefinedFraction);
    }
    Ok((u.t_relayed / u.t_total).clamp(0.0, 1.0))
}

/// Relay-side delays `(D_Q, D_R)`.
pub fn relay_delays(metrics: &RelayQueueMetrics, convention: DelayConvention) -> (Delay, Delay) {
    if !metrics.stable {
        let u = Delay::Unbounded {
            drift_surplus: metrics.drift_surplus(),
        };
        return (u, u);
    }
    if !(metrics.lambda > 0.0 && metrics.mu > 0.0) {
        return (Delay::Undefined, Delay::Undefined);
    }
    let sojourn = metrics.q_bar / metrics.lambda;
    let service = 1.0 / metrics.mu;
    match convention {
        DelayConvention::HeadOfLine => (Delay::Finite((sojourn - service).max(0.0)), Delay::Finite(sojourn)),
        DelayConvention::AdditiveService => (Delay::Finite(sojourn), Delay::Finite(sojourn + service)),
    }
}

/// Mean head-of-line delay per user, `D_i = (1 + T_R,i D_R) / T_i`.
pub fn average_delay(users: &[UserThroughput], metrics: &RelayQueueMetrics, convention: DelayConvention) -> Vec<Delay> {
    let (_, d_relay) = relay_delays(metrics, convention);
    users
        .iter()
        .map(|u| {
            if !(u.t_total > 0.0) {
                return Delay::Undefined;
            }
            if u.t_relayed == 0.0 {
                return if metrics.stable {
                    Delay::Finite(1.0 / u.t_total)
                } else {
                    d_relay
                };
            }
            match d_relay {
                Delay::Finite(dr) => Delay::Finite((1.0 + u.t_relayed * dr) / u.t_total),
                other => other,
            }
        })
        .collect()
}

/// Full report for a queue analysis, stable or not.
pub fn performance_report(
    table: &SuccessTable,
    params: &NetworkParams,
    metrics: &RelayQueueMetrics,
    convention: DelayConvention,
) -> Result<PerformanceReport> {
    let (users, t_aggr) = if metrics.stable {
        let users = rates_at(table, params, relay_activity(metrics, params.q0))?;
        let t = users.iter().map(|u| u.t_total).sum();
        (users, t)
    } else {
        (
            saturated_rates(table, params, metrics)?,
            aggregate_throughput_unstable(table, params, metrics)?,
        )
    };
    let relayed: f64 = users.iter().map(|u| u.t_relayed).sum();
    let (d_queue, d_relay) = relay_delays(metrics, convention);
    Ok(PerformanceReport {
        delay: average_delay(&users, metrics, convention),
        relayed_fraction: (t_aggr > 0.0).then(|| (relayed / t_aggr).clamp(0.0, 1.0)),
        users,
        t_aggr,
        d_queue,
        d_relay,
        stable: metrics.stable,
    })
}

/// Throughput and delay when the users reach the destination alone.
pub fn no_relay_baseline(params: &NetworkParams) -> Result<Baseline> {
    let channel = ChannelModel::new(params)?;
    let n = params.n();
    let throughput: Vec<f64> = if let Some(u) = params.common_user() {
        let q = u.q;
        let users: Vec<usize> = (0..n).collect();
        let t: f64 = (0..n)
            .map(|k| {
                binomial(n - 1, k)
                    * q
                    * bernoulli_pattern(q, n - 1, k)
                    * channel.user_success(0, Receiver::Destination, false, &users[..=k])
            })
            .sum();
        vec![t; n]
    } else {
        if n > crate::drift::ENUMERATION_MAX_USERS {
            return Err(Error::ResourceBound {
                n,
                limit: crate::drift::ENUMERATION_MAX_USERS,
            });
        }
        (0..n)
            .map(|i| {
                let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
                let mut t = 0.0;
                for mask in 0u64..(1 << others.len()) {
                    let mut set = vec![i];
                    let mut w = params.users[i].q;
                    for (b, &k) in others.iter().enumerate() {
                        let qk = params.users[k].q;
                        if mask >> b & 1 == 1 {
                            set.push(k);
                            w *= qk;
                        } else {
                            w *= 1.0 - qk;
                        }
                    }
                    t += w * channel.user_success(i, Receiver::Destination, false, &set);
                }
                t
            })
            .collect()
    };
    let delay = throughput
        .iter()
        .map(|&t| {
            if t > 0.0 {
                Delay::Finite(1.0 / t)
            } else {
                Delay::Undefined
            }
        })
        .collect();
    Ok(Baseline { throughput, delay })
}

/// Analytical engine: success table, closed-form drift, queue metrics,
/// throughput, delay and the no-relay baseline.
pub fn evaluate(params: &NetworkParams, mode: TableMode, convention: DelayConvention) -> Result<Evaluation> {
    params.validate()?;
    let table = build_success_table(params, mode)?;
    let (drift, queue) = analyze(params, &table)?;
    let report = performance_report(&table, params, &queue, convention)?;
    Ok(Evaluation {
        drift,
        queue,
        report,
        baseline: no_relay_baseline(params)?,
    })
}
