//! Relay queue performance: service rate, empty probability, mean arrival
//! rate, mean queue length and the stabilizing relay transmit probability,
//! plus a truncated Markov-chain oracle.

use crate::drift::{closed_form_coefficients, closed_form_drift, weighted, DriftDistribution, StabilityCoefficients};
use crate::error::{Error, Result};
use crate::math::{bernoulli_pattern, binomial};
use crate::params::{NetworkParams, Node, Receiver};
use crate::phy::SuccessTable;

/// Minimum relay transmit probability for a stable queue. Values at or
/// above one (including infinity) mean no `q0` stabilizes the queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q0Min(pub f64);

impl Q0Min {
    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_stabilizable(&self) -> bool {
        self.0 < 1.0
    }

    /// Loynes: stable iff `q0` exceeds the threshold strictly.
    pub fn stabilizes(&self, q0: f64) -> bool {
        q0 > self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayQueueMetrics {
    /// Service rate, packets per slot.
    pub mu: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    /// Mean arrival rate. Equals `lambda1` when unstable.
    pub lambda: f64,
    /// `P(Q = 0)`. Zero when unstable.
    pub p_empty: f64,
    /// Mean queue length. Infinite when unstable.
    pub q_bar: f64,
    pub q0_min: Q0Min,
    pub stable: bool,
}

impl RelayQueueMetrics {
    /// `lambda1 - mu`: positive surplus means the queue grows.
    pub fn drift_surplus(&self) -> f64 {
        self.lambda1 - self.mu
    }

    /// Probability the relay transmits in a slot, `q0 P(Q > 0)`.
    pub fn relay_activity(&self, q0: f64) -> f64 {
        q0 * (1.0 - self.p_empty)
    }
}

/// Mean relay service rate.
pub fn service_rate(table: &SuccessTable, params: &NetworkParams) -> Result<f64> {
    let q0 = params.q0;
    if let (Some(s), Some(u)) = (table.symmetric.as_ref(), params.common_user()) {
        let n = params.n();
        return Ok((0..=n)
            .map(|k| binomial(n, k) * q0 * bernoulli_pattern(u.q, n, k) * s.p0d(k))
            .sum());
    }
    if params.n() != 2 {
        return Err(Error::WrongModel(
            "service rate covers identical users or two users".into(),
        ));
    }
    let t = table.links()?;
    let (q1, q2) = (params.users[0].q, params.users[1].q);
    let (r, u1, u2) = (Node::Relay, Node::User(0), Node::User(1));
    let d = |set: &[Node]| t.p(r, Receiver::Destination, set);
    Ok(q0 * (1.0 - q1) * (1.0 - q2) * d(&[r])
        + q0 * q1 * (1.0 - q2) * d(&[r, u1])
        + q0 * q2 * (1.0 - q1) * d(&[r, u2])
        + q0 * q1 * q2 * d(&[r, u1, u2]))
}

fn unstable(d: &DriftDistribution) -> Error {
    Error::Unstable {
        drift_surplus: -d.net_service(),
        q0_min: None,
    }
}

/// `P(Q = 0)` from the generating-function identity.
pub fn empty_probability(d: &DriftDistribution) -> Result<f64> {
    if d.lambda0 == 0.0 {
        return Ok(1.0);
    }
    let s = d.net_service();
    if !(s > 0.0) {
        return Err(unstable(d));
    }
    Ok(s / (s + d.lambda0))
}

/// Mean arrival rate `P(Q=0) lambda0 + P(Q>0) lambda1`.
pub fn mean_arrival_rate(d: &DriftDistribution) -> Result<f64> {
    let p = empty_probability(d)?;
    Ok(p * d.lambda0 + (1.0 - p) * d.lambda1)
}

/// Mean queue length from the second derivatives of the transition
/// generating functions.
pub fn mean_queue_length(d: &DriftDistribution) -> Result<f64> {
    if d.lambda0 == 0.0 {
        return Ok(0.0);
    }
    if !(d.net_service() > 0.0) {
        return Err(unstable(d));
    }
    let growth = weighted(&d.p1, |i| i as f64) - d.p_minus1;
    let sq0 = weighted(&d.p0, |i| (i * (i + 3)) as f64);
    let sq1 = weighted(&d.p1, |i| (i * (i + 3)) as f64);
    let num = growth * sq0 + d.lambda0 * (2.0 * d.p_minus1 - sq1);
    let den = 2.0 * growth * (d.p_minus1 - weighted(&d.p1, |i| i as f64) + d.lambda0);
    let q = num / den;
    if q < 0.0 {
        return Err(Error::Contract(format!(
            "mean queue length evaluated negative ({q:e}) in a stable region"
        )));
    }
    Ok(q)
}

fn two_user_terms(d: &DriftDistribution) -> Result<(f64, f64, f64)> {
    if d.n() != 2 {
        return Err(Error::WrongModel(format!("two-user form needs n = 2, got {}", d.n())));
    }
    Ok((d.p_minus1, d.p1[1], d.p1[2]))
}

/// Two-user empty probability exactly as written for `n = 2`.
pub fn empty_probability_two_user(d: &DriftDistribution) -> Result<f64> {
    let (pm, p1, p2) = two_user_terms(d)?;
    if d.lambda0 == 0.0 {
        return Ok(1.0);
    }
    let s = pm - p1 - 2.0 * p2;
    if !(s > 0.0) {
        return Err(unstable(d));
    }
    Ok(s / (s + d.lambda0))
}

/// Two-user mean arrival rate exactly as written for `n = 2`.
pub fn mean_arrival_rate_two_user(d: &DriftDistribution) -> Result<f64> {
    let (pm, p1, p2) = two_user_terms(d)?;
    let p = empty_probability_two_user(d)?;
    if d.lambda0 == 0.0 {
        return Ok(p * d.lambda0);
    }
    let den = pm - p1 - 2.0 * p2 + d.lambda0;
    Ok((pm - p1 - 2.0 * p2) / den * d.lambda0 + d.lambda0 / den * d.lambda1)
}

/// Two-user mean queue length exactly as written for `n = 2`.
pub fn mean_queue_length_two_user(d: &DriftDistribution) -> Result<f64> {
    let (pm, p1, p2) = two_user_terms(d)?;
    if d.lambda0 == 0.0 {
        return Ok(0.0);
    }
    if !(pm - p1 - 2.0 * p2 > 0.0) {
        return Err(unstable(d));
    }
    let (a1, a2) = (d.p0[1], d.p0[2]);
    let g = p1 + 2.0 * p2 - pm;
    let num = g * (4.0 * a1 + 10.0 * a2) + d.lambda0 * (2.0 * pm - 4.0 * p1 - 10.0 * p2);
    let den = 2.0 * g * (pm - p1 - 2.0 * p2 + d.lambda0);
    Ok(num / den)
}

/// Threshold from the affine stability coefficients.
pub fn q0_min_from(c: &StabilityCoefficients) -> Q0Min {
    let num = c.sum_k_a();
    if num == 0.0 {
        return Q0Min(0.0);
    }
    let den = c.a + num - c.sum_k_b();
    if !(den > 0.0) {
        return Q0Min(f64::INFINITY);
    }
    Q0Min(num / den)
}

/// Minimum stabilizing relay transmit probability.
pub fn q0_min(params: &NetworkParams, table: &SuccessTable) -> Result<Q0Min> {
    Ok(q0_min_from(&closed_form_coefficients(table, params)?))
}

/// Queue metrics from a drift law and the service rate.
pub fn metrics_from_drift(d: &DriftDistribution, mu: f64, q0_min: Q0Min) -> RelayQueueMetrics {
    let stable = d.lambda0 == 0.0 || (d.lambda1 < mu && d.net_service() > 0.0);
    if stable {
        let p_empty = empty_probability(d).expect("stable drift");
        RelayQueueMetrics {
            mu,
            lambda0: d.lambda0,
            lambda1: d.lambda1,
            lambda: p_empty * d.lambda0 + (1.0 - p_empty) * d.lambda1,
            p_empty,
            q_bar: mean_queue_length(d).expect("stable drift"),
            q0_min,
            stable,
        }
    } else {
        RelayQueueMetrics {
            mu,
            lambda0: d.lambda0,
            lambda1: d.lambda1,
            lambda: d.lambda1,
            p_empty: 0.0,
            q_bar: f64::INFINITY,
            q0_min,
            stable,
        }
    }
}

/// Closed-form drift and queue metrics for `params`.
pub fn analyze(params: &NetworkParams, table: &SuccessTable) -> Result<(DriftDistribution, RelayQueueMetrics)> {
    let d = closed_form_drift(table, params)?;
    let mu = service_rate(table, params)?;
    let m = metrics_from_drift(&d, mu, q0_min(params, table)?);
    Ok((d, m))
}

/// Stationary law of the truncated queue chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DtmcSolution {
    /// `distribution[i] = P(Q = i)` for the retained levels.
    pub distribution: Vec<f64>,
    pub p_empty: f64,
    pub mean: f64,
    /// Estimated probability mass beyond the last retained level.
    pub tail_mass: f64,
}

/// Tail mass the truncated chain may leave out.
pub const DTMC_TAIL_TOLERANCE: f64 = 1e-12;
/// Default number of retained levels.
pub const DTMC_DEFAULT_LEVELS: usize = 10_000;

/// Solves the stationary law of the queue chain up to `truncation` levels.
///
/// A nonempty queue drops by at most one per slot, so the probability flow
/// across the cut between levels `i` and `i + 1` gives
///
/// ```text
/// s_{i+1} p_{-1} = s_0 sum_{k > i} a_k + sum_{j=1}^{i} s_j sum_{k > i-j} p_k
/// ```
///
/// which only adds nonnegative terms. Levels are generated until either the
/// truncation is reached or the remaining mass is negligible.
pub fn dtmc_steady_state(d: &DriftDistribution, truncation: usize) -> Result<DtmcSolution> {
    if d.lambda0 == 0.0 {
        return Ok(DtmcSolution {
            distribution: vec![1.0],
            p_empty: 1.0,
            mean: 0.0,
            tail_mass: 0.0,
        });
    }
    if !(d.net_service() > 0.0) || !(d.p_minus1 > 0.0) {
        return Err(unstable(d));
    }
    let n = d.n();
    // Upper tails of the empty-queue and nonempty-queue increments.
    let tail_a: Vec<f64> = (0..=n).map(|m| d.p0[m + 1..].iter().sum()).collect();
    let tail_b: Vec<f64> = (0..=n).map(|m| d.p1[m + 1..].iter().sum()).collect();

    let mut s = Vec::with_capacity(truncation.min(1 << 20) + 1);
    s.push(1.0f64);
    let mut total = 1.0f64;
    for i in 0..truncation {
        let mut flow = if i < n { s[0] * tail_a[i] } else { 0.0 };
        let lo = if i + 1 > n { i + 1 - n } else { 1 };
        for j in lo..=i {
            flow += s[j] * tail_b[i - j];
        }
        let next = flow / d.p_minus1;
        s.push(next);
        total += next;
        if total > 1e200 {
            s.iter_mut().for_each(|x| *x /= total);
            total = 1.0;
        }
        let len = s.len();
        if len > 2 * n + 4 && next < 1e-20 * total && next <= s[len - 2] {
            break;
        }
    }

    // Geometric extrapolation of the mass beyond the last level.
    let len = s.len();
    let span = n.max(1).min(len - 1);
    let last = s[len - 1];
    let tail_mass = if last == 0.0 {
        0.0
    } else {
        let rho = (last / s[len - 1 - span]).powf(1.0 / span as f64);
        if rho >= 1.0 || !rho.is_finite() {
            f64::INFINITY
        } else {
            // Up to n levels can be partially filled beyond the cut.
            last * rho / (1.0 - rho) * (n as f64).max(1.0) / total
        }
    };
    if tail_mass >= DTMC_TAIL_TOLERANCE {
        return Err(Error::Truncation { levels: len, tail_mass });
    }
    let distribution: Vec<f64> = s.iter().map(|x| x / total).collect();
    let mean = distribution.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
    Ok(DtmcSolution {
        p_empty: distribution[0],
        mean,
        distribution,
        tail_mass,
    })
}

/// [`dtmc_steady_state`] starting at the default truncation and doubling on
/// insufficient truncation, up to `max_levels`.
pub fn dtmc_steady_state_auto(d: &DriftDistribution, max_levels: usize) -> Result<DtmcSolution> {
    let mut levels = DTMC_DEFAULT_LEVELS.min(max_levels);
    loop {
        match dtmc_steady_state(d, levels) {
            Err(Error::Truncation { .. }) if levels < max_levels => {
                levels = (levels * 2).min(max_levels);
            }
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::n_user_drift;
    use crate::params::SymmetricParams;
    use crate::phy::{build_success_table, TableMode};

    fn setup(n: usize, gamma: f64, g: f64, q: f64, q0: f64) -> (NetworkParams, SuccessTable) {
        let p = SymmetricParams::reference(n, gamma, g, q, q0).to_network();
        let t = build_success_table(&p, TableMode::Derived).unwrap();
        (p, t)
    }

    fn alternating() -> DriftDistribution {
        DriftDistribution::from_parts(vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0], 1.0)
    }

    #[test]
    fn service_rate_edges() {
        let (p, t) = setup(4, 0.6, 1e-8, 0.1, 0.0);
        assert_eq!(service_rate(&t, &p).unwrap(), 0.0);
        let (p, t) = setup(4, 0.6, 1e-8, 0.0, 0.9);
        let expected = 0.9 * t.symmetric().unwrap().p0d(0);
        assert!((service_rate(&t, &p).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn no_arrivals_means_always_empty() {
        let (p, t) = setup(3, 0.6, 1e-8, 0.0, 0.5);
        let d = n_user_drift(&t, &p).unwrap();
        assert_eq!(empty_probability(&d).unwrap(), 1.0);
        assert_eq!(mean_queue_length(&d).unwrap(), 0.0);
        assert_eq!(mean_arrival_rate(&d).unwrap(), 0.0);
    }

    #[test]
    fn equal_conditional_rates_give_that_rate() {
        let d = DriftDistribution::from_parts(vec![0.0, 0.3], vec![0.0, 0.3], vec![0.0, 0.1], 0.6);
        assert!((mean_arrival_rate(&d).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn silent_relay_is_unstable() {
        let (p, t) = setup(3, 0.6, 1e-8, 0.1, 0.0);
        let d = n_user_drift(&t, &p).unwrap();
        assert!(d.lambda0 > 0.0);
        assert!(matches!(empty_probability(&d), Err(Error::Unstable { .. })));
        assert!(matches!(mean_arrival_rate(&d), Err(Error::Unstable { .. })));
        assert!(matches!(mean_queue_length(&d), Err(Error::Unstable { .. })));
    }

    #[test]
    fn two_user_printed_forms_equal_general_forms() {
        let (p, t) = setup(2, 0.6, 1e-8, 0.1, 0.99);
        let d = n_user_drift(&t, &p).unwrap();
        assert!((empty_probability_two_user(&d).unwrap() - empty_probability(&d).unwrap()).abs() < 1e-15);
        assert!((mean_arrival_rate_two_user(&d).unwrap() - mean_arrival_rate(&d).unwrap()).abs() < 1e-15);
        assert!((mean_queue_length_two_user(&d).unwrap() - mean_queue_length(&d).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn alternating_chain() {
        let d = alternating();
        assert_eq!(empty_probability(&d).unwrap(), 0.5);
        assert_eq!(mean_queue_length(&d).unwrap(), 0.5);
        let s = dtmc_steady_state(&d, 100).unwrap();
        assert_eq!(s.p_empty, 0.5);
        assert_eq!(s.mean, 0.5);
    }

    #[test]
    fn dtmc_agrees_with_closed_form() {
        let (p, t) = setup(10, 0.6, 1e-8, 0.1, 0.99);
        let (d, m) = analyze(&p, &t).unwrap();
        assert!(m.stable);
        let s = dtmc_steady_state(&d, DTMC_DEFAULT_LEVELS).unwrap();
        assert!((s.p_empty - m.p_empty).abs() < 1e-8);
        assert!((s.mean - m.q_bar).abs() < 1e-8);
        assert!(s.tail_mass < DTMC_TAIL_TOLERANCE);
    }

    #[test]
    fn short_truncation_is_reported() {
        let (p, t) = setup(10, 0.6, 1e-8, 0.1, 0.99);
        let (d, _) = analyze(&p, &t).unwrap();
        assert!(matches!(dtmc_steady_state(&d, 3), Err(Error::Truncation { .. })));
        assert!(dtmc_steady_state_auto(&d, 1 << 20).is_ok());
    }

    #[test]
    fn q0_min_edges() {
        let (p, t) = setup(5, 0.6, 1e-8, 0.0, 0.9);
        assert_eq!(q0_min(&p, &t).unwrap(), Q0Min(0.0));
        let (p, t) = setup(20, 0.2, 1e-10, 0.1, 0.95);
        let q = q0_min(&p, &t).unwrap();
        assert!(!q.is_stabilizable());
        let (_, m) = analyze(&p, &t).unwrap();
        assert!(!m.stable);
        assert!(m.q_bar.is_infinite());
        assert_eq!(m.lambda, m.lambda1);
    }

    #[test]
    fn stability_matches_threshold() {
        let (p, t) = setup(8, 0.6, 1e-10, 0.1, 0.5);
        let q = q0_min(&p, &t).unwrap();
        for q0 in [0.05, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let p = p.with_q0(q0);
            let (_, m) = analyze(&p, &t).unwrap();
            assert_eq!(m.stable, q.stabilizes(q0), "q0 = {q0}, threshold {q:?}");
        }
    }
}
