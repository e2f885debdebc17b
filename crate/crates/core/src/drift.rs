//! Per-slot laws of the relay queue: arrivals given an empty or nonempty
//! queue, and the signed change of a nonempty queue.
//!
//! Three routes produce a [`DriftDistribution`]:
//!
//! * [`two_user_drift`], the term-by-term two-user expressions over the
//!   per-set success table;
//! * [`n_user_drift`], the binomial sums of the symmetric case;
//! * [`enumerate_drift`], an exhaustive sum over transmit sets and reception
//!   outcomes straight from the capture formula. It shares no code with the
//!   closed forms and serves as their oracle.
//!
//! Conditioned on the transmit set, receptions are independent across links.

use crate::error::{Error, Result};
use crate::math::{bernoulli_pattern, binomial};
use crate::params::{NetworkParams, Node, Receiver};
use crate::phy::{success_probability, SuccessTable, TransmitSet};

/// Queue conditioning for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueState {
    Empty,
    Nonempty,
}

/// Per-slot queue change laws.
///
/// Vectors have length `n + 1` and are indexed by the count `k`. Index 0
/// holds the complementary mass: no arrival for `r0`/`r1`/`p0`, and zero net
/// change for `p1`, so each vector (plus `p_minus1` for `p1`) sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDistribution {
    /// `k` arrivals given an empty queue.
    pub r0: Vec<f64>,
    /// `k` arrivals given a nonempty queue.
    pub r1: Vec<f64>,
    /// Queue grows by `k` given empty. Equal to `r0`.
    pub p0: Vec<f64>,
    /// Queue grows by `k` given nonempty; `p1[0]` is zero net change.
    pub p1: Vec<f64>,
    /// Queue shrinks by one given nonempty.
    pub p_minus1: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl DriftDistribution {
    pub fn n(&self) -> usize {
        self.r0.len() - 1
    }

    pub fn p1_zero(&self) -> f64 {
        self.p1[0]
    }

    /// `p_{-1} - sum_k k p_k`: mean per-slot decrease of a nonempty queue,
    /// which equals `mu - lambda1`. Positive iff the queue is stable.
    pub fn net_service(&self) -> f64 {
        self.p_minus1 - weighted(&self.p1, |k| k as f64)
    }

    /// Builds a distribution from arrival and change laws; the zero entries
    /// are filled in as complements and the means derived.
    pub fn from_parts(r0: Vec<f64>, r1: Vec<f64>, p1: Vec<f64>, p_minus1: f64) -> Self {
        let mut d = Self {
            p0: r0.clone(),
            r0,
            r1,
            p1,
            p_minus1,
            lambda0: 0.0,
            lambda1: 0.0,
        };
        d.r0[0] = 1.0 - d.r0[1..].iter().sum::<f64>();
        d.p0[0] = d.r0[0];
        d.r1[0] = 1.0 - d.r1[1..].iter().sum::<f64>();
        d.p1[0] = 1.0 - p_minus1 - d.p1[1..].iter().sum::<f64>();
        d.lambda0 = weighted(&d.r0, |k| k as f64);
        d.lambda1 = weighted(&d.r1, |k| k as f64);
        d
    }
}

/// `sum_{k >= 1} f(k) v[k]`.
pub(crate) fn weighted(v: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    v.iter().enumerate().skip(1).map(|(k, x)| f(k) * x).sum()
}

/// Coefficients of the stability condition `lambda1 < mu` written as
/// affine functions of `q0`: `lambda1 = (1 - q0) sum k A_k + q0 sum k B_k`
/// and `mu = q0 A`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCoefficients {
    /// `A_k`: `k` arrivals when the relay is silent, index `0..=n`.
    pub a_k: Vec<f64>,
    /// `B_k`: `k` arrivals when the relay transmits.
    pub b_k: Vec<f64>,
    /// Relay to destination success averaged over user activity.
    pub a: f64,
}

impl StabilityCoefficients {
    pub fn sum_k_a(&self) -> f64 {
        weighted(&self.a_k, |k| k as f64)
    }

    pub fn sum_k_b(&self) -> f64 {
        weighted(&self.b_k, |k| k as f64)
    }
}

fn require_two_users(params: &NetworkParams) -> Result<()> {
    if params.n() != 2 {
        return Err(Error::WrongModel(format!(
            "two-user expressions need n = 2, got n = {}",
            params.n()
        )));
    }
    Ok(())
}

/// Two-user drift laws, term by term.
pub fn two_user_drift(table: &SuccessTable, params: &NetworkParams) -> Result<DriftDistribution> {
    require_two_users(params)?;
    let t = table.links()?;
    let (q0, q1, q2) = (params.q0, params.users[0].q, params.users[1].q);
    let (r, u1, u2) = (Node::Relay, Node::User(0), Node::User(1));
    let d = |tx, set: &[Node]| t.p(tx, Receiver::Destination, set);
    let o = |tx, set: &[Node]| t.p(tx, Receiver::Relay, set);

    // Relay silent.
    let (d1_1, o1_1) = (d(u1, &[u1]), o(u1, &[u1]));
    let (d2_2, o2_2) = (d(u2, &[u2]), o(u2, &[u2]));
    let (d1_12, o1_12) = (d(u1, &[u1, u2]), o(u1, &[u1, u2]));
    let (d2_12, o2_12) = (d(u2, &[u1, u2]), o(u2, &[u1, u2]));
    // Relay transmitting.
    let (d1_01, o1_01) = (d(u1, &[r, u1]), o(u1, &[r, u1]));
    let (d2_02, o2_02) = (d(u2, &[r, u2]), o(u2, &[r, u2]));
    let (d1_012, o1_012) = (d(u1, &[r, u1, u2]), o(u1, &[r, u1, u2]));
    let (d2_012, o2_012) = (d(u2, &[r, u1, u2]), o(u2, &[r, u1, u2]));
    let d0_0 = d(r, &[r]);
    let d0_01 = d(r, &[r, u1]);
    let d0_02 = d(r, &[r, u2]);
    let d0_012 = d(r, &[r, u1, u2]);

    let r1_0 = q1 * (1.0 - q2) * (1.0 - d1_1) * o1_1
        + q2 * (1.0 - q1) * (1.0 - d2_2) * o2_2
        + q1 * q2 * (1.0 - d1_12) * o1_12 * d2_12
        + q1 * q2 * (1.0 - d2_12) * o2_12 * d1_12
        + q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * (1.0 - o2_12)
        + q1 * q2 * (1.0 - d2_12) * o2_12 * (1.0 - d1_12) * (1.0 - o1_12);
    let r2_0 = q1 * q2 * (1.0 - d1_12) * (1.0 - d2_12) * o1_12 * o2_12;

    let r1_1 = (1.0 - q0) * q1 * (1.0 - q2) * (1.0 - d1_1) * o1_1
        + q0 * q1 * (1.0 - q2) * (1.0 - d1_01) * o1_01
        + (1.0 - q0) * q2 * (1.0 - q1) * (1.0 - d2_2) * o2_2
        + q0 * q2 * (1.0 - q1) * (1.0 - d2_02) * o2_02
        + (1.0 - q0) * q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * (1.0 - o2_12)
        + q0 * q1 * q2 * (1.0 - d1_012) * o1_012 * (1.0 - d2_012) * (1.0 - o2_012)
        + (1.0 - q0) * q1 * q2 * (1.0 - d1_12) * o1_12 * d2_12
        + q0 * q1 * q2 * (1.0 - d1_012) * o1_012 * d2_012
        + (1.0 - q0) * q1 * q2 * (1.0 - d2_12) * o2_12 * (1.0 - d1_12) * (1.0 - o1_12)
        + q0 * q1 * q2 * (1.0 - d2_012) * o2_012 * (1.0 - d1_012) * (1.0 - o1_012)
        + (1.0 - q0) * q1 * q2 * (1.0 - d2_12) * o2_12 * d1_12
        + q0 * q1 * q2 * (1.0 - d2_012) * o2_012 * d1_012;
    let r2_1 = (1.0 - q0) * q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * o2_12
        + q0 * q1 * q2 * (1.0 - d1_012) * o1_012 * (1.0 - d2_012) * o2_012;

    let p_minus1 = q0 * (1.0 - q1) * (1.0 - q2) * d0_0
        + q0 * (1.0 - q1) * q2 * d0_02 * d2_02
        + q0 * (1.0 - q1) * q2 * d0_02 * (1.0 - d2_02) * (1.0 - o2_02)
        + q0 * q1 * (1.0 - q2) * d0_01 * d1_01
        + q0 * q1 * (1.0 - q2) * d0_01 * (1.0 - d1_01) * (1.0 - o1_01)
        + q0 * q1 * q2 * d0_012 * d1_012 * d2_012
        + q0 * q1 * q2 * d0_012 * (1.0 - d1_012) * (1.0 - o1_012) * (1.0 - d2_012) * (1.0 - o2_012)
        + q0 * q1 * q2 * d0_012 * d1_012 * (1.0 - d2_012) * (1.0 - o2_012)
        + q0 * q1 * q2 * d0_012 * (1.0 - d1_012) * (1.0 - o1_012) * d2_012;

    let p1_1 = (1.0 - q0) * q1 * (1.0 - q2) * (1.0 - d1_1) * o1_1
        + (1.0 - q0) * q1 * q2 * (1.0 - d1_12) * o1_12 * d2_12
        + (1.0 - q0) * q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * (1.0 - o2_12)
        + (1.0 - q0) * (1.0 - q1) * q2 * (1.0 - d2_2) * o2_2
        + (1.0 - q0) * q1 * q2 * (1.0 - d2_12) * o2_12 * d1_12
        + (1.0 - q0) * q1 * q2 * (1.0 - d2_12) * o2_12 * (1.0 - d1_12) * (1.0 - o1_12)
        + q0 * q1 * q2 * d0_012 * (1.0 - d1_012) * o1_012 * (1.0 - d2_012) * o2_012
        + q0 * q1 * (1.0 - q2) * (1.0 - d0_01) * (1.0 - d1_01) * o1_01
        + q0 * q1 * q2 * (1.0 - d0_012) * (1.0 - d1_012) * o1_012 * d2_012
        + q0 * q1 * q2 * (1.0 - d0_012) * (1.0 - d1_012) * o1_012 * (1.0 - d2_012) * (1.0 - o2_012)
        + q0 * q2 * (1.0 - q1) * (1.0 - d0_02) * (1.0 - d2_02) * o2_02
        + q0 * q1 * q2 * (1.0 - d0_012) * (1.0 - d2_012) * o2_012 * d1_012
        + q0 * q1 * q2 * (1.0 - d0_012) * (1.0 - d2_012) * o2_012 * (1.0 - d1_012) * (1.0 - o1_012);
    let p2_1 = (1.0 - q0) * q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * o2_12
        + q0 * q1 * q2 * (1.0 - d0_012) * (1.0 - d1_012) * o1_012 * (1.0 - d2_012) * o2_012;

    Ok(DriftDistribution::from_parts(
        vec![0.0, r1_0, r2_0],
        vec![0.0, r1_1, r2_1],
        vec![0.0, p1_1, p2_1],
        p_minus1,
    ))
}

/// Two-user stability coefficients `A_1, A_2, B_1, B_2, A`.
pub fn two_user_coefficients(table: &SuccessTable, params: &NetworkParams) -> Result<StabilityCoefficients> {
    require_two_users(params)?;
    let t = table.links()?;
    let (q1, q2) = (params.users[0].q, params.users[1].q);
    let (r, u1, u2) = (Node::Relay, Node::User(0), Node::User(1));
    let d = |tx, set: &[Node]| t.p(tx, Receiver::Destination, set);
    let o = |tx, set: &[Node]| t.p(tx, Receiver::Relay, set);

    // `relay` selects the transmit sets with or without the relay.
    let arrivals = |relay: bool| -> (f64, f64) {
        let with = |set: &[Node]| -> Vec<Node> {
            let mut v = set.to_vec();
            if relay {
                v.insert(0, r);
            }
            v
        };
        let (s1, s2, s12) = (with(&[u1]), with(&[u2]), with(&[u1, u2]));
        let (d1_1, o1_1) = (d(u1, &s1), o(u1, &s1));
        let (d2_2, o2_2) = (d(u2, &s2), o(u2, &s2));
        let (d1_12, o1_12) = (d(u1, &s12), o(u1, &s12));
        let (d2_12, o2_12) = (d(u2, &s12), o(u2, &s12));
        let k1 = q1 * (1.0 - q2) * (1.0 - d1_1) * o1_1
            + q2 * (1.0 - q1) * (1.0 - d2_2) * o2_2
            + q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * (1.0 - o2_12)
            + q1 * q2 * (1.0 - d1_12) * o1_12 * d2_12
            + q1 * q2 * (1.0 - d2_12) * o2_12 * (1.0 - d1_12) * (1.0 - o1_12)
            + q1 * q2 * (1.0 - d2_12) * o2_12 * d1_12;
        let k2 = q1 * q2 * (1.0 - d1_12) * o1_12 * (1.0 - d2_12) * o2_12;
        (k1, k2)
    };
    let (a1, a2) = arrivals(false);
    let (b1, b2) = arrivals(true);
    let a = (1.0 - q1) * (1.0 - q2) * d(r, &[r])
        + q1 * (1.0 - q2) * d(r, &[r, u1])
        + q2 * (1.0 - q1) * d(r, &[r, u2])
        + q1 * q2 * d(r, &[r, u1, u2]);
    Ok(StabilityCoefficients {
        a_k: vec![1.0 - a1 - a2, a1, a2],
        b_k: vec![1.0 - b1 - b2, b1, b2],
        a,
    })
}

fn symmetric_q(params: &NetworkParams) -> Result<f64> {
    params
        .common_user()
        .map(|u| u.q)
        .ok_or_else(|| Error::WrongModel("n-user expressions need identical users".into()))
}

/// `sum_{i=k}^{n} C(n,i) C(i,k) q^i (1-q)^(n-i) x_i^k (1 - x_i)^(i-k)` with
/// `x_i = P_0 (1 - P_d)`, optionally weighted per `i`.
fn arrival_sum(n: usize, q: f64, k: usize, lo: usize, term: impl Fn(usize) -> (f64, f64, f64)) -> f64 {
    (lo.max(k)..=n)
        .map(|i| {
            let (p0, pd, w) = term(i);
            binomial(n, i)
                * binomial(i, k)
                * bernoulli_pattern(q, n, i)
                * w
                * p0.powi(k as i32)
                * (1.0 - pd).powi(k as i32)
                * (1.0 - p0 * (1.0 - pd)).powi((i - k) as i32)
        })
        .sum()
}

/// Symmetric `n`-user drift laws from the binomial sums.
pub fn n_user_drift(table: &SuccessTable, params: &NetworkParams) -> Result<DriftDistribution> {
    let s = table.symmetric()?;
    let q = symmetric_q(params)?;
    let (n, q0) = (params.n(), params.q0);
    let silent = |i: usize| (s.p0(i, false), s.pd(i, false), 1.0);
    let busy = |i: usize| (s.p0(i, true), s.pd(i, true), 1.0);
    let busy_fail = |i: usize| (s.p0(i, true), s.pd(i, true), 1.0 - s.p0d(i));
    let busy_ok = |i: usize| (s.p0(i, true), s.pd(i, true), s.p0d(i));

    let mut r0 = vec![0.0; n + 1];
    let mut r1 = vec![0.0; n + 1];
    let mut p1 = vec![0.0; n + 1];
    for k in 1..=n {
        let a_k = arrival_sum(n, q, k, k, silent);
        r0[k] = a_k;
        r1[k] = (1.0 - q0) * a_k + q0 * arrival_sum(n, q, k, k, busy);
        p1[k] = (1.0 - q0) * a_k
            + q0 * arrival_sum(n, q, k, k, busy_fail)
            + if k < n {
                q0 * arrival_sum(n, q, k + 1, k + 1, busy_ok)
            } else {
                0.0
            };
    }
    let p_minus1 = q0
        * (0..=n)
            .map(|k| {
                let x = if k == 0 {
                    1.0
                } else {
                    (1.0 - s.p0(k, true) * (1.0 - s.pd(k, true))).powi(k as i32)
                };
                binomial(n, k) * bernoulli_pattern(q, n, k) * s.p0d(k) * x
            })
            .sum::<f64>();
    Ok(DriftDistribution::from_parts(r0, r1, p1, p_minus1))
}

/// Symmetric stability coefficients `A_k, B_k, A`.
pub fn n_user_coefficients(table: &SuccessTable, params: &NetworkParams) -> Result<StabilityCoefficients> {
    let s = table.symmetric()?;
    let q = symmetric_q(params)?;
    let n = params.n();
    let mut a_k = vec![0.0; n + 1];
    let mut b_k = vec![0.0; n + 1];
    for k in 1..=n {
        a_k[k] = arrival_sum(n, q, k, k, |i| (s.p0(i, false), s.pd(i, false), 1.0));
        b_k[k] = arrival_sum(n, q, k, k, |i| (s.p0(i, true), s.pd(i, true), 1.0));
    }
    a_k[0] = 1.0 - a_k[1..].iter().sum::<f64>();
    b_k[0] = 1.0 - b_k[1..].iter().sum::<f64>();
    let a = (0..=n)
        .map(|k| binomial(n, k) * bernoulli_pattern(q, n, k) * s.p0d(k))
        .sum();
    Ok(StabilityCoefficients { a_k, b_k, a })
}

/// Drift from whichever closed form covers `params`: the symmetric sums
/// when users are identical, the two-user expressions otherwise.
pub fn closed_form_drift(table: &SuccessTable, params: &NetworkParams) -> Result<DriftDistribution> {
    if params.is_symmetric() {
        n_user_drift(table, params)
    } else if params.n() == 2 {
        two_user_drift(table, params)
    } else {
        Err(Error::WrongModel(
            "closed forms cover identical users or two users".into(),
        ))
    }
}

pub fn closed_form_coefficients(table: &SuccessTable, params: &NetworkParams) -> Result<StabilityCoefficients> {
    if params.is_symmetric() {
        n_user_coefficients(table, params)
    } else if params.n() == 2 {
        two_user_coefficients(table, params)
    } else {
        Err(Error::WrongModel(
            "closed forms cover identical users or two users".into(),
        ))
    }
}

/// Largest population [`enumerate_drift`] accepts.
pub const ENUMERATION_MAX_USERS: usize = 12;

/// Law of one conditioned slot from exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDrift {
    /// `arrivals[k]`: probability of exactly `k` relay arrivals.
    pub arrivals: Vec<f64>,
    /// `change[k + 1]`: probability the queue changes by `k`, `k = -1..=n`.
    pub change: Vec<f64>,
}

/// Exact drift law for one queue condition, by summing over every transmit
/// set and every joint reception outcome.
///
/// For each set, user `i` contributes one of three outcomes: delivered to
/// the destination, missed by the destination but captured by the relay (an
/// arrival), or lost at both. Outcomes are independent across users given
/// the set, so the arrival count is accumulated by convolution. When the
/// relay transmits, its head-of-line packet departs with its own capture
/// probability at the destination.
pub fn enumerate_conditional(params: &NetworkParams, state: QueueState) -> Result<ConditionalDrift> {
    params.validate()?;
    let n = params.n();
    if n > ENUMERATION_MAX_USERS {
        return Err(Error::ResourceBound {
            n,
            limit: ENUMERATION_MAX_USERS,
        });
    }
    let mut arrivals = vec![0.0; n + 1];
    let mut change = vec![0.0; n + 2];
    let relay_options: &[bool] = match state {
        QueueState::Empty => &[false],
        QueueState::Nonempty => &[false, true],
    };
    for &relay_tx in relay_options {
        let relay_weight = match (state, relay_tx) {
            (QueueState::Empty, _) => 1.0,
            (QueueState::Nonempty, true) => params.q0,
            (QueueState::Nonempty, false) => 1.0 - params.q0,
        };
        for users in 0u64..(1 << n) {
            let active: Vec<usize> = (0..n).filter(|i| users >> i & 1 == 1).collect();
            let mut weight = relay_weight;
            for (i, u) in params.users.iter().enumerate() {
                weight *= if users >> i & 1 == 1 { u.q } else { 1.0 - u.q };
            }
            if weight == 0.0 {
                continue;
            }
            let set = TransmitSet::new(relay_tx, active.iter().copied());

            // dist[k]: probability of k arrivals among the users seen so far.
            let mut dist = vec![0.0; active.len() + 1];
            dist[0] = 1.0;
            for (seen, &i) in active.iter().enumerate() {
                let delivered = success_probability(Node::User(i), Receiver::Destination, &set, params)?;
                let captured = success_probability(Node::User(i), Receiver::Relay, &set, params)?;
                let outcomes = [
                    (delivered * captured, false),
                    (delivered * (1.0 - captured), false),
                    ((1.0 - delivered) * captured, true),
                    ((1.0 - delivered) * (1.0 - captured), false),
                ];
                let mut next = vec![0.0; active.len() + 1];
                for k in 0..=seen {
                    for &(p, arrives) in &outcomes {
                        next[k + arrives as usize] += dist[k] * p;
                    }
                }
                dist = next;
            }

            let departs = if relay_tx {
                success_probability(Node::Relay, Receiver::Destination, &set, params)?
            } else {
                0.0
            };
            for (k, &pk) in dist.iter().enumerate() {
                let mass = weight * pk;
                arrivals[k] += mass;
                match state {
                    QueueState::Empty => change[k + 1] += mass,
                    QueueState::Nonempty => {
                        change[k] += mass * departs;
                        change[k + 1] += mass * (1.0 - departs);
                    }
                }
            }
        }
    }
    Ok(ConditionalDrift { arrivals, change })
}

/// Exact drift laws for both queue conditions.
pub fn enumerate_drift(params: &NetworkParams) -> Result<DriftDistribution> {
    let empty = enumerate_conditional(params, QueueState::Empty)?;
    let busy = enumerate_conditional(params, QueueState::Nonempty)?;
    let n = params.n();
    let r0 = empty.arrivals;
    let r1 = busy.arrivals;
    let p1: Vec<f64> = (0..=n).map(|k| busy.change[k + 1]).collect();
    let lambda0 = weighted(&r0, |k| k as f64);
    let lambda1 = weighted(&r1, |k| k as f64);
    Ok(DriftDistribution {
        p0: r0.clone(),
        r0,
        r1,
        p1,
        p_minus1: busy.change[0],
        lambda0,
        lambda1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SymmetricParams;
    use crate::phy::{build_success_table, TableMode};

    fn reference(n: usize, gamma: f64, g: f64, q: f64, q0: f64) -> NetworkParams {
        SymmetricParams::reference(n, gamma, g, q, q0).to_network()
    }

    fn table(p: &NetworkParams) -> SuccessTable {
        build_success_table(p, TableMode::Derived).unwrap()
    }

    fn assert_close(a: &DriftDistribution, b: &DriftDistribution, tol: f64) {
        let pairs = [(&a.r0, &b.r0), (&a.r1, &b.r1), (&a.p0, &b.p0), (&a.p1, &b.p1)];
        for (x, y) in pairs {
            assert_eq!(x.len(), y.len());
            for (u, v) in x.iter().zip(y) {
                assert!((u - v).abs() <= tol, "{x:?} vs {y:?}");
            }
        }
        assert!((a.p_minus1 - b.p_minus1).abs() <= tol);
        assert!((a.lambda0 - b.lambda0).abs() <= tol);
        assert!((a.lambda1 - b.lambda1).abs() <= tol);
    }

    #[test]
    fn two_user_silent_users() {
        let mut p = reference(2, 0.6, 1e-8, 0.0, 0.7);
        p.users[1].r_d = 90.0;
        let t = table(&p);
        let d = two_user_drift(&t, &p).unwrap();
        assert_eq!(d.lambda0, 0.0);
        assert_eq!(d.lambda1, 0.0);
        assert_eq!(&d.r0[1..], &[0.0, 0.0]);
        let expected = 0.7 * t.links().unwrap().p(Node::Relay, Receiver::Destination, &[Node::Relay]);
        assert!((d.p_minus1 - expected).abs() < 1e-15);
    }

    #[test]
    fn two_user_without_relay_transmissions() {
        let mut p = reference(2, 0.6, 1e-8, 0.3, 0.0);
        p.users[0].q = 0.45;
        let d = two_user_drift(&table(&p), &p).unwrap();
        assert_eq!(d.p_minus1, 0.0);
        assert_eq!(d.r0, d.r1);
    }

    #[test]
    fn two_user_matches_enumeration_reference() {
        let p = reference(2, 0.6, 1e-8, 0.1, 0.99);
        let closed = two_user_drift(&table(&p), &p).unwrap();
        assert_close(&closed, &enumerate_drift(&p).unwrap(), 1e-12);
    }

    #[test]
    fn two_user_rejects_other_sizes() {
        let p = reference(3, 0.6, 1e-8, 0.1, 0.99);
        assert!(matches!(two_user_drift(&table(&p), &p), Err(Error::WrongModel(_))));
    }

    #[test]
    fn n_user_equals_two_user_when_n_is_two() {
        let p = reference(2, 1.2, 1e-10, 0.3, 0.9);
        let t = table(&p);
        assert_close(&n_user_drift(&t, &p).unwrap(), &two_user_drift(&t, &p).unwrap(), 1e-12);
        let a = n_user_coefficients(&t, &p).unwrap();
        let b = two_user_coefficients(&t, &p).unwrap();
        for (x, y) in a.a_k.iter().zip(&b.a_k).chain(a.b_k.iter().zip(&b.b_k)) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.a - b.a).abs() < 1e-12);
    }

    #[test]
    fn n_user_with_silent_users() {
        let p = reference(6, 0.6, 1e-8, 0.0, 0.8);
        let t = table(&p);
        let d = n_user_drift(&t, &p).unwrap();
        assert!(d.r0[1..].iter().chain(&d.r1[1..]).all(|&x| x == 0.0));
        assert!((d.p_minus1 - 0.8 * t.symmetric().unwrap().p0d(0)).abs() < 1e-15);
    }

    #[test]
    fn self_interference_lowers_busy_arrivals() {
        let clean = reference(5, 0.6, 0.0, 0.2, 0.9);
        let dirty = reference(5, 0.6, 1.0, 0.2, 0.9);
        let a = n_user_drift(&table(&clean), &clean).unwrap();
        let b = n_user_drift(&table(&dirty), &dirty).unwrap();
        assert!(a.lambda1 >= b.lambda1);
        assert_eq!(a.lambda0, b.lambda0);
    }

    #[test]
    fn n_user_matches_enumeration_at_five() {
        let p = reference(5, 0.6, 1e-8, 0.1, 0.99);
        assert_close(
            &n_user_drift(&table(&p), &p).unwrap(),
            &enumerate_drift(&p).unwrap(),
            1e-12,
        );
    }

    #[test]
    fn enumeration_single_forced_user() {
        let p = reference(1, 0.6, 1e-8, 1.0, 0.0);
        let d = enumerate_drift(&p).unwrap();
        let s = table(&p);
        let s = s.symmetric().unwrap();
        let expected = (1.0 - s.pd(1, false)) * s.p0(1, false);
        assert!((d.r0[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn enumeration_size_limit() {
        let p = reference(ENUMERATION_MAX_USERS + 1, 0.6, 1e-8, 0.1, 0.9);
        assert!(matches!(enumerate_drift(&p), Err(Error::ResourceBound { .. })));
    }

    #[test]
    fn distributions_are_complete() {
        let p = reference(7, 0.2, 1e-10, 0.15, 0.95);
        for d in [n_user_drift(&table(&p), &p).unwrap(), enumerate_drift(&p).unwrap()] {
            assert!((d.r0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((d.r1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((d.p_minus1 + d.p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(d.p0, d.r0);
        }
    }

    #[test]
    fn net_service_is_service_minus_busy_arrivals() {
        let p = reference(4, 0.6, 1e-8, 0.2, 0.9);
        let t = table(&p);
        let d = n_user_drift(&t, &p).unwrap();
        let c = n_user_coefficients(&t, &p).unwrap();
        let mu = p.q0 * c.a;
        assert!((d.net_service() - (mu - d.lambda1)).abs() < 1e-14);
    }
}
