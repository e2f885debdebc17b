//! Slot-level simulation of the network: saturated users, a full-duplex
//! relay with a FIFO queue, block Rayleigh fading and SINR capture.
//!
//! A run is sequential and fully determined by its seed. Statistics are
//! collected after a warmup and reported as batch-means estimates.

mod probe;
mod stats;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::params::{NetworkParams, Node, Receiver};
use crate::phy::{ChannelModel, TransmitSet};

pub use probe::{stability_probe, StabilityVerdict, PROBE_MIN_SLOTS};
pub use stats::{proportion, ratio_estimate, slope, Estimate};

/// How reception outcomes are drawn each slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    /// Exponential received powers per link and an explicit SINR test.
    Sinr,
    /// Bernoulli outcomes with the capture-formula probabilities, drawn
    /// independently per link given the transmit set.
    #[default]
    Probability,
}

impl SamplingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingMode::Sinr => "sinr",
            SamplingMode::Probability => "probability",
        }
    }
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinr" | "sinr-sampling" => Ok(SamplingMode::Sinr),
            "probability" | "probability-sampling" => Ok(SamplingMode::Probability),
            other => Err(Error::domain("mode", format!("unknown sampling mode `{other}`"))),
        }
    }
}

pub const DEFAULT_BATCHES: usize = 50;
pub const MIN_BATCHES: usize = 30;
const TRAJECTORY_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub slots: u64,
    /// Initial slots excluded from every statistic.
    pub warmup: u64,
    pub seed: u64,
    pub mode: SamplingMode,
    /// Record the queue trajectory needed by [`stability_probe`].
    pub stability_probe: bool,
    pub batches: usize,
}

/// 10% of the run, at least 10^4 slots, and never more than half the run.
pub fn default_warmup(slots: u64) -> u64 {
    (slots / 10).max(10_000).min(slots / 2)
}

impl SimConfig {
    pub fn new(slots: u64, seed: u64) -> Self {
        Self {
            slots,
            warmup: default_warmup(slots),
            seed,
            mode: SamplingMode::default(),
            stability_probe: true,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots <= self.warmup {
            return Err(Error::domain(
                "slots",
                format!("{} must exceed warmup {}", self.slots, self.warmup),
            ));
        }
        if self.batches < MIN_BATCHES {
            return Err(Error::domain(
                "batches",
                format!("{} is below the minimum of {MIN_BATCHES}", self.batches),
            ));
        }
        Ok(())
    }
}

/// Empirical per-user rates and delay.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSim {
    pub t_direct: Estimate,
    /// Relay deliveries of this user's packets per slot.
    pub t_relayed: Estimate,
    pub t_total: Estimate,
    /// Arrivals from this user into the relay queue per slot.
    pub relay_arrival_rate: Estimate,
    /// Head-of-line to delivery, slots.
    pub delay: Estimate,
    pub attempted: u64,
    pub delivered_direct: u64,
    pub delivered_relay: u64,
    pub relay_arrivals: u64,
}

impl UserSim {
    pub fn delivered(&self) -> u64 {
        self.delivered_direct + self.delivered_relay
    }
}

/// Queue-length path summary.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    /// Largest length seen in the measured window, end state included.
    pub max: u64,
    pub final_len: u64,
    /// Least-squares growth in packets per slot over the measured window.
    pub slope: f64,
    /// Mean queue length over equal consecutive segments of the window.
    pub segments: Vec<f64>,
    pub empty_fraction_first_half: f64,
    pub empty_fraction_second_half: f64,
}

/// Whole-run counters, warmup included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub attempted: u64,
    pub delivered_direct: u64,
    pub delivered_relay: u64,
    pub relay_arrivals: u64,
    pub relay_departures: u64,
    pub relay_attempts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config: SimConfig,
    pub measured_slots: u64,
    pub lambda0: Estimate,
    pub lambda1: Estimate,
    pub lambda: Estimate,
    pub mu: Estimate,
    pub p_empty: Estimate,
    pub q_bar: Estimate,
    pub users: Vec<UserSim>,
    /// Per-user means across all users; the natural estimator for
    /// identical users.
    pub user_mean: UserSim,
    pub t_aggr: Estimate,
    /// Fraction of measured deliveries that went through the relay.
    pub relayed_fraction: Estimate,
    pub trace: QueueTrace,
    /// Present when the stability probe was requested.
    pub trajectory: Option<Vec<f64>>,
    pub counts: Counts,
}

#[derive(Debug, Clone, Copy, Default)]
struct Packet {
    user: u32,
    hol_start: u64,
}

/// One slot's reception outcomes, indexed like the transmitting users.
#[derive(Debug, Default)]
struct Outcomes {
    dest: Vec<bool>,
    relay: Vec<bool>,
    relay_dest: bool,
}

/// Draws reception outcomes for one transmit set.
struct Sampler<'a> {
    channel: &'a ChannelModel,
    mode: SamplingMode,
    dest_power: Vec<f64>,
    relay_power: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(channel: &'a ChannelModel, mode: SamplingMode) -> Self {
        Self {
            channel,
            mode,
            dest_power: Vec::new(),
            relay_power: Vec::new(),
        }
    }

    fn draw<R: Rng>(&mut self, rng: &mut R, relay_tx: bool, users: &[usize], out: &mut Outcomes) {
        out.dest.clear();
        out.relay.clear();
        match self.mode {
            SamplingMode::Probability => {
                let ch = self.channel;
                for &i in users {
                    let d = rng.random::<f64>() < ch.user_success(i, Receiver::Destination, relay_tx, users);
                    let r = !d && rng.random::<f64>() < ch.user_success(i, Receiver::Relay, relay_tx, users);
                    out.dest.push(d);
                    out.relay.push(r);
                }
                out.relay_dest = relay_tx && rng.random::<f64>() < ch.relay_success(users);
            }
            SamplingMode::Sinr => self.draw_sinr(rng, relay_tx, users, out),
        }
    }

    fn draw_sinr<R: Rng>(&mut self, rng: &mut R, relay_tx: bool, users: &[usize], out: &mut Outcomes) {
        let ch = self.channel;
        self.dest_power.clear();
        self.relay_power.clear();
        for &i in users {
            let e: f64 = rng.sample(Exp1);
            self.dest_power
                .push(e * ch.budget(Node::User(i), Receiver::Destination).mean_power());
        }
        for &i in users {
            let e: f64 = rng.sample(Exp1);
            self.relay_power
                .push(e * ch.budget(Node::User(i), Receiver::Relay).mean_power());
        }
        let relay_link = ch.budget(Node::Relay, Receiver::Destination);
        let relay_power = if relay_tx {
            rng.sample::<f64, _>(Exp1) * relay_link.mean_power()
        } else {
            0.0
        };
        let si_draw: f64 = if relay_tx { rng.sample(Exp1) } else { 0.0 };

        let dest_total: f64 = self.dest_power.iter().sum::<f64>() + relay_power;
        let relay_total: f64 = self.relay_power.iter().sum();
        for (slot, &i) in users.iter().enumerate() {
            let b = ch.budget(Node::User(i), Receiver::Destination);
            let s = self.dest_power[slot];
            out.dest.push(s >= b.gamma * (b.eta + dest_total - s));

            let b = ch.budget(Node::User(i), Receiver::Relay);
            let s = self.relay_power[slot];
            let si = si_draw * ch.residual_self_interference(i);
            out.relay.push(s >= b.gamma * (b.eta + relay_total - s + si));
        }
        out.relay_dest = relay_tx && relay_power >= relay_link.gamma * (relay_link.eta + dest_total - relay_power);
    }
}

/// Monte Carlo estimate of one capture probability.
pub fn estimate_success(
    params: &NetworkParams,
    tx: Node,
    rx: Receiver,
    set: &TransmitSet,
    samples: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<Estimate> {
    let channel = ChannelModel::new(params)?;
    channel.success(tx, rx, set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = Sampler::new(&channel, mode);
    let mut out = Outcomes::default();
    let users: Vec<usize> = set.users.clone();
    let mut hits = 0u64;
    // Probability mode only draws the relay outcome after a failed
    // destination attempt, so the user-to-relay estimate is made from a
    // dedicated draw.
    for _ in 0..samples {
        let hit = match (tx, rx, mode) {
            (Node::User(i), Receiver::Relay, SamplingMode::Probability) => {
                rng.random::<f64>() < channel.user_success(i, rx, set.relay, &users)
            }
            _ => {
                sampler.draw(&mut rng, set.relay, &users, &mut out);
                match tx {
                    Node::Relay => out.relay_dest,
                    Node::User(i) => {
                        let slot = users.iter().position(|&u| u == i).expect("checked above");
                        match rx {
                            Receiver::Destination => out.dest[slot],
                            Receiver::Relay => out.relay[slot],
                        }
                    }
                }
            }
        };
        hits += hit as u64;
    }
    Ok(proportion(hits, samples))
}

#[derive(Debug, Clone, Default)]
struct Batch {
    slots: f64,
    empty: f64,
    nonempty: f64,
    arrivals_empty: f64,
    arrivals_nonempty: f64,
    departures: f64,
    queue_sum: f64,
    direct: Vec<f64>,
    relayed: Vec<f64>,
    arrivals: Vec<f64>,
    delay_sum: Vec<f64>,
    delay_count: Vec<f64>,
}

impl Batch {
    fn new(n: usize) -> Self {
        Self {
            direct: vec![0.0; n],
            relayed: vec![0.0; n],
            arrivals: vec![0.0; n],
            delay_sum: vec![0.0; n],
            delay_count: vec![0.0; n],
            ..Self::default()
        }
    }
}

fn column(batches: &[Batch], f: impl Fn(&Batch) -> f64) -> Vec<f64> {
    batches.iter().map(f).collect()
}

/// Runs one simulation.
pub fn run_simulation(params: &NetworkParams, sim: &SimConfig) -> Result<SimResult> {
    sim.validate()?;
    let channel = ChannelModel::new(params)?;
    let n = params.n();
    let q: Vec<f64> = params.users.iter().map(|u| u.q).collect();
    let q0 = params.q0;

    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let mut sampler = Sampler::new(&channel, sim.mode);
    let mut out = Outcomes::default();

    let measured = sim.slots - sim.warmup;
    let n_batches = (sim.batches as u64).min(measured) as usize;
    let n_segments = (TRAJECTORY_SEGMENTS as u64).min(measured) as usize;
    let mut batches = vec![Batch::new(n); n_batches];
    let mut segment_sum = vec![0.0; n_segments];
    let mut segment_len = vec![0u64; n_segments];
    let mut empty_halves = [0u64; 2];
    let half = measured / 2;

    let mut queue: VecDeque<Packet> = VecDeque::new();
    let mut hol_start = vec![0u64; n];
    let mut counts = Counts::default();
    let mut attempted = vec![0u64; n];
    let mut delivered_direct = vec![0u64; n];
    let mut delivered_relay = vec![0u64; n];
    let mut relay_arrivals = vec![0u64; n];
    let mut tx_users: Vec<usize> = Vec::with_capacity(n);
    let mut max_len = 0u64;
    // Running sums for the least-squares slope, in measured-window time.
    let (mut st, mut stt, mut sq, mut stq) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    for t in 0..sim.slots {
        let len = queue.len() as u64;
        let nonempty = len > 0;
        let relay_tx = nonempty && rng.random::<f64>() < q0;
        tx_users.clear();
        for (i, &qi) in q.iter().enumerate() {
            if rng.random::<f64>() < qi {
                tx_users.push(i);
            }
        }
        sampler.draw(&mut rng, relay_tx, &tx_users, &mut out);

        let measuring = t >= sim.warmup;
        let rel = t.wrapping_sub(sim.warmup);
        let b = if measuring {
            Some((rel * n_batches as u64 / measured) as usize)
        } else {
            None
        };

        counts.relay_attempts += relay_tx as u64;
        if out.relay_dest {
            let p = queue.pop_front().expect("relay transmits only when backlogged");
            counts.relay_departures += 1;
            let u = p.user as usize;
            delivered_relay[u] += 1;
            if let Some(b) = b {
                let bt = &mut batches[b];
                bt.departures += 1.0;
                bt.relayed[u] += 1.0;
                if p.hol_start >= sim.warmup {
                    bt.delay_sum[u] += (t - p.hol_start + 1) as f64;
                    bt.delay_count[u] += 1.0;
                }
            }
        }

        let mut arrived = 0u64;
        for (slot, &i) in tx_users.iter().enumerate() {
            attempted[i] += 1;
            if out.dest[slot] {
                delivered_direct[i] += 1;
                if let Some(b) = b {
                    let bt = &mut batches[b];
                    bt.direct[i] += 1.0;
                    if hol_start[i] >= sim.warmup {
                        bt.delay_sum[i] += (t - hol_start[i] + 1) as f64;
                        bt.delay_count[i] += 1.0;
                    }
                }
                hol_start[i] = t + 1;
            } else if out.relay[slot] {
                queue.push_back(Packet {
                    user: i as u32,
                    hol_start: hol_start[i],
                });
                relay_arrivals[i] += 1;
                arrived += 1;
                if let Some(b) = b {
                    batches[b].arrivals[i] += 1.0;
                }
                hol_start[i] = t + 1;
            }
        }
        counts.relay_arrivals += arrived;

        if let Some(b) = b {
            let bt = &mut batches[b];
            bt.slots += 1.0;
            bt.queue_sum += len as f64;
            if nonempty {
                bt.nonempty += 1.0;
                bt.arrivals_nonempty += arrived as f64;
            } else {
                bt.empty += 1.0;
                bt.arrivals_empty += arrived as f64;
                empty_halves[(rel >= half) as usize] += 1;
            }
            let s = (rel * n_segments as u64 / measured) as usize;
            segment_sum[s] += len as f64;
            segment_len[s] += 1;
            let x = rel as f64;
            st += x;
            stt += x * x;
            sq += len as f64;
            stq += x * len as f64;
            max_len = max_len.max(len);
        }
    }
    for i in 0..n {
        counts.attempted += attempted[i];
        counts.delivered_direct += delivered_direct[i];
        counts.delivered_relay += delivered_relay[i];
    }

    let slots_col = column(&batches, |b| b.slots);
    let nonempty_col = column(&batches, |b| b.nonempty);
    let per_slot = |f: &dyn Fn(&Batch) -> f64| ratio_estimate(&column(&batches, f), &slots_col);
    let nf = n as f64;

    let users: Vec<UserSim> = (0..n)
        .map(|i| UserSim {
            t_direct: per_slot(&|b| b.direct[i]),
            t_relayed: per_slot(&|b| b.relayed[i]),
            t_total: per_slot(&|b| b.direct[i] + b.relayed[i]),
            relay_arrival_rate: per_slot(&|b| b.arrivals[i]),
            delay: ratio_estimate(
                &column(&batches, |b| b.delay_sum[i]),
                &column(&batches, |b| b.delay_count[i]),
            ),
            attempted: attempted[i],
            delivered_direct: delivered_direct[i],
            delivered_relay: delivered_relay[i],
            relay_arrivals: relay_arrivals[i],
        })
        .collect();
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let user_mean = UserSim {
        t_direct: per_slot(&|b| sum(&b.direct) / nf),
        t_relayed: per_slot(&|b| sum(&b.relayed) / nf),
        t_total: per_slot(&|b| (sum(&b.direct) + sum(&b.relayed)) / nf),
        relay_arrival_rate: per_slot(&|b| sum(&b.arrivals) / nf),
        delay: ratio_estimate(
            &column(&batches, |b| sum(&b.delay_sum)),
            &column(&batches, |b| sum(&b.delay_count)),
        ),
        attempted: counts.attempted / n as u64,
        delivered_direct: counts.delivered_direct / n as u64,
        delivered_relay: counts.delivered_relay / n as u64,
        relay_arrivals: counts.relay_arrivals / n as u64,
    };

    let m = measured as f64;
    let denom = m * stt - st * st;
    let growth = if denom > 0.0 { (m * stq - st * sq) / denom } else { 0.0 };
    let segments: Vec<f64> = segment_sum
        .iter()
        .zip(&segment_len)
        .map(|(s, &l)| if l > 0 { s / l as f64 } else { 0.0 })
        .collect();
    let first = half.max(1) as f64;
    let second = (measured - half).max(1) as f64;

    Ok(SimResult {
        config: *sim,
        measured_slots: measured,
        lambda0: ratio_estimate(&column(&batches, |b| b.arrivals_empty), &column(&batches, |b| b.empty)),
        lambda1: ratio_estimate(&column(&batches, |b| b.arrivals_nonempty), &nonempty_col),
        lambda: per_slot(&|b| b.arrivals_empty + b.arrivals_nonempty),
        mu: ratio_estimate(&column(&batches, |b| b.departures), &nonempty_col),
        p_empty: per_slot(&|b| b.empty),
        q_bar: per_slot(&|b| b.queue_sum),
        t_aggr: per_slot(&|b| sum(&b.direct) + sum(&b.relayed)),
        relayed_fraction: ratio_estimate(
            &column(&batches, |b| sum(&b.relayed)),
            &column(&batches, |b| sum(&b.direct) + sum(&b.relayed)),
        ),
        users,
        user_mean,
        trace: QueueTrace {
            max: max_len.max(queue.len() as u64),
            final_len: queue.len() as u64,
            slope: growth,
            segments: segments.clone(),
            empty_fraction_first_half: empty_halves[0] as f64 / first,
            empty_fraction_second_half: empty_halves[1] as f64 / second,
        },
        trajectory: sim.stability_probe.then_some(segments),
        counts,
    })
}
