//! Link budgets and SINR capture success probabilities under Rayleigh fading,
//! including the residual self-interference of a full-duplex relay.
//!
//! The received power on link `(i, j)` is exponential with mean
//! `v(i,j) * h(i,j)`, `h = P_tx * r^-alpha`. A packet from `i` is captured at
//! `j` iff its SINR reaches the threshold of `j`, which gives
//!
//! ```text
//! P = exp(-gamma_j eta_j / (v h)) * (1 + gamma_j r(i,j)^alpha g)^-m
//!       * prod_{k in T \ {i,j}} (1 + gamma_j v_k h_k / (v h))^-1
//! ```
//!
//! with `m = 1` iff the receiver itself transmits.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::{NetworkParams, Node, Receiver};

/// Received power factor `p_tx * r^-alpha`.
pub fn link_gain(p_tx: f64, r: f64, alpha: f64) -> Result<f64> {
    if !(p_tx > 0.0) {
        return Err(Error::domain("p_tx", format!("{p_tx} must be positive")));
    }
    if !(r > 0.0) {
        return Err(Error::domain("r", format!("{r} must be positive")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain("alpha", format!("{alpha} must be non-negative")));
    }
    Ok(p_tx * r.powf(-alpha))
}

/// Everything the capture test needs about one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Received power factor, watts.
    pub h: f64,
    /// Fading mean.
    pub v: f64,
    /// Receiver threshold.
    pub gamma: f64,
    /// Receiver noise, watts.
    pub eta: f64,
    /// Link distance, meters.
    pub r: f64,
}

impl LinkBudget {
    /// Mean received power `v * h`.
    pub fn mean_power(&self) -> f64 {
        self.v * self.h
    }

    /// Probability the signal alone clears the noise floor.
    pub fn noise_factor(&self) -> f64 {
        (-self.gamma * self.eta / self.mean_power()).exp()
    }
}

pub fn link_budget(params: &NetworkParams, tx: Node, rx: Receiver) -> Result<LinkBudget> {
    let (gamma, eta) = match rx {
        Receiver::Relay => (params.gamma_0, params.eta_0),
        Receiver::Destination => (params.gamma_d, params.eta_d),
    };
    let (p_tx, r, v) = match (tx, rx) {
        (Node::Relay, Receiver::Relay) => {
            return Err(Error::Contract("the relay does not receive its own packet".into()))
        }
        (Node::Relay, Receiver::Destination) => (params.p_tx_relay, params.r_0d, params.v_0d),
        (Node::User(i), rx) => {
            let u = params
                .users
                .get(i)
                .ok_or_else(|| Error::Contract(format!("user index {i} out of range")))?;
            match rx {
                Receiver::Relay => (u.p_tx, u.r_0, u.v_0),
                Receiver::Destination => (u.p_tx, u.r_d, u.v_d),
            }
        }
    };
    Ok(LinkBudget {
        h: link_gain(p_tx, r, params.alpha)?,
        v,
        gamma,
        eta,
        r,
    })
}

/// The set of nodes transmitting in a slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TransmitSet {
    pub relay: bool,
    /// Sorted, distinct user indices.
    pub users: Vec<usize>,
}

impl TransmitSet {
    pub fn new(relay: bool, users: impl IntoIterator<Item = usize>) -> Self {
        let mut users: Vec<usize> = users.into_iter().collect();
        users.sort_unstable();
        users.dedup();
        Self { relay, users }
    }

    pub fn from_nodes(nodes: &[Node]) -> Self {
        let relay = nodes.contains(&Node::Relay);
        Self::new(
            relay,
            nodes.iter().filter_map(|n| match n {
                Node::User(i) => Some(*i),
                Node::Relay => None,
            }),
        )
    }

    /// Bit 0 is the relay, bit `i + 1` is user `i`.
    pub fn from_mask(mask: u64) -> Self {
        let relay = mask & 1 == 1;
        let users = (0..63).filter(|i| mask >> (i + 1) & 1 == 1);
        Self::new(relay, users)
    }

    pub fn mask(&self) -> u64 {
        self.users.iter().fold(self.relay as u64, |m, i| m | 1 << (i + 1))
    }

    pub fn contains(&self, node: Node) -> bool {
        match node {
            Node::Relay => self.relay,
            Node::User(i) => self.users.binary_search(&i).is_ok(),
        }
    }

    pub fn with(&self, node: Node) -> Self {
        let mut s = self.clone();
        match node {
            Node::Relay => s.relay = true,
            Node::User(i) => {
                if let Err(pos) = s.users.binary_search(&i) {
                    s.users.insert(pos, i);
                }
            }
        }
        s
    }
}

impl fmt::Display for TransmitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.relay {
            parts.push("0".into());
        }
        parts.extend(self.users.iter().map(|i| (i + 1).to_string()));
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Precomputed mean received powers, so the capture formula can be evaluated
/// per slot without recomputing path loss.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    user_to_dest: Vec<LinkBudget>,
    user_to_relay: Vec<LinkBudget>,
    relay_to_dest: LinkBudget,
    g: f64,
    alpha: f64,
}

impl ChannelModel {
    pub fn new(params: &NetworkParams) -> Result<Self> {
        params.validate()?;
        let n = params.n();
        Ok(Self {
            user_to_dest: (0..n)
                .map(|i| link_budget(params, Node::User(i), Receiver::Destination))
                .collect::<Result<_>>()?,
            user_to_relay: (0..n)
                .map(|i| link_budget(params, Node::User(i), Receiver::Relay))
                .collect::<Result<_>>()?,
            relay_to_dest: link_budget(params, Node::Relay, Receiver::Destination)?,
            g: params.g,
            alpha: params.alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.user_to_dest.len()
    }

    pub fn budget(&self, tx: Node, rx: Receiver) -> &LinkBudget {
        match (tx, rx) {
            (Node::User(i), Receiver::Destination) => &self.user_to_dest[i],
            (Node::User(i), Receiver::Relay) => &self.user_to_relay[i],
            (Node::Relay, _) => &self.relay_to_dest,
        }
    }

    /// Mean residual self-interference power seen at the relay while it
    /// receives user `i`: `g * v * h * r^alpha`. This is the unique scale
    /// for which an exponential residual reproduces the self-interference
    /// factor of the capture formula.
    pub fn residual_self_interference(&self, user: usize) -> f64 {
        let b = &self.user_to_relay[user];
        self.g * b.mean_power() * b.r.powf(self.alpha)
    }

    /// Capture probability of `tx` at `rx` given the transmit set.
    pub fn success(&self, tx: Node, rx: Receiver, set: &TransmitSet) -> Result<f64> {
        if !set.contains(tx) {
            return Err(Error::Contract(format!("transmitter {tx} is not in {set}")));
        }
        if let Node::User(i) = tx {
            if i >= self.n() {
                return Err(Error::Contract(format!("user index {i} out of range")));
            }
        }
        if let Some(&i) = set.users.iter().find(|&&i| i >= self.n()) {
            return Err(Error::Contract(format!("user index {i} out of range")));
        }
        match (tx, rx) {
            (Node::Relay, Receiver::Relay) => Err(Error::Contract("the relay does not receive its own packet".into())),
            (Node::Relay, Receiver::Destination) => Ok(self.relay_success(&set.users)),
            (Node::User(i), rx) => Ok(self.user_success(i, rx, set.relay, &set.users)),
        }
    }

    /// Unchecked: `i` must be listed in `users`.
    pub(crate) fn user_success(&self, i: usize, rx: Receiver, relay_tx: bool, users: &[usize]) -> f64 {
        let own = self.budget(Node::User(i), rx);
        let s = own.mean_power();
        let mut p = own.noise_factor();
        if rx == Receiver::Relay && relay_tx {
            p /= 1.0 + own.gamma * own.r.powf(self.alpha) * self.g;
        }
        for &k in users {
            if k != i {
                p /= 1.0 + own.gamma * self.budget(Node::User(k), rx).mean_power() / s;
            }
        }
        if rx == Receiver::Destination && relay_tx {
            p /= 1.0 + own.gamma * self.relay_to_dest.mean_power() / s;
        }
        p
    }

    pub(crate) fn relay_success(&self, users: &[usize]) -> f64 {
        let own = &self.relay_to_dest;
        let s = own.mean_power();
        let mut p = own.noise_factor();
        for &k in users {
            p /= 1.0 + own.gamma * self.user_to_dest[k].mean_power() / s;
        }
        p
    }
}

/// Capture probability of `tx` at `rx` when `set` transmits.
pub fn success_probability(tx: Node, rx: Receiver, set: &TransmitSet, params: &NetworkParams) -> Result<f64> {
    ChannelModel::new(params)?.success(tx, rx, set)
}

/// How the symmetric table entries are produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum TableMode {
    /// Every entry from the capture formula over the matching transmit set.
    #[default]
    Derived,
    /// The printed symmetric closed forms, kept verbatim (threshold and
    /// noise placements included) for discrepancy reports.
    Printed,
}

impl TableMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TableMode::Derived => "derived",
            TableMode::Printed => "printed",
        }
    }
}

impl std::str::FromStr for TableMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(TableMode::Derived),
            "printed" => Ok(TableMode::Printed),
            other => Err(Error::domain("mode", format!("unknown table mode `{other}`"))),
        }
    }
}

/// Success probabilities of a symmetric network, indexed by the number of
/// concurrently transmitting users and whether the relay transmits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSuccess {
    n: usize,
    relay_rx: Vec<[f64; 2]>,
    dest_rx: Vec<[f64; 2]>,
    relay_dest: Vec<f64>,
}

impl SymmetricSuccess {
    fn idx(&self, users: usize) -> usize {
        assert!(
            (1..=self.n).contains(&users),
            "user count {users} outside 1..={}",
            self.n
        );
        users - 1
    }

    /// User to relay with `users` users transmitting.
    pub fn p0(&self, users: usize, relay_tx: bool) -> f64 {
        self.relay_rx[self.idx(users)][relay_tx as usize]
    }

    /// User to destination with `users` users transmitting.
    pub fn pd(&self, users: usize, relay_tx: bool) -> f64 {
        self.dest_rx[self.idx(users)][relay_tx as usize]
    }

    /// Relay to destination with `users` users transmitting, `0..=n`.
    pub fn p0d(&self, users: usize) -> f64 {
        self.relay_dest[users]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Dense success table over every transmit set of a small network.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    n: usize,
    values: Vec<f64>,
}

/// Largest population for which [`LinkTable`] is materialized.
pub const LINK_TABLE_MAX_USERS: usize = 12;

impl LinkTable {
    fn slot(&self, mask: u64, tx: Node, rx: Receiver) -> usize {
        let nodes = self.n + 1;
        let t = match tx {
            Node::Relay => 0,
            Node::User(i) => i + 1,
        };
        (mask as usize * nodes + t) * 2 + (rx == Receiver::Destination) as usize
    }

    fn build(channel: &ChannelModel) -> Self {
        let n = channel.n();
        let sets = 1usize << (n + 1);
        let mut values = vec![f64::NAN; sets * (n + 1) * 2];
        let mut table = Self { n, values: Vec::new() };
        for mask in 0..sets as u64 {
            let set = TransmitSet::from_mask(mask);
            let mut txs: Vec<Node> = set.users.iter().map(|&i| Node::User(i)).collect();
            if set.relay {
                txs.push(Node::Relay);
            }
            for tx in txs {
                for rx in [Receiver::Relay, Receiver::Destination] {
                    if tx == Node::Relay && rx == Receiver::Relay {
                        continue;
                    }
                    let slot = table.slot(mask, tx, rx);
                    values[slot] = channel.success(tx, rx, &set).expect("enumerated set is valid");
                }
            }
        }
        table.values = values;
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, tx: Node, rx: Receiver, set: &TransmitSet) -> Result<f64> {
        let v = self.values[self.slot(set.mask(), tx, rx)];
        if v.is_nan() {
            return Err(Error::Contract(format!("no entry for {tx} -> {rx} in {set}")));
        }
        Ok(v)
    }

    /// Shorthand with the transmit set given as nodes. Panics on an entry
    /// outside the table; intended for the hand-written closed forms.
    pub fn p(&self, tx: Node, rx: Receiver, set: &[Node]) -> f64 {
        self.get(tx, rx, &TransmitSet::from_nodes(set))
            .expect("closed form references a valid table entry")
    }
}

/// All success probabilities the queue model needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTable {
    pub mode: TableMode,
    /// Present when every user is identical.
    pub symmetric: Option<SymmetricSuccess>,
    /// Present when `n <= LINK_TABLE_MAX_USERS`; always capture-formula derived.
    pub links: Option<LinkTable>,
}

impl SuccessTable {
    pub fn symmetric(&self) -> Result<&SymmetricSuccess> {
        self.symmetric
            .as_ref()
            .ok_or_else(|| Error::WrongModel("symmetric table requires identical users".into()))
    }

    pub fn links(&self) -> Result<&LinkTable> {
        self.links
            .as_ref()
            .ok_or_else(|| Error::WrongModel(format!("per-set table only built for n <= {LINK_TABLE_MAX_USERS}")))
    }
}

fn symmetric_derived(channel: &ChannelModel) -> SymmetricSuccess {
    let n = channel.n();
    let mut relay_rx = Vec::with_capacity(n);
    let mut dest_rx = Vec::with_capacity(n);
    for i in 1..=n {
        let mut pair_relay = [0.0; 2];
        let mut pair_dest = [0.0; 2];
        for relay_tx in [false, true] {
            let set = TransmitSet::new(relay_tx, 0..i);
            pair_relay[relay_tx as usize] = channel
                .success(Node::User(0), Receiver::Relay, &set)
                .expect("valid set");
            pair_dest[relay_tx as usize] = channel
                .success(Node::User(0), Receiver::Destination, &set)
                .expect("valid set");
        }
        relay_rx.push(pair_relay);
        dest_rx.push(pair_dest);
    }
    let relay_dest = (0..=n)
        .map(|k| {
            channel
                .success(Node::Relay, Receiver::Destination, &TransmitSet::new(true, 0..k))
                .expect("valid set")
        })
        .collect();
    SymmetricSuccess {
        n,
        relay_rx,
        dest_rx,
        relay_dest,
    }
}

fn symmetric_printed(params: &NetworkParams, channel: &ChannelModel) -> SymmetricSuccess {
    let n = params.n();
    let to_relay = channel.budget(Node::User(0), Receiver::Relay);
    let to_dest = channel.budget(Node::User(0), Receiver::Destination);
    let beta = channel.budget(Node::Relay, Receiver::Destination).mean_power() / to_dest.mean_power();
    let (g0, gd) = (params.gamma_0, params.gamma_d);

    let p_0 = (-g0 * params.eta_0 / to_relay.mean_power()).exp();
    let p_d = (-gd * params.eta_d / to_dest.mean_power()).exp();
    // Printed with the user-to-relay noise term.
    let p_0d = (-g0 * params.eta_0 / to_relay.mean_power()).exp();
    let si = 1.0 / (1.0 + g0 * to_relay.r.powf(params.alpha) * params.g);

    let relay_rx = (1..=n)
        .map(|i| {
            let base = p_0 * (1.0 / (1.0 + g0)).powi(i as i32 - 1);
            [base, base * si]
        })
        .collect();
    let dest_rx = (1..=n)
        .map(|i| {
            let base = p_d * (1.0 / (1.0 + gd)).powi(i as i32 - 1);
            [base, base / (1.0 + beta * g0)]
        })
        .collect();
    let relay_dest = (0..=n)
        .map(|k| p_0d * (1.0 / (1.0 + gd / beta)).powi(k as i32))
        .collect();
    SymmetricSuccess {
        n,
        relay_rx,
        dest_rx,
        relay_dest,
    }
}

/// Builds every table the queue model needs for `params`.
pub fn build_success_table(params: &NetworkParams, mode: TableMode) -> Result<SuccessTable> {
    let channel = ChannelModel::new(params)?;
    let symmetric = params.is_symmetric().then(|| match mode {
        TableMode::Derived => symmetric_derived(&channel),
        TableMode::Printed => symmetric_printed(params, &channel),
    });
    let links = (params.n() <= LINK_TABLE_MAX_USERS).then(|| LinkTable::build(&channel));
    Ok(SuccessTable { mode, symmetric, links })
}

/// One symmetric entry compared across the two table modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryDiff {
    pub entry: String,
    pub derived: f64,
    pub literal: f64,
    /// `|derived - literal| > 1e-12`.
    pub deviates: bool,
}

/// Entry-wise comparison of the capture-formula table against the printed
/// symmetric closed forms.
pub fn compare_modes(params: &NetworkParams) -> Result<Vec<EntryDiff>> {
    let derived = build_success_table(params, TableMode::Derived)?;
    let literal = build_success_table(params, TableMode::Printed)?;
    let (a, b) = (derived.symmetric()?, literal.symmetric()?);
    let mut out = Vec::new();
    let mut push = |entry: String, x: f64, y: f64| {
        out.push(EntryDiff {
            entry,
            derived: x,
            literal: y,
            deviates: (x - y).abs() > 1e-12,
        })
    };
    for i in 1..=a.n() {
        for j in [false, true] {
            push(format!("P_0[{i},{}]", j as u8), a.p0(i, j), b.p0(i, j));
            push(format!("P_d[{i},{}]", j as u8), a.pd(i, j), b.pd(i, j));
        }
    }
    for k in 0..=a.n() {
        push(format!("P_0d[{k}]"), a.p0d(k), b.p0d(k));
    }
    Ok(out)
}
