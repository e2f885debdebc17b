//! Network parameterization: topology, powers, noise, thresholds, fading
//! means and access probabilities.
//!
//! Users are indexed from 0 internally. Powers and noise are in watts,
//! distances in meters.

use std::fmt;

use crate::error::{Error, Result};

/// A transmitting node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Relay,
    User(usize),
}

/// A receiving node. The relay receives while it transmits (full duplex);
/// the destination never transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Receiver {
    Relay,
    Destination,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Relay => write!(f, "0"),
            Node::User(i) => write!(f, "{}", i + 1),
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Receiver::Relay => write!(f, "0"),
            Receiver::Destination => write!(f, "d"),
        }
    }
}

/// Per-user access probability and link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserParams {
    /// Transmit probability per slot.
    pub q: f64,
    /// Transmit power, watts.
    pub p_tx: f64,
    /// Distance to the destination, meters.
    pub r_d: f64,
    /// Distance to the relay, meters.
    pub r_0: f64,
    /// Rayleigh fading mean on the user to destination link.
    pub v_d: f64,
    /// Rayleigh fading mean on the user to relay link.
    pub v_0: f64,
}

/// Full network parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub users: Vec<UserParams>,
    /// Relay transmit probability given a nonempty queue.
    pub q0: f64,
    /// Relay transmit power, watts.
    pub p_tx_relay: f64,
    /// Relay to destination distance, meters.
    pub r_0d: f64,
    /// Fading mean on the relay to destination link.
    pub v_0d: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Noise power at the relay receiver, watts.
    pub eta_0: f64,
    /// Noise power at the destination receiver, watts.
    pub eta_d: f64,
    /// SINR threshold at the relay.
    pub gamma_0: f64,
    /// SINR threshold at the destination.
    pub gamma_d: f64,
    /// Self-interference coefficient: 0 is perfect cancelation, 1 none.
    pub g: f64,
}

/// Non-fatal findings from [`NetworkParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    /// The relay-to-destination link is not stronger than the direct user
    /// link, so the symmetric closed forms are used outside the regime they
    /// were written for.
    BetaNotAboveOne { beta: f64 },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::BetaNotAboveOne { beta } => {
                write!(f, "beta = {beta:.6} is not above 1")
            }
        }
    }
}

/// Symmetric description of a network: every user shares the same access
/// probability and geometry. This is the shape the CLI sweeps over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricParams {
    pub n: usize,
    pub q: f64,
    pub q0: f64,
    pub r_d: f64,
    pub r_0: f64,
    pub r_0d: f64,
    pub alpha: f64,
    pub eta_0: f64,
    pub eta_d: f64,
    pub gamma_0: f64,
    pub gamma_d: f64,
    pub g: f64,
    pub p_tx_user: f64,
    pub p_tx_relay: f64,
    pub v_d: f64,
    pub v_0: f64,
    pub v_0d: f64,
}

impl Default for SymmetricParams {
    /// Reference setup: r_d = 130 m, r_0 = 60 m, r_0d = 80 m, alpha = 4,
    /// noise 1e-11 W, relay 10 mW, users 1 mW, two users, gamma = 0.6,
    /// q = 0.1, q0 = 0.99, g = 1e-8.
    fn default() -> Self {
        Self {
            n: 2,
            q: 0.1,
            q0: 0.99,
            r_d: 130.0,
            r_0: 60.0,
            r_0d: 80.0,
            alpha: 4.0,
            eta_0: 1e-11,
            eta_d: 1e-11,
            gamma_0: 0.6,
            gamma_d: 0.6,
            g: 1e-8,
            p_tx_user: 1e-3,
            p_tx_relay: 1e-2,
            v_d: 1.0,
            v_0: 1.0,
            v_0d: 1.0,
        }
    }
}

impl SymmetricParams {
    /// Reference setup with the usual sweep coordinates overridden.
    pub fn reference(n: usize, gamma: f64, g: f64, q: f64, q0: f64) -> Self {
        Self {
            n,
            q,
            q0,
            gamma_0: gamma,
            gamma_d: gamma,
            g,
            ..Self::default()
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_0 = gamma;
        self.gamma_d = gamma;
        self
    }

    pub fn to_network(&self) -> NetworkParams {
        NetworkParams {
            users: vec![
                UserParams {
                    q: self.q,
                    p_tx: self.p_tx_user,
                    r_d: self.r_d,
                    r_0: self.r_0,
                    v_d: self.v_d,
                    v_0: self.v_0,
                };
                self.n
            ],
            q0: self.q0,
            p_tx_relay: self.p_tx_relay,
            r_0d: self.r_0d,
            v_0d: self.v_0d,
            alpha: self.alpha,
            eta_0: self.eta_0,
            eta_d: self.eta_d,
            gamma_0: self.gamma_0,
            gamma_d: self.gamma_d,
            g: self.g,
        }
    }
}

impl From<SymmetricParams> for NetworkParams {
    fn from(p: SymmetricParams) -> Self {
        p.to_network()
    }
}

fn check_probability(field: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(field, format!("{x} is not in [0, 1]")));
    }
    Ok(())
}

fn check_positive(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(field, format!("{x} must be positive and finite")));
    }
    Ok(())
}

impl NetworkParams {
    pub fn n(&self) -> usize {
        self.users.len()
    }

    /// Checks every domain constraint. Returns soft warnings on success.
    pub fn validate(&self) -> Result<Vec<ParamWarning>> {
        if self.users.is_empty() {
            return Err(Error::domain("n", "at least one user is required"));
        }
        for (i, u) in self.users.iter().enumerate() {
            check_probability(&format!("users[{i}].q"), u.q)?;
            check_positive(&format!("users[{i}].p_tx"), u.p_tx)?;
            check_positive(&format!("users[{i}].r_d"), u.r_d)?;
            check_positive(&format!("users[{i}].r_0"), u.r_0)?;
            check_positive(&format!("users[{i}].v_d"), u.v_d)?;
            check_positive(&format!("users[{i}].v_0"), u.v_0)?;
        }
        check_probability("q0", self.q0)?;
        check_positive("p_tx_relay", self.p_tx_relay)?;
        check_positive("r_0d", self.r_0d)?;
        check_positive("v_0d", self.v_0d)?;
        check_positive("eta_0", self.eta_0)?;
        check_positive("eta_d", self.eta_d)?;
        if !(self.alpha >= 2.0 && self.alpha.is_finite()) {
            return Err(Error::domain("alpha", format!("{} must be at least 2", self.alpha)));
        }
        for (field, x) in [("gamma_0", self.gamma_0), ("gamma_d", self.gamma_d)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::domain(field, format!("{x} must be non-negative")));
            }
        }
        check_probability("g", self.g)?;

        let mut warnings = Vec::new();
        if let Some(beta) = self.beta() {
            if beta <= 1.0 {
                warnings.push(ParamWarning::BetaNotAboveOne { beta });
            }
        }
        Ok(warnings)
    }

    /// The shared user description when all users are identical.
    pub fn common_user(&self) -> Option<&UserParams> {
        let first = self.users.first()?;
        self.users.iter().all(|u| u == first).then_some(first)
    }

    pub fn is_symmetric(&self) -> bool {
        self.common_user().is_some()
    }

    /// Ratio of mean received power at the destination from the relay to
    /// that from a user. Defined for symmetric networks only.
    pub fn beta(&self) -> Option<f64> {
        let u = self.common_user()?;
        let relay = self.v_0d * self.p_tx_relay * self.r_0d.powf(-self.alpha);
        let user = u.v_d * u.p_tx * u.r_d.powf(-self.alpha);
        Some(relay / user)
    }

    pub fn with_q0(&self, q0: f64) -> Self {
        Self { q0, ..self.clone() }
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }
}
