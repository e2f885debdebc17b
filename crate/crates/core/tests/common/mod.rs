#![allow(dead_code)]

use rand::Rng;

use fdrelay::phy::build_success_table;
use fdrelay::queue::analyze;
use fdrelay::{DriftDistribution, NetworkParams, SuccessTable, SymmetricParams, TableMode, UserParams};

pub const GAMMAS: [f64; 4] = [0.2, 0.6, 1.2, 2.5];
pub const GS: [f64; 3] = [1e-10, 1e-8, 1.0];

/// Log-uniform draw in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// Self-interference coefficient: exactly zero, exactly one, or anywhere
/// between 1e-12 and 1 on a log scale.
pub fn draw_g(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => log_uniform(rng, 1e-12, 1.0),
    }
}

/// Symmetric network with geometry, thresholds and probabilities drawn
/// around the reference setup.
pub fn draw_symmetric(rng: &mut impl Rng, n: usize) -> SymmetricParams {
    let mut p = SymmetricParams::reference(n, 0.6, 1e-8, 0.1, 0.99);
    p.q = rng.random_range(0.0..=0.6);
    p.q0 = rng.random_range(0.0..=1.0);
    p.gamma_0 = log_uniform(rng, 0.05, 5.0);
    p.gamma_d = if rng.random_bool(0.5) {
        p.gamma_0
    } else {
        log_uniform(rng, 0.05, 5.0)
    };
    p.g = draw_g(rng);
    p.r_d = rng.random_range(60.0..=200.0);
    p.r_0 = rng.random_range(20.0..=120.0);
    p.r_0d = rng.random_range(30.0..=150.0);
    p.alpha = rng.random_range(2.5..=4.5);
    p.p_tx_user = log_uniform(rng, 1e-4, 1e-2);
    p.p_tx_relay = log_uniform(rng, 1e-3, 1e-1);
    p
}

/// Two users with independent geometry and access probabilities.
pub fn draw_two_user(rng: &mut impl Rng) -> NetworkParams {
    let mut p = draw_symmetric(rng, 2).to_network();
    p.users = (0..2)
        .map(|_| UserParams {
            q: rng.random_range(0.0..=1.0),
            p_tx: log_uniform(rng, 1e-4, 1e-2),
            r_d: rng.random_range(60.0..=200.0),
            r_0: rng.random_range(20.0..=120.0),
            v_d: 1.0,
            v_0: 1.0,
        })
        .collect();
    p
}

pub fn table(p: &NetworkParams) -> SuccessTable {
    build_success_table(p, TableMode::Derived).unwrap()
}

/// Largest componentwise gap between two drift laws.
pub fn drift_gap(a: &DriftDistribution, b: &DriftDistribution) -> f64 {
    let vecs = [(&a.r0, &b.r0), (&a.r1, &b.r1), (&a.p0, &b.p0), (&a.p1, &b.p1)];
    let mut worst = (a.p_minus1 - b.p_minus1)
        .abs()
        .max((a.lambda0 - b.lambda0).abs())
        .max((a.lambda1 - b.lambda1).abs());
    for (x, y) in vecs {
        assert_eq!(x.len(), y.len(), "length mismatch");
        for (u, v) in x.iter().zip(y) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

/// Draws symmetric networks until one has a stable relay queue with
/// q0 above its threshold and arrivals at the relay.
pub fn draw_stable(rng: &mut impl Rng, n_max: usize) -> NetworkParams {
    loop {
        let n = rng.random_range(1..=n_max);
        let mut s = draw_symmetric(rng, n);
        s.q = rng.random_range(0.01..=0.4);
        let p = s.to_network();
        let (d, m) = analyze(&p, &table(&p)).unwrap();
        if m.stable && d.lambda0 > 0.0 {
            return p;
        }
    }
}

/// Writes a line straight to the process stdout, bypassing the test
/// harness capture so that verdicts appear in the normal test log.
pub fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}
