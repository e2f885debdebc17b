//! Closed forms against their independent oracles, and model invariants,
//! over randomly drawn networks.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{draw_stable, draw_symmetric, draw_two_user, drift_gap, table};
use fdrelay::drift::{enumerate_drift, n_user_drift, two_user_drift};
use fdrelay::experiment::format_number;
use fdrelay::metrics::{evaluate, no_relay_baseline};
use fdrelay::phy::success_probability;
use fdrelay::queue::{analyze, dtmc_steady_state_auto, service_rate};
use fdrelay::sim::run_simulation;
use fdrelay::{DelayConvention, NetworkParams, Node, Receiver, SimConfig, SymmetricParams, TableMode, TransmitSet};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid_params() -> impl Strategy<Value = NetworkParams> {
    (
        1usize..=30,
        prop::sample::select(vec![0.2, 0.6, 1.2, 2.5]),
        prop::sample::select(vec![0.0, 1e-10, 1e-8, 1e-4, 1.0]),
        0.0f64..=0.5,
        0.0f64..=1.0,
    )
        .prop_map(|(n, gamma, g, q, q0)| SymmetricParams::reference(n, gamma, g, q, q0).to_network())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_user_drift_matches_enumeration(seed in any::<u64>()) {
        let p = draw_two_user(&mut rng(seed));
        let gap = drift_gap(&two_user_drift(&table(&p), &p).unwrap(), &enumerate_drift(&p).unwrap());
        prop_assert!(gap <= 1e-12, "gap {gap:e}");
    }

    #[test]
    fn n_user_drift_matches_enumeration(seed in any::<u64>(), n in 1usize..=8) {
        let p = draw_symmetric(&mut rng(seed), n).to_network();
        let gap = drift_gap(&n_user_drift(&table(&p), &p).unwrap(), &enumerate_drift(&p).unwrap());
        prop_assert!(gap <= 1e-12, "gap {gap:e}");
    }

    #[test]
    fn drift_laws_are_distributions(p in grid_params()) {
        let t = table(&p);
        let d = n_user_drift(&t, &p).unwrap();
        let mu = service_rate(&t, &p).unwrap();
        for v in [&d.r0, &d.r1, &d.p0] {
            prop_assert!(v.iter().all(|&x| x >= 0.0));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert!(d.p1.iter().all(|&x| x >= 0.0) && d.p_minus1 >= 0.0);
        prop_assert!((d.p1.iter().sum::<f64>() + d.p_minus1 - 1.0).abs() < 1e-12);
        let mean_change: f64 = d.p1.iter().enumerate().map(|(k, x)| k as f64 * x).sum::<f64>() - d.p_minus1;
        // a departure can coincide with arrivals, so the mean change is
        // lambda1 - mu rather than lambda1 - p_minus1
        prop_assert!((mean_change - (d.lambda1 - mu)).abs() < 1e-12);
    }

    #[test]
    fn capture_probability_falls_with_interference(
        p in grid_params(),
        rx_relay in any::<bool>(),
        relay_tx in any::<bool>(),
        extra in 0usize..30,
    ) {
        let n = p.n();
        let rx = if rx_relay { Receiver::Relay } else { Receiver::Destination };
        let tx = Node::User(0);
        let base: Vec<usize> = (0..n).filter(|i| i % 2 == 0).collect();
        let quiet = success_probability(tx, rx, &TransmitSet::new(relay_tx, base.clone()), &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&quiet));
        let mut more = base;
        more.push(extra % n);
        let crowded = success_probability(tx, rx, &TransmitSet::new(relay_tx, more), &p).unwrap();
        prop_assert!(crowded <= quiet);
        let busy = success_probability(tx, rx, &TransmitSet::new(true, [0]), &p).unwrap();
        let idle = success_probability(tx, rx, &TransmitSet::new(false, [0]), &p).unwrap();
        prop_assert!(busy <= idle);
    }

    #[test]
    fn self_interference_only_hurts_the_relay_receiver(p in grid_params()) {
        let set = TransmitSet::new(true, [0]);
        let clean = p.with_g(0.0);
        let at = |q: &NetworkParams, rx| success_probability(Node::User(0), rx, &set, q).unwrap();
        prop_assert!(at(&p, Receiver::Relay) <= at(&clean, Receiver::Relay));
        prop_assert_eq!(at(&p, Receiver::Destination), at(&clean, Receiver::Destination));
    }

    #[test]
    fn queue_flow_balance(seed in any::<u64>()) {
        let p = draw_stable(&mut rng(seed), 20);
        let (_, m) = analyze(&p, &table(&p)).unwrap();
        prop_assert!(m.stable && m.q0_min.stabilizes(p.q0));
        prop_assert!(m.p_empty > 0.0 && m.p_empty <= 1.0);
        // arrivals equal departures in steady state
        prop_assert!((m.lambda - m.mu * (1.0 - m.p_empty)).abs() < 1e-12);
        prop_assert!(m.q_bar >= 1.0 - m.p_empty - 1e-12);
        prop_assert!(m.lambda1 < m.mu);
    }

    #[test]
    fn queue_matches_markov_chain(seed in any::<u64>()) {
        let p = draw_stable(&mut rng(seed), 12);
        let (d, m) = analyze(&p, &table(&p)).unwrap();
        let s = dtmc_steady_state_auto(&d, 1 << 21).unwrap();
        prop_assert!((s.p_empty - m.p_empty).abs() < 1e-8);
        prop_assert!((s.mean - m.q_bar).abs() < 1e-8 * m.q_bar.max(1.0));
        prop_assert!(s.tail_mass < 1e-12);
    }

    #[test]
    fn throughput_and_delay_identities(p in grid_params()) {
        let e = evaluate(&p, TableMode::Derived, DelayConvention::HeadOfLine).unwrap();
        let r = &e.report;
        let n = p.n() as f64;
        for u in &r.users {
            prop_assert!(u.t_direct >= 0.0 && u.t_relayed >= 0.0);
            prop_assert!((u.t_direct + u.t_relayed - u.t_total).abs() < 1e-15);
            prop_assert!(u.t_total <= p.users[0].q + 1e-15);
        }
        if r.stable {
            prop_assert!((r.t_aggr - n * r.users[0].t_total).abs() < 1e-12 * n.max(1.0));
            if let Some(d) = r.delay[0].finite() {
                prop_assert!(d >= 1.0 / r.users[0].t_total - 1e-9);
            }
        } else {
            prop_assert!(r.delay.iter().all(|d| d.finite().is_none()));
            let direct: f64 = r.users.iter().map(|u| u.t_direct).sum();
            prop_assert!((r.t_aggr - direct - e.queue.mu).abs() < 1e-12);
        }
        if let Some(f) = r.relayed_fraction {
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn delay_conventions_share_the_user_identity(seed in any::<u64>()) {
        let p = draw_stable(&mut rng(seed), 15);
        let hol = evaluate(&p, TableMode::Derived, DelayConvention::HeadOfLine).unwrap().report;
        let add = evaluate(&p, TableMode::Derived, DelayConvention::AdditiveService).unwrap().report;
        let (hq, hr) = (hol.d_queue.finite().unwrap(), hol.d_relay.finite().unwrap());
        let (aq, ar) = (add.d_queue.finite().unwrap(), add.d_relay.finite().unwrap());
        prop_assert!((hr - aq).abs() < 1e-9 * hr.max(1.0));
        prop_assert!(ar >= hr && hq <= aq);
        let u = hol.users[0];
        for (r, d_relay) in [(&hol, hr), (&add, ar)] {
            let d = r.delay[0].finite().unwrap();
            prop_assert!((d - (1.0 + u.t_relayed * d_relay) / u.t_total).abs() < 1e-9 * d);
        }
    }

    #[test]
    fn baseline_never_exceeds_access_rate(p in grid_params()) {
        let b = no_relay_baseline(&p).unwrap();
        let q = p.users[0].q;
        prop_assert!(b.throughput.iter().all(|&t| (0.0..=q + 1e-15).contains(&t)));
        if q > 0.0 {
            let d = b.delay[0].finite().unwrap();
            prop_assert!((d * b.throughput[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn printed_numbers_read_back(x in prop_oneof![-1e15f64..1e15, -1e-3f64..1e-3, Just(0.0)]) {
        let s = format_number(x);
        let y: f64 = s.parse().unwrap();
        prop_assert!((x - y).abs() <= 1e-11 * x.abs(), "{x} -> {s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_counts_are_consistent(p in grid_params(), seed in any::<u64>()) {
        let s = run_simulation(&p, &SimConfig::new(40_000, seed)).unwrap();
        let c = s.counts;
        prop_assert!(c.delivered_direct + c.relay_arrivals <= c.attempted);
        prop_assert!(c.relay_departures <= c.relay_arrivals);
        prop_assert!(c.relay_departures <= c.relay_attempts);
        prop_assert_eq!(c.relay_arrivals - c.relay_departures, s.trace.final_len);
        prop_assert!(s.trace.max >= s.trace.final_len);
        let n = p.n() as f64;
        for e in [s.lambda0, s.lambda1, s.lambda, s.t_aggr] {
            prop_assert!(e.mean.is_nan() || (0.0..=n).contains(&e.mean));
        }
        prop_assert!((0.0..=1.0).contains(&s.p_empty.mean));
        let again = run_simulation(&p, &SimConfig::new(40_000, seed)).unwrap();
        prop_assert_eq!(format!("{s:?}"), format!("{again:?}"));
    }
}
