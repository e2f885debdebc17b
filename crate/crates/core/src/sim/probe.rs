//! Growth test on a recorded queue trajectory.

use super::stats::slope;
use super::SimResult;

/// Fewest measured slots the probe will judge.
pub const PROBE_MIN_SLOTS: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl StabilityVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilityVerdict::Stable => "stable",
            StabilityVerdict::Unstable => "unstable",
            StabilityVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Classifies a run from its queue trajectory.
///
/// Unstable: the queue never empties in the second half of the window and
/// the segment means grow with a t-statistic above 10. Stable: the queue
/// keeps returning to empty and the two half-window means are of the same
/// size. Anything else, or too short a run, is inconclusive.
pub fn stability_probe(result: &SimResult) -> StabilityVerdict {
    let Some(segments) = result.trajectory.as_deref() else {
        return StabilityVerdict::Inconclusive;
    };
    if result.measured_slots < PROBE_MIN_SLOTS || segments.len() < 8 {
        return StabilityVerdict::Inconclusive;
    }
    let (b, se) = slope(segments);
    let t = if se > 0.0 {
        b / se
    } else if b > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let trace = &result.trace;
    if trace.empty_fraction_second_half == 0.0 && b > 0.0 && t > 10.0 {
        return StabilityVerdict::Unstable;
    }
    let h = segments.len() / 2;
    let m1 = segments[..h].iter().sum::<f64>() / h as f64;
    let m2 = segments[h..].iter().sum::<f64>() / (segments.len() - h) as f64;
    if trace.empty_fraction_second_half > 0.0 && (m2 - m1).abs() <= 0.5 * m1.max(m2) + 1.0 {
        return StabilityVerdict::Stable;
    }
    StabilityVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SymmetricParams;
    use crate::sim::{run_simulation, SimConfig};

    #[test]
    fn short_run_is_inconclusive() {
        let p = SymmetricParams::default().to_network();
        let c = SimConfig::new(510, 7).with_warmup(500);
        let r = run_simulation(&p, &c).unwrap();
        assert_eq!(stability_probe(&r), StabilityVerdict::Inconclusive);
    }

    #[test]
    fn probe_needs_a_trajectory() {
        let p = SymmetricParams::default().to_network();
        let mut c = SimConfig::new(50_000, 7);
        c.stability_probe = false;
        let r = run_simulation(&p, &c).unwrap();
        assert_eq!(stability_probe(&r), StabilityVerdict::Inconclusive);
    }

    #[test]
    fn verdicts_follow_the_threshold() {
        let stable = SymmetricParams::reference(10, 0.6, 1e-8, 0.1, 0.99).to_network();
        let r = run_simulation(&stable, &SimConfig::new(200_000, 1)).unwrap();
        assert_eq!(stability_probe(&r), StabilityVerdict::Stable);
        let silent_relay = stable.with_q0(0.0);
        let r = run_simulation(&silent_relay, &SimConfig::new(200_000, 1)).unwrap();
        assert_eq!(stability_probe(&r), StabilityVerdict::Unstable);
    }
}
