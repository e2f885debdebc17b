//! Sweep execution, CSV rows and the agreement summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Engine, ExperimentSpec};
use crate::drift::enumerate_drift;
use crate::error::{Error, Result};
use crate::metrics::{no_relay_baseline, performance_report, Delay, PerformanceReport};
use crate::params::SymmetricParams;
use crate::phy::build_success_table;
use crate::queue::{analyze, dtmc_steady_state_auto, metrics_from_drift, RelayQueueMetrics};
use crate::sim::{run_simulation, stability_probe, Estimate, SamplingMode, SimConfig, SimResult, StabilityVerdict};

/// Largest chain the DTMC engine will build.
pub const DTMC_MAX_LEVELS: usize = 1 << 21;
/// Allowed gap between the closed forms and the DTMC solution.
pub const DTMC_TOLERANCE: f64 = 1e-8;
/// Allowed componentwise gap between closed-form and enumerated drift.
pub const ENUMERATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Unstable,
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "OK",
            Status::Unstable => "UNSTABLE",
            Status::Error => "ERROR",
        }
    }
}

/// Standard errors of a simulation row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowErrors {
    pub mu: f64,
    pub lambda: f64,
    pub p_empty: f64,
    pub q_bar: f64,
    pub t_direct: f64,
    pub t_relayed: f64,
    pub t_user: f64,
    pub t_aggr: f64,
    pub delay: f64,
}

/// One CSV row: one engine at one sweep point. Per-user columns hold the
/// per-user value, identical for every user of a symmetric network.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub index: usize,
    pub engine: Engine,
    pub status: Status,
    pub point: SymmetricParams,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub p_empty: Option<f64>,
    pub q_bar: Option<f64>,
    pub q0_min: Option<f64>,
    /// `yes`, `no`, or the probe verdict for simulation rows.
    pub stable: String,
    pub t_direct: Option<f64>,
    pub t_relayed: Option<f64>,
    pub t_user: Option<f64>,
    pub t_aggr: Option<f64>,
    pub relayed_fraction: Option<f64>,
    pub d_queue: Option<f64>,
    pub d_relay: Option<f64>,
    pub delay: Option<f64>,
    pub baseline_t: Option<f64>,
    pub baseline_delay: Option<f64>,
    pub se: Option<RowErrors>,
    pub message: String,
}

impl Row {
    fn empty(index: usize, engine: Engine, point: SymmetricParams) -> Self {
        Self {
            index,
            engine,
            status: Status::Ok,
            point,
            mu: None,
            lambda: None,
            p_empty: None,
            q_bar: None,
            q0_min: None,
            stable: String::new(),
            t_direct: None,
            t_relayed: None,
            t_user: None,
            t_aggr: None,
            relayed_fraction: None,
            d_queue: None,
            d_relay: None,
            delay: None,
            baseline_t: None,
            baseline_delay: None,
            se: None,
            message: String::new(),
        }
    }

    fn error(index: usize, engine: Engine, point: SymmetricParams, e: &Error) -> Self {
        Self {
            status: Status::Error,
            message: e.to_string(),
            ..Self::empty(index, engine, point)
        }
    }
}

pub const CSV_HEADER: &str = "engine,status,n,q,q0,gamma,g,mu,lambda,p_empty,q_bar,q0_min,stable,\
t_direct,t_relayed,t_user,t_aggr,relayed_fraction,d_queue,d_relay,delay,baseline_t,baseline_delay,\
se_mu,se_lambda,se_p_empty,se_q_bar,se_t_direct,se_t_relayed,se_t_user,se_t_aggr,se_delay,message";

/// Decimal rendering with 12 significant digits, trailing zeros trimmed;
/// scientific notation outside `[1e-5, 1e12)`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return String::new();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_owned()
    }
}

impl Row {
    /// Cell values in [`CSV_HEADER`] order, unquoted.
    pub fn cells(&self) -> Vec<String> {
        let p = &self.point;
        let se = self.se;
        let e = |f: fn(&RowErrors) -> f64| cell(se.as_ref().map(f));
        [
            self.engine.as_str().to_owned(),
            self.status.as_str().to_owned(),
            p.n.to_string(),
            format_number(p.q),
            format_number(p.q0),
            format_number(p.gamma_d),
            format_number(p.g),
            cell(self.mu),
            cell(self.lambda),
            cell(self.p_empty),
            cell(self.q_bar),
            cell(self.q0_min),
            self.stable.clone(),
            cell(self.t_direct),
            cell(self.t_relayed),
            cell(self.t_user),
            cell(self.t_aggr),
            cell(self.relayed_fraction),
            cell(self.d_queue),
            cell(self.d_relay),
            cell(self.delay),
            cell(self.baseline_t),
            cell(self.baseline_delay),
            e(|s| s.mu),
            e(|s| s.lambda),
            e(|s| s.p_empty),
            e(|s| s.q_bar),
            e(|s| s.t_direct),
            e(|s| s.t_relayed),
            e(|s| s.t_user),
            e(|s| s.t_aggr),
            e(|s| s.delay),
            self.message.clone(),
        ]
        .into()
    }

    pub fn to_csv(&self) -> String {
        let mut cells = self.cells();
        if let Some(last) = cells.last_mut() {
            *last = quote(last);
        }
        cells.join(",")
    }
}

/// A disagreement between the closed forms and an oracle engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub index: usize,
    pub engine: Engine,
    pub point: SymmetricParams,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = &self.point;
        write!(
            f,
            "point {} (n={}, q={}, q0={}, gamma={}, g={}) {}: {}",
            self.index,
            p.n,
            format_number(p.q),
            format_number(p.q0),
            format_number(p.gamma_d),
            format_number(p.g),
            self.engine.as_str(),
            self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    pub issues: Vec<Issue>,
    pub csv: String,
    pub summary: String,
}

struct PointOutcome {
    rows: Vec<Row>,
    issues: Vec<Issue>,
}

fn fill_report(row: &mut Row, m: &RelayQueueMetrics, r: &PerformanceReport) {
    row.mu = Some(m.mu);
    row.q0_min = Some(m.q0_min.value());
    row.stable = if m.stable { "yes" } else { "no" }.into();
    if m.stable {
        row.lambda = Some(m.lambda);
        row.p_empty = Some(m.p_empty);
        row.q_bar = Some(m.q_bar);
    } else {
        row.status = Status::Unstable;
        row.lambda = Some(m.lambda1);
        row.message = format!("drift surplus {}", format_number(m.drift_surplus()));
    }
    let u = r.users.first().copied().unwrap_or_default();
    row.t_direct = Some(u.t_direct);
    row.t_relayed = Some(u.t_relayed);
    row.t_user = Some(u.t_total);
    row.t_aggr = Some(r.t_aggr);
    row.relayed_fraction = r.relayed_fraction;
    row.d_queue = r.d_queue.finite();
    row.d_relay = r.d_relay.finite();
    row.delay = r.delay.first().and_then(Delay::finite);
}

fn run_point(spec: &ExperimentSpec, index: usize, point: SymmetricParams) -> PointOutcome {
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    let mut issue = |engine, message: String| {
        issues.push(Issue {
            index,
            engine,
            point,
            message,
        })
    };
    let params = point.to_network();
    let baseline = no_relay_baseline(&params).ok();
    let with_baseline = |mut row: Row| {
        if let Some(b) = &baseline {
            row.baseline_t = b.throughput.first().copied();
            row.baseline_delay = b.delay.first().and_then(Delay::finite);
        }
        row
    };

    let analysis = build_success_table(&params, spec.table_mode).and_then(|t| {
        let (d, m) = analyze(&params, &t)?;
        let r = performance_report(&t, &params, &m, spec.delay_convention)?;
        Ok((t, d, m, r))
    });

    for &engine in &spec.engines {
        let row = match engine {
            Engine::Analytical => match &analysis {
                Ok((_, _, m, r)) => {
                    let mut row = Row::empty(index, engine, point);
                    fill_report(&mut row, m, r);
                    row
                }
                Err(e) => Row::error(index, engine, point, e),
            },
            Engine::Dtmc => match &analysis {
                Err(e) => Row::error(index, engine, point, e),
                Ok((t, d, m, _)) if m.stable => match dtmc_steady_state_auto(d, DTMC_MAX_LEVELS) {
                    Ok(s) => {
                        let lambda = s.p_empty * d.lambda0 + (1.0 - s.p_empty) * d.lambda1;
                        let dm = RelayQueueMetrics {
                            p_empty: s.p_empty,
                            q_bar: s.mean,
                            lambda,
                            ..m.clone()
                        };
                        let gap_p = (s.p_empty - m.p_empty).abs();
                        let gap_q = (s.mean - m.q_bar).abs();
                        if gap_p > DTMC_TOLERANCE {
                            issue(engine, format!("P(Q=0) differs by {gap_p:.3e}"));
                        }
                        if gap_q > DTMC_TOLERANCE * m.q_bar.max(1.0) {
                            issue(engine, format!("mean queue length differs by {gap_q:.3e}"));
                        }
                        match performance_report(t, &params, &dm, spec.delay_convention) {
                            Ok(r) => {
                                let mut row = Row::empty(index, engine, point);
                                fill_report(&mut row, &dm, &r);
                                row.message = format!("tail mass {}", format_number(s.tail_mass));
                                row
                            }
                            Err(e) => Row::error(index, engine, point, &e),
                        }
                    }
                    Err(e) => {
                        issue(engine, e.to_string());
                        Row::error(index, engine, point, &e)
                    }
                },
                Ok((_, _, m, r)) => {
                    let mut row = Row::empty(index, engine, point);
                    fill_report(&mut row, m, r);
                    row.message = "no stationary law".into();
                    row
                }
            },
            Engine::Enumeration => match (&analysis, &enumerate_drift(&params)) {
                (_, Err(e)) | (Err(e), _) => Row::error(index, engine, point, e),
                (Ok((t, d, m, _)), Ok(de)) => {
                    let gap = drift_gap(d, de);
                    if gap > ENUMERATION_TOLERANCE {
                        issue(engine, format!("drift differs by {gap:.3e}"));
                    }
                    let mu = de.net_service() + de.lambda1;
                    let em = metrics_from_drift(de, mu, m.q0_min);
                    match performance_report(t, &params, &em, spec.delay_convention) {
                        Ok(r) => {
                            let mut row = Row::empty(index, engine, point);
                            fill_report(&mut row, &em, &r);
                            if em.stable {
                                row.message = format!("max drift gap {}", format_number(gap));
                            }
                            row
                        }
                        Err(e) => Row::error(index, engine, point, &e),
                    }
                }
            },
            Engine::Simulation => {
                let sim = SimConfig {
                    seed: spec.sim.seed.wrapping_add(index as u64),
                    ..spec.sim
                };
                match run_simulation(&params, &sim) {
                    Ok(s) => {
                        if let Ok((_, _, m, r)) = &analysis {
                            for msg in simulation_gaps(&s, m, r, spec.sigma) {
                                issue(engine, msg);
                            }
                        }
                        simulation_row(index, point, &s)
                    }
                    Err(e) => Row::error(index, engine, point, &e),
                }
            }
        };
        rows.push(with_baseline(row));
    }
    PointOutcome { rows, issues }
}

fn drift_gap(a: &crate::drift::DriftDistribution, b: &crate::drift::DriftDistribution) -> f64 {
    let v = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    v(&a.r0, &b.r0)
        .max(v(&a.r1, &b.r1))
        .max(v(&a.p1, &b.p1))
        .max((a.p_minus1 - b.p_minus1).abs())
}

fn simulation_row(index: usize, point: SymmetricParams, s: &SimResult) -> Row {
    let verdict = stability_probe(s);
    let u = &s.user_mean;
    let mut row = Row::empty(index, Engine::Simulation, point);
    row.stable = verdict.as_str().into();
    row.mu = Some(s.mu.mean);
    row.lambda = Some(s.lambda.mean);
    row.p_empty = Some(s.p_empty.mean);
    row.q_bar = Some(s.q_bar.mean);
    row.t_direct = Some(u.t_direct.mean);
    row.t_relayed = Some(u.t_relayed.mean);
    row.t_user = Some(u.t_total.mean);
    row.t_aggr = Some(s.t_aggr.mean);
    row.relayed_fraction = Some(s.relayed_fraction.mean).filter(|x| x.is_finite());
    row.se = Some(RowErrors {
        mu: s.mu.se,
        lambda: s.lambda.se,
        p_empty: s.p_empty.se,
        q_bar: s.q_bar.se,
        t_direct: u.t_direct.se,
        t_relayed: u.t_relayed.se,
        t_user: u.t_total.se,
        t_aggr: s.t_aggr.se,
        delay: u.delay.se,
    });
    if verdict == StabilityVerdict::Unstable {
        row.status = Status::Unstable;
        row.message = format!("queue grows {} per slot", format_number(s.trace.slope));
    } else {
        row.delay = Some(u.delay.mean).filter(|x| x.is_finite());
    }
    row.message = if row.message.is_empty() {
        format!("{} sampling, seed {}", s.config.mode.as_str(), s.config.seed)
    } else {
        format!(
            "{}; {} sampling, seed {}",
            row.message,
            s.config.mode.as_str(),
            s.config.seed
        )
    };
    row
}

/// Every simulated mean that misses its analytical value by more than
/// `sigma` standard errors, plus any contradicting stability verdict.
///
/// Mean queue length and delay depend on the joint law of the receptions
/// in a slot, which SINR sampling does not reproduce, so they are only
/// compared in probability-sampling mode.
pub fn simulation_gaps(s: &SimResult, m: &RelayQueueMetrics, r: &PerformanceReport, sigma: f64) -> Vec<String> {
    let mut out = Vec::new();
    let verdict = stability_probe(s);
    match (verdict, m.stable) {
        (StabilityVerdict::Unstable, true) => out.push("probe says unstable, analysis says stable".into()),
        (StabilityVerdict::Stable, false) => out.push("probe says stable, analysis says unstable".into()),
        _ => {}
    }
    let u = r.users.first().copied().unwrap_or_default();
    let mut check = |name: &str, e: &Estimate, want: f64| {
        if !e.within(want, sigma) {
            out.push(format!(
                "{name} {} vs {} ({:.2} SE)",
                format_number(e.mean),
                format_number(want),
                e.z(want)
            ));
        }
    };
    check("mu", &s.mu, m.mu);
    if m.stable {
        check("lambda", &s.lambda, m.lambda);
        check("P(Q=0)", &s.p_empty, m.p_empty);
        check("T_D", &s.user_mean.t_direct, u.t_direct);
        check("T_R", &s.user_mean.t_relayed, u.t_relayed);
        check("T", &s.user_mean.t_total, u.t_total);
        if s.config.mode == SamplingMode::Probability {
            check("Q", &s.q_bar, m.q_bar);
            if let Some(d) = r.delay.first().and_then(Delay::finite) {
                check("D", &s.user_mean.delay, d);
            }
        }
    } else {
        check("T_aggr", &s.t_aggr, r.t_aggr);
    }
    out
}

/// Runs every engine at every sweep point on the rayon pool. Rows come
/// back in sweep order regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut spec = spec.clone();
    spec.validate()?;
    let points = spec.points();
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_point(&spec, i, *p))
        .collect();
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        issues.extend(o.issues);
    }
    let mut csv = String::with_capacity(256 * (rows.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    let summary = summarize(&spec, points.len(), &rows, &issues);
    Ok(ExperimentOutput {
        rows,
        issues,
        csv,
        summary,
    })
}

fn summarize(spec: &ExperimentSpec, points: usize, rows: &[Row], issues: &[Issue]) -> String {
    let mut s = String::new();
    let engines: Vec<&str> = spec.engines.iter().map(Engine::as_str).collect();
    let _ = writeln!(s, "points: {points}");
    let _ = writeln!(s, "engines: {}", engines.join(", "));
    if spec.engines.contains(&Engine::Simulation) {
        let _ = writeln!(
            s,
            "simulation: {} slots, warmup {}, {} batches, {} sampling, base seed {}",
            spec.sim.slots,
            spec.sim.warmup,
            spec.sim.batches,
            spec.sim.mode.as_str(),
            spec.sim.seed
        );
    }
    for status in [Status::Ok, Status::Unstable, Status::Error] {
        let k = rows.iter().filter(|r| r.status == status).count();
        let _ = writeln!(s, "rows {}: {k}", status.as_str());
    }
    for r in rows.iter().filter(|r| r.status == Status::Error) {
        let _ = writeln!(s, "  error at point {} ({}): {}", r.index, r.engine.as_str(), r.message);
    }
    let _ = writeln!(
        s,
        "tolerances: dtmc {DTMC_TOLERANCE:e}, enumeration {ENUMERATION_TOLERANCE:e}, simulation {} SE",
        spec.sigma
    );
    let _ = writeln!(s, "disagreements: {}", issues.len());
    for i in issues {
        let _ = writeln!(s, "  {i}");
    }
    s
}

/// Writes `<prefix>.csv` and `<prefix>_summary.txt` into `dir`.
pub fn write_artifacts(out: &ExperimentOutput, dir: &Path, prefix: &str) -> Result<(PathBuf, PathBuf)> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let csv = dir.join(format!("{prefix}.csv"));
    let summary = dir.join(format!("{prefix}_summary.txt"));
    std::fs::write(&csv, &out.csv).map_err(io)?;
    std::fs::write(&summary, &out.summary).map_err(io)?;
    Ok((csv, summary))
}
