//! Experiment configuration.
//!
//! The format is line oriented:
//!
//! ```text
//! # comment
//! gamma = [0.2, 0.6]        # a list makes a sweep axis
//! n = [1..50]               # inclusive integer range
//! q0 = 0.95
//!
//! [sim]                     # section header, same as `sim.` prefixes
//! slots = 1e6
//! mode = probability
//!
//! run.engines = [analytical, dtmc]
//! ```
//!
//! Keys without a section, or under `[network]`, describe the network.
//! `n`, `q`, `q0`, `gamma` and `g` accept lists; every other key takes a
//! single value. Unknown keys are rejected.

use crate::error::{Error, Result};
use crate::metrics::DelayConvention;
use crate::params::SymmetricParams;
use crate::phy::TableMode;
use crate::sim::{default_warmup, SimConfig};

/// Default bound on the number of sweep points.
pub const DEFAULT_MAX_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Analytical,
    Dtmc,
    Enumeration,
    Simulation,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::Analytical,
        Engine::Dtmc,
        Engine::Enumeration,
        Engine::Simulation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Analytical => "analytical",
            Engine::Dtmc => "dtmc",
            Engine::Enumeration => "enumeration",
            Engine::Simulation => "simulation",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::domain("engines", format!("unknown engine `{s}`")))
    }
}

/// Parses a comma-separated engine list such as `analytical,dtmc`.
pub fn parse_engines(s: &str) -> Result<Vec<Engine>> {
    let mut v = s
        .split(',')
        .map(|x| x.trim().parse())
        .collect::<Result<Vec<Engine>>>()?;
    v.sort();
    v.dedup();
    if v.is_empty() {
        return Err(Error::domain("engines", "at least one engine is required"));
    }
    Ok(v)
}

/// Value lists of the sweepable coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub n: Vec<usize>,
    pub q: Vec<f64>,
    pub q0: Vec<f64>,
    pub gamma: Vec<f64>,
    pub g: Vec<f64>,
}

impl Axes {
    fn of(base: &SymmetricParams) -> Self {
        Self {
            n: vec![base.n],
            q: vec![base.q],
            q0: vec![base.q0],
            gamma: vec![base.gamma_d],
            g: vec![base.g],
        }
    }

    pub fn len(&self) -> usize {
        [
            self.n.len(),
            self.q.len(),
            self.q0.len(),
            self.gamma.len(),
            self.g.len(),
        ]
        .iter()
        .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SymmetricParams,
    pub axes: Axes,
    pub engines: Vec<Engine>,
    pub sim: SimConfig,
    pub table_mode: TableMode,
    pub delay_convention: DelayConvention,
    /// File name prefix for the CSV and summary.
    pub prefix: String,
    pub max_points: usize,
    /// Simulation rows deviating by more than this many standard errors
    /// are listed in the summary.
    pub sigma: f64,
}

pub const DEFAULT_SIM_SLOTS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SIGMA: f64 = 3.0;

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = SymmetricParams::default();
        Self {
            axes: Axes::of(&base),
            base,
            engines: vec![Engine::Analytical],
            sim: SimConfig::new(DEFAULT_SIM_SLOTS, DEFAULT_SEED),
            table_mode: TableMode::default(),
            delay_convention: DelayConvention::default(),
            prefix: "fdrelay".into(),
            max_points: DEFAULT_MAX_POINTS,
            sigma: DEFAULT_SIGMA,
        }
    }
}

impl ExperimentSpec {
    /// Sweep points in coordinate order.
    pub fn points(&self) -> Vec<SymmetricParams> {
        let a = &self.axes;
        let mut out = Vec::with_capacity(a.len());
        for &n in &a.n {
            for &q in &a.q {
                for &q0 in &a.q0 {
                    for &gamma in &a.gamma {
                        for &g in &a.g {
                            let mut p = self.base;
                            p.n = n;
                            p.q = q;
                            p.q0 = q0;
                            p.g = g;
                            out.push(p.with_gamma(gamma));
                        }
                    }
                }
            }
        }
        out
    }

    /// Sets the simulation length, rescaling a default warmup with it.
    pub fn set_slots(&mut self, slots: u64) {
        if self.sim.warmup == default_warmup(self.sim.slots) {
            self.sim.warmup = default_warmup(slots);
        }
        self.sim.slots = slots;
    }

    /// Sorts and dedupes the axes, then checks every constraint.
    pub fn validate(&mut self) -> Result<()> {
        let a = &mut self.axes;
        a.n.sort_unstable();
        a.n.dedup();
        for v in [&mut a.q, &mut a.q0, &mut a.gamma, &mut a.g] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        for (name, empty) in [
            ("n", a.n.is_empty()),
            ("q", a.q.is_empty()),
            ("q0", a.q0.is_empty()),
            ("gamma", a.gamma.is_empty()),
            ("g", a.g.is_empty()),
        ] {
            if empty {
                return Err(Error::domain(name, "empty value list"));
            }
        }
        if a.n[0] == 0 {
            return Err(Error::domain("n", "at least one user is required"));
        }
        for (name, values) in [("q", &a.q), ("q0", &a.q0), ("g", &a.g)] {
            if let Some(x) = values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::domain(name, format!("{x} is not in [0, 1]")));
            }
        }
        if let Some(x) = a.gamma.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::domain("gamma", format!("{x} must be non-negative")));
        }
        if self.engines.is_empty() {
            return Err(Error::domain("engines", "at least one engine is required"));
        }
        if a.len() > self.max_points {
            return Err(Error::domain(
                "sweep",
                format!("{} points exceed the cap of {}", a.len(), self.max_points),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain("sigma", "must be positive"));
        }
        if self.prefix.is_empty() || self.prefix.contains(['/', '\\']) {
            return Err(Error::domain("output.prefix", "must be a plain file name"));
        }
        if self.engines.contains(&Engine::Simulation) {
            self.sim.validate()?;
        }
        for p in self.points().iter().take(1) {
            p.to_network().validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn strip_comment(s: &str) -> &str {
    let mut quoted = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &s[..i],
            _ => {}
        }
    }
    s
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(syntax(line, "missing value"));
    }
    let Some(inner) = raw.strip_prefix('[') else {
        return Ok(Value::Scalar(unquote(raw, line)?));
    };
    let inner = inner
        .strip_suffix(']')
        .ok_or_else(|| syntax(line, "unterminated list"))?
        .trim();
    if let Some((lo, hi)) = inner.split_once("..") {
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| syntax(line, format!("bad range start `{}`", lo.trim())))?;
        let hi: i64 = hi
            .trim()
            .parse()
            .map_err(|_| syntax(line, format!("bad range end `{}`", hi.trim())))?;
        if lo > hi {
            return Err(syntax(line, format!("empty range {lo}..{hi}")));
        }
        return Ok(Value::List((lo..=hi).map(|v| v.to_string()).collect()));
    }
    if inner.is_empty() {
        return Ok(Value::List(vec![]));
    }
    inner
        .split(',')
        .map(|x| unquote(x.trim(), line))
        .collect::<Result<_>>()
        .map(Value::List)
}

fn unquote(s: &str, line: usize) -> Result<String> {
    if s.is_empty() {
        return Err(syntax(line, "empty list element"));
    }
    if let Some(rest) = s.strip_prefix('"') {
        return rest
            .strip_suffix('"')
            .map(str::to_owned)
            .ok_or_else(|| syntax(line, "unterminated string"));
    }
    Ok(s.to_owned())
}

fn number(field: &str, s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| syntax(line, format!("`{field}`: `{s}` is not a number")))
}

fn count(field: &str, s: &str, line: usize) -> Result<u64> {
    let x = number(field, s, line)?;
    if !(x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64) {
        return Err(Error::domain(field, format!("{s} is not a non-negative integer")));
    }
    Ok(x as u64)
}

fn boolean(field: &str, s: &str, line: usize) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(syntax(line, format!("`{field}`: `{s}` is not true or false"))),
    }
}

fn numbers(field: &str, v: &Value, line: usize) -> Result<Vec<f64>> {
    match v {
        Value::Scalar(s) => Ok(vec![number(field, s, line)?]),
        Value::List(xs) => xs.iter().map(|s| number(field, s, line)).collect(),
    }
}

fn scalar<'a>(field: &str, v: &'a Value, line: usize) -> Result<&'a str> {
    match v {
        Value::Scalar(s) => Ok(s),
        Value::List(_) => Err(syntax(line, format!("`{field}` takes a single value"))),
    }
}

/// Parses a configuration document into a validated experiment. An empty
/// document yields the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    let mut section = String::new();
    let mut warmup_set = false;
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(h) = s.strip_prefix('[') {
            let name = h
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, "unterminated section header"))?
                .trim();
            if !["network", "sim", "run", "output"].contains(&name) {
                return Err(syntax(line, format!("unknown section `{name}`")));
            }
            section = if name == "network" {
                String::new()
            } else {
                format!("{name}.")
            };
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| syntax(line, "expected `key = value`"))?;
        let mut key = format!("{section}{}", k.trim());
        if let Some(rest) = key.strip_prefix("network.") {
            key = rest.to_owned();
        }
        if key == "engines" {
            key = "run.engines".into();
        }
        let value = parse_value(v, line)?;
        if !seen.insert(key.clone()) {
            return Err(syntax(line, format!("duplicate key `{key}`")));
        }
        apply(&mut spec, &key, &value, line, &mut warmup_set)?;
    }
    if !warmup_set {
        spec.sim.warmup = default_warmup(spec.sim.slots);
    }
    spec.validate()?;
    Ok(spec)
}

fn apply(spec: &mut ExperimentSpec, key: &str, value: &Value, line: usize, warmup_set: &mut bool) -> Result<()> {
    let b = &mut spec.base;
    let one = |v: &Value| -> Result<f64> { number(key, scalar(key, v, line)?, line) };
    match key {
        "n" => {
            spec.axes.n = numbers(key, value, line)?
                .into_iter()
                .map(|x| {
                    if x >= 1.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::domain("n", format!("{x} is not a positive integer")))
                    }
                })
                .collect::<Result<_>>()?;
            b.n = spec.axes.n.first().copied().unwrap_or(b.n);
        }
        "q" => spec.axes.q = numbers(key, value, line)?,
        "q0" => spec.axes.q0 = numbers(key, value, line)?,
        "gamma" => spec.axes.gamma = numbers(key, value, line)?,
        "g" => spec.axes.g = numbers(key, value, line)?,
        "r_d" => b.r_d = one(value)?,
        "r_0" => b.r_0 = one(value)?,
        "r_0d" => b.r_0d = one(value)?,
        "alpha" => b.alpha = one(value)?,
        "eta" => {
            b.eta_0 = one(value)?;
            b.eta_d = b.eta_0;
        }
        "eta_0" => b.eta_0 = one(value)?,
        "eta_d" => b.eta_d = one(value)?,
        "p_tx_user" => b.p_tx_user = one(value)?,
        "p_tx_relay" => b.p_tx_relay = one(value)?,
        "v_d" => b.v_d = one(value)?,
        "v_0" => b.v_0 = one(value)?,
        "v_0d" => b.v_0d = one(value)?,
        "sim.slots" => spec.sim.slots = count(key, scalar(key, value, line)?, line)?,
        "sim.warmup" => {
            spec.sim.warmup = count(key, scalar(key, value, line)?, line)?;
            *warmup_set = true;
        }
        "sim.seed" => spec.sim.seed = count(key, scalar(key, value, line)?, line)?,
        "sim.batches" => spec.sim.batches = count(key, scalar(key, value, line)?, line)? as usize,
        "sim.mode" => spec.sim.mode = scalar(key, value, line)?.parse()?,
        "sim.probe" => spec.sim.stability_probe = boolean(key, scalar(key, value, line)?, line)?,
        "run.engines" => {
            let names = match value {
                Value::Scalar(s) => vec![s.clone()],
                Value::List(v) => v.clone(),
            };
            spec.engines = parse_engines(&names.join(","))?;
        }
        "run.max_points" => spec.max_points = count(key, scalar(key, value, line)?, line)? as usize,
        "run.table_mode" => spec.table_mode = scalar(key, value, line)?.parse()?,
        "run.delay_convention" => spec.delay_convention = scalar(key, value, line)?.parse()?,
        "run.sigma" => spec.sigma = one(value)?,
        "output.prefix" => spec.prefix = scalar(key, value, line)?.to_owned(),
        _ => return Err(syntax(line, format!("unknown key `{key}`"))),
    }
    Ok(())
}
