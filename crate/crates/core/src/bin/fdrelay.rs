use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdrelay::experiment::{
    figure_spec, format_number, parse_config, parse_engines, run_experiment, validate_spec, write_artifacts, Engine,
    ExperimentOutput, ExperimentSpec, Figure, Row, CSV_HEADER, OUT_DIR_ENV,
};
use fdrelay::{Error, SamplingMode};

/// Full-duplex relay random-access model: analysis, oracles and simulation.
#[derive(Parser)]
#[command(name = "fdrelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single configuration and print the results.
    Run {
        /// Configuration file; defaults apply when omitted.
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every point of a sweep and write CSV plus summary.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write the CSV for one figure family.
    Figure {
        /// thr-vs-n, delay-vs-n, queue-vs-n or relayed-vs-n.
        preset: String,
        #[arg(long, default_value_t = 0.6)]
        gamma: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Check the closed forms against enumeration, the Markov chain and
    /// simulation; exits with status 2 on any disagreement.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Base simulation seed; point i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated slots per point.
    #[arg(long)]
    slots: Option<u64>,
    /// Comma-separated engines: analytical, dtmc, enumeration, simulation.
    #[arg(long)]
    engines: Option<String>,
    /// Output directory (default: $FDRELAY_OUT_DIR or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation sampling mode: probability or sinr.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn apply(&self, spec: &mut ExperimentSpec) -> Result<(), Error> {
        if let Some(s) = self.seed {
            spec.sim.seed = s;
        }
        if let Some(s) = self.slots {
            spec.set_slots(s);
        }
        if let Some(e) = &self.engines {
            spec.engines = parse_engines(e)?;
        }
        if let Some(m) = &self.mode {
            spec.sim.mode = m.parse::<SamplingMode>()?;
        }
        spec.validate()
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn read_config(path: &Path) -> Result<ExperimentSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn emit(out: &ExperimentOutput, dir: &Path, prefix: &str) -> Result<(), Error> {
    let (csv, summary) = write_artifacts(out, dir, prefix)?;
    print!("{}", out.summary);
    println!("wrote {}", csv.display());
    println!("wrote {}", summary.display());
    Ok(())
}

fn print_row(row: &Row) {
    println!("[{}] {}", row.engine.as_str(), row.status.as_str());
    let fields: Vec<&str> = CSV_HEADER.split(',').collect();
    for (name, value) in fields.iter().zip(row.cells()).skip(7) {
        if !value.is_empty() {
            println!("  {name:<17} {value}");
        }
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config, common } => {
            let mut spec = match &config {
                Some(p) => read_config(p)?,
                None => ExperimentSpec::default(),
            };
            common.apply(&mut spec)?;
            if spec.axes.len() != 1 {
                return Err(Error::domain(
                    "sweep",
                    format!(
                        "`run` takes a single point, the config has {}; use `sweep`",
                        spec.axes.len()
                    ),
                ));
            }
            let out = run_experiment(&spec)?;
            let p = &spec.points()[0];
            println!(
                "n={} q={} q0={} gamma={} g={}",
                p.n,
                format_number(p.q),
                format_number(p.q0),
                format_number(p.gamma_d),
                format_number(p.g)
            );
            for row in &out.rows {
                print_row(row);
            }
            write_artifacts(&out, &common.out_dir(), &spec.prefix)?;
            Ok(0)
        }
        Command::Sweep { config, common } => {
            let mut spec = read_config(&config)?;
            common.apply(&mut spec)?;
            let out = run_experiment(&spec)?;
            emit(&out, &common.out_dir(), &spec.prefix)?;
            Ok(0)
        }
        Command::Figure { preset, gamma, common } => {
            let figure: Figure = preset.parse()?;
            let mut spec = figure_spec(figure, gamma);
            common.apply(&mut spec)?;
            let out = run_experiment(&spec)?;
            emit(&out, &common.out_dir(), &spec.prefix)?;
            Ok(0)
        }
        Command::Validate { common } => {
            let mut spec = validate_spec();
            common.apply(&mut spec)?;
            if !spec.engines.iter().any(|e| *e != Engine::Analytical) {
                return Err(Error::domain("engines", "validation needs at least one oracle engine"));
            }
            let out = run_experiment(&spec)?;
            emit(&out, &common.out_dir(), &spec.prefix)?;
            Ok(if out.issues.is_empty() { 0 } else { EXIT_VALIDATION })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
