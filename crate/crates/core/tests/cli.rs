use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdrelay::experiment::CSV_HEADER;

fn fdrelay(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fdrelay"));
    cmd.args(args).env_remove("FDRELAY_OUT_DIR");
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Splits a CSV line, honouring double quotes.
fn fields(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                out.last_mut().unwrap().push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(String::new()),
            _ => out.last_mut().unwrap().push(c),
        }
    }
    out
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn help_and_usage_errors() {
    let help = fdrelay(&["--help"], None);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["run", "sweep", "figure", "validate"] {
        assert!(stdout(&help).contains(sub));
    }
    assert_eq!(fdrelay(&["--version"], None).status.code(), Some(0));
    assert_eq!(fdrelay(&["transmogrify"], None).status.code(), Some(1));
    assert_eq!(fdrelay(&["sweep"], None).status.code(), Some(1));
}

#[test]
fn run_prints_the_reference_point() {
    let dir = scratch("run");
    let o = fdrelay(&["run"], Some(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("n=2 q=0.1 q0=0.99 gamma=0.6 g=1e-8"), "{text}");
    assert!(text.contains("[analytical] OK"));
    assert!(text.lines().any(|l| l.trim_start().starts_with("mu ")));
    assert!(dir.join("fdrelay.csv").exists());
    assert!(dir.join("fdrelay_summary.txt").exists());
}

#[test]
fn run_refuses_a_sweep() {
    let dir = scratch("run-sweep");
    let cfg = write_config(&dir, "n = [1..3]\n");
    let o = fdrelay(&["run", cfg.to_str().unwrap()], Some(&dir));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep"));
}

#[test]
fn sweep_writes_one_row_per_point_and_engine() {
    let dir = scratch("sweep");
    let cfg = write_config(
        &dir,
        "# two axes\nn = [1..4]\ngamma = [0.6, 2.5]\n[run]\nengines = [analytical, dtmc, enumeration]\n[output]\nprefix = \"grid\"\n",
    );
    let o = fdrelay(&["sweep", cfg.to_str().unwrap()], Some(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("disagreements: 0"));

    let csv = std::fs::read_to_string(dir.join("grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let width = CSV_HEADER.split(',').count();
    let rows: Vec<Vec<String>> = lines.map(fields).collect();
    assert_eq!(rows.len(), 4 * 2 * 3);
    for r in &rows {
        assert_eq!(r.len(), width, "{r:?}");
        assert_eq!(r[1], "OK");
    }
    // analytical and oracle rows agree on the printed service rate
    for point in rows.chunks(3) {
        assert_eq!(point[0][7], point[1][7]);
        assert_eq!(point[0][7], point[2][7]);
    }
}

#[test]
fn sweep_reports_unstable_points() {
    let dir = scratch("unstable");
    let cfg = write_config(
        &dir,
        "n = 20\ngamma = 0.2\ng = 1e-10\nq0 = 0.95\nengines = [analytical, dtmc]\n",
    );
    let o = fdrelay(&["sweep", cfg.to_str().unwrap()], Some(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("fdrelay.csv")).unwrap();
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for row in csv.lines().skip(1).map(fields) {
        assert_eq!(row[col("status")], "UNSTABLE");
        assert_eq!(row[col("stable")], "no");
        assert_eq!(row[col("delay")], "");
        assert!(row[col("t_aggr")].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn simulation_sweep_is_reproducible() {
    let cfg_text = "n = [2, 6]\ngamma = 1.2\nengines = [analytical, simulation]\nsim.slots = 60000\nsim.seed = 42\n";
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let dir = scratch(&format!("repro-{run}"));
        let cfg = write_config(&dir, cfg_text);
        let o = fdrelay(&["sweep", cfg.to_str().unwrap()], Some(&dir));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        csvs.push(std::fs::read(dir.join("fdrelay.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);

    // a different seed changes the simulated rows only
    let dir = scratch("repro-c");
    let cfg = write_config(&dir, cfg_text);
    let o = fdrelay(&["sweep", cfg.to_str().unwrap(), "--seed", "43"], Some(&dir));
    assert_eq!(o.status.code(), Some(0));
    let other = std::fs::read_to_string(dir.join("fdrelay.csv")).unwrap();
    let first = String::from_utf8(csvs[0].clone()).unwrap();
    for (a, b) in first.lines().zip(other.lines()) {
        assert_eq!(a == b, !a.starts_with("simulation"), "{a}\n{b}");
    }
}

#[test]
fn config_errors_name_the_line() {
    let dir = scratch("bad-config");
    let cfg = write_config(&dir, "q = 0.1\n\nq0 = 0.9\nbogus = 3\n");
    let o = fdrelay(&["sweep", cfg.to_str().unwrap()], Some(&dir));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let cfg = write_config(&dir, "q0 = 1.5\n");
    let o = fdrelay(&["sweep", cfg.to_str().unwrap()], Some(&dir));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("q0"));

    let o = fdrelay(&["sweep", dir.join("missing.cfg").to_str().unwrap()], Some(&dir));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn figure_preset_covers_the_grid() {
    let dir = scratch("figure");
    let o = fdrelay(&["figure", "thr-vs-n", "--gamma", "0.2"], Some(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("thr-vs-n-gamma0.2.csv")).unwrap();
    // 50 user counts, 3 self-interference levels, 2 relay access probabilities
    assert_eq!(csv.lines().count(), 1 + 50 * 3 * 2);
    assert!(csv.contains(",UNSTABLE,"));
    assert_eq!(
        fdrelay(&["figure", "no-such-figure"], Some(&dir)).status.code(),
        Some(1)
    );
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch("env");
    let o = Command::new(env!("CARGO_BIN_EXE_fdrelay"))
        .arg("run")
        .env("FDRELAY_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.join("fdrelay.csv").exists());
}

#[test]
fn validate_with_a_single_oracle() {
    let dir = scratch("validate");
    let o = fdrelay(&["validate", "--engines", "analytical,enumeration"], Some(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("disagreements: 0"));
    let o = fdrelay(&["validate", "--engines", "analytical"], Some(&dir));
    assert_eq!(o.status.code(), Some(1));
}
