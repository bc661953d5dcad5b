//! Command-line entry points and output layout.
//!
//! Every command writes its files atomically (temporary file, then rename)
//! and leaves a `manifest.json` next to them, also when it fails.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{default_config, validate, SystemConfig};
use crate::error::{Result, SimError};
use crate::metrics::{
    default_npm_grid, default_p_pm_values, default_r_values, default_theta_grid, sweep_npm, sweep_theta,
    write_csv,
};
use crate::oracle::{conformance, estimate_terms, ConformanceRow, MIN_TRIALS};
use crate::scenario::Deployment;
use crate::sinr::{suspected_terms, FormVariant, Receiver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_CONFORMANCE: i32 = 4;
/// Largest |z| accepted by `conformance`.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "cf-isac", version, about = "Cell-free ISAC simulator with a proactive monitor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config and list every violation.
    Validate(CommonArgs),
    /// Compare closed-form terms with the Monte Carlo oracle.
    Conformance {
        #[command(flatten)]
        common: CommonArgs,
        /// Monte Carlo trials per topology (default: mc_trials from the config).
        #[arg(long)]
        trials: Option<usize>,
        /// Number of topologies (default 1).
        #[arg(long, default_value_t = 1)]
        topologies: usize,
        /// Judge the as-printed closed forms instead of the corrected ones.
        #[arg(long)]
        strict_as_printed: bool,
    },
    /// Run an MSP/SDP sweep.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        sweep: SweepKind,
        /// Topologies per grid point (default: topo_draws from the config).
        #[arg(long)]
        topologies: Option<usize>,
        /// Evaluate the as-printed closed forms.
        #[arg(long)]
        strict_as_printed: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Theta,
    Npm,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set n_ant_pm=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    pub fn resolve_config(&self) -> Result<SystemConfig> {
        let base = match &self.config {
            Some(p) => SystemConfig::load(p)?,
            None => default_config(),
        };
        let mut cfg = base.with_overrides(self.overrides.iter().map(String::as_str))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<SystemConfig>,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub error: Option<String>,
}

fn version_string() -> String {
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    match git {
        Some(g) if !g.is_empty() => format!("{} ({g})", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| SimError::Io(e.error))?;
    Ok(())
}

fn exit_code_for(e: &SimError) -> i32 {
    match e {
        SimError::InvalidConfig(_) | SimError::Parse(_) | SimError::UnknownKey(_) => EXIT_USAGE,
        SimError::Precondition(_) => EXIT_PRECONDITION,
        _ => EXIT_FAILURE,
    }
}

struct Outcome {
    code: i32,
    outputs: Vec<PathBuf>,
    note: Option<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let (name, common) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::Conformance { common, .. } => ("conformance", common),
        Command::Sweep { common, .. } => ("sweep", common),
    };
    let started = Utc::now();
    let cfg = common.resolve_config();

    let outcome = match (&cli.command, &cfg) {
        (Command::Validate(_), Ok(c)) => cmd_validate(c),
        (_, Err(e)) => Outcome {
            code: exit_code_for(e),
            outputs: Vec::new(),
            note: Some(e.to_string()),
        },
        (cmd, Ok(c)) => {
            let violations = validate(c);
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("config violation: {v}");
                }
                Outcome {
                    code: EXIT_USAGE,
                    outputs: Vec::new(),
                    note: Some(format!("{} config violation(s)", violations.len())),
                }
            } else {
                with_pool(common.threads, || match cmd {
                    Command::Conformance {
                        trials,
                        topologies,
                        strict_as_printed,
                        ..
                    } => cmd_conformance(c, trials.unwrap_or(c.mc_trials), *topologies, *strict_as_printed, &common.out),
                    Command::Sweep {
                        sweep,
                        topologies,
                        strict_as_printed,
                        ..
                    } => cmd_sweep(c, *sweep, topologies.unwrap_or(c.topo_draws), *strict_as_printed, &common.out),
                    Command::Validate(_) => unreachable!("validate handled above"),
                })
            }
        }
    };

    if let Some(n) = &outcome.note {
        eprintln!("{name}: {n}");
    }
    if name != "validate" {
        let manifest = RunManifest {
            command: name.to_string(),
            config: cfg.as_ref().ok().cloned(),
            seed: cfg.as_ref().ok().map(|c| c.seed),
            version: version_string(),
            started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
            exit_code: outcome.code,
            error: outcome.note.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        if let Err(e) = write_atomic(&common.out.join("manifest.json"), text.as_bytes()) {
            eprintln!("{name}: could not write manifest: {e}");
            if outcome.code == EXIT_OK {
                return EXIT_FAILURE;
            }
        }
    }
    outcome.code
}

fn with_pool(threads: Option<usize>, f: impl FnOnce() -> Outcome + Send) -> Outcome {
    match threads {
        None => f(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(e) => Outcome {
                code: EXIT_FAILURE,
                outputs: Vec::new(),
                note: Some(format!("thread pool: {e}")),
            },
        },
    }
}

fn cmd_validate(cfg: &SystemConfig) -> Outcome {
    let v = validate(cfg);
    if v.is_empty() {
        println!("config ok");
        Outcome { code: EXIT_OK, outputs: Vec::new(), note: None }
    } else {
        for x in &v {
            println!("{x}");
        }
        Outcome {
            code: EXIT_USAGE,
            outputs: Vec::new(),
            note: Some(format!("{} config violation(s)", v.len())),
        }
    }
}

fn fail(e: SimError, outputs: Vec<PathBuf>) -> Outcome {
    Outcome {
        code: exit_code_for(&e),
        outputs,
        note: Some(e.to_string()),
    }
}

fn row_label(receiver: Receiver, term: &str, topo: Option<u64>) -> String {
    let base = match receiver {
        Receiver::Ue(_) => format!("{receiver}/{term}"),
        _ => term.to_string(),
    };
    match topo {
        Some(t) => format!("t{t}/{base}"),
        None => base,
    }
}

fn conformance_csv(rows: &[(Option<u64>, &ConformanceRow)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["term", "closed_form", "oracle_mean", "oracle_stderr", "z_score"])?;
    for (t, r) in rows {
        w.write_record([
            row_label(r.receiver, r.term, *t),
            r.closed_form.to_string(),
            r.oracle_mean.to_string(),
            r.oracle_stderr.to_string(),
            r.z_score.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| SimError::Io(e.into_error()))
}

/// One line per term: both variants against the oracle, with a verdict.
#[derive(Debug, Clone, Serialize)]
pub struct AdjudicationRow {
    pub topology: u64,
    pub receiver: String,
    pub term: String,
    pub suspected: bool,
    pub as_printed: f64,
    pub corrected: f64,
    pub oracle_mean: f64,
    pub oracle_stderr: f64,
    pub z_as_printed: f64,
    pub z_corrected: f64,
    pub verdict: &'static str,
    pub note: String,
}

pub fn adjudicate(printed: &ConformanceRow, corrected: &ConformanceRow, topology: u64) -> AdjudicationRow {
    let note = suspected_terms(printed.receiver)
        .iter()
        .find(|(n, _)| *n == printed.term)
        .map(|(_, why)| why.to_string());
    let ok_p = printed.z_score.abs() <= Z_LIMIT;
    let ok_c = corrected.z_score.abs() <= Z_LIMIT;
    let verdict = match (ok_p, ok_c) {
        (true, true) => "both_match",
        (false, true) => "printed_rejected",
        (true, false) => "corrected_rejected",
        (false, false) => "neither_matches",
    };
    AdjudicationRow {
        topology,
        receiver: printed.receiver.to_string(),
        term: printed.term.to_string(),
        suspected: note.is_some(),
        as_printed: printed.closed_form,
        corrected: corrected.closed_form,
        oracle_mean: corrected.oracle_mean,
        oracle_stderr: corrected.oracle_stderr,
        z_as_printed: printed.z_score,
        z_corrected: corrected.z_score,
        verdict,
        note: note.unwrap_or_default(),
    }
}

fn cmd_conformance(cfg: &SystemConfig, trials: usize, topologies: usize, strict: bool, out: &Path) -> Outcome {
    if trials < MIN_TRIALS {
        return fail(
            SimError::Precondition(format!("--trials must be at least {MIN_TRIALS}, got {trials}")),
            Vec::new(),
        );
    }
    if topologies == 0 {
        return fail(SimError::Precondition("--topologies must be at least 1".into()), Vec::new());
    }
    let mut printed_rows = Vec::new();
    let mut corrected_rows = Vec::new();
    for t in 0..topologies as u64 {
        let dep = match Deployment::draw(cfg, t) {
            Ok(d) => d,
            Err(e) => return fail(e, Vec::new()),
        };
        let est = match estimate_terms(&dep, trials) {
            Ok(e) => e,
            Err(e) => return fail(e, Vec::new()),
        };
        for (variant, sink) in [
            (FormVariant::AsPrinted, &mut printed_rows),
            (FormVariant::Corrected, &mut corrected_rows),
        ] {
            match conformance(&dep, &est, variant) {
                Ok(rows) => sink.extend(rows.into_iter().map(|r| (t, r))),
                Err(e) => return fail(e, Vec::new()),
            }
        }
        eprintln!("conformance: topology {}/{} done", t + 1, topologies);
    }

    let judged = if strict { &printed_rows } else { &corrected_rows };
    let label = |t: u64| (topologies > 1).then_some(t);
    let mut outputs = Vec::new();
    type Pick = fn(&Receiver) -> bool;
    let groups: [(&str, Pick); 3] = [
        ("monitor", |r| matches!(r, Receiver::Monitor)),
        ("ue", |r| matches!(r, Receiver::Ue(_))),
        ("cpu", |r| matches!(r, Receiver::Cpu)),
    ];
    for (name, pick) in groups {
        let rows: Vec<(Option<u64>, &ConformanceRow)> = judged
            .iter()
            .filter(|(_, r)| pick(&r.receiver))
            .map(|(t, r)| (label(*t), r))
            .collect();
        let path = out.join(format!("conformance_{name}.csv"));
        if let Err(e) = conformance_csv(&rows).and_then(|b| write_atomic(&path, &b)) {
            return fail(e, outputs);
        }
        outputs.push(path);
    }

    let adjudication: Vec<AdjudicationRow> = printed_rows
        .iter()
        .zip(&corrected_rows)
        .map(|((t, p), (_, c))| adjudicate(p, c, *t))
        .collect();
    let path = out.join("conformance_adjudication.csv");
    let bytes = (|| -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &adjudication {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| SimError::Io(e.into_error()))
    })();
    if let Err(e) = bytes.and_then(|b| write_atomic(&path, &b)) {
        return fail(e, outputs);
    }
    outputs.push(path);

    let failing: Vec<String> = judged
        .iter()
        .filter(|(_, r)| !(r.z_score.abs() <= Z_LIMIT))
        .map(|(t, r)| format!("{} (z = {:.2})", row_label(r.receiver, r.term, label(*t)), r.z_score))
        .collect();
    if failing.is_empty() {
        Outcome { code: EXIT_OK, outputs, note: None }
    } else {
        Outcome {
            code: EXIT_CONFORMANCE,
            outputs,
            note: Some(format!("terms outside |z| <= {Z_LIMIT}: {}", failing.join(", "))),
        }
    }
}

fn cmd_sweep(cfg: &SystemConfig, kind: SweepKind, topologies: usize, strict: bool, out: &Path) -> Outcome {
    let variant = if strict { FormVariant::AsPrinted } else { FormVariant::Corrected };
    let rows = match kind {
        SweepKind::Theta => sweep_theta(cfg, &default_theta_grid(), &default_r_values(), topologies, variant),
        SweepKind::Npm => sweep_npm(cfg, &default_npm_grid(), &default_p_pm_values(), topologies, variant),
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return fail(e, Vec::new()),
    };
    let name = match kind {
        SweepKind::Theta => "sweep_theta.csv",
        SweepKind::Npm => "sweep_npm.csv",
    };
    let path = out.join(name);
    let mut buf = Vec::new();
    if let Err(e) = write_csv(&rows, &mut buf).and_then(|_| write_atomic(&path, &buf)) {
        return fail(e, Vec::new());
    }
    Outcome { code: EXIT_OK, outputs: vec![path], note: None }
}
