//! Command-line front end. Every subcommand writes `<sub>.csv` and
//! `<sub>.manifest` into `--out`; rerunning with `--config <manifest>`
//! reproduces the CSV byte for byte.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{load_config, parse_truth, truth_name, ExperimentParams, LoadError, RunConfig, RunManifest};

use crate::experiment::{
    granularity_sweep, hit_miss_classifier, repetition_experiment, spectre_back, ExperimentError, GranularityConfig,
    RepetitionConfig, SpectreBackConfig,
};
use crate::magnifier::{
    find_initial_plru_state, find_reorder_setup, monte_carlo_miss_prob, run_arbitrary_magnifier, run_arith_magnifier,
    run_plru_pa_magnifier, run_plru_reorder_magnifier, Letter, MagnifierError, MagnifierReading, PA_PATTERN,
};
use crate::sim::OpKind;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "ilp-gadgets", disable_version_flag = true, about = "Racing gadget and magnifier experiments")]
pub struct Cli {
    /// `key = value` config file; a previous run's manifest works too
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for CSV and manifest
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Magnifier rounds, or loop iterations for `repetition`
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    /// Also print the CSV to stdout
    #[arg(long, global = true)]
    pub csv: bool,
    /// Print version and the default config hash
    #[arg(long)]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// PLRU presence/absence magnifier
    PlruPa,
    /// PLRU reorder magnifier
    PlruReorder,
    /// Magnifier for any replacement policy
    Arbitrary,
    /// Magnifier built from MULs and DIVs only
    Arith,
    /// Flush+reload loop with and without the racing fix
    Repetition {
        /// Run the load stage inside a race against a longer constant path
        #[arg(long)]
        fix: bool,
    },
    /// Shortest reference that beats each target length
    Granularity {
        /// Reference op kind (default add)
        #[arg(long = "ref")]
        reference: Option<String>,
        /// Target op kind (default add)
        #[arg(long)]
        target: Option<String>,
    },
    /// Leak secret bits through a coarse timer
    SpectreBack,
    /// Hit/miss classification without a timer
    Classify {
        /// `hit` or `miss`
        #[arg(long)]
        truth: Option<String>,
    },
    /// Monte Carlo eviction probability under random replacement
    MissProb,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::PlruPa => "plru-pa",
            Command::PlruReorder => "plru-reorder",
            Command::Arbitrary => "arbitrary",
            Command::Arith => "arith",
            Command::Repetition { .. } => "repetition",
            Command::Granularity { .. } => "granularity",
            Command::SpectreBack => "spectre-back",
            Command::Classify { .. } => "classify",
            Command::MissProb => "miss-prob",
        }
    }

    fn default_rounds(&self) -> usize {
        match self {
            Command::Arbitrary | Command::Repetition { .. } => 1000,
            Command::SpectreBack => 4000,
            _ => 100,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Experiment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Experiment(_) => 2,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MagnifierError> for CliError {
    fn from(e: MagnifierError) -> Self {
        match e {
            MagnifierError::ConfigRejected(_) | MagnifierError::UnsupportedWays(_) => CliError::Config(e.to_string()),
            e => CliError::Experiment(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) => CliError::Config(e.to_string()),
            ExperimentError::Magnifier(m) => m.into(),
            e => CliError::Experiment(e.to_string()),
        }
    }
}

/// Result of one subcommand: the CSV body and a one-line summary.
pub struct Output {
    pub csv: String,
    pub summary: String,
}

/// Resolves the config: defaults, then `--config`, then flags.
pub fn resolve(cli: &Cli, cmd: &Command) -> Result<RunConfig, CliError> {
    let mut rc = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let p = &mut rc.params;
    if let Some(s) = cli.seed {
        p.seed = s;
    }
    if let Some(r) = cli.rounds {
        p.rounds = Some(r);
    }
    p.rounds.get_or_insert(cmd.default_rounds());
    let kind = |s: &str| OpKind::parse(s).ok_or_else(|| CliError::Config(format!("bad op kind `{s}`")));
    match cmd {
        Command::Repetition { fix: true } => p.repetition_fix = true,
        Command::Granularity { reference, target } => {
            if let Some(r) = reference {
                p.gran_ref = kind(r)?;
            }
            if let Some(t) = target {
                p.gran_target = kind(t)?;
            }
        }
        Command::Classify { truth: Some(t) } => {
            p.classify_truth = parse_truth(t).ok_or_else(|| CliError::Config(format!("bad truth `{t}`")))?;
        }
        _ => {}
    }
    Ok(rc)
}

fn magnifier_summary(r: &MagnifierReading) -> String {
    format!(
        "rounds={} cycles_state0={} cycles_state1={} delta={} misses_state0={} misses_state1={}",
        r.rounds,
        r.cycles_state0,
        r.cycles_state1,
        r.delta,
        r.misses_state0(),
        r.misses_state1()
    )
}

/// Runs one subcommand on a resolved config.
pub fn execute(cmd: &Command, rc: &RunConfig) -> Result<Output, CliError> {
    let m = &rc.machine;
    let p = &rc.params;
    let rounds = p.rounds.unwrap_or(cmd.default_rounds());
    let reading = |r: MagnifierReading| Output {
        summary: magnifier_summary(&r),
        csv: r.to_csv(),
    };
    Ok(match cmd {
        Command::PlruPa => {
            let setup = find_initial_plru_state(&PA_PATTERN, Letter::A, 4)?;
            reading(run_plru_pa_magnifier(&setup, rounds, m)?)
        }
        Command::PlruReorder => reading(run_plru_reorder_magnifier(&find_reorder_setup()?, rounds, m)?),
        Command::Arbitrary => reading(run_arbitrary_magnifier(
            &crate::magnifier::ArbMagnifierConfig {
                rounds,
                ..rc.arb.clone()
            },
            m,
        )?),
        Command::Arith => reading(run_arith_magnifier(
            &crate::magnifier::ArithMagnifierConfig {
                rounds,
                ..rc.arith.clone()
            },
            m,
        )?),
        Command::Repetition { .. } => {
            let cfg = RepetitionConfig {
                iterations: rounds,
                racing_fix: p.repetition_fix,
            };
            let r = repetition_experiment(&cfg, m)?;
            Output {
                summary: format!(
                    "iterations={} fix={} same={} different={} delta={}",
                    rounds,
                    p.repetition_fix,
                    r.same.total(),
                    r.different.total(),
                    r.delta()
                ),
                csv: r.to_csv(),
            }
        }
        Command::Granularity { .. } => {
            let cfg = GranularityConfig {
                ref_kind: p.gran_ref,
                target_kind: p.gran_target,
                max_target_len: p.gran_max_target_len,
                bookkeeping_per_op: p.gran_bookkeeping_per_op,
            };
            let r = granularity_sweep(&cfg, m)?;
            let rob = r.rob_exceeded.map_or_else(|| "none".into(), |l| format!("RobExceeded({l})"));
            Output {
                summary: format!(
                    "ref={} target={} slope={:.3} granularity={} max_measurable={} rob_bound={rob}",
                    p.gran_ref, p.gran_target, r.slope, r.granularity, r.max_measurable
                ),
                csv: r.to_csv(),
            }
        }
        Command::SpectreBack => {
            let cfg = SpectreBackConfig {
                bits: p.spectre_bits,
                rounds,
                timer_granularity: p.timer_granularity,
                timer_jitter: p.timer_jitter,
                calibration_trials: p.spectre_calibration_trials,
                seed: p.seed,
                swap_warm_lines: p.spectre_swap_warm_lines,
                ..SpectreBackConfig::default()
            };
            let r = spectre_back(&cfg, m)?;
            Output {
                summary: format!(
                    "bits={} rounds={} accuracy={:.4} threshold={:.1} disjoint={}",
                    cfg.bits,
                    rounds,
                    r.accuracy,
                    r.threshold,
                    r.disjoint()
                ),
                csv: r.to_csv(),
            }
        }
        Command::Classify { .. } => {
            let r = hit_miss_classifier(p.classify_truth, p.classify_trials, m, p.seed)?;
            let truth = truth_name(p.classify_truth);
            Output {
                summary: format!("truth={truth} ref_len={} accuracy={:.4}", r.ref_len, r.accuracy),
                csv: format!(
                    "truth,ref_len,trials,correct,accuracy\n{truth},{},{},{},{:.6}\n",
                    r.ref_len, r.trials, r.correct, r.accuracy
                ),
            }
        }
        Command::MissProb => {
            if p.mp_seq_len > p.mp_ways || p.mp_ways == 0 {
                return Err(CliError::Config("mp_seq_len must be at most mp_ways".into()));
            }
            let prob = monte_carlo_miss_prob(p.mp_seq_len, p.mp_par_len, p.mp_ways, p.mp_trials, p.seed);
            Output {
                summary: format!("miss_prob={prob:.6}"),
                csv: format!(
                    "seq_len,par_len,ways,trials,probability\n{},{},{},{},{prob:.6}\n",
                    p.mp_seq_len, p.mp_par_len, p.mp_ways, p.mp_trials
                ),
            }
        }
    })
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Experiment(format!("cannot write {}: {e}", path.display())))
}

/// Parses `args`, runs the subcommand, writes outputs. Returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.version {
        println!("ilp-gadgets {VERSION} config-sha256 {}", RunConfig::default_hash());
        return 0;
    }
    let Some(cmd) = cli.command.clone() else {
        eprintln!("error: a subcommand is required (try --help)");
        return 1;
    };
    match run(&cli, &cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli, cmd: &Command) -> Result<(), CliError> {
    let rc = resolve(cli, cmd)?;
    let out = execute(cmd, &rc)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Experiment(format!("cannot create {}: {e}", cli.out.display())))?;
    let csv_path = cli.out.join(format!("{}.csv", cmd.name()));
    write(&csv_path, &out.csv)?;
    let manifest = RunManifest {
        subcommand: cmd.name().into(),
        config: rc,
        csv_path: csv_path.display().to_string(),
        version: VERSION.into(),
    };
    write(&cli.out.join(format!("{}.manifest", cmd.name())), &manifest.render())?;
    if cli.csv {
        print!("{}", out.csv);
    }
    println!("{}: {}", cmd.name(), out.summary);
    Ok(())
}
