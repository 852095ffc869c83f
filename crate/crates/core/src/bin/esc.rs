//! Command-line front end: workload generation, tuning runs, counterfactual
//! evaluation, parameter sweeps, and the brute-force verification suites.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or I/O, 3 verification
//! failure (a broken mathematical contract or a failed suite).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};

use esc_core::artifacts::save_run;
use esc_core::generate::{generate_workload, GeneratorSpec};
use esc_core::metrics::evaluate_dirs;
use esc_core::sweep::{default_scheme, summary_csv, sweep};
use esc_core::tuner::{tune, AlgoKind, EscMode, TuneOptions, WiiMode};
use esc_core::verify::{run_suite, small_spec, SUITES};
use esc_core::workload::{Instance, Workload};
use esc_core::{esv::Scheme, EscError, Result};

#[derive(Parser)]
#[command(
    name = "esc",
    version,
    about = "Budget-aware index tuning with verified early stopping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload from a preset or a generator spec file.
    Generate(GenerateArgs),
    /// Run one tuning session and write its artifacts to a directory.
    Tune(TuneArgs),
    /// Compare an early-stopped run against its full-budget twin.
    Evaluate(EvaluateArgs),
    /// Run the epsilon/variant/seed grid and write summary.csv.
    Sweep(SweepArgs),
    /// Run a brute-force verification suite and report violations.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    TwoPhaseGreedy,
    Mcts,
}

impl From<AlgorithmArg> for AlgoKind {
    fn from(a: AlgorithmArg) -> AlgoKind {
        match a {
            AlgorithmArg::TwoPhaseGreedy => AlgoKind::TwoPhaseGreedy,
            AlgorithmArg::Mcts => AlgoKind::Mcts,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WiiArg {
    Off,
    Bound,
    Coverage,
}

impl From<WiiArg> for WiiMode {
    fn from(w: WiiArg) -> WiiMode {
        match w {
            WiiArg::Off => WiiMode::Off,
            WiiArg::Bound => WiiMode::Bound,
            WiiArg::Coverage => WiiMode::Coverage,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EscArg {
    Off,
    B,
    I,
}

impl From<EscArg> for EscMode {
    fn from(e: EscArg) -> EscMode {
        match e {
            EscArg::Off => EscMode::Off,
            EscArg::B => EscMode::B,
            EscArg::I => EscMode::I,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EsvsArg {
    Heuristic,
    Generic,
    Fixed,
}

impl From<EsvsArg> for Scheme {
    fn from(s: EsvsArg) -> Scheme {
        match s {
            EsvsArg::Heuristic => Scheme::Heuristic,
            EsvsArg::Generic => Scheme::Generic,
            EsvsArg::Fixed => Scheme::FixedStep,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Preset name (tpch-like) or path to a generator spec JSON file.
    #[arg(long, default_value = "tpch-like")]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output workload file.
    #[arg(short, long)]
    output: PathBuf,
}

/// Flags shared by `tune` and `sweep`.
#[derive(Args)]
struct CommonTuneArgs {
    /// Workload file produced by `generate`.
    #[arg(long)]
    workload: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::TwoPhaseGreedy)]
    algorithm: AlgorithmArg,
    /// What-if call interception mode.
    #[arg(long, value_enum, default_value_t = WiiArg::Off)]
    wii: WiiArg,
    /// What-if call budget B.
    #[arg(long, default_value_t = 20_000)]
    budget: u64,
    /// Configuration size cap K.
    #[arg(short = 'K', long = "k", default_value_t = 20)]
    k: usize,
    /// Verification grid step s, in what-if calls.
    #[arg(long, default_value_t = 100)]
    step: u64,
    /// Concavity-significance threshold for the generic scheme.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Feature-similarity threshold for interaction refinement.
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    /// Interception gap threshold, as a fraction of a query's base cost.
    #[arg(long, default_value_t = 0.05)]
    theta: f64,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: CommonTuneArgs,
    /// Early-stopping mode.
    #[arg(long, value_enum, default_value_t = EscArg::B)]
    esc: EscArg,
    /// Verification scheme; defaults to the algorithm's standard pairing
    /// (heuristic for two-phase-greedy, generic for mcts).
    #[arg(long, value_enum)]
    esvs: Option<EsvsArg>,
    /// Improvement-loss tolerance for early stopping.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run directory for curve.csv, calls.csv, result.json.
    #[arg(short, long)]
    output: PathBuf,
}

impl TuneArgs {
    fn to_options(&self) -> TuneOptions {
        let algorithm: AlgoKind = self.common.algorithm.into();
        TuneOptions {
            algorithm,
            wii: self.common.wii.into(),
            esc: self.esc.into(),
            scheme: match self.esvs {
                Some(s) => s.into(),
                None => default_scheme(algorithm),
            },
            epsilon: self.epsilon,
            budget: self.common.budget,
            k: self.common.k,
            step: self.common.step,
            sigma: self.common.sigma,
            tau: self.common.tau,
            theta: self.common.theta,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory of the (possibly early-stopped) run.
    #[arg(long)]
    run: PathBuf,
    /// Run directory of the same options executed without early stopping.
    #[arg(long = "ground-truth")]
    ground_truth: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonTuneArgs,
    /// Comma-separated improvement-loss tolerances.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1")]
    epsilons: Vec<f64>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Directory for summary.csv.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run.
    #[arg(long, value_parser = PossibleValuesParser::new(SUITES))]
    suite: String,
    /// Preset name or generator spec JSON file; defaults to built-in small
    /// instances sized for exhaustive replay.
    #[arg(long)]
    spec: Option<String>,
    /// Comma-separated workload seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Use the assumption-breaking oracle (negative control).
    #[arg(long)]
    adversarial: bool,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => {
            let spec = GeneratorSpec::resolve(&a.spec)?;
            let workload = generate_workload(&spec, a.seed)?;
            workload.save(&a.output)?;
            println!(
                "wrote {} ({} queries, {} candidate indexes)",
                a.output.display(),
                workload.queries.len(),
                workload.indexes.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Tune(a) => {
            let inst = Instance::new(Workload::load(&a.common.workload)?)?;
            let opts = a.to_options();
            let result = tune(&inst, &opts)?;
            save_run(&a.output, &inst.workload, &inst, &opts, &result)?;
            println!(
                "{} after {} calls, observed improvement {:.4}, {} verifications; saved {}",
                result.termination,
                result.calls_used,
                result.observed_improvement,
                result.esv_invocations,
                a.output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate(a) => {
            let summary = evaluate_dirs(&a.run, &a.ground_truth)?;
            println!("{}", serde_json::to_string_pretty(&summary).map_err(EscError::from)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(a) => {
            let inst = Instance::new(Workload::load(&a.common.workload)?)?;
            let base = TuneOptions {
                algorithm: a.common.algorithm.into(),
                wii: a.common.wii.into(),
                // Placeholders: the grid overrides mode, scheme, epsilon and
                // seed per row.
                esc: EscMode::B,
                scheme: default_scheme(a.common.algorithm.into()),
                epsilon: 0.05,
                budget: a.common.budget,
                k: a.common.k,
                step: a.common.step,
                sigma: a.common.sigma,
                tau: a.common.tau,
                theta: a.common.theta,
                seed: 0,
            };
            let rows = sweep(&inst, &base, &a.epsilons, &a.seeds)?;
            std::fs::create_dir_all(&a.output)?;
            let path = a.output.join("summary.csv");
            std::fs::write(&path, summary_csv(&rows))?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(a) => {
            let spec = match &a.spec {
                Some(s) => GeneratorSpec::resolve(s)?,
                None => small_spec(),
            };
            let report = run_suite(&a.suite, &spec, &a.seeds, a.adversarial)?;
            print!("{}", report.render());
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
    }
}

fn failure_code(err: &EscError) -> ExitCode {
    match err {
        EscError::ContractViolation(_) => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            failure_code(&e)
        }
    }
}
