//! Command line front end: run, validate and resume scenarios, or execute the
//! acceptance suite.
//!
//! Exit codes: 0 success, 1 solver, validation or acceptance failure, 2 bad
//! configuration or unreadable input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fsi_core::harness::suite::{run_suite, SuiteOptions};
use fsi_core::harness::{resume, run, validate_dataset, HarnessError, RunConfig, RunOutcome, Scenario, PRESETS};

#[derive(Parser)]
#[command(name = "fsi", version, about = "Polymer-laden fluid in an elastic shell")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, writing diagnostics, dumps, checkpoints and a summary.
    Run(RunArgs),
    /// Check the configured start data without time stepping.
    Validate(ConfigArgs),
    /// Continue a run from a checkpoint.
    Resume {
        #[arg(long, value_name = "CHECKPOINT")]
        resume: PathBuf,
        /// Output directory; defaults to the one recorded in the checkpoint.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Execute the acceptance suite and print a pass/fail table.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated criterion ids to run.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Scratch directory for the persistence runs.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Print the resolved configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// A preset name, or a scenario kind that overrides the loaded config.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; defaults to `<root>/<scenario>-<hash>` under the output root.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Continue from this checkpoint instead of starting fresh.
    #[arg(long, value_name = "CHECKPOINT", conflicts_with_all = ["config", "scenario", "seed"])]
    resume: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, env = "FSI_OUTPUT_ROOT", default_value = "runs", value_name = "DIR")]
    output_root: PathBuf,
}

fn resolve(args: &ConfigArgs) -> Result<RunConfig, HarnessError> {
    let mut config = match (&args.config, &args.scenario) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) if PRESETS.contains(&name.as_str()) => RunConfig::preset(name)?,
        (None, _) => RunConfig::default(),
    };
    if let Some(name) = &args.scenario {
        if args.config.is_some() || !PRESETS.contains(&name.as_str()) {
            config.scenario = name.parse::<Scenario>()?;
        }
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn report(outcome: &RunOutcome) -> ExitCode {
    let s = &outcome.summary;
    let termination = match &s.termination {
        Some(t) => serde_json::to_string(t).unwrap_or_default(),
        None => "none".into(),
    };
    println!("scenario {} config {} steps {} time {:.6}", s.scenario, s.config_hash, s.steps, s.final_time);
    println!("termination {termination}");
    for e in &s.errors {
        eprintln!("error [{}] at step {}: {}", e.stage, e.step, e.message);
    }
    if let Some(dir) = &outcome.out_dir {
        println!("output {}", dir.display());
    }
    ExitCode::from(s.exit_code.clamp(0, 255) as u8)
}

fn config_error(e: HarnessError) -> ExitCode {
    eprintln!("fsi: {e}");
    ExitCode::from(2)
}

fn default_out(root: &Path, config: &RunConfig) -> PathBuf {
    root.join(format!("{}-{}", config.scenario, &config.hash_hex()[..12]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            if let Some(ckpt) = &args.resume {
                return match resume(ckpt, args.out.as_deref()) {
                    Ok(o) => report(&o),
                    Err(e) => config_error(e),
                };
            }
            let mut config = match resolve(&args.config) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let out = args.out.unwrap_or_else(|| default_out(&args.output_root, &config));
            config.output.dir = Some(out);
            match run(&config) {
                Ok(o) => report(&o),
                Err(e) => config_error(e),
            }
        }
        Command::Validate(args) => {
            let report = match resolve(&args).and_then(|c| validate_dataset(&c)) {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            for c in &report.checks {
                let verdict = if c.passed { "ok  " } else { "FAIL" };
                let detail = c.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default();
                println!("{verdict} {:<14} residual {:.3e}  tolerance {:.3e}{detail}", c.name, c.residual, c.tolerance);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Resume { resume: ckpt, out } => match resume(&ckpt, out.as_deref()) {
            Ok(o) => report(&o),
            Err(e) => config_error(e),
        },
        Command::Suite { seed, only, out } => {
            let results = run_suite(&SuiteOptions { seed, only, scratch: out }, |r| println!("{r}"));
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} passed, {failed} failed", results.len() - failed);
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Config(args) => match resolve(&args) {
            Ok(c) => {
                println!("{}", c.to_json());
                ExitCode::SUCCESS
            }
            Err(e) => config_error(e),
        },
    }
}
