use std::path::PathBuf;
use std::process::ExitCode;

use aidsim::analysis::{delay_anova, summarize};
use aidsim::experiment::run_levels;
use aidsim::output::{report, write_outputs};
use aidsim::scenario::bundled_names;
use aidsim::{Scenario, ScenarioError, Sweep};
use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::Value;

#[derive(Parser)]
#[command(name = "aidsim", version, about = "Interchange and RCUT traffic microsimulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replication of every sweep level and write CSV outputs.
    Run(RunArgs),
    /// Check a scenario without simulating; lists every violated constraint.
    Validate(ValidateArgs),
    /// List the bundled scenarios.
    Scenarios,
}

#[derive(Args)]
struct Source {
    /// Bundled scenario name (see `aidsim scenarios`).
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set fleet.mpr=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per level.
    #[arg(long)]
    reps: Option<u32>,
    /// Sweep a key over values, e.g. `mpr=0,10,...,100` or
    /// `confusion=0,5,10,15,20` (both in percent). Replaces the scenario's
    /// own sweeps; repeat for a cartesian product.
    #[arg(long = "sweep", value_name = "KEY=V1,V2,...")]
    sweeps: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record 1 Hz trajectories.
    #[arg(long, value_enum)]
    trajectories: Option<Toggle>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file (alternative to --config).
    path: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

fn load(source: &Source, path: Option<PathBuf>) -> Result<Scenario, ScenarioError> {
    let mut s = match (&source.scenario, path.or_else(|| source.config.clone())) {
        (Some(name), None) => Scenario::bundled(name)?,
        (None, Some(p)) => Scenario::from_file(&p)?,
        (Some(_), Some(_)) => {
            return Err(ScenarioError::Key {
                path: "--scenario".into(),
                message: "give either a bundled scenario or a file, not both".into(),
            })
        }
        (None, None) => {
            return Err(ScenarioError::Key {
                path: "--scenario".into(),
                message: "a bundled scenario or a scenario file is required".into(),
            })
        }
    };
    for a in &source.sets {
        s.set_str(a)?;
    }
    Ok(s)
}

fn run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut s = load(&args.source, None)?;
    if let Some(seed) = args.seed {
        s.set("run.seed", Value::Integer(i64::try_from(seed)?))?;
    }
    if let Some(reps) = args.reps {
        s.set("run.replications", Value::Integer(reps.into()))?;
    }
    if let Some(t) = args.trajectories {
        s.set("run.trajectories", Value::Boolean(matches!(t, Toggle::On)))?;
    }
    if !args.sweeps.is_empty() {
        s.sweeps = args.sweeps.iter().map(|x| x.parse::<Sweep>()).collect::<Result<_, _>>()?;
    }
    let levels = s.levels()?.into_iter().map(|(l, c)| (l.label, c)).collect();
    let runs = run_levels(levels, args.jobs)?;
    let summaries = runs.iter().map(summarize).collect::<Result<Vec<_>, _>>()?;
    let anova = delay_anova(&runs)?;
    write_outputs(&args.out, &runs, &summaries, anova.as_ref())?;
    print!("{}", report(&runs, &summaries, anova.as_ref()));
    eprintln!("outputs written to {}", args.out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<bool, ScenarioError> {
    let s = match load(&args.source, args.path) {
        Ok(s) => s,
        Err(ScenarioError::Invalid(aidsim_core::Error::Config(v))) => {
            for x in v {
                println!("{x}");
            }
            return Ok(false);
        }
        Err(e) => return Err(e),
    };
    match s.levels() {
        Ok(levels) => {
            println!("valid: {} ({} level(s))", s.name, levels.len());
            Ok(true)
        }
        Err(ScenarioError::Invalid(aidsim_core::Error::Config(v))) => {
            for x in v {
                println!("{x}");
            }
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(a) => match run(a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Validate(a) => match validate(a) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Scenarios => {
            for n in bundled_names() {
                println!("{n}");
            }
            ExitCode::SUCCESS
        }
    }
}
