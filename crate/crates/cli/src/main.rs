use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fuzzmux::compare::{run_compare, score_from_results, write_artifacts, CompareOptions};
use fuzzmux::config::load_config;
use fuzzmux::driver::{apply_overrides, run_to_dir, DriverError, Overrides};

/// Allocates one compute budget across a roster of fuzzers with a
/// Thompson-sampling bandit and a shared global seed pool.
#[derive(Parser)]
#[command(name = "fuzzmux", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one campaign and write its trace, coverage series and summary.
    Run {
        /// Campaign config file.
        #[arg(long)]
        config: PathBuf,
        /// Campaign output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Stop after N rounds, overriding the config.
        #[arg(long)]
        rounds: Option<u64>,
        /// Stop after N campaign-clock minutes, overriding the config.
        #[arg(long, value_name = "MIN")]
        duration: Option<u64>,
    },
    /// Run several strategy configs over a target suite and score them.
    Compare {
        /// Strategy configs; the first is the reference strategy.
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Trials per (strategy, target); trial i uses seed base+i.
        #[arg(long)]
        trials: u64,
        /// Sweep output directory.
        #[arg(long)]
        out: PathBuf,
        /// Target files to run every strategy on; defaults to the configs'
        /// own shared target.
        #[arg(long, num_args = 1..)]
        targets: Vec<PathBuf>,
        /// Base seed for trial derivation, overriding the configs'.
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel campaign workers.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Recompute and print the score table of a finished sweep.
    Score {
        /// Sweep directory holding results.csv.
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), DriverError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            rounds,
            duration,
        } => {
            let mut spec = load_config(&config)?;
            apply_overrides(
                &mut spec,
                &Overrides {
                    seed,
                    rounds,
                    duration_min: duration,
                    target: None,
                },
            );
            let report = run_to_dir(&spec, &out)?;
            println!(
                "{} rounds, {} branches, artifacts in {}",
                report.rounds.len(),
                report.final_branches,
                out.display()
            );
            Ok(())
        }
        Command::Compare {
            configs,
            trials,
            out,
            targets,
            seed,
            jobs,
        } => {
            let mut named: Vec<(String, fuzzmux::config::CampaignSpec)> =
                Vec::with_capacity(configs.len());
            for path in &configs {
                let spec = load_config(path)?;
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let mut name = stem.clone();
                let mut suffix = 1;
                while named.iter().any(|(n, _)| n == &name) {
                    suffix += 1;
                    name = format!("{stem}#{suffix}");
                }
                named.push((name, spec));
            }
            let jobs = jobs
                .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
                .unwrap_or(1);
            let options = CompareOptions {
                configs: named,
                targets,
                trials,
                base_seed: seed,
                jobs,
            };
            let work_dir = out.join("work");
            let needs_work_dir = options.configs.iter().any(|(_, s)| s.has_external());
            let outcome = run_compare(
                &options,
                if needs_work_dir { Some(&work_dir) } else { None },
            )?;
            write_artifacts(&out, &outcome)
                .map_err(|e| DriverError::Invalid(format!("writing artifacts: {e}")))?;
            print!("{}", outcome.rendered);
            Ok(())
        }
        Command::Score { input } => {
            let (_, rendered) = score_from_results(&input)?;
            print!("{rendered}");
            Ok(())
        }
    }
}
