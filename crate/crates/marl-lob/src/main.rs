use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use marl_lob::config::{parse_seed_list, CaseRef};
use marl_lob::{cmd_analyze, cmd_compare, cmd_run, CliError, RunRequest, Which};

/// Event-time limit order book simulator with learning execution agents.
///
/// Exit status: 0 success, 1 runtime failure, 2 usage or configuration
/// error. MARL_LOB_THREADS caps the number of worker threads.
#[derive(Parser)]
#[command(name = "marl-lob", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a case and write its artifacts and manifest.
    Run {
        /// Run configuration (TOML). Library defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Case number or name; a comma-separated list runs cases in parallel.
        #[arg(long, value_delimiter = ',')]
        case: Vec<CaseRef>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Seed list such as `7`, `1,2,3` or `1..5`.
        #[arg(long, alias = "seed", value_parser = seed_list)]
        seeds: Option<SeedList>,
        /// Output directory (default `runs/<case>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute stylised facts and complexity measures of finished runs.
    Analyze {
        /// Manifest files or run directories.
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        which: Which,
        /// Output directory (default `<run>/analysis`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Take the analysis settings from this configuration instead of the run's.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Cross-run moment table and dimension differences against a baseline.
    Compare {
        /// Manifest of the baseline run (normally case 0).
        #[arg(long)]
        baseline: Option<PathBuf>,
        manifests: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn seed_list(s: &str) -> Result<SeedList, String> {
    parse_seed_list(s).map(SeedList)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MARL_LOB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("MARL_LOB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            case,
            episodes,
            seeds,
            out,
        } => {
            let manifests = cmd_run(&RunRequest {
                config,
                cases: case,
                episodes,
                seeds: seeds.map(|s| s.0),
                out,
            })?;
            for m in manifests {
                println!("manifest: {}", m.display());
            }
        }
        Command::Analyze {
            manifests,
            which,
            out,
            config,
        } => {
            cmd_analyze(&manifests, which, out.as_deref(), config.as_deref())?;
        }
        Command::Compare { baseline, manifests, out } => {
            cmd_compare(baseline.as_deref(), &manifests, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
