use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfsc::cli::{load_config, replay, run, CliError, Command};

#[derive(Parser)]
#[command(name = "pfsc", version, about = "Optimal control of the Penrose-Fife phase-field system")]
struct Cli {
    /// Debug logging.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve the state equations for the starting controls.
    Forward(RunArgs),
    /// Compare the adjoint gradient with central differences.
    Gradcheck(RunArgs),
    /// Minimize one cost functional.
    Optimize(RunArgs),
    /// Run the eps/sigma continuation schedule.
    Continue(RunArgs),
    /// Solve every (eps, sigma) cell independently, in parallel.
    Sweep(RunArgs),
    /// Rerun the command recorded in a manifest.json.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` or `pfsc-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match cli.command {
        Sub::Replay { manifest, out } => {
            replay(&manifest, &out)?;
            return Ok(());
        }
        Sub::Forward(a) => (Command::Forward, a),
        Sub::Gradcheck(a) => (Command::Gradcheck, a),
        Sub::Optimize(a) => (Command::Optimize, a),
        Sub::Continue(a) => (Command::Continue, a),
        Sub::Sweep(a) => (Command::Sweep, a),
    };
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("pfsc-out"));
    let manifest = run(command, &cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&manifest.summary).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
