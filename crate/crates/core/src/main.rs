use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polar_broadcast::cli::{run, Command, RunOptions};
use polar_broadcast::exec::ExecMode;

#[derive(Parser)]
#[command(version, about = "Polar codes for two-user classical-quantum broadcast channels")]
struct Args {
    #[command(subcommand)]
    command: Mode,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Derive all seeds from this value.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Mode {
    /// Build the code and report rates, census and error bounds.
    Analyze,
    /// Write the polarization profiles.
    Polarize,
    /// Evaluate the rate region and corner points.
    Region,
    /// Run Monte Carlo transmissions.
    Simulate,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(config) = args.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let mut exec = ExecMode::Parallel;
    if let Some(t) = args.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if t == 1 {
            exec = ExecMode::Sequential;
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    let command = match args.command {
        Mode::Analyze => Command::Analyze,
        Mode::Polarize => Command::Polarize,
        Mode::Region => Command::Region,
        Mode::Simulate => Command::Simulate,
    };
    let opts = RunOptions {
        command,
        config,
        out: args.out,
        seed_override: args.seed_override,
        exec,
    };
    match run(&opts) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
