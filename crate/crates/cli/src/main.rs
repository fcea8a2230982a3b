//! `ds-painleve`: verification suites, integration and Bäcklund orbits for
//! the sixth Painlevé equation in symmetric form.
//!
//! Exit codes: 0 success, 1 verification failure, 2 early stop with partial
//! output, 3 usage or input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};

use d4_painleve::weyl::WeylWord;

mod commands;
mod config;
mod output;
mod sweep;

use commands::{Fault, SolveFlags, Status};
use config::ConfigArgs;

const USAGE_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ds-painleve", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact checks of the algebra, its gradation and Heisenberg subalgebra.
    VerifyAlgebra {
        /// Seed for the randomized identities.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Integrate and write the trajectory.
    Solve(SolveArgs),
    /// Same as `solve --lax --no-output`.
    VerifyLax {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Integrate, apply a Weyl word pointwise and check the image.
    Backlund {
        /// Comma-separated generator indices, applied left to right.
        #[arg(long)]
        word: WeylWord,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Map a stored trajectory to (s, q, p) and check Hamilton's equations.
    Convert {
        /// CSV or JSON output of `solve`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Compute the Lax compatibility residual at every sample.
    #[arg(long)]
    lax: bool,
    /// Integrate back to the start and report the return error.
    #[arg(long)]
    roundtrip: bool,
    /// Compare the symmetric and Hamiltonian right-hand sides at every sample.
    #[arg(long)]
    check_hamiltonian: bool,
    /// Skip writing the trajectory.
    #[arg(long)]
    no_output: bool,
    /// Grid such as `alpha1=0.1:0.9:5,lambda0=0.2:0.4:3`; needs `--output DIR`.
    #[arg(long, value_name = "GRID")]
    sweep: Option<String>,
    /// Output file (directory with `--sweep`); stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::VerifyAlgebra { seed, inject_fault } => commands::verify_algebra(seed, inject_fault),
        Command::Solve(args) => {
            let cfg = args.config.resolve()?;
            let flags = SolveFlags {
                lax: args.lax,
                roundtrip: args.roundtrip,
                check_hamiltonian: args.check_hamiltonian,
            };
            match args.sweep {
                Some(spec) => {
                    let dir = args
                        .output
                        .ok_or_else(|| anyhow::anyhow!("--sweep needs --output DIR"))?;
                    sweep::run(&cfg, flags, &sweep::parse_grid(&spec)?, &dir)
                }
                None => commands::solve(&cfg, flags, args.output.as_deref(), !args.no_output),
            }
        }
        Command::VerifyLax { config } => {
            let flags = SolveFlags {
                lax: true,
                ..SolveFlags::default()
            };
            commands::solve(&config.resolve()?, flags, None, false)
        }
        Command::Backlund { word, config, output } => commands::backlund(&config.resolve()?, &word, output.as_deref()),
        Command::Convert { input, config, output } => commands::convert(&config.resolve()?, &input, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(USAGE_ERROR);
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>()
                .is_some_and(|ce| matches!(ce.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe))
    })
}
