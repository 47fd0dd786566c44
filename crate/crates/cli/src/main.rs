use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbc_cli::{cmd_compress, cmd_rdc, cmd_verify, Overrides, OUTPUT_DIR_ENV};

/// Block-wise quantum image compression experiments.
#[derive(Parser)]
#[command(name = "qbc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress at each factor: report.csv, reconstructions, run.json.
    Compress(Overrides),
    /// Rate-distortion sweep: rdc.csv and rdc.dat.
    Rdc(Overrides),
    /// Simulate block circuits at the first factor: verify.csv.
    Verify(Overrides),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let (overrides, run): (&Overrides, fn(&_) -> _) = match &cli.command {
        Command::Compress(o) => (o, cmd_compress),
        Command::Rdc(o) => (o, cmd_rdc),
        Command::Verify(o) => (o, cmd_verify),
    };
    match overrides.resolve(env_dir).and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qbc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
