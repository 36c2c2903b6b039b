// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use blend_testkit::{gen_lake, Profile};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blend-testkit", about = "Synthetic lakes for engine tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded toy lake as CSV files.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { seed, out } => {
            let (lake, _) = gen_lake(seed, Profile::default());
            if let Err(e) = lake.write_csv(&out) {
                eprintln!("error: {}: {e}", out.display());
                return ExitCode::from(1);
            }
            println!("{} tables written to {}", lake.tables.len(), out.display());
            ExitCode::SUCCESS
        }
    }
}
