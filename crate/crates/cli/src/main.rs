use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use htcrystal_cli::commands::{run_check, run_cocycle, run_sen, run_stratify, CliError, Overrides};
use htcrystal_cli::config::{parse_config, CrystalConfig};
use htcrystal_cli::report::Report;
use htcrystal_cli::selftest::{run_selftest, Stratum};

#[derive(Parser)]
#[command(name = "htcrystal", version, about = "Rational Hodge-Tate crystals over p-adic fields")]
struct Cli {
    /// Target p-adic precision O(p^N).
    #[arg(long, global = true)]
    precision: Option<i64>,
    /// Truncation degree.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Print only the machine-readable section, as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nearly-HT verdict, evidence and convergence oracle.
    Check { file: PathBuf },
    /// Coefficients of the stratification and the closed-form comparison.
    Stratify { file: PathBuf },
    /// Cocycle condition to the truncation degree.
    Cocycle { file: PathBuf },
    /// Sen operator, weights and θ(uλ').
    Sen { file: PathBuf },
    /// Seeded curated crystals run through every suite.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, value_delimiter = ',', default_value = "a,b,c")]
        strata: Vec<Stratum>,
    },
}

fn load(path: &PathBuf) -> Result<CrystalConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let o = Overrides {
        precision: cli.precision,
        degree: cli.degree,
    };
    match &cli.command {
        Command::Check { file } => run_check(&load(file)?, o),
        Command::Stratify { file } => run_stratify(&load(file)?, o),
        Command::Cocycle { file } => run_cocycle(&load(file)?, o),
        Command::Sen { file } => run_sen(&load(file)?, o),
        Command::Selftest { seed, count, strata } => Ok(run_selftest(*seed, *count, strata)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                print!("{}", report.render_json());
            } else {
                print!("{}", report.render_text());
            }
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
