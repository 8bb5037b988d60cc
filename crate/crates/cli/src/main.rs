use std::path::PathBuf;
use std::process::ExitCode;

use adr_cli::config::{BranchRuleName, StrategyName};
use adr_cli::{check, run, ExitStatus, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Plans multi-debris removal missions with drift-orbit transfers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a mission and write the report and plot tables.
    Run {
        /// Debris catalog (CSV).
        catalog: PathBuf,
        /// Run configuration (TOML).
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        strategy: Option<StrategyName>,
        #[arg(long, value_enum)]
        branch_rule: Option<BranchRuleName>,
        /// Log progress on stderr.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Validate a catalog and print nodal precession rates.
    Check {
        catalog: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = matches!(cli.command, Command::Run { verbose: true, .. });
    env_logger::Builder::new()
        .filter_level(if verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();

    match cli.command {
        Command::Run { catalog, config, out, strategy, branch_rule, .. } => {
            let opts = RunOptions { catalog, config, out_dir: out, strategy, branch_rule };
            match run(&opts) {
                Ok(outcome) => {
                    let plan = &outcome.plan;
                    let path: Vec<String> = plan.path.iter().map(|id| id.to_string()).collect();
                    println!("path {} | {:.1} m/s | {:.1} d", path.join(" "), plan.total_dv, plan.total_duration / 86_400.0);
                    if outcome.status == ExitStatus::NotConverged {
                        eprintln!("warning: no convergence after {} iterations, best plan written", plan.iterations);
                    }
                    ExitCode::from(outcome.status as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_status() as u8)
                }
            }
        }
        Command::Check { catalog } => match check(&catalog) {
            Ok(report) => {
                print!("{}", report.text);
                if report.valid {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(ExitStatus::InputError as u8)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_status() as u8)
            }
        },
    }
}
