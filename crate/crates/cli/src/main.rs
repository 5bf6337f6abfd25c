use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hjcrit_cli::csv::parse_csv;
use hjcrit_cli::experiments::reference_for;
use hjcrit_cli::plot::{emit_plot, Axes};
use hjcrit_cli::verify::{print_table, run_verify};
use hjcrit_cli::{parse_config, run, RunStatus};

#[derive(Parser)]
#[command(name = "hjcrit", version = hjcrit_cli::manifest::VERSION, about = "Numerical laboratory for the critical viscous Hamilton-Jacobi equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        /// Only the quick gates (criteria 1 to 4).
        #[arg(long)]
        fast: bool,
    },
    /// Render CSV columns against tau as an SVG.
    Plot {
        csv: PathBuf,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<String>,
        /// Logarithmic value axis.
        #[arg(long)]
        log: bool,
        /// Dimension used for the M* reference line.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Output path; defaults to the CSV path with extension `svg`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let cfg = parse_config(&config)?;
            let status = run(&cfg)?;
            if let RunStatus::Artifacts { rows } = &status {
                if let Some(p) = &cfg.output.csv_path {
                    println!("wrote {rows} rows to {}", p.display());
                }
            }
            Ok(status.success())
        }
        Command::Verify { fast } => {
            let reports = run_verify(fast)?;
            print_table(&reports);
            Ok(reports.iter().all(|r| r.passed))
        }
        Command::Plot {
            csv,
            cols,
            log,
            dim,
            output,
        } => {
            let text = std::fs::read_to_string(&csv)
                .with_context(|| format!("reading {}", csv.display()))?;
            let table = parse_csv(&text)?;
            let axes = if log { Axes::LogY } else { Axes::Linear };
            let svg = emit_plot(&table, &cols, axes, reference_for(&cols, dim)?.as_ref())?;
            let out = output.unwrap_or_else(|| csv.with_extension("svg"));
            std::fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
            Ok(true)
        }
    }
}
