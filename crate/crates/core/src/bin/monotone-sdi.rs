use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use monotone_sdi::harness::Execution;
use monotone_sdi::report::{execute, read_report, summary_table, write_plot_data, write_report, Manifest};
use monotone_sdi::scenario::{parse_scenario_with, Overrides};
use monotone_sdi::Result;

/// Simulate stochastic differential inclusions driven by maximal monotone
/// operators and check the runs against their convergence bounds.
#[derive(Parser)]
#[command(name = "monotone-sdi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run a scenario's ensemble and checks, then write the report tree.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Master seed, replacing `ensemble.master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of paths, replacing `ensemble.n_paths`.
        #[arg(long)]
        paths: Option<usize>,
        /// Output directory, replacing `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a finished run from its CSV files.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also write `plot/<metric>.csv` files with columns `t,value`.
        #[arg(long)]
        plot_data: bool,
    },
}

const EXIT_VIOLATION: u8 = 2;

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { scenario } => {
            let text = std::fs::read_to_string(&scenario)?;
            let s = parse_scenario_with(&text, &Overrides::default())?;
            println!("{}: valid (digest {})", s.name, s.digest);
            Ok(false)
        }
        Command::Run {
            scenario,
            seed,
            paths,
            out,
        } => {
            let text = std::fs::read_to_string(&scenario)?;
            let overrides = Overrides {
                master_seed: seed,
                n_paths: paths,
                output_dir: out.map(|p| p.display().to_string()),
            };
            let s = parse_scenario_with(&text, &overrides)?;
            let execution = Execution::from_env()?;
            let outcome = execute(&s, execution)?;
            let out = s.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&s.name));
            let dir = write_report(&out, &s, &outcome)?;
            print!("{}", summary_table(&Manifest::new(&s, &outcome), &outcome.rows));
            eprintln!("report written to {}", dir.display());
            Ok(outcome.violated())
        }
        Command::Report { input, plot_data } => {
            let stored = read_report(&input)?;
            print!("{}", summary_table(&stored.manifest, &stored.rows));
            if plot_data {
                for f in write_plot_data(&stored)? {
                    eprintln!("wrote {}", f.display());
                }
            }
            Ok(stored.violated())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
