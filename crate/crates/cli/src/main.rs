use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ramify_cli::commands::{self, BoundArgs, Suite, VerifyArgs};
use ramify_cli::output::render_text;
use ramify_cli::{CliError, Report};
use ramify_core::Variant;

#[derive(Parser)]
#[command(
    name = "ramify",
    version,
    about = "Ramification invariants, kernel bounds and exhaustive checks"
)]
struct Cli {
    /// Print schema-versioned JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// m, tau, iota and t(pi) of an Eisenstein polynomial, with its E0/E1 split.
    Invariants {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        poly: String,
    },
    /// The recursive bound s and the closed-form comparisons.
    Bound {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        e: Option<u64>,
        #[arg(long)]
        tau: Option<u32>,
        #[arg(long)]
        iota: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        poly: Option<String>,
        /// Search uniformizers with digits below p^k for the smallest tau.
        #[arg(long)]
        search_prec: Option<u32>,
        /// p-adic precision of the search (default m + 3).
        #[arg(long)]
        search_n: Option<u32>,
        #[arg(long, default_value = "standard")]
        variant: Variant,
    },
    /// Run one of the exhaustive or seeded check suites.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        e: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        poly: Option<String>,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = ramify_core::oracle::DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Height bounds from (s, r), and generator counts of a module file.
    Heights {
        #[arg(long)]
        s: Option<u64>,
        #[arg(long)]
        r: Option<u64>,
        #[arg(long)]
        module_file: Option<PathBuf>,
    },
    /// Write a seeded module file with Frobenius V diag(E I_d, I_{h-d}).
    Module {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        h: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        t: Option<usize>,
    },
}

fn run(command: Command) -> Result<Report, CliError> {
    match command {
        Command::Invariants { p, poly } => commands::invariants(p, &poly),
        Command::Bound {
            p,
            e,
            tau,
            iota,
            poly,
            search_prec,
            search_n,
            variant,
        } => commands::bound(&BoundArgs {
            p,
            e,
            tau,
            iota,
            poly,
            search_prec,
            search_n,
            variant: Some(variant),
        }),
        Command::Verify {
            suite,
            p,
            e,
            poly,
            n,
            budget,
            seeds,
            samples,
        } => commands::verify(&VerifyArgs {
            suite,
            p,
            e,
            poly,
            n,
            budget,
            seeds,
            samples,
        }),
        Command::Heights { s, r, module_file } => commands::heights(s, r, module_file.as_deref()),
        Command::Module { .. } => unreachable!("handled before dispatch"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Module {
        p,
        poly,
        n,
        d,
        h,
        seed,
        t,
    } = &cli.command
    {
        return match commands::build_module(*p, poly, *n, *d, *h, *seed, *t) {
            Ok(text) => {
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        };
    }
    let json = cli.json;
    match run(cli.command) {
        Ok(report) => {
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report.json).expect("values serialize")
                );
            } else {
                print!("{}", render_text(&report.json));
            }
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            if json {
                let v = serde_json::json!({
                    "schema": ramify_cli::output::SCHEMA,
                    "error": e.to_string(),
                    "exit_code": e.exit_code().to_string(),
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&v).expect("values serialize")
                );
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
