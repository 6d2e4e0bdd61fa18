//! `fairbid` — command-line front end for the constrained autobidding engine.
//!
//! Subcommands: `solve` (LP solver), `round` (rounding a saved fractional
//! solution), `oracle` (exact small-instance solvers), `online` (per-step
//! bidder), `simulate` (one strategy run), `compare` (budget sweep), and
//! `generate` (synthetic population to CSV).
//!
//! Exit codes: 0 success, 1 validation/config error, 2 infeasibility or
//! refusal (size limits, ctr ≠ 1 deterministic rounding, intersecting
//! groups, degenerate bounds).

mod commands;
mod output;

use clap::Parser;

fn main() {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version pseudo-errors still exit 0
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match commands::run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(output::exit_code(&e));
        }
    }
}
