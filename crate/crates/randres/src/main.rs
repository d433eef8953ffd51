//! Thin binary wrapper around [`randres::cli`]: parses flags, applies the
//! `RANDRES_THREADS` cap, runs the selected experiment and prints the run
//! report. Errors map to exit codes: 2 for configuration problems, 3 for
//! numerical non-convergence, 1 for I/O.

use clap::Parser;

fn main() {
    let cli = randres::cli::Cli::parse();
    if let Err(e) = randres::cli::init_threads() {
        eprintln!("randres: {e}");
        std::process::exit(e.exit_code());
    }
    match randres::cli::run(&cli) {
        Ok(report) => print!("{}", report.render()),
        Err(e) => {
            eprintln!("randres: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
