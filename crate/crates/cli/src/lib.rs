//! Command-line front end: kernel design, graph and image transforms,
//! spread sweeps and verification, with atomic file output.

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

pub mod args;
mod commands;
pub mod error;
mod output;

pub use args::{Cli, Command};
pub use commands::{THETA_WARNING, VERIFY_SNR_DB};
pub use error::{CliError, Failure};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Design(a) => commands::design_cmd(a),
        Command::RandomBipartite(a) => commands::random_bipartite_cmd(a),
        Command::Transform(a) => commands::transform_cmd(a),
        Command::SweepSpreads(a) => commands::sweep_cmd(a),
        Command::Spectrum(a) => commands::spectrum_cmd(a),
        Command::Verify(a) => commands::verify_cmd(a),
    }
}
