use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ramify_cli::{commands, plot, CliError};

/// Ramified power-series solutions of u_tt = u_x u_xx and the supporting checks.
///
/// The scalar precision can be overridden with RAMIFY_DIGITS (up to 16 selects
/// double precision, up to 31 double-double).
#[derive(Parser)]
#[command(name = "ramify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point iteration; writes report.csv and final.json.
    Iterate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve the Burgers reduction for a0(x) and tabulate shock times.
    Burgers {
        /// Initial value a0(x), e.g. "0" or "x/10".
        #[arg(long, allow_hyphen_values = true)]
        a0: String,
        #[arg(long, default_value_t = 12)]
        order: usize,
        /// Pair X0,X1 of rational squares; may be repeated.
        #[arg(long = "shock", value_name = "X0,X1", default_values_t = ["1/4,1".to_string(), "4/9,25/16".to_string()])]
        shocks: Vec<String>,
    },
    /// Ideal membership of the Poisson brackets of the cusp symbols.
    Ideals,
    /// Initial slices for the datum coefficients c_1, c_2, ...
    Datum {
        /// Comma separated constants, e.g. "1,3/4".
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        /// Number of b_k to print; defaults to the number of coefficients.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Render report.csv as a semilog SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Include components dropped before the last iteration.
        #[arg(long)]
        all: bool,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Iterate { config, out } => commands::cmd_iterate(&config, &out),
        Command::Burgers { a0, order, shocks } => commands::cmd_burgers(&a0, order, &shocks),
        Command::Ideals => Ok(commands::cmd_ideals()),
        Command::Datum { c, n, order } => commands::cmd_datum(&c, n, order),
        Command::Plot { input, out, all } => plot::cmd_plot(&input, &out, all),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
