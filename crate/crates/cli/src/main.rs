mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "zrp",
    version,
    about = "Impurity bound states and resonances of a 2D electron in crossed magnetic and electric fields",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Output file [default: zrp_<command>.<format>]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RootMode {
    FixedIm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceModeArg {
    FixedIm,
    FixedEbind,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Zero-field bound and impurity states, one per Landau interval.
    Bound {
        #[arg(long, allow_hyphen_values = true)]
        ebind: f64,
        /// Highest Landau level n; roots for 0..=n are written.
        #[arg(long)]
        levels: i64,
        #[command(flatten)]
        output: Output,
    },
    /// One evaluation of the scaled denominator.
    Denom {
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, allow_hyphen_values = true)]
        ebind: f64,
        #[arg(long)]
        field: f64,
        /// Relative quadrature tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Contour depth below the real axis [default: automatic].
        #[arg(long)]
        depth: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// |D̃| on a (Re Ẽ, field) grid at fixed Im Ẽ, plus its local minima.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        re_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        re_max: f64,
        #[arg(long)]
        field_min: f64,
        #[arg(long)]
        field_max: f64,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, allow_hyphen_values = true)]
        ebind: f64,
        /// Grid size as NxM (Re Ẽ cells x field cells).
        #[arg(long, default_value = "64x64")]
        cells: String,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Polish one root from a seed.
    Roots {
        #[arg(long, value_enum, default_value = "fixed-im")]
        mode: RootMode,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, allow_hyphen_values = true)]
        ebind: f64,
        #[arg(long)]
        seed_re: f64,
        #[arg(long)]
        seed_field: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Continue a resonance along a branch.
    Trace {
        #[arg(long, value_enum)]
        mode: TraceModeArg,
        #[arg(long, allow_hyphen_values = true)]
        im: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        start_ebind: Option<f64>,
        #[arg(long)]
        start_re: Option<f64>,
        #[arg(long)]
        start_field: Option<f64>,
        /// Fixed-im only: +1, -1, or 0 for both ways.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        direction: i32,
        #[arg(long, allow_hyphen_values = true)]
        ebind: Option<f64>,
        #[arg(long)]
        f_start: Option<f64>,
        #[arg(long)]
        f_end: Option<f64>,
        #[arg(long)]
        seed_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        seed_im: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 2000)]
        max_steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Count the resonances of one Landau level at fixed Im Ẽ and Ẽ_B.
    Census {
        #[arg(long)]
        level: i64,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, allow_hyphen_values = true)]
        ebind: f64,
        #[arg(long, default_value_t = 1.0)]
        f_max: f64,
        #[arg(long, default_value_t = 96)]
        cells: usize,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Laboratory realization of the reference resonance for several binding energies.
    Table1 {
        /// Binding energies |E_B| in meV.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
        binding_list: Vec<f64>,
        /// Effective mass in units of the electron mass.
        #[arg(long, default_value_t = 0.067)]
        mass: f64,
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let argv = match config::expand_argv(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
