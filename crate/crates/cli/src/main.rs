mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use output::Format;

/// Random transpositions and related chains on contingency tables.
#[derive(Parser, Debug)]
#[command(name = "coset-chains", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// One comma-separated margin; the alias keeps clap from reading it as repeated values.
pub type Margin = Vec<u32>;

#[derive(Args, Debug, Clone)]
pub struct Margins {
    /// Row sums, comma separated (e.g. 3,2).
    #[arg(long, value_parser = parse_margin)]
    pub rows: Margin,
    /// Column sums, comma separated (e.g. 2,2,1).
    #[arg(long, value_parser = parse_margin)]
    pub cols: Margin,
}

#[derive(Args, Debug, Clone)]
pub struct OptionalMargins {
    /// Row sums, comma separated.
    #[arg(long, value_parser = parse_margin)]
    pub rows: Option<Margin>,
    /// Column sums, comma separated.
    #[arg(long, value_parser = parse_margin)]
    pub cols: Option<Margin>,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print probabilities as exact fractions.
    #[arg(long)]
    pub exact: bool,
}

/// Starting state: a table file, an inline table, or an enumeration index.
#[derive(Args, Debug, Clone)]
pub struct Start {
    /// Table file (CSV rows, or JSON with rows/row_sums/col_sums).
    #[arg(long, conflicts_with_all = ["state", "start"])]
    pub table: Option<PathBuf>,
    /// Inline table such as 2,1,0;0,1,1.
    #[arg(long, conflicts_with = "start")]
    pub state: Option<String>,
    /// Index into the enumeration order.
    #[arg(long)]
    pub start: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List every table with the margins, with coset sizes and probabilities.
    Enumerate {
        #[command(flatten)]
        margins: Margins,
        /// Print only the number of tables.
        #[arg(long)]
        count_only: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Fisher-Yates probability of one table, or of every table.
    Pmf {
        #[command(flatten)]
        margins: OptionalMargins,
        #[command(flatten)]
        start: Start,
        #[command(flatten)]
        output: Output,
    },
    /// Exact Fisher-Yates draws.
    Sample {
        #[command(flatten)]
        margins: Margins,
        /// Number of tables to draw.
        #[arg(long = "n", default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form spectrum of random transpositions, optionally checked by eigensolver.
    Spectrum {
        #[command(flatten)]
        margins: Margins,
        /// Also compute the eigenvalues numerically and compare.
        #[arg(long)]
        brute_force: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Distribution after t steps from a starting table, or a sampled path.
    Evolve {
        #[command(flatten)]
        margins: OptionalMargins,
        #[command(flatten)]
        start: Start,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, default_value = "rt")]
        chain: String,
        /// Emit one sampled trajectory as JSON lines instead.
        #[arg(long)]
        trajectory: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// TV and chi-square distance profile from a start, with a spectral bound.
    Mix {
        #[command(flatten)]
        margins: OptionalMargins,
        #[command(flatten)]
        start: Start,
        #[arg(long, default_value_t = 50)]
        t_max: usize,
        #[arg(long, default_value = "rt")]
        chain: String,
        /// Also estimate TV by simulation with this many paths.
        #[arg(long, default_value_t = 0)]
        paths: usize,
        /// Worker threads for simulation (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also report the exact worst-case t_mix at this epsilon.
        #[arg(long)]
        eps: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Wilson lower bounds on t_mix from the linear eigenfunctions.
    Wilson {
        #[command(flatten)]
        margins: Margins,
        /// One cell as i,j (1-based); all cells by default.
        #[arg(long)]
        cell: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        c: f64,
        /// Also compute the exact t_mix(1/4) for comparison.
        #[arg(long)]
        with_exact: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Extreme-state and averaged chi-square bounds for two-row margins.
    Bounds {
        #[command(flatten)]
        margins: Margins,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        c: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Relaxation times of the four chains and the comparison inequalities.
    Compare {
        #[command(flatten)]
        margins: Margins,
        #[command(flatten)]
        output: Output,
    },
    /// Residuals, chi-square and its eigenfunction decomposition for a table.
    Analyze {
        /// Bundled dataset: midtown, victoria or hair_eye.
        #[arg(long, conflicts_with_all = ["table", "state"])]
        dataset: Option<String>,
        #[arg(long, conflicts_with = "state")]
        table: Option<PathBuf>,
        #[arg(long)]
        state: Option<String>,
        /// Include the normalized quadratic residual panel.
        #[arg(long)]
        panel: bool,
        #[arg(long, default_value_t = 4000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Checks the three-way chain: row sums, detailed balance, irreducibility.
    ThreeWay {
        #[command(flatten)]
        margins: Margins,
        /// Third margin, comma separated.
        #[arg(long, value_parser = parse_margin)]
        layers: Margin,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_margin(s: &str) -> Result<Margin, String> {
    coset_chains::partitions::parse_list(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
