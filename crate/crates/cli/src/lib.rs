//! The `finmf` command-line tool.
//!
//! Output goes to the given writers only after a command has succeeded; on
//! failure a single JSON diagnostic is written to the error stream. Exit
//! codes: 0 success, 1 usage error, 2 computation over a configured cap,
//! 3 invariant violation.

pub mod cache;
pub mod commands;
pub mod error;
pub mod output;
pub mod parse;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use finmf_core::engine::DEFAULT_GRID_CAP;
use finmf_core::group::DEFAULT_ORDER_CAP;
use finmf_core::surfaces::{DEFAULT_COUNT_CAP, DEFAULT_MATERIALIZE_CAP};

pub use error::CliError;
pub use output::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "finmf", version, about = "Exact modular-functor computations for finite groups")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `preset:NAME` (Z4, D4, S3, Q8, Z2xS3, cyclic:5, ...) or `file:PATH`.
    #[arg(long, global = true, default_value = "preset:Z2")]
    pub group: String,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Cap on streamed bundle states.
    #[arg(long, global = true, default_value_t = DEFAULT_COUNT_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub state_cap: u64,
    /// Cap on stored bundle states.
    #[arg(long, global = true, default_value_t = DEFAULT_MATERIALIZE_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub materialize_cap: u64,
    /// Cap on character-route work.
    #[arg(long, global = true, default_value_t = DEFAULT_GRID_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid_cap: u64,
    /// Cap on the group order.
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub order_cap: u64,
    /// Directory for cached character tables.
    #[arg(long, global = true, env = cache::CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 0)]
    pub genus: usize,
    /// Number of marked boundary points.
    #[arg(long, default_value_t = 1)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conjugacy classes and character table.
    Group {
        /// Include the Cayley table.
        #[arg(long)]
        table: bool,
    },
    /// Simple modules of the Drinfeld double.
    Double {
        /// Include fusion coefficients as [λ, μ, ν, N] records.
        #[arg(long)]
        fusion: bool,
    },
    /// Marked bundles on a surface.
    Bundles {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        count_only: bool,
        /// List every tuple (subject to the materialization cap).
        #[arg(long, conflicts_with = "count_only")]
        list: bool,
    },
    /// Modular-functor dimensions.
    Dims {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Comma-separated labels, one per boundary; default all vacuum.
        #[arg(long)]
        labels: Option<String>,
        /// auto, enumeration, characters, verlinde or all.
        #[arg(long, default_value = "auto")]
        method: String,
        /// Print the full decomposition table instead.
        #[arg(long, conflicts_with = "labels")]
        table: bool,
    },
    /// Cut-and-glue consistency checks.
    GlueCheck {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// `nonseparating` or `separating:GENUS[:NAME,...]`.
        #[arg(long)]
        cut: String,
        #[arg(long)]
        labels: Option<String>,
        /// Check every assignment of simple labels.
        #[arg(long, conflicts_with = "labels")]
        all_labels: bool,
    },
    /// S and T matrices.
    Modular,
    /// Verlinde dimension, closed surfaces included.
    Verlinde {
        #[arg(long, default_value_t = 0)]
        genus: usize,
        #[arg(long, default_value = "")]
        labels: String,
    },
    /// Run the invariant battery.
    Selftest {
        /// Report per-check timings (makes output run-dependent).
        #[arg(long)]
        timings: bool,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let diag = CliError::Usage(e.render().to_string().trim().to_string()).diagnostic();
            let _ = writeln!(err, "{diag}");
            return 1;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let _ = out.write_all(report.render(cli.common.format).as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", e.diagnostic());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.common.threads {
        pool = pool.num_threads(t as usize);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| commands::dispatch(cli))
}
