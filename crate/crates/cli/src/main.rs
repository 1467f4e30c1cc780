//! `qtl`: command-line front end for circuit/transmission-line analysis.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("{message}")]
    Validation { kind: &'static str, message: String },
    #[error(transparent)]
    Core(#[from] qtl_core::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    pub fn validation(e: qtl_core::Error) -> Self {
        Self::Validation {
            kind: e.kind(),
            message: e.to_string(),
        }
    }

    /// Invariant or failure name.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "ParseError",
            Self::Validation { kind, .. } => kind,
            Self::Core(e) => e.kind(),
            Self::Io { .. } => "IoError",
            Self::Usage(_) => "UsageError",
            Self::Verify(_) => "VerifyMismatch",
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let message = self.to_string();
        match self {
            Self::Parse { line, column, .. } => json!({
                "error": "ParseError", "message": message, "line": line, "column": column,
            }),
            Self::Validation { kind, .. } => json!({
                "error": "ValidationError", "invariant": kind, "message": message,
            }),
            _ => json!({ "error": self.kind(), "message": message }),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qtl",
    version,
    about = "Scattering, memory-kernel and Markov analysis of circuits coupled to transmission lines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a circuit file; prints OK.
    Validate { config: PathBuf },
    /// Scattering matrix G(omega) on a uniform grid.
    Freq {
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        omega_min: f64,
        #[arg(long, default_value_t = 10.0)]
        omega_max: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 201)]
        steps: usize,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Lossless bounded-real (or positive-real) certificate.
    CheckLbr {
        config: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// s: scattering S (bounded real); sigma: Cayley transform (positive
        /// real); memory: Laplace-transformed memory kernel (positive real).
        #[arg(long, value_enum, default_value = "s")]
        transfer: commands::Transfer,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Memory kernels Gamma_k(t) and input commutators sigma_k(t).
    Kernel {
        config: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Free evolution of the circuit with the lines in their vacuum.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Initial charges; defaults to 1 on the first node.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q0: Option<Vec<f64>>,
        /// Initial currents; defaults to zero.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        i0: Option<Vec<f64>>,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Weak-coupling A-B-C model.
    Markov {
        config: PathBuf,
        /// Relative frequency tolerance for degenerate modes.
        #[arg(long, default_value_t = qtl_core::markov::FREQ_TOL)]
        freq_tol: f64,
        /// Compare A/B/C against a previously written model file.
        #[arg(long)]
        verify: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QTL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "QTL_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Freq {
            config,
            omega_min,
            omega_max,
            steps,
            table,
        } => commands::freq(&config, omega_min, omega_max, steps, &table),
        Command::CheckLbr {
            config,
            tol,
            transfer,
            format,
            out,
        } => commands::check_lbr(&config, tol, transfer, format, &out),
        Command::Kernel {
            config,
            t_max,
            dt,
            table,
        } => commands::kernel(&config, t_max, dt, &table),
        Command::Simulate {
            config,
            t_max,
            dt,
            q0,
            i0,
            table,
        } => commands::simulate(&config, t_max, dt, q0, i0, &table),
        Command::Markov {
            config,
            freq_tol,
            verify,
            format,
            out,
        } => commands::markov(&config, freq_tol, verify.as_deref(), format, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().replace('\n', " "));
            eprintln!("{}", err.to_json());
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
