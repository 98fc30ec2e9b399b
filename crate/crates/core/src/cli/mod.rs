//! `aircomp` command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid configuration or input, 3 when the
//! channel redraw budget runs out, 1 for I/O failures.

mod output;
mod plot;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{communication_efficiency, EfficiencyScheme};
use crate::engine::{run_sweep, run_sweep_with_workers};
use crate::error::Error;
use crate::system::{parse_list, SystemConfig};

pub use output::{compare_csv, sweep_csv, sweep_json, RunManifest, CSV_HEADER, JSON_SCHEMA_VERSION};
pub use plot::{plot_svg, PlotError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "AIRCOMP_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "aircomp", version, about = "Two-cell over-the-air computation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an SNR sweep and write per-point statistics.
    Run(RunArgs),
    /// Tabulate communication efficiency of conventional IA and SIA.
    Compare(CompareArgs),
    /// Draw NMSE against SNR from one or more run CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat key = value file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    antennas: Option<String>,
    #[arg(long)]
    devices: Option<String>,
    /// Comma-separated SNR points in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// sia, no_ia or genie.
    #[arg(long)]
    scheme: Option<String>,
    /// sum, mean or geomean.
    #[arg(long)]
    function: Option<String>,
    /// received or symbol.
    #[arg(long = "snr-reference")]
    snr_reference: Option<String>,
    /// random or fixed.
    #[arg(long)]
    reference: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long = "antennas-list")]
    antennas_list: String,
    #[arg(long = "devices-list")]
    devices_list: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::DegenerateChannels { .. } => EXIT_DEGENERATE,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn resolve_config(args: &RunArgs) -> Result<SystemConfig, Failure> {
    let mut cfg = SystemConfig::default();
    let mut seed_given = false;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        cfg.apply_kv_str(&text)?;
        seed_given = text
            .lines()
            .any(|l| l.split_once('=').is_some_and(|(k, _)| k.trim() == "seed"));
    }
    let flags = [
        ("antennas", &args.antennas),
        ("devices", &args.devices),
        ("snr_db_grid", &args.snr_db),
        ("trials", &args.trials),
        ("seed", &args.seed),
        ("scheme", &args.scheme),
        ("function", &args.function),
        ("snr_reference", &args.snr_reference),
        ("reference", &args.reference),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    seed_given |= args.seed.is_some();
    if std::env::var_os("CI").is_some() && !seed_given {
        return Err(Failure::config("--seed is required in CI mode"));
    }
    cfg.validate_sweep()?;
    Ok(cfg)
}

fn workers_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Failure::io(path, e)),
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let cfg = resolve_config(&args)?;
    let result = match workers_from_env()? {
        Some(n) => run_sweep_with_workers(&cfg, n)?,
        None => run_sweep(&cfg)?,
    };
    let manifest = RunManifest::new(&cfg, args.out.as_deref());
    let body = match args.format {
        Format::Csv => sweep_csv(&manifest, &result),
        Format::Json => sweep_json(&manifest, &result),
    };
    write_output(args.out.as_deref(), &body)
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let antennas: Vec<u64> = parse_list(&args.antennas_list)?;
    let devices: Vec<u64> = parse_list(&args.devices_list)?;
    if antennas.is_empty() || devices.is_empty() {
        return Err(Failure::config("antenna and device lists must be non-empty"));
    }
    let mut rows = Vec::new();
    for &m in &antennas {
        for &k in &devices {
            rows.push(communication_efficiency(EfficiencyScheme::Sia, m, k)?);
            rows.push(communication_efficiency(EfficiencyScheme::ConventionalIa, m, k)?);
        }
    }
    let preamble = format!(
        "# tool: {} {}\n# timestamp: {}\n# antennas_list: {}\n# devices_list: {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        chrono::Utc::now().to_rfc3339(),
        args.antennas_list,
        args.devices_list
    );
    write_output(args.out.as_deref(), &(preamble + &compare_csv(&rows)))
}

fn cmd_plot(args: PlotArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.input).map_err(|e| Failure::io(&args.input, e))?;
    let svg = plot_svg(&text).map_err(|e| Failure::config(e.to_string()))?;
    fs::write(&args.out, svg).map_err(|e| Failure::io(&args.out, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_exit_codes() {
        assert_eq!(Failure::from(Error::DegenerateChannels { retries: 100 }).code, EXIT_DEGENERATE);
        assert_eq!(Failure::from(Error::Config("x".into())).code, EXIT_CONFIG);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(main_with_args(["aircomp", "--help"]), EXIT_OK);
        assert_eq!(main_with_args(["aircomp"]), EXIT_CONFIG);
    }
}
