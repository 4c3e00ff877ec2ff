use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use thermogauge::models::{LMGParams, LZParams};
use thermogauge::{HermitianOperator, QuConvention};
use thermogauge_cli::{
    differentiate, read_csv, scan, twirl_check, write_csv, write_derivative_csv, CliError, CliResult, Model, ScanConfig,
};

/// Gauge-invariant work, heat and entropy scans for quenched quantum systems.
#[derive(Parser)]
#[command(name = "thermogauge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the Landau-Zener model (a g - Δ/2) σz + ε σx.
    Lz(LzArgs),
    /// Scan the Lipkin-Meshkov-Glick model.
    Lmg(LmgArgs),
    /// Scan H(g) = H0 + g H1 for matrices given as JSON files.
    Custom(CustomArgs),
    /// Differentiate a column of a scan CSV with respect to g0.
    Deriv(DerivArgs),
    /// Compare the Monte-Carlo twirl with the exact one.
    TwirlCheck(TwirlArgs),
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    g0_min: Option<f64>,
    #[arg(long)]
    g0_max: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    delta_g: Option<f64>,
    /// Degeneracy tolerance; defaults to 1e-8 max(1, spectral range).
    #[arg(long)]
    deg_tol: Option<f64>,
    /// Accepted for uniformity; scans are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// first-law (Q_u = ΔU - W_u) or zero.
    #[arg(long)]
    qu_convention: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Pick ground states independently at every grid point.
    #[arg(long)]
    no_continuity: bool,
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LzArgs {
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct LmgArgs {
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Total spin; dimension is 2j + 1.
    #[arg(long)]
    j: Option<f64>,
}

#[derive(Args)]
struct CustomArgs {
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long)]
    h0: Option<PathBuf>,
    #[arg(long)]
    h1: Option<PathBuf>,
}

#[derive(Args)]
struct DerivArgs {
    /// Scan CSV to read.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "W_inv")]
    column: String,
    /// 1 or 2.
    #[arg(long, default_value_t = 1)]
    order: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TwirlArgs {
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Level multiplicities, e.g. 3,2,2,1.
    #[arg(long, value_delimiter = ',', default_value = "3,2,2,1")]
    pattern: Vec<usize>,
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    g0_min: Option<f64>,
    g0_max: Option<f64>,
    steps: Option<usize>,
    delta_g: Option<f64>,
    deg_tol: Option<f64>,
    #[allow(dead_code)]
    seed: Option<u64>,
    qu_convention: Option<String>,
    threads: Option<usize>,
    no_continuity: Option<bool>,
    a: Option<f64>,
    delta: Option<f64>,
    eps: Option<f64>,
    k: Option<f64>,
    gamma: Option<f64>,
    j: Option<f64>,
    h0: Option<PathBuf>,
    h1: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
    }
}

struct Defaults {
    g0_min: f64,
    g0_max: f64,
    steps: usize,
    delta_g: f64,
}

fn scan_config(args: &ScanArgs, file: &ConfigFile, d: Defaults) -> CliResult<ScanConfig> {
    let qu = match args.qu_convention.as_ref().or(file.qu_convention.as_ref()) {
        Some(s) => s.parse::<QuConvention>()?,
        None => QuConvention::FirstLaw,
    };
    Ok(ScanConfig {
        g0_min: args.g0_min.or(file.g0_min).unwrap_or(d.g0_min),
        g0_max: args.g0_max.or(file.g0_max).unwrap_or(d.g0_max),
        steps: args.steps.or(file.steps).unwrap_or(d.steps),
        delta_g: args.delta_g.or(file.delta_g).unwrap_or(d.delta_g),
        deg_tol: args.deg_tol.or(file.deg_tol),
        qu_convention: qu,
        continuity: !(args.no_continuity || file.no_continuity.unwrap_or(false)),
        threads: args.threads.or(file.threads),
    })
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_scan(model: Model, args: &ScanArgs, cfg: &ScanConfig) -> CliResult<()> {
    let rows = scan(&model, cfg)?;
    write_csv(&rows, output(args.out.as_deref())?)
}

fn load_operator(path: Option<&PathBuf>, flag: &str) -> CliResult<HermitianOperator> {
    let p = path.ok_or_else(|| CliError::InvalidInput(format!("--{flag} is required")))?;
    Ok(HermitianOperator::from_json_str(&fs::read_to_string(p)?)?)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Lz(a) => {
            let file = load_config(a.scan.config.as_deref())?;
            let cfg = scan_config(
                &a.scan,
                &file,
                Defaults {
                    g0_min: 0.0,
                    g0_max: 0.5,
                    steps: 101,
                    delta_g: 0.1,
                },
            )?;
            let p = LZParams {
                a: a.a.or(file.a).unwrap_or(2.0),
                delta: a.delta.or(file.delta).unwrap_or(1.0),
                eps: a.eps.or(file.eps).unwrap_or(0.001),
                g: 0.0,
            };
            p.validate()?;
            run_scan(Model::Lz(p), &a.scan, &cfg)
        }
        Command::Lmg(a) => {
            let file = load_config(a.scan.config.as_deref())?;
            let cfg = scan_config(
                &a.scan,
                &file,
                Defaults {
                    g0_min: 0.0,
                    g0_max: 2.0,
                    steps: 201,
                    delta_g: 0.01,
                },
            )?;
            let p = LMGParams {
                k: a.k.or(file.k).unwrap_or(1.0),
                gamma: a.gamma.or(file.gamma).unwrap_or(0.75),
                g: 0.0,
                j: a.j.or(file.j).unwrap_or(10.0),
            };
            p.validate()?;
            run_scan(Model::Lmg(p), &a.scan, &cfg)
        }
        Command::Custom(a) => {
            let file = load_config(a.scan.config.as_deref())?;
            let cfg = scan_config(
                &a.scan,
                &file,
                Defaults {
                    g0_min: 0.0,
                    g0_max: 1.0,
                    steps: 101,
                    delta_g: 0.01,
                },
            )?;
            let h0 = load_operator(a.h0.as_ref().or(file.h0.as_ref()), "h0")?;
            let h1 = load_operator(a.h1.as_ref().or(file.h1.as_ref()), "h1")?;
            if h0.dim() != h1.dim() {
                return Err(thermogauge::Error::DimensionMismatch {
                    expected: h0.dim(),
                    found: h1.dim(),
                }
                .into());
            }
            run_scan(Model::Custom { h0, h1 }, &a.scan, &cfg)
        }
        Command::Deriv(a) => {
            let rows = read_csv(&a.input)?;
            let d = differentiate(&rows, &a.column, a.order)?;
            write_derivative_csv(&a.column, a.order, &d, output(a.out.as_deref())?)
        }
        Command::TwirlCheck(a) => {
            let report = twirl_check(a.dim, &a.pattern, a.samples, a.seed)?;
            let mut out = output(a.out.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            out.flush()?;
            if report.pass {
                Ok(())
            } else {
                Err(thermogauge::Error::InternalInconsistency(format!(
                    "twirl estimate off by {:e} with standard error {:e}",
                    report.frobenius_error, report.stderr
                ))
                .into())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
