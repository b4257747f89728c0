use std::fs;
use std::io::Write;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use conservafuse::audit::{audit, AuditConfig};
use conservafuse::figures::write_figures;
use conservafuse::io::{
    AuditJson, DirectionAnalysisJson, ErrorJson, FusionResultJson, OptimizeJson, Problem, ProblemFile,
};
use conservafuse::optimize::DEFAULT_TOL_OMEGA;
use conservafuse::{
    bar_shalom_campo, ci_bound, information_fusion, optimize_omega, rho_bound, sci_bound, CostFunction,
    FusionError, SciPrecisionCurve, Tolerances,
};
use nalgebra::DVector;
use serde::Serialize;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_INTERNAL: u8 = 4;
const EXIT_AUDIT_FAIL: u8 = 1;

/// Conservative fusion of two estimates with split covariances.
#[derive(Parser)]
#[command(name = "conservafuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse the two estimates with one rule and print the bound and gains.
    Fuse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Weight for ci, sci and rho.
        #[arg(long)]
        omega: Option<f64>,
        /// Correlation bound for rho (defaults to the problem file value).
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Minimize a cost of the SCI bound over omega.
    Optimize {
        #[arg(long)]
        input: PathBuf,
        /// trace, logdet or maxEigenvalue.
        #[arg(long, default_value = "trace")]
        cost: String,
        #[arg(long, default_value_t = DEFAULT_TOL_OMEGA)]
        tol: f64,
    },
    /// Check SCI conservativeness against sampled cross-covariances.
    Audit {
        #[arg(long)]
        input: PathBuf,
        /// Number of omega values in [0, 1].
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale every bound by this factor before checking.
        #[arg(long)]
        deflate: Option<f64>,
    },
    /// Write the planar CSV tables into a directory.
    Figures {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
    /// Minimal fused precision along a direction and its worst-case cross-covariance.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated direction, e.g. 1,0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bsc,
    If,
    Ci,
    Sci,
    Rho,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Self::Bsc => "bsc",
            Self::If => "if",
            Self::Ci => "ci",
            Self::Sci => "sci",
            Self::Rho => "rho",
        }
    }
}

struct Failure {
    kind: String,
    message: String,
    code: u8,
}

impl From<FusionError> for Failure {
    fn from(e: FusionError) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
            code: if e.is_numeric() { EXIT_NUMERIC } else { EXIT_INPUT },
        }
    }
}

fn input_error(kind: &str, message: impl Into<String>) -> Failure {
    Failure {
        kind: kind.to_string(),
        message: message.into(),
        code: EXIT_INPUT,
    }
}

fn tolerances() -> Result<Tolerances, Failure> {
    match std::env::var("CONSERVAFUSE_TOL") {
        Err(_) => Ok(Tolerances::default()),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(Tolerances::uniform(t)),
            _ => Err(input_error("InvalidTolerance", format!("CONSERVAFUSE_TOL must be a positive number, got '{s}'"))),
        },
    }
}

fn load(path: &PathBuf) -> Result<Problem, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_error("InputUnreadable", format!("{}: {e}", path.display())))?;
    Ok(ProblemFile::parse(&text)?.validate(&tolerances()?)?)
}

fn require(value: Option<f64>, flag: &str, method: Method) -> Result<f64, Failure> {
    value.ok_or_else(|| input_error("MissingParameter", format!("method {} requires --{flag}", method.name())))
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    let mut out = std::io::stdout().lock();
    // A closed pipe (e.g. `| head`) is not an error for the caller.
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            panic!("failed printing to stdout: {e}");
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Fuse {
            input,
            method,
            omega,
            rho,
        } => {
            let p = load(&input)?;
            let means = p.a.mean().zip(p.b.mean());
            let result = match method {
                Method::Bsc => {
                    let pab = p.cross.first().ok_or_else(|| {
                        input_error("MissingParameter", "method bsc requires P_AB in the problem file")
                    })?;
                    bar_shalom_campo(&p.a, &p.b, pab)?
                }
                Method::If => information_fusion(&p.a, &p.b)?,
                Method::Ci => ci_bound(p.a.c(), p.b.c(), require(omega, "omega", method)?, means)?,
                Method::Sci => sci_bound(&p.a, &p.b, require(omega, "omega", method)?)?,
                Method::Rho => {
                    let rho = require(rho.or(p.rho), "rho", method)?;
                    rho_bound(p.a.c(), p.b.c(), rho, require(omega, "omega", method)?, means)?
                }
            };
            print_json(&FusionResultJson::new(method.name(), &result));
            Ok(0)
        }
        Command::Optimize { input, cost, tol } => {
            let p = load(&input)?;
            let cost: CostFunction = cost.parse()?;
            let o = optimize_omega(&p.a, &p.b, &cost, tol)?;
            print_json(&OptimizeJson::new(&cost, &o));
            Ok(0)
        }
        Command::Audit {
            input,
            grid,
            samples,
            seed,
            deflate,
        } => {
            let p = load(&input)?;
            let config = AuditConfig {
                omega_grid: grid,
                samples,
                seed,
                deflate,
            };
            let report = audit(&p.a, &p.b, &config)?;
            print_json(&AuditJson::new(&config, &report));
            Ok(if report.pass { 0 } else { EXIT_AUDIT_FAIL })
        }
        Command::Figures { input, out } => {
            let p = load(&input)?;
            if p.a.dim() != 2 {
                return Err(FusionError::DimensionNotTwo { found: p.a.dim() }.into());
            }
            let paths = write_figures(&p.a, &p.b, &out).map_err(|e| match e.into_inner() {
                Some(inner) => match inner.downcast::<FusionError>() {
                    Ok(f) => Failure::from(*f),
                    Err(other) => input_error("OutputUnwritable", other.to_string()),
                },
                None => input_error("OutputUnwritable", format!("cannot write to {}", out.display())),
            })?;
            let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            print_json(&serde_json::json!({ "written": names }));
            Ok(0)
        }
        Command::Analyze { input, x } => {
            let p = load(&input)?;
            let curve = SciPrecisionCurve::new(p.a, p.b)?;
            let analysis = curve.analyze(&DVector::from_vec(x))?;
            print_json(&DirectionAnalysisJson::new(&analysis));
            Ok(0)
        }
    }
}

fn report(f: Failure) -> ExitCode {
    let e = ErrorJson::new(&f.kind, f.message, f.code as i32);
    eprintln!("{}", serde_json::to_string(&e).expect("serializable error"));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(input_error("UsageError", e.to_string().trim_end())),
    };
    panic::set_hook(Box::new(|_| {}));
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(f)) => report(f),
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "internal error".to_string());
            report(Failure {
                kind: "Internal".to_string(),
                message,
                code: EXIT_INTERNAL,
            })
        }
    }
}
