//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input (unreadable,
//! malformed, non-orthogonal or non-stationary matrix), 3 numerical failure
//! (no optimizer run converged).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::critical::{
    classify_with, ClassifyOptions, DEFAULT_HESSIAN_STEP, DEFAULT_PROBE_SEED,
    DEFAULT_STATIONARY_TOL, DEFAULT_ZERO_FRAC,
};
use crate::entropy::{entropy_bound, shannon_entropy, stationarity_residual};
use crate::error::Error;
use crate::manifold::{Objective, OptimizerConfig};
use crate::matrix::{
    family_matrix, load_matrix, rescaled_hadamard, sylvester_hadamard, OrthogonalMatrix,
};
use crate::numfmt::format_sig17;
use crate::report::{
    to_report_string, CatalogOutput, ClassifyConfig, ClassifyOutput, EntropyBits, EntropyOutput,
    RecordOutput, ResidualOutput,
};
use crate::search::multistart_search;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ortho-entropy",
    version,
    about = "Entropy of orthogonal matrices: evaluation, ascent on O(n), critical-point classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy report for an orthogonal matrix file.
    Entropy {
        #[arg(long)]
        input: PathBuf,
        /// Also show the values in bits.
        #[arg(long)]
        bits: bool,
    },
    /// Multistart Riemannian ascent from Haar-random starts.
    Optimize {
        #[arg(long)]
        n: usize,
        /// Objective exponent; 1 is the Shannon entropy.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        /// Master seed; per-run seeds are derived from it.
        #[arg(long)]
        seed: u64,
        /// Riemannian gradient norm at which a run is converged.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long = "max-iters", default_value_t = 10_000)]
        max_iters: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a stationary matrix as maximum, minimum or saddle.
    Classify {
        #[arg(long)]
        input: PathBuf,
        /// Finite-difference step of the tangent Hessian.
        #[arg(long, default_value_t = DEFAULT_HESSIAN_STEP)]
        step: f64,
        #[arg(long = "grad-tol", default_value_t = DEFAULT_STATIONARY_TOL)]
        grad_tol: f64,
        #[arg(long = "zero-frac", default_value_t = DEFAULT_ZERO_FRAC)]
        zero_frac: f64,
        /// Seed for the perturbation probes run at non-smooth points.
        #[arg(long = "probe-seed", default_value_t = DEFAULT_PROBE_SEED)]
        probe_seed: u64,
    },
    /// Residual of the extremum equations for each exponent.
    Residual {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated exponents, e.g. 0.5,1,2.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        alpha: Vec<f64>,
    },
    /// Sylvester Hadamard matrix of order 2^k.
    Hadamard {
        #[arg(long)]
        k: u32,
        /// Divide by sqrt(n) to get an orthogonal matrix.
        #[arg(long)]
        rescale: bool,
    },
    /// The orthogonal matrix (2/n)J - I.
    Family {
        #[arg(long)]
        n: usize,
    },
    /// Print the entropy bound n ln n.
    Bound {
        #[arg(long)]
        n: usize,
    },
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn input(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INVALID_INPUT,
            message: e.to_string(),
        }
    }
}

fn read_matrix(path: &Path) -> Result<OrthogonalMatrix, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let m = load_matrix(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    OrthogonalMatrix::new(m).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Runs the CLI on `args` (program name first), writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Runs the CLI against the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::input(format!("cannot write output: {e}")))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Entropy { input, bits } => {
            let o = read_matrix(&input)?;
            let report = shannon_entropy(&o);
            let text = to_report_string(&EntropyOutput {
                report: &report,
                defect: o.defect(),
                bits: bits.then(|| EntropyBits::from_nats(&report)),
            });
            write_out(out, &text)
        }
        Command::Optimize {
            n,
            alpha,
            restarts,
            seed,
            tol,
            max_iters,
            out: path,
        } => {
            let config = OptimizerConfig {
                alpha,
                restarts,
                master_seed: seed,
                grad_tol: tol,
                max_iters,
                ..OptimizerConfig::new(n)
            };
            config.validate().map_err(Failure::usage)?;
            let catalog = multistart_search(&config).map_err(|e| Failure {
                code: EXIT_NUMERICAL,
                message: e.to_string(),
            })?;
            let text = to_report_string(&CatalogOutput::from(&catalog));
            match path {
                Some(p) => {
                    fs::write(&p, &text).map_err(|e| {
                        Failure::usage(format!("cannot write {}: {e}", p.display()))
                    })?;
                    let _ = writeln!(
                        err,
                        "{} of {} runs converged; {} distinct critical points; report written to {}",
                        catalog.converged_runs(),
                        catalog.runs.len(),
                        catalog.points.len(),
                        p.display()
                    );
                }
                None => write_out(out, &text)?,
            }
            if catalog.converged_runs() == 0 {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    message: format!(
                        "no run converged ({} stalled of {})",
                        catalog.stalled_runs(),
                        catalog.runs.len()
                    ),
                });
            }
            Ok(())
        }
        Command::Classify {
            input,
            step,
            grad_tol,
            zero_frac,
            probe_seed,
        } => {
            if !(step > 0.0) || !(grad_tol > 0.0) || !(zero_frac >= 0.0) {
                return Err(Failure::usage(
                    "--step and --grad-tol must be positive, --zero-frac non-negative",
                ));
            }
            let o = read_matrix(&input)?;
            let options = ClassifyOptions {
                grad_tol,
                zero_frac,
                step,
                probe_seed,
            };
            let record = classify_with(&Objective::Shannon, &o, &options).map_err(|e| match e {
                Error::NotStationary { .. } => Failure::input(e),
                other => Failure {
                    code: EXIT_NUMERICAL,
                    message: other.to_string(),
                },
            })?;
            let text = to_report_string(&ClassifyOutput {
                config: ClassifyConfig {
                    input: input.display().to_string(),
                    step,
                    grad_tol,
                    zero_frac,
                    probe_seed,
                },
                record: RecordOutput::from(&record),
            });
            write_out(out, &text)
        }
        Command::Residual { input, alpha } => {
            if let Some(bad) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                return Err(Failure::usage(format!("alpha must be positive, got {bad}")));
            }
            let o = read_matrix(&input)?;
            let residuals = alpha
                .iter()
                .map(|&a| stationarity_residual(&o, a))
                .collect::<Result<Vec<_>, _>>()
                .map_err(Failure::usage)?;
            write_out(
                out,
                &to_report_string(&ResidualOutput::new(o.n(), o.defect(), &residuals)),
            )
        }
        Command::Hadamard { k, rescale } => {
            let m = if rescale {
                rescaled_hadamard(k).map(OrthogonalMatrix::into_matrix)
            } else {
                sylvester_hadamard(k)
            }
            .map_err(Failure::usage)?;
            write_out(out, &m.render())
        }
        Command::Family { n } => {
            let m = family_matrix(n).map_err(Failure::usage)?;
            if n == 4 {
                let _ = writeln!(
                    err,
                    "note: at n = 4 the magnitudes (n-2)/n and 2/n coincide, so this matrix is a rescaled Hadamard matrix and saturates the bound"
                );
            }
            write_out(out, &m.matrix().render())
        }
        Command::Bound { n } => {
            let b = entropy_bound(n).map_err(Failure::usage)?;
            write_out(out, &format!("{}\n", format_sig17(b)))
        }
    }
}
