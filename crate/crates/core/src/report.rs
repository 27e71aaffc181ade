//! Machine-readable reports.
//!
//! Reports are pretty-printed JSON in which every real number is written at
//! 17 significant digits, so values survive a text round trip bit for bit and
//! identical runs produce identical bytes. Nothing time-dependent is written.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::critical::{CriticalPointRecord, ProbeSummary};
use crate::entropy::{EntropyReport, StationarityResidual};
use crate::manifold::{OptimizerConfig, Termination};
use crate::numfmt::format_sig17;
use crate::search::{Catalog, RunSummary};

/// Pretty JSON with reals at 17 significant digits.
struct Sig17Formatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for Sig17Formatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(format_sig17(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes `value` as a report, with a trailing newline.
pub fn to_report_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let formatter = Sig17Formatter {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

const NON_SMOOTH_NOTE: &str =
    "non-smooth point: some entry is below 1e-3 in magnitude, so Hessian curvatures depend on the step; signs are confirmed by perturbation probes";
const SATURATION_NOTE: &str =
    "saturates the n ln n bound: every entry has magnitude n^(-1/2) (a rescaled Hadamard matrix)";

/// Free-text remarks attached to a classified point.
pub fn record_notes(record: &CriticalPointRecord) -> Vec<String> {
    let mut notes = Vec::new();
    if record.non_smooth {
        notes.push(NON_SMOOTH_NOTE.to_string());
    }
    let n = record.matrix.n() as f64;
    if (n * n.ln() - record.entropy).abs() <= 1e-9 {
        notes.push(SATURATION_NOTE.to_string());
    }
    notes
}

#[derive(Debug, Serialize)]
pub struct EntropyOutput<'a> {
    #[serde(flatten)]
    pub report: &'a EntropyReport,
    pub defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<EntropyBits>,
}

/// The same report in base 2, for display.
#[derive(Debug, Serialize)]
pub struct EntropyBits {
    pub entropy: f64,
    pub bound: f64,
    pub deficit: f64,
    pub per_row: Vec<f64>,
}

impl EntropyBits {
    pub fn from_nats(r: &EntropyReport) -> Self {
        let k = std::f64::consts::LOG2_E;
        Self {
            entropy: r.entropy * k,
            bound: r.bound * k,
            deficit: r.deficit * k,
            per_row: r.per_row.iter().map(|h| h * k).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RecordOutput {
    pub n: usize,
    pub classification: String,
    pub index: usize,
    pub entropy: f64,
    pub alpha: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub eigenvalues: Vec<f64>,
    pub step: f64,
    pub symmetry_residual: f64,
    pub fingerprint: String,
    pub non_smooth: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<ProbeSummary>,
    pub notes: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl From<&CriticalPointRecord> for RecordOutput {
    fn from(r: &CriticalPointRecord) -> Self {
        Self {
            n: r.matrix.n(),
            classification: r.classification.to_string(),
            index: r.index,
            entropy: r.entropy,
            alpha: r.alpha,
            objective: r.objective,
            grad_norm: r.grad_norm,
            eigenvalues: r.eigenvalues.clone(),
            step: r.step,
            symmetry_residual: r.symmetry_residual,
            fingerprint: r.fingerprint.to_string(),
            non_smooth: r.non_smooth,
            probes: r.probes.clone(),
            notes: record_notes(r),
            matrix: r.matrix.matrix().rows(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyConfig {
    pub input: String,
    pub step: f64,
    pub grad_tol: f64,
    pub zero_frac: f64,
    pub probe_seed: u64,
}

#[derive(Debug, Serialize)]
pub struct ClassifyOutput {
    pub config: ClassifyConfig,
    pub record: RecordOutput,
}

#[derive(Debug, Serialize)]
pub struct ResidualEntry {
    pub alpha: f64,
    pub max_abs: f64,
}

#[derive(Debug, Serialize)]
pub struct ResidualOutput {
    pub n: usize,
    pub defect: f64,
    pub residuals: Vec<ResidualEntry>,
}

impl ResidualOutput {
    pub fn new(n: usize, defect: f64, residuals: &[StationarityResidual]) -> Self {
        Self {
            n,
            defect,
            residuals: residuals
                .iter()
                .map(|r| ResidualEntry {
                    alpha: r.alpha,
                    max_abs: r.max_abs,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunOutput {
    pub index: usize,
    pub seed: u64,
    pub iterations: usize,
    pub final_entropy: f64,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    pub monotone: bool,
    pub max_defect: f64,
}

impl From<&RunSummary> for RunOutput {
    fn from(r: &RunSummary) -> Self {
        Self {
            index: r.index,
            seed: r.seed,
            iterations: r.iterations,
            final_entropy: r.final_entropy,
            final_objective: r.final_objective,
            final_grad_norm: r.final_grad_norm,
            converged: r.converged,
            termination: r.termination,
            monotone: r.monotone,
            max_defect: r.max_defect,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CatalogSummary {
    pub runs: usize,
    pub converged: usize,
    pub stalled: usize,
    pub distinct_points: usize,
    pub bound: f64,
    pub best_entropy: Option<f64>,
    pub best_objective: Option<f64>,
    pub best_classification: Option<String>,
    pub best_fingerprint: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CatalogPointOutput {
    pub rank: usize,
    pub hits: usize,
    pub first_run: usize,
    #[serde(flatten)]
    pub record: RecordOutput,
}

#[derive(Debug, Serialize)]
pub struct CatalogOutput<'a> {
    pub config: &'a OptimizerConfig,
    pub summary: CatalogSummary,
    pub critical_points: Vec<CatalogPointOutput>,
    pub runs: Vec<RunOutput>,
}

impl<'a> From<&'a Catalog> for CatalogOutput<'a> {
    fn from(c: &'a Catalog) -> Self {
        let best = c.best();
        let n = c.config.n as f64;
        Self {
            config: &c.config,
            summary: CatalogSummary {
                runs: c.runs.len(),
                converged: c.converged_runs(),
                stalled: c.stalled_runs(),
                distinct_points: c.points.len(),
                bound: n * n.ln(),
                best_entropy: best.map(|b| b.record.entropy),
                best_objective: best.map(|b| b.record.objective),
                best_classification: best.map(|b| b.record.classification.to_string()),
                best_fingerprint: best.map(|b| b.record.fingerprint.to_string()),
            },
            critical_points: c
                .points
                .iter()
                .enumerate()
                .map(|(rank, p)| CatalogPointOutput {
                    rank,
                    hits: p.hits,
                    first_run: p.first_run,
                    record: RecordOutput::from(&p.record),
                })
                .collect(),
            runs: c.runs.iter().map(RunOutput::from).collect(),
        }
    }
}
