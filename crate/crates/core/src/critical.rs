//! Classification of stationary points by the signs of a finite-difference
//! Hessian in tangent coordinates.
//!
//! Coordinates `x` parameterize the strict upper triangle of a skew matrix
//! `A(x)`, and the objective is pulled back through the retraction:
//! `f(x) = objective(retract(O, A(x), 1))`. The number of positive Hessian
//! eigenvalues is the Morse index of the point for the ascent objective:
//! 0 at a maximum, `n(n-1)/2` at a minimum.
//!
//! The entropy integrand `-x² ln x²` has an unbounded second derivative at
//! zero entries, so at matrices containing (near-)zero entries the Hessian
//! depends on the step. Such points are flagged `non_smooth` and a batch of
//! random perturbation probes is recorded alongside the Hessian.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::entropy_of;
use crate::error::{Error, Result};
use crate::manifold::{retract, Objective, TangentDirection};
use crate::matrix::{
    canonical_fingerprint, CanonicalFingerprint, OrthogonalMatrix, FINGERPRINT_QUANTUM,
};

pub const DEFAULT_HESSIAN_STEP: f64 = 1e-4;
pub const DEFAULT_STATIONARY_TOL: f64 = 1e-6;
pub const DEFAULT_ZERO_FRAC: f64 = 1e-4;
/// Entries smaller than this make a point `non_smooth`.
pub const NON_SMOOTH_ENTRY: f64 = 1e-3;
pub const PROBE_SAMPLES: usize = 200;
pub const PROBE_RADIUS: f64 = 1e-3;
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed;

/// Second derivatives of the objective along pairs of tangent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentHessian {
    pub dim: usize,
    /// Symmetrized Hessian.
    pub h: DMatrix<f64>,
    pub step: f64,
    /// `max |H_ab - H_ba|` of the stencil output before symmetrization.
    pub symmetry_residual: f64,
}

impl TangentHessian {
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.h.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Finite-difference Hessian of the Shannon entropy at `o`.
pub fn riemannian_hessian(o: &OrthogonalMatrix, step: f64) -> Result<TangentHessian> {
    objective_hessian(&Objective::Shannon, o, step)
}

/// Finite-difference Hessian of any objective at `o`.
///
/// Diagonal entries use the central second difference, off-diagonal entries
/// the four-point cross stencil. Each off-diagonal pair is assembled in both
/// orders from the same four values; the difference is reported as the
/// symmetry residual.
pub fn objective_hessian(
    objective: &Objective,
    o: &OrthogonalMatrix,
    step: f64,
) -> Result<TangentHessian> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Hessian step must be positive, got {step}"
        )));
    }
    let n = o.n();
    let dim = n * n.saturating_sub(1) / 2;
    let eval = |moves: &[(usize, f64)]| -> Result<f64> {
        let mut x = vec![0.0; dim];
        for &(k, d) in moves {
            x[k] += d;
        }
        let a = TangentDirection::from_coordinates(n, &x)?;
        Ok(objective.value(retract(o, &a, 1.0)?.matrix()))
    };
    let f0 = eval(&[])?;
    let h2 = step * step;

    let rows: Vec<Vec<(f64, f64)>> = (0..dim)
        .into_par_iter()
        .map(|a| -> Result<Vec<(f64, f64)>> {
            let mut row = vec![(0.0, 0.0); dim];
            let plus = eval(&[(a, step)])?;
            let minus = eval(&[(a, -step)])?;
            let d = ((plus - f0) + (minus - f0)) / h2;
            row[a] = (d, d);
            for (b, slot) in row.iter_mut().enumerate().skip(a + 1) {
                let pp = eval(&[(a, step), (b, step)])?;
                let pm = eval(&[(a, step), (b, -step)])?;
                let mp = eval(&[(a, -step), (b, step)])?;
                let mm = eval(&[(a, -step), (b, -step)])?;
                let ab = ((pp - pm) - (mp - mm)) / (4.0 * h2);
                let ba = ((pp - mp) - (pm - mm)) / (4.0 * h2);
                *slot = (ab, ba);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut raw = DMatrix::zeros(dim, dim);
    for (a, row) in rows.iter().enumerate() {
        raw[(a, a)] = row[a].0;
        for (b, &(ab, ba)) in row.iter().enumerate().skip(a + 1) {
            raw[(a, b)] = ab;
            raw[(b, a)] = ba;
        }
    }
    let symmetry_residual = (&raw - raw.transpose()).amax();
    let h = (&raw + raw.transpose()) * 0.5;
    Ok(TangentHessian {
        dim,
        h,
        step,
        symmetry_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Maximum,
    Minimum,
    Saddle { index: usize },
    Degenerate,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Maximum => f.write_str("maximum"),
            Self::Minimum => f.write_str("minimum"),
            Self::Saddle { index } => write!(f, "saddle({index})"),
            Self::Degenerate => f.write_str("degenerate"),
        }
    }
}

impl Serialize for Classification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Signs of the objective change under random tangent perturbations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub increases: usize,
    pub decreases: usize,
    pub unchanged: usize,
}

impl ProbeSummary {
    pub fn mixed(&self) -> bool {
        self.increases > 0 && self.decreases > 0
    }
}

/// Evaluates the objective at `retract(O, A, 1)` for `samples` random skew
/// `A` of Frobenius norm `radius` and counts the sign of each change.
pub fn probe_perturbations(
    objective: &Objective,
    o: &OrthogonalMatrix,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<ProbeSummary> {
    let n = o.n();
    let dim = n * n.saturating_sub(1) / 2;
    let base = objective.value(o.matrix());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = ProbeSummary {
        samples,
        radius,
        seed,
        increases: 0,
        decreases: 0,
        unchanged: 0,
    };
    if dim == 0 {
        summary.unchanged = samples;
        return Ok(summary);
    }
    for _ in 0..samples {
        let coords: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = TangentDirection::from_coordinates(n, &coords)?;
        let a = a.scaled(radius / a.norm());
        let value = objective.value(retract(o, &a, 1.0)?.matrix());
        match value.partial_cmp(&base) {
            Some(std::cmp::Ordering::Greater) => summary.increases += 1,
            Some(std::cmp::Ordering::Less) => summary.decreases += 1,
            _ => summary.unchanged += 1,
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    /// Largest Riemannian gradient norm accepted as stationary.
    pub grad_tol: f64,
    /// Eigenvalues with `|λ| <= zero_frac · max|λ|` count as zero.
    pub zero_frac: f64,
    pub step: f64,
    pub probe_seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            grad_tol: DEFAULT_STATIONARY_TOL,
            zero_frac: DEFAULT_ZERO_FRAC,
            step: DEFAULT_HESSIAN_STEP,
            probe_seed: DEFAULT_PROBE_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointRecord {
    pub matrix: OrthogonalMatrix,
    /// Shannon entropy in nats.
    pub entropy: f64,
    pub alpha: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub classification: Classification,
    /// Number of positive Hessian eigenvalues above the zero threshold.
    pub index: usize,
    pub eigenvalues: Vec<f64>,
    pub step: f64,
    pub symmetry_residual: f64,
    pub fingerprint: CanonicalFingerprint,
    /// Some entry is smaller than [`NON_SMOOTH_ENTRY`] in magnitude.
    pub non_smooth: bool,
    /// Present whenever `non_smooth` is set.
    pub probes: Option<ProbeSummary>,
}

/// Maps Hessian eigenvalues to a classification and Morse index.
pub fn classify_eigenvalues(eigenvalues: &[f64], zero_frac: f64) -> (Classification, usize) {
    let dim = eigenvalues.len();
    if dim == 0 {
        // O(1) is two isolated points; nothing to classify.
        return (Classification::Degenerate, 0);
    }
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = zero_frac * scale;
    let index = eigenvalues.iter().filter(|&&v| v > threshold).count();
    let classification = if scale == 0.0 || eigenvalues.iter().any(|v| v.abs() <= threshold) {
        Classification::Degenerate
    } else if index == 0 {
        Classification::Maximum
    } else if index == dim {
        Classification::Minimum
    } else {
        Classification::Saddle { index }
    };
    (classification, index)
}

/// Classifies a stationary point of the Shannon entropy.
pub fn classify_critical_point(
    o: &OrthogonalMatrix,
    grad_tol: f64,
    zero_frac: f64,
) -> Result<CriticalPointRecord> {
    let options = ClassifyOptions {
        grad_tol,
        zero_frac,
        ..ClassifyOptions::default()
    };
    classify_with(&Objective::Shannon, o, &options)
}

/// Classifies a stationary point of `objective`.
pub fn classify_with(
    objective: &Objective,
    o: &OrthogonalMatrix,
    options: &ClassifyOptions,
) -> Result<CriticalPointRecord> {
    let grad_norm = objective.riemannian_gradient(o).norm();
    if grad_norm > options.grad_tol {
        return Err(Error::NotStationary {
            grad_norm,
            tolerance: options.grad_tol,
        });
    }
    let hessian = objective_hessian(objective, o, options.step)?;
    let eigenvalues = hessian.eigenvalues();
    let (classification, index) = classify_eigenvalues(&eigenvalues, options.zero_frac);
    let non_smooth = o.matrix().min_abs_entry() < NON_SMOOTH_ENTRY;
    let probes = if non_smooth {
        Some(probe_perturbations(
            objective,
            o,
            PROBE_SAMPLES,
            PROBE_RADIUS,
            options.probe_seed,
        )?)
    } else {
        None
    };
    Ok(CriticalPointRecord {
        entropy: entropy_of(o.matrix()),
        alpha: objective.alpha(),
        objective: objective.value(o.matrix()),
        grad_norm,
        classification,
        index,
        eigenvalues,
        step: hessian.step,
        symmetry_residual: hessian.symmetry_residual,
        fingerprint: canonical_fingerprint(o.matrix(), FINGERPRINT_QUANTUM)?,
        non_smooth,
        probes,
        matrix: o.clone(),
    })
}
