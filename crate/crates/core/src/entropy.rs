//! Entropy of an orthogonal matrix and the related power sums.
//!
//! Each row of an orthogonal matrix `O` is a unit vector, so its squared
//! entries `p_ij = O_ij²` form a probability distribution. The matrix entropy
//! is the sum of the row entropies, `H = -Σ_ij p_ij ln p_ij`, with the
//! convention `0 ln 0 = 0`. It is bounded by `n ln n`, with equality exactly
//! for rescaled Hadamard matrices.
//!
//! Values are in nats throughout.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{OrthogonalMatrix, SquareMatrix};

/// Squared entries of an orthogonal matrix, one distribution per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowProbabilities {
    p: DMatrix<f64>,
}

impl RowProbabilities {
    pub fn new(o: &OrthogonalMatrix) -> Self {
        Self {
            p: o.as_dmatrix().map(|x| x * x),
        }
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.p[(row, col)]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.p.row(i).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub n: usize,
    pub entropy: f64,
    pub bound: f64,
    pub deficit: f64,
    pub per_row: Vec<f64>,
}

/// `-x² ln x²`, zero at `x = 0`.
#[inline]
pub(crate) fn entropy_term(x: f64) -> f64 {
    let p = x * x;
    if p == 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Order-independent sum: the terms are sorted before a compensated sum, so
/// any permutation of the same multiset gives a bit-identical result.
pub(crate) fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            carry += (sum - next) + t;
        } else {
            carry += (t - next) + sum;
        }
        sum = next;
    }
    sum + carry
}

/// Shannon entropy of any square matrix's squared entries, no validation.
///
/// Used by the optimizer and by finite-difference probes, which evaluate off
/// the manifold.
pub fn entropy_of(m: &SquareMatrix) -> f64 {
    canonical_sum(m.as_dmatrix().iter().map(|&x| entropy_term(x)).collect())
}

/// Shannon entropy with per-row breakdown and distance to the `n ln n` bound.
pub fn shannon_entropy(o: &OrthogonalMatrix) -> EntropyReport {
    let n = o.n();
    let a = o.as_dmatrix();
    let per_row: Vec<f64> = (0..n)
        .map(|i| canonical_sum(a.row(i).iter().map(|&x| entropy_term(x)).collect()))
        .collect();
    let entropy = entropy_of(o.matrix());
    let bound = bound_unchecked(n);
    EntropyReport {
        n,
        entropy,
        bound,
        deficit: bound - entropy,
        per_row,
    }
}

fn bound_unchecked(n: usize) -> f64 {
    let n = n as f64;
    n * n.ln()
}

/// `n ln n`, the largest entropy any `n × n` orthogonal matrix can have.
pub fn entropy_bound(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    Ok(bound_unchecked(n))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "exponent must be positive and finite, got {alpha}"
        )))
    }
}

/// `(x²)^alpha`, with `0^alpha = 0` taken by branch.
#[inline]
pub(crate) fn power_term(x: f64, alpha: f64) -> f64 {
    let p = x * x;
    if p == 0.0 {
        0.0
    } else if alpha == 1.0 {
        p
    } else {
        p.powf(alpha)
    }
}

pub(crate) fn power_sum_of(m: &SquareMatrix, alpha: f64) -> f64 {
    canonical_sum(
        m.as_dmatrix()
            .iter()
            .map(|&x| power_term(x, alpha))
            .collect(),
    )
}

/// Rényi-type power sum `Σ_ij (O_ij²)^alpha` for `alpha > 0`.
///
/// This is the bare sum, without the usual `ln(·)/(1-alpha)` normalization;
/// the two share their constrained critical points.
pub fn renyi_power_sum(o: &OrthogonalMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(power_sum_of(o.matrix(), alpha))
}

/// Unconstrained gradient of [`entropy_of`]: `G_ij = -2 O_ij (1 + ln O_ij²)`.
pub fn euclidean_gradient(m: &SquareMatrix) -> SquareMatrix {
    let g = m.as_dmatrix().map(|x| {
        if x == 0.0 {
            0.0
        } else {
            -2.0 * x * (1.0 + (x * x).ln())
        }
    });
    SquareMatrix::from_dmatrix(g).expect("gradient of a finite matrix is finite")
}

/// Gradient of the power sum: `2 alpha O_ij (O_ij²)^(alpha-1)`, zero at zero
/// entries.
pub(crate) fn power_sum_gradient(m: &SquareMatrix, alpha: f64) -> SquareMatrix {
    let g = m.as_dmatrix().map(|x| {
        let p = x * x;
        if p == 0.0 {
            0.0
        } else {
            2.0 * alpha * x * p.powf(alpha - 1.0)
        }
    });
    SquareMatrix::from_dmatrix(g).expect("gradient of a nonzero entry is finite")
}

/// Antisymmetric residual of the Lagrange-multiplier conditions for an
/// extremum of the power sum under `OᵀO = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityResidual {
    pub alpha: f64,
    pub residuals: DMatrix<f64>,
    pub max_abs: f64,
}

/// Computes, for each column pair `j ≠ l`,
///
/// `R_jl = Σ_i [ (O_ij²)^(a-1) - (O_il²)^(a-1) ] O_ij O_il`
///
/// and at `a = 1` its Shannon limit `R_jl = Σ_i O_ij O_il (ln O_ij² - ln O_il²)`.
/// Rows where either entry is zero contribute nothing. The diagonal
/// multipliers are never formed.
pub fn stationarity_residual(o: &OrthogonalMatrix, alpha: f64) -> Result<StationarityResidual> {
    check_alpha(alpha)?;
    let n = o.n();
    let a = o.as_dmatrix();
    let weight = |x: f64| {
        let p = x * x;
        if alpha == 1.0 {
            p.ln()
        } else {
            p.powf(alpha - 1.0)
        }
    };
    let mut residuals = DMatrix::zeros(n, n);
    let mut max_abs = 0.0f64;
    for j in 0..n {
        for l in (j + 1)..n {
            let mut r = 0.0;
            for i in 0..n {
                let (x, y) = (a[(i, j)], a[(i, l)]);
                if x == 0.0 || y == 0.0 {
                    continue;
                }
                r += (weight(x) - weight(y)) * x * y;
            }
            residuals[(j, l)] = r;
            residuals[(l, j)] = -r;
            max_abs = max_abs.max(r.abs());
        }
    }
    Ok(StationarityResidual {
        alpha,
        residuals,
        max_abs,
    })
}
