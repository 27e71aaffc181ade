//! Square and orthogonal matrices: parsing, validation, sampling and the
//! closed-form constructors (Sylvester Hadamard, the `(2/n)J - I` family).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numfmt::format_sig17;

/// Default tolerance on `max |OᵀO - I|` for [`OrthogonalMatrix`].
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
/// Tolerance on `| |det O| - 1 |` for [`OrthogonalMatrix`].
pub const DETERMINANT_TOLERANCE: f64 = 1e-8;
/// Largest dimension the constructors will build.
pub const MAX_DIMENSION: usize = 4096;
/// Default rounding quantum for [`canonical_fingerprint`].
pub const FINGERPRINT_QUANTUM: f64 = 1e-6;

/// A dense `n × n` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    data: DMatrix<f64>,
}

impl SquareMatrix {
    /// Wraps a nalgebra matrix, checking shape and finiteness.
    pub fn from_dmatrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                if !data[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let width = rows[0].len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRows {
                    row: r,
                    expected: width,
                    found: row.len(),
                });
            }
        }
        if width != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: width,
            });
        }
        Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    /// Dimension `n`.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.data.row(i).iter().copied().collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_dmatrix(&self.data * factor)
    }

    pub fn determinant(&self) -> f64 {
        self.data.clone().lu().determinant()
    }

    /// `ln |det M|` as a sum over LU pivots; stays finite where the plain
    /// product of pivots under- or overflows.
    pub fn log_abs_determinant(&self) -> f64 {
        let lu = self.data.clone().lu();
        lu.u().diagonal().iter().map(|p| p.abs().ln()).sum()
    }

    /// Smallest entry magnitude.
    pub fn min_abs_entry(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    /// Renders in the matrix text format: one line per row, comma-separated,
    /// 17 significant digits per value.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            let line: Vec<String> = self.data.row(i).iter().map(|&x| format_sig17(x)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Parses the matrix text format: `n` lines of `n` comma-separated decimals.
///
/// Blank lines are ignored and whitespace around values is trimmed.
pub fn load_matrix(text: &str) -> Result<SquareMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let r = rows.len();
        let mut row = Vec::new();
        for (c, token) in line.split(',').map(str::trim).enumerate() {
            let value: f64 = token.parse().map_err(|_| Error::ParseValue {
                row: r,
                col: c,
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
            row.push(value);
        }
        rows.push(row);
    }
    SquareMatrix::from_rows(&rows)
}

/// `max_{j,k} |Σ_i M_ij M_ik - δ_jk|`.
pub fn orthogonality_defect(m: &SquareMatrix) -> f64 {
    let a = m.as_dmatrix();
    let gram = a.transpose() * a;
    let n = m.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((gram[(j, k)] - target).abs());
        }
    }
    worst
}

/// A point of O(n): a square matrix whose columns are orthonormal to within
/// the validation tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    base: SquareMatrix,
    defect: f64,
}

impl OrthogonalMatrix {
    /// Validates `m` at [`ORTHOGONALITY_TOLERANCE`].
    pub fn new(m: SquareMatrix) -> Result<Self> {
        Self::with_tolerance(m, ORTHOGONALITY_TOLERANCE)
    }

    pub fn with_tolerance(m: SquareMatrix, tolerance: f64) -> Result<Self> {
        let defect = orthogonality_defect(&m);
        if defect.is_nan() || defect > tolerance {
            return Err(Error::NotOrthogonal { defect, tolerance });
        }
        let abs_det = m.log_abs_determinant().exp();
        if !((abs_det - 1.0).abs() <= DETERMINANT_TOLERANCE) {
            return Err(Error::DeterminantNotUnit { det: abs_det });
        }
        Ok(Self { base: m, defect })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            base: SquareMatrix::identity(n),
            defect: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Defect measured at validation time.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.base
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        self.base.as_dmatrix()
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.base
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.base.get(row, col)
    }
}

/// Orthonormal factor of `m` with the columns' signs chosen so that the
/// triangular factor has a non-negative diagonal.
pub(crate) fn sign_corrected_q(m: DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws a Haar-distributed element of O(n), deterministic in `(n, seed)`.
pub fn haar_random_orthogonal(n: usize, seed: u64) -> Result<OrthogonalMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    if n > MAX_DIMENSION {
        return Err(Error::InvalidDimension(format!(
            "n = {n} exceeds the cap of {MAX_DIMENSION}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    OrthogonalMatrix::new(SquareMatrix::from_dmatrix(sign_corrected_q(gaussian))?)
}

/// Sylvester's Hadamard matrix of order `2^k`, entries ±1.
pub fn sylvester_hadamard(k: u32) -> Result<SquareMatrix> {
    let n = 1usize
        .checked_shl(k)
        .filter(|&n| n <= MAX_DIMENSION)
        .ok_or_else(|| {
            Error::InvalidDimension(format!("2^{k} exceeds the cap of {MAX_DIMENSION}"))
        })?;
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < n {
        let m = h.nrows();
        let mut next = DMatrix::zeros(2 * m, 2 * m);
        next.view_mut((0, 0), (m, m)).copy_from(&h);
        next.view_mut((0, m), (m, m)).copy_from(&h);
        next.view_mut((m, 0), (m, m)).copy_from(&h);
        next.view_mut((m, m), (m, m)).copy_from(&(-&h));
        h = next;
    }
    SquareMatrix::from_dmatrix(h)
}

/// `sylvester_hadamard(k) / sqrt(2^k)`, an orthogonal matrix with every
/// entry of magnitude `n^{-1/2}`.
pub fn rescaled_hadamard(k: u32) -> Result<OrthogonalMatrix> {
    let h = sylvester_hadamard(k)?;
    let scale = (h.n() as f64).sqrt().recip();
    OrthogonalMatrix::new(h.scaled(scale)?)
}

/// The symmetric involution `(2/n)J - I`.
///
/// Every row holds one entry of magnitude `(n-2)/n` and `n-1` entries of
/// magnitude `2/n`; at `n = 3` this is the matrix with diagonal `-1/3` and
/// off-diagonal `2/3`.
pub fn family_matrix(n: usize) -> Result<OrthogonalMatrix> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "family matrix needs n >= 2, got {n}"
        )));
    }
    if n > MAX_DIMENSION {
        return Err(Error::InvalidDimension(format!(
            "n = {n} exceeds the cap of {MAX_DIMENSION}"
        )));
    }
    let nf = n as f64;
    let diagonal = (2.0 - nf) / nf;
    let off = 2.0 / nf;
    let data = DMatrix::from_fn(n, n, |i, j| if i == j { diagonal } else { off });
    OrthogonalMatrix::new(SquareMatrix::from_dmatrix(data)?)
}

/// Magnitude pattern of a matrix, invariant under row/column permutations
/// and sign flips.
#[derive(Debug, Clone)]
pub struct CanonicalFingerprint {
    n: usize,
    quantum: f64,
    /// Rounded magnitudes as integer multiples of `quantum`.
    rows: Vec<Vec<i64>>,
}

impl CanonicalFingerprint {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    /// Rounded magnitudes in canonical order.
    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&k| k as f64 * self.quantum).collect())
            .collect()
    }

    fn key(&self) -> (usize, u64, &[Vec<i64>]) {
        (self.n, self.quantum.to_bits(), &self.rows)
    }
}

impl PartialEq for CanonicalFingerprint {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for CanonicalFingerprint {}

impl Hash for CanonicalFingerprint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for CanonicalFingerprint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CanonicalFingerprint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for CanonicalFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decimals = (-self.quantum.log10()).ceil().max(0.0) as usize;
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&k| format!("{:.*}", decimals, k as f64 * self.quantum))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "n={};rows={}", self.n, rows.join(";"))
    }
}

/// Rounds `|M_ij|` to multiples of `quantum`, sorts each row, then sorts the
/// rows lexicographically.
pub fn canonical_fingerprint(m: &SquareMatrix, quantum: f64) -> Result<CanonicalFingerprint> {
    if !(quantum > 0.0 && quantum.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "fingerprint quantum must be positive, got {quantum}"
        )));
    }
    let n = m.n();
    let mut rows: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            let mut row: Vec<i64> = (0..n)
                .map(|j| (m.get(i, j).abs() / quantum).round() as i64)
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    rows.sort();
    Ok(CanonicalFingerprint { n, quantum, rows })
}
