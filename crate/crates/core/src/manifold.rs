//! Riemannian gradient ascent on the orthogonal group.
//!
//! Tangent vectors at `O` are written `O·A` with `A` skew-symmetric. The
//! Riemannian gradient of an objective with Euclidean gradient `G` is
//! `O·skew(OᵀG)`, and steps are mapped back onto O(n) with the Cayley
//! retraction `O (I - tA/2)⁻¹ (I + tA/2)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::entropy::{entropy_of, euclidean_gradient, power_sum_gradient, power_sum_of};
use crate::error::{Error, Result};
use crate::matrix::{orthogonality_defect, sign_corrected_q, OrthogonalMatrix, SquareMatrix};

/// Retraction outputs with a larger defect are re-orthonormalized.
const RETRACTION_POLISH_THRESHOLD: f64 = 1e-13;
/// Smallest trial step before the line search gives up.
pub const MIN_STEP: f64 = 1e-16;

/// A skew-symmetric `A`; the tangent vector it represents at `O` is `O·A`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection {
    a: DMatrix<f64>,
}

impl TangentDirection {
    pub fn zero(n: usize) -> Self {
        Self {
            a: DMatrix::zeros(n, n),
        }
    }

    /// Skew part `(M - Mᵀ)/2`; the lower triangle is stored as the exact
    /// negation of the upper one.
    pub fn skew_part(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Self { a }
    }

    /// Builds `A = Σ_{p<q} x_pq (e_p e_qᵀ - e_q e_pᵀ)` from the strict upper
    /// triangle in row-major order.
    pub fn from_coordinates(n: usize, coords: &[f64]) -> Result<Self> {
        let dim = n * n.saturating_sub(1) / 2;
        if coords.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len(),
            });
        }
        let mut a = DMatrix::zeros(n, n);
        let mut k = 0;
        for p in 0..n {
            for q in (p + 1)..n {
                a[(p, q)] = coords[k];
                a[(q, p)] = -coords[k];
                k += 1;
            }
        }
        Ok(Self { a })
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for p in 0..n {
            for q in (p + 1)..n {
                out.push(self.a[(p, q)]);
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Frobenius norm of `A`.
    pub fn norm(&self) -> f64 {
        self.a.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a: &self.a * factor,
        }
    }
}

/// Projects a Euclidean gradient onto the tangent space at `o`:
/// `A = (OᵀG - GᵀO)/2`.
pub fn tangent_project(o: &OrthogonalMatrix, g: &SquareMatrix) -> Result<TangentDirection> {
    if g.n() != o.n() {
        return Err(Error::DimensionMismatch {
            expected: o.n(),
            found: g.n(),
        });
    }
    let m = o.as_dmatrix().transpose() * g.as_dmatrix();
    Ok(TangentDirection::skew_part(&m))
}

/// Cayley retraction `O (I - tA/2)⁻¹ (I + tA/2)`.
///
/// Falls back to the QR retraction `qf(O(I + tA))` if the Cayley system is
/// singular, and re-orthonormalizes any result whose defect exceeds 1e-13.
pub fn retract(o: &OrthogonalMatrix, a: &TangentDirection, t: f64) -> Result<OrthogonalMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be finite, got {t}"
        )));
    }
    let n = o.n();
    if a.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.n(),
        });
    }
    if t == 0.0 {
        return Ok(o.clone());
    }
    let half = a.as_dmatrix() * (0.5 * t);
    let identity = DMatrix::<f64>::identity(n, n);
    let cayley = (&identity - &half).lu().solve(&(&identity + &half));
    let mut next = match cayley {
        Some(c) => o.as_dmatrix() * c,
        None => sign_corrected_q(o.as_dmatrix() * (identity + a.as_dmatrix() * t)),
    };
    let candidate = SquareMatrix::from_dmatrix(next.clone())?;
    if orthogonality_defect(&candidate) > RETRACTION_POLISH_THRESHOLD {
        next = sign_corrected_q(next);
        return OrthogonalMatrix::new(SquareMatrix::from_dmatrix(next)?);
    }
    OrthogonalMatrix::new(candidate)
}

/// The function being ascended.
///
/// For `alpha = 1` this is the Shannon entropy. Otherwise it is the power
/// sum `Σ (O_ij²)^alpha`, negated when `alpha > 1` so that ascent always moves
/// toward spread-out rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Shannon,
    PowerSum { alpha: f64 },
}

impl Objective {
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exponent must be positive and finite, got {alpha}"
            )));
        }
        Ok(if alpha == 1.0 {
            Self::Shannon
        } else {
            Self::PowerSum { alpha }
        })
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Shannon => 1.0,
            Self::PowerSum { alpha } => alpha,
        }
    }

    fn sign(&self) -> f64 {
        match *self {
            Self::PowerSum { alpha } if alpha > 1.0 => -1.0,
            _ => 1.0,
        }
    }

    pub fn value(&self, m: &SquareMatrix) -> f64 {
        match *self {
            Self::Shannon => entropy_of(m),
            Self::PowerSum { alpha } => self.sign() * power_sum_of(m, alpha),
        }
    }

    pub fn euclidean_gradient(&self, m: &SquareMatrix) -> SquareMatrix {
        match *self {
            Self::Shannon => euclidean_gradient(m),
            Self::PowerSum { alpha } => {
                let g = power_sum_gradient(m, alpha);
                if self.sign() < 0.0 {
                    g.scaled(-1.0).expect("negation keeps entries finite")
                } else {
                    g
                }
            }
        }
    }

    /// Skew matrix `A` of the Riemannian gradient `O·A`.
    pub fn riemannian_gradient(&self, o: &OrthogonalMatrix) -> TangentDirection {
        tangent_project(o, &self.euclidean_gradient(o.matrix()))
            .expect("gradient has the dimension of its point")
    }
}

/// Below this, differences of objective values are rounding noise.
pub fn objective_noise_floor(value: f64) -> f64 {
    64.0 * f64::EPSILON * value.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub n: usize,
    /// Objective exponent; 1 selects the Shannon entropy.
    pub alpha: f64,
    pub max_iters: usize,
    /// Threshold on the Frobenius norm of the Riemannian gradient.
    pub grad_tol: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub restarts: usize,
    pub master_seed: u64,
}

impl OptimizerConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            alpha: 1.0,
            max_iters: 10_000,
            grad_tol: 1e-10,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            restarts: 1,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if self.n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return bad("step_init must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No trial step down to [`MIN_STEP`] was acceptable.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Seed of the random start, when there was one.
    pub start_seed: Option<u64>,
    pub iterations: usize,
    pub final_matrix: OrthogonalMatrix,
    /// Shannon entropy of the final matrix, in nats.
    pub final_entropy: f64,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Objective value at the start and after every accepted step.
    pub trace: Vec<f64>,
    /// Largest orthogonality defect over all accepted iterates.
    pub max_defect: f64,
}

impl RunReport {
    pub fn stalled(&self) -> bool {
        self.termination == Termination::Stalled
    }
}

/// Riemannian gradient ascent with backtracking line search.
///
/// A trial step `t` along the Riemannian gradient `O·A` is accepted when the
/// objective gains at least `armijo_c · t · ‖A‖²`. Once that predicted gain
/// sinks below the rounding noise of the objective, value comparisons stop
/// being informative; a step is then accepted if the objective does not drop
/// by more than the noise floor and the gradient norm strictly decreases.
pub fn maximize_entropy(start: &OrthogonalMatrix, config: &OptimizerConfig) -> Result<RunReport> {
    config.validate()?;
    if start.n() != config.n {
        return Err(Error::DimensionMismatch {
            expected: config.n,
            found: start.n(),
        });
    }
    let objective = Objective::for_alpha(config.alpha)?;

    let mut current = start.clone();
    let mut value = objective.value(current.matrix());
    let mut direction = objective.riemannian_gradient(&current);
    let mut grad_norm = direction.norm();
    let mut trace = vec![value];
    let mut max_defect = current.defect();
    let mut iterations = 0;

    let termination = loop {
        if grad_norm <= config.grad_tol {
            break Termination::Converged;
        }
        if iterations >= config.max_iters {
            break Termination::MaxIterations;
        }
        let noise = objective_noise_floor(value);
        let slope = grad_norm * grad_norm;
        let mut step = config.step_init;
        let mut accepted = None;
        while step >= MIN_STEP {
            let candidate = retract(&current, &direction, step)?;
            let candidate_value = objective.value(candidate.matrix());
            let gain = candidate_value - value;
            let predicted = step * slope;
            if gain >= config.armijo_c * predicted {
                accepted = Some((candidate, candidate_value, None));
                break;
            }
            if predicted <= noise && gain >= -noise {
                let candidate_direction = objective.riemannian_gradient(&candidate);
                if candidate_direction.norm() < grad_norm {
                    accepted = Some((candidate, candidate_value, Some(candidate_direction)));
                    break;
                }
            }
            step *= config.armijo_shrink;
        }
        let Some((next, next_value, next_direction)) = accepted else {
            break Termination::Stalled;
        };
        direction = next_direction.unwrap_or_else(|| objective.riemannian_gradient(&next));
        grad_norm = direction.norm();
        max_defect = max_defect.max(next.defect());
        current = next;
        value = next_value;
        trace.push(value);
        iterations += 1;
    };

    Ok(RunReport {
        start_seed: None,
        iterations,
        final_entropy: entropy_of(current.matrix()),
        final_matrix: current,
        final_objective: value,
        final_grad_norm: grad_norm,
        converged: termination == Termination::Converged,
        termination,
        trace,
        max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::stationarity_residual;
    use crate::matrix::fixtures::maximizer3;
    use crate::matrix::haar_random_orthogonal;
    use std::f64::consts::LN_2;

    fn skew_from(n: usize, seed: u64) -> TangentDirection {
        let r = haar_random_orthogonal(n, seed).unwrap();
        TangentDirection::skew_part(r.as_dmatrix())
    }

    #[test]
    fn projection_examples() {
        let id = OrthogonalMatrix::identity(3);
        let sym = SquareMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 5.0, 4.0],
            vec![3.0, 4.0, 9.0],
        ])
        .unwrap();
        assert_eq!(
            tangent_project(&id, &sym).unwrap(),
            TangentDirection::zero(3)
        );

        let skew = TangentDirection::from_coordinates(3, &[0.3, -1.2, 2.5]).unwrap();
        let g = SquareMatrix::from_dmatrix(skew.as_dmatrix().clone()).unwrap();
        assert_eq!(tangent_project(&id, &g).unwrap(), skew);

        let g = euclidean_gradient(id.matrix());
        assert_eq!(g.as_dmatrix(), &(DMatrix::identity(3, 3) * -2.0));
        assert_eq!(tangent_project(&id, &g).unwrap().norm(), 0.0);

        assert!(tangent_project(&id, &SquareMatrix::identity(2)).is_err());
    }

    #[test]
    fn tangent_direction_is_exactly_skew() {
        let a = skew_from(6, 4);
        let m = a.as_dmatrix();
        assert!((m + m.transpose()).iter().all(|&v| v == 0.0));
        let back = TangentDirection::from_coordinates(6, &a.coordinates()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn retract_zero_step_is_identity_map() {
        let o = haar_random_orthogonal(4, 9).unwrap();
        let a = skew_from(4, 10);
        assert_eq!(retract(&o, &a, 0.0).unwrap(), o);
        assert!(retract(&o, &a, f64::NAN).is_err());
    }

    #[test]
    fn retract_stays_on_manifold() {
        for seed in 0..20 {
            let n = 2 + (seed % 6) as usize;
            let o = haar_random_orthogonal(n, seed).unwrap();
            let a = skew_from(n, seed + 100);
            for t in [1e-8, 0.1, 1.0, 10.0, 1e6, -3.0] {
                let r = retract(&o, &a, t).unwrap();
                assert!(orthogonality_defect(r.matrix()) <= 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn retract_agrees_to_first_order() {
        let o = haar_random_orthogonal(5, 3).unwrap();
        let a = skew_from(5, 8);
        let error = |t: f64| {
            let r = retract(&o, &a, t).unwrap();
            let linear = o.as_dmatrix() + o.as_dmatrix() * a.as_dmatrix() * t;
            (r.as_dmatrix() - linear).norm()
        };
        for t in [1e-2, 1e-3] {
            let ratio = error(t) / error(t / 2.0);
            assert!((3.5..=4.5).contains(&ratio), "t={t} ratio={ratio}");
        }
    }

    #[test]
    fn objective_prefers_spread_rows() {
        let id = OrthogonalMatrix::identity(4);
        let h = crate::matrix::rescaled_hadamard(2).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            let obj = Objective::for_alpha(alpha).unwrap();
            assert!(
                obj.value(h.matrix()) > obj.value(id.matrix()),
                "alpha {alpha}"
            );
        }
        assert_eq!(Objective::for_alpha(1.0).unwrap(), Objective::Shannon);
        assert!(Objective::for_alpha(0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::new(3).validate().is_ok());
        let mut c = OptimizerConfig::new(3);
        c.restarts = 0;
        assert!(c.validate().is_err());
        let mut c = OptimizerConfig::new(3);
        c.armijo_c = 1.0;
        assert!(c.validate().is_err());
        let mut c = OptimizerConfig::new(3);
        c.grad_tol = 0.0;
        assert!(c.validate().is_err());
        assert!(OptimizerConfig::new(0).validate().is_err());
    }

    #[test]
    fn ascent_from_stationary_maximizer() {
        let start = maximizer3();
        assert!(stationarity_residual(&start, 1.0).unwrap().max_abs <= 1e-12);
        let report = maximize_entropy(&start, &OptimizerConfig::new(3)).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 2);
        assert!(report.final_grad_norm <= 1e-10);
        assert!((report.final_entropy - 2.8948888).abs() < 1e-7);
    }

    #[test]
    fn ascent_from_identity_does_nothing() {
        let report =
            maximize_entropy(&OrthogonalMatrix::identity(3), &OptimizerConfig::new(3)).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.final_grad_norm, 0.0);
        assert_eq!(report.final_entropy, 0.0);
    }

    #[test]
    fn ascent_in_two_dimensions_reaches_bound() {
        let start = haar_random_orthogonal(2, 1).unwrap();
        let report = maximize_entropy(&start, &OptimizerConfig::new(2)).unwrap();
        assert!(report.converged);
        assert!((report.final_entropy - 2.0 * LN_2).abs() < 1e-8);
    }

    #[test]
    fn ascent_is_monotone_and_feasible() {
        for seed in 0..10 {
            let n = 3 + (seed % 3) as usize;
            let start = haar_random_orthogonal(n, seed).unwrap();
            let report = maximize_entropy(&start, &OptimizerConfig::new(n)).unwrap();
            assert!(report.converged, "seed {seed}: {:?}", report.termination);
            assert!(report.max_defect <= 1e-10);
            for w in report.trace.windows(2) {
                assert!(w[1] >= w[0] - objective_noise_floor(w[0]));
            }
            assert!(report.trace.last().unwrap() >= report.trace.first().unwrap());
            let r = stationarity_residual(&report.final_matrix, 1.0).unwrap();
            assert!(r.max_abs <= 1e-6);
        }
    }

    #[test]
    fn ascent_rejects_mismatched_start() {
        let start = haar_random_orthogonal(3, 0).unwrap();
        assert!(maximize_entropy(&start, &OptimizerConfig::new(4)).is_err());
    }

    #[test]
    fn power_sum_ascent_converges_to_critical_point() {
        for alpha in [0.5, 2.0] {
            let mut config = OptimizerConfig::new(3);
            config.alpha = alpha;
            let start = haar_random_orthogonal(3, 2).unwrap();
            let report = maximize_entropy(&start, &config).unwrap();
            assert!(report.converged, "alpha {alpha}: {:?}", report.termination);
            let r = stationarity_residual(&report.final_matrix, alpha).unwrap();
            assert!(r.max_abs <= 1e-6, "alpha {alpha}: {}", r.max_abs);
        }
    }
}
