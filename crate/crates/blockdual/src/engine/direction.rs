//! Update directions: the per-worker sub-problem solver and the aggregated
//! direction assembled from its outputs.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::dataio::SparseColumnMatrix;
use crate::error::Result;
use crate::model::{conjugate, coordinate_solve, dual_interval, LossKind, LossSpec};

/// Output of one worker's sub-problem solve.
#[derive(Debug, Clone)]
pub struct LocalDirection {
    /// Delta for each owned coordinate, indexed by block position.
    pub dalpha: Vec<f64>,
    /// `X_block * dalpha`, full length `n`.
    pub dv_local: Vec<f64>,
    /// `sum xi*(-alpha_j)` over the block.
    pub conj_old: f64,
    /// `sum xi*(-(alpha_j + dalpha_j))` over the block.
    pub conj_new: f64,
    /// `sum [xi*(-(alpha_j + dalpha_j)) - xi*(-alpha_j)]` accumulated
    /// per coordinate. Not the difference of the two sums above: for tiny
    /// directions that difference cancels catastrophically, while the
    /// per-coordinate form stays accurate and keeps `delta_t` reliable.
    pub conj_diff: f64,
    /// Coefficient of `eta^2` in the conjugate sum along the direction
    /// (quadratic-dual losses only; zero otherwise).
    pub quad_coeff: f64,
    /// Set when an `|alpha|` term would change sign along the segment, which
    /// invalidates the quadratic decomposition for this iteration.
    pub sign_cross: bool,
    /// `dalpha' * B_block * dalpha = a1 ||dv_local||^2 + a2 ||dalpha||^2`.
    pub model_quad: f64,
}

/// Solves one worker's block of the quadratic model with random-permuted
/// cyclic coordinate descent.
///
/// Runs `local_epochs` passes; each pass visits the block's columns in a
/// fresh permutation drawn from `rng`. The working value of coordinate `j`
/// is `alpha[j] + dalpha[j]`; its model gradient is
/// `x_j . (v + a1 * dv_local) + a2 * dalpha[j]` and its model curvature is
/// `a1 * ||x_j||^2 + a2`, with the conjugate's own curvature handled inside
/// [`coordinate_solve`]. The model objective never increases, so the
/// returned direction satisfies `Q(dalpha) <= Q(0)`.
#[allow(clippy::too_many_arguments)]
pub fn local_subproblem_rpcd(
    matrix: &SparseColumnMatrix,
    labels: &[f64],
    loss: &LossSpec,
    col_norm_sq: &[f64],
    block: &[usize],
    alpha: &[f64],
    v: &[f64],
    a1: f64,
    a2: f64,
    local_epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LocalDirection> {
    debug_assert_eq!(block.len(), alpha.len());
    let mut work = alpha.to_vec();
    let mut dv_local = vec![0.0; matrix.n_rows()];
    let mut order: Vec<usize> = (0..block.len()).collect();

    for _ in 0..local_epochs {
        order.shuffle(rng);
        for &pos in &order {
            let j = block[pos];
            let mut g = 0.0;
            for &(i, x) in matrix.column(j) {
                g += x * (v[i] + a1 * dv_local[i]);
            }
            let grad_q = g + a2 * (work[pos] - alpha[pos]);
            let hess_q = a1 * col_norm_sq[j] + a2;
            let a_new = coordinate_solve(loss, labels[j], work[pos], grad_q, hess_q)?;
            let d = a_new - work[pos];
            if d != 0.0 {
                matrix.column_axpy(j, d, &mut dv_local);
                work[pos] = a_new;
            }
        }
    }

    let mut dalpha = vec![0.0; block.len()];
    let mut conj_old = 0.0;
    let mut conj_new = 0.0;
    let mut conj_diff = 0.0;
    let mut quad_coeff = 0.0;
    let mut sign_cross = false;
    let mut dalpha_norm_sq = 0.0;
    for (pos, &j) in block.iter().enumerate() {
        let y = labels[j];
        let d = work[pos] - alpha[pos];
        dalpha[pos] = d;
        dalpha_norm_sq += d * d;
        let c_old = conjugate(loss, y, alpha[pos]);
        let c_new = conjugate(loss, y, work[pos]);
        conj_old += c_old;
        conj_new += c_new;
        match conj_segment_coeffs(loss, y, alpha[pos], d) {
            // The polynomial form of the difference avoids the catastrophic
            // cancellation of `c_new - c_old` for tiny steps, which would
            // otherwise drown delta_t in round-off near the optimum.
            Some((lin, quad)) => {
                conj_diff += lin + quad;
                quad_coeff += quad;
            }
            None => {
                conj_diff += c_new - c_old;
                if loss.kind.has_quadratic_dual() {
                    sign_cross = true;
                }
            }
        }
    }
    let model_quad =
        a1 * dv_local.iter().map(|x| x * x).sum::<f64>() + a2 * dalpha_norm_sq;

    Ok(LocalDirection {
        dalpha,
        dv_local,
        conj_old,
        conj_new,
        conj_diff,
        quad_coeff,
        sign_cross,
        model_quad,
    })
}

/// Linear and quadratic coefficients of
/// `xi*(-(a + eta d)) - xi*(-a) = lin * eta + quad * eta^2` on the segment
/// `eta in [0, 1]`. `None` for the logistic conjugate (not polynomial) and
/// when the `|alpha|` term of an SVR loss changes sign strictly inside the
/// segment (the map is then only piecewise quadratic; exact line search
/// falls back to backtracking).
fn conj_segment_coeffs(loss: &LossSpec, y: f64, a: f64, d: f64) -> Option<(f64, f64)> {
    let c = loss.c;
    let eps = loss.eps_insensitive;
    // Sign of a + eta*d over the segment (only consulted for |alpha| terms).
    let seg_sign = if a != 0.0 { a.signum() } else { d.signum() };
    match loss.kind {
        LossKind::L1Svm => Some((-y * d, 0.0)),
        LossKind::L2Svm => Some((-y * d + a * d / (2.0 * c), d * d / (4.0 * c))),
        LossKind::LeastSquares => Some((-y * d + a * d / (2.0 * c), d * d / (4.0 * c))),
        LossKind::Svr | LossKind::L2Svr => {
            if eps > 0.0 && a != 0.0 && a + d != 0.0 && (a > 0.0) != (a + d > 0.0) {
                return None;
            }
            let abs_lin = eps * seg_sign * d;
            match loss.kind {
                LossKind::Svr => Some((abs_lin - y * d, 0.0)),
                _ => Some((abs_lin - y * d + a * d / (2.0 * c), d * d / (4.0 * c))),
            }
        }
        LossKind::Logistic => None,
    }
}

/// `sum xi*(-(alpha_j + eta * dalpha_j))` over a block, the per-worker
/// partial of one line-search trial. Candidates are clipped into the
/// feasible interval to absorb last-ulp rounding at its boundary.
pub(crate) fn trial_conj_sum(
    loss: &LossSpec,
    labels: &[f64],
    block: &[usize],
    alpha: &[f64],
    dalpha: &[f64],
    eta: f64,
) -> f64 {
    let mut sum = 0.0;
    for (pos, &j) in block.iter().enumerate() {
        let y = labels[j];
        let a = dual_interval(loss, y).clip(alpha[pos] + eta * dalpha[pos]);
        sum += conjugate(loss, y, a);
    }
    sum
}

/// An aggregated update direction: per-worker deltas, the synchronized
/// `dv = X * dalpha`, the descent surrogate `delta_t`, and the cached sums
/// the step-size rules need.
#[derive(Debug, Clone)]
pub struct Direction {
    /// Per-worker coordinate deltas (block layout).
    pub dalpha: Vec<Vec<f64>>,
    /// Replicated `X * dalpha`.
    pub dv: Vec<f64>,
    /// `grad g*(v) . dv + xi*(-(alpha + dalpha)) - xi*(-alpha)`.
    pub delta_t: f64,
    /// Conjugate sum at `eta = 1`.
    pub conj_sum_new: f64,
    pub(crate) v_dot_dv: f64,
    pub(crate) dv_norm_sq: f64,
    pub(crate) quad_partials: Vec<f64>,
    pub(crate) conj_new_partials: Vec<f64>,
    pub(crate) sign_cross: bool,
    pub(crate) model_quad: f64,
}

impl Direction {
    /// Decrease of the block quadratic model: `Q(0) - Q(dalpha) >= 0` for
    /// any correct sub-problem solve.
    pub fn model_decrease(&self) -> f64 {
        -(self.delta_t + 0.5 * self.model_quad)
    }

    /// Value of the block quadratic model at the direction, relative to the
    /// current iterate: `Q(dalpha) - Q(0)`.
    pub fn model_objective_change(&self) -> f64 {
        self.delta_t + 0.5 * self.model_quad
    }

    pub fn is_zero(&self) -> bool {
        self.dalpha.iter().all(|b| b.iter().all(|&d| d == 0.0))
    }
}
