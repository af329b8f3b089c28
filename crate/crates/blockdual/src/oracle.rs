//! Independent reference solutions for tests and tooling: a tightly
//! converged single-worker solve, a grid-search minimizer for problems with
//! at most three dual coordinates, and finite-difference utilities.

use crate::dataio::SparseColumnMatrix;
use crate::engine::{dual_objective, primal_objective, Algo, Solver, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{dual_interval, LossSpec};

/// Iteration budget for [`reference_optimum`].
const REFERENCE_MAX_ITER: usize = 50_000;

/// Unbounded dual intervals are truncated to `|alpha| <= 10 C` for the grid
/// search.
const GRID_TRUNCATION: f64 = 10.0;

/// High-precision optimal dual objective `f*`, obtained by running the
/// single-worker solver until the duality gap certifies
/// `|f_P + f| <= tol * (1 + |f|)`. Returns the midpoint of the dual value
/// and the negated pocket primal value.
pub fn reference_optimum(
    matrix: &SparseColumnMatrix,
    labels: &[f64],
    loss: &LossSpec,
    tol: f64,
) -> Result<f64> {
    let zero_w = vec![0.0; matrix.n_rows()];
    let gap0 = primal_objective(matrix, labels, loss, &zero_w);
    if gap0 <= 0.0 {
        // alpha = 0 is optimal: the gap is already zero.
        return Ok(0.0);
    }
    let algo = if loss.kind.has_quadratic_dual() {
        Algo::BdaExactLs
    } else {
        Algo::BdaBacktrack
    };
    let mut config = SolverConfig::for_algo(algo, 1, loss, Some(matrix))?;
    // Absolute gap target of roughly `tol`, expressed relative to the
    // initial gap.
    config.stop_eps = tol / gap0;
    config.local_epochs = 10;
    config.max_iter = REFERENCE_MAX_ITER;
    let out = Solver::new(matrix, labels, *loss, config)?.solve()?;

    let last = out.trace.last().expect("trace is never empty");
    let gap = last.f_dual + last.f_primal;
    if !out.converged || gap.is_nan() || gap.abs() > tol * (1.0 + last.f_dual.abs()) {
        return Err(Error::OracleBudget {
            max_iter: REFERENCE_MAX_ITER,
            gap,
        });
    }
    Ok(0.5 * (out.final_dual - out.pocket_primal))
}

/// Grid-search minimizer of the dual objective for `N <= 3` coordinates:
/// a full pass over the (truncated) feasible box followed by two refinement
/// passes around the incumbent. Returns `(alpha*, f*)`.
pub fn brute_force_dual(
    matrix: &SparseColumnMatrix,
    labels: &[f64],
    loss: &LossSpec,
) -> Result<(Vec<f64>, f64)> {
    let n = matrix.n_cols();
    if n == 0 || n > 3 {
        return Err(Error::config(format!(
            "brute_force_dual handles 1 to 3 dual coordinates, got {n}"
        )));
    }
    let cap = GRID_TRUNCATION * loss.c;
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut truncated = false;
    for j in 0..n {
        let iv = dual_interval(loss, labels[j]);
        if !iv.is_bounded() {
            truncated = true;
        }
        lo[j] = iv.lo.max(-cap);
        hi[j] = iv.hi.min(cap);
    }
    if truncated {
        log::warn!("unbounded dual interval truncated to |alpha| <= {cap} for grid search");
    }

    // Grid density per dimension, balancing resolution against total cost.
    let points = match n {
        1 => 4097,
        2 => 321,
        _ => 101,
    };
    let mut center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut half: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mut best_alpha = center.clone();
    let mut best_f = f64::INFINITY;

    for _pass in 0..3 {
        let (alpha, f) = grid_min(matrix, labels, loss, &center, &half, &lo, &hi, points);
        if f < best_f {
            best_f = f;
            best_alpha = alpha;
        }
        // Shrink each window to twice the previous grid step, centered at
        // the incumbent.
        for h in half.iter_mut() {
            *h = 2.0 * (2.0 * *h / (points - 1) as f64);
        }
        center.clone_from(&best_alpha);
    }
    Ok((best_alpha, best_f))
}

#[allow(clippy::too_many_arguments)]
fn grid_min(
    matrix: &SparseColumnMatrix,
    labels: &[f64],
    loss: &LossSpec,
    center: &[f64],
    half: &[f64],
    lo: &[f64],
    hi: &[f64],
    points: usize,
) -> (Vec<f64>, f64) {
    let n = center.len();
    let axis: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let a = (center[j] - half[j]).max(lo[j]);
            let b = (center[j] + half[j]).min(hi[j]);
            (0..points)
                .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
                .collect()
        })
        .collect();

    let mut best_f = f64::INFINITY;
    let mut best = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let total: usize = points.pow(n as u32);
    let mut v = vec![0.0; matrix.n_rows()];
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..n {
            alpha[j] = axis[j][rem % points];
            rem /= points;
        }
        v.iter_mut().for_each(|x| *x = 0.0);
        for (j, &a) in alpha.iter().enumerate() {
            matrix.column_axpy(j, a, &mut v);
        }
        let mut f = 0.5 * v.iter().map(|x| x * x).sum::<f64>();
        for (j, &y) in labels.iter().enumerate() {
            f += crate::model::conjugate(loss, y, alpha[j]);
        }
        if f < best_f {
            best_f = f;
            best.clone_from_slice(&alpha);
        }
    }
    (best, best_f)
}

/// Central finite differences with per-coordinate step `h * (1 + |x_i|)`.
/// Coordinates whose perturbed evaluations are non-finite are skipped
/// (`None`).
pub fn finite_diff_grad<F>(f: F, x: &[f64], h: f64) -> Vec<Option<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        probe[i] = x[i] + step;
        let fp = f(&probe);
        probe[i] = x[i] - step;
        let fm = f(&probe);
        probe[i] = x[i];
        grad.push(if fp.is_finite() && fm.is_finite() {
            Some((fp - fm) / (2.0 * step))
        } else {
            None
        });
    }
    grad
}

/// Convenience wrapper: dual objective as a closure of `alpha`, for use with
/// [`finite_diff_grad`] and the test suites.
pub fn dual_objective_fn<'a>(
    matrix: &'a SparseColumnMatrix,
    labels: &'a [f64],
    loss: &'a LossSpec,
) -> impl Fn(&[f64]) -> f64 + 'a {
    move |alpha| dual_objective(matrix, labels, loss, alpha)
}
