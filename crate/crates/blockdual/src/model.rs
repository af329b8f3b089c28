//! Loss families and their convex conjugates.
//!
//! Six binary-classification / regression losses are supported. For each one
//! this module provides the primal value `xi(y, z)`, the conjugate value
//! `xi*(-alpha)` (infeasible points encoded as `+inf`), the per-coordinate
//! feasible interval of the dual variable, and the exact (or safeguarded
//! Newton, for logistic) minimizer of the 1-D coordinate sub-problem
//!
//! ```text
//!     min_d  grad_q * d + 1/2 * hess_q * d^2 + xi*(-(a_old + d))
//! ```
//!
//! which is the single-coordinate restriction of the block quadratic model.
//!
//! Classification formulas are folded through `beta = alpha * y` internally
//! so the sign handling lives in exactly one place; the public API always
//! works with the raw dual variable `alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interior clamp for the logistic conjugate domain `alpha*y in (0, C)`.
const LOGISTIC_CLAMP: f64 = 1e-12;
/// Convergence target for the 1-D Newton solve (absolute derivative value).
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_STEPS: usize = 20;
const BISECT_MAX_STEPS: usize = 200;

/// The supported loss families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    L1Svm,
    L2Svm,
    Logistic,
    Svr,
    L2Svr,
    #[serde(rename = "lsq")]
    LeastSquares,
}

impl LossKind {
    /// All six kinds, handy for exhaustive tests.
    pub const ALL: [LossKind; 6] = [
        LossKind::L1Svm,
        LossKind::L2Svm,
        LossKind::Logistic,
        LossKind::Svr,
        LossKind::L2Svr,
        LossKind::LeastSquares,
    ];

    /// Kinds whose labels must be in {-1, +1}.
    pub fn is_classification(self) -> bool {
        matches!(self, LossKind::L1Svm | LossKind::L2Svm | LossKind::Logistic)
    }

    /// True when the dual objective is a quadratic function of `alpha` on the
    /// feasible set (piecewise-quadratic with piecewise-linear `|alpha|`
    /// terms for the SVR variants), so exact line search applies.
    pub fn has_quadratic_dual(self) -> bool {
        !matches!(self, LossKind::Logistic)
    }

    /// Whether the conjugate carries a `alpha^2 / (4C)` term, i.e. the dual
    /// objective is strongly convex with modulus `1/(2C)`.
    pub fn conjugate_is_strongly_convex(self) -> bool {
        matches!(
            self,
            LossKind::L2Svm | LossKind::L2Svr | LossKind::LeastSquares
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::L1Svm => "l1-svm",
            LossKind::L2Svm => "l2-svm",
            LossKind::Logistic => "logistic",
            LossKind::Svr => "svr",
            LossKind::L2Svr => "l2-svr",
            LossKind::LeastSquares => "lsq",
        }
    }
}

/// A loss family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    #[serde(rename = "loss")]
    pub kind: LossKind,
    /// Loss weight, `C > 0`.
    #[serde(rename = "C")]
    pub c: f64,
    /// Insensitivity width for the SVR losses; ignored elsewhere.
    #[serde(rename = "eps", default)]
    pub eps_insensitive: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind, c: f64) -> Self {
        LossSpec {
            kind,
            c,
            eps_insensitive: 0.0,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps_insensitive = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.eps_insensitive >= 0.0 && self.eps_insensitive.is_finite()) {
            return Err(Error::config(format!(
                "eps must be non-negative, got {}",
                self.eps_insensitive
            )));
        }
        Ok(())
    }

    /// Checks labels against the loss family (classification requires +/-1).
    pub fn validate_labels(&self, labels: &[f64]) -> Result<()> {
        if self.kind.is_classification() {
            if let Some((i, &y)) = labels
                .iter()
                .enumerate()
                .find(|(_, &y)| y != 1.0 && y != -1.0)
            {
                return Err(Error::config(format!(
                    "{} requires labels in {{-1, +1}}; instance {} has label {}",
                    self.kind.name(),
                    i,
                    y
                )));
            }
        } else if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| !y.is_finite()) {
            return Err(Error::config(format!(
                "instance {} has non-finite label {}",
                i, y
            )));
        }
        Ok(())
    }
}

/// The regularizer pair. Only the squared L2 norm is implemented; the enum
/// is the seam where other strongly convex regularizers would plug in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizerSpec {
    SquaredL2,
}

impl RegularizerSpec {
    /// Strong-convexity modulus of the regularizer (`sigma = 1` for `1/2 ||w||^2`).
    pub fn sigma(self) -> f64 {
        1.0
    }
}

/// `g*(v) = 1/2 ||v||^2` for the squared-L2 regularizer.
pub fn reg_conj_value(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// `grad g*(v) = v` for the squared-L2 regularizer.
pub fn reg_conj_grad(v: &[f64]) -> Vec<f64> {
    v.to_vec()
}

/// Feasible interval of one dual coordinate (label already folded in).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DualInterval {
    pub fn contains(&self, a: f64) -> bool {
        self.lo <= a && a <= self.hi
    }

    pub fn clip(&self, a: f64) -> f64 {
        a.max(self.lo).min(self.hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Primal loss value `xi(z)` for an instance with label `y` and score `z`.
pub fn primal_loss(spec: &LossSpec, y: f64, z: f64) -> f64 {
    let c = spec.c;
    match spec.kind {
        LossKind::L1Svm => c * (1.0 - y * z).max(0.0),
        LossKind::L2Svm => {
            let m = (1.0 - y * z).max(0.0);
            c * m * m
        }
        LossKind::Logistic => {
            // log(1 + exp(-yz)) computed in the stable branch.
            let t = -y * z;
            c * if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            }
        }
        LossKind::Svr => c * ((z - y).abs() - spec.eps_insensitive).max(0.0),
        LossKind::L2Svr => {
            let m = ((z - y).abs() - spec.eps_insensitive).max(0.0);
            c * m * m
        }
        LossKind::LeastSquares => c * (z - y) * (z - y),
    }
}

/// `x * ln(x)` with the convention `0 * ln 0 = 0`.
fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Conjugate value `xi*(-alpha)`; `+inf` outside the feasible interval.
///
/// The logistic conjugate includes its `-C ln C` constant so that
/// `xi*(0) = 0` and the Fenchel-Young inequality holds for every `C`.
pub fn conjugate(spec: &LossSpec, y: f64, a: f64) -> f64 {
    let c = spec.c;
    match spec.kind {
        LossKind::L1Svm => {
            let beta = a * y;
            if (0.0..=c).contains(&beta) {
                -beta
            } else {
                f64::INFINITY
            }
        }
        LossKind::L2Svm => {
            let beta = a * y;
            if beta >= 0.0 {
                -beta + a * a / (4.0 * c)
            } else {
                f64::INFINITY
            }
        }
        LossKind::Logistic => {
            let beta = a * y;
            if (0.0..=c).contains(&beta) {
                xlogx(beta) + xlogx(c - beta) - c * c.ln()
            } else {
                f64::INFINITY
            }
        }
        LossKind::Svr => {
            if a.abs() <= c {
                spec.eps_insensitive * a.abs() - a * y
            } else {
                f64::INFINITY
            }
        }
        LossKind::L2Svr => spec.eps_insensitive * a.abs() - a * y + a * a / (4.0 * c),
        LossKind::LeastSquares => -a * y + a * a / (4.0 * c),
    }
}

/// Feasible interval for the dual coordinate of an instance with label `y`.
pub fn dual_interval(spec: &LossSpec, y: f64) -> DualInterval {
    let c = spec.c;
    match spec.kind {
        LossKind::L1Svm | LossKind::Logistic => {
            if y >= 0.0 {
                DualInterval { lo: 0.0, hi: c }
            } else {
                DualInterval { lo: -c, hi: 0.0 }
            }
        }
        LossKind::L2Svm => {
            if y >= 0.0 {
                DualInterval {
                    lo: 0.0,
                    hi: f64::INFINITY,
                }
            } else {
                DualInterval {
                    lo: f64::NEG_INFINITY,
                    hi: 0.0,
                }
            }
        }
        LossKind::Svr => DualInterval { lo: -c, hi: c },
        LossKind::L2Svr | LossKind::LeastSquares => DualInterval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        },
    }
}

/// Value of the 1-D coordinate objective at a candidate `a`, relative to the
/// step origin `a_old`. Used by the solver tests and the grid oracle.
pub fn coordinate_objective(
    spec: &LossSpec,
    y: f64,
    a_old: f64,
    grad_q: f64,
    hess_q: f64,
    a: f64,
) -> f64 {
    let d = a - a_old;
    grad_q * d + 0.5 * hess_q * d * d + conjugate(spec, y, a)
}

/// Exact minimizer of the 1-D coordinate sub-problem.
///
/// `grad_q` and `hess_q` describe the smooth quadratic part of the model at
/// `a_old`; the conjugate's own curvature (for the quadratic-conjugate
/// losses) and the feasibility constraints are handled here. The returned
/// value is always feasible.
pub fn coordinate_solve(
    spec: &LossSpec,
    y: f64,
    a_old: f64,
    grad_q: f64,
    hess_q: f64,
) -> Result<f64> {
    if hess_q.is_nan() || hess_q <= 0.0 {
        return Err(Error::contract(format!(
            "coordinate_solve requires hess_q > 0, got {hess_q}"
        )));
    }
    let c = spec.c;
    Ok(match spec.kind {
        LossKind::L1Svm => {
            let beta = y * (a_old + (y - grad_q) / hess_q);
            y * beta.clamp(0.0, c)
        }
        LossKind::L2Svm => {
            // Stationarity in beta = alpha*y: beta = (hess*beta_old + 1 -
            // y*grad_q) / (hess + 1/(2C)), clipped at the lower bound 0.
            let denom = hess_q + 1.0 / (2.0 * c);
            let beta = y * (a_old + (y - grad_q - a_old / (2.0 * c)) / denom);
            y * beta.max(0.0)
        }
        LossKind::LeastSquares => {
            let denom = hess_q + 1.0 / (2.0 * c);
            a_old + (y - grad_q - a_old / (2.0 * c)) / denom
        }
        LossKind::Svr => {
            let u = a_old + (y - grad_q) / hess_q;
            let shrink = spec.eps_insensitive / hess_q;
            soft_threshold(u, shrink).clamp(-c, c)
        }
        LossKind::L2Svr => {
            let denom = hess_q + 1.0 / (2.0 * c);
            let u = (hess_q * a_old + y - grad_q) / denom;
            let shrink = spec.eps_insensitive / denom;
            soft_threshold(u, shrink)
        }
        LossKind::Logistic => {
            let beta = logistic_coordinate_solve(c, y, y * a_old, grad_q, hess_q);
            y * beta
        }
    })
}

fn soft_threshold(u: f64, shrink: f64) -> f64 {
    if u > shrink {
        u - shrink
    } else if u < -shrink {
        u + shrink
    } else {
        0.0
    }
}

/// Safeguarded Newton on the derivative of the logistic coordinate objective
/// in `beta = alpha * y`, over the clamped domain
/// `[LOGISTIC_CLAMP, C - LOGISTIC_CLAMP]`. Clamp values are accepted as
/// boundary solutions.
fn logistic_coordinate_solve(c: f64, y: f64, beta_old: f64, grad_q: f64, hess_q: f64) -> f64 {
    let lo = LOGISTIC_CLAMP;
    let hi = c - LOGISTIC_CLAMP;
    if hi <= lo {
        return 0.5 * c;
    }
    // phi(beta) = d/dbeta [ grad_q*y*(beta - beta_old) + hess/2 (beta-beta_old)^2
    //                       + beta ln beta + (C-beta) ln(C-beta) ]
    let phi = |b: f64| hess_q * (b - beta_old) + y * grad_q + (b / (c - b)).ln();
    let phi_prime = |b: f64| hess_q + 1.0 / b + 1.0 / (c - b);

    if phi(lo) >= 0.0 {
        return lo;
    }
    if phi(hi) <= 0.0 {
        return hi;
    }

    // Bracket [bl, bh] with phi(bl) < 0 < phi(bh).
    let mut bl = lo;
    let mut bh = hi;
    let mut b = beta_old.clamp(lo, hi);
    for _ in 0..NEWTON_MAX_STEPS {
        let f = phi(b);
        if f.abs() <= NEWTON_TOL {
            return b;
        }
        if f > 0.0 {
            bh = b;
        } else {
            bl = b;
        }
        let step = f / phi_prime(b);
        let mut next = b - step;
        if !(next > bl && next < bh) || !next.is_finite() {
            next = 0.5 * (bl + bh);
        }
        b = next;
    }
    for _ in 0..BISECT_MAX_STEPS {
        let f = phi(b);
        if f.abs() <= NEWTON_TOL || bh - bl <= f64::EPSILON * c {
            return b;
        }
        if f > 0.0 {
            bh = b;
        } else {
            bl = b;
        }
        b = 0.5 * (bl + bh);
    }
    b
}

/// Analytic derivative of the logistic conjugate w.r.t. `alpha` at an
/// interior point. Diagnostic companion to [`conjugate`].
pub fn logistic_conjugate_derivative(spec: &LossSpec, y: f64, a: f64) -> f64 {
    let beta = a * y;
    y * (beta / (spec.c - beta)).ln()
}
