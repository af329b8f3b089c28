//! The outer solver loop.
//!
//! Each iteration: (1) every worker approximately minimizes its block of the
//! quadratic model `grad G*(alpha)' d + 1/2 d' (a1*H~ + a2*I) d +
//! xi*(-(alpha+d))` with RPCD; (2) one vector allreduce synchronizes
//! `dv = X * dalpha`; (3) the descent surrogate `delta_t` is combined with
//! one scalar allreduce; (4) a step size is chosen — exact minimization for
//! quadratic duals, Armijo backtracking, or a fixed baseline rule — using
//! one scalar allreduce per objective trial; (5) `alpha` and `v` are updated
//! and the best primal objective seen so far is pocketed. The loop stops
//! when the duality gap falls below `stop_eps` times the initial gap.

mod direction;
mod trace;

pub use direction::{local_subproblem_rpcd, Direction, LocalDirection};
pub use trace::{
    parse_trace_csv, rel_dual_gap, rel_primal_gap, write_trace_csv, TraceRecord, TRACE_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::cluster::{row_chunk, Cluster, CommStats, Scheduler, TimeModel, WorkerContext};
use crate::dataio::{partition_by_nnz, spectral_norm_sq, Partition, SparseColumnMatrix};
use crate::error::{Error, Result};
use crate::model::{conjugate, dual_interval, primal_loss, LossSpec};
use direction::trial_conj_sum;

/// Step-size regimes. The `bda-*` entries are the two line-search variants
/// of the block-diagonal method; the others are fixed-step baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    BdaExactLs,
    BdaBacktrack,
    DisdcaPractical,
    DsvmAve,
    ProxGrad,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::BdaExactLs,
        Algo::BdaBacktrack,
        Algo::DisdcaPractical,
        Algo::DsvmAve,
        Algo::ProxGrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::BdaExactLs => "bda-exact-ls",
            Algo::BdaBacktrack => "bda-backtrack",
            Algo::DisdcaPractical => "disdca-practical",
            Algo::DsvmAve => "dsvm-ave",
            Algo::ProxGrad => "prox-grad",
        }
    }
}

/// How the step size is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Closed-form minimizer along the direction (quadratic duals only).
    ExactQuadratic,
    /// Armijo backtracking from `eta = 1`.
    Backtracking,
    /// A fixed step size.
    Fixed(f64),
}

/// Default backtracking parameters.
pub const DEFAULT_TAU: f64 = 1e-2;
pub const DEFAULT_BETA: f64 = 0.5;
/// Damping added to the model for losses whose dual is not strongly convex.
pub const DEFAULT_HINGE_A2: f64 = 1e-3;

/// Maps an algorithm to its `(a1, a2, step rule)` triple.
///
/// `xtx_norm_sq` (an estimate of `||X'X||`) is required only by `prox-grad`,
/// whose damping is the gradient Lipschitz constant of the smooth dual term.
pub fn baseline_config(
    algo: Algo,
    k: usize,
    loss: &LossSpec,
    xtx_norm_sq: Option<f64>,
) -> Result<(f64, f64, StepRule)> {
    if k == 0 {
        return Err(Error::config("worker count must be at least 1"));
    }
    Ok(match algo {
        Algo::BdaExactLs | Algo::BdaBacktrack => {
            let a2 = if loss.kind.conjugate_is_strongly_convex()
                || loss.kind == crate::model::LossKind::Logistic
            {
                0.0
            } else {
                DEFAULT_HINGE_A2
            };
            let rule = if algo == Algo::BdaExactLs {
                StepRule::ExactQuadratic
            } else {
                StepRule::Backtracking
            };
            (1.0, a2, rule)
        }
        Algo::DisdcaPractical => (k as f64, 0.0, StepRule::Fixed(1.0)),
        Algo::DsvmAve => (1.0, 0.0, StepRule::Fixed(1.0 / k as f64)),
        Algo::ProxGrad => {
            let norm = xtx_norm_sq.ok_or_else(|| {
                Error::config("prox-grad requires a spectral norm estimate for its damping term")
            })?;
            (0.0, norm, StepRule::Backtracking)
        }
    })
}

/// Full solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algo: Algo,
    pub a1: f64,
    pub a2: f64,
    pub tau: f64,
    pub beta: f64,
    pub local_epochs: usize,
    pub stop_eps: f64,
    pub max_iter: usize,
    pub max_backtracks: u32,
    pub seed: u64,
    pub k: usize,
    #[serde(default)]
    pub scheduler: Scheduler,
}

impl SolverConfig {
    /// Builds the configuration for `algo` with its baseline `(a1, a2)` and
    /// the documented defaults. `matrix` is consulted only by `prox-grad`.
    pub fn for_algo(
        algo: Algo,
        k: usize,
        loss: &LossSpec,
        matrix: Option<&SparseColumnMatrix>,
    ) -> Result<Self> {
        let norm = match algo {
            Algo::ProxGrad => Some(spectral_norm_sq(matrix.ok_or_else(|| {
                Error::config("prox-grad needs the data matrix to estimate ||X'X||")
            })?)),
            _ => None,
        };
        let (a1, a2, _) = baseline_config(algo, k, loss, norm)?;
        Ok(SolverConfig {
            algo,
            a1,
            a2,
            tau: DEFAULT_TAU,
            beta: DEFAULT_BETA,
            local_epochs: 1,
            stop_eps: 1e-3,
            max_iter: 1000,
            max_backtracks: 50,
            seed: 0,
            k,
            scheduler: Scheduler::Sequential,
        })
    }

    /// Step rule implied by the algorithm and worker count.
    pub fn step_rule(&self) -> StepRule {
        match self.algo {
            Algo::BdaExactLs => StepRule::ExactQuadratic,
            Algo::BdaBacktrack | Algo::ProxGrad => StepRule::Backtracking,
            Algo::DisdcaPractical => StepRule::Fixed(1.0),
            Algo::DsvmAve => StepRule::Fixed(1.0 / self.k as f64),
        }
    }

    pub fn validate(&self, loss: &LossSpec) -> Result<()> {
        loss.validate()?;
        if self.k == 0 {
            return Err(Error::config("worker count must be at least 1"));
        }
        if !(self.a1 >= 0.0 && self.a2 >= 0.0 && self.a1 + self.a2 > 0.0) {
            return Err(Error::config(format!(
                "need a1, a2 >= 0 and a1 + a2 > 0, got a1 = {}, a2 = {}",
                self.a1, self.a2
            )));
        }
        for (name, x) in [("tau", self.tau), ("beta", self.beta)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1), got {x}")));
            }
        }
        if self.stop_eps.is_nan() || self.stop_eps < 0.0 {
            return Err(Error::config(format!(
                "stop_eps must be non-negative, got {}",
                self.stop_eps
            )));
        }
        if self.algo == Algo::BdaExactLs && !loss.kind.has_quadratic_dual() {
            return Err(Error::Unsupported(
                "exact line search",
                format!("'{}' has a non-quadratic dual objective; use bda-backtrack", loss.kind.name()),
            ));
        }
        Ok(())
    }
}

/// `f_P(w) = 1/2 ||w||^2 + sum_i xi_i(x_i . w)` with `w = v`.
pub fn primal_objective(
    matrix: &SparseColumnMatrix,
    labels: &[f64],
    loss: &LossSpec,
    v: &[f64],
) -> f64 {
    let mut sum = 0.5 * v.iter().map(|x| x * x).sum::<f64>();
    for (j, &y) in labels.iter().enumerate() {
        sum += primal_loss(loss, y, matrix.column_dot(j, v));
    }
    sum
}

/// `f(alpha) = 1/2 ||X alpha||^2 + sum_i xi_i*(-alpha_i)`; `+inf` when any
/// coordinate is infeasible.
pub fn dual_objective(
    matrix: &SparseColumnMatrix,
    labels: &[f64],
    loss: &LossSpec,
    alpha: &[f64],
) -> f64 {
    let mut conj = 0.0;
    for (j, &y) in labels.iter().enumerate() {
        let c = conjugate(loss, y, alpha[j]);
        if c == f64::INFINITY {
            return f64::INFINITY;
        }
        conj += c;
    }
    let v = matrix.times(alpha);
    0.5 * v.iter().map(|x| x * x).sum::<f64>() + conj
}

/// `delta_t = grad g*(v) . dv + (xi*(-(alpha+dalpha)) - xi*(-alpha))`,
/// with `grad g*(v) = v`. The distributed path combines per-worker partial
/// sums of the same three terms with one scalar allreduce.
pub fn compute_delta_t(v: &[f64], dv: &[f64], conj_sum: f64, conj_sum_new: f64) -> f64 {
    let vdv: f64 = v.iter().zip(dv).map(|(a, b)| a * b).sum();
    vdv + conj_sum_new - conj_sum
}

/// Result of a complete solve.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// Pocket primal solution (the `w` with the best primal objective seen).
    pub weights: Vec<f64>,
    /// Primal objective of `weights`.
    pub pocket_primal: f64,
    /// Final dual objective.
    pub final_dual: f64,
    /// Whether the relative-gap stopping test was met.
    pub converged: bool,
    /// Outer iterations performed.
    pub iterations: u64,
    pub stats: CommStats,
    pub trace: Vec<TraceRecord>,
}

struct WorkerState {
    ctx: WorkerContext,
    /// Owned dual coordinates, indexed by block position.
    alpha: Vec<f64>,
}

struct StepChoice {
    eta: f64,
    f_new: f64,
    conj_new: f64,
    backtracks: u32,
}

/// The solver: immutable data plus the replicated/per-worker iterate state.
pub struct Solver<'a> {
    matrix: &'a SparseColumnMatrix,
    labels: &'a [f64],
    loss: LossSpec,
    config: SolverConfig,
    partition: Partition,
    col_norm_sq: Vec<f64>,
    cluster: Cluster,
    workers: Vec<WorkerState>,
    v: Vec<f64>,
    v_norm_sq: f64,
    conj_sum: f64,
    f_dual: f64,
    f_primal: f64,
    pocket_primal: f64,
    pocket_w: Vec<f64>,
    gap0: f64,
    iter: u64,
    trace: Vec<TraceRecord>,
}

impl<'a> Solver<'a> {
    /// Sets up workers, synchronizes the initial iterate `alpha = 0`, and
    /// records trace row 0.
    pub fn new(
        matrix: &'a SparseColumnMatrix,
        labels: &'a [f64],
        loss: LossSpec,
        config: SolverConfig,
    ) -> Result<Self> {
        Self::with_time_model(matrix, labels, loss, config, None)
    }

    pub fn with_time_model(
        matrix: &'a SparseColumnMatrix,
        labels: &'a [f64],
        loss: LossSpec,
        config: SolverConfig,
        time_model: Option<TimeModel>,
    ) -> Result<Self> {
        config.validate(&loss)?;
        loss.validate_labels(labels)?;
        if labels.len() != matrix.n_cols() {
            return Err(Error::contract(format!(
                "{} labels for {} instances",
                labels.len(),
                matrix.n_cols()
            )));
        }
        let partition = partition_by_nnz(&matrix.column_nnz(), config.k)?;
        let col_norm_sq = matrix.column_norms_sq();
        let mut cluster = Cluster::new(config.k, config.scheduler);
        cluster.set_time_model(time_model);
        let mut workers: Vec<WorkerState> = partition
            .blocks()
            .iter()
            .enumerate()
            .map(|(k, block)| WorkerState {
                alpha: vec![0.0; block.len()],
                ctx: WorkerContext::new(k, block.clone(), config.seed),
            })
            .collect();

        // Initial synchronization: v = X alpha and the conjugate sum.
        let n = matrix.n_rows();
        let v_parts = cluster.run_phase(&mut workers, |_, w| {
            let mut part = vec![0.0; n];
            for (pos, &j) in w.ctx.block.iter().enumerate() {
                if w.alpha[pos] != 0.0 {
                    matrix.column_axpy(j, w.alpha[pos], &mut part);
                }
            }
            part
        });
        let v = cluster.allreduce_sum_vector(&v_parts)?;
        let loss_ref = &loss;
        let conj_parts = cluster.run_phase(&mut workers, |_, w| {
            w.ctx
                .block
                .iter()
                .enumerate()
                .map(|(pos, &j)| conjugate(loss_ref, labels[j], w.alpha[pos]))
                .sum::<f64>()
        });
        let conj_sum = cluster.allreduce_sum_scalar(&conj_parts);
        let v_norm_sq = v.iter().map(|x| x * x).sum::<f64>();
        let f_dual = 0.5 * v_norm_sq + conj_sum;
        let f_primal = primal_objective(matrix, labels, &loss, &v);
        let gap0 = f_dual + f_primal;

        let mut solver = Solver {
            matrix,
            labels,
            loss,
            config,
            partition,
            col_norm_sq,
            cluster,
            workers,
            pocket_w: v.clone(),
            v,
            v_norm_sq,
            conj_sum,
            f_dual,
            f_primal,
            pocket_primal: f_primal,
            gap0,
            iter: 0,
            trace: Vec::new(),
        };
        solver.push_trace_row(0.0, 0, 0.0);
        Ok(solver)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> &CommStats {
        self.cluster.stats()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn f_dual(&self) -> f64 {
        self.f_dual
    }

    pub fn f_primal(&self) -> f64 {
        self.f_primal
    }

    pub fn pocket_primal(&self) -> f64 {
        self.pocket_primal
    }

    /// Current duality gap `f(alpha) + f_P(w(alpha))`.
    pub fn gap(&self) -> f64 {
        self.f_dual + self.f_primal
    }

    pub fn initial_gap(&self) -> f64 {
        self.gap0
    }

    pub fn iterations(&self) -> u64 {
        self.iter
    }

    /// The full dual iterate assembled from the worker blocks.
    pub fn alpha(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.matrix.n_cols()];
        for w in &self.workers {
            for (pos, &j) in w.ctx.block.iter().enumerate() {
                out[j] = w.alpha[pos];
            }
        }
        out
    }

    /// Whether the relative-gap stopping condition holds at the current
    /// iterate.
    pub fn stop_condition_met(&self) -> bool {
        self.gap() <= self.config.stop_eps * self.gap0
    }

    /// Builds the update direction: per-worker sub-problem solves, the `dv`
    /// vector allreduce, and the `delta_t` scalar allreduce.
    pub fn compute_direction(&mut self) -> Result<Direction> {
        let matrix = self.matrix;
        let labels = self.labels;
        let loss = &self.loss;
        let col_norm_sq = &self.col_norm_sq;
        let v = &self.v;
        let (a1, a2, epochs) = (self.config.a1, self.config.a2, self.config.local_epochs);

        let locals = self.cluster.run_phase(&mut self.workers, |_, w| {
            local_subproblem_rpcd(
                matrix,
                labels,
                loss,
                col_norm_sq,
                &w.ctx.block,
                &w.alpha,
                v,
                a1,
                a2,
                epochs,
                &mut w.ctx.rng_stream,
            )
        });
        let mut locals = locals.into_iter().collect::<Result<Vec<_>>>()?;

        let dv_parts: Vec<Vec<f64>> = locals
            .iter_mut()
            .map(|l| std::mem::take(&mut l.dv_local))
            .collect();
        let dv = self.cluster.allreduce_sum_vector(&dv_parts)?;

        // delta_t partials: each worker contributes its row-chunk share of
        // v . dv plus its block's conjugate difference.
        let n = matrix.n_rows();
        let n_workers = self.config.k;
        let vdv_shares: Vec<f64> = (0..n_workers)
            .map(|k| {
                let r = row_chunk(n, k, n_workers);
                self.v[r.clone()]
                    .iter()
                    .zip(&dv[r])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let partials: Vec<f64> = locals
            .iter()
            .enumerate()
            .map(|(k, l)| vdv_shares[k] + l.conj_diff)
            .collect();
        let delta_t = self.cluster.allreduce_sum_scalar(&partials);
        let v_dot_dv: f64 = vdv_shares.iter().sum();
        let dv_norm_sq: f64 = dv.iter().map(|x| x * x).sum();
        let conj_diff_sum: f64 = locals.iter().map(|l| l.conj_diff).sum();
        let conj_sum_new = self.conj_sum + conj_diff_sum;

        let direction = Direction {
            quad_partials: locals.iter().map(|l| l.quad_coeff).collect(),
            conj_new_partials: locals.iter().map(|l| l.conj_new).collect(),
            sign_cross: locals.iter().any(|l| l.sign_cross),
            model_quad: locals.iter().map(|l| l.model_quad).sum(),
            dalpha: locals.into_iter().map(|l| l.dalpha).collect(),
            dv,
            delta_t,
            conj_sum_new,
            v_dot_dv,
            dv_norm_sq,
        };
        // The sub-problem solver never increases the model objective, so
        // the direction certifies descent (up to round-off).
        debug_assert!(
            direction.model_objective_change() <= 1e-9 * (1.0 + self.f_dual.abs()),
            "model objective increased by {:e}",
            direction.model_objective_change()
        );
        Ok(direction)
    }

    fn quad_term(&self, dir: &Direction, eta: f64) -> f64 {
        0.5 * (self.v_norm_sq + eta * eta * dir.dv_norm_sq + 2.0 * eta * dir.v_dot_dv)
    }

    /// Per-worker conjugate sums at trial step `eta`, one bulk phase.
    fn trial_partials(&mut self, dir: &Direction, eta: f64) -> Vec<f64> {
        let labels = self.labels;
        let loss = &self.loss;
        let dalpha = &dir.dalpha;
        self.cluster.run_phase(&mut self.workers, |k, w| {
            trial_conj_sum(loss, labels, &w.ctx.block, &w.alpha, &dalpha[k], eta)
        })
    }

    /// Armijo backtracking: smallest `i >= 0` with
    /// `f(alpha + beta^i dalpha) <= f(alpha) + beta^i tau delta_t`. Each
    /// trial re-evaluates the conjugate sum with one scalar allreduce; the
    /// quadratic `g*` part is updated in closed form from cached dot
    /// products.
    fn backtracking_step(&mut self, dir: &Direction) -> Result<StepChoice> {
        let mut i: u32 = 0;
        loop {
            let eta = self.config.beta.powi(i as i32);
            let conj_trial = if i == 0 {
                self.cluster.allreduce_sum_scalar(&dir.conj_new_partials)
            } else {
                let partials = self.trial_partials(dir, eta);
                self.cluster.allreduce_sum_scalar(&partials)
            };
            let f_trial = self.quad_term(dir, eta) + conj_trial;
            if f_trial <= self.f_dual + eta * self.config.tau * dir.delta_t {
                return Ok(StepChoice {
                    eta,
                    f_new: f_trial,
                    conj_new: conj_trial,
                    backtracks: i,
                });
            }
            if i >= self.config.max_backtracks {
                return Err(Error::LineSearchFailure {
                    max_backtracks: self.config.max_backtracks,
                    delta_t: dir.delta_t,
                });
            }
            i += 1;
        }
    }

    /// Exact line search for quadratic dual objectives:
    /// `eta* = clip(-num/den, 0, 1)` with `num = f'(0)` and `den = f''`
    /// along the direction. One scalar allreduce combines the conjugate
    /// curvature partials; the remaining ingredients are replicated.
    fn exact_step(&mut self, dir: &Direction) -> Result<StepChoice> {
        if !self.loss.kind.has_quadratic_dual() {
            return Err(Error::Unsupported(
                "exact line search",
                format!("'{}' has a non-quadratic dual objective", self.loss.kind.name()),
            ));
        }
        let quad_sum = self.cluster.allreduce_sum_scalar(&dir.quad_partials);
        let num = dir.delta_t - quad_sum;
        let den = dir.dv_norm_sq + 2.0 * quad_sum;
        let eta = if den > 0.0 {
            (-num / den).clamp(0.0, 1.0)
        } else if num < 0.0 {
            1.0
        } else {
            0.0
        };
        if eta == 0.0 {
            // No movement; keep the cached state bit-identical.
            return Ok(StepChoice {
                eta,
                f_new: self.f_dual,
                conj_new: self.conj_sum,
                backtracks: 0,
            });
        }
        let lin = dir.delta_t - dir.v_dot_dv - quad_sum;
        let conj_new = self.conj_sum + eta * lin + eta * eta * quad_sum;
        let f_new = self.quad_term(dir, eta) + conj_new;
        Ok(StepChoice {
            eta,
            f_new,
            conj_new,
            backtracks: 0,
        })
    }

    /// Fixed-step baselines still evaluate the new objective (one scalar
    /// allreduce) to maintain the cached dual value and the trace.
    fn fixed_step(&mut self, dir: &Direction, eta: f64) -> Result<StepChoice> {
        let partials = self.trial_partials(dir, eta);
        let conj_new = self.cluster.allreduce_sum_scalar(&partials);
        let f_new = self.quad_term(dir, eta) + conj_new;
        if f_new > self.f_dual + 1e-12 * (1.0 + self.f_dual.abs()) {
            log::warn!(
                "fixed step eta = {eta} increased the dual objective: {} -> {} at iteration {}",
                self.f_dual,
                f_new,
                self.iter + 1
            );
        }
        Ok(StepChoice {
            eta,
            f_new,
            conj_new,
            backtracks: 0,
        })
    }

    fn select_step(&mut self, dir: &Direction) -> Result<StepChoice> {
        match self.config.step_rule() {
            // A sign change in an |alpha| term invalidates the quadratic
            // decomposition along this direction; fall back to backtracking
            // for the iteration.
            StepRule::ExactQuadratic if dir.sign_cross => self.backtracking_step(dir),
            StepRule::ExactQuadratic => self.exact_step(dir),
            StepRule::Backtracking => self.backtracking_step(dir),
            StepRule::Fixed(eta) => self.fixed_step(dir, eta),
        }
    }

    fn apply_step(&mut self, dir: &Direction, step: &StepChoice) {
        let labels = self.labels;
        let loss = &self.loss;
        let eta = step.eta;
        let dalpha = &dir.dalpha;
        self.cluster.run_phase(&mut self.workers, |k, w| {
            let d = &dalpha[k];
            for (pos, &j) in w.ctx.block.iter().enumerate() {
                // Clip absorbs last-ulp overshoot at interval boundaries.
                let iv = dual_interval(loss, labels[j]);
                w.alpha[pos] = iv.clip(w.alpha[pos] + eta * d[pos]);
            }
        });
        if eta != 0.0 {
            for (vi, dvi) in self.v.iter_mut().zip(&dir.dv) {
                *vi += eta * dvi;
            }
            self.v_norm_sq = self.v.iter().map(|x| x * x).sum();
        }
        self.conj_sum = step.conj_new;
        self.f_dual = step.f_new;
    }

    /// One outer iteration: direction, step size, update, diagnostics.
    pub fn step(&mut self) -> Result<()> {
        let vec_before = self.cluster.stats().vector_allreduce_rounds;
        let scalar_before = self.cluster.stats().scalar_allreduce_rounds;

        let dir = self.compute_direction()?;
        let step = self.select_step(&dir)?;
        self.apply_step(&dir, &step);
        self.iter += 1;

        // Cost-model bookkeeping: one vector round for dv, one scalar round
        // for delta_t, one per line-search trial.
        debug_assert_eq!(
            self.cluster.stats().vector_allreduce_rounds - vec_before,
            1
        );
        debug_assert_eq!(
            self.cluster.stats().scalar_allreduce_rounds - scalar_before,
            2 + step.backtracks as u64
        );

        self.f_primal = primal_objective(self.matrix, self.labels, &self.loss, &self.v);
        if self.f_primal < self.pocket_primal {
            self.pocket_primal = self.f_primal;
            self.pocket_w.clone_from(&self.v);
        }

        #[cfg(debug_assertions)]
        if self.iter.is_multiple_of(100) {
            self.check_v_drift();
        }

        self.push_trace_row(step.eta, step.backtracks, dir.delta_t);
        Ok(())
    }

    #[cfg(debug_assertions)]
    fn check_v_drift(&self) {
        let recomputed = self.matrix.times(&self.alpha());
        let err: f64 = recomputed
            .iter()
            .zip(&self.v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + self.v_norm_sq.sqrt();
        debug_assert!(
            err <= 1e-6 * scale,
            "v drifted from X*alpha by {err:e} at iteration {}",
            self.iter
        );
    }

    fn push_trace_row(&mut self, eta: f64, backtracks: u32, delta_t: f64) {
        let stats = self.cluster.stats();
        self.trace.push(TraceRecord {
            iter: self.iter,
            time_s: stats.simulated_time_from_model(),
            rounds: stats.rounds_total(),
            bytes: stats.bytes_total,
            f_dual: self.f_dual,
            f_primal: self.f_primal,
            f_primal_pocket: self.pocket_primal,
            eta,
            backtracks,
            delta_t,
        });
    }

    /// Runs outer iterations until the stopping test or `max_iter`.
    pub fn solve(mut self) -> Result<SolveOutput> {
        let mut converged = self.stop_condition_met();
        while !converged && self.iter < self.config.max_iter as u64 {
            self.step()?;
            converged = self.stop_condition_met();
        }
        Ok(SolveOutput {
            weights: self.pocket_w,
            pocket_primal: self.pocket_primal,
            final_dual: self.f_dual,
            converged,
            iterations: self.iter,
            stats: *self.cluster.stats(),
            trace: self.trace,
        })
    }
}
