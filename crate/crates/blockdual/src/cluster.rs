//! Simulated distributed execution substrate.
//!
//! `K` logical workers run bulk-synchronous phases: each phase executes one
//! closure per worker (sequentially or on real threads), then reduction
//! operations combine per-worker partial results in fixed ascending
//! worker-id order. Pinning the reduction order makes every floating-point
//! result deterministic and scheduler-independent, which real allreduce
//! implementations do not guarantee.
//!
//! Reductions are the only cross-worker data flow; workers never share
//! mutable state. [`CommStats`] counts one vector round per vector
//! allreduce (8 bytes per element) and one scalar round per scalar
//! allreduce (8 bytes).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How worker phases are executed. Both schedulers must produce bitwise
/// identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    /// Workers run in worker-id order on the calling thread.
    #[default]
    Sequential,
    /// One OS thread per worker.
    Threads,
}

/// Latency/bandwidth model for simulated communication time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    /// Seconds per reduction round.
    pub latency: f64,
    /// Bytes per second.
    pub bandwidth: f64,
}

/// Communication counters, split by message class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommStats {
    pub vector_allreduce_rounds: u64,
    pub scalar_allreduce_rounds: u64,
    pub bytes_total: u64,
    /// Optional cost model used when reporting simulated time.
    pub time_model: Option<TimeModel>,
}

impl CommStats {
    pub fn rounds_total(&self) -> u64 {
        self.vector_allreduce_rounds + self.scalar_allreduce_rounds
    }

    /// Simulated wall time under a latency/bandwidth cost model:
    /// `rounds * latency + bytes / bandwidth`.
    pub fn simulated_time(&self, latency: f64, bandwidth: f64) -> f64 {
        debug_assert!(latency >= 0.0 && bandwidth > 0.0);
        self.rounds_total() as f64 * latency + self.bytes_total as f64 / bandwidth
    }

    /// Simulated time under the attached model; zero when no model is set.
    pub fn simulated_time_from_model(&self) -> f64 {
        match self.time_model {
            Some(m) => self.simulated_time(m.latency, m.bandwidth),
            None => 0.0,
        }
    }
}

/// Per-worker identity: id, owned columns, and a private RNG stream.
#[derive(Debug, Clone)]
pub struct WorkerContext {
    pub worker_id: usize,
    pub block: Vec<usize>,
    pub rng_stream: ChaCha8Rng,
}

impl WorkerContext {
    pub fn new(worker_id: usize, block: Vec<usize>, seed: u64) -> Self {
        WorkerContext {
            worker_id,
            block,
            rng_stream: ChaCha8Rng::seed_from_u64(seed ^ worker_id as u64),
        }
    }
}

/// The simulated cluster: executes phases and owns all reductions.
#[derive(Debug)]
pub struct Cluster {
    n_workers: usize,
    scheduler: Scheduler,
    stats: CommStats,
}

impl Cluster {
    pub fn new(n_workers: usize, scheduler: Scheduler) -> Self {
        Cluster {
            n_workers,
            scheduler,
            stats: CommStats::default(),
        }
    }

    pub fn set_time_model(&mut self, model: Option<TimeModel>) {
        self.stats.time_model = model;
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn stats(&self) -> &CommStats {
        &self.stats
    }

    /// Runs one bulk-synchronous phase: `f(worker_id, &mut state)` for every
    /// worker, returning the per-worker outputs indexed by worker id. The
    /// phase is a barrier: all workers finish before the call returns.
    pub fn run_phase<S, T, F>(&self, states: &mut [S], f: F) -> Vec<T>
    where
        S: Send,
        T: Send,
        F: Fn(usize, &mut S) -> T + Sync,
    {
        assert_eq!(states.len(), self.n_workers, "one state per worker");
        match self.scheduler {
            Scheduler::Sequential => states
                .iter_mut()
                .enumerate()
                .map(|(k, s)| f(k, s))
                .collect(),
            Scheduler::Threads => {
                let mut out: Vec<Option<T>> = (0..self.n_workers).map(|_| None).collect();
                std::thread::scope(|scope| {
                    let handles: Vec<_> = states
                        .iter_mut()
                        .enumerate()
                        .map(|(k, s)| {
                            let f = &f;
                            scope.spawn(move || (k, f(k, s)))
                        })
                        .collect();
                    for h in handles {
                        let (k, v) = h.join().expect("worker thread panicked");
                        out[k] = Some(v);
                    }
                });
                out.into_iter().map(|v| v.expect("missing worker output")).collect()
            }
        }
    }

    /// Sums per-worker vectors of equal length in ascending worker-id order.
    /// Every worker observes the identical replicated result.
    pub fn allreduce_sum_vector(&mut self, partials: &[Vec<f64>]) -> Result<Vec<f64>> {
        assert_eq!(partials.len(), self.n_workers);
        let n = partials.first().map_or(0, Vec::len);
        for (k, p) in partials.iter().enumerate() {
            if p.len() != n {
                return Err(Error::contract(format!(
                    "allreduce length mismatch: worker {k} sent {} elements, expected {n}",
                    p.len()
                )));
            }
        }
        let mut out = vec![0.0; n];
        for p in partials {
            for (o, x) in out.iter_mut().zip(p) {
                *o += x;
            }
        }
        self.stats.vector_allreduce_rounds += 1;
        self.stats.bytes_total += 8 * n as u64;
        Ok(out)
    }

    /// Sums per-worker scalars in ascending worker-id order.
    pub fn allreduce_sum_scalar(&mut self, partials: &[f64]) -> f64 {
        assert_eq!(partials.len(), self.n_workers);
        self.stats.scalar_allreduce_rounds += 1;
        self.stats.bytes_total += 8;
        partials.iter().sum()
    }
}

/// Contiguous split of the row range `0..n` used to parallelize dense dot
/// products across workers.
pub fn row_chunk(n: usize, k: usize, n_workers: usize) -> std::ops::Range<usize> {
    let start = k * n / n_workers;
    let end = (k + 1) * n / n_workers;
    start..end
}
