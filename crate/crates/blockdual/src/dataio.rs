//! Data loading, column-wise sparse storage, and worker partitioning.
//!
//! Instances are stored as *columns* of the data matrix: column `j` is the
//! feature vector of instance `j`, so each column corresponds to one dual
//! coordinate. Columns are assigned to workers as contiguous ranges balanced
//! by non-zero count, preserving the original instance order (no shuffling
//! unless explicitly requested).

use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sparse column: `(row index, value)` pairs sorted by row index.
pub type SparseColumn = Vec<(usize, f64)>;

/// Column-oriented sparse matrix. `n_rows` is the feature dimension, the
/// number of columns is the dual dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumnMatrix {
    n_rows: usize,
    columns: Vec<SparseColumn>,
}

impl SparseColumnMatrix {
    /// Builds a matrix, validating the column invariants: strictly
    /// increasing in-range row indices, finite non-zero values.
    pub fn new(n_rows: usize, columns: Vec<SparseColumn>) -> Result<Self> {
        for (j, col) in columns.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(i, x) in col {
                if i >= n_rows {
                    return Err(Error::contract(format!(
                        "column {j}: row index {i} out of range (n_rows = {n_rows})"
                    )));
                }
                if let Some(p) = prev {
                    if i <= p {
                        return Err(Error::contract(format!(
                            "column {j}: row indices not strictly increasing at {i}"
                        )));
                    }
                }
                if x == 0.0 || !x.is_finite() {
                    return Err(Error::contract(format!(
                        "column {j}: stored value {x} at row {i} must be finite and non-zero"
                    )));
                }
                prev = Some(i);
            }
        }
        Ok(SparseColumnMatrix { n_rows, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Non-zero count per column, the load metric for partitioning.
    pub fn column_nnz(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }

    /// Squared Euclidean norm of each column.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| c.iter().map(|&(_, x)| x * x).sum())
            .collect()
    }

    /// Sparse dot product of column `j` with a dense vector.
    pub fn column_dot(&self, j: usize, v: &[f64]) -> f64 {
        self.columns[j].iter().map(|&(i, x)| x * v[i]).sum()
    }

    /// `out += scale * column_j`.
    pub fn column_axpy(&self, j: usize, scale: f64, out: &mut [f64]) {
        for &(i, x) in &self.columns[j] {
            out[i] += scale * x;
        }
    }

    /// Dense product `X * alpha` accumulated in column order.
    pub fn times(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (j, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                self.column_axpy(j, a, &mut out);
            }
        }
        out
    }
}

/// Labels, one per column of the data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector(pub Vec<f64>);

impl LabelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Assignment of columns to workers: contiguous, order-preserving blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    fn from_blocks(blocks: Vec<Vec<usize>>, n_cols: usize) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n_cols];
        for (k, block) in blocks.iter().enumerate() {
            for &j in block {
                if j >= n_cols {
                    return Err(Error::contract(format!(
                        "partition block {k} references column {j} >= {n_cols}"
                    )));
                }
                if assignment[j] != usize::MAX {
                    return Err(Error::contract(format!(
                        "column {j} assigned to two workers"
                    )));
                }
                assignment[j] = k;
            }
        }
        if let Some(j) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::contract(format!("column {j} unassigned")));
        }
        Ok(Partition { assignment, blocks })
    }

    pub fn n_workers(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_cols(&self) -> usize {
        self.assignment.len()
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Worker owning column `j`.
    pub fn worker_of(&self, j: usize) -> usize {
        self.assignment[j]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PartitionRepr {
            blocks: self.blocks.clone(),
        })
        .expect("partition serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: PartitionRepr =
            serde_json::from_str(s).map_err(|e| Error::config(format!("partition JSON: {e}")))?;
        let n_cols = repr.blocks.iter().map(Vec::len).sum();
        Partition::from_blocks(repr.blocks, n_cols)
    }
}

/// Parses LIBSVM-format text: one instance per line,
/// `<label> <index>:<value> ...` with 1-based feature indices.
///
/// Indices are converted to 0-based. Duplicate indices within a line are
/// rejected; unsorted indices are sorted; explicit zeros are dropped. The
/// feature dimension is the maximum index seen.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<(LabelVector, SparseColumnMatrix)> {
    let mut labels = Vec::new();
    let mut columns: Vec<SparseColumn> = Vec::new();
    let mut n_rows = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let label_tok = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "empty line"))?;
        let label: f64 = label_tok
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite label {label}")));
        }

        let mut col: SparseColumn = Vec::new();
        for tok in fields {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad feature index '{idx_s}'")))?;
            if idx == 0 {
                return Err(Error::parse(lineno, "feature indices are 1-based"));
            }
            let val: f64 = val_s
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad feature value '{val_s}'")))?;
            if !val.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite value {val}")));
            }
            if val != 0.0 {
                col.push((idx - 1, val));
            }
            n_rows = n_rows.max(idx);
        }
        col.sort_unstable_by_key(|&(i, _)| i);
        if col.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(lineno, "duplicate feature index"));
        }
        labels.push(label);
        columns.push(col);
    }

    let matrix = SparseColumnMatrix::new(n_rows, columns)?;
    Ok((LabelVector(labels), matrix))
}

/// Writes the canonical LIBSVM representation (inverse of [`parse_libsvm`]
/// on canonical inputs).
pub fn write_libsvm<W: std::io::Write>(
    w: &mut W,
    labels: &LabelVector,
    matrix: &SparseColumnMatrix,
) -> Result<()> {
    for (j, &y) in labels.0.iter().enumerate() {
        write!(w, "{}", y)?;
        for &(i, x) in matrix.column(j) {
            write!(w, " {}:{}", i + 1, x)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Permutes columns (and labels) with a seeded RNG. Partitioning stays
/// contiguous afterwards, so this is how heterogeneous worker distributions
/// are exercised.
pub fn shuffle_columns(
    matrix: SparseColumnMatrix,
    labels: LabelVector,
    seed: u64,
) -> (SparseColumnMatrix, LabelVector) {
    let mut perm: Vec<usize> = (0..matrix.n_cols()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_rows = matrix.n_rows;
    let mut cols = matrix.columns;
    let mut new_cols = Vec::with_capacity(cols.len());
    let mut new_labels = Vec::with_capacity(labels.len());
    for &j in &perm {
        new_cols.push(std::mem::take(&mut cols[j]));
        new_labels.push(labels.0[j]);
    }
    (
        SparseColumnMatrix {
            n_rows,
            columns: new_cols,
        },
        LabelVector(new_labels),
    )
}

/// Splits columns into `k` contiguous blocks minimizing the largest
/// per-worker non-zero count. Column order is preserved; empty blocks only
/// appear as trailing workers (when `k` exceeds the column count); among
/// optimal splits the earliest split points are chosen.
pub fn partition_by_nnz(nnz: &[usize], k: usize) -> Result<Partition> {
    if k == 0 {
        return Err(Error::config("worker count must be at least 1"));
    }
    if nnz.is_empty() {
        return Err(Error::config("cannot partition zero columns"));
    }
    let n = nnz.len();
    if k > n {
        log::warn!("{k} workers for {n} columns; workers {n}..{k} receive empty blocks");
    }
    let parts = k.min(n);

    // Minimal achievable max load for `parts` contiguous blocks, by binary
    // search over the load bound with a greedy feasibility check.
    let total: usize = nnz.iter().sum();
    let mut lo = (*nnz.iter().max().unwrap()).max(total.div_ceil(parts));
    let mut hi = total;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if min_blocks_for_load(nnz, mid) <= parts {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let load_cap = lo;

    // min_parts[i] = fewest blocks of load <= load_cap covering columns i..n.
    let mut min_parts = vec![0usize; n + 1];
    {
        let mut end = n; // exclusive end of the greedy block starting at i
        let mut acc = 0usize;
        for i in (0..n).rev() {
            acc += nnz[i];
            while acc > load_cap {
                end -= 1;
                acc -= nnz[end];
            }
            // Greedy maximal block from i is [i, end); end > i since
            // nnz[i] <= load_cap by the lower bound on `lo`.
            min_parts[i] = 1 + min_parts[end];
        }
    }

    // Assign each worker the smallest non-empty prefix that keeps the
    // remainder coverable by the workers left (earliest split points).
    let mut blocks = Vec::with_capacity(k);
    let mut start = 0usize;
    for worker in 0..parts {
        let remaining = parts - worker - 1;
        let mut end = start + 1;
        let mut load = nnz[start];
        while min_parts[end] > remaining && end < n {
            end += 1;
            load += nnz[end - 1];
        }
        debug_assert!(load <= load_cap);
        blocks.push((start..end).collect());
        start = end;
    }
    debug_assert_eq!(start, n);
    blocks.resize_with(k, Vec::new);

    Partition::from_blocks(blocks, n)
}

/// Fewest contiguous blocks with per-block load at most `cap` (greedy).
fn min_blocks_for_load(nnz: &[usize], cap: usize) -> usize {
    let mut blocks = 1usize;
    let mut acc = 0usize;
    for &c in nnz {
        if c > cap {
            return usize::MAX;
        }
        if acc + c > cap {
            blocks += 1;
            acc = c;
        } else {
            acc += c;
        }
    }
    blocks
}

/// Largest eigenvalue of `X^T X` by power iteration, relative tolerance
/// 1e-6, at most 1000 iterations, deterministic all-ones start.
pub fn spectral_norm_sq(matrix: &SparseColumnMatrix) -> f64 {
    let n_cols = matrix.n_cols();
    if n_cols == 0 || matrix.nnz() == 0 {
        return 0.0;
    }
    let mut u = vec![1.0 / (n_cols as f64).sqrt(); n_cols];
    let mut lambda = 0.0f64;
    let mut restarted = false;
    for _ in 0..1000 {
        // z = X^T (X u)
        let w = matrix.times(&u);
        let z: Vec<f64> = (0..n_cols).map(|j| matrix.column_dot(j, &w)).collect();
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE {
            if restarted {
                return 0.0;
            }
            // Start vector annihilated by X^T X; restart off the kernel.
            restarted = true;
            let mut s = 0.0;
            for (j, x) in u.iter_mut().enumerate() {
                *x = (j as f64 + 1.0).sin() + 0.5;
                s += *x * *x;
            }
            let s = s.sqrt();
            u.iter_mut().for_each(|x| *x /= s);
            continue;
        }
        let new_lambda = u.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        for (uj, zj) in u.iter_mut().zip(&z) {
            *uj = zj / norm;
        }
        if (new_lambda - lambda).abs() <= 1e-6 * new_lambda.abs().max(f64::MIN_POSITIVE) {
            return new_lambda;
        }
        lambda = new_lambda;
    }
    lambda
}
