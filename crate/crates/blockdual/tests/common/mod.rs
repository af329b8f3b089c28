//! Shared fixtures for the integration and acceptance suites.

use blockdual::dataio::{LabelVector, SparseColumnMatrix};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Seeded sparse classification data: a planted weight vector, uniform
/// feature values, labels flipped with probability `noise`. Every instance
/// has at least one non-zero.
pub fn synthetic_classification(
    seed: u64,
    n_features: usize,
    n_instances: usize,
    nnz_per_instance: usize,
    noise: f64,
) -> (SparseColumnMatrix, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..n_features).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut columns = Vec::with_capacity(n_instances);
    let mut labels = Vec::with_capacity(n_instances);
    for _ in 0..n_instances {
        let k = nnz_per_instance.clamp(1, n_features);
        let mut idx: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n_features)).collect();
        idx.sort_unstable();
        idx.dedup();
        let col: Vec<(usize, f64)> = idx
            .into_iter()
            .map(|i| {
                let mut x: f64 = rng.gen_range(-1.0..1.0);
                if x == 0.0 {
                    x = 0.5;
                }
                (i, x)
            })
            .collect();
        let score: f64 = col.iter().map(|&(i, x)| x * planted[i]).sum();
        let mut y = if score >= 0.0 { 1.0 } else { -1.0 };
        if rng.gen::<f64>() < noise {
            y = -y;
        }
        labels.push(y);
        columns.push(col);
    }
    (
        SparseColumnMatrix::new(n_features, columns).expect("generator respects invariants"),
        LabelVector(labels),
    )
}

// Each integration-test binary compiles this module separately and not all
// of them call every helper.
#[allow(dead_code)]
pub fn to_libsvm_string(labels: &LabelVector, matrix: &SparseColumnMatrix) -> String {
    let mut buf = Vec::new();
    blockdual::dataio::write_libsvm(&mut buf, labels, matrix).unwrap();
    String::from_utf8(buf).unwrap()
}
