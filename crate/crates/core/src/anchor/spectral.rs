//! Spectral coarse clustering on the fused [H || X] feature matrix.
//!
//! Pipeline: k-nearest-neighbor cosine similarity graph (k = min(10, n-1)),
//! symmetric normalized Laplacian, the K smallest-eigenvalue eigenvectors via
//! block power iteration on the complementary operator, row normalization,
//! then seeded k-means.

use crate::anchor::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::symbolic::cosine;
use ndarray::Array2;

/// Sparse symmetric similarity graph from mutual/unioned kNN by cosine.
/// Negative similarities are floored at zero so the Laplacian stays valid.
fn knn_similarity(y: &Array2<f64>, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = y.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| y.row(i).to_vec()).collect();
    let mut adj: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for i in 0..n {
        let mut sims: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, cosine(&rows[i], &rows[j])))
            .collect();
        sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(j, sim) in sims.iter().take(k) {
            let w = sim.max(0.0);
            if w > 0.0 {
                adj[i].insert(j, w);
                adj[j].insert(i, w);
            }
        }
    }
    adj.into_iter().map(|m| m.into_iter().collect()).collect()
}

/// Top-k eigenvectors of B = I + D^{-1/2} W D^{-1/2} by block power
/// iteration (equivalently the k smallest-eigenvalue eigenvectors of the
/// symmetric normalized Laplacian). Deterministic for a fixed seed.
fn bottom_laplacian_eigenvectors(
    adj: &[Vec<(usize, f64)>],
    k: usize,
    seed: u64,
    iters: usize,
) -> Array2<f64> {
    let n = adj.len();
    let degree: Vec<f64> = adj.iter().map(|nbs| nbs.iter().map(|(_, w)| w).sum()).collect();
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();

    // v -> v + D^{-1/2} W D^{-1/2} v
    let apply = |v: &Array2<f64>, out: &mut Array2<f64>| {
        for i in 0..n {
            for c in 0..k {
                out[(i, c)] = v[(i, c)];
            }
            for &(j, w) in &adj[i] {
                let scale = inv_sqrt[i] * w * inv_sqrt[j];
                for c in 0..k {
                    out[(i, c)] += scale * v[(j, c)];
                }
            }
        }
    };

    let mut rng = Stream::keyed(seed, "spectral-init", &[n as u64, k as u64]);
    let mut v = Array2::from_shape_fn((n, k), |_| rng.normal());
    let mut next = Array2::zeros((n, k));
    for _ in 0..iters {
        apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        // Gram-Schmidt orthonormalization of the block.
        for c in 0..k {
            for prev in 0..c {
                let dot: f64 = (0..n).map(|i| v[(i, c)] * v[(i, prev)]).sum();
                for i in 0..n {
                    v[(i, c)] -= dot * v[(i, prev)];
                }
            }
            let norm: f64 = (0..n).map(|i| v[(i, c)] * v[(i, c)]).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for i in 0..n {
                    v[(i, c)] /= norm;
                }
            }
        }
    }
    v
}

/// Spectral clustering of the rows of `y` into `k_coarse` clusters.
pub fn coarse_cluster(y: &Array2<f64>, k_coarse: usize, seed: u64) -> Result<Vec<usize>> {
    let n = y.nrows();
    if k_coarse < 2 || k_coarse > n {
        return Err(Error::Clustering(format!(
            "k_coarse = {k_coarse} out of range for n = {n}"
        )));
    }
    if k_coarse == n {
        return Ok((0..n).collect());
    }
    // Degenerate input: all rows identical.
    let first = y.row(0);
    if (1..n).all(|i| y.row(i).iter().zip(first.iter()).all(|(a, b)| a == b)) {
        return Err(Error::Clustering("all feature rows identical; nothing to cluster".into()));
    }
    let k_nn = 10.min(n - 1);
    let adj = knn_similarity(y, k_nn);
    let mut embedding = bottom_laplacian_eigenvectors(&adj, k_coarse, seed, 300);
    // Row-normalize the spectral embedding before k-means.
    for mut row in embedding.rows_mut() {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    Ok(kmeans(&embedding, k_coarse, seed, 100)?.labels)
}
