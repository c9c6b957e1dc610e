//! Seeded k-means (k-means++ initialization, Lloyd iterations).

use crate::error::{Error, Result};
use crate::rng::Stream;
use ndarray::Array2;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
}

/// Deterministic k-means over the rows of `data`. Ties in nearest-centroid
/// assignment break toward the lowest centroid index; empty clusters are
/// repaired by stealing the point farthest from its current centroid.
pub fn kmeans(data: &Array2<f64>, k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = data.nrows();
    let d = data.ncols();
    if k == 0 || k > n {
        return Err(Error::Clustering(format!("k = {k} out of range for n = {n}")));
    }
    let rows: Vec<&[f64]> = (0..n).map(|i| data.row(i).to_slice().unwrap()).collect();
    let mut rng = Stream::keyed(seed, "kmeans", &[n as u64, k as u64]);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(rows[rng.below(n)].to_vec());
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match rng.weighted_index(&d2) {
            Some(idx) => idx,
            // All remaining points coincide with a centroid: pick the first
            // index not already chosen, deterministically.
            None => (0..n)
                .find(|&i| centroids.iter().all(|c| sq_dist(rows[i], c) > 0.0))
                .unwrap_or(0),
        };
        centroids.push(rows[next].to_vec());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centroids.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..max_iter {
        // assignment
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, cent) in centroids.iter().enumerate() {
                let dist = sq_dist(r, cent);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // empty-cluster repair
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| {
                        sq_dist(rows[a], &centroids[labels[a]])
                            .partial_cmp(&sq_dist(rows[b], &centroids[labels[b]]))
                            .unwrap()
                            .then(b.cmp(&a))
                    });
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    labels[i] = c;
                    counts[c] = 1;
                    changed = true;
                }
            }
        }
        // update
        let mut sums = vec![vec![0.0; d]; k];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                sums[labels[i]][j] += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for v in &mut sums[c] {
                    *v /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            }
        }
        if !changed {
            break;
        }
    }

    let mut cents = Array2::zeros((k, d));
    for (c, row) in centroids.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            cents[(c, j)] = *v;
        }
    }
    Ok(KMeansResult {
        labels,
        centroids: cents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separates_two_obvious_blobs() {
        let data = array![
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 5.1]
        ];
        let r = kmeans(&data, 2, 7, 100).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[0], r.labels[2]);
        assert_eq!(r.labels[3], r.labels[4]);
        assert_ne!(r.labels[0], r.labels[3]);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let data = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 13) % 11) as f64);
        let a = kmeans(&data, 4, 3, 100).unwrap();
        let b = kmeans(&data, 4, 3, 100).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let data = array![[0.0], [1.0], [2.0]];
        let r = kmeans(&data, 3, 1, 100).unwrap();
        let mut sorted = r.labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_k() {
        let data = array![[0.0], [1.0]];
        assert!(kmeans(&data, 0, 1, 10).is_err());
        assert!(kmeans(&data, 3, 1, 10).is_err());
    }
}
