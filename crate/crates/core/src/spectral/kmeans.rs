//! Seeded k-means: k-means++ initialization, Lloyd iterations, best of
//! several restarts.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Clustering;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

pub const RESTARTS: usize = 10;
pub const MAX_ITER: usize = 300;
pub const MOVE_TOL: f64 = 1e-10;

/// A k-means fit: the clustering plus its centroids (one per row).
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub clustering: Clustering,
    pub centroids: DMatrix<f64>,
}

/// Clusters the rows of `points` into `k` non-empty groups.
///
/// Deterministic in `(points, k, seed)`.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<Clustering> {
    kmeans_fit(points, k, seed).map(|f| f.clustering)
}

pub fn kmeans_fit(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansFit> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k-means needs 1 <= k <= n, got k={k}, n={n}")));
    }
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut rng = stream_rng(seed, Stream::KMeans, k as u32);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..RESTARTS {
        let fit = lloyd(&rows, k, plus_plus_init(&rows, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.clustering.inertia < b.clustering.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = vec![rows[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // float slop at the tail: fall back to the last positive-weight point
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|d| *d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = rows[pick].clone();
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(rows: &[Vec<f64>], k: usize, mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let n = rows.len();
    let dim = rows[0].len();
    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_ITER {
        let mut dist = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            let (c, d) = nearest(row, &centroids);
            assignment[i] = c;
            dist[i] = d;
        }
        fill_empty(&mut assignment, &mut dist, k);

        let new = means(rows, &assignment, k, dim);
        let moved = new.iter().zip(&centroids).map(|(a, b)| sq_dist(a, b).sqrt()).fold(0.0, f64::max);
        centroids = new;
        if moved < MOVE_TOL {
            break;
        }
    }
    let inertia = rows.iter().zip(&assignment).map(|(r, &c)| sq_dist(r, &centroids[c])).sum();
    KMeansFit {
        clustering: Clustering { assignment, k, inertia },
        centroids: DMatrix::from_fn(k, dim, |r, c| centroids[r][c]),
    }
}

/// Moves the point farthest from its centroid into each empty cluster,
/// taking only from clusters that keep at least one member.
fn fill_empty(assignment: &mut [usize], dist: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for i in 0..assignment.len() {
            if sizes[assignment[i]] > 1 && donor.is_none_or(|d| dist[i] > dist[d]) {
                donor = Some(i);
            }
        }
        let i = donor.expect("k <= n leaves a cluster with spare members");
        sizes[assignment[i]] -= 1;
        assignment[i] = empty;
        dist[i] = 0.0;
        sizes[empty] = 1;
    }
}

fn means(rows: &[Vec<f64>], assignment: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &c) in rows.iter().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(row) {
            *s += x;
        }
    }
    for (s, &cnt) in sums.iter_mut().zip(&counts) {
        let cnt = cnt.max(1) as f64;
        s.iter_mut().for_each(|x| *x /= cnt);
    }
    sums
}
