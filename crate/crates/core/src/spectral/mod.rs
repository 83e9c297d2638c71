//! Normalized-Laplacian spectral clustering.
//!
//! The pipeline is `L = I − D^{-1/2} W D^{-1/2}`, the `k` eigenvectors of
//! `L` with smallest eigenvalues as columns of `Q`, rows of `Q` scaled to unit
//! length, then k-means on those rows. Taking the bottom eigenvectors is the
//! relaxed solution of the MinMaxCut trace minimization, so no separate
//! optimizer exists for it.

mod eigen;
mod kmeans;

use nalgebra::DMatrix;

pub use eigen::{canonicalize_sign, residual, EigenSolver, Eigenpairs, DENSE_LIMIT, LANCZOS_TOL, RESIDUAL_TOL};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit, MAX_ITER, MOVE_TOL, RESTARTS};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Rows with norm below this are treated as zero by [`row_normalize`].
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// Normalized Laplacian of a graph without isolated vertices, stored sparse.
///
/// Off-diagonal entries are `−w_ij / sqrt(d_i d_j)`; the diagonal is 1.
#[derive(Debug, Clone)]
pub struct Laplacian {
    degrees: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// `w_ij / sqrt(d_i d_j)`
    vals: Vec<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        let off = row.binary_search(&j).map_or(0.0, |p| self.vals[self.row_ptr[i] + p]);
        if i == j {
            1.0 - off
        } else {
            -off
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::identity(n, n);
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] -= self.vals[p];
            }
        }
        m
    }

    /// `y = L x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n() {
            let mut acc = x[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc -= self.vals[p] * x[self.cols[p]];
            }
            y[i] = acc;
        }
    }
}

/// Builds `D` and `L` for `g`. Fails on the first zero-degree vertex.
pub fn degree_and_laplacian(g: &WeightedGraph) -> Result<Laplacian> {
    let n = g.n();
    let degrees: Vec<f64> = (0..n).map(|u| g.degree(u)).collect();
    if let Some(u) = degrees.iter().position(|d| d.is_nan() || *d <= 0.0) {
        return Err(Error::IsolatedVertex(g.vertices()[u].clone()));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for u in 0..n {
        for &(v, w) in g.neighbors(u) {
            cols.push(v);
            vals.push(w * inv_sqrt[u] * inv_sqrt[v]);
        }
        row_ptr.push(cols.len());
    }
    Ok(Laplacian { degrees, row_ptr, cols, vals })
}

/// Bottom of the spectrum of `L`: eigenvalues, eigenvectors `Q` (columns)
/// and the row-normalized embedding `U`.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub rows: DMatrix<f64>,
    /// Rows of `Q` too small to normalize; left at zero in `rows`.
    pub zero_rows: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl SpectralEmbedding {
    pub fn from_eigenpairs(pairs: Eigenpairs) -> Self {
        let (rows, zero_rows) = row_normalize(&pairs.vectors);
        SpectralEmbedding {
            eigenvalues: pairs.values,
            vectors: pairs.vectors,
            rows,
            zero_rows,
            residuals: pairs.residuals,
        }
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The embedding restricted to the first `k` eigenpairs.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::Parameter(format!("cannot truncate {} eigenpairs to {k}", self.k())));
        }
        Ok(Self::from_eigenpairs(Eigenpairs {
            values: self.eigenvalues[..k].to_vec(),
            vectors: self.vectors.columns(0, k).into_owned(),
            residuals: self.residuals[..k].to_vec(),
        }))
    }
}

pub fn smallest_eigenpairs(l: &Laplacian, k: usize) -> Result<SpectralEmbedding> {
    smallest_eigenpairs_with(l, k, EigenSolver::Auto)
}

pub fn smallest_eigenpairs_with(l: &Laplacian, k: usize, solver: EigenSolver) -> Result<SpectralEmbedding> {
    eigen::solve(l, k, solver).map(SpectralEmbedding::from_eigenpairs)
}

/// Scales each row to unit Euclidean norm. Zero rows stay zero and are
/// returned by index.
pub fn row_normalize(q: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let mut u = q.clone();
    let mut zero = Vec::new();
    for (i, mut row) in u.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm < ZERO_ROW_TOL {
            row.fill(0.0);
            zero.push(i);
        } else {
            row /= norm;
        }
    }
    (u, zero)
}

/// A hard partition of vertices `0..n` into `k` labeled groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub k: usize,
    /// k-means objective of the fit; zero for partitions not produced by k-means.
    pub inertia: f64,
}

impl Clustering {
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &c in &assignment {
            seen[c] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::Input(format!("cluster label {c} is unused")));
        }
        Ok(Clustering { assignment, k, inertia: 0.0 })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            groups[c].push(v);
        }
        groups
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Relabels clusters in ascending order of their smallest member name.
    pub fn canonicalize(&mut self, names: &[String]) {
        let mut first: Vec<Option<&str>> = vec![None; self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            let name = names[v].as_str();
            if first[c].is_none_or(|f| name < f) {
                first[c] = Some(name);
            }
        }
        let mut order: Vec<usize> = (0..self.k).collect();
        order.sort_by_key(|&c| first[c]);
        let mut relabel = vec![0; self.k];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        self.assignment.iter_mut().for_each(|c| *c = relabel[*c]);
    }
}

/// Errors with [`Error::Disconnected`] unless `g` has one component.
pub fn check_connected(g: &WeightedGraph) -> Result<()> {
    let comps = g.components();
    if comps.len() > 1 {
        let named = comps.into_iter().map(|c| c.into_iter().map(|u| g.vertices()[u].clone()).collect()).collect();
        return Err(Error::Disconnected(named));
    }
    Ok(())
}

/// The eigen-decomposition of one graph, reusable across cluster counts.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub laplacian: Laplacian,
    pub embedding: SpectralEmbedding,
    names: Vec<String>,
}

impl Spectrum {
    /// Decomposes a connected graph, keeping the bottom `k_max` eigenpairs.
    pub fn compute(g: &WeightedGraph, k_max: usize, solver: EigenSolver) -> Result<Self> {
        let laplacian = degree_and_laplacian(g)?;
        check_connected(g)?;
        if k_max == 0 || k_max > g.n() {
            return Err(Error::Parameter(format!("need 1 <= k <= n, got k={k_max}, n={}", g.n())));
        }
        let embedding = smallest_eigenpairs_with(&laplacian, k_max, solver)?;
        Ok(Spectrum { laplacian, embedding, names: g.vertices().to_vec() })
    }

    pub fn k_max(&self) -> usize {
        self.embedding.k()
    }

    /// k-means on the first `k` columns, labels canonicalized by vertex name.
    pub fn cluster(&self, k: usize, seed: u64) -> Result<Clustering> {
        let emb = self.embedding.truncate(k)?;
        cluster_rows(&emb, k, seed, &self.names)
    }
}

/// k-means over the rows of `emb.rows`. Zero rows are left out of the fit
/// and assigned to their nearest centroid afterwards.
pub fn cluster_rows(emb: &SpectralEmbedding, k: usize, seed: u64, names: &[String]) -> Result<Clustering> {
    let n = emb.rows.nrows();
    if k > n {
        return Err(Error::Parameter(format!("k={k} exceeds n={n}")));
    }
    let live: Vec<usize> = (0..n).filter(|i| !emb.zero_rows.contains(i)).collect();
    let mut clustering = if emb.zero_rows.is_empty() || live.len() < k {
        kmeans(&emb.rows, k, seed)?
    } else {
        let sub = emb.rows.select_rows(live.iter());
        let fit = kmeans_fit(&sub, k, seed)?;
        let mut assignment = vec![0; n];
        for (pos, &i) in live.iter().enumerate() {
            assignment[i] = fit.clustering.assignment[pos];
        }
        let mut inertia = fit.clustering.inertia;
        for &i in &emb.zero_rows {
            let (c, d) = (0..k)
                .map(|c| (c, fit.centroids.row(c).norm_squared()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("k >= 1");
            assignment[i] = c;
            inertia += d;
        }
        Clustering { assignment, k, inertia }
    };
    clustering.canonicalize(names);
    Ok(clustering)
}

/// Full pipeline on a connected graph: Laplacian, bottom-`k` eigenvectors,
/// row normalization, seeded k-means.
pub fn spectral_cluster(g: &WeightedGraph, k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 || k > g.n() {
        return Err(Error::Parameter(format!("need 1 <= k <= n, got k={k}, n={}", g.n())));
    }
    Spectrum::compute(g, k, EigenSolver::Auto)?.cluster(k, seed)
}

/// Fiedler vector (second-smallest eigenvector of `L`) of a connected graph.
pub fn fiedler_vector(g: &WeightedGraph) -> Result<Vec<f64>> {
    if g.n() < 2 {
        return Err(Error::Parameter("fiedler vector needs at least two vertices".into()));
    }
    let s = Spectrum::compute(g, 2, EigenSolver::Auto)?;
    Ok(s.embedding.vectors.column(1).iter().copied().collect())
}
