//! Smallest eigenpairs of the normalized Laplacian.
//!
//! Small problems use nalgebra's dense symmetric solver. Large ones use a
//! restarted Lanczos iteration (Krylov-Schur style, full reorthogonalization)
//! on the shifted operator `2I - L`, whose largest eigenvalues are the
//! smallest of `L`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::Laplacian;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Above this order the Lanczos path is used by [`EigenSolver::Auto`].
pub const DENSE_LIMIT: usize = 2000;
/// Residual bound every returned eigenpair must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Lanczos convergence tolerance on `‖Lq − λq‖` for unit `q`.
pub const LANCZOS_TOL: f64 = 1e-10;
const LANCZOS_MAX_RESTARTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Ascending eigenvalues with unit eigenvectors as matrix columns.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
}

pub fn solve(l: &Laplacian, k: usize, solver: EigenSolver) -> Result<Eigenpairs> {
    let n = l.n();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let use_dense = match solver {
        EigenSolver::Dense => true,
        EigenSolver::Lanczos => false,
        EigenSolver::Auto => n <= DENSE_LIMIT,
    };
    let (values, mut vectors) = if use_dense || n <= k + 2 { dense(l, k) } else { lanczos(l, k)? };
    for mut col in vectors.column_iter_mut() {
        canonicalize_sign(col.as_mut_slice());
    }
    let residuals: Vec<f64> = (0..k).map(|c| residual(l, values[c], vectors.column(c).as_slice())).collect();
    if let Some((rank, r)) = residuals.iter().enumerate().find(|(_, r)| r.is_nan() || **r > RESIDUAL_TOL) {
        return Err(Error::Numeric(format!("eigenpair {} residual {r:.3e} exceeds {RESIDUAL_TOL:e}", rank + 1)));
    }
    Ok(Eigenpairs { values, vectors, residuals })
}

fn dense(l: &Laplacian, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = l.n();
    let eig = SymmetricEigen::new(l.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `‖Lq − λq‖ / ‖q‖`.
pub fn residual(l: &Laplacian, lambda: f64, q: &[f64]) -> f64 {
    let mut lq = vec![0.0; q.len()];
    l.apply(q, &mut lq);
    let r: f64 = lq.iter().zip(q).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    r / norm
}

/// Orthogonalizes `w` against the columns in `basis` (two passes), returning its remaining norm.
fn orthogonalize(basis: &[DVector<f64>], w: &mut DVector<f64>) -> f64 {
    for _ in 0..2 {
        for v in basis {
            let c = v.dot(w);
            w.axpy(-c, v, 1.0);
        }
    }
    w.norm()
}

fn lanczos(l: &Laplacian, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = l.n();
    let max_dim = (2 * k + 20).max(40).min(n);
    let keep = (k + (max_dim - k) / 2).min(max_dim - 1).max(k);
    let shifted = |x: &DVector<f64>| {
        let mut y = DVector::zeros(n);
        l.apply(x.as_slice(), y.as_mut_slice());
        // 2x - Lx
        y.iter_mut().zip(x.iter()).for_each(|(yi, xi)| *yi = 2.0 * xi - *yi);
        y
    };
    let mut rng = stream_rng(0, Stream::EigenStart, 0);
    let mut random_vector = |basis: &[DVector<f64>]| -> Result<DVector<f64>> {
        for _ in 0..10 {
            let mut v = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
            let norm = orthogonalize(basis, &mut v);
            if norm > 1e-8 {
                return Ok(v / norm);
            }
        }
        Err(Error::Numeric("lanczos could not extend the Krylov basis".into()))
    };

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_dim);
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(max_dim);
    let mut next = random_vector(&basis)?;
    let mut worst = f64::INFINITY;

    for _restart in 0..LANCZOS_MAX_RESTARTS {
        while basis.len() < max_dim {
            let image = shifted(&next);
            basis.push(next);
            images.push(image.clone());
            let mut f = image;
            let norm = orthogonalize(&basis, &mut f);
            next = if norm > 1e-12 { f / norm } else { random_vector(&basis)? };
        }

        // Rayleigh-Ritz on span(basis).
        let m = basis.len();
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x = 0.5 * (basis[i].dot(&images[j]) + basis[j].dot(&images[i]));
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let combine = |cols: &[DVector<f64>], c: usize| {
            let mut out = DVector::zeros(n);
            for (i, col) in cols.iter().enumerate() {
                out.axpy(eig.eigenvectors[(i, c)], col, 1.0);
            }
            out
        };
        let ritz: Vec<(f64, DVector<f64>, DVector<f64>)> =
            order[..keep].iter().map(|&c| (eig.eigenvalues[c], combine(&basis, c), combine(&images, c))).collect();
        worst = ritz[..k].iter().map(|(theta, y, by)| (by - y * *theta).norm()).fold(0.0, f64::max);
        if worst <= LANCZOS_TOL {
            let values = ritz[..k].iter().map(|(theta, _, _)| 2.0 - theta).collect();
            let vectors = DMatrix::from_fn(n, k, |r, c| ritz[c].1[r]);
            return Ok((values, vectors));
        }

        // Thick restart: keep the leading Ritz vectors, continue from the
        // residual direction already orthogonal to them.
        basis.clear();
        images.clear();
        for (_, y, by) in ritz {
            basis.push(y);
            images.push(by);
        }
        // Reorthogonalize the kept vectors against drift before extending.
        let norm = orthogonalize(&basis, &mut next);
        next = if norm > 1e-12 { next / norm } else { random_vector(&basis)? };
    }
    Err(Error::Numeric(format!(
        "lanczos did not converge in {LANCZOS_MAX_RESTARTS} restarts; worst residual {worst:.3e}"
    )))
}
