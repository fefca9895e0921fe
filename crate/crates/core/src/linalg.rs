//! Small dense helpers shared by the decompositions and the solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted nonincreasing.
pub(crate) fn eigh_desc(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    if m.is_empty() {
        return (Vec::new(), DMatrix::zeros(m.nrows(), 0));
    }
    let herm = (m + m.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Modified Gram–Schmidt of `v` against the columns in `basis`; returns the
/// normalized remainder when its norm exceeds `cutoff`.
pub(crate) fn orthonormal_remainder(
    basis: &[DVector<C64>],
    v: &DVector<C64>,
    cutoff: f64,
) -> Option<DVector<C64>> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
    }
    let norm = w.norm();
    (norm > cutoff).then(|| w.unscale(norm))
}

/// Orthonormal basis spanning the given vectors (rank-revealing Gram–Schmidt).
pub(crate) fn orthonormal_span(vectors: &[DVector<C64>], rel_cutoff: f64) -> Vec<DVector<C64>> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut out: Vec<DVector<C64>> = Vec::new();
    if scale == 0.0 {
        return out;
    }
    for v in vectors {
        if let Some(w) = orthonormal_remainder(&out, v, rel_cutoff * scale) {
            out.push(w);
        }
    }
    out
}

/// Completes an orthonormal set with standard basis vectors (lowest index first).
pub(crate) fn complete_basis(mut columns: Vec<DVector<C64>>, dim: usize) -> Vec<DVector<C64>> {
    let mut i = 0;
    while columns.len() < dim && i < dim {
        let mut e = DVector::zeros(dim);
        e[i] = C64::new(1.0, 0.0);
        if let Some(w) = orthonormal_remainder(&columns, &e, 1e-6) {
            columns.push(w);
        }
        i += 1;
    }
    columns
}

pub(crate) fn columns_to_matrix(columns: &[DVector<C64>], rows: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, columns.len(), |r, c| columns[c][r])
}

/// Deviation `max |U†U − 1|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let g = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Vector with independent standard complex Gaussian entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize) -> DVector<C64> {
    DVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary via QR of a complex Gaussian matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    (&z + z.adjoint()).unscale(2.0)
}

/// Applies the single-particle operator `u` to every one of the `n` slots of `v`.
pub fn apply_local(u: &DMatrix<C64>, n: usize, v: &DVector<C64>) -> DVector<C64> {
    let d = u.nrows();
    let mut cur = v.clone();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for slot in 0..n {
        let inner = d.pow((n - 1 - slot) as u32);
        let outer = v.len() / (inner * d);
        for o in 0..outer {
            for i in 0..inner {
                let base = o * inner * d + i;
                for (a, b) in buf.iter_mut().enumerate() {
                    *b = (0..d).map(|k| u[(a, k)] * cur[base + k * inner]).sum();
                }
                for (a, b) in buf.iter().enumerate() {
                    cur[base + a * inner] = *b;
                }
            }
        }
    }
    cur
}
