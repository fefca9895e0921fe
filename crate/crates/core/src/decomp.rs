//! Schmidt and Slater decompositions of two-particle states.
//!
//! The Slater forms come from the Autonne–Takagi factorization of the
//! coefficient matrix `M_{ij} = ψ_{i,j}`: `M = U D Uᵀ` with `U` unitary and `D`
//! either diagonal (symmetric `M`, bosons) or a direct sum of `κ [[0, 1], [−1, 0]]`
//! blocks (skew-symmetric `M`, fermions).
//!
//! Both factorizations are computed by deflation: the leading Takagi vector is
//! taken from the top eigenspace of `M M†`, its phase is fixed from the
//! (skew-)symmetric structure, and the rank-one (rank-two) term is subtracted.
//! Within a degenerate eigenspace the vector with the largest weight on the
//! lowest-index mode is chosen, so the output is deterministic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{columns_to_matrix, complete_basis, eigh_desc, orthonormal_remainder};
use crate::tensor::{hermitian_deviation, DensityOperator, SpaceConfig, StateVector, TOL_HERM};

/// Tolerance on `‖M ∓ Mᵀ‖` for the (skew-)symmetry preconditions.
pub const TOL_SYMMETRY: f64 = 1e-10;
/// Default relative eigenvalue cutoff of [`numerical_rank`].
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-10;

const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Nonincreasing `λ_n ≥ 0`.
    pub coefficients: Vec<f64>,
    /// Columns `|u_n⟩`.
    pub left_basis: DMatrix<C64>,
    /// Columns `|v_n⟩`.
    pub right_basis: DMatrix<C64>,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> DVector<C64> {
        let d = self.left_basis.nrows();
        let mut out = DVector::zeros(d * d);
        for (n, &l) in self.coefficients.iter().enumerate() {
            let u = self.left_basis.column(n);
            let v = self.right_basis.column(n);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += u[i] * v[j] * l;
                }
            }
        }
        out
    }
}

/// Result of a Takagi factorization `M = U D Uᵀ`.
#[derive(Debug, Clone)]
pub struct Takagi {
    pub unitary: DMatrix<C64>,
    /// Nonincreasing, `d` entries (symmetric) or `⌊d/2⌋` entries (skew).
    pub coefficients: Vec<f64>,
}

impl Takagi {
    /// `U D Uᵀ` for the symmetric form.
    pub fn reconstruct_symmetric(&self) -> DMatrix<C64> {
        let d = self.unitary.nrows();
        let diag = DMatrix::from_fn(d, d, |i, j| {
            if i == j { C64::new(self.coefficients[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        &self.unitary * diag * self.unitary.transpose()
    }

    /// `U D Uᵀ` for the skew form.
    pub fn reconstruct_skew(&self) -> DMatrix<C64> {
        let d = self.unitary.nrows();
        let mut block = DMatrix::zeros(d, d);
        for (j, &k) in self.coefficients.iter().enumerate() {
            block[(2 * j, 2 * j + 1)] = C64::new(k, 0.0);
            block[(2 * j + 1, 2 * j)] = C64::new(-k, 0.0);
        }
        &self.unitary * block * self.unitary.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct FermionSlater {
    /// `κ_n ≥ 0`, `⌊d/2⌋` entries.
    pub coefficients: Vec<f64>,
    /// Unitary with columns `|w_n⟩`.
    pub basis: DMatrix<C64>,
}

impl FermionSlater {
    /// `Σ_n κ_n (|w_{2n−1}, w_{2n}⟩ − |w_{2n}, w_{2n−1}⟩)`.
    pub fn reconstruct(&self) -> DVector<C64> {
        let d = self.basis.nrows();
        let mut out = DVector::zeros(d * d);
        for (n, &k) in self.coefficients.iter().enumerate() {
            let a = self.basis.column(2 * n);
            let b = self.basis.column(2 * n + 1);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += (a[i] * b[j] - b[i] * a[j]) * k;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BosonSlater {
    /// `κ′_n ≥ 0`, `d` entries.
    pub coefficients: Vec<f64>,
    /// Unitary with columns `|w′_n⟩`.
    pub basis: DMatrix<C64>,
}

impl BosonSlater {
    /// `Σ_n κ′_n |w′_n, w′_n⟩`.
    pub fn reconstruct(&self) -> DVector<C64> {
        let d = self.basis.nrows();
        let mut out = DVector::zeros(d * d);
        for (n, &k) in self.coefficients.iter().enumerate() {
            let w = self.basis.column(n);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += w[i] * w[j] * k;
                }
            }
        }
        out
    }
}

/// `Π⁺|a₁, a₂⟩ = U′⊗U′ (λ′₁|1,1⟩ + λ′₂|2,2⟩)` with
/// `|a_{1(2)}⟩ = U′[√λ′₁|1⟩ ± i√λ′₂|2⟩]`.
#[derive(Debug, Clone)]
pub struct BosonProductDecomposition {
    pub basis: DMatrix<C64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub party_vectors: [DVector<C64>; 2],
}

impl BosonProductDecomposition {
    /// `λ′₁|w₁,w₁⟩ + λ′₂|w₂,w₂⟩`, which equals `Π⁺|a₁,a₂⟩`.
    pub fn reconstruct(&self) -> DVector<C64> {
        let d = self.basis.nrows();
        let mut out = DVector::zeros(d * d);
        for (col, l) in [(0, self.lambda1), (1, self.lambda2)] {
            if col >= d {
                continue;
            }
            let w = self.basis.column(col);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += w[i] * w[j] * l;
                }
            }
        }
        out
    }
}

fn coefficient_matrix(psi: &StateVector) -> Result<DMatrix<C64>> {
    let space = psi.space();
    if space.n() != 2 {
        return Err(Error::InvalidArgument(format!(
            "two-particle state required, got N = {}",
            space.n()
        )));
    }
    let d = space.d();
    Ok(DMatrix::from_fn(d, d, |i, j| psi.amplitudes()[i * d + j]))
}

/// Schmidt decomposition from the SVD of the coefficient matrix.
pub fn schmidt(psi: &StateVector) -> Result<SchmidtDecomposition> {
    let m = coefficient_matrix(psi)?;
    let d = m.nrows();
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let coefficients = order.iter().map(|&i| svd.singular_values[i]).collect();
    let left_basis = DMatrix::from_fn(d, d, |r, c| u[(r, order[c])]);
    // M = Σ σ u vᵗ with vᵗ the rows of V†, so |v_n⟩ is the n-th row of V†.
    let right_basis = DMatrix::from_fn(d, d, |r, c| v_t[(order[c], r)]);
    Ok(SchmidtDecomposition { coefficients, left_basis, right_basis })
}

/// Unit vector in the top eigenspace of `M M†`, preferring the lowest mode index.
fn leading_vector(m: &DMatrix<C64>) -> (f64, DVector<C64>) {
    let h = m * m.adjoint();
    let (vals, vecs) = eigh_desc(&h);
    let top = vals[0];
    let width = vals
        .iter()
        .take_while(|&&l| top - l <= DEGENERACY_TOL * top.max(f64::MIN_POSITIVE))
        .count();
    let space = vecs.columns(0, width);
    let d = m.nrows();
    let mut best = vecs.column(0).into_owned();
    for i in 0..d {
        // Weight of e_i inside the degenerate eigenspace.
        let coords = space.row(i).adjoint();
        let proj = &space * coords;
        if proj.norm() > 1e-3 {
            best = proj.unscale(proj.norm());
            break;
        }
    }
    (top.max(0.0).sqrt(), best)
}

fn check_symmetry(m: &DMatrix<C64>, skew: bool) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let t = m.transpose();
    let deviation = if skew { (m + &t).norm() } else { (m - &t).norm() };
    if deviation > TOL_SYMMETRY {
        return Err(Error::NotSymmetric {
            kind: if skew { "skew-symmetric" } else { "symmetric" },
            deviation,
        });
    }
    Ok(())
}

fn scale_cutoff(m: &DMatrix<C64>) -> f64 {
    1e-13 * m.norm().max(1e-300)
}

/// Takagi factorization `M = U diag(κ′) Uᵀ` of a complex symmetric matrix.
pub fn takagi_symmetric(m: &DMatrix<C64>) -> Result<Takagi> {
    check_symmetry(m, false)?;
    let d = m.nrows();
    let cutoff = scale_cutoff(m);
    let mut rest = (m + m.transpose()).unscale(2.0);
    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(d);
    let mut coefficients = Vec::with_capacity(d);
    while columns.len() < d {
        let (sigma, u) = leading_vector(&rest);
        if sigma <= cutoff {
            break;
        }
        let v = (&rest * u.conjugate()).unscale(sigma);
        let plus = &u + &v;
        let minus = &u - &v;
        let w = if plus.norm() >= minus.norm() {
            plus.unscale(plus.norm())
        } else {
            let n = minus.norm();
            (minus * C64::new(0.0, 1.0)).unscale(n)
        };
        let w = match orthonormal_remainder(&columns, &w, 1e-6) {
            Some(w) => w,
            None => break,
        };
        let kappa = w.dotc(&(&rest * w.conjugate())).re.max(0.0);
        rest -= (&w * w.transpose()) * C64::new(kappa, 0.0);
        columns.push(w);
        coefficients.push(kappa);
    }
    coefficients.resize(d, 0.0);
    let columns = complete_basis(columns, d);
    Ok(Takagi { unitary: columns_to_matrix(&columns, d), coefficients })
}

/// Skew Takagi (Youla) factorization `M = U D Uᵀ` with `D = ⊕ κ_j [[0, 1], [−1, 0]]`
/// and a trailing `[0]` block when `d` is odd.
pub fn takagi_skew(m: &DMatrix<C64>) -> Result<Takagi> {
    check_symmetry(m, true)?;
    let d = m.nrows();
    let cutoff = scale_cutoff(m);
    let mut rest = (m - m.transpose()).unscale(2.0);
    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(d);
    let mut coefficients = Vec::with_capacity(d / 2);
    while coefficients.len() < d / 2 {
        let (_, w1) = leading_vector(&rest);
        let image = &rest * w1.conjugate();
        let kappa = image.norm();
        if kappa <= cutoff {
            break;
        }
        let w2 = image.unscale(-kappa);
        let Some(w1) = orthonormal_remainder(&columns, &w1, 1e-6) else { break };
        columns.push(w1);
        let Some(w2) = orthonormal_remainder(&columns, &w2, 1e-6) else {
            columns.pop();
            break;
        };
        let (a, b) = (&columns[columns.len() - 1], &w2);
        // κ = a† M b̄ for M = κ(a bᵀ − b aᵀ).
        let kappa = a.dotc(&(&rest * b.conjugate())).re.max(0.0);
        rest -= (a * b.transpose() - b * a.transpose()) * C64::new(kappa, 0.0);
        columns.push(w2);
        coefficients.push(kappa);
    }
    coefficients.resize(d / 2, 0.0);
    let columns = complete_basis(columns, d);
    Ok(Takagi { unitary: columns_to_matrix(&columns, d), coefficients })
}

/// Slater decomposition of an antisymmetric two-particle state.
pub fn slater_fermion(f: &StateVector) -> Result<FermionSlater> {
    let m = coefficient_matrix(f)?;
    let deviation = (&m + m.transpose()).norm();
    if deviation > TOL_SYMMETRY {
        return Err(Error::WrongSector { sector: "antisymmetric", deviation });
    }
    let t = takagi_skew(&m)?;
    Ok(FermionSlater { coefficients: t.coefficients, basis: t.unitary })
}

/// Slater decomposition of a symmetric two-particle state.
pub fn slater_boson(b: &StateVector) -> Result<BosonSlater> {
    let m = coefficient_matrix(b)?;
    let deviation = (&m - m.transpose()).norm();
    if deviation > TOL_SYMMETRY {
        return Err(Error::WrongSector { sector: "symmetric", deviation });
    }
    let t = takagi_symmetric(&m)?;
    Ok(BosonSlater { coefficients: t.coefficients, basis: t.unitary })
}

/// Decomposes `Π⁺|a₁, a₂⟩` into two Takagi terms.
pub fn boson_product_decompose(
    a1: &DVector<C64>,
    a2: &DVector<C64>,
) -> Result<BosonProductDecomposition> {
    if a1.len() != a2.len() {
        return Err(Error::DimensionMismatch { expected: a1.len(), got: a2.len() });
    }
    if a1.norm() == 0.0 || a2.norm() == 0.0 {
        return Err(Error::InvalidArgument("zero single-particle vector".into()));
    }
    let m = (a1 * a2.transpose() + a2 * a1.transpose()).unscale(2.0);
    let t = takagi_symmetric(&m)?;
    let lambda1 = t.coefficients[0];
    let lambda2 = t.coefficients.get(1).copied().unwrap_or(0.0);
    let w1 = t.unitary.column(0).into_owned();
    let w2 = if t.unitary.ncols() > 1 {
        t.unitary.column(1).into_owned()
    } else {
        DVector::zeros(a1.len())
    };
    let i_l2 = C64::new(0.0, lambda2.sqrt());
    let p = &w1 * C64::new(lambda1.sqrt(), 0.0) + &w2 * i_l2;
    let q = &w1 * C64::new(lambda1.sqrt(), 0.0) - &w2 * i_l2;
    Ok(BosonProductDecomposition { basis: t.unitary, lambda1, lambda2, party_vectors: [p, q] })
}

/// Number of eigenvalues above `rel_cutoff` times the largest one.
pub fn numerical_rank(rho: &DensityOperator, rel_cutoff: f64) -> Result<usize> {
    let m = rho.to_dense()?;
    let dev = hermitian_deviation(&m);
    if dev > TOL_HERM * m.norm().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let (vals, _) = eigh_desc(&m);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(vals.iter().filter(|&&l| l > rel_cutoff * top).count())
}

/// Builds a two-particle state from its coefficient matrix.
pub fn state_from_coefficients(m: &DMatrix<C64>) -> Result<StateVector> {
    let d = m.nrows();
    let space = SpaceConfig::new(d, 2)?;
    StateVector::new(space, DVector::from_fn(d * d, |k, _| m[(k / d, k % d)]))
}
