//! Independent checks: sampled lower bounds, explicit contractions, covariance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::observable::{LinearOperator, Prepared};
use super::sweep::{contract_except, Context};
use super::{SEProblem, SESolution};
use crate::error::{Error, Result};
use crate::linalg::{apply_local, complex_gaussian, unitarity_deviation};
use crate::tensor::{kron_vectors, sector_basis, PermutationTable, StateVector, Statistics};

const CHUNK: usize = 1024;

/// Dense complex Gaussian with probability 1/2; otherwise Gaussian on a random
/// support of size `1 + Geom(1/2)` (capped at `dim`).
fn random_party_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<C64> {
    if rng.random_bool(0.5) {
        return complex_gaussian(rng, dim).normalize();
    }
    let mut size = 1;
    while size < dim && rng.random_bool(0.5) {
        size += 1;
    }
    let values = complex_gaussian(rng, size);
    let mut v = DVector::zeros(dim);
    for (slot, i) in sample(rng, dim, size).into_iter().enumerate() {
        v[i] = values[slot];
    }
    v.normalize()
}

/// Max of the Rayleigh quotient over `samples` random product vectors.
///
/// Party vectors mix dense Gaussian draws with sparse ones, which reach the
/// low-support optima of structured observables far more often. A lower bound on
/// `sup{g}` by construction. Chunk `c` of 1024 samples draws from
/// ChaCha8 seeded with `seed` on stream `c`, so the value is schedule independent.
pub fn brute_force_bound(problem: &SEProblem, samples: usize, seed: u64) -> f64 {
    let space = problem.space();
    let stats = problem.stats();
    let table = PermutationTable::with_lookup(space.d(), space.n());
    let prepared = problem.observable().prepare(stats, &table);
    let sector = match stats {
        Statistics::Distinguishable => None,
        _ => Some(sector_basis(stats, space.d(), space.n())),
    };
    let sparse_basis: Option<Vec<Vec<(usize, C64)>>> = match &prepared {
        Prepared::LowRank { projected_basis, .. } => Some(
            projected_basis
                .iter()
                .map(|r| r.iter().enumerate().filter(|(_, c)| c.norm() > 0.0).map(|(i, c)| (i, *c)).collect())
                .collect(),
        ),
        Prepared::Dense(_) => None,
    };
    let dims = problem.party_dims();
    let chunks = samples.div_ceil(CHUNK);

    let quotient = |prod: &DVector<C64>| -> Option<f64> {
        let lookup = |s: &[(usize, C64)]| -> C64 { s.iter().map(|&(i, c)| c.conj() * prod[i]).sum() };
        let pn2 = match &sector {
            Some(basis) => basis.iter().map(|e| lookup(e).norm_sqr()).sum::<f64>(),
            None => prod.norm_squared(),
        };
        if pn2 < 1e-16 {
            return None;
        }
        let num = match (&prepared, &sparse_basis) {
            (Prepared::LowRank { core, shift, .. }, Some(sb)) => {
                let y = DVector::from_iterator(sb.len(), sb.iter().map(|s| lookup(s)));
                y.dotc(&(core * &y)).re + shift * pn2
            }
            (Prepared::Dense(lp), _) => prod.dotc(&(lp * prod)).re,
            _ => unreachable!("low-rank observables carry a sparse basis"),
        };
        Some(num / pn2)
    };

    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut best = f64::NEG_INFINITY;
            for _ in 0..count {
                let b: Vec<DVector<C64>> = dims.iter().map(|&dim| random_party_vector(&mut rng, dim)).collect();
                if let Some(q) = quotient(&kron_vectors(&b)) {
                    best = best.max(q);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `X_{b̄_j}` with `⟨x|X_{b̄_j}|y⟩ = ⟨b_1, ..., x, ..., b_K|X|b_1, ..., y, ..., b_K⟩`.
pub fn contracted_operator<X: LinearOperator + ?Sized>(
    x: &X,
    party_vectors: &[DVector<C64>],
    j: usize,
) -> Result<DMatrix<C64>> {
    if j >= party_vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "party index {j} out of range for {} parties",
            party_vectors.len()
        )));
    }
    let total: usize = party_vectors.iter().map(|v| v.len()).product();
    if total != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: total });
    }
    let m = party_vectors[j].len();
    let mut parts = party_vectors.to_vec();
    let mut out = DMatrix::zeros(m, m);
    for l in 0..m {
        let mut e = DVector::zeros(m);
        e[l] = C64::new(1.0, 0.0);
        parts[j] = e;
        let col = contract_except(&x.apply(&kron_vectors(&parts)), party_vectors, j);
        out.set_column(l, &col);
    }
    Ok(out)
}

/// Maps a solution of `L` to one of `L′ = [U^{⊗N}]† (λ₁ L + λ₂ 1) [U^{⊗N}]`.
///
/// `g′ = λ₁ g + λ₂` and each party vector becomes `(U†)^{⊗N_k} |b_k⟩`.
pub fn transform_solution(sol: &SESolution, lambda1: f64, lambda2: f64, u: &DMatrix<C64>) -> Result<SESolution> {
    if lambda1 == 0.0 {
        return Err(Error::InvalidArgument("lambda1 must be nonzero".into()));
    }
    let space = sol.projected_vector.space();
    if u.nrows() != space.d() || u.ncols() != space.d() {
        return Err(Error::DimensionMismatch { expected: space.d(), got: u.nrows() });
    }
    let dev = unitarity_deviation(u);
    if dev > 1e-8 {
        return Err(Error::InvalidArgument(format!("U is not unitary (deviation {dev:e})")));
    }
    let u_dag = u.adjoint();
    let party_vectors = sol
        .party_vectors
        .iter()
        .zip(sol.partition.parts())
        .map(|(b, &nk)| apply_local(&u_dag, nk, b))
        .collect();
    let projected = apply_local(&u_dag, space.n(), sol.projected_vector.amplitudes());
    Ok(SESolution {
        g: lambda1 * sol.g + lambda2,
        partition: sol.partition.clone(),
        party_vectors,
        projected_vector: StateVector::new(space, projected)?,
        residual: sol.residual * lambda1.abs(),
        chi_norm: sol.chi_norm * lambda1.abs(),
        converged: sol.converged,
        sweeps: sol.sweeps,
    })
}

/// Second-form diagnostics of a solution.
#[derive(Debug, Clone)]
pub struct SecondFormCheck {
    /// `|χ⟩ = 𝕀L𝕀|b_1, ..., b_K⟩ − g 𝕀|b_1, ..., b_K⟩`.
    pub chi: StateVector,
    /// `max_j max_x |⟨b_1, ..., x, ..., b_K|χ⟩|` over the standard basis of party `j`.
    pub max_overlap: f64,
    /// `‖𝕀χ − χ‖`.
    pub sector_deviation: f64,
}

/// Recomputes `χ` from the solution's own `g` and tests its orthogonality to
/// every single-party variation.
pub fn verify_second_form(sol: &SESolution, problem: &SEProblem) -> Result<SecondFormCheck> {
    let dims = problem.party_dims();
    if sol.party_vectors.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), got: sol.party_vectors.len() });
    }
    for (v, &dim) in sol.party_vectors.iter().zip(&dims) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
    }
    let ctx = Context::new(problem);
    let (projected, z) = ctx.images(&sol.party_vectors);
    let chi = z - projected * C64::new(sol.g, 0.0);
    let max_overlap = (0..dims.len())
        .map(|j| contract_except(&chi, &sol.party_vectors, j).iter().map(|c| c.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let sector_deviation = (ctx.project(&chi) - &chi).norm();
    Ok(SecondFormCheck { chi: StateVector::new(problem.space(), chi)?, max_overlap, sector_deviation })
}
