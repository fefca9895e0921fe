//! Closed-form SEvalues for the rank-one and interference observables.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::{evaluate_solution, Observable, Partition, SEProblem, SESolution};
use crate::decomp::{schmidt, slater_boson, slater_fermion};
use crate::error::{Error, Result};
use crate::tensor::{project, SpaceConfig, StateVector, Statistics};

fn two_particle(psi: &StateVector) -> Result<()> {
    if psi.space().n() != 2 {
        return Err(Error::InvalidArgument(format!(
            "rank-one closed forms need N = 2, got N = {}",
            psi.space().n()
        )));
    }
    Ok(())
}

/// Coefficients that determine the SEvalues of `L = 𝕀|ψ⟩⟨ψ|𝕀`: Slater `κ`
/// (fermions), Takagi `κ′` (bosons) or Schmidt `λ` (distinguishable).
fn rank_one_coefficients(f: &StateVector, stats: Statistics) -> Result<(Vec<f64>, nalgebra::DMatrix<C64>, Option<nalgebra::DMatrix<C64>>)> {
    match stats {
        Statistics::Fermion => {
            let s = slater_fermion(f)?;
            Ok((s.coefficients, s.basis, None))
        }
        Statistics::Boson => {
            let s = slater_boson(f)?;
            Ok((s.coefficients, s.basis, None))
        }
        Statistics::Distinguishable => {
            let s = schmidt(f)?;
            Ok((s.coefficients, s.left_basis, Some(s.right_basis)))
        }
    }
}

/// Every closed-form solution for `L = 𝕀|ψ⟩⟨ψ|𝕀` with `N = 2`.
///
/// Fermions: `g_n = 2κ_n²` on `|w_{2n−1}⟩ ∧ |w_{2n}⟩`. Bosons: `g_n = κ′_n²` on
/// `|w′_n⟩ ∨ |w′_n⟩` and `g_{kl} = κ′_k² + κ′_l²` on `|w⁺_{kl}⟩ ∨ |w⁻_{kl}⟩` with
/// `|w^±_{kl}⟩ = √κ′_k|w′_k⟩ ± i√κ′_l|w′_l⟩`. Distinguishable: `g_n = λ_n²` on `|u_n, v_n⟩`.
pub fn analytic_rank_one(psi: &StateVector, stats: Statistics) -> Result<Vec<SESolution>> {
    two_particle(psi)?;
    let f = project(stats, psi);
    let problem = SEProblem::new(Observable::rank_one(psi, stats), stats, Partition::full(2))?;
    let (coeffs, basis, right) = rank_one_coefficients(&f, stats)?;
    let col = |n: usize| basis.column(n).into_owned();
    let mut pairs: Vec<[DVector<C64>; 2]> = Vec::new();
    match stats {
        Statistics::Fermion => {
            for n in 0..coeffs.len() {
                pairs.push([col(2 * n), col(2 * n + 1)]);
            }
        }
        Statistics::Boson => {
            for n in 0..coeffs.len() {
                pairs.push([col(n), col(n)]);
            }
            for k in 0..coeffs.len() {
                for l in k + 1..coeffs.len() {
                    if coeffs[k] <= 0.0 || coeffs[l] <= 0.0 {
                        continue;
                    }
                    let a = col(k) * C64::new(coeffs[k].sqrt(), 0.0);
                    let b = col(l) * C64::new(0.0, coeffs[l].sqrt());
                    pairs.push([&a + &b, &a - &b]);
                }
            }
        }
        Statistics::Distinguishable => {
            let right = right.expect("Schmidt right basis");
            for n in 0..coeffs.len() {
                pairs.push([col(n), right.column(n).into_owned()]);
            }
        }
    }
    pairs.iter().map(|p| evaluate_solution(&problem, p)).collect()
}

/// `sup{g}` for `L = 𝕀|ψ⟩⟨ψ|𝕀` from the Slater/Schmidt coefficients.
pub fn analytic_rank_one_bound(psi: &StateVector, stats: Statistics) -> Result<f64> {
    two_particle(psi)?;
    let f = project(stats, psi);
    let (c, _, _) = rank_one_coefficients(&f, stats)?;
    let first = c.first().copied().unwrap_or(0.0);
    Ok(match stats {
        Statistics::Fermion => 2.0 * first * first,
        Statistics::Boson => first * first + c.get(1).map_or(0.0, |x| x * x),
        Statistics::Distinguishable => first * first,
    })
}

/// Closed-form solutions for the interference observable.
#[derive(Debug, Clone)]
pub struct InterferenceSolutions {
    /// `(1/2)^{K−1}`.
    pub g: f64,
    /// An optimal solution with `|b_j⟩ = (|v_j⟩ + |w_j⟩)/√2`.
    pub optimal: SESolution,
    /// `g = 0` solutions (`|b_j⟩ = |v_j⟩` for all `j`); empty when `K = 1`.
    pub trivial: Vec<SESolution>,
}

/// Closed-form SEvalues of the interference observable for one partition.
///
/// Party `j` owning slots `o_j, ..., o_j + N_j − 1` uses `|v_j⟩ = |o_j, ..., o_j + N_j − 1⟩`
/// and `|w_j⟩ = |N + o_j, ..., N + o_j + N_j − 1⟩`.
pub fn analytic_interference(
    space: SpaceConfig,
    stats: Statistics,
    partition: &Partition,
) -> Result<InterferenceSolutions> {
    let obs = Observable::interference(space, stats)?;
    let problem = SEProblem::new(obs, stats, partition.clone())?;
    let (d, n) = (space.d(), space.n());
    let mut v_parts = Vec::new();
    let mut w_parts = Vec::new();
    for (&size, &offset) in partition.parts().iter().zip(partition.offsets().iter()) {
        let local = SpaceConfig::new(d, size)?;
        let v: Vec<usize> = (offset..offset + size).collect();
        let w: Vec<usize> = v.iter().map(|i| i + n).collect();
        v_parts.push(StateVector::basis(local, &v)?.into_amplitudes());
        w_parts.push(StateVector::basis(local, &w)?.into_amplitudes());
    }
    let beta = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let optimal: Vec<DVector<C64>> =
        v_parts.iter().zip(&w_parts).map(|(v, w)| (v + w) * beta).collect();
    let optimal = evaluate_solution(&problem, &optimal)?;
    let trivial = if partition.k() >= 2 {
        vec![evaluate_solution(&problem, &v_parts)?]
    } else {
        Vec::new()
    };
    Ok(InterferenceSolutions { g: 0.5f64.powi(partition.k() as i32 - 1), optimal, trivial })
}
