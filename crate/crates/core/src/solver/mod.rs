//! Separability-eigenvalue equations: numeric sweeps, closed forms and a sampling oracle.

mod analytic;
mod observable;
mod oracle;
mod partition;
mod sweep;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::{subspace_dimension, SpaceConfig, StateVector, Statistics, TOL_HERM};

pub use analytic::{analytic_interference, analytic_rank_one, analytic_rank_one_bound, InterferenceSolutions};
pub use observable::{projected_matrix, LinearOperator, Observable, ObservableKind, Projector};
pub use oracle::{brute_force_bound, contracted_operator, transform_solution, verify_second_form, SecondFormCheck};
pub use partition::Partition;
pub use sweep::{
    evaluate_solution, solve_extremal, solve_sup_g, solve_sup_g_for_k, sweep_solve, SupResult,
};

/// An SEvalue problem: observable, exchange statistics and partition.
#[derive(Debug, Clone)]
pub struct SEProblem {
    observable: Observable,
    stats: Statistics,
    partition: Partition,
}

impl SEProblem {
    pub fn new(observable: Observable, stats: Statistics, partition: Partition) -> Result<Self> {
        let space = observable.space();
        if partition.total() != space.n() {
            return Err(Error::InvalidArgument(format!(
                "partition {partition} does not sum to N = {}",
                space.n()
            )));
        }
        let dev = observable.hermitian_deviation();
        if dev > TOL_HERM {
            return Err(Error::NotHermitian(dev));
        }
        if subspace_dimension(stats, space) == 0 {
            return Err(Error::ZeroProjection);
        }
        Ok(Self { observable, stats, partition })
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn space(&self) -> SpaceConfig {
        self.observable.space()
    }

    /// `d^{N_k}` for every party.
    pub fn party_dims(&self) -> Vec<usize> {
        let d = self.space().d();
        self.partition.parts().iter().map(|&p| d.pow(p as u32)).collect()
    }
}

/// One solution `(g, |b_1⟩, ..., |b_K⟩)` with diagnostics.
#[derive(Debug, Clone)]
pub struct SESolution {
    pub g: f64,
    pub partition: Partition,
    /// Unit-norm party vectors.
    pub party_vectors: Vec<DVector<C64>>,
    /// `𝕀|b_1, ..., b_K⟩`.
    pub projected_vector: StateVector,
    /// `max_j ‖(𝕀L𝕀)_{b̄_j}|b_j⟩ − g(𝕀)_{b̄_j}|b_j⟩‖ / ‖(𝕀)_{b̄_j}|b_j⟩‖`.
    pub residual: f64,
    /// `‖𝕀(L − g)𝕀|b_1, ..., b_K⟩‖`.
    pub chi_norm: f64,
    pub converged: bool,
    pub sweeps: usize,
}

/// Which end of the spectrum the sweep climbs towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub max_sweeps: usize,
    /// Relative change of `g` between sweeps.
    pub tol_g: f64,
    pub tol_residual: f64,
    pub mode: Mode,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { max_sweeps: 500, tol_g: 1e-11, tol_residual: 1e-9, mode: Mode::Max }
    }
}

pub const DEFAULT_STARTS: usize = 64;
