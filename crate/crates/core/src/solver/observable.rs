use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::apply_local;
use crate::tensor::{
    hermitian_deviation, project, projector_matrix, PermutationTable, SpaceConfig, StateVector,
    Statistics, DENSE_MATRIX_CAP, TOL_HERM,
};

/// Anything that can act on a vector of `H^{⊗N}`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &DVector<C64>) -> DVector<C64>;
}

impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        self * v
    }
}

/// The projector `𝕀` applied matrix-free.
#[derive(Debug, Clone, Copy)]
pub struct Projector {
    pub stats: Statistics,
    pub space: SpaceConfig,
}

impl LinearOperator for Projector {
    fn dim(&self) -> usize {
        self.space.total_dim()
    }

    fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let sv = StateVector::new(self.space, v.clone()).expect("dimension checked by caller");
        project(self.stats, &sv).into_amplitudes()
    }
}

/// Where an observable came from, used to pick analytic bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    Generic,
    Identity,
    /// `L = |f⟩⟨f|` with `f = 𝕀ψ`.
    RankOne { psi: StateVector, stats: Statistics },
    /// `ν(𝕀)(|1..N⟩⟨N+1..2N| + h.c.)` in 0-based labels.
    Interference { stats: Statistics },
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(DMatrix<C64>),
    /// `Σ_ab core_ab |r_a⟩⟨r_b| + shift · 1`.
    LowRank { basis: Vec<DVector<C64>>, core: DMatrix<C64>, shift: f64 },
}

/// A Hermitian observable on `H^{⊗N}`.
#[derive(Debug, Clone)]
pub struct Observable {
    space: SpaceConfig,
    repr: Repr,
    kind: ObservableKind,
}

impl Observable {
    pub fn dense(space: SpaceConfig, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = space.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows().max(matrix.ncols()) });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > TOL_HERM * matrix.norm().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        let herm = (&matrix + matrix.adjoint()).unscale(2.0);
        Ok(Self { space, repr: Repr::Dense(herm), kind: ObservableKind::Generic })
    }

    pub fn low_rank(
        space: SpaceConfig,
        basis: Vec<DVector<C64>>,
        core: DMatrix<C64>,
        shift: f64,
    ) -> Result<Self> {
        if core.nrows() != basis.len() || core.ncols() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: core.nrows() });
        }
        if let Some(bad) = basis.iter().find(|b| b.len() != space.total_dim()) {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), got: bad.len() });
        }
        let dev = hermitian_deviation(&core);
        if dev > TOL_HERM * core.norm().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { space, repr: Repr::LowRank { basis, core, shift }, kind: ObservableKind::Generic })
    }

    pub fn identity(space: SpaceConfig) -> Self {
        Self {
            space,
            repr: Repr::LowRank { basis: Vec::new(), core: DMatrix::zeros(0, 0), shift: 1.0 },
            kind: ObservableKind::Identity,
        }
    }

    /// `L = |f⟩⟨f|` with `f = 𝕀ψ`.
    pub fn rank_one(psi: &StateVector, stats: Statistics) -> Self {
        let f = project(stats, psi).into_amplitudes();
        Self {
            space: psi.space(),
            repr: Repr::LowRank {
                basis: vec![f],
                core: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
                shift: 0.0,
            },
            kind: ObservableKind::RankOne { psi: psi.clone(), stats },
        }
    }

    /// The interference observable `ν(𝕀)(|v⟩⟨w| + |w⟩⟨v|)` with `|v⟩ = |0, ..., N−1⟩`
    /// and `|w⟩ = |N, ..., 2N−1⟩`.
    ///
    /// The `ν(𝕀)` factor makes the expectation equal `2 Re ρ_{vw}` in the normalized
    /// projected basis, so the separable bound `(1/2)^{K−1}` holds for every statistics.
    pub fn interference(space: SpaceConfig, stats: Statistics) -> Result<Self> {
        let (d, n) = (space.d(), space.n());
        if d < 2 * n {
            return Err(Error::InvalidArgument(format!(
                "interference observable needs d ≥ 2N, got d = {d}, N = {n}"
            )));
        }
        let v = StateVector::basis(space, &(0..n).collect::<Vec<_>>())?.into_amplitudes();
        let w = StateVector::basis(space, &(n..2 * n).collect::<Vec<_>>())?.into_amplitudes();
        let nu = stats.norm_factor(n);
        let core = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0),
            C64::new(nu, 0.0),
            C64::new(nu, 0.0),
            C64::new(0.0, 0.0),
        ]);
        Ok(Self {
            space,
            repr: Repr::LowRank { basis: vec![v, w], core, shift: 0.0 },
            kind: ObservableKind::Interference { stats },
        })
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn is_low_rank(&self) -> bool {
        matches!(self.repr, Repr::LowRank { .. })
    }

    pub fn hermitian_deviation(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => hermitian_deviation(m),
            Repr::LowRank { core, .. } => hermitian_deviation(core),
        }
    }

    /// `⟨v|L|v⟩`.
    pub fn quadratic_form(&self, v: &DVector<C64>) -> f64 {
        match &self.repr {
            Repr::Dense(m) => v.dotc(&(m * v)).re,
            Repr::LowRank { basis, core, shift } => {
                let coords = DVector::from_iterator(basis.len(), basis.iter().map(|r| r.dotc(v)));
                coords.dotc(&(core * &coords)).re + shift * v.norm_squared()
            }
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let dim = self.space.total_dim();
        match &self.repr {
            Repr::Dense(m) => Ok(m.clone()),
            Repr::LowRank { basis, core, shift } => {
                if dim > DENSE_MATRIX_CAP {
                    return Err(Error::CapExceeded {
                        what: "explicit matrix side d^N",
                        value: dim as u128,
                        cap: DENSE_MATRIX_CAP as u128,
                    });
                }
                let mut m = DMatrix::identity(dim, dim) * C64::new(*shift, 0.0);
                for (a, ra) in basis.iter().enumerate() {
                    for (b, rb) in basis.iter().enumerate() {
                        m.gerc(core[(a, b)], ra, rb, C64::new(1.0, 0.0));
                    }
                }
                Ok(m)
            }
        }
    }

    /// `L′ = [U^{⊗N}]† (λ₁ L + λ₂ 1) [U^{⊗N}]`.
    pub fn transformed(&self, lambda1: f64, lambda2: f64, u: &DMatrix<C64>) -> Result<Observable> {
        let (d, n) = (self.space.d(), self.space.n());
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: u.nrows() });
        }
        let u_dag = u.adjoint();
        let repr = match &self.repr {
            Repr::LowRank { basis, core, shift } => Repr::LowRank {
                basis: basis.iter().map(|r| apply_local(&u_dag, n, r)).collect(),
                core: core * C64::new(lambda1, 0.0),
                shift: lambda1 * shift + lambda2,
            },
            Repr::Dense(m) => {
                let dim = m.nrows();
                let shifted = m * C64::new(lambda1, 0.0) + DMatrix::identity(dim, dim) * C64::new(lambda2, 0.0);
                // (U†)^{⊗N} M, then right-multiply by U^{⊗N} through the transpose.
                let left = columns_apply(&shifted, |c| apply_local(&u_dag, n, c));
                let right = columns_apply(&left.transpose(), |c| apply_local(&u.transpose(), n, c));
                Repr::Dense(right.transpose())
            }
        };
        Ok(Observable { space: self.space, repr, kind: ObservableKind::Generic })
    }

    /// Precomputes `𝕀L𝕀` for the solver.
    pub(crate) fn prepare(&self, stats: Statistics, table: &PermutationTable) -> Prepared {
        match &self.repr {
            Repr::LowRank { basis, core, shift } => Prepared::LowRank {
                projected_basis: basis
                    .iter()
                    .map(|r| DVector::from_vec(table.project_slice(stats, r.as_slice())))
                    .collect(),
                core: core.clone(),
                shift: *shift,
            },
            Repr::Dense(m) => {
                let pl = columns_apply(m, |c| DVector::from_vec(table.project_slice(stats, c.as_slice())));
                let plp = columns_apply(&pl.adjoint(), |c| {
                    DVector::from_vec(table.project_slice(stats, c.as_slice()))
                });
                Prepared::Dense((&plp + plp.adjoint()).unscale(2.0))
            }
        }
    }
}

impl LinearOperator for Observable {
    fn dim(&self) -> usize {
        self.space.total_dim()
    }

    fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.repr {
            Repr::Dense(m) => m * v,
            Repr::LowRank { basis, core, shift } => {
                let coords = DVector::from_iterator(basis.len(), basis.iter().map(|r| r.dotc(v)));
                let mixed = core * coords;
                let mut out = v * C64::new(*shift, 0.0);
                for (r, c) in basis.iter().zip(mixed.iter()) {
                    out += r * *c;
                }
                out
            }
        }
    }
}

fn columns_apply(m: &DMatrix<C64>, f: impl Fn(&DVector<C64>) -> DVector<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let col = f(&m.column(j).into_owned());
        out.set_column(j, &col);
    }
    out
}

/// `𝕀L𝕀` in the form the sweep needs.
#[derive(Debug, Clone)]
pub(crate) enum Prepared {
    LowRank { projected_basis: Vec<DVector<C64>>, core: DMatrix<C64>, shift: f64 },
    Dense(DMatrix<C64>),
}

impl Prepared {
    /// `𝕀L𝕀 v` for `v` already in the range of `𝕀`.
    pub(crate) fn apply_projected(&self, v: &DVector<C64>, projected_v: &DVector<C64>) -> DVector<C64> {
        match self {
            Prepared::LowRank { projected_basis, core, shift } => {
                let coords = DVector::from_iterator(
                    projected_basis.len(),
                    projected_basis.iter().map(|r| r.dotc(v)),
                );
                let mixed = core * coords;
                let mut out = projected_v * C64::new(*shift, 0.0);
                for (r, c) in projected_basis.iter().zip(mixed.iter()) {
                    out += r * *c;
                }
                out
            }
            Prepared::Dense(m) => m * v,
        }
    }
}

/// Explicit `𝕀L𝕀` for small spaces.
pub fn projected_matrix(obs: &Observable, stats: Statistics) -> Result<DMatrix<C64>> {
    let p = projector_matrix(stats, obs.space())?;
    let l = obs.to_dense()?;
    Ok(&p * l * &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, random_hermitian, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn low_rank_apply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let space = SpaceConfig::new(3, 2).unwrap();
        let basis: Vec<_> = (0..2).map(|_| complex_gaussian(&mut rng, 9)).collect();
        let core = random_hermitian(&mut rng, 2);
        let obs = Observable::low_rank(space, basis, core, 0.3).unwrap();
        let dense = obs.to_dense().unwrap();
        let v = complex_gaussian(&mut rng, 9);
        assert!((obs.apply(&v) - &dense * &v).norm() < 1e-12);
        assert!((obs.quadratic_form(&v) - v.dotc(&(&dense * &v)).re).abs() < 1e-12);
    }

    #[test]
    fn transformed_dense_and_low_rank_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let space = SpaceConfig::new(2, 3).unwrap();
        let basis: Vec<_> = (0..3).map(|_| complex_gaussian(&mut rng, 8)).collect();
        let obs = Observable::low_rank(space, basis, random_hermitian(&mut rng, 3), -0.2).unwrap();
        let dense = Observable::dense(space, obs.to_dense().unwrap()).unwrap();
        let u = random_unitary(&mut rng, 2);
        let a = obs.transformed(1.7, -0.4, &u).unwrap().to_dense().unwrap();
        let b = dense.transformed(1.7, -0.4, &u).unwrap().to_dense().unwrap();
        assert!((a - &b).norm() < 1e-11);

        let mut uu = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for _ in 0..3 {
            uu = uu.kronecker(&u);
        }
        let expected = uu.adjoint() * (obs.to_dense().unwrap() * C64::new(1.7, 0.0)
            + DMatrix::identity(8, 8) * C64::new(-0.4, 0.0)) * &uu;
        assert!((b - expected).norm() < 1e-11);
    }

    #[test]
    fn interference_requires_enough_modes() {
        let space = SpaceConfig::new(5, 3).unwrap();
        assert!(Observable::interference(space, Statistics::Boson).is_err());
        let space = SpaceConfig::new(6, 3).unwrap();
        let obs = Observable::interference(space, Statistics::Fermion).unwrap();
        assert!(obs.hermitian_deviation() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let space = SpaceConfig::new(2, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        assert!(matches!(Observable::dense(space, m), Err(Error::NotHermitian(_))));
    }
}
