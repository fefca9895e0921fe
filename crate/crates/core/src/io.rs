//! JSON files for observables and states.
//!
//! Matrices: `{"d", "N", "statistics"?, "entries": [[row, col, re, im], ...]}` with
//! duplicate entries summed. Vectors: `{"d", "N", "statistics"?, "amplitudes": [[re, im], ...]}`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigh_desc;
use crate::solver::Observable;
use crate::tensor::{hermitian_deviation, DensityOperator, SpaceConfig, StateVector, Statistics, TOL_HERM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    pub amplitudes: Vec<(f64, f64)>,
}

/// A state file holds either a pure state or a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateFile {
    Vector(VectorFile),
    Matrix(MatrixFile),
}

impl MatrixFile {
    pub fn space(&self) -> Result<SpaceConfig> {
        SpaceConfig::new(self.d, self.n)
    }

    pub fn from_matrix(space: SpaceConfig, statistics: Option<Statistics>, m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                if z.norm() > 0.0 {
                    entries.push((r, c, z.re, z.im));
                }
            }
        }
        Self { d: space.d(), n: space.n(), statistics, entries }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        let space = self.space()?;
        space.check_explicit_matrix()?;
        let dim = space.total_dim();
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, re, im) in &self.entries {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) outside a {dim}×{dim} matrix")));
            }
            m[(r, c)] += C64::new(re, im);
        }
        Ok(m)
    }

    /// Parses the matrix as an observable; low-rank matrices keep a factored form.
    pub fn to_observable(&self) -> Result<Observable> {
        let space = self.space()?;
        let m = self.to_matrix()?;
        let dev = hermitian_deviation(&m);
        if dev > TOL_HERM * m.norm().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        compress_observable(space, m)
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        DensityOperator::from_dense(self.space()?, self.to_matrix()?)
    }
}

/// Stores `m` as `Σ_k μ_k |u_k⟩⟨u_k|` when its rank is at most a quarter of the dimension.
fn compress_observable(space: SpaceConfig, m: DMatrix<C64>) -> Result<Observable> {
    let dim = m.nrows();
    let (vals, vecs) = eigh_desc(&m);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let keep: Vec<usize> = (0..dim).filter(|&k| vals[k].abs() > 1e-12 * scale.max(1e-300)).collect();
    if keep.len() * 4 > dim {
        return Observable::dense(space, m);
    }
    let basis = keep.iter().map(|&k| vecs.column(k).into_owned()).collect();
    let core = DMatrix::from_diagonal(&DVector::from_iterator(keep.len(), keep.iter().map(|&k| C64::new(vals[k], 0.0))));
    Observable::low_rank(space, basis, core, 0.0)
}

impl VectorFile {
    pub fn from_state(state: &StateVector, statistics: Option<Statistics>) -> Self {
        let space = state.space();
        Self {
            d: space.d(),
            n: space.n(),
            statistics,
            amplitudes: state.amplitudes().iter().map(|z| (z.re, z.im)).collect(),
        }
    }

    pub fn to_state(&self) -> Result<StateVector> {
        let space = SpaceConfig::new(self.d, self.n)?;
        let v = DVector::from_iterator(self.amplitudes.len(), self.amplitudes.iter().map(|&(re, im)| C64::new(re, im)));
        StateVector::new(space, v)
    }
}

impl StateFile {
    pub fn statistics(&self) -> Option<Statistics> {
        match self {
            StateFile::Vector(v) => v.statistics,
            StateFile::Matrix(m) => m.statistics,
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        match self {
            StateFile::Vector(v) => Ok(DensityOperator::pure(v.to_state()?)),
            StateFile::Matrix(m) => m.to_density(),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
