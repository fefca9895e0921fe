//! Dense complex tensor algebra on the `N`-fold product space `H^{⊗N}`.
//!
//! Basis states are flattened big-endian lexicographically: the multi-index
//! `(i_1, ..., i_N)` maps to `Σ_j i_j d^{N-1-j}`, so the first party is the most
//! significant digit. Every module in the crate uses this convention.
//!
//! Permutation operators act on kets as `P_σ|a_1,...,a_N⟩ = |a_σ(1),...,a_σ(N)⟩`
//! and are applied matrix-free. The (anti)symmetrization projectors are the
//! normalized signed sums over all `N!` permutations.

use std::collections::HashMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported particle number (`N! ≤ 720`).
pub const MAX_PARTIES: usize = 6;
/// Largest supported state-vector length `d^N`.
pub const DENSE_VECTOR_CAP: usize = 2_000_000;
/// Largest side length of an explicitly built operator matrix.
pub const DENSE_MATRIX_CAP: usize = 4096;
/// Hermiticity tolerance on unit-scale data.
pub const TOL_HERM: f64 = 1e-10;
/// Trace / normalization tolerance on unit-scale data.
pub const TOL_TRACE: f64 = 1e-10;

/// Single-particle dimension `d`, particle number `N` and `d^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceConfig {
    d: usize,
    n: usize,
    total_dim: usize,
}

impl SpaceConfig {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidSpace(format!("d = {d} and N = {n} must be positive")));
        }
        if n > MAX_PARTIES {
            return Err(Error::CapExceeded {
                what: "N! (permutation count)",
                value: factorial(n as u32),
                cap: factorial(MAX_PARTIES as u32),
            });
        }
        let total_dim = checked_pow(d, n).ok_or_else(|| {
            Error::InvalidSpace(format!("d^N overflows for d = {d}, N = {n}"))
        })?;
        if total_dim > DENSE_VECTOR_CAP {
            return Err(Error::CapExceeded {
                what: "d^N",
                value: total_dim as u128,
                cap: DENSE_VECTOR_CAP as u128,
            });
        }
        Ok(Self { d, n, total_dim })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Big-endian lexicographic flattening of a multi-index.
    pub fn flatten_index(&self, multi_index: &[usize]) -> Result<usize> {
        if multi_index.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: multi_index.len() });
        }
        multi_index.iter().try_fold(0usize, |acc, &i| {
            if i >= self.d {
                Err(Error::IndexOutOfRange { component: i, d: self.d })
            } else {
                Ok(acc * self.d + i)
            }
        })
    }

    pub fn unflatten_index(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.n];
        for slot in digits.iter_mut().rev() {
            *slot = index % self.d;
            index /= self.d;
        }
        digits
    }

    pub(crate) fn check_explicit_matrix(&self) -> Result<()> {
        if self.total_dim > DENSE_MATRIX_CAP {
            return Err(Error::CapExceeded {
                what: "explicit matrix side d^N",
                value: self.total_dim as u128,
                cap: DENSE_MATRIX_CAP as u128,
            });
        }
        Ok(())
    }
}

/// Exchange statistics, selecting the projector `𝕀 ∈ {1, Π⁺, Π⁻}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Distinguishable,
    Boson,
    Fermion,
}

impl Statistics {
    pub const ALL: [Statistics; 3] =
        [Statistics::Distinguishable, Statistics::Boson, Statistics::Fermion];

    /// `ν(𝕀)`: `1` for distinguishable particles, `N!` otherwise.
    pub fn norm_factor(&self, n: usize) -> f64 {
        match self {
            Statistics::Distinguishable => 1.0,
            _ => factorial(n as u32) as f64,
        }
    }

    fn sign(&self, parity: u8) -> f64 {
        match self {
            Statistics::Fermion if parity % 2 == 1 => -1.0,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Statistics::Distinguishable => "distinguishable",
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
        }
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distinguishable" | "dp" | "d" => Ok(Statistics::Distinguishable),
            "boson" | "bosons" | "b" => Ok(Statistics::Boson),
            "fermion" | "fermions" | "f" => Ok(Statistics::Fermion),
            other => Err(Error::InvalidArgument(format!("unknown statistics '{other}'"))),
        }
    }
}

impl std::fmt::Display for Statistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A bijection on `{0, ..., N-1}` together with its parity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
    parity: u8,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::InvalidArgument(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        let parity = cycle_parity(&mapping);
        Ok(Self { mapping, parity })
    }

    /// Builds from the 1-based notation `σ = (σ(1), ..., σ(N))`.
    pub fn from_one_based(mapping: &[usize]) -> Result<Self> {
        if mapping.contains(&0) {
            return Err(Error::InvalidArgument("1-based permutation contains 0".into()));
        }
        Self::new(mapping.iter().map(|&m| m - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { mapping: (0..n).collect(), parity: 0 }
    }

    /// All `N!` permutations in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        (0..n)
            .permutations(n)
            .map(|mapping| {
                let parity = cycle_parity(&mapping);
                Permutation { mapping, parity }
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn parity(&self) -> u8 {
        self.parity
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.mapping.len()];
        for (k, &m) in self.mapping.iter().enumerate() {
            inv[m] = k;
        }
        Permutation { mapping: inv, parity: self.parity }
    }

    /// Strides such that `P_σ|a⟩` lands at `Σ_j a_j · stride[j]`.
    fn scatter_strides(&self, d: usize) -> Vec<usize> {
        let n = self.mapping.len();
        let inv = self.inverse();
        (0..n).map(|j| d.pow((n - 1 - inv.mapping[j]) as u32)).collect()
    }
}

fn cycle_parity(mapping: &[usize]) -> u8 {
    let mut visited = vec![false; mapping.len()];
    let mut transpositions = 0usize;
    for start in 0..mapping.len() {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !visited[k] {
            visited[k] = true;
            k = mapping[k];
            len += 1;
        }
        transpositions += len - 1;
    }
    (transpositions % 2) as u8
}

/// The symmetric group on `N` slots, with scatter strides cached for one `d`.
#[derive(Debug, Clone)]
pub(crate) struct PermutationTable {
    d: usize,
    n: usize,
    strides: Vec<Vec<usize>>,
    parities: Vec<u8>,
    /// `lookup[k * d^N + i]` is the image of basis index `i` under permutation `k`.
    lookup: Option<(usize, Vec<u32>)>,
}

/// Largest `N! · d^N` for which [`PermutationTable::with_lookup`] tabulates images.
const LOOKUP_CAP: usize = 1 << 24;

impl PermutationTable {
    pub(crate) fn new(d: usize, n: usize) -> Self {
        let perms = Permutation::all(n);
        Self {
            d,
            n,
            strides: perms.iter().map(|p| p.scatter_strides(d)).collect(),
            parities: perms.iter().map(|p| p.parity).collect(),
            lookup: None,
        }
    }

    /// Like [`PermutationTable::new`], but tabulates every image when the table
    /// stays below `LOOKUP_CAP` entries, trading memory for repeated sparse scatters.
    pub(crate) fn with_lookup(d: usize, n: usize) -> Self {
        let mut table = Self::new(d, n);
        let dim = d.pow(n as u32);
        if table.len() * dim <= LOOKUP_CAP {
            let mut lookup = Vec::with_capacity(table.len() * dim);
            for k in 0..table.len() {
                let strides = &table.strides[k];
                let mut digits = vec![0usize; n];
                let mut target = 0usize;
                for _ in 0..dim {
                    lookup.push(target as u32);
                    let mut slot = n;
                    while slot > 0 {
                        slot -= 1;
                        digits[slot] += 1;
                        target += strides[slot];
                        if digits[slot] < d {
                            break;
                        }
                        target -= strides[slot] * d;
                        digits[slot] = 0;
                    }
                }
            }
            table.lookup = Some((dim, lookup));
        }
        table
    }

    pub(crate) fn len(&self) -> usize {
        self.strides.len()
    }

    /// Target index of basis state `index` under permutation `k`.
    #[inline]
    pub(crate) fn scatter_index(&self, k: usize, mut index: usize) -> usize {
        if let Some((dim, lookup)) = &self.lookup {
            return lookup[k * dim + index] as usize;
        }
        let strides = &self.strides[k];
        let mut out = 0;
        for slot in (0..self.n).rev() {
            out += (index % self.d) * strides[slot];
            index /= self.d;
        }
        out
    }

    /// Accumulates `coeff · P_k v` into `out`.
    fn scatter_dense(&self, k: usize, coeff: C64, v: &[C64], out: &mut [C64]) {
        let strides = &self.strides[k];
        let n = self.n;
        let d = self.d;
        let mut digits = vec![0usize; n];
        let mut target = 0usize;
        for &amp in v.iter() {
            out[target] += coeff * amp;
            let mut slot = n;
            while slot > 0 {
                slot -= 1;
                digits[slot] += 1;
                target += strides[slot];
                if digits[slot] < d {
                    break;
                }
                target -= strides[slot] * d;
                digits[slot] = 0;
            }
        }
    }

    pub(crate) fn project_slice(&self, stats: Statistics, v: &[C64]) -> Vec<C64> {
        if stats == Statistics::Distinguishable {
            return v.to_vec();
        }
        let norm = 1.0 / self.len() as f64;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for k in 0..self.len() {
            let coeff = C64::new(stats.sign(self.parities[k]) * norm, 0.0);
            self.scatter_dense(k, coeff, v, &mut out);
        }
        out
    }

    /// Accumulates `𝕀 v` for a sparse `v` into the dense buffer `out`.
    pub(crate) fn project_sparse_into(&self, stats: Statistics, entries: &[(usize, C64)], out: &mut [C64]) {
        let norm = 1.0 / self.len() as f64;
        for k in 0..self.len() {
            let sign = stats.sign(self.parities[k]) * norm;
            for &(idx, c) in entries {
                out[self.scatter_index(k, idx)] += c * sign;
            }
        }
    }

    /// Zeroes every entry that `project_sparse_into` may have written.
    pub(crate) fn clear_sparse(&self, entries: &[(usize, C64)], out: &mut [C64]) {
        for k in 0..self.len() {
            for &(idx, _) in entries {
                out[self.scatter_index(k, idx)] = C64::new(0.0, 0.0);
            }
        }
    }

    /// Projects a sparse vector, returning the touched entries in index order.
    pub(crate) fn project_sparse(
        &self,
        stats: Statistics,
        entries: &[(usize, C64)],
    ) -> Vec<(usize, C64)> {
        if stats == Statistics::Distinguishable {
            return entries.to_vec();
        }
        let norm = 1.0 / self.len() as f64;
        let mut acc: HashMap<usize, C64> = HashMap::with_capacity(entries.len() * self.len());
        for k in 0..self.len() {
            let sign = stats.sign(self.parities[k]) * norm;
            for &(idx, c) in entries {
                *acc.entry(self.scatter_index(k, idx)).or_default() += c * sign;
            }
        }
        let mut out: Vec<(usize, C64)> = acc.into_iter().collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }
}

/// A (possibly unnormalized) vector in `H^{⊗N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: SpaceConfig,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(space: SpaceConfig, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim,
                got: amplitudes.len(),
            });
        }
        Ok(Self { space, amplitudes })
    }

    pub fn zeros(space: SpaceConfig) -> Self {
        Self { space, amplitudes: DVector::zeros(space.total_dim) }
    }

    /// The computational basis ket `|i_1, ..., i_N⟩`.
    pub fn basis(space: SpaceConfig, multi_index: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(space);
        v.amplitudes[space.flatten_index(multi_index)?] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// `|a_1⟩ ⊗ ... ⊗ |a_N⟩` from single-particle vectors.
    pub fn product(space: SpaceConfig, factors: &[DVector<C64>]) -> Result<Self> {
        if factors.len() != space.n {
            return Err(Error::DimensionMismatch { expected: space.n, got: factors.len() });
        }
        for f in factors {
            if f.len() != space.d {
                return Err(Error::DimensionMismatch { expected: space.d, got: f.len() });
            }
        }
        Self::new(space, kron_vectors(factors))
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroProjection);
        }
        Ok(Self { space: self.space, amplitudes: self.amplitudes.unscale(norm) })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Kronecker product of vectors, first factor most significant.
pub fn kron_vectors(factors: &[DVector<C64>]) -> DVector<C64> {
    let mut out = DVector::from_element(1, C64::new(1.0, 0.0));
    for f in factors {
        let mut next = DVector::zeros(out.len() * f.len());
        for (i, a) in out.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                next[i * f.len() + j] = a * b;
            }
        }
        out = next;
    }
    out
}

/// Storage of a density operator.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityRepr {
    Dense(DMatrix<C64>),
    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|` with nonnegative weights.
    Mixture(Vec<(f64, DVector<C64>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    space: SpaceConfig,
    repr: DensityRepr,
}

impl DensityOperator {
    pub fn from_dense(space: SpaceConfig, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.total_dim || matrix.ncols() != space.total_dim {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let asym = hermitian_deviation(&matrix);
        if asym > TOL_HERM * matrix.norm().max(1.0) {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self { space, repr: DensityRepr::Dense(matrix) })
    }

    pub fn from_mixture(space: SpaceConfig, terms: Vec<(f64, StateVector)>) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (w, v) in terms {
            if !(w >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative mixture weight {w}")));
            }
            if v.space != space {
                return Err(Error::DimensionMismatch {
                    expected: space.total_dim,
                    got: v.space.total_dim,
                });
            }
            out.push((w, v.amplitudes));
        }
        Ok(Self { space, repr: DensityRepr::Mixture(out) })
    }

    pub fn pure(state: StateVector) -> Self {
        Self { space: state.space, repr: DensityRepr::Mixture(vec![(1.0, state.amplitudes)]) }
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn repr(&self) -> &DensityRepr {
        &self.repr
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            DensityRepr::Dense(m) => m.trace().re,
            DensityRepr::Mixture(terms) => terms.iter().map(|(w, v)| w * v.norm_squared()).sum(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= TOL_TRACE
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        match &self.repr {
            DensityRepr::Dense(m) => Ok(m.clone()),
            DensityRepr::Mixture(terms) => {
                self.space.check_explicit_matrix()?;
                let dim = self.space.total_dim;
                let mut m = DMatrix::zeros(dim, dim);
                for (w, v) in terms {
                    m.gerc(C64::new(*w, 0.0), v, v, C64::new(1.0, 0.0));
                }
                Ok(m)
            }
        }
    }
}

/// Max entry of `|M − M†|`.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Applies `P_σ` to `v` without forming a matrix.
pub fn apply_permutation(sigma: &Permutation, v: &StateVector) -> Result<StateVector> {
    let space = v.space;
    if sigma.len() != space.n {
        return Err(Error::DimensionMismatch { expected: space.n, got: sigma.len() });
    }
    let table = PermutationTable {
        d: space.d,
        n: space.n,
        strides: vec![sigma.scatter_strides(space.d)],
        parities: vec![sigma.parity],
        lookup: None,
    };
    let mut out = vec![C64::new(0.0, 0.0); space.total_dim];
    table.scatter_dense(0, C64::new(1.0, 0.0), v.amplitudes.as_slice(), &mut out);
    StateVector::new(space, DVector::from_vec(out))
}

/// `𝕀|v⟩` with `𝕀 = (1/N!) Σ_σ (±1)^{|σ|} P_σ`, or `v` itself for distinguishable particles.
pub fn project(stats: Statistics, v: &StateVector) -> StateVector {
    if stats == Statistics::Distinguishable {
        return v.clone();
    }
    let table = PermutationTable::new(v.space.d, v.space.n);
    let out = table.project_slice(stats, v.amplitudes.as_slice());
    StateVector { space: v.space, amplitudes: DVector::from_vec(out) }
}

/// Explicit matrix of `𝕀` (only for `d^N ≤ 4096`).
pub fn projector_matrix(stats: Statistics, space: SpaceConfig) -> Result<DMatrix<C64>> {
    space.check_explicit_matrix()?;
    let dim = space.total_dim;
    if stats == Statistics::Distinguishable {
        return Ok(DMatrix::identity(dim, dim));
    }
    let table = PermutationTable::new(space.d, space.n);
    let norm = 1.0 / table.len() as f64;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        for k in 0..table.len() {
            let row = table.scatter_index(k, col);
            m[(row, col)] += C64::new(stats.sign(table.parities[k]) * norm, 0.0);
        }
    }
    Ok(m)
}

/// `X^{(sym)} = (1/N!) Σ_σ Y_σ(1) ⊗ ... ⊗ Y_σ(N)` for Hermitian factors.
pub fn symmetrize_operator(factors: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
    let n = factors.len();
    let d = factors
        .first()
        .map(|f| f.nrows())
        .ok_or_else(|| Error::InvalidArgument("no factors".into()))?;
    let space = SpaceConfig::new(d, n)?;
    space.check_explicit_matrix()?;
    for f in factors {
        if f.nrows() != d || f.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: f.nrows().max(f.ncols()) });
        }
        let dev = hermitian_deviation(f);
        if dev > TOL_HERM {
            return Err(Error::NotHermitian(dev));
        }
    }
    let perms = Permutation::all(n);
    let dim = space.total_dim;
    let mut out = DMatrix::zeros(dim, dim);
    for p in &perms {
        let mut term = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for &k in p.mapping() {
            term = term.kronecker(&factors[k]);
        }
        out += term;
    }
    Ok(out.unscale(perms.len() as f64))
}

/// Traces out the first tensor factor.
pub fn partial_trace_first(rho: &DensityOperator) -> Result<DensityOperator> {
    let space = rho.space;
    if space.n < 2 {
        return Err(Error::InvalidArgument("partial trace needs N ≥ 2".into()));
    }
    let reduced = SpaceConfig::new(space.d, space.n - 1)?;
    let rest = reduced.total_dim;
    let mut out = DMatrix::<C64>::zeros(rest, rest);
    match &rho.repr {
        DensityRepr::Dense(m) => {
            for a in 0..space.d {
                out += m.view((a * rest, a * rest), (rest, rest));
            }
        }
        DensityRepr::Mixture(terms) => {
            reduced.check_explicit_matrix()?;
            for (w, v) in terms {
                for a in 0..space.d {
                    let slice = v.rows(a * rest, rest);
                    out.gerc(C64::new(*w, 0.0), &slice, &slice, C64::new(1.0, 0.0));
                }
            }
        }
    }
    Ok(DensityOperator { space: reduced, repr: DensityRepr::Dense(out) })
}

/// `tr 𝕀`: `d^N`, `C(d+N−1, N)` or `C(d, N)`.
pub fn subspace_dimension(stats: Statistics, space: SpaceConfig) -> usize {
    let (d, n) = (space.d as u128, space.n as u128);
    match stats {
        Statistics::Distinguishable => space.total_dim,
        Statistics::Boson => binomial(d + n - 1, n) as usize,
        Statistics::Fermion => binomial(d, n) as usize,
    }
}

/// Orthonormal basis of the range of `𝕀` on `(C^d)^{⊗n}` as sparse vectors.
///
/// Ordered by the sorted occupation labels in lexicographic order.
pub(crate) fn sector_basis(stats: Statistics, d: usize, n: usize) -> Vec<Vec<(usize, C64)>> {
    let space_dim = d.pow(n as u32);
    if stats == Statistics::Distinguishable {
        return (0..space_dim).map(|i| vec![(i, C64::new(1.0, 0.0))]).collect();
    }
    let table = PermutationTable::new(d, n);
    let labels: Vec<Vec<usize>> = match stats {
        Statistics::Boson => (0..d).combinations_with_replacement(n).collect(),
        _ => (0..d).combinations(n).collect(),
    };
    labels
        .into_iter()
        .map(|multi| {
            let idx = multi.iter().fold(0, |acc, &i| acc * d + i);
            let projected = table.project_sparse(stats, &[(idx, C64::new(1.0, 0.0))]);
            let norm = projected.iter().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt();
            projected
                .into_iter()
                .filter(|e| e.1.norm() > 0.0)
                .map(|(i, c)| (i, c / norm))
                .collect()
        })
        .collect()
}

pub(crate) fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}
