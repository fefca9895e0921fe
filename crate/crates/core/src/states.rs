//! Test-state constructors: noisy pure states, balanced two-particle families,
//! a partially separable three-particle example and dephased GHZ-type states.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigh_desc;
use crate::tensor::{project, sector_basis, subspace_dimension, DensityOperator, SpaceConfig, StateVector, Statistics};

/// Default GHZ truncation.
pub const DEFAULT_N_MAX: usize = 8;

/// `ρ = p |f⟩⟨f| + (1 − p) 𝕀 / tr 𝕀` with `f = 𝕀ψ / ‖𝕀ψ‖`.
///
/// The noise term is stored as the uniform mixture over an orthonormal sector basis.
pub fn noisy_state(psi: &StateVector, stats: Statistics, p: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
    }
    let space = psi.space();
    let f = project(stats, psi);
    if f.norm() < 1e-12 {
        return Err(Error::ZeroProjection);
    }
    let f = f.normalized()?;
    let basis = sector_basis(stats, space.d(), space.n());
    let w = (1.0 - p) / basis.len() as f64;
    let mut terms = Vec::with_capacity(basis.len() + 1);
    if p > 0.0 {
        terms.push((p, f));
    }
    if w > 0.0 {
        for e in basis {
            let mut v = DVector::zeros(space.total_dim());
            for (i, c) in e {
                v[i] = c;
            }
            terms.push((w, StateVector::new(space, v)?));
        }
    }
    DensityOperator::from_mixture(space, terms)
}

/// The maximally balanced two-particle state on `C^d`.
///
/// Distinguishable: `Σ_n d^{−1/2} |n, n⟩`. Bosons: the same vector (already symmetric).
/// Fermions: `Σ_k κ (|2k, 2k+1⟩ − |2k+1, 2k⟩)` with `κ = (2⌊d/2⌋)^{−1/2}`; an odd
/// `d` leaves the last mode unused.
pub fn fig1_state_family(d: usize, stats: Statistics) -> Result<StateVector> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("d = {d} must be at least 2")));
    }
    let space = SpaceConfig::new(d, 2)?;
    let mut v = DVector::zeros(d * d);
    match stats {
        Statistics::Distinguishable | Statistics::Boson => {
            let c = C64::new((d as f64).powf(-0.5), 0.0);
            for n in 0..d {
                v[n * d + n] = c;
            }
        }
        Statistics::Fermion => {
            let blocks = d / 2;
            let c = (2.0 * blocks as f64).powf(-0.5);
            for k in 0..blocks {
                let (a, b) = (2 * k, 2 * k + 1);
                v[a * d + b] = C64::new(c, 0.0);
                v[b * d + a] = C64::new(-c, 0.0);
            }
        }
    }
    StateVector::new(space, v)
}

/// A column of the noise-threshold figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Panel {
    /// Distinguishable particles, Schmidt rank above `r`.
    SchmidtRank(usize),
    Boson,
    Fermion,
}

impl Panel {
    pub fn stats(&self) -> Statistics {
        match self {
            Panel::SchmidtRank(_) => Statistics::Distinguishable,
            Panel::Boson => Statistics::Boson,
            Panel::Fermion => Statistics::Fermion,
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Panel::SchmidtRank(r) => write!(f, "SR>{r}"),
            Panel::Boson => f.write_str("boson"),
            Panel::Fermion => f.write_str("fermion"),
        }
    }
}

impl std::str::FromStr for Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "boson" => Ok(Panel::Boson),
            "fermion" => Ok(Panel::Fermion),
            _ => lower
                .strip_prefix("sr>")
                .and_then(|r| r.parse().ok())
                .filter(|&r: &usize| r >= 1)
                .map(Panel::SchmidtRank)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown panel '{s}'"))),
        }
    }
}

/// Bound `G`, sector dimension `D` and threshold `p*` for one panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub d: usize,
    pub panel: Panel,
    pub g: f64,
    pub dim: usize,
    /// Smallest `p` with `p + (1 − p)/D = G`; `1` when `G ≥ 1`.
    pub p_star: f64,
}

impl Threshold {
    pub fn detectable(&self) -> bool {
        self.g < 1.0
    }
}

/// Closed-form threshold of the balanced family in [`fig1_state_family`].
pub fn detection_threshold(d: usize, panel: Panel) -> Result<Threshold> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("d = {d} must be at least 2")));
    }
    let df = d as f64;
    let g = match panel {
        Panel::SchmidtRank(r) => (r.min(d) as f64) / df,
        Panel::Boson => (2.0 / df).min(1.0),
        Panel::Fermion => 1.0 / (d / 2) as f64,
    };
    let dim = subspace_dimension(panel.stats(), SpaceConfig::new(d, 2)?);
    Ok(Threshold { d, panel, g, dim, p_star: threshold_from_bound(g, dim) })
}

/// `p* = (G D − 1)/(D − 1)`, clamped to `[0, 1]`.
pub fn threshold_from_bound(g: f64, dim: usize) -> f64 {
    if g >= 1.0 || dim <= 1 {
        return 1.0;
    }
    let dd = dim as f64;
    ((g * dd - 1.0) / (dd - 1.0)).clamp(0.0, 1.0)
}

/// `|Ψ⟩ = |0⟩ ⊗ (|1, 2⟩ + |3, 4⟩)` with `d = 5`, `N = 3`; returns `(Π⁺Ψ, Π⁻Ψ)` unnormalized.
pub fn partial_separability_states() -> (StateVector, StateVector) {
    let space = SpaceConfig::new(5, 3).expect("valid space");
    let psi = StateVector::new(
        space,
        StateVector::basis(space, &[0, 1, 2]).expect("in range").into_amplitudes()
            + StateVector::basis(space, &[0, 3, 4]).expect("in range").into_amplitudes(),
    )
    .expect("same space");
    (project(Statistics::Boson, &psi), project(Statistics::Fermion, &psi))
}

/// Truncated GHZ-type family `√(1 − |q|²) Σ_{n ≤ n_max} qⁿ √ν 𝕀 |nN, ..., nN + N − 1⟩`.
///
/// The mode labels are 0-based, so term `n` occupies modes `nN..(n+1)N` and the
/// single-particle dimension is `d = N (n_max + 1)`. The truncated vector is not
/// renormalized; its squared norm is `1 − tail_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzFamily {
    pub n: usize,
    pub q: C64,
    pub stats: Statistics,
    pub n_max: usize,
}

impl GhzFamily {
    pub fn new(n: usize, q: C64, stats: Statistics, n_max: usize) -> Result<Self> {
        if !(q.norm() < 1.0) {
            return Err(Error::InvalidArgument(format!("|q| = {} must be below 1", q.norm())));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        SpaceConfig::new(n * (n_max + 1), n)?;
        Ok(Self { n, q, stats, n_max })
    }

    pub fn space(&self) -> SpaceConfig {
        SpaceConfig::new(self.n * (self.n_max + 1), self.n).expect("checked in new")
    }

    /// `|q|^{2(n_max + 1)}`, the weight discarded by the truncation.
    pub fn tail_bound(&self) -> f64 {
        self.q.norm().powi(2 * (self.n_max as i32 + 1))
    }

    /// Normalized projected product term `√ν 𝕀 |nN, ..., nN + N − 1⟩`.
    pub fn term(&self, k: usize) -> StateVector {
        let space = self.space();
        let labels: Vec<usize> = (k * self.n..(k + 1) * self.n).collect();
        let ket = StateVector::basis(space, &labels).expect("labels below d");
        let p = project(self.stats, &ket);
        let scale = self.stats.norm_factor(self.n).sqrt();
        StateVector::new(space, p.into_amplitudes() * C64::new(scale, 0.0)).expect("same space")
    }

    pub fn state(&self) -> StateVector {
        let space = self.space();
        let pre = (1.0 - self.q.norm_sqr()).sqrt();
        let mut v = DVector::zeros(space.total_dim());
        let mut coeff = C64::new(pre, 0.0);
        for k in 0..=self.n_max {
            v += self.term(k).into_amplitudes() * coeff;
            coeff *= self.q;
        }
        StateVector::new(space, v).expect("same space")
    }
}

/// Convenience wrapper around [`GhzFamily::state`].
pub fn ghz_state(n: usize, q: C64, stats: Statistics, n_max: usize) -> Result<StateVector> {
    Ok(GhzFamily::new(n, q, stats, n_max)?.state())
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `ρ = Σ_{n,n′} (1 − r²) r^{n+n′} sinc[δ(n − n′)] |t_n⟩⟨t_{n′}|` over the
/// normalized terms `t_n` of the family with `r = |q|`.
///
/// Returned as a mixture from the eigendecomposition of the coefficient kernel.
pub fn dephased_ghz(family: &GhzFamily, delta: f64) -> Result<DensityOperator> {
    if !(0.0..=std::f64::consts::PI).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside [0, π]")));
    }
    let r = family.q.norm();
    let m = family.n_max + 1;
    let kernel = DMatrix::from_fn(m, m, |a, b| {
        let w = (1.0 - r * r) * r.powi((a + b) as i32) * sinc(delta * (a as f64 - b as f64));
        C64::new(w, 0.0)
    });
    let (vals, vecs) = eigh_desc(&kernel);
    let space = family.space();
    let terms: Vec<StateVector> = (0..m).map(|k| family.term(k)).collect();
    let mut mixture = Vec::new();
    for (i, &mu) in vals.iter().enumerate() {
        if mu <= 1e-15 {
            continue;
        }
        let mut v = DVector::zeros(space.total_dim());
        for (k, t) in terms.iter().enumerate() {
            v += t.amplitudes() * vecs[(k, i)];
        }
        mixture.push((mu, StateVector::new(space, v)?));
    }
    DensityOperator::from_mixture(space, mixture)
}

/// `⟨L⟩ = 2(1 − r²) r sinc δ` for the interference observable.
pub fn ghz_expectation(r: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("r = {r} outside [0, 1)")));
    }
    Ok(2.0 * (1.0 - r * r) * r * sinc(delta))
}
