//! Witness operators `W = G𝕀 − 𝕀L𝕀` and entanglement verdicts.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomp::schmidt;
use crate::error::{Error, Result};
use crate::linalg::complex_gaussian;
use crate::solver::{
    analytic_interference, analytic_rank_one_bound, brute_force_bound, solve_extremal, LinearOperator, Mode,
    Observable, ObservableKind, Partition, SEProblem, SweepOptions, DEFAULT_STARTS,
};
use crate::tensor::{
    kron_vectors, projector_matrix, DensityOperator, DensityRepr, PermutationTable, StateVector, Statistics,
};

/// Strict-inequality margin for verdicts.
pub const DEFAULT_MARGIN: f64 = 1e-9;
/// Allowed `‖ρ − 𝕀ρ𝕀‖` before a state is rejected.
pub const SECTOR_TOL: f64 = 1e-8;

/// Which side of the SEvalue spectrum the witness uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessForm {
    /// `W = G𝕀 − 𝕀L𝕀` with `G = sup{g}`.
    Upper,
    /// `W = 𝕀L𝕀 − G𝕀` with `G = inf{g}`.
    Lower,
}

/// Where the bound `G` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSource {
    Analytic,
    Numeric,
    /// Sampled lower bound on `sup{g}`; not guaranteed to give a valid witness.
    Oracle,
}

impl fmt::Display for BoundSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundSource::Analytic => "analytic",
            BoundSource::Numeric => "numeric",
            BoundSource::Oracle => "oracle",
        })
    }
}

impl std::str::FromStr for BoundSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(BoundSource::Analytic),
            "numeric" => Ok(BoundSource::Numeric),
            "oracle" => Ok(BoundSource::Oracle),
            other => Err(Error::InvalidArgument(format!("unknown bound source '{other}'"))),
        }
    }
}

/// The separability class a witness refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionPolicy {
    Fixed(Partition),
    /// Every partition into `K` parts.
    AllOfSize(usize),
}

impl PartitionPolicy {
    pub fn k(&self) -> usize {
        match self {
            PartitionPolicy::Fixed(p) => p.k(),
            PartitionPolicy::AllOfSize(k) => *k,
        }
    }

    pub fn partitions(&self, n: usize) -> Vec<Partition> {
        match self {
            PartitionPolicy::Fixed(p) => vec![p.clone()],
            PartitionPolicy::AllOfSize(k) => Partition::all_of_size(n, *k),
        }
    }
}

/// Knobs for numeric and oracle bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundOptions {
    pub starts: usize,
    pub seed: u64,
    pub samples: usize,
    pub sweep: SweepOptions,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { starts: DEFAULT_STARTS, seed: 0, samples: 100_000, sweep: SweepOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Witness {
    observable: Observable,
    stats: Statistics,
    policy: PartitionPolicy,
    bound: f64,
    form: WitnessForm,
    source: BoundSource,
}

impl Witness {
    /// A witness from an externally known bound.
    pub fn new(
        observable: Observable,
        stats: Statistics,
        policy: PartitionPolicy,
        bound: f64,
        form: WitnessForm,
        source: BoundSource,
    ) -> Self {
        Self { observable, stats, policy, bound, form, source }
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    pub fn policy(&self) -> &PartitionPolicy {
        &self.policy
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn form(&self) -> WitnessForm {
        self.form
    }

    pub fn source(&self) -> BoundSource {
        self.source
    }

    /// `⟨v|W|v⟩` for an arbitrary vector.
    pub fn vector_value(&self, v: &DVector<C64>) -> f64 {
        let sv = StateVector::new(self.observable.space(), v.clone()).expect("dimension checked");
        let p = crate::tensor::project(self.stats, &sv).into_amplitudes();
        self.projected_value(&p)
    }

    fn projected_value(&self, p: &DVector<C64>) -> f64 {
        let l = self.observable.quadratic_form(p);
        let n2 = p.norm_squared();
        match self.form {
            WitnessForm::Upper => self.bound * n2 - l,
            WitnessForm::Lower => l - self.bound * n2,
        }
    }

    /// `tr(ρW)`.
    pub fn value(&self, rho: &DensityOperator) -> Result<f64> {
        let space = self.observable.space();
        if rho.space() != space {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), got: rho.space().total_dim() });
        }
        match rho.repr() {
            DensityRepr::Mixture(terms) => Ok(terms.iter().map(|(w, v)| w * self.vector_value(v)).sum()),
            DensityRepr::Dense(m) => {
                let p = projector_matrix(self.stats, space)?;
                let pl = &p * self.observable.to_dense()? * &p;
                let l = (m * pl).trace().re;
                let tp = (m * &p).trace().re;
                Ok(match self.form {
                    WitnessForm::Upper => self.bound * tp - l,
                    WitnessForm::Lower => l - self.bound * tp,
                })
            }
        }
    }

    /// Smallest `⟨s|W|s⟩` over `samples` random normalized projected product states
    /// of every partition in the policy.
    pub fn min_on_separable_samples(&self, samples: usize, seed: u64) -> f64 {
        let space = self.observable.space();
        let table = PermutationTable::with_lookup(space.d(), space.n());
        let mut worst = f64::INFINITY;
        for (idx, partition) in self.policy.partitions(space.n()).iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let dims: Vec<usize> = partition.parts().iter().map(|&p| space.d().pow(p as u32)).collect();
            let mut drawn = 0;
            while drawn < samples {
                let b: Vec<DVector<C64>> = dims.iter().map(|&m| complex_gaussian(&mut rng, m)).collect();
                let prod = kron_vectors(&b);
                let p = match self.stats {
                    Statistics::Distinguishable => prod,
                    s => DVector::from_vec(table.project_slice(s, prod.as_slice())),
                };
                let n = p.norm();
                if n < 1e-8 {
                    continue;
                }
                drawn += 1;
                worst = worst.min(self.projected_value(&p.unscale(n)));
            }
        }
        worst
    }
}

/// Bound for one fixed partition.
fn bound_for(problem: &SEProblem, source: BoundSource, form: WitnessForm, opts: &BoundOptions) -> Result<f64> {
    let k = problem.partition().k();
    match source {
        BoundSource::Analytic => {
            let space = problem.space();
            let stats = problem.stats();
            match (problem.observable().kind(), form) {
                (ObservableKind::Identity, _) => Ok(1.0),
                (ObservableKind::RankOne { psi, stats: s }, WitnessForm::Upper)
                    if *s == stats && space.n() == 2 && k == 2 =>
                {
                    analytic_rank_one_bound(psi, stats)
                }
                (ObservableKind::Interference { stats: s }, _) if *s == stats => {
                    if !interference_closed_form_applies(stats, problem.partition()) {
                        return Err(Error::NoAnalyticBound);
                    }
                    let g = analytic_interference(space, stats, problem.partition())?.g;
                    Ok(if form == WitnessForm::Upper { g } else { -g })
                }
                _ => Err(Error::NoAnalyticBound),
            }
        }
        BoundSource::Numeric => {
            let mode = if form == WitnessForm::Upper { Mode::Max } else { Mode::Min };
            let sweep = SweepOptions { mode, ..opts.sweep };
            let res = solve_extremal(problem, opts.starts, opts.seed, &sweep)?;
            if res.unconverged {
                return Err(Error::AllStartsFailed(format!(
                    "none of {} starts converged (best g = {})",
                    res.starts, res.g
                )));
            }
            Ok(res.g)
        }
        BoundSource::Oracle => match form {
            WitnessForm::Upper => Ok(brute_force_bound(problem, opts.samples, opts.seed)),
            WitnessForm::Lower => Err(Error::InvalidArgument("oracle bounds are upper-form only".into())),
        },
    }
}

/// The closed form `(1/2)^{K−1}` is only used where it is known to hold: it fails
/// for fermions once two parties hold the same even number (≥ 2) of particles,
/// since a non-decomposable two-form `α` has `α ∧ α ≠ 0`.
fn interference_closed_form_applies(stats: Statistics, partition: &Partition) -> bool {
    if stats != Statistics::Fermion {
        return true;
    }
    let mut even: Vec<usize> = partition.parts().iter().copied().filter(|p| p % 2 == 0).collect();
    even.sort_unstable();
    even.windows(2).all(|w| w[0] != w[1])
}

/// Builds the witness for the problem's partition with a bound from `source`.
pub fn build_witness(
    problem: &SEProblem,
    source: BoundSource,
    form: WitnessForm,
    opts: &BoundOptions,
) -> Result<Witness> {
    let bound = bound_for(problem, source, form, opts)?;
    Ok(Witness::new(
        problem.observable().clone(),
        problem.stats(),
        PartitionPolicy::Fixed(problem.partition().clone()),
        bound,
        form,
        source,
    ))
}

/// Builds a witness for `K`-separability, taking the extremal bound over all
/// partitions into `k` parts.
pub fn build_witness_for_k(
    observable: &Observable,
    stats: Statistics,
    k: usize,
    source: BoundSource,
    form: WitnessForm,
    opts: &BoundOptions,
) -> Result<Witness> {
    let n = observable.space().n();
    let partitions = Partition::all_of_size(n, k);
    if partitions.is_empty() {
        return Err(Error::InvalidArgument(format!("no partition of {n} into {k} parts")));
    }
    let mut bound: Option<f64> = None;
    for p in partitions {
        let problem = SEProblem::new(observable.clone(), stats, p)?;
        let g = bound_for(&problem, source, form, opts)?;
        bound = Some(match (bound, form) {
            (None, _) => g,
            (Some(b), WitnessForm::Upper) => b.max(g),
            (Some(b), WitnessForm::Lower) => b.min(g),
        });
    }
    Ok(Witness::new(
        observable.clone(),
        stats,
        PartitionPolicy::AllOfSize(k),
        bound.expect("at least one partition"),
        form,
        source,
    ))
}

/// `tr(ρX)`; mixtures are evaluated term by term.
pub fn expectation<X: LinearOperator + ?Sized>(rho: &DensityOperator, x: &X) -> Result<f64> {
    let dim = rho.space().total_dim();
    if x.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.dim() });
    }
    match rho.repr() {
        DensityRepr::Mixture(terms) => Ok(terms.iter().map(|(w, v)| w * v.dotc(&x.apply(v)).re).sum()),
        DensityRepr::Dense(m) => {
            let mut acc = C64::new(0.0, 0.0);
            let mut e = DVector::zeros(dim);
            for i in 0..dim {
                e[i] = C64::new(1.0, 0.0);
                acc += m.row(i).transpose().dot(&x.apply(&e));
                e[i] = C64::new(0.0, 0.0);
            }
            Ok(acc.re)
        }
    }
}

/// `‖ρ − 𝕀ρ𝕀‖`; for mixtures the bound `Σ_k w_k · 2‖v_k‖‖v_k − 𝕀v_k‖`.
pub fn sector_deviation(rho: &DensityOperator, stats: Statistics) -> Result<f64> {
    if stats == Statistics::Distinguishable {
        return Ok(0.0);
    }
    let space = rho.space();
    match rho.repr() {
        DensityRepr::Mixture(terms) => {
            let table = PermutationTable::new(space.d(), space.n());
            Ok(terms
                .iter()
                .map(|(w, v)| {
                    let p = DVector::from_vec(table.project_slice(stats, v.as_slice()));
                    w * 2.0 * v.norm() * (v - p).norm()
                })
                .sum())
        }
        DensityRepr::Dense(m) => {
            let p = projector_matrix(stats, space)?;
            Ok((m - &p * m * &p).norm())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    /// Not separable with respect to the witness's partition class.
    Entangled,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// `⟨L⟩ = tr(ρL)`.
    pub expectation: f64,
    pub bound: f64,
    pub margin: f64,
    /// `tr(ρW)`.
    pub witness_value: f64,
}

impl Verdict {
    pub fn is_entangled(&self) -> bool {
        self.kind == VerdictKind::Entangled
    }
}

/// Entangled iff `⟨L⟩ > G + margin` (upper form) or `⟨L⟩ < G − margin` (lower form).
pub fn detect(rho: &DensityOperator, witness: &Witness) -> Result<Verdict> {
    detect_with_margin(rho, witness, DEFAULT_MARGIN)
}

pub fn detect_with_margin(rho: &DensityOperator, witness: &Witness, margin: f64) -> Result<Verdict> {
    let deviation = sector_deviation(rho, witness.stats())?;
    if deviation > SECTOR_TOL {
        let sector = match witness.stats() {
            Statistics::Boson => "symmetric",
            _ => "antisymmetric",
        };
        return Err(Error::WrongSector { sector, deviation });
    }
    let value = expectation(rho, witness.observable())?;
    let g = witness.bound();
    let entangled = match witness.form() {
        WitnessForm::Upper => value > g + margin,
        WitnessForm::Lower => value < g - margin,
    };
    Ok(Verdict {
        kind: if entangled { VerdictKind::Entangled } else { VerdictKind::Inconclusive },
        expectation: value,
        bound: g,
        margin,
        witness_value: witness.value(rho)?,
    })
}

/// `G_r`: the sum of the `r` largest squared Schmidt coefficients of `ψ`.
///
/// `⟨ψ|ρ|ψ⟩ > G_r` certifies Schmidt number above `r`. The formula is imported
/// from the Schmidt-number witness literature rather than derived here.
pub fn schmidt_number_bound(psi: &StateVector, r: usize) -> Result<f64> {
    let d = psi.space().d();
    if r == 0 || r > d {
        return Err(Error::InvalidArgument(format!("r = {r} outside 1..={d}")));
    }
    let s = schmidt(psi)?;
    Ok(s.coefficients.iter().take(r).map(|l| l * l).sum())
}
