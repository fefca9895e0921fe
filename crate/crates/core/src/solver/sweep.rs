//! Cyclic alternating generalized eigensolves.
//!
//! For party `j` the others are held fixed and `A x = g B x` is solved with
//! `A = (𝕀L𝕀)_{b̄_j}` and `B = (𝕀)_{b̄_j}`. Because `𝕀 C_j = 𝕀 C_j 𝕀_j`, where
//! `𝕀_j` (anti)symmetrizes the slots of party `j` only, `x` can be restricted to
//! the local sector, which keeps the reduced pencils small.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::observable::Prepared;
use super::{Mode, Partition, SEProblem, SESolution, SweepOptions};
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, eigh_desc, orthonormal_remainder, orthonormal_span};
use crate::tensor::{kron_vectors, sector_basis, PermutationTable, StateVector, Statistics};

const PROJECTION_FLOOR: f64 = 1e-8;
const RANGE_CUTOFF: f64 = 1e-12;
const TIE_TOL: f64 = 1e-10;
const INIT_REDRAWS: usize = 100;
const RESTARTS: usize = 8;
/// Above this local dimension the distinguishable low-rank path avoids dense `m × m` work.
const LARGE_LOCAL: usize = 64;

pub(crate) struct Evaluation {
    pub g: f64,
    pub residual: f64,
    pub chi_norm: f64,
    pub projected: DVector<C64>,
}

/// Problem data shared by all starts.
pub(crate) struct Context<'a> {
    problem: &'a SEProblem,
    prepared: Prepared,
    table: PermutationTable,
    dims: Vec<usize>,
    /// Local sector bases per party, empty for distinguishable particles.
    sectors: Vec<Vec<Vec<(usize, C64)>>>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(problem: &'a SEProblem) -> Self {
        let space = problem.space();
        let stats = problem.stats();
        let table = PermutationTable::with_lookup(space.d(), space.n());
        let prepared = problem.observable().prepare(stats, &table);
        let parts = problem.partition().parts();
        let sectors = if stats == Statistics::Distinguishable {
            vec![Vec::new(); parts.len()]
        } else {
            parts.iter().map(|&p| sector_basis(stats, space.d(), p)).collect()
        };
        Self { problem, prepared, table, dims: problem.party_dims(), sectors }
    }

    fn stats(&self) -> Statistics {
        self.problem.stats()
    }

    fn k(&self) -> usize {
        self.dims.len()
    }

    pub(crate) fn project(&self, v: &DVector<C64>) -> DVector<C64> {
        match self.stats() {
            Statistics::Distinguishable => v.clone(),
            stats => DVector::from_vec(self.table.project_slice(stats, v.as_slice())),
        }
    }

    /// `(𝕀|b⟩, 𝕀L𝕀|b⟩)` for the product vector `|b⟩ = |b_1, ..., b_K⟩`.
    pub(crate) fn images(&self, b: &[DVector<C64>]) -> (DVector<C64>, DVector<C64>) {
        let prod = kron_vectors(b);
        let projected = self.project(&prod);
        let z = self.prepared.apply_projected(&prod, &projected);
        (projected, z)
    }

    pub(crate) fn evaluate(&self, b: &[DVector<C64>]) -> Result<Evaluation> {
        let (projected, z) = self.images(b);
        let pn2 = projected.norm_squared();
        if pn2.sqrt() < PROJECTION_FLOOR * b.iter().map(|v| v.norm()).product::<f64>() {
            return Err(Error::ZeroProjection);
        }
        let g = projected.dotc(&z).re / pn2;
        let chi = &z - &projected * C64::new(g, 0.0);
        let mut residual: f64 = 0.0;
        for j in 0..self.k() {
            let num = contract_except(&chi, b, j).norm();
            let den = contract_except(&projected, b, j).norm();
            residual = residual.max(num / den);
        }
        Ok(Evaluation { g, residual, chi_norm: chi.norm(), projected })
    }

    pub(crate) fn solution(
        &self,
        b: Vec<DVector<C64>>,
        ev: Evaluation,
        converged: bool,
        sweeps: usize,
    ) -> SESolution {
        SESolution {
            g: ev.g,
            partition: self.problem.partition().clone(),
            party_vectors: b,
            projected_vector: StateVector::new(self.problem.space(), ev.projected)
                .expect("dimension fixed by the problem"),
            residual: ev.residual,
            chi_norm: ev.chi_norm,
            converged,
            sweeps,
        }
    }

    fn check_init(&self, init: &[DVector<C64>]) -> Result<Vec<DVector<C64>>> {
        if init.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), got: init.len() });
        }
        init.iter()
            .zip(&self.dims)
            .map(|(v, &dim)| {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
                }
                let n = v.norm();
                if n == 0.0 {
                    return Err(Error::ZeroProjection);
                }
                Ok(v.unscale(n))
            })
            .collect()
    }

    pub(crate) fn sweep(&self, init: &[DVector<C64>], opts: &SweepOptions) -> Result<SESolution> {
        let mut b = self.check_init(init)?;
        let mut ev = self.evaluate(&b)?;
        for sweep in 1..=opts.max_sweeps {
            for j in 0..self.k() {
                self.update_party(&mut b, j, opts.mode)?;
            }
            let next = self.evaluate(&b)?;
            let dg = (next.g - ev.g).abs();
            ev = next;
            if dg <= opts.tol_g * ev.g.abs().max(1.0) && ev.residual <= opts.tol_residual {
                return Ok(self.solution(b, ev, true, sweep));
            }
        }
        Ok(self.solution(b, ev, false, opts.max_sweeps))
    }

    /// Replaces `b[j]` by the extremal solution of its reduced pencil.
    fn update_party(&self, b: &mut [DVector<C64>], j: usize, mode: Mode) -> Result<()> {
        let new = if self.stats() == Statistics::Distinguishable {
            self.update_distinguishable(b, j, mode)?
        } else {
            self.update_sector(b, j, mode)?
        };
        let n = new.norm();
        if !(n > 0.0) {
            return Err(Error::ZeroProjection);
        }
        b[j] = new.unscale(n);
        Ok(())
    }

    fn update_distinguishable(&self, b: &[DVector<C64>], j: usize, mode: Mode) -> Result<DVector<C64>> {
        let m = self.dims[j];
        let c: f64 = b.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| v.norm_squared()).product();
        match &self.prepared {
            Prepared::LowRank { projected_basis, core, shift } => {
                let cols: Vec<DVector<C64>> =
                    projected_basis.iter().map(|r| contract_except(r, b, j)).collect();
                let w = DMatrix::from_fn(m, cols.len(), |r, a| cols[a][r]);
                if m > LARGE_LOCAL || m > cols.len() {
                    let y = w.unscale(c);
                    return low_rank_extremal(&w, &y, core, *shift, &b[j], mode);
                }
                let a = &w * core * w.adjoint() + DMatrix::identity(m, m) * C64::new(shift * c, 0.0);
                let bmat = DMatrix::identity(m, m) * C64::new(c, 0.0);
                let (_, x) = pencil_extremal(&a, &bmat, Some(&(&b[j] * C64::new(c, 0.0))), mode)?;
                Ok(x)
            }
            Prepared::Dense(lp) => {
                let mut a = DMatrix::zeros(m, m);
                let mut parts = b.to_vec();
                for l in 0..m {
                    let mut e = DVector::zeros(m);
                    e[l] = C64::new(1.0, 0.0);
                    parts[j] = e;
                    let col = lp * kron_vectors(&parts);
                    a.set_column(l, &contract_except(&col, b, j));
                }
                let bmat = DMatrix::identity(m, m) * C64::new(c, 0.0);
                let (_, x) = pencil_extremal(&a, &bmat, Some(&(&b[j] * C64::new(c, 0.0))), mode)?;
                Ok(x)
            }
        }
    }

    fn update_sector(&self, b: &[DVector<C64>], j: usize, mode: Mode) -> Result<DVector<C64>> {
        let stats = self.stats();
        let sector = &self.sectors[j];
        let m = sector.len();
        if m == 0 {
            return Err(Error::ZeroProjection);
        }
        let columns = embedded_columns(sector, b, j, self.dims[j]);
        let total = self.problem.space().total_dim();
        let mut scratch = vec![C64::new(0.0, 0.0); total];

        // B_kl = s_k† 𝕀 s_l.
        let mut bmat = DMatrix::zeros(m, m);
        for (l, sl) in columns.iter().enumerate() {
            self.table.project_sparse_into(stats, sl, &mut scratch);
            for (k, sk) in columns.iter().enumerate() {
                bmat[(k, l)] = sparse_dot(sk, &scratch);
            }
            self.table.clear_sparse(sl, &mut scratch);
        }
        let bmat = (&bmat + bmat.adjoint()).unscale(2.0);

        let x_prev = DVector::from_iterator(m, sector.iter().map(|e| sparse_dot(e, b[j].as_slice())));

        let x = match &self.prepared {
            Prepared::LowRank { projected_basis, core, shift } => {
                let r = projected_basis.len();
                let w = DMatrix::from_fn(m, r, |k, a| sparse_dot(&columns[k], projected_basis[a].as_slice()));
                let chol = (stats == Statistics::Boson).then(|| bmat.clone().cholesky()).flatten();
                match chol {
                    Some(chol) => {
                        let y = chol.solve(&w);
                        low_rank_extremal(&w, &y, core, *shift, &x_prev, mode)?
                    }
                    None => {
                        let a = &w * core * w.adjoint() + &bmat * C64::new(*shift, 0.0);
                        pencil_extremal(&a, &bmat, Some(&(&bmat * &x_prev)), mode)?.1
                    }
                }
            }
            Prepared::Dense(lp) => {
                let mut a = DMatrix::zeros(m, m);
                for (l, sl) in columns.iter().enumerate() {
                    let mut y = DVector::<C64>::zeros(total);
                    for &(i, c) in sl {
                        y.axpy(c, &lp.column(i), C64::new(1.0, 0.0));
                    }
                    for (k, sk) in columns.iter().enumerate() {
                        a[(k, l)] = sparse_dot(sk, y.as_slice());
                    }
                }
                let a = (&a + a.adjoint()).unscale(2.0);
                pencil_extremal(&a, &bmat, Some(&(&bmat * &x_prev)), mode)?.1
            }
        };

        let mut out = DVector::zeros(self.dims[j]);
        for (e, xk) in sector.iter().zip(x.iter()) {
            for &(i, c) in e {
                out[i] += c * xk;
            }
        }
        Ok(out)
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Option<Vec<DVector<C64>>> {
        for _ in 0..INIT_REDRAWS {
            let b: Vec<DVector<C64>> = self
                .dims
                .iter()
                .map(|&dim| complex_gaussian(rng, dim).normalize())
                .collect();
            if self.project(&kron_vectors(&b)).norm() >= PROJECTION_FLOOR {
                return Some(b);
            }
        }
        None
    }

    fn run_start(&self, seed: u64, index: usize, opts: &SweepOptions) -> Option<SESolution> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        for _ in 0..RESTARTS {
            let init = self.random_start(&mut rng)?;
            match self.sweep(&init, opts) {
                Ok(sol) => return Some(sol),
                Err(Error::ZeroProjection) => continue,
                Err(_) => return None,
            }
        }
        None
    }
}

/// `C_j† v`: contracts `v` with every party vector except the `j`-th.
pub(crate) fn contract_except(v: &DVector<C64>, b: &[DVector<C64>], j: usize) -> DVector<C64> {
    let pre = kron_vectors(&b[..j]);
    let suf = kron_vectors(&b[j + 1..]);
    let mid = v.len() / (pre.len() * suf.len());
    let sd = suf.len();
    let data = v.as_slice();
    let mut out = DVector::zeros(mid);
    for (p, pc) in pre.iter().enumerate() {
        let pc = pc.conj();
        let base = p * mid * sd;
        for x in 0..mid {
            let row = base + x * sd;
            let s: C64 = suf.iter().zip(&data[row..row + sd]).map(|(a, c)| a.conj() * c).sum();
            out[x] += pc * s;
        }
    }
    out
}

/// `C_j e` for every local sector vector `e`, as sparse vectors on `H^{⊗N}`.
fn embedded_columns(
    sector: &[Vec<(usize, C64)>],
    b: &[DVector<C64>],
    j: usize,
    mid: usize,
) -> Vec<Vec<(usize, C64)>> {
    let pre = kron_vectors(&b[..j]);
    let suf = kron_vectors(&b[j + 1..]);
    let sd = suf.len();
    sector
        .iter()
        .map(|e| {
            let mut col = Vec::with_capacity(e.len() * pre.len() * sd);
            for (p, pc) in pre.iter().enumerate() {
                for &(i, c) in e {
                    let base = (p * mid + i) * sd;
                    let pcc = pc * c;
                    col.extend(suf.iter().enumerate().map(|(s, sc)| (base + s, pcc * sc)));
                }
            }
            col
        })
        .collect()
}

/// `⟨s|v⟩` for sparse `s`.
#[inline]
fn sparse_dot(s: &[(usize, C64)], v: &[C64]) -> C64 {
    s.iter().map(|&(i, c)| c.conj() * v[i]).sum()
}

/// Extremal eigenpair of the pencil `(a, b)` restricted to the range of `b`.
///
/// `prev_b` is `b x_prev`; within a degenerate top eigenspace the vector with the
/// largest `b`-overlap with `x_prev` is returned.
pub(crate) fn pencil_extremal(
    a: &DMatrix<C64>,
    b: &DMatrix<C64>,
    prev_b: Option<&DVector<C64>>,
    mode: Mode,
) -> Result<(f64, DVector<C64>)> {
    let (bvals, bvecs) = eigh_desc(b);
    let top = bvals.first().copied().unwrap_or(0.0);
    if !(top > 1e-300) {
        return Err(Error::ZeroProjection);
    }
    let keep = bvals.iter().take_while(|&&v| v > RANGE_CUTOFF * top).count();
    let t = DMatrix::from_fn(b.nrows(), keep, |r, c| bvecs[(r, c)] / bvals[c].sqrt());
    let sign = if mode == Mode::Max { 1.0 } else { -1.0 };
    let m = t.adjoint() * a * &t * C64::new(sign, 0.0);
    let (vals, vecs) = eigh_desc(&m);
    let best = vals[0];
    let deg = vals.iter().take_while(|&&v| v >= best - TIE_TOL * best.abs().max(1.0)).count();
    let mut y = vecs.column(0).into_owned();
    if deg > 1 {
        if let Some(pb) = prev_b {
            let q = t.adjoint() * pb;
            let mut acc = DVector::zeros(keep);
            for i in 0..deg {
                let col = vecs.column(i);
                acc += col * col.dotc(&q);
            }
            let n = acc.norm();
            if n > 1e-12 * q.norm().max(1e-300) {
                y = acc.unscale(n);
            }
        }
    }
    Ok((sign * best, t * y))
}

/// Extremal eigenpair of `(W C W† + s B, B)` when `B` is invertible and `Y = B⁻¹ W`.
///
/// Eigenvectors outside `span(Y)` all have eigenvalue `s`.
fn low_rank_extremal(
    w: &DMatrix<C64>,
    y: &DMatrix<C64>,
    core: &DMatrix<C64>,
    shift: f64,
    x_prev: &DVector<C64>,
    mode: Mode,
) -> Result<DVector<C64>> {
    let m = w.nrows();
    let h = w.adjoint() * y;
    let h = (&h + h.adjoint()).unscale(2.0);
    let htop = eigh_desc(&h).0.first().copied().unwrap_or(0.0);
    let range = if htop > 1e-300 {
        let a = &h * core * &h + &h * C64::new(shift, 0.0);
        let (g, c) = pencil_extremal(&a, &h, Some(&(w.adjoint() * x_prev)), mode)?;
        Some((g, y * c))
    } else {
        None
    };
    let rank = if htop > 1e-300 {
        eigh_desc(&h).0.iter().take_while(|&&v| v > RANGE_CUTOFF * htop).count()
    } else {
        0
    };
    let complement_wins = match &range {
        None => true,
        Some((g, _)) if rank < m => match mode {
            Mode::Max => shift > g + TIE_TOL * g.abs().max(1.0),
            Mode::Min => shift < g - TIE_TOL * g.abs().max(1.0),
        },
        Some(_) => false,
    };
    if !complement_wins {
        return Ok(range.map(|r| r.1).expect("range solution present"));
    }
    let cols: Vec<DVector<C64>> = (0..w.ncols()).map(|a| w.column(a).into_owned()).collect();
    let q = orthonormal_span(&cols, RANGE_CUTOFF);
    if let Some(x) = orthonormal_remainder(&q, x_prev, 1e-8 * x_prev.norm()) {
        return Ok(x);
    }
    for i in 0..m {
        let mut e = DVector::zeros(m);
        e[i] = C64::new(1.0, 0.0);
        if let Some(x) = orthonormal_remainder(&q, &e, 1e-6) {
            return Ok(x);
        }
    }
    Err(Error::ZeroProjection)
}

/// Runs the cyclic sweep from `init` (one vector per party).
pub fn sweep_solve(problem: &SEProblem, init: &[DVector<C64>], opts: &SweepOptions) -> Result<SESolution> {
    Context::new(problem).sweep(init, opts)
}

/// Evaluates `g`, residual and `χ` for given party vectors without iterating.
pub fn evaluate_solution(problem: &SEProblem, party_vectors: &[DVector<C64>]) -> Result<SESolution> {
    let ctx = Context::new(problem);
    let b = ctx.check_init(party_vectors)?;
    let ev = ctx.evaluate(&b)?;
    Ok(ctx.solution(b, ev, true, 0))
}

/// Outcome of a multi-start search.
#[derive(Debug, Clone)]
pub struct SupResult {
    /// `sup{g}` (or `inf{g}` in [`Mode::Min`]) over converged starts.
    pub g: f64,
    pub best: SESolution,
    /// Solutions in start order; starts that failed entirely are omitted.
    pub solutions: Vec<SESolution>,
    pub starts: usize,
    pub converged: usize,
    /// Fraction of starts that converged to within `1e-8` of `g`.
    pub hit_fraction: f64,
    /// True when no start converged and `g` is the best unconverged value.
    pub unconverged: bool,
}

/// Multi-start search for the extremal SEvalue.
///
/// Start `i` draws its initial vectors from ChaCha8 seeded with `seed` on stream `i`,
/// so the result does not depend on the thread schedule.
pub fn solve_extremal(problem: &SEProblem, starts: usize, seed: u64, opts: &SweepOptions) -> Result<SupResult> {
    if starts == 0 {
        return Err(Error::InvalidArgument("starts must be at least 1".into()));
    }
    let ctx = Context::new(problem);
    let solutions: Vec<SESolution> = (0..starts)
        .into_par_iter()
        .map(|i| ctx.run_start(seed, i, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if solutions.is_empty() {
        return Err(Error::AllStartsFailed(format!(
            "{starts} starts never produced a nonvanishing projected product vector"
        )));
    }
    let better = |a: f64, b: f64| match opts.mode {
        Mode::Max => a > b,
        Mode::Min => a < b,
    };
    let converged = solutions.iter().filter(|s| s.converged).count();
    let pool: Vec<&SESolution> = if converged > 0 {
        solutions.iter().filter(|s| s.converged).collect()
    } else {
        solutions.iter().collect()
    };
    let mut best = pool[0];
    for s in &pool[1..] {
        if better(s.g, best.g) {
            best = s;
        }
    }
    let g = best.g;
    let hits = solutions
        .iter()
        .filter(|s| s.converged && (s.g - g).abs() <= 1e-8 * g.abs().max(1.0))
        .count();
    Ok(SupResult {
        g,
        best: best.clone(),
        starts,
        converged,
        hit_fraction: hits as f64 / starts as f64,
        unconverged: converged == 0,
        solutions,
    })
}

/// `sup{g}` with the default sweep options.
pub fn solve_sup_g(problem: &SEProblem, starts: usize, seed: u64) -> Result<SupResult> {
    solve_extremal(problem, starts, seed, &SweepOptions::default())
}

/// `sup{g}` over every multiset-distinct partition into `k` parts.
pub fn solve_sup_g_for_k(
    observable: &super::Observable,
    stats: Statistics,
    k: usize,
    starts: usize,
    seed: u64,
    opts: &SweepOptions,
) -> Result<(Partition, SupResult)> {
    let n = observable.space().n();
    let mut best: Option<(Partition, SupResult)> = None;
    for partition in Partition::all_of_size(n, k) {
        let problem = SEProblem::new(observable.clone(), stats, partition.clone())?;
        let res = solve_extremal(&problem, starts, seed, opts)?;
        let replace = match &best {
            None => true,
            Some((_, b)) => match opts.mode {
                Mode::Max => res.g > b.g,
                Mode::Min => res.g < b.g,
            },
        };
        if replace {
            best = Some((partition, res));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument(format!("no partition of {n} into {k} parts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Observable;
    use crate::tensor::SpaceConfig;

    #[test]
    fn contraction_of_product() {
        let a = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let b = DVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.0, -1.0), C64::new(1.0, 1.0)]);
        let v = kron_vectors(&[a.clone(), b.clone()]);
        let out = contract_except(&v, &[a.clone(), b.clone()], 0);
        assert!((out - &a * C64::new(b.norm_squared(), 0.0)).norm() < 1e-14);
        let out = contract_except(&v, &[a.clone(), b.clone()], 1);
        assert!((out - &b * C64::new(a.norm_squared(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_observable_gives_one() {
        for stats in Statistics::ALL {
            let space = SpaceConfig::new(3, 2).unwrap();
            let problem = SEProblem::new(Observable::identity(space), stats, Partition::full(2)).unwrap();
            let res = solve_sup_g(&problem, 4, 1).unwrap();
            assert!((res.g - 1.0).abs() < 1e-12);
            assert!(res.solutions.iter().all(|s| s.converged));
        }
    }

    #[test]
    fn pencil_handles_singular_b() {
        let a = DMatrix::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(5.0, 0.0),
        ]);
        let b = DMatrix::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let (g, x) = pencil_extremal(&a, &b, None, Mode::Max).unwrap();
        assert!((g - 1.0).abs() < 1e-14);
        assert!(x[1].norm() < 1e-14);
    }
}
