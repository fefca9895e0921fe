use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sevalue_core::decomp::slater_fermion;
use sevalue_core::linalg::{complex_gaussian, random_hermitian, random_unitary};
use sevalue_core::solver::*;
use sevalue_core::tensor::{kron_vectors, project, SpaceConfig};
use sevalue_core::{Error, StateVector, Statistics, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn unit(d: usize, i: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d);
    v[i] = c(1.0);
    v
}

fn random_projected(rng: &mut ChaCha8Rng, d: usize, stats: Statistics) -> StateVector {
    let space = SpaceConfig::new(d, 2).unwrap();
    let v = StateVector::new(space, complex_gaussian(rng, d * d)).unwrap();
    project(stats, &v).normalized().unwrap()
}

fn rank_one_problem(psi: &StateVector, stats: Statistics) -> SEProblem {
    SEProblem::new(Observable::rank_one(psi, stats), stats, Partition::full(2)).unwrap()
}

/// `(|a,b⟩ − |b,a⟩)` pairs summed with weights, on `d` modes.
fn fermion_pairs(d: usize, pairs: &[(usize, usize, f64)]) -> StateVector {
    let space = SpaceConfig::new(d, 2).unwrap();
    let mut v = DVector::zeros(d * d);
    for &(a, b, w) in pairs {
        v[a * d + b] += c(w);
        v[b * d + a] -= c(w);
    }
    StateVector::new(space, v).unwrap()
}

#[test]
fn contraction_of_product_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, b) = (random_hermitian(&mut rng, 3), random_hermitian(&mut rng, 3));
    let x = a.kronecker(&b);
    let b1 = complex_gaussian(&mut rng, 3);
    let b2 = complex_gaussian(&mut rng, 3);
    let m = contracted_operator(&x, &[b1.clone(), b2.clone()], 0).unwrap();
    let expected = &a * b2.dotc(&(&b * &b2));
    assert!((m - expected).norm() < 1e-12);

    let id = DMatrix::<C64>::identity(9, 9);
    let m = contracted_operator(&id, &[b1, b2.clone()], 0).unwrap();
    assert!((m - DMatrix::identity(3, 3) * c(b2.norm_squared())).norm() < 1e-12);
}

#[test]
fn contraction_rejects_bad_party_index() {
    let x = DMatrix::<C64>::identity(4, 4);
    let v = unit(2, 0);
    assert!(contracted_operator(&x, &[v.clone(), v], 2).is_err());
}

#[test]
fn sweep_on_single_block_fermion_state() {
    let psi = fermion_pairs(3, &[(0, 1, 1.0)]).normalized().unwrap();
    let problem = rank_one_problem(&psi, Statistics::Fermion);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let init = [complex_gaussian(&mut rng, 3), complex_gaussian(&mut rng, 3)];
        let sol = sweep_solve(&problem, &init, &SweepOptions::default()).unwrap();
        assert!(sol.converged);
        // κ₁ = 1/√2, so g = 2κ₁² = 1.
        assert!((sol.g - 1.0).abs() < 1e-10);
    }
}

#[test]
fn identity_is_a_fixed_point_everywhere() {
    let space = SpaceConfig::new(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for stats in Statistics::ALL {
        let problem = SEProblem::new(Observable::identity(space), stats, Partition::full(2)).unwrap();
        let init = [complex_gaussian(&mut rng, 3), complex_gaussian(&mut rng, 3)];
        let sol = evaluate_solution(&problem, &init).unwrap();
        assert!((sol.g - 1.0).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
    }
}

#[test]
fn two_mode_boson_sweeps_land_on_analytic_values() {
    let space = SpaceConfig::new(2, 2).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = StateVector::new(space, DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)])).unwrap();
    let problem = rank_one_problem(&psi, Statistics::Boson);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let init = [complex_gaussian(&mut rng, 2), complex_gaussian(&mut rng, 2)];
        let sol = sweep_solve(&problem, &init, &SweepOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.g - 0.5).abs() < 1e-9 || (sol.g - 1.0).abs() < 1e-9, "g = {}", sol.g);
    }
}

#[test]
fn sup_g_matches_closed_forms_for_random_rank_one_observables() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for stats in Statistics::ALL {
        for d in 3..=5 {
            let psi = random_projected(&mut rng, d, stats);
            let res = solve_sup_g(&rank_one_problem(&psi, stats), 32, d as u64).unwrap();
            let g = analytic_rank_one_bound(&psi, stats).unwrap();
            assert!((res.g - g).abs() < 1e-8, "{stats} d={d}: {} vs {g}", res.g);
            assert!(res.hit_fraction > 0.0);
        }
    }
}

#[test]
fn fermion_bound_is_twice_the_largest_squared_slater_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_projected(&mut rng, 6, Statistics::Fermion);
    let kappa = slater_fermion(&f).unwrap().coefficients;
    let g = analytic_rank_one_bound(&f, Statistics::Fermion).unwrap();
    assert!((g - 2.0 * kappa[0] * kappa[0]).abs() < 1e-12);
}

#[test]
fn analytic_rank_one_examples() {
    // Antisymmetric inner part of |1,2⟩ + |3,4⟩: κ = (1/2, 1/2).
    let f = fermion_pairs(5, &[(1, 2, 0.5), (3, 4, 0.5)]);
    let sols = analytic_rank_one(&f, Statistics::Fermion).unwrap();
    let g = sols.iter().map(|s| s.g).fold(f64::MIN, f64::max);
    assert!((g - 0.5).abs() < 1e-12);
    assert!(sols.iter().all(|s| s.residual < 1e-10));

    let space = SpaceConfig::new(3, 2).unwrap();
    let mut v = DVector::zeros(9);
    for n in 0..3 {
        v[4 * n] = c(1.0 / 3f64.sqrt());
    }
    let b = StateVector::new(space, v).unwrap();
    assert!((analytic_rank_one_bound(&b, Statistics::Boson).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let sols = analytic_rank_one(&b, Statistics::Boson).unwrap();
    assert!(sols.iter().all(|s| s.residual < 1e-10));
    let g = sols.iter().map(|s| s.g).fold(f64::MIN, f64::max);
    assert!((g - 2.0 / 3.0).abs() < 1e-12);

    let bell = StateVector::new(
        SpaceConfig::new(2, 2).unwrap(),
        DVector::from_vec(vec![c(0.5f64.sqrt()), c(0.0), c(0.0), c(0.5f64.sqrt())]),
    )
    .unwrap();
    assert!((analytic_rank_one_bound(&bell, Statistics::Distinguishable).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn analytic_rank_one_needs_two_particles() {
    let space = SpaceConfig::new(3, 3).unwrap();
    let psi = StateVector::basis(space, &[0, 1, 2]).unwrap();
    assert!(matches!(analytic_rank_one(&psi, Statistics::Fermion), Err(Error::InvalidArgument(_))));
}

#[test]
fn distinguishable_solver_reproduces_schmidt_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let psi = random_projected(&mut rng, 4, Statistics::Distinguishable);
    let problem = rank_one_problem(&psi, Statistics::Distinguishable);
    let res = solve_sup_g(&problem, 16, 1).unwrap();
    let lambda = sevalue_core::decomp::schmidt(&psi).unwrap().coefficients;
    assert!((res.g - lambda[0] * lambda[0]).abs() < 1e-9);
    let analytic: Vec<f64> = analytic_rank_one(&psi, Statistics::Distinguishable).unwrap().iter().map(|s| s.g).collect();
    for (g, l) in analytic.iter().zip(&lambda) {
        assert!((g - l * l).abs() < 1e-10);
    }
}

#[test]
fn interference_closed_form_values() {
    let space = SpaceConfig::new(6, 3).unwrap();
    for stats in Statistics::ALL {
        for p in Partition::all(3) {
            let sol = analytic_interference(space, stats, &p).unwrap();
            let expected = 0.5f64.powi(p.k() as i32 - 1);
            assert_eq!(sol.g, expected);
            assert!((sol.optimal.g - expected).abs() < 1e-12);
        }
    }
    let small = SpaceConfig::new(5, 3).unwrap();
    assert!(analytic_interference(small, Statistics::Boson, &Partition::full(3)).is_err());
}

#[test]
fn interference_bound_decreases_with_k() {
    let space = SpaceConfig::new(6, 3).unwrap();
    for stats in Statistics::ALL {
        let obs = Observable::interference(space, stats).unwrap();
        let mut previous = f64::INFINITY;
        for k in 1..=3 {
            let (_, res) = solve_sup_g_for_k(&obs, stats, k, 16, 2, &SweepOptions::default()).unwrap();
            assert!((res.g - 0.5f64.powi(k as i32 - 1)).abs() < 1e-6, "{stats} K={k}: {}", res.g);
            assert!(res.g < previous);
            previous = res.g;
        }
    }
}

#[test]
fn two_fermion_parties_reach_one_on_interference() {
    // α = e₀∧e₁ + e₂∧e₃ and β = e₄∧e₅ + e₆∧e₇ are not decomposable, so α∧α ≠ 0.
    // With b₁ = α + iβ, b₂ = −α + iβ the cross terms cancel and the antisymmetrized
    // product is proportional to e₀₁₂₃ + e₄₅₆₇, the optimum of the observable.
    let d = 8;
    let two_form = |pairs: &[(usize, usize)]| fermion_pairs(d, &pairs.iter().map(|&(a, b)| (a, b, 1.0)).collect::<Vec<_>>()).into_amplitudes();
    let alpha = two_form(&[(0, 1), (2, 3)]);
    let beta = two_form(&[(4, 5), (6, 7)]);
    let i = C64::new(0.0, 1.0);
    let b1 = &alpha + &beta * i;
    let b2 = -&alpha + &beta * i;

    let space = SpaceConfig::new(d, 4).unwrap();
    let obs = Observable::interference(space, Statistics::Fermion).unwrap();
    let problem = SEProblem::new(obs.clone(), Statistics::Fermion, "(2,2)".parse().unwrap()).unwrap();
    let sol = evaluate_solution(&problem, &[b1.clone(), b2.clone()]).unwrap();
    assert!((sol.g - 1.0).abs() < 1e-12, "g = {}", sol.g);
    assert!(sol.residual < 1e-10);

    let prod = StateVector::new(space, kron_vectors(&[b1, b2])).unwrap();
    let p = project(Statistics::Fermion, &prod).normalized().unwrap();
    assert!((obs.quadratic_form(p.amplitudes()) - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_stays_below_the_bound() {
    let space = SpaceConfig::new(4, 2).unwrap();
    for stats in Statistics::ALL {
        let obs = Observable::interference(space, stats).unwrap();
        let problem = SEProblem::new(obs, stats, Partition::full(2)).unwrap();
        let bf = brute_force_bound(&problem, 100_000, 9);
        assert!(bf <= 0.5 + 1e-12, "{stats}: {bf}");
        assert!(bf > 0.45, "{stats}: {bf}");
    }

    let norm = (0.8f64 * 0.8 + 0.6 * 0.6).sqrt();
    let f = fermion_pairs(4, &[(0, 1, 0.8 / norm), (2, 3, 0.6 / norm)]).normalized().unwrap();
    let problem = rank_one_problem(&f, Statistics::Fermion);
    let g = analytic_rank_one_bound(&f, Statistics::Fermion).unwrap();
    let bf = brute_force_bound(&problem, 100_000, 10);
    let numeric = solve_sup_g(&problem, 16, 0).unwrap().g;
    assert!(bf <= g + 1e-12);
    assert!(numeric >= bf - 1e-9);
    assert!(numeric - bf <= 0.05);
}

#[test]
fn oracle_is_deterministic() {
    let space = SpaceConfig::new(4, 2).unwrap();
    let problem = SEProblem::new(Observable::interference(space, Statistics::Boson).unwrap(), Statistics::Boson, Partition::full(2)).unwrap();
    assert_eq!(brute_force_bound(&problem, 5000, 3), brute_force_bound(&problem, 5000, 3));
}

#[test]
fn solver_is_schedule_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi = random_projected(&mut rng, 4, Statistics::Boson);
    let problem = rank_one_problem(&psi, Statistics::Boson);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| solve_sup_g(&problem, 12, 77).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.g.to_bits(), b.g.to_bits());
    for (x, y) in a.solutions.iter().zip(&b.solutions) {
        assert_eq!(x.g.to_bits(), y.g.to_bits());
        assert_eq!(x.party_vectors, y.party_vectors);
    }
}

#[test]
fn transform_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let psi = random_projected(&mut rng, 3, Statistics::Fermion);
    let problem = rank_one_problem(&psi, Statistics::Fermion);
    let sol = solve_sup_g(&problem, 8, 0).unwrap().best;

    let same = transform_solution(&sol, 1.0, 0.0, &DMatrix::identity(3, 3)).unwrap();
    assert_eq!(same.g, sol.g);
    for (x, y) in same.party_vectors.iter().zip(&sol.party_vectors) {
        assert!((x - y).norm() < 1e-15);
    }

    let affine = transform_solution(&sol, 2.0, -1.0, &DMatrix::identity(3, 3)).unwrap();
    assert!((affine.g - (2.0 * sol.g - 1.0)).abs() < 1e-14);

    assert!(transform_solution(&sol, 0.0, 1.0, &DMatrix::identity(3, 3)).is_err());
    let not_unitary = DMatrix::identity(3, 3) * c(2.0);
    assert!(transform_solution(&sol, 1.0, 0.0, &not_unitary).is_err());
}

#[test]
fn transformed_solutions_solve_the_transformed_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for stats in Statistics::ALL {
        let psi = random_projected(&mut rng, 3, stats);
        let problem = rank_one_problem(&psi, stats);
        let sup = solve_sup_g(&problem, 16, 1).unwrap();
        let u = random_unitary(&mut rng, 3);
        let (l1, l2) = (-0.7, 0.3);
        let obs2 = problem.observable().transformed(l1, l2, &u).unwrap();
        let problem2 = SEProblem::new(obs2, stats, Partition::full(2)).unwrap();
        for sol in sup.solutions.iter().filter(|s| s.converged) {
            let moved = transform_solution(sol, l1, l2, &u).unwrap();
            let direct = evaluate_solution(&problem2, &moved.party_vectors).unwrap();
            assert!((direct.g - moved.g).abs() < 1e-8, "{stats}: {} vs {}", direct.g, moved.g);
            assert!(direct.residual < 1e-7);
        }
        // Negative λ₁ swaps sup and inf, so compare inf of the image with λ₁·sup + λ₂.
        let min_opts = SweepOptions { mode: Mode::Min, ..SweepOptions::default() };
        let inf2 = solve_extremal(&problem2, 16, 1, &min_opts).unwrap();
        assert!((inf2.g - (l1 * sup.g + l2)).abs() < 1e-8, "{stats}: {} vs {}", inf2.g, l1 * sup.g + l2);
    }
}

#[test]
fn local_unitaries_preserve_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let space = SpaceConfig::new(3, 2).unwrap();
    for stats in Statistics::ALL {
        let h = random_hermitian(&mut rng, 9);
        let obs = Observable::dense(space, h).unwrap();
        let u = random_unitary(&mut rng, 3);
        let a = solve_sup_g(&SEProblem::new(obs.clone(), stats, Partition::full(2)).unwrap(), 32, 5).unwrap();
        let rotated = obs.transformed(1.0, 0.0, &u).unwrap();
        let b = solve_sup_g(&SEProblem::new(rotated, stats, Partition::full(2)).unwrap(), 32, 5).unwrap();
        assert!((a.g - b.g).abs() < 1e-8, "{stats}: {} vs {}", a.g, b.g);
    }
}

#[test]
fn second_form_holds_for_converged_and_exact_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let tol = SweepOptions::default().tol_residual;
    for stats in Statistics::ALL {
        let psi = random_projected(&mut rng, 4, stats);
        let problem = rank_one_problem(&psi, stats);
        for sol in solve_sup_g(&problem, 8, 2).unwrap().solutions.iter().filter(|s| s.converged) {
            let check = verify_second_form(sol, &problem).unwrap();
            assert!(check.max_overlap <= 10.0 * tol, "{stats}: {}", check.max_overlap);
            assert!(check.sector_deviation < 1e-12);
        }
    }

    let f = fermion_pairs(4, &[(0, 1, 0.4), (2, 3, 0.3)]).normalized().unwrap();
    let problem = rank_one_problem(&f, Statistics::Fermion);
    for sol in analytic_rank_one(&f, Statistics::Fermion).unwrap() {
        let check = verify_second_form(&sol, &problem).unwrap();
        assert!(check.max_overlap < 1e-12);
        let mut shifted = sol.clone();
        shifted.g += 0.1;
        assert!(verify_second_form(&shifted, &problem).unwrap().max_overlap > 1e-3);
    }
}

#[test]
fn vanishing_projection_is_rejected() {
    let space = SpaceConfig::new(3, 2).unwrap();
    let problem = SEProblem::new(Observable::identity(space), Statistics::Fermion, Partition::full(2)).unwrap();
    let e0 = unit(3, 0);
    assert!(matches!(sweep_solve(&problem, &[e0.clone(), e0], &SweepOptions::default()), Err(Error::ZeroProjection)));
}

#[test]
fn problem_validation() {
    let space = SpaceConfig::new(2, 2).unwrap();
    assert!(SEProblem::new(Observable::identity(space), Statistics::Boson, Partition::full(3)).is_err());
    let m = DMatrix::from_fn(4, 4, |i, j| if i < j { c(1.0) } else { c(0.0) });
    assert!(matches!(Observable::dense(space, m), Err(Error::NotHermitian(_))));
}
