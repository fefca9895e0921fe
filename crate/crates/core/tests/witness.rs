use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sevalue_core::linalg::{complex_gaussian, random_hermitian};
use sevalue_core::solver::{analytic_rank_one_bound, Observable, Partition, SEProblem, SweepOptions};
use sevalue_core::states::noisy_state;
use sevalue_core::tensor::{project, subspace_dimension, SpaceConfig};
use sevalue_core::witness::*;
use sevalue_core::{DensityOperator, Error, StateVector, Statistics, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn balanced_boson(d: usize) -> StateVector {
    let space = SpaceConfig::new(d, 2).unwrap();
    let v = DVector::from_fn(d * d, |i, _| if i % (d + 1) == 0 { c((d as f64).powf(-0.5)) } else { c(0.0) });
    StateVector::new(space, v).unwrap()
}

fn singlet() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(SpaceConfig::new(2, 2).unwrap(), DVector::from_vec(vec![c(0.0), c(s), c(-s), c(0.0)])).unwrap()
}

fn quick() -> BoundOptions {
    BoundOptions { starts: 16, seed: 3, samples: 20_000, sweep: SweepOptions::default() }
}

fn rank_one_problem(psi: &StateVector, stats: Statistics) -> SEProblem {
    SEProblem::new(Observable::rank_one(psi, stats), stats, Partition::full(2)).unwrap()
}

#[test]
fn two_mode_fermion_witness_vanishes() {
    let problem = rank_one_problem(&singlet(), Statistics::Fermion);
    for source in [BoundSource::Analytic, BoundSource::Numeric] {
        let w = build_witness(&problem, source, WitnessForm::Upper, &quick()).unwrap();
        assert!((w.bound() - 1.0).abs() < 1e-10);
        assert_eq!(w.source(), source);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert!(w.vector_value(&complex_gaussian(&mut rng, 4)).abs() < 1e-10);
        }
    }
    assert_eq!(subspace_dimension(Statistics::Fermion, SpaceConfig::new(2, 2).unwrap()), 1);
}

#[test]
fn interference_witness_bounds() {
    let space = SpaceConfig::new(4, 2).unwrap();
    for stats in Statistics::ALL {
        let problem = SEProblem::new(Observable::interference(space, stats).unwrap(), stats, Partition::full(2)).unwrap();
        let a = build_witness(&problem, BoundSource::Analytic, WitnessForm::Upper, &quick()).unwrap();
        let n = build_witness(&problem, BoundSource::Numeric, WitnessForm::Upper, &quick()).unwrap();
        let o = build_witness(&problem, BoundSource::Oracle, WitnessForm::Upper, &quick()).unwrap();
        assert_eq!(a.bound(), 0.5);
        assert!((n.bound() - 0.5).abs() < 1e-9);
        assert!(o.bound() <= 0.5 + 1e-12);
    }
}

#[test]
fn balanced_boson_witness() {
    let psi = balanced_boson(3);
    let problem = rank_one_problem(&psi, Statistics::Boson);
    let w = build_witness(&problem, BoundSource::Analytic, WitnessForm::Upper, &quick()).unwrap();
    assert!((w.bound() - 2.0 / 3.0).abs() < 1e-12);
    let n = build_witness(&problem, BoundSource::Numeric, WitnessForm::Upper, &quick()).unwrap();
    assert!((n.bound() - 2.0 / 3.0).abs() < 1e-9);

    let v = detect(&DensityOperator::pure(psi), &w).unwrap();
    assert!(v.is_entangled());
    assert!((v.expectation - 1.0).abs() < 1e-12);
    assert!((v.bound - 2.0 / 3.0).abs() < 1e-12);

    let noise = noisy_state(&balanced_boson(3), Statistics::Boson, 0.0).unwrap();
    assert_eq!(detect(&noise, &w).unwrap().kind, VerdictKind::Inconclusive);
}

#[test]
fn one_separable_witness_never_fires() {
    let space = SpaceConfig::new(6, 3).unwrap();
    let obs = Observable::interference(space, Statistics::Boson).unwrap();
    let problem = SEProblem::new(obs, Statistics::Boson, Partition::trivial(3)).unwrap();
    let w = build_witness(&problem, BoundSource::Analytic, WitnessForm::Upper, &quick()).unwrap();
    assert_eq!(w.bound(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let v = StateVector::new(space, complex_gaussian(&mut rng, 216)).unwrap();
        let rho = DensityOperator::pure(project(Statistics::Boson, &v).normalized().unwrap());
        assert_eq!(detect(&rho, &w).unwrap().kind, VerdictKind::Inconclusive);
    }
}

#[test]
fn detect_rejects_states_outside_the_sector() {
    let problem = rank_one_problem(&balanced_boson(3), Statistics::Boson);
    let w = build_witness(&problem, BoundSource::Analytic, WitnessForm::Upper, &quick()).unwrap();
    let space = SpaceConfig::new(3, 2).unwrap();
    let rho = DensityOperator::pure(StateVector::basis(space, &[0, 1]).unwrap());
    assert!(matches!(detect(&rho, &w), Err(Error::WrongSector { .. })));
}

#[test]
fn expectation_examples() {
    let psi = balanced_boson(3);
    let rho = DensityOperator::pure(psi.clone());
    let x: DMatrix<C64> = psi.amplitudes() * psi.amplitudes().adjoint();
    assert!((expectation(&rho, &x).unwrap() - 1.0).abs() < 1e-14);

    let dense = DensityOperator::from_dense(psi.space(), x.clone()).unwrap();
    assert!((expectation(&dense, &x).unwrap() - 1.0).abs() < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let generic = StateVector::new(psi.space(), complex_gaussian(&mut rng, 9)).unwrap();
    for stats in Statistics::ALL {
        let mixed = noisy_state(&generic, stats, 0.0).unwrap();
        let obs = Observable::rank_one(&project(stats, &generic).normalized().unwrap(), stats);
        let dim = subspace_dimension(stats, psi.space()) as f64;
        assert!((expectation(&mixed, &obs).unwrap() - 1.0 / dim).abs() < 1e-12, "{stats}");
    }

    let wrong = DMatrix::<C64>::identity(4, 4);
    assert!(matches!(expectation(&rho, &wrong), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn verdict_agrees_with_witness_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for stats in Statistics::ALL {
        let psi = balanced_boson(4);
        let target = project(stats, &psi).normalized().unwrap_or_else(|_| psi.clone());
        let psi = if stats == Statistics::Fermion {
            let v = StateVector::new(psi.space(), complex_gaussian(&mut rng, 16)).unwrap();
            project(stats, &v).normalized().unwrap()
        } else {
            target
        };
        let problem = rank_one_problem(&psi, stats);
        let w = build_witness(&problem, BoundSource::Analytic, WitnessForm::Upper, &quick()).unwrap();
        for k in 0..=20 {
            let rho = noisy_state(&psi, stats, k as f64 / 20.0).unwrap();
            let v = detect(&rho, &w).unwrap();
            assert_eq!(v.is_entangled(), v.witness_value < -v.margin, "{stats} p={}", k as f64 / 20.0);
            assert!((v.witness_value - (v.bound - v.expectation)).abs() < 1e-12);
        }
    }
}

#[test]
fn schmidt_number_bounds() {
    let space = SpaceConfig::new(4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let psi = StateVector::new(space, complex_gaussian(&mut rng, 16)).unwrap().normalized().unwrap();
    let bounds: Vec<f64> = (1..=4).map(|r| schmidt_number_bound(&psi, r).unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]));
    assert!((bounds[3] - 1.0).abs() < 1e-12);
    let g1 = analytic_rank_one_bound(&psi, Statistics::Distinguishable).unwrap();
    assert!((bounds[0] - g1).abs() < 1e-12);
    assert!(matches!(schmidt_number_bound(&psi, 0), Err(Error::InvalidArgument(_))));
}

/// Dense Gaussian or a single random basis vector with a random phase.
fn sparse_or_dense(rng: &mut ChaCha8Rng, d: usize) -> DVector<C64> {
    use rand::Rng;
    if rng.random_bool(0.5) {
        return complex_gaussian(rng, d);
    }
    let mut v = DVector::zeros(d);
    v[rng.random_range(0..d)] = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    v
}

#[test]
fn balanced_schmidt_bounds_against_sampled_low_rank_states() {
    for d in [3usize, 4] {
        let space = SpaceConfig::new(d, 2).unwrap();
        let psi = balanced_boson(d);
        assert!((schmidt_number_bound(&psi, 1).unwrap() - 1.0 / d as f64).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
        for r in 1..=2usize {
            let bound = schmidt_number_bound(&psi, r).unwrap();
            let mut best: f64 = 0.0;
            for _ in 0..20_000 {
                let mut v = DVector::zeros(d * d);
                for _ in 0..r {
                    let a = sparse_or_dense(&mut rng, d);
                    let b = sparse_or_dense(&mut rng, d);
                    v += a.kronecker(&b);
                }
                let phi = StateVector::new(space, v).unwrap().normalized().unwrap();
                best = best.max(psi.inner(&phi).norm_sqr());
            }
            assert!(best <= bound + 1e-12, "d={d} r={r}: {best} > {bound}");
            assert!(best > bound - 0.08, "d={d} r={r}: {best} far below {bound}");
        }
    }
    let psi = balanced_boson(4);
    assert!((schmidt_number_bound(&psi, 2).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn sampled_separable_states_keep_witnesses_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = SpaceConfig::new(3, 2).unwrap();
    for stats in Statistics::ALL {
        let h = random_hermitian(&mut rng, 9);
        let problem = SEProblem::new(Observable::dense(space, h).unwrap(), stats, Partition::full(2)).unwrap();
        for form in [WitnessForm::Upper, WitnessForm::Lower] {
            let w = build_witness(&problem, BoundSource::Numeric, form, &quick()).unwrap();
            assert!(w.min_on_separable_samples(10_000, 1) >= -1e-9, "{stats} {form:?}");
        }
    }
}

#[test]
fn k_policy_takes_the_extreme_over_partitions() {
    let space = SpaceConfig::new(6, 3).unwrap();
    let obs = Observable::interference(space, Statistics::Fermion).unwrap();
    let w = build_witness_for_k(&obs, Statistics::Fermion, 2, BoundSource::Numeric, WitnessForm::Upper, &quick()).unwrap();
    assert!((w.bound() - 0.5).abs() < 1e-9);
    assert_eq!(w.policy().k(), 2);
    assert!(w.min_on_separable_samples(2_000, 2) >= -1e-9);
}

#[test]
fn numeric_bound_fails_when_nothing_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let space = SpaceConfig::new(3, 2).unwrap();
    let h = random_hermitian(&mut rng, 9);
    let problem = SEProblem::new(Observable::dense(space, h).unwrap(), Statistics::Distinguishable, Partition::full(2)).unwrap();
    let opts = BoundOptions { sweep: SweepOptions { max_sweeps: 1, ..SweepOptions::default() }, ..quick() };
    assert!(matches!(
        build_witness(&problem, BoundSource::Numeric, WitnessForm::Upper, &opts),
        Err(Error::AllStartsFailed(_))
    ));
}

#[test]
fn closed_form_is_withheld_where_it_fails() {
    let space = SpaceConfig::new(8, 4).unwrap();
    let obs = Observable::interference(space, Statistics::Fermion).unwrap();
    let problem = SEProblem::new(obs, Statistics::Fermion, "(2,2)".parse().unwrap()).unwrap();
    assert!(matches!(
        build_witness(&problem, BoundSource::Analytic, WitnessForm::Upper, &quick()),
        Err(Error::NoAnalyticBound)
    ));
}
