mod common;

use common::{jacobi_eigenvalues, max_abs_diff, max_entry_diff};
use finent_core::criteria::{
    extract_pt_witness, ppt_check, pure_projector_bound, realignment_check, schmidt_decompose, seesaw_fab,
    spectral_decompose, Certificate, SeesawConfig, DEFAULT_TOL_DETECT,
};
use finent_core::escalate::{truncate, verify_escalating, AnalyticFamily, EscalationConfig, StateProvider};
use finent_core::linalg::{
    c64, eigh, eigvalsh, kron, kron_vec, outer, partial_trace, partial_transpose, realign, svd_values, Bipartition,
    ComplexMatrix, ComplexVector, CompositeIndexMap,
};
use finent_core::rng::{random_density, random_hermitian, random_unit_vector, random_unitary, seeded};
use finent_core::states::{
    format_qstate, gen_separable_random, parse_qstate, validate_density, PureStateVec, QState,
};
use finent_core::CriterionKind;
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs_and_matches_jacobi(seed in any::<u64>(), n in 1usize..=8) {
        let h = random_hermitian(&mut seeded(seed), n);
        let spec = eigh(&h).unwrap();
        let rel = (spec.reconstruct() - &h).norm() / h.norm().max(1e-300);
        prop_assert!(rel <= 1e-10, "reconstruction {rel}");
        let gram = spec.eigenvectors.adjoint() * &spec.eigenvectors;
        prop_assert!((gram - ComplexMatrix::identity(n, n)).norm() <= 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(max_abs_diff(&spec.eigenvalues, &jacobi_eigenvalues(&h)) <= 1e-9);
    }

    #[test]
    fn singular_values_carry_frobenius_norm(seed in any::<u64>(), rows in 1usize..=7, cols in 1usize..=7) {
        let mut rng = seeded(seed);
        let m = ComplexMatrix::from_fn(rows, cols, |_, _| random_unit_vector(&mut rng, 1)[0].scale(1.0 + rows as f64));
        let s = svd_values(&m).unwrap();
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&x| x >= 0.0));
        let sum_sq: f64 = s.iter().map(|x| x * x).sum();
        prop_assert!((sum_sq - m.norm_squared()).abs() <= 1e-10 * m.norm_squared());
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), (da, db) in dims_strategy(), dc in 1usize..=3) {
        let map = CompositeIndexMap::new(vec![da, db, dc]).unwrap();
        let rho = random_density(&mut seeded(seed), map.total());
        for subset in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
            let twice = partial_transpose(&partial_transpose(&rho, &map, &subset).unwrap(), &map, &subset).unwrap();
            prop_assert_eq!(&twice, &rho);
        }
    }

    #[test]
    fn partial_transpose_preserves_trace_and_hermiticity(seed in any::<u64>(), (da, db) in dims_strategy()) {
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        let rho = random_density(&mut seeded(seed), map.total());
        let pt = partial_transpose(&rho, &map, &[1]).unwrap();
        prop_assert!((pt.trace() - rho.trace()).norm() < 1e-14);
        prop_assert!(max_entry_diff(&pt, &pt.adjoint()) < 1e-15);
    }

    #[test]
    fn pt_spectrum_invariant_under_local_unitaries(seed in any::<u64>(), (da, db) in (2usize..=3, 2usize..=3)) {
        let mut rng = seeded(seed);
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        let rho = random_density(&mut rng, map.total());
        let u = kron(&random_unitary(&mut rng, da), &random_unitary(&mut rng, db));
        let rotated = &u * &rho * u.adjoint();
        let a = eigvalsh(&partial_transpose(&rho, &map, &[1]).unwrap()).unwrap();
        let b = eigvalsh(&(partial_transpose(&rotated, &map, &[1]).unwrap())).unwrap();
        prop_assert!(max_abs_diff(&a, &b) <= 1e-9);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), (da, db) in dims_strategy()) {
        let mut rng = seeded(seed);
        let a = random_hermitian(&mut rng, da);
        let b = random_hermitian(&mut rng, db);
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        let reduced = partial_trace(&kron(&a, &b), &map, &[0]).unwrap();
        prop_assert!(max_entry_diff(&reduced, &a.scale(b.trace().re)) <= 1e-12);
        let other = partial_trace(&kron(&a, &b), &map, &[1]).unwrap();
        prop_assert!(max_entry_diff(&other, &b.scale(a.trace().re)) <= 1e-12);
    }

    #[test]
    fn realigned_pure_product_has_one_unit_singular_value(seed in any::<u64>(), (da, db) in dims_strategy()) {
        let mut rng = seeded(seed);
        let a = random_unit_vector(&mut rng, da);
        let b = random_unit_vector(&mut rng, db);
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        let s = svd_values(&realign(&kron(&outer(&a), &outer(&b)), &map).unwrap()).unwrap();
        prop_assert!((s[0] - 1.0).abs() <= 1e-10);
        prop_assert!(s[1..].iter().all(|&x| x <= 1e-10));
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_hermitian(&mut rng, 2) + random_unitary(&mut rng, 2);
        let b = random_hermitian(&mut rng, 3) + random_unitary(&mut rng, 3);
        let u = random_unit_vector(&mut rng, 2);
        let v = random_unit_vector(&mut rng, 3);
        // direct evaluation of (A (x) B)(u (x) v) entry by entry
        let lhs = kron(&a, &b) * kron_vec(&u, &v);
        let au = &a * &u;
        let bv = &b * &v;
        for i in 0..2 {
            for k in 0..3 {
                prop_assert!((lhs[i * 3 + k] - au[i] * bv[k]).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_reconstructs_random_states(seed in any::<u64>(), (da, db) in (1usize..=4, 1usize..=4)) {
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        let psi = PureStateVec::new(map, random_unit_vector(&mut seeded(seed), da * db)).unwrap();
        let sd = schmidt_decompose(&psi, &Bipartition::bipartite()).unwrap();
        let sum_sq: f64 = sd.coefficients.iter().map(|x| x * x).sum();
        prop_assert!((sum_sq - 1.0).abs() <= 1e-10);
        prop_assert!((sd.reconstruct() - psi.amplitudes()).norm() <= 1e-10);
        for family in [&sd.left, &sd.right] {
            for (i, x) in family.iter().enumerate() {
                for (j, y) in family.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((x.dotc(y) - c64(expected, 0.0)).norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn truncation_is_compatible(seed in any::<u64>(), big in 2usize..=5, small in 1usize..=5) {
        let small = small.min(big);
        let e = gen_separable_random(3, &[3, 4], seed).unwrap();
        let family = StateProvider::Family(AnalyticFamily::Separable(e.clone()));
        let wide = truncate(&family, &[big, big]).unwrap();
        let finite = StateProvider::Finite(wide.reduced.clone());
        let twice = truncate(&finite, &[small, small]).unwrap();
        let once = truncate(&family, &[small, small]).unwrap();
        prop_assert!(max_entry_diff(twice.reduced.matrix(), once.reduced.matrix()) <= 1e-12);

        // assembling then truncating equals truncating then assembling
        let dims = [small.min(3), small.min(4)];
        let assembled = StateProvider::Finite(e.assemble());
        let a = truncate(&assembled, &dims).unwrap();
        let b = e.assemble_at(&dims).unwrap();
        prop_assert!(max_entry_diff(a.reduced.matrix(), b.matrix()) <= 1e-12);
    }

    #[test]
    fn qstate_roundtrip_is_lossless(seed in any::<u64>(), (da, db) in dims_strategy()) {
        let mut rng = seeded(seed);
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        let rho = validate_density(random_density(&mut rng, map.total()), map.clone()).unwrap();
        let back = parse_qstate(&format_qstate(&QState::Density(rho.clone()))).unwrap();
        prop_assert!(max_entry_diff(back.to_density().matrix(), rho.matrix()) <= 1e-15);

        let psi = PureStateVec::new(map, random_unit_vector(&mut rng, da * db).scale(0.7)).unwrap();
        let QState::Pure(back) = parse_qstate(&format_qstate(&QState::Pure(psi.clone()))).unwrap() else {
            panic!("kind changed");
        };
        prop_assert_eq!(back.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn ppt_verdict_survives_scaling(seed in any::<u64>(), c in 0.1f64..=1.0) {
        let mut rng = seeded(seed);
        let map = CompositeIndexMap::new(vec![2, 3]).unwrap();
        let psi = random_unit_vector(&mut rng, 6);
        let mixed = outer(&psi).scale(0.6) + random_density(&mut rng, 6).scale(0.4);
        let rho = validate_density(mixed.clone(), map.clone()).unwrap();
        let scaled = validate_density(mixed.scale(c), map).unwrap();
        let p = Bipartition::bipartite();
        let full = ppt_check(&rho, &p, DEFAULT_TOL_DETECT).unwrap();
        let part = ppt_check(&scaled, &p, DEFAULT_TOL_DETECT).unwrap();
        let (m1, m2) = (full.detail("min_eigenvalue").unwrap(), part.detail("min_eigenvalue").unwrap());
        prop_assume!(m1.abs() > 1e-3);
        prop_assert!((m2 - c * m1).abs() <= 1e-12);
        prop_assert_eq!(full.verdict, part.verdict);
    }

    #[test]
    fn ppt_invariant_under_local_unitaries(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let map = CompositeIndexMap::new(vec![3, 3]).unwrap();
        let rho = random_density(&mut rng, 9);
        let u = kron(&random_unitary(&mut rng, 3), &random_unitary(&mut rng, 3));
        let rotated = &u * &rho * u.adjoint();
        let a = ppt_check(&validate_density(rho, map.clone()).unwrap(), &Bipartition::bipartite(), DEFAULT_TOL_DETECT).unwrap();
        let b = ppt_check(&validate_density(rotated, map).unwrap(), &Bipartition::bipartite(), DEFAULT_TOL_DETECT).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9);
        prop_assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn seesaw_objective_never_decreases(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let map = CompositeIndexMap::new(vec![3, 3]).unwrap();
        let h = random_hermitian(&mut rng, 9);
        let cfg = SeesawConfig { restarts: 4, seed, ..SeesawConfig::default() };
        let r = seesaw_fab(&h, &map, &Bipartition::bipartite(), &cfg).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(r.bound <= *eigvalsh(&h).unwrap().last().unwrap() + 1e-10);
    }

    #[test]
    fn pt_witness_sound_on_product_vectors(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let map = CompositeIndexMap::new(vec![2, 3]).unwrap();
        let psi = PureStateVec::new(map, random_unit_vector(&mut rng, 6)).unwrap();
        let rho = psi.projector();
        let p = Bipartition::bipartite();
        prop_assume!(ppt_check(&rho, &p, DEFAULT_TOL_DETECT).unwrap().verdict.is_entangled());
        let w = extract_pt_witness(&rho, &p, DEFAULT_TOL_DETECT).unwrap();
        let pt_min = ppt_check(&rho, &p, DEFAULT_TOL_DETECT).unwrap().detail("min_eigenvalue").unwrap();
        prop_assert!((w.expectation(&rho).unwrap() + pt_min).abs() <= 1e-12);
        for _ in 0..50 {
            let v = kron_vec(&random_unit_vector(&mut rng, 2), &random_unit_vector(&mut rng, 3));
            prop_assert!(finent_core::linalg::expectation(&w.operator, &v) <= 1e-10);
        }
    }
}

#[test]
fn spectral_decomposition_of_mixture_matches_oracle() {
    let map = CompositeIndexMap::uniform(2, 2).unwrap();
    let zero = common::basis(4, 0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi = ComplexVector::from_vec(vec![c64(h, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(h, 0.0)]);
    let m = outer(&zero).scale(0.7) + outer(&phi).scale(0.3);
    let rho = validate_density(m.clone(), map).unwrap();
    let terms = spectral_decompose(&rho).unwrap();
    let oracle: Vec<f64> = jacobi_eigenvalues(&m).into_iter().rev().filter(|&p| p > 1e-12).collect();
    let got: Vec<f64> = terms.iter().map(|t| t.0).collect();
    assert!(max_abs_diff(&got, &oracle) < 1e-12, "{got:?} vs {oracle:?}");
    // closed form 0.5 +- sqrt(0.145)
    assert!((got[0] - (0.5 + 0.145f64.sqrt())).abs() < 1e-12);
    let total: f64 = got.iter().sum();
    assert!((total - rho.trace()).abs() < 1e-10);
}

#[test]
fn schmidt_and_projector_bound_agree_with_seesaw_on_random_3x4() {
    let mut rng = seeded(34);
    let map = CompositeIndexMap::new(vec![3, 4]).unwrap();
    let psi = PureStateVec::new(map.clone(), random_unit_vector(&mut rng, 12)).unwrap();
    let bound = pure_projector_bound(&psi, &Bipartition::bipartite()).unwrap();
    let r = seesaw_fab(&outer(psi.amplitudes()), &map, &Bipartition::bipartite(), &SeesawConfig::default()).unwrap();
    assert!((r.bound - bound).abs() < 1e-8);
}

#[test]
fn grouped_ppt_matches_direct_two_by_four() {
    let mut rng = seeded(99);
    let three = CompositeIndexMap::new(vec![2, 2, 2]).unwrap();
    let two = CompositeIndexMap::new(vec![2, 4]).unwrap();
    let m = random_density(&mut rng, 8);
    let psi = random_unit_vector(&mut rng, 8);
    let m = m.scale(0.3) + outer(&psi).scale(0.7);
    let grouped = ppt_check(
        &validate_density(m.clone(), three).unwrap(),
        &Bipartition::parse("0|1,2", 3).unwrap(),
        DEFAULT_TOL_DETECT,
    )
    .unwrap();
    let direct = ppt_check(&validate_density(m, two).unwrap(), &Bipartition::bipartite(), DEFAULT_TOL_DETECT).unwrap();
    assert!((grouped.value - direct.value).abs() < 1e-12);
}

#[test]
fn realignment_implies_ppt_in_small_dimensions() {
    let mut detected = 0;
    for (da, db) in [(2, 2), (2, 3)] {
        let map = CompositeIndexMap::new(vec![da, db]).unwrap();
        for seed in 0..300u64 {
            let mut rng = seeded(seed);
            let n = da * db;
            let psi = random_unit_vector(&mut rng, n);
            let w = (seed % 10) as f64 / 10.0;
            let m = outer(&psi).scale(w) + random_density(&mut rng, n).scale(1.0 - w);
            let rho = validate_density(m, map.clone()).unwrap();
            let p = Bipartition::bipartite();
            let re = realignment_check(&rho, &p, DEFAULT_TOL_DETECT).unwrap();
            if re.verdict.is_entangled() {
                detected += 1;
                assert!(ppt_check(&rho, &p, DEFAULT_TOL_DETECT).unwrap().verdict.is_entangled(), "seed {seed}");
            }
        }
    }
    assert!(detected > 50, "too few realignment detections ({detected}) to exercise the implication");
}

#[test]
fn certificates_reproduce_their_margin() {
    let cfg = EscalationConfig::default();
    let sources = [
        StateProvider::Family(AnalyticFamily::Chik { k: 2 }),
        StateProvider::Family(AnalyticFamily::Tmsv { lambda: 0.3 }),
        StateProvider::Family(AnalyticFamily::Ghz { modes: 3 }),
    ];
    for src in &sources {
        for criteria in [vec![CriterionKind::Ppt], vec![CriterionKind::Realignment], vec![CriterionKind::Witness]] {
            let cfg = EscalationConfig { criteria, ..cfg.clone() };
            let v = verify_escalating(src, &cfg).unwrap();
            let cert: &Certificate = v.certificate().expect("entangled");
            assert!(cert.margin > 0.0);
            let reduced = truncate(src, &cert.subspace_dims).unwrap().reduced;
            assert!((cert.margin_on(&reduced).unwrap() - cert.margin).abs() < 1e-10);
        }
    }
}

#[test]
fn escalation_is_deterministic() {
    let e = gen_separable_random(6, &[3, 3], 17).unwrap();
    let src = StateProvider::Family(AnalyticFamily::Separable(e));
    let cfg = EscalationConfig { d_start: 1, d_max: 5, ..EscalationConfig::default() };
    assert_eq!(verify_escalating(&src, &cfg).unwrap(), verify_escalating(&src, &cfg).unwrap());
}
