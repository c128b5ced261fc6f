mod common;

use nmkit::channel::{
    audit_divisibility, intermediate_map, is_completely_positive, MapFamily, Superoperator,
    ViolationKind, AUDIT_CP_TOL,
};
use nmkit::qmat::{trace_distance, ComplexMatrix, DensityMatrix, C64};
use nmkit::tcl::{expm_propagator, LindbladGenerator};

#[test]
fn random_channels_are_cpt_and_contract() {
    let mut rng = common::rng(11);
    for n in [2, 3, 4] {
        for _ in 0..50 {
            let k = common::random_channel(&mut rng, n, 1 + n % 3);
            assert!(k.normalization_error() < 1e-12);
            let s = k.to_super();
            assert!(s.trace_preservation_error() < 1e-12);
            assert!(s.hermiticity_preservation_error() < 1e-12);
            let (cp, min) = is_completely_positive(&s, 1e-12).unwrap();
            assert!(cp, "min Choi eigenvalue {min}");
            let r1 = common::random_state(&mut rng, n);
            let r2 = common::random_state(&mut rng, n);
            let before = trace_distance(&r1, &r2).unwrap();
            let after =
                trace_distance(&s.apply_state(&r1).unwrap(), &s.apply_state(&r2).unwrap()).unwrap();
            assert!(after <= before + 1e-12);
        }
    }
}

#[test]
fn superoperator_agrees_with_kraus_action() {
    let mut rng = common::rng(12);
    let k = common::random_channel(&mut rng, 3, 2);
    let s = k.to_super();
    let a = common::ginibre(&mut rng, 3, 3);
    assert!(s.apply(&a).max_abs_diff(&k.apply(&a)) < 1e-12);
}

#[test]
fn choi_kraus_round_trip() {
    let mut rng = common::rng(13);
    for n in [2, 3] {
        let s = common::random_channel(&mut rng, n, 2).to_super();
        let choi = s.choi();
        assert!((choi.matrix().trace() - C64::new(n as f64, 0.0)).norm() < 1e-12);
        assert!(
            choi.output_marginal()
                .max_abs_diff(&ComplexMatrix::identity(n))
                < 1e-12
        );
        let back = choi.to_kraus(1e-12).unwrap().to_super();
        assert!(back.matrix().max_abs_diff(s.matrix()) < 1e-10);
    }
}

#[test]
fn transpose_is_positive_but_not_cp() {
    let t = Superoperator::transpose_map(2);
    let (cp, min) = is_completely_positive(&t, 1e-12).unwrap();
    assert!(!cp);
    assert!((min + 1.0).abs() < 1e-12);
    // still maps states to states
    let mut rng = common::rng(14);
    let r = common::random_state(&mut rng, 2);
    assert!(DensityMatrix::new(t.apply(r.matrix())).is_ok());
}

#[test]
fn unitary_conjugation_matches_direct_product() {
    let mut rng = common::rng(15);
    let u = common::random_unitary(&mut rng, 3);
    let a = common::ginibre(&mut rng, 3, 3);
    let direct = u.matmul(&a).matmul(&u.adjoint());
    assert!(Superoperator::unitary(&u).apply(&a).max_abs_diff(&direct) < 1e-12);
}

fn semigroup_family(g: &LindbladGenerator, dt: f64, n: usize) -> MapFamily {
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let maps = times
        .iter()
        .map(|&t| expm_propagator(g, t).unwrap())
        .collect();
    MapFamily::new(times, maps).unwrap()
}

#[test]
fn semigroups_are_divisible() {
    let mut rng = common::rng(16);
    for _ in 0..5 {
        let h = common::random_hermitian(&mut rng, 2);
        let ops = vec![
            (0.7, common::ginibre(&mut rng, 2, 2)),
            (0.2, common::ginibre(&mut rng, 2, 2)),
        ];
        let g = LindbladGenerator::new(h, ops).unwrap();
        let fam = semigroup_family(&g, 0.05, 40);
        assert!(audit_divisibility(&fam, AUDIT_CP_TOL).unwrap().is_empty());
        // Φ(t3, t1) = Φ(t3, t2) Φ(t2, t1)
        let a = intermediate_map(&fam, 5, 30).unwrap();
        let b = intermediate_map(&fam, 17, 30)
            .unwrap()
            .compose(&intermediate_map(&fam, 5, 17).unwrap());
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-9);
    }
}

#[test]
fn negative_rate_interval_is_flagged() {
    // Decay at rate γ(t) = 1 except on [1, 1.5) where it is −1: the
    // intermediate maps there amplify the excited population.
    let dt = 0.01;
    let n = 300;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let mut integral = 0.0;
    let mut maps = vec![Superoperator::identity(2)];
    for k in 1..n {
        let t = times[k - 1];
        integral += if (1.0..1.5).contains(&(t + 1e-12)) {
            -1.0
        } else {
            1.0
        } * dt;
        let g = (-0.5 * integral).exp();
        maps.push(nmkit::adc::map_at(C64::new(g, 0.0)).unwrap());
    }
    let fam = MapFamily::new(times, maps).unwrap();
    let v = audit_divisibility(&fam, AUDIT_CP_TOL).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::NotCompletelyPositive);
    assert!((v[0].start - 1.0).abs() <= dt + 1e-9);
    assert!((v[0].end - 1.5).abs() <= dt + 1e-9);
}

#[test]
fn singular_maps_are_reported_separately() {
    let times = vec![0.0, 0.1, 0.2, 0.3];
    let dep = Superoperator::completely_depolarizing(2);
    let maps = vec![Superoperator::identity(2), dep.clone(), dep.clone(), dep];
    let fam = MapFamily::new(times, maps).unwrap();
    let v = audit_divisibility(&fam, AUDIT_CP_TOL).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Singular);
    assert_eq!(v[0].min_choi_eigenvalue, None);
}
