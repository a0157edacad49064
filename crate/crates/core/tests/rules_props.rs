mod common;

use common::{oracle_propagator, rng, sandwich};
use fpf_core::contour::HamiltonianSchedule;
use fpf_core::histories::BasisSet;
use fpf_core::linalg::{Operator, StateVector, NORM_TOL};
use fpf_core::rules::{
    abl_probability, crossing_two_state, multiple_time_amplitude, two_state_btfp, weak_value,
    PrePostSelection,
};
use fpf_core::sampling::{random_basis, random_hermitian, random_schedule, random_state};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn selection(r: &mut ChaCha8Rng, dim: usize) -> PrePostSelection {
    let s = random_schedule(dim, 3, 0.0, r);
    let (psi, phi) = (random_state(dim, r), random_state(dim, r));
    PrePostSelection::new(psi, s.start(), phi, s.end(), s).unwrap()
}

fn window(r: &mut ChaCha8Rng, sel: &PrePostSelection) -> f64 {
    r.random_range(sel.t1()..=sel.t2())
}

#[test]
fn identity_evolution_examples() {
    let labels: Vec<String> = vec!["0".into(), "1".into()];
    let s = HamiltonianSchedule::free(2, vec![0.0, 1.0]).unwrap();
    let comp = BasisSet::computational(&labels).unwrap();
    let zero = StateVector::basis(2, 0).unwrap();
    let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();

    let sel = PrePostSelection::new(zero.clone(), 0.0, zero.clone(), 1.0, s.clone()).unwrap();
    assert_eq!(abl_probability(&sel, &comp, 0.5).unwrap(), vec![1.0, 0.0]);

    let sel = PrePostSelection::new(plus.clone(), 0.0, zero.clone(), 1.0, s.clone()).unwrap();
    let p = abl_probability(&sel, &comp, 0.5).unwrap();
    assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);

    let proj_one = Operator::projector(&StateVector::basis(2, 1).unwrap());
    let sel = PrePostSelection::new(zero, 0.0, plus, 1.0, s).unwrap();
    assert!(weak_value(&sel, &proj_one, 0.5).unwrap().norm() < 1e-15);
}

#[test]
fn tilted_post_selection_amplifies() {
    let s = HamiltonianSchedule::free(2, vec![0.0, 1.0]).unwrap();
    let psi = StateVector::from_real(&[1.0, 1.0]).unwrap();
    for eps in [0.3, 0.1, 0.01] {
        let b = -std::f64::consts::FRAC_PI_4 + eps;
        let phi = StateVector::from_real(&[b.cos(), b.sin()]).unwrap();
        let sel = PrePostSelection::new(psi.clone(), 0.0, phi, 1.0, s.clone()).unwrap();
        let w = weak_value(&sel, &Operator::pauli_z(), 0.5).unwrap();
        // closed form cos(ε)/sin(ε)
        assert!((w.re - 1.0 / eps.tan()).abs() < 1e-9 / eps);
        assert!(w.re.abs() > 1.0);
    }
}

#[test]
fn crossing_differs_under_nontrivial_dynamics() {
    let s = HamiltonianSchedule::constant(Operator::pauli_y(), 0.0, 2.0).unwrap();
    let sel = PrePostSelection::new(
        StateVector::basis(2, 0).unwrap(),
        0.0,
        StateVector::from_real(&[1.0, 2.0]).unwrap(),
        2.0,
        s,
    )
    .unwrap();
    let b = two_state_btfp(&sel, 0.5, 1.5).unwrap();
    let c = crossing_two_state(&sel, 0.5, 1.5).unwrap();
    assert!(b.bra.state != c.bra.state && b.ket.state != c.ket.state);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn abl_normalizes_and_matches_direct_formula(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let sel = selection(&mut r, dim);
        let basis = random_basis(dim, &mut r);
        let t = window(&mut r, &sel);
        let p = abl_probability(&sel, &basis, t).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < NORM_TOL);
        let (u1, u2) = (oracle_propagator(sel.schedule(), sel.t1(), t), oracle_propagator(sel.schedule(), t, sel.t2()));
        let w: Vec<f64> = basis.states().map(|n| (sandwich(sel.post(), &u2, n) * sandwich(n, &u1, sel.pre())).norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        for (a, b) in p.iter().zip(&w) {
            prop_assert!((a - b / total).abs() < 1e-10);
        }
    }

    #[test]
    fn abl_is_time_symmetric(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng(seed);
        let sel = selection(&mut r, dim);
        let basis = random_basis(dim, &mut r);
        let t = window(&mut r, &sel);
        let rev = sel.reversed().unwrap();
        let p = abl_probability(&sel, &basis, t).unwrap();
        let q = abl_probability(&rev, &basis, sel.mirror_time(t)).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn abl_equals_chain_amplitudes(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng(seed);
        let sel = selection(&mut r, dim);
        let basis = random_basis(dim, &mut r);
        let t = r.random_range(sel.t1()..sel.t2());
        prop_assume!(t > sel.t1());
        let nums: Vec<f64> = basis.states().map(|n| {
            multiple_time_amplitude(&[(sel.t1(), sel.pre().clone()), (t, n.clone()), (sel.t2(), sel.post().clone())], sel.schedule())
                .unwrap().norm_sqr()
        }).collect();
        let total: f64 = nums.iter().sum();
        for (p, n) in abl_probability(&sel, &basis, t).unwrap().iter().zip(&nums) {
            prop_assert!((p - n / total).abs() < 1e-10);
        }
    }

    #[test]
    fn weak_value_is_linear(seed in any::<u64>(), dim in 2usize..=6, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let sel = selection(&mut r, dim);
        let t = window(&mut r, &sel);
        let (o1, o2) = (random_hermitian(dim, &mut r), random_hermitian(dim, &mut r));
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let combo = o1.scale(ca).add(&o2.scale(cb)).unwrap();
        let lhs = weak_value(&sel, &combo, t).unwrap();
        let rhs = ca * weak_value(&sel, &o1, t).unwrap() + cb * weak_value(&sel, &o2, t).unwrap();
        let scale = 1.0 + lhs.norm();
        prop_assert!((lhs - rhs).norm() < 1e-10 * scale);
    }

    #[test]
    fn weak_value_of_identity_is_one(seed in any::<u64>(), dim in 1usize..=8) {
        let mut r = rng(seed);
        let sel = selection(&mut r, dim);
        let t = window(&mut r, &sel);
        prop_assert_eq!(weak_value(&sel, &Operator::identity(dim), t).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn trivial_post_selection_gives_expectation(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng(seed);
        let s = random_schedule(dim, 3, 0.0, &mut r);
        let psi = random_state(dim, &mut r);
        let phi = s.propagator(s.start(), s.end()).unwrap().evolve(&psi).unwrap();
        let sel = PrePostSelection::new(psi.clone(), s.start(), phi, s.end(), s.clone()).unwrap();
        let t = window(&mut r, &sel);
        let o = random_hermitian(dim, &mut r);
        let w = weak_value(&sel, &o, t).unwrap();
        let u = oracle_propagator(&s, s.start(), t);
        let psi_t = StateVector::from_ket(&u * common::ket(&psi), psi.labels().to_vec()).unwrap();
        let expectation = sandwich(&psi_t, o.matrix(), &psi_t);
        prop_assert!(w.im.abs() < 1e-10);
        prop_assert!((w.re - expectation.re).abs() < 1e-10);
    }

    #[test]
    fn btfp_and_crossing_coincide_at_one_time(seed in any::<u64>(), dim in 1usize..=5) {
        let mut r = rng(seed);
        let sel = selection(&mut r, dim);
        let t = window(&mut r, &sel);
        let b = two_state_btfp(&sel, t, t).unwrap();
        let c = crossing_two_state(&sel, t, t).unwrap();
        prop_assert!(b.deviation(&c) < 1e-15);
    }
}
