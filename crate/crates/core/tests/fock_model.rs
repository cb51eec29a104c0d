use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spinqed::fock::{
    build_hamiltonian, build_mode_grid, discrete_am, discrete_kernel, fock_ground_state, ground_state,
    multiplicity_scan, photon_number, EigenOptions, DEFAULT_N_ANGULAR, DEFAULT_N_RADIAL,
};
use spinqed::spin_algebra::CMatrix;
use spinqed::spin_operator::{assemble_am, random_unit};
use spinqed::{CutoffProfile, Spin, SpinSystem};

fn unit() -> CutoffProfile {
    CutoffProfile::gaussian(1.0).unwrap()
}

fn pair() -> SpinSystem {
    SpinSystem::new(Spin::HALF, vec![[0.0; 3], [0.7, 0.2, -0.4]], vec![1.0, 0.8]).unwrap()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn discrete_operator_converges_to_the_continuum() {
    let p = unit();
    let sys = pair();
    let exact = assemble_am(&sys, &p).unwrap();
    let scale = max_abs(&exact.matrix);
    let devs: Vec<f64> = [(8, 6), (10, 8), (DEFAULT_N_RADIAL, DEFAULT_N_ANGULAR), (20, 12)]
        .iter()
        .map(|&(r, a)| {
            let g = build_mode_grid(&p, r, a).unwrap();
            max_abs(&(&discrete_am(&sys, &p, &g).unwrap().matrix - &exact.matrix)) / scale
        })
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    assert!(devs[2] <= 1e-3, "{devs:?}");
}

#[test]
fn discrete_operator_special_cases() {
    let p = unit();
    let g = build_mode_grid(&p, 6, 6).unwrap();
    let zero = discrete_am(&pair().scaled(0.0), &p, &g).unwrap();
    assert_eq!(max_abs(&zero.matrix), 0.0);
    let m = 1.4;
    let single = SpinSystem::new(Spin::HALF, vec![[0.3, 0.1, 0.0]], vec![m]).unwrap();
    let a = discrete_am(&single, &p, &g).unwrap();
    let k11 = discrete_kernel(&p, &g, [0.0; 3]).unwrap()[0][0];
    let target = CMatrix::identity(2, 2) * Complex64::new(-1.5 * k11 * m * m, 0.0);
    assert!(max_abs(&(&a.matrix - target)) < 1e-15);
}

#[test]
fn lanczos_agrees_with_dense_diagonalization() {
    let p = unit();
    let g = build_mode_grid(&p, 2, 6).unwrap();
    let sys = pair().scaled(0.6);
    let h = build_hamiltonian(&sys, &p, &g, 1).unwrap();
    let dense = h.to_dense().unwrap();
    let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let opts = EigenOptions { k_pairs: 4, ..EigenOptions::default() };
    let r = fock_ground_state(&h, &opts).unwrap();
    let mut got = r.energies.clone();
    got.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&ev) {
        assert!((a - b).abs() < 1e-10, "{got:?} vs {:?}", &ev[..4]);
    }
    assert!(r.residuals.iter().all(|&x| x <= opts.tol));
    // a random start reaches the same bottom
    let r2 = ground_state(&h, &EigenOptions { k_pairs: 1, ..opts }, None).unwrap();
    assert!((r2.energies[0] - ev[0]).abs() < 1e-10);
}

#[test]
fn free_field_ground_sector() {
    let p = unit();
    let g = build_mode_grid(&p, 3, 6).unwrap();
    let h = build_hamiltonian(&pair().scaled(0.0), &p, &g, 2).unwrap();
    let r = fock_ground_state(&h, &EigenOptions::default()).unwrap();
    for (e, v) in r.energies.iter().zip(&r.vectors) {
        assert!(e.abs() <= 1e-12);
        assert!(photon_number(h.space(), v).unwrap() <= 1e-20);
    }
}

#[test]
fn vacuum_expectation_is_zero_for_random_states() {
    let p = unit();
    let g = build_mode_grid(&p, 3, 6).unwrap();
    let h = build_hamiltonian(&pair(), &p, &g, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let x = random_unit(&mut rng, 4);
        let v = h.space().vacuum_tensor(&x).unwrap();
        assert_eq!(v.dotc(&h.apply(&v)).norm(), 0.0);
    }
}

#[test]
fn single_spin_ground_state_is_a_kramers_pair() {
    let p = unit();
    let g = build_mode_grid(&p, 6, 6).unwrap();
    let single = SpinSystem::new(Spin::HALF, vec![[0.0; 3]], vec![1.0]).unwrap();
    let rows = multiplicity_scan(&single, &p, &g, 1, &[0.3, 0.1], 1e-7, &EigenOptions::default()).unwrap();
    for r in &rows {
        assert_eq!(r.h_multiplicity, 2, "{r:?}");
        assert_eq!(r.a1_multiplicity, 2);
        assert!(r.bound_holds());
    }
    assert!(rows[1].min_overlap() > rows[0].min_overlap());
}

#[test]
fn oversized_spaces_are_refused() {
    let p = unit();
    let g = build_mode_grid(&p, 14, 8).unwrap();
    let err = build_hamiltonian(&pair(), &p, &g, 2).unwrap_err();
    assert!(matches!(err, spinqed::Error::Resource { .. }), "{err}");
}
