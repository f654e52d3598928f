//! Interpolation guarantees of the projected systems: at every absorbed
//! frequency the reduced transfer function matches the full one to second
//! order, so σ₁..σ₃ of the realified block, μ, γ*, μ′, and a finite-difference
//! μ″ all coincide there.

use stabrad::{
    assemble_t, expansion_block, extend_orthonormal, generate_problem, project, sigma_top3,
    verify_interpolation, MuConfig, ProblemKind, ProblemParams, StateSpaceSystem, SubspaceBasis,
};

fn test_system(n: usize, m: usize, p: usize, seed: u64) -> StateSpaceSystem {
    generate_problem(
        ProblemKind::RandomStable,
        &ProblemParams {
            n,
            m,
            p,
            seed,
            ..Default::default()
        },
    )
    .unwrap()
}

fn basis_through(sys: &StateSpaceSystem, points: &[f64]) -> SubspaceBasis {
    let mut basis = SubspaceBasis::empty(sys.n(), 1e-12);
    for &omega in points {
        let block = expansion_block(sys, omega).unwrap();
        basis = extend_orthonormal(&basis, &block, omega);
    }
    basis
}

#[test]
fn hermite_match_at_absorbed_frequencies() {
    let sys = test_system(40, 2, 2, 11);
    let points = [0.4, 1.9, 5.2];
    let basis = basis_through(&sys, &points);
    let red = project(&sys, &basis);
    let cfg = MuConfig::default();

    for &omega in &points {
        let d = verify_interpolation(&sys, &red, omega, &cfg).unwrap();
        assert!(d.h_residual <= 1e-10, "ω {omega}: H residual {}", d.h_residual);
        assert!(d.h1_residual <= 1e-8, "ω {omega}: H′ residual {}", d.h1_residual);
        assert!(d.h2_residual <= 1e-6, "ω {omega}: H″ residual {}", d.h2_residual);
        assert!(
            d.mu_diff() <= 1e-8,
            "ω {omega}: μ mismatch {} ({} vs {})",
            d.mu_diff(),
            d.mu_full,
            d.mu_reduced
        );
        assert!(
            d.gamma_star_diff() <= 1e-6,
            "ω {omega}: γ* mismatch {}",
            d.gamma_star_diff()
        );
        if let Some(dd) = d.mu_derivative_diff() {
            assert!(dd <= 1e-7, "ω {omega}: μ′ mismatch {dd}");
        }
        if let Some(f) = d.fd_second_diff() {
            assert!(f <= 1e-4, "ω {omega}: FD μ″ mismatch {f}");
        }
    }
}

#[test]
fn singular_triplets_match_across_gamma_at_absorbed_points() {
    let sys = test_system(30, 2, 3, 47);
    let points = [0.8, 3.1];
    let basis = basis_through(&sys, &points);
    let red = project(&sys, &basis);

    for &omega in &points {
        let full = sys.eval_transfer(omega, 1).unwrap();
        let reduced = stabrad::eval_reduced_transfer(&red, omega, 1).unwrap();
        for i in 0..20 {
            let gamma = 1e-4 + (1.0 - 1e-4) * i as f64 / 19.0;
            let tf = sigma_top3(&assemble_t(&full.h0, gamma, 1e-8).unwrap()).unwrap();
            let tr = sigma_top3(&assemble_t(&reduced.h0, gamma, 1e-8).unwrap()).unwrap();
            let scale = tf.s1.max(1e-300);
            assert!(
                (tf.s1 - tr.s1).abs() <= 1e-8 * scale,
                "ω {omega} γ {gamma}: σ₁ {} vs {}",
                tf.s1,
                tr.s1
            );
            assert!((tf.s2 - tr.s2).abs() <= 1e-8 * scale, "ω {omega} γ {gamma}: σ₂");
            assert!((tf.s3 - tr.s3).abs() <= 1e-8 * scale, "ω {omega} γ {gamma}: σ₃");
        }
    }
}

#[test]
fn interpolation_survives_later_expansions() {
    // absorbing a second and third frequency must not disturb the match at
    // the first one
    let sys = test_system(36, 1, 2, 5);
    let cfg = MuConfig::default();
    let first = 1.3;

    let mut basis = basis_through(&sys, &[first]);
    for &next in &[4.0, 0.2] {
        let block = expansion_block(&sys, next).unwrap();
        basis = extend_orthonormal(&basis, &block, next);
        let red = project(&sys, &basis);
        let d = verify_interpolation(&sys, &red, first, &cfg).unwrap();
        assert!(
            d.h_residual <= 1e-10 && d.mu_diff() <= 1e-8,
            "after absorbing {next}: H res {} μ diff {}",
            d.h_residual,
            d.mu_diff()
        );
    }
}

#[test]
fn basis_dimension_grows_by_at_most_three_m() {
    let sys = test_system(50, 3, 2, 88);
    let mut basis = SubspaceBasis::empty(sys.n(), 1e-12);
    let mut prev = 0;
    for &omega in &[0.5, 2.0, 4.5, 7.0] {
        let block = expansion_block(&sys, omega).unwrap();
        basis = extend_orthonormal(&basis, &block, omega);
        assert!(basis.dim() <= prev + 3 * sys.m());
        assert!(basis.dim() > prev, "expansion at {omega} added nothing");
        prev = basis.dim();
    }
    assert_eq!(basis.generation(), 4);
}

#[test]
fn reduced_spectrum_stays_left_of_the_full_abscissa_bound() {
    // projection cannot manufacture eigenvalues arbitrarily far right:
    // the reduced Rayleigh quotients live in the field of values of A
    let sys = test_system(25, 1, 1, 3);
    let basis = basis_through(&sys, &[0.0, 2.5]);
    let red = project(&sys, &basis);
    let a = sys.a().to_dense();
    let sym = (&a + a.transpose()) * 0.5;
    let full_bound = sym.symmetric_eigenvalues().max();
    // realify A_V: the 2d×2d [[Re, −Im],[Im, Re]] carries the same spectrum
    // together with its conjugates, so the real parts are unchanged
    let d = red.dim();
    let realified = nalgebra::DMatrix::<f64>::from_fn(2 * d, 2 * d, |i, j| {
        let e = red.a_v[(i % d, j % d)];
        match (i >= d, j >= d) {
            (false, false) | (true, true) => e.re,
            (false, true) => -e.im,
            (true, false) => e.im,
        }
    });
    for ev in realified.complex_eigenvalues().iter() {
        assert!(
            ev.re <= full_bound + 1e-10,
            "reduced eigenvalue {ev} beyond numerical-abscissa bound {full_bound}"
        );
    }
}
