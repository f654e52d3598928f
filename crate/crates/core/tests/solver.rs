//! End-to-end behaviour of the subspace solver: known radii, agreement with
//! the dense oracle, maximizer quality against a fine reference grid,
//! determinism, and budget handling.

use stabrad::{
    compute_radius, compute_radius_detailed, dense_radius, full_mu_sample, generate_problem,
    maximize_mu, verify_interpolation, AMatrix, MuConfig, OracleConfig, ProblemKind,
    ProblemParams, SolverConfig, StateSpaceSystem,
};

fn scalar_system() -> StateSpaceSystem {
    StateSpaceSystem::new(
        AMatrix::Dense(nalgebra::dmatrix![-1.0]),
        nalgebra::dmatrix![1.0],
        nalgebra::dmatrix![1.0],
    )
    .unwrap()
}

fn rotation_system() -> StateSpaceSystem {
    // normal matrix with eigenvalues −1 ± 2i; the nearest real destabilizing
    // perturbation is the identity, so the radius is exactly 1 at ω = 2
    StateSpaceSystem::new(
        AMatrix::Dense(nalgebra::dmatrix![-1.0, -2.0; 2.0, -1.0]),
        nalgebra::DMatrix::identity(2, 2),
        nalgebra::DMatrix::identity(2, 2),
    )
    .unwrap()
}

fn quick_oracle() -> OracleConfig {
    OracleConfig {
        omega_grid_points: 800,
        gamma_grid_points: 120,
        refine_iters: 50,
        ..Default::default()
    }
}

#[test]
fn scalar_radius_is_one_within_two_iterations() {
    let result = compute_radius(&scalar_system(), &SolverConfig::default()).unwrap();
    assert!(result.converged);
    assert!(result.history.len() <= 2, "history: {:?}", result.history);
    assert_eq!(result.radius, 1.0);
    assert_eq!(result.omega_star, 0.0);
}

#[test]
fn rotation_radius_is_one_at_omega_two() {
    let result = compute_radius(&rotation_system(), &SolverConfig::default()).unwrap();
    assert!(result.converged);
    assert!((result.radius - 1.0).abs() <= 1e-6, "radius {}", result.radius);
    assert!((result.omega_star - 2.0).abs() <= 1e-3, "ω* {}", result.omega_star);

    let oracle = dense_radius(&rotation_system(), &quick_oracle()).unwrap();
    assert!((result.radius - oracle.radius).abs() <= 1e-3 * oracle.radius);
}

#[test]
fn random_mimo_agrees_with_the_dense_oracle() {
    for seed in [2u64, 9, 14] {
        let sys = generate_problem(
            ProblemKind::RandomStable,
            &ProblemParams {
                n: 30,
                m: 2,
                p: 2,
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let fast = compute_radius(&sys, &SolverConfig::default()).unwrap();
        let slow = dense_radius(&sys, &quick_oracle()).unwrap();
        let rel = (fast.radius - slow.radius).abs() / slow.radius;
        assert!(
            rel <= 1e-3,
            "seed {seed}: subspace {} vs oracle {} (rel {rel:.2e})",
            fast.radius,
            slow.radius
        );
    }
}

#[test]
fn absorbed_points_interpolate_after_a_converged_solve() {
    let sys = generate_problem(
        ProblemKind::RandomStable,
        &ProblemParams {
            n: 30,
            m: 2,
            p: 2,
            seed: 4,
            ..Default::default()
        },
    )
    .unwrap();
    let detail = compute_radius_detailed(&sys, &SolverConfig::default()).unwrap();
    assert!(detail.result.converged);
    let points = detail.reduced.interpolation_points.clone();
    assert!(!points.is_empty());
    for omega in points {
        let d = verify_interpolation(&sys, &detail.reduced, omega, &MuConfig::default()).unwrap();
        assert!(d.h_residual <= 1e-9, "ω {omega}: H residual {}", d.h_residual);
        assert!(d.mu_diff() <= 1e-7, "ω {omega}: μ diff {}", d.mu_diff());
    }
}

#[test]
fn maximizer_is_no_worse_than_a_fine_grid() {
    let sys = generate_problem(
        ProblemKind::RandomStable,
        &ProblemParams {
            n: 30,
            m: 2,
            p: 2,
            seed: 27,
            ..Default::default()
        },
    )
    .unwrap();
    let omega_max = 20.0;
    let cfg = SolverConfig {
        omega_max: Some(omega_max),
        ..Default::default()
    };
    let mu_cfg = cfg.mu_config();
    let (_, mu_hat) =
        maximize_mu(|w| full_mu_sample(&sys, w, &mu_cfg), omega_max, &cfg).unwrap();

    let grid_points = 4000;
    let mut grid_best = f64::NEG_INFINITY;
    for i in 0..grid_points {
        let w = omega_max * i as f64 / (grid_points - 1) as f64;
        if let Ok(s) = full_mu_sample(&sys, w, &mu_cfg) {
            grid_best = grid_best.max(s.mu);
        }
    }
    assert!(
        mu_hat >= grid_best - 1e-6 * grid_best.abs().max(1e-30),
        "maximizer {mu_hat} below grid reference {grid_best}"
    );
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let sys = generate_problem(
        ProblemKind::RandomStable,
        &ProblemParams {
            n: 24,
            m: 2,
            p: 3,
            seed: 77,
            ..Default::default()
        },
    )
    .unwrap();
    let first = compute_radius(&sys, &SolverConfig::default()).unwrap();
    let second = compute_radius(&sys, &SolverConfig::default()).unwrap();
    assert_eq!(first.radius.to_bits(), second.radius.to_bits());
    assert_eq!(first.history.len(), second.history.len());
    for (a, b) in first.history.iter().zip(&second.history) {
        assert_eq!(a.k, b.k);
        assert_eq!(a.omega_next.to_bits(), b.omega_next.to_bits());
        assert_eq!(a.gamma_at_opt.to_bits(), b.gamma_at_opt.to_bits());
        assert_eq!(a.mu_k.to_bits(), b.mu_k.to_bits());
        assert_eq!(a.r_k.to_bits(), b.r_k.to_bits());
        assert_eq!(a.basis_dim, b.basis_dim);
        assert_eq!(a.wall_time.to_bits(), b.wall_time.to_bits());
    }
}

#[test]
fn zero_iteration_budget_stops_after_initialization() {
    let cfg = SolverConfig {
        k_max: 0,
        ..Default::default()
    };
    let result = compute_radius(&rotation_system(), &cfg).unwrap();
    assert!(!result.converged);
    assert_eq!(result.history.len(), 1);
    assert!(result.radius > 0.0);
}

#[test]
fn peak_at_the_range_boundary_raises_a_warning() {
    let cfg = SolverConfig {
        omega_max: Some(2.0),
        ..Default::default()
    };
    let result = compute_radius(&rotation_system(), &cfg).unwrap();
    assert!(
        result.warnings.iter().any(|w| w.contains("omega_max")),
        "warnings: {:?}",
        result.warnings
    );
}

#[test]
fn sparse_and_dense_backends_reach_the_same_radius() {
    let params = ProblemParams {
        n: 400,
        m: 2,
        p: 2,
        seed: 8,
        ..Default::default()
    };
    let sparse = generate_problem(ProblemKind::ConvectionDiffusion1d, &params).unwrap();
    assert!(matches!(sparse.a(), AMatrix::Sparse(_)));
    let dense = StateSpaceSystem::new(
        AMatrix::Dense(sparse.a().to_dense()),
        sparse.b().clone(),
        sparse.c().clone(),
    )
    .unwrap();

    let cfg = SolverConfig::default();
    let rs = compute_radius(&sparse, &cfg).unwrap();
    let rd = compute_radius(&dense, &cfg).unwrap();
    assert!(rs.converged && rd.converged);
    let rel = (rs.radius - rd.radius).abs() / rd.radius;
    assert!(rel <= 1e-6, "sparse {} vs dense {} (rel {rel:.2e})", rs.radius, rd.radius);
}
