//! Transfer-function evaluation against independent references: conjugate
//! symmetry, finite differences of the derivatives, factorization counting,
//! and sparse/dense backend agreement.

use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use stabrad::{generate_problem, AMatrix, ProblemKind, ProblemParams, StateSpaceSystem};

fn rel_err(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    let num = (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let den = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn random_system(n: usize, m: usize, p: usize, seed: u64) -> StateSpaceSystem {
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

#[test]
fn conjugate_symmetry_across_instances() {
    for seed in [1, 2, 3] {
        let sys = random_system(24, 2, 3, seed);
        for omega in [0.3, 1.7, 6.0] {
            let plus = sys.eval_transfer(omega, 1).unwrap();
            let minus = sys.eval_transfer(-omega, 1).unwrap();
            let conj = plus.h0.map(|z| z.conj());
            assert!(
                rel_err(&minus.h0, &conj) <= 1e-12,
                "seed {seed}, ω {omega}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugate_symmetry_property(
        n in 2usize..16,
        m in 1usize..4,
        p in 1usize..4,
        seed in 0u64..1000,
        omega in 0.01f64..8.0,
    ) {
        let sys = random_system(n, m, p, seed);
        let plus = sys.eval_transfer(omega, 1).unwrap();
        let minus = sys.eval_transfer(-omega, 1).unwrap();
        let conj = plus.h0.map(|z| z.conj());
        prop_assert!(rel_err(&minus.h0, &conj) <= 1e-12);
    }
}

#[test]
fn first_derivative_matches_finite_differences() {
    let sys = random_system(20, 2, 2, 7);
    let h = 1e-5;
    for omega in [0.4, 1.1, 3.3] {
        let center = sys.eval_transfer(omega, 2).unwrap();
        let plus = sys.eval_transfer(omega + h, 1).unwrap();
        let minus = sys.eval_transfer(omega - h, 1).unwrap();
        let fd = (&plus.h0 - &minus.h0) / Complex::new(2.0 * h, 0.0);
        let err = rel_err(&fd, center.h1.as_ref().unwrap());
        assert!(err <= 1e-6, "ω {omega}: relative error {err}");
    }
}

#[test]
fn second_derivative_matches_finite_differences() {
    let sys = random_system(20, 2, 2, 8);
    let h = 1e-5;
    for omega in [0.6, 2.2] {
        let center = sys.eval_transfer(omega, 3).unwrap();
        let plus = sys.eval_transfer(omega + h, 2).unwrap();
        let minus = sys.eval_transfer(omega - h, 2).unwrap();
        let fd = (plus.h1.unwrap() - minus.h1.unwrap()) / Complex::new(2.0 * h, 0.0);
        let err = rel_err(&fd, center.h2.as_ref().unwrap());
        assert!(err <= 1e-6, "ω {omega}: relative error {err}");
    }
}

#[test]
fn order_three_costs_one_factorization() {
    let sys = random_system(20, 2, 2, 9);
    let before = sys.factorization_count();
    sys.eval_transfer(1.5, 3).unwrap();
    assert_eq!(sys.factorization_count(), before + 1);
    sys.eval_transfer(2.5, 1).unwrap();
    assert_eq!(sys.factorization_count(), before + 2);
}

#[test]
fn sparse_and_dense_backends_agree() {
    let sparse = generate_problem(
        ProblemKind::ConvectionDiffusion1d,
        &ProblemParams {
            n: 60,
            m: 2,
            p: 2,
            seed: 4,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(sparse.is_sparse());
    let dense = StateSpaceSystem::new(
        AMatrix::Dense(sparse.a().to_dense()),
        sparse.b().clone(),
        sparse.c().clone(),
    )
    .unwrap();
    for omega in [0.0, 0.9, 14.0] {
        let s = sparse.eval_transfer(omega, 3).unwrap();
        let d = dense.eval_transfer(omega, 3).unwrap();
        assert!(rel_err(&s.h0, &d.h0) <= 1e-12, "H at ω {omega}");
        assert!(
            rel_err(s.h1.as_ref().unwrap(), d.h1.as_ref().unwrap()) <= 1e-12,
            "H′ at ω {omega}"
        );
        assert!(
            rel_err(s.h2.as_ref().unwrap(), d.h2.as_ref().unwrap()) <= 1e-12,
            "H″ at ω {omega}"
        );
    }
}
