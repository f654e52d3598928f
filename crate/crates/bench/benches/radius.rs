use criterion::{criterion_group, criterion_main, Criterion};

use stabrad::{
    compute_radius, dense_radius, full_mu_sample, mu_of, MuConfig, OracleConfig, SolverConfig,
};
use stabrad_bench::{convection_diffusion, random_system};

fn transfer_evaluation(c: &mut Criterion) {
    let dense = random_system(50, 2, 2, 11);
    let sparse = convection_diffusion(400, 11);
    c.bench_function("transfer order-3 dense n=50", |b| {
        b.iter(|| dense.eval_transfer(1.5, 3).unwrap())
    });
    c.bench_function("transfer order-3 sparse n=400", |b| {
        b.iter(|| sparse.eval_transfer(1.5, 3).unwrap())
    });
}

fn mu_evaluation(c: &mut Criterion) {
    let sys = random_system(50, 4, 4, 12);
    let cfg = MuConfig::default();
    let sample = sys.eval_transfer(2.0, 2).unwrap();
    c.bench_function("mu 4x4 sample", |b| b.iter(|| mu_of(&sample, &cfg).unwrap()));
    c.bench_function("mu sample incl. transfer n=50", |b| {
        b.iter(|| full_mu_sample(&sys, 2.0, &cfg).unwrap())
    });
}

fn radius_solvers(c: &mut Criterion) {
    let small = random_system(30, 2, 2, 3102);
    let medium = random_system(50, 3, 2, 5203);
    let solver_cfg = SolverConfig::default();
    c.bench_function("subspace radius n=30 m=p=2", |b| {
        b.iter(|| compute_radius(&small, &solver_cfg).unwrap())
    });
    c.bench_function("subspace radius n=50 m=3 p=2", |b| {
        b.iter(|| compute_radius(&medium, &solver_cfg).unwrap())
    });
    let oracle_cfg = OracleConfig {
        omega_grid_points: 400,
        gamma_grid_points: 40,
        refine_iters: 30,
        ..Default::default()
    };
    c.bench_function("dense oracle n=30 m=p=2 (coarse grids)", |b| {
        b.iter(|| dense_radius(&small, &oracle_cfg).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = transfer_evaluation, mu_evaluation, radius_solvers
}
criterion_main!(benches);
