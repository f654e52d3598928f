//! Shared instance builders for the benchmark suite.
//!
//! Sizes are kept modest so the benches also run quickly in test mode; the
//! solver's scaling headroom comes from the sparse backends, not from
//! anything the timings below would show at desk scale.

use stabrad::{
    generate_problem, BcKind, ProblemKind, ProblemParams, StateSpaceSystem,
};

/// A dense seeded random stable system.
pub fn random_system(n: usize, m: usize, p: usize, seed: u64) -> StateSpaceSystem {
    let params = ProblemParams {
        n,
        m,
        p,
        seed,
        margin: 1.0,
        bc: BcKind::Random,
    };
    generate_problem(ProblemKind::RandomStable, &params).expect("benchmark instance")
}

/// A sparse 1-D convection–diffusion system with random boundary columns.
pub fn convection_diffusion(n: usize, seed: u64) -> StateSpaceSystem {
    let params = ProblemParams {
        n,
        m: 2,
        p: 2,
        seed,
        margin: 1.0,
        bc: BcKind::Random,
    };
    generate_problem(ProblemKind::ConvectionDiffusion1d, &params).expect("benchmark instance")
}
