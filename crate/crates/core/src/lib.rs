//! Structured real stability radius of linear time-invariant systems
//!
//! For a Hurwitz-stable system (A, B, C), the structured real stability
//! radius is the norm of the smallest real perturbation Δ that makes
//! A + BΔC lose stability. It equals the reciprocal of sup_ω μ(H(iω)),
//! where H is the transfer function and μ minimizes the second singular
//! value of a realified block matrix over a scaling parameter γ.
//!
//! The solver estimates the radius by projecting the system onto a small
//! interpolatory subspace, maximizing μ of the reduced transfer function,
//! and growing the subspace at each maximizer; Hermite interpolation makes
//! the reduced μ, its derivative, and a finite-difference second derivative
//! exact at every absorbed frequency, which yields fast local convergence.
//! A dense brute-force oracle provides an independent reference for small
//! systems.

pub mod error;
pub mod mu;
pub mod optim;
pub mod oracle;
pub mod reduction;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
pub use mu::{
    assemble_t, mu_derivative, mu_derivative_scale, mu_of, sigma_top3, MuCase, MuConfig,
    MuEvaluation, RealifiedBlock, SigmaTriplet, DEFAULT_GAMMA_FLOOR,
};
pub use oracle::{
    dense_radius, stability_probe, OracleConfig, ProbeReport, ProbeViolation, ORACLE_MAX_N,
};
pub use reduction::{
    eval_reduced_transfer, expansion_block, extend_orthonormal, project, verify_interpolation,
    InterpolationDiagnostics, ReducedSystem, SubspaceBasis,
};
pub use solver::{
    check_termination, compute_radius, compute_radius_detailed, full_mu_sample, maximize_mu,
    reduced_mu_sample, InitStrategy, IterationRecord, MuSample, RadiusResult, SolveDetail,
    SolverConfig, Termination,
};
pub use system::generate::{
    generate_problem, stabilize, BcKind, ProblemKind, ProblemParams,
};
pub use system::matrix_market::{load_system, read_matrix, ParsedMatrix};
pub use system::{
    AMatrix, CooMatrix, ShiftedFactorization, StateSpaceSystem, TransferSample,
    STABILITY_CHECK_MAX_N,
};
