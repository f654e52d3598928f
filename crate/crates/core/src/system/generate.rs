//! Seeded test-problem generators: dense random Hurwitz systems and sparse
//! 1-D/2-D convection–diffusion discretizations.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::system::{AMatrix, CooMatrix, StateSpaceSystem, STABILITY_CHECK_MAX_N};

/// Diffusion coefficient of the convection–diffusion families.
const DIFFUSION: f64 = 1.0;
/// Wind speed of the convection–diffusion families; picked to make the
/// discretizations visibly non-normal without endangering stability (the
/// drift only moves eigenvalues parallel to the imaginary axis).
const WIND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    /// Dense A = R − (α(R) + margin)·I with R a seeded Gaussian matrix and
    /// α(·) the spectral abscissa.
    RandomStable,
    /// Sparse tridiagonal finite-difference discretization of
    /// u_t = u_xx − WIND·u_x on (0, 1) with n interior points.
    ConvectionDiffusion1d,
    /// Sparse block-tridiagonal 5-point discretization on an n×n interior
    /// grid; the state dimension becomes n².
    ConvectionDiffusion2d,
}

/// How B and C are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    /// Seeded Gaussian entries (drawn after A, so A is identical across
    /// different m, p at the same seed).
    Random,
    /// B = first m unit columns, C = first p unit rows.
    UnitColumns,
}

#[derive(Clone, Copy, Debug)]
pub struct ProblemParams {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub seed: u64,
    pub margin: f64,
    pub bc: BcKind,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            n: 30,
            m: 1,
            p: 1,
            seed: 0,
            margin: 1.0,
            bc: BcKind::Random,
        }
    }
}

/// Shifts R left until its spectral abscissa is exactly −margin:
/// A = R − (α(R) + margin)·I.
pub fn stabilize(r: &DMatrix<f64>, margin: f64) -> DMatrix<f64> {
    let alpha = r
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut a = r.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= alpha + margin;
    }
    a
}

fn validate(params: &ProblemParams) -> Result<()> {
    if params.n == 0 {
        return Err(Error::Parameter("problem size must be at least 1".into()));
    }
    if params.m == 0 || params.p == 0 {
        return Err(Error::Parameter("m and p must be at least 1".into()));
    }
    if !(params.margin > 0.0) {
        return Err(Error::Parameter(format!(
            "stability margin must be positive, got {}",
            params.margin
        )));
    }
    Ok(())
}

fn fill_bc(
    params: &ProblemParams,
    n_state: usize,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, DMatrix<f64>) {
    match params.bc {
        BcKind::Random => {
            let b = DMatrix::from_fn(n_state, params.m, |_, _| rng.sample(StandardNormal));
            let c = DMatrix::from_fn(params.p, n_state, |_, _| rng.sample(StandardNormal));
            (b, c)
        }
        BcKind::UnitColumns => {
            let mut b = DMatrix::zeros(n_state, params.m);
            let mut c = DMatrix::zeros(params.p, n_state);
            for j in 0..params.m.min(n_state) {
                b[(j, j)] = 1.0;
            }
            for i in 0..params.p.min(n_state) {
                c[(i, i)] = 1.0;
            }
            (b, c)
        }
    }
}

/// Builds a Hurwitz-stable test system of the requested kind.
pub fn generate_problem(kind: ProblemKind, params: &ProblemParams) -> Result<StateSpaceSystem> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    match kind {
        ProblemKind::RandomStable => {
            if params.n > STABILITY_CHECK_MAX_N {
                return Err(Error::Parameter(format!(
                    "random_stable needs a dense eigenvalue sweep; n = {} exceeds {}. \
                     Use a convection_diffusion kind for larger problems",
                    params.n, STABILITY_CHECK_MAX_N
                )));
            }
            let r = DMatrix::from_fn(params.n, params.n, |_, _| rng.sample(StandardNormal));
            let a = stabilize(&r, params.margin);
            let (b, c) = fill_bc(params, params.n, &mut rng);
            StateSpaceSystem::new(AMatrix::Dense(a), b, c)
        }
        ProblemKind::ConvectionDiffusion1d => {
            let n = params.n;
            let h = 1.0 / (n as f64 + 1.0);
            let diag = -2.0 * DIFFUSION / (h * h);
            let sub = DIFFUSION / (h * h) + WIND / (2.0 * h);
            let sup = DIFFUSION / (h * h) - WIND / (2.0 * h);
            let mut entries = Vec::with_capacity(3 * n);
            for i in 0..n {
                entries.push((i, i, diag));
                if i + 1 < n {
                    entries.push((i + 1, i, sub));
                    entries.push((i, i + 1, sup));
                }
            }
            let a = CooMatrix::new(n, n, entries)?;
            let (b, c) = fill_bc(params, n, &mut rng);
            StateSpaceSystem::new(AMatrix::Sparse(a), b, c)
        }
        ProblemKind::ConvectionDiffusion2d => {
            let k = params.n;
            let n = k * k;
            let h = 1.0 / (k as f64 + 1.0);
            let diag = -4.0 * DIFFUSION / (h * h);
            let sub_x = DIFFUSION / (h * h) + WIND / (2.0 * h);
            let sup_x = DIFFUSION / (h * h) - WIND / (2.0 * h);
            let off_y = DIFFUSION / (h * h);
            let idx = |ix: usize, iy: usize| iy * k + ix;
            let mut entries = Vec::with_capacity(5 * n);
            for iy in 0..k {
                for ix in 0..k {
                    let row = idx(ix, iy);
                    entries.push((row, row, diag));
                    if ix > 0 {
                        entries.push((row, idx(ix - 1, iy), sub_x));
                    }
                    if ix + 1 < k {
                        entries.push((row, idx(ix + 1, iy), sup_x));
                    }
                    if iy > 0 {
                        entries.push((row, idx(ix, iy - 1), off_y));
                    }
                    if iy + 1 < k {
                        entries.push((row, idx(ix, iy + 1), off_y));
                    }
                }
            }
            let a = CooMatrix::new(n, n, entries)?;
            let (b, c) = fill_bc(params, n, &mut rng);
            StateSpaceSystem::new(AMatrix::Sparse(a), b, c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stabilize_forces_scalar_value() {
        // R = 0, margin = 1 → A = [−1]
        let a = stabilize(&DMatrix::zeros(1, 1), 1.0);
        assert_eq!(a[(0, 0)], -1.0);
    }

    #[test]
    fn random_stable_hits_requested_margin() {
        let params = ProblemParams {
            n: 30,
            m: 2,
            p: 2,
            seed: 7,
            ..Default::default()
        };
        let sys = generate_problem(ProblemKind::RandomStable, &params).unwrap();
        let alpha = sys.spectral_abscissa().unwrap();
        assert!((alpha + params.margin).abs() < 1e-8, "abscissa {alpha}");
    }

    #[test]
    fn same_seed_reproduces_bits() {
        let params = ProblemParams {
            n: 12,
            seed: 99,
            ..Default::default()
        };
        let s1 = generate_problem(ProblemKind::RandomStable, &params).unwrap();
        let s2 = generate_problem(ProblemKind::RandomStable, &params).unwrap();
        assert_eq!(s1.b(), s2.b());
        assert_eq!(s1.a().to_dense(), s2.a().to_dense());
    }

    #[test]
    fn convection_diffusion_1d_is_stable_tridiagonal() {
        let params = ProblemParams {
            n: 50,
            ..Default::default()
        };
        let sys = generate_problem(ProblemKind::ConvectionDiffusion1d, &params).unwrap();
        assert!(sys.is_sparse());
        assert_eq!(sys.n(), 50);
        match sys.a() {
            AMatrix::Sparse(m) => assert_eq!(m.nnz(), 3 * 50 - 2),
            AMatrix::Dense(_) => panic!("expected sparse storage"),
        }
        assert!(sys.spectral_abscissa().unwrap() < 0.0);
    }

    #[test]
    fn convection_diffusion_2d_squares_the_grid() {
        let params = ProblemParams {
            n: 6,
            m: 2,
            p: 3,
            ..Default::default()
        };
        let sys = generate_problem(ProblemKind::ConvectionDiffusion2d, &params).unwrap();
        assert_eq!(sys.n(), 36);
        assert!(sys.spectral_abscissa().unwrap() < 0.0);
    }

    #[test]
    fn unit_columns_select_identity_blocks() {
        let params = ProblemParams {
            n: 5,
            m: 2,
            p: 2,
            bc: BcKind::UnitColumns,
            ..Default::default()
        };
        let sys = generate_problem(ProblemKind::RandomStable, &params).unwrap();
        assert_eq!(sys.b()[(0, 0)], 1.0);
        assert_eq!(sys.b()[(1, 1)], 1.0);
        assert_eq!(sys.b()[(2, 0)], 0.0);
        assert_eq!(sys.c()[(1, 1)], 1.0);
    }

    #[test]
    fn parameter_validation() {
        let bad = ProblemParams {
            n: 0,
            ..Default::default()
        };
        assert!(generate_problem(ProblemKind::RandomStable, &bad).is_err());
        let bad = ProblemParams {
            margin: 0.0,
            ..Default::default()
        };
        assert!(generate_problem(ProblemKind::RandomStable, &bad).is_err());
    }
}
