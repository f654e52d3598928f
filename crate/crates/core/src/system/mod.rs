//! State-space triples (A, B, C), shifted resolvent factorizations, and
//! evaluation of the transfer function H(iω) = C(iωI − A)⁻¹B together with
//! its first two ω-derivatives.

pub mod generate;
pub mod matrix_market;

use std::cell::Cell;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Once};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{Complex, DMatrix, Dyn};

use crate::error::{Error, Result};

thread_local! {
    static EXPECTED_PANIC: Cell<bool> = const { Cell::new(false) };
}
static QUIET_HOOK: Once = Once::new();

/// The sparse LU backend panics on an exact zero pivot instead of returning
/// an error, so the factorization call is wrapped in `catch_unwind`. This
/// installs (once) a delegating panic hook that stays silent for exactly
/// those expected panics on this thread and passes everything else through.
fn catch_expected_panic<T>(f: impl FnOnce() -> T) -> Option<T> {
    QUIET_HOOK.call_once(|| {
        let prev = panic::take_hook();
        panic::set_hook(Box::new(move |info| {
            if !EXPECTED_PANIC.with(Cell::get) {
                prev(info);
            }
        }));
    });
    EXPECTED_PANIC.with(|flag| flag.set(true));
    let out = panic::catch_unwind(AssertUnwindSafe(f));
    EXPECTED_PANIC.with(|flag| flag.set(false));
    out.ok()
}

/// Largest dimension for which stability verification (a dense eigenvalue
/// sweep) is attempted; beyond this the caller asserts stability.
pub const STABILITY_CHECK_MAX_N: usize = 2000;

/// Real sparse matrix in coordinate storage.
///
/// Entries are coalesced on construction: duplicates are summed and the list
/// is sorted by (column, row), so norms and matrix-vector products never
/// double-count.
#[derive(Clone, Debug, PartialEq)]
pub struct CooMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::Parameter(format!(
                    "coordinate entry ({i}, {j}) outside a {nrows}×{ncols} matrix"
                )));
            }
        }
        entries.sort_unstable_by(|x, y| (x.1, x.0).cmp(&(y.1, y.0)));
        let mut coalesced: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match coalesced.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => coalesced.push((i, j, v)),
            }
        }
        Ok(Self {
            nrows,
            ncols,
            entries: coalesced,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Exact 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let mut col_sums = vec![0.0; self.ncols];
        for &(_, j, v) in &self.entries {
            col_sums[j] += v.abs();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    /// Y = A·X for complex X (A stays real).
    pub fn mul_complex(&self, x: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
        assert_eq!(self.ncols, x.nrows());
        let mut y = DMatrix::<Complex<f64>>::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            for &(i, j, v) in &self.entries {
                y[(i, c)] += x[(j, c)] * v;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::<f64>::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            d[(i, j)] += v;
        }
        d
    }
}

/// Storage of the state matrix. Sparse input stays sparse; only solves with
/// iωI − A ever touch A on the sparse path.
#[derive(Clone, Debug)]
pub enum AMatrix {
    Dense(DMatrix<f64>),
    Sparse(CooMatrix),
}

impl AMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            AMatrix::Dense(m) => m.nrows(),
            AMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            AMatrix::Dense(m) => m.ncols(),
            AMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, AMatrix::Sparse(_))
    }

    pub fn norm_one(&self) -> f64 {
        match self {
            AMatrix::Dense(m) => {
                let mut best = 0.0f64;
                for j in 0..m.ncols() {
                    best = best.max(m.column(j).iter().map(|v| v.abs()).sum());
                }
                best
            }
            AMatrix::Sparse(m) => m.norm_one(),
        }
    }

    /// Densifies A. Callers are responsible for size guards; the solve path
    /// never uses this.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            AMatrix::Dense(m) => m.clone(),
            AMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

/// A real state-space triple x' = Ax + Bu, y = Cx with A n×n, B n×m, C p×n.
#[derive(Clone, Debug)]
pub struct StateSpaceSystem {
    a: AMatrix,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    // Counts shifted factorizations for the whole lifetime of this system
    // (shared across clones). Lets tests observe that one frequency costs
    // exactly one factorization.
    factorizations: Arc<AtomicUsize>,
}

impl StateSpaceSystem {
    pub fn new(a: AMatrix, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let shapes = format!(
            "A: {}×{}, B: {}×{}, C: {}×{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        );
        if a.nrows() != a.ncols()
            || b.nrows() != a.nrows()
            || c.ncols() != a.nrows()
            || b.ncols() == 0
            || c.nrows() == 0
        {
            return Err(Error::Dimension(shapes));
        }
        Ok(Self {
            a,
            b,
            c,
            factorizations: Arc::new(AtomicUsize::new(0)),
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of inputs (columns of B).
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Number of outputs (rows of C).
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &AMatrix {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn is_sparse(&self) -> bool {
        self.a.is_sparse()
    }

    pub fn a_norm_one(&self) -> f64 {
        self.a.norm_one()
    }

    /// How many shifted factorizations this system (including clones) has
    /// performed so far.
    pub fn factorization_count(&self) -> usize {
        self.factorizations.load(Ordering::Relaxed)
    }

    /// Spectral abscissa of A by a dense eigenvalue sweep.
    ///
    /// Densifies sparse A temporarily, so it is guarded to n ≤ 2000; above
    /// that the caller must assert stability instead of verifying it.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        if self.n() > STABILITY_CHECK_MAX_N {
            return Err(Error::SizeGuard {
                n: self.n(),
                max: STABILITY_CHECK_MAX_N,
            });
        }
        let eigs = self.a.to_dense().complex_eigenvalues();
        Ok(eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Verifies Hurwitz stability (spectral abscissa strictly negative) and
    /// returns the abscissa.
    pub fn verify_stability(&self) -> Result<f64> {
        let alpha = self.spectral_abscissa()?;
        if alpha >= 0.0 {
            return Err(Error::Unstable(alpha));
        }
        Ok(alpha)
    }

    /// Factors iωI − A once for repeated solves at this frequency.
    ///
    /// Dense A gets a dense LU, sparse A a sparse LU; either backend rejects
    /// a numerically singular shift (which signals an unstable A, since
    /// iωI − A is nonsingular for every real ω when A is Hurwitz).
    pub fn factor_shift(&self, omega: f64) -> Result<ShiftedFactorization> {
        self.factorizations.fetch_add(1, Ordering::Relaxed);
        let n = self.n();
        let backend = match &self.a {
            AMatrix::Dense(a) => {
                let mut m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
                    Complex::new(-a[(i, j)], 0.0)
                });
                for i in 0..n {
                    m[(i, i)] += Complex::new(0.0, omega);
                }
                let lu = m.lu();
                // Partial-pivoted LU leaves the singularity evidence on the
                // diagonal of U.
                let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
                let u = lu.u();
                for i in 0..n {
                    let d = u[(i, i)].norm();
                    dmin = dmin.min(d);
                    dmax = dmax.max(d);
                }
                if dmax == 0.0 || dmin <= n as f64 * f64::EPSILON * dmax {
                    return Err(Error::SingularShift { omega });
                }
                Backend::Dense(lu)
            }
            AMatrix::Sparse(a) => {
                let mut trips: Vec<Triplet<usize, usize, faer::c64>> = a
                    .entries()
                    .iter()
                    .map(|&(i, j, v)| Triplet::new(i, j, faer::c64::new(-v, 0.0)))
                    .collect();
                for i in 0..n {
                    trips.push(Triplet::new(i, i, faer::c64::new(0.0, omega)));
                }
                let m = SparseColMat::<usize, faer::c64>::try_new_from_triplets(n, n, &trips)
                    .map_err(|e| Error::Computation(format!("sparse assembly failed: {e:?}")))?;
                // Err is a symbolic singularity; a panic inside the numeric
                // kernel is a zero pivot. Both mean the shift is singular.
                let lu = match catch_expected_panic(|| m.sp_lu()) {
                    Some(Ok(lu)) => lu,
                    _ => return Err(Error::SingularShift { omega }),
                };
                // The symbolic factorization can succeed on a numerically
                // singular matrix; a recovery solve with a known solution
                // catches that case. 1e-6 is deliberately far looser than the
                // 1e-10 residual expected on well-conditioned shifts.
                let y = faer::Mat::<faer::c64>::ones(n, 1);
                let mut rhs = faer::Mat::<faer::c64>::zeros(n, 1);
                for &(i, j, v) in a.entries() {
                    let acc = rhs[(i, 0)];
                    rhs[(i, 0)] = faer::c64::new(acc.re - v * y[(j, 0)].re, acc.im);
                }
                for i in 0..n {
                    let acc = rhs[(i, 0)];
                    rhs[(i, 0)] = faer::c64::new(acc.re, acc.im + omega);
                }
                let x = lu.solve(&rhs);
                let err2: f64 = (0..n)
                    .map(|i| {
                        let d = faer::c64::new(x[(i, 0)].re - 1.0, x[(i, 0)].im);
                        d.re * d.re + d.im * d.im
                    })
                    .sum();
                if !(err2 / n as f64).sqrt().is_finite() || (err2 / n as f64).sqrt() > 1e-6 {
                    return Err(Error::SingularShift { omega });
                }
                Backend::Sparse(lu)
            }
        };
        Ok(ShiftedFactorization {
            omega,
            n,
            backend,
        })
    }

    /// Evaluates H(iω) and, for `order ≥ 2`, its ω-derivatives:
    ///
    ///   H₀ = C·X₁,       (iωI − A)X₁ = B
    ///   H₁ = −i·C·X₂,    (iωI − A)X₂ = X₁
    ///   H₂ = −2·C·X₃,    (iωI − A)X₃ = X₂
    ///
    /// One factorization serves all solves at this ω.
    pub fn eval_transfer(&self, omega: f64, order: usize) -> Result<TransferSample> {
        if !(1..=3).contains(&order) {
            return Err(Error::Parameter(format!(
                "transfer-evaluation order must be 1, 2, or 3, got {order}"
            )));
        }
        let fac = self.factor_shift(omega)?;
        let b = to_complex(&self.b);
        let c = to_complex(&self.c);

        let x1 = fac.solve(&b);
        let h0 = &c * &x1;
        let mut h1 = None;
        let mut h2 = None;
        if order >= 2 {
            let x2 = fac.solve(&x1);
            h1 = Some((&c * &x2) * Complex::new(0.0, -1.0));
            if order >= 3 {
                let x3 = fac.solve(&x2);
                h2 = Some((&c * &x3) * Complex::new(-2.0, 0.0));
            }
        }
        Ok(TransferSample { omega, h0, h1, h2 })
    }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|v| Complex::new(v, 0.0))
}

enum Backend {
    Dense(nalgebra::linalg::LU<Complex<f64>, Dyn, Dyn>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, faer::c64>),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Dense(_) => f.write_str("Backend::Dense"),
            Backend::Sparse(_) => f.write_str("Backend::Sparse"),
        }
    }
}

/// Reusable factorization of iωI − A.
#[derive(Debug)]
pub struct ShiftedFactorization {
    omega: f64,
    n: usize,
    backend: Backend,
}

impl ShiftedFactorization {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Solves (iωI − A)X = RHS for as many right-hand sides as RHS has
    /// columns.
    pub fn solve(&self, rhs: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
        assert_eq!(rhs.nrows(), self.n);
        match &self.backend {
            Backend::Dense(lu) => lu
                .solve(rhs)
                .expect("factorization was validated as nonsingular"),
            Backend::Sparse(lu) => {
                let mut fr = faer::Mat::<faer::c64>::zeros(rhs.nrows(), rhs.ncols());
                for j in 0..rhs.ncols() {
                    for i in 0..rhs.nrows() {
                        let z = rhs[(i, j)];
                        fr[(i, j)] = faer::c64::new(z.re, z.im);
                    }
                }
                let fx = lu.solve(&fr);
                DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |i, j| {
                    Complex::new(fx[(i, j)].re, fx[(i, j)].im)
                })
            }
        }
    }
}

/// H(iω) with optional first and second ω-derivatives.
#[derive(Clone, Debug)]
pub struct TransferSample {
    pub omega: f64,
    pub h0: DMatrix<Complex<f64>>,
    /// dH(iω)/dω = −i·C(iωI−A)⁻²B, present when requested with order ≥ 2.
    pub h1: Option<DMatrix<Complex<f64>>>,
    /// d²H(iω)/dω² = −2·C(iωI−A)⁻³B, present when requested with order = 3.
    pub h2: Option<DMatrix<Complex<f64>>>,
}
