//! Interpolatory model reduction.
//!
//! The subspace 𝒱 collects resolvent directions (iωI−A)⁻ᵏB, k = 1..3, at a
//! growing list of frequencies. Projecting (A, B, C) onto an orthonormal
//! basis V of 𝒱 yields a small dense system whose transfer function is a
//! Hermite interpolant of the full one: H, H′, H″ — and therefore μ, μ′ and
//! a finite-difference μ″ — match at every absorbed frequency.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::mu::{mu_derivative, mu_derivative_scale, mu_of, MuCase, MuConfig};
use crate::system::{AMatrix, StateSpaceSystem, TransferSample};

/// Reduced resolvent iωI − A_V counts as singular below this multiple of
/// ‖A_V‖_F.
const DEGENERATE_TOL: f64 = 1e-12;

/// Window for deciding that an ω was previously absorbed.
const POINT_MATCH_TOL: f64 = 1e-12;

/// Orthonormal basis of the interpolation subspace, plus the frequencies it
/// has absorbed. Extension produces a new value; existing snapshots stay
/// valid.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub v: DMatrix<Complex<f64>>,
    pub interpolation_points: Vec<f64>,
    pub rank_tol: f64,
}

impl SubspaceBasis {
    pub fn empty(n: usize, rank_tol: f64) -> Self {
        Self {
            v: DMatrix::zeros(n, 0),
            interpolation_points: Vec::new(),
            rank_tol,
        }
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Current basis dimension r.
    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// Number of extension rounds so far; projections record this so a stale
    /// reduced system is detectable.
    pub fn generation(&self) -> usize {
        self.interpolation_points.len()
    }

    pub fn contains_point(&self, omega: f64) -> bool {
        self.interpolation_points
            .iter()
            .any(|&w| (w - omega).abs() <= POINT_MATCH_TOL * w.abs().max(1.0))
    }
}

/// Three resolvent powers applied to B at one frequency: [X₁ X₂ X₃] with
/// Xₖ = (iωI−A)⁻ᵏB, sharing a single factorization.
pub fn expansion_block(sys: &StateSpaceSystem, omega: f64) -> Result<DMatrix<Complex<f64>>> {
    let fact = sys.factor_shift(omega)?;
    let m = sys.m();
    let b = sys.b().map(|x| Complex::new(x, 0.0));
    let x1 = fact.solve(&b);
    let x2 = fact.solve(&x1);
    let x3 = fact.solve(&x2);
    let mut block = DMatrix::zeros(sys.n(), 3 * m);
    block.view_mut((0, 0), (sys.n(), m)).copy_from(&x1);
    block.view_mut((0, m), (sys.n(), m)).copy_from(&x2);
    block.view_mut((0, 2 * m), (sys.n(), m)).copy_from(&x3);
    Ok(block)
}

/// Absorbs a block of directions into the basis by twice-iterated
/// Gram–Schmidt. Columns whose residual falls below rank_tol times the
/// largest incoming column norm are deflated; a fully deflated block leaves
/// V unchanged but still records the frequency.
pub fn extend_orthonormal(
    basis: &SubspaceBasis,
    block: &DMatrix<Complex<f64>>,
    omega: f64,
) -> SubspaceBasis {
    assert_eq!(block.nrows(), basis.n(), "block row count must match the state dimension");
    let scale = (0..block.ncols())
        .map(|j| block.column(j).norm())
        .fold(0.0f64, f64::max);
    let threshold = basis.rank_tol * scale;

    let mut cols: Vec<nalgebra::DVector<Complex<f64>>> =
        (0..basis.dim()).map(|j| basis.v.column(j).into_owned()).collect();
    let kept_before = cols.len();
    for j in 0..block.ncols() {
        let mut w = block.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let coeff = q.dotc(&w);
                w.axpy(-coeff, q, Complex::new(1.0, 0.0));
            }
        }
        let norm = w.norm();
        if norm > threshold {
            w /= Complex::new(norm, 0.0);
            cols.push(w);
        }
    }

    let mut points = basis.interpolation_points.clone();
    points.push(omega);
    if cols.len() == kept_before {
        return SubspaceBasis {
            v: basis.v.clone(),
            interpolation_points: points,
            rank_tol: basis.rank_tol,
        };
    }
    let v = DMatrix::from_columns(&cols);
    SubspaceBasis {
        v,
        interpolation_points: points,
        rank_tol: basis.rank_tol,
    }
}

/// Galerkin projection of the system onto a basis: A_V = V*AV, B_V = V*B,
/// C_V = CV. Carries the basis generation and absorbed points so evaluations
/// can be checked against the basis they came from.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub a_v: DMatrix<Complex<f64>>,
    pub b_v: DMatrix<Complex<f64>>,
    pub c_v: DMatrix<Complex<f64>>,
    pub basis_generation: usize,
    pub interpolation_points: Vec<f64>,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.a_v.nrows()
    }

    pub fn contains_point(&self, omega: f64) -> bool {
        self.interpolation_points
            .iter()
            .any(|&w| (w - omega).abs() <= POINT_MATCH_TOL * w.abs().max(1.0))
    }
}

pub fn project(sys: &StateSpaceSystem, basis: &SubspaceBasis) -> ReducedSystem {
    assert!(basis.dim() > 0, "projection needs a nonempty basis");
    let v = &basis.v;
    let av = match sys.a() {
        AMatrix::Dense(d) => d.map(|x| Complex::new(x, 0.0)) * v,
        AMatrix::Sparse(coo) => coo.mul_complex(v),
    };
    let b = sys.b().map(|x| Complex::new(x, 0.0));
    let c = sys.c().map(|x| Complex::new(x, 0.0));
    ReducedSystem {
        a_v: v.adjoint() * av,
        b_v: v.adjoint() * b,
        c_v: c * v,
        basis_generation: basis.generation(),
        interpolation_points: basis.interpolation_points.clone(),
    }
}

/// Transfer function (and ω-derivatives, like `eval_transfer`) of the reduced
/// system at s = iω, on dense complex arithmetic.
pub fn eval_reduced_transfer(
    red: &ReducedSystem,
    omega: f64,
    order: usize,
) -> Result<TransferSample> {
    if !(1..=3).contains(&order) {
        return Err(Error::Parameter(format!(
            "derivative order must be 1, 2, or 3, got {order}"
        )));
    }
    let r = red.dim();
    let mut m_mat = -red.a_v.clone();
    for i in 0..r {
        m_mat[(i, i)] += Complex::new(0.0, omega);
    }

    // Assumption-2 guard: the reduced resolvent can degenerate even though
    // the full one cannot (A_V is not necessarily stable).
    let svd = m_mat
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Computation("SVD of the reduced resolvent did not converge".into()))?;
    let sigma_min = svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let a_scale = red.a_v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if sigma_min < DEGENERATE_TOL * a_scale {
        return Err(Error::DegenerateReduction { omega, sigma_min });
    }

    let lu = m_mat.lu();
    let solve = |rhs: &DMatrix<Complex<f64>>| -> Result<DMatrix<Complex<f64>>> {
        lu.solve(rhs)
            .ok_or_else(|| Error::SingularShift { omega })
    };
    let x1 = solve(&red.b_v)?;
    let h0 = &red.c_v * &x1;
    let mut h1 = None;
    let mut h2 = None;
    if order >= 2 {
        let x2 = solve(&x1)?;
        h1 = Some(&red.c_v * &x2 * Complex::new(0.0, -1.0));
        if order >= 3 {
            let x3 = solve(&x2)?;
            h2 = Some(&red.c_v * &x3 * Complex::new(-2.0, 0.0));
        }
    }
    Ok(TransferSample { omega, h0, h1, h2 })
}

/// Side-by-side interpolation diagnostics at an absorbed frequency: transfer
/// residuals and the μ-level quantities, full system vs. reduced. Everything
/// is reported, nothing asserted.
#[derive(Clone, Debug)]
pub struct InterpolationDiagnostics {
    pub omega: f64,
    /// ‖H − H^𝒱‖_F / ‖H‖_F and the analogous first/second derivative
    /// residuals.
    pub h_residual: f64,
    pub h1_residual: f64,
    pub h2_residual: f64,
    pub mu_full: f64,
    pub mu_reduced: f64,
    pub gamma_star_full: f64,
    pub gamma_star_reduced: f64,
    /// Analytic μ′ on each side; `None` when σ₂ is not simple there.
    pub mu_derivative_full: Option<f64>,
    pub mu_derivative_reduced: Option<f64>,
    /// ‖∂T/∂ω‖₂ of the full problem at γ*, the scale μ′ residuals should be
    /// judged against.
    pub derivative_scale: Option<f64>,
    /// Central differences of the analytic μ′ (step 10⁻⁵·max(1,|ω|)); `None`
    /// when a stencil point failed to evaluate or was nonsmooth.
    pub fd_second_full: Option<f64>,
    pub fd_second_reduced: Option<f64>,
}

impl InterpolationDiagnostics {
    pub fn mu_diff(&self) -> f64 {
        (self.mu_full - self.mu_reduced).abs()
    }

    pub fn gamma_star_diff(&self) -> f64 {
        (self.gamma_star_full - self.gamma_star_reduced).abs()
    }

    /// |μ′ − [μ^𝒱]′| normalized by ‖∂T/∂ω‖₂; `None` at nonsmooth points.
    pub fn mu_derivative_diff(&self) -> Option<f64> {
        match (self.mu_derivative_full, self.mu_derivative_reduced) {
            (Some(df), Some(dr)) => {
                let scale = self.derivative_scale.unwrap_or(1.0).max(f64::MIN_POSITIVE);
                Some((df - dr).abs() / scale.max(1e-300))
            }
            _ => None,
        }
    }

    /// Relative disagreement of the finite-difference second derivatives.
    pub fn fd_second_diff(&self) -> Option<f64> {
        match (self.fd_second_full, self.fd_second_reduced) {
            (Some(f), Some(r)) => Some((f - r).abs() / f.abs().max(1e-12)),
            _ => None,
        }
    }
}

fn rel_fro(diff: &DMatrix<Complex<f64>>, reference: &DMatrix<Complex<f64>>) -> f64 {
    let num = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let den = reference.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn verify_interpolation(
    sys: &StateSpaceSystem,
    red: &ReducedSystem,
    omega: f64,
    cfg: &MuConfig,
) -> Result<InterpolationDiagnostics> {
    if !red.contains_point(omega) {
        return Err(Error::NotInterpolationPoint(omega));
    }
    let full = sys.eval_transfer(omega, 3)?;
    let reduced = eval_reduced_transfer(red, omega, 3)?;

    let h_residual = rel_fro(&(&full.h0 - &reduced.h0), &full.h0);
    let full_h1 = full.h1.as_ref().expect("order 3 requested");
    let red_h1 = reduced.h1.as_ref().expect("order 3 requested");
    let h1_residual = rel_fro(&(full_h1 - red_h1), full_h1);
    let full_h2 = full.h2.as_ref().expect("order 3 requested");
    let red_h2 = reduced.h2.as_ref().expect("order 3 requested");
    let h2_residual = rel_fro(&(full_h2 - red_h2), full_h2);

    let ev_full = mu_of(&full, cfg)?;
    let ev_red = mu_of(&reduced, cfg)?;
    let d_full = mu_derivative(&full, &ev_full, cfg).ok();
    let d_red = mu_derivative(&reduced, &ev_red, cfg).ok();
    let derivative_scale = mu_derivative_scale(&full, &ev_full, cfg).ok();

    // μ″ never comes from a second difference of μ — that squares the value
    // noise; instead the analytic μ′ is differenced once on each side. A
    // second derivative only exists where the first does, so nonsmooth
    // points (where μ′ is already withheld) report no μ″ either: the
    // difference quotient across a kink would measure the kink, not a
    // curvature.
    let step = 1e-5 * omega.abs().max(1.0);
    let dmu_at = |h: Option<TransferSample>| -> Option<f64> {
        let h = h?;
        let ev = mu_of(&h, cfg).ok()?;
        mu_derivative(&h, &ev, cfg).ok()
    };
    let fd2 = |plus: Option<f64>, minus: Option<f64>| -> Option<f64> {
        Some((plus? - minus?) / (2.0 * step))
    };
    // "smooth" must be judged by the case, not by μ′ alone: the origin
    // reports μ′ = 0 by evenness even when σ₂ is a duplicated singular value
    // there, and probing μ″ inside that boundary layer measures the layer
    let smooth_case = |c: MuCase| matches!(c, MuCase::Interior | MuCase::GammaOne);
    let smooth_here = smooth_case(ev_full.case)
        && smooth_case(ev_red.case)
        && d_full.is_some()
        && d_red.is_some();
    let fd_second_full = smooth_here
        .then(|| {
            fd2(
                dmu_at(sys.eval_transfer(omega + step, 2).ok()),
                dmu_at(sys.eval_transfer(omega - step, 2).ok()),
            )
        })
        .flatten();
    let fd_second_reduced = smooth_here
        .then(|| {
            fd2(
                dmu_at(eval_reduced_transfer(red, omega + step, 2).ok()),
                dmu_at(eval_reduced_transfer(red, omega - step, 2).ok()),
            )
        })
        .flatten();

    Ok(InterpolationDiagnostics {
        omega,
        h_residual,
        h1_residual,
        h2_residual,
        mu_full: ev_full.mu,
        mu_reduced: ev_red.mu,
        gamma_star_full: ev_full.gamma_star,
        gamma_star_reduced: ev_red.gamma_star,
        mu_derivative_full: d_full,
        mu_derivative_reduced: d_red,
        derivative_scale,
        fd_second_full,
        fd_second_reduced,
    })
}
