//! The subspace iteration for the stability radius.
//!
//! Each round maximizes μ^𝒱 — the μ-function of the *reduced* transfer
//! function — over ω ≥ 0, absorbs the maximizer into the basis, and re-reads
//! μ at that frequency on the expanded subspace, where Hermite interpolation
//! makes it exact. The radius estimate is the reciprocal; iteration stops
//! when consecutive estimates agree to a relative tolerance or the round
//! budget runs out.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::mu::{mu_derivative, mu_of, MuCase, MuConfig};
use crate::optim::{bisect_root, golden_max};
use crate::reduction::{
    eval_reduced_transfer, expansion_block, extend_orthonormal, project, ReducedSystem,
    SubspaceBasis,
};
use crate::system::StateSpaceSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitStrategy {
    /// Argmax of μ over a cheap coarse grid on the full system.
    CoarseGridArgmax,
    /// Caller-supplied first interpolation frequency.
    UserOmega(f64),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Relative agreement of consecutive radius estimates that counts as
    /// converged.
    pub eps_rel: f64,
    /// Iteration budget; 0 stops after the initialization round (reported as
    /// a cap, never as convergence).
    pub k_max: usize,
    /// Truncation Γ of the γ-domain.
    pub gamma_floor: f64,
    /// γ-tolerance of the inner golden-section minimization.
    pub golden_tol: f64,
    /// Right end of the ω search range; `None` picks 10·‖A‖₁.
    pub omega_max: Option<f64>,
    /// Points in the coarse ω sweep of each outer maximization.
    pub coarse_samples: usize,
    /// ω-tolerance of the local refinement around coarse maxima.
    pub refine_tol: f64,
    /// Simplicity threshold on the σ₂ gaps, relative to σ₁.
    pub gap_tol: f64,
    /// Relative truncation threshold of the orthonormalization.
    pub rank_tol: f64,
    pub init_strategy: InitStrategy,
    /// Record wall-clock times per iteration. Off by default so that repeated
    /// runs produce byte-identical reports.
    pub timings: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_rel: 1e-4,
            k_max: 15,
            gamma_floor: 1e-8,
            golden_tol: 1e-9,
            omega_max: None,
            coarse_samples: 200,
            refine_tol: 1e-8,
            gap_tol: 1e-8,
            rank_tol: 1e-12,
            init_strategy: InitStrategy::CoarseGridArgmax,
            timings: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_rel", self.eps_rel),
            ("golden_tol", self.golden_tol),
            ("refine_tol", self.refine_tol),
            ("gap_tol", self.gap_tol),
            ("rank_tol", self.rank_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma_floor > 0.0 && self.gamma_floor <= 1.0) {
            return Err(Error::Parameter(format!(
                "gamma_floor must lie in (0, 1], got {}",
                self.gamma_floor
            )));
        }
        if self.coarse_samples < 8 {
            return Err(Error::Parameter(format!(
                "coarse_samples must be at least 8, got {}",
                self.coarse_samples
            )));
        }
        if let Some(w) = self.omega_max {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Parameter(format!(
                    "omega_max must be positive and finite, got {w}"
                )));
            }
        }
        if let InitStrategy::UserOmega(w) = self.init_strategy {
            if !w.is_finite() {
                return Err(Error::Parameter(format!("initial ω must be finite, got {w}")));
            }
        }
        Ok(())
    }

    pub fn mu_config(&self) -> MuConfig {
        MuConfig {
            gamma_floor: self.gamma_floor,
            golden_tol: self.golden_tol,
            gap_tol: self.gap_tol,
        }
    }
}

/// One μ evaluation as the outer optimizer sees it.
#[derive(Clone, Debug)]
pub struct MuSample {
    pub omega: f64,
    pub mu: f64,
    pub gamma_star: f64,
    pub case: MuCase,
    /// Analytic μ′, absent at nonsmooth points.
    pub dmu: Option<f64>,
    /// Im H(iω) for single-input single-output systems, whose sign changes
    /// locate the isolated frequencies where μ jumps from 0 to |H|.
    pub im_h: Option<f64>,
    /// d/dω Im H(iω) alongside `im_h`; a sign change of the derivative
    /// between two same-signed samples flags a dip that may conceal a pair
    /// of roots.
    pub im_h1: Option<f64>,
}

/// μ of the reduced transfer function at one frequency.
pub fn reduced_mu_sample(red: &ReducedSystem, omega: f64, cfg: &MuConfig) -> Result<MuSample> {
    let h = eval_reduced_transfer(red, omega, 2)?;
    finish_sample(h, cfg)
}

/// μ of the full transfer function at one frequency.
pub fn full_mu_sample(sys: &StateSpaceSystem, omega: f64, cfg: &MuConfig) -> Result<MuSample> {
    let h = sys.eval_transfer(omega, 2)?;
    finish_sample(h, cfg)
}

fn finish_sample(h: crate::system::TransferSample, cfg: &MuConfig) -> Result<MuSample> {
    let ev = mu_of(&h, cfg)?;
    let dmu = mu_derivative(&h, &ev, cfg).ok();
    let scalar = h.h0.shape() == (1, 1);
    let im_h = scalar.then(|| h.h0[(0, 0)].im);
    let im_h1 = if scalar {
        h.h1.as_ref().map(|h1| h1[(0, 0)].im)
    } else {
        None
    };
    Ok(MuSample {
        omega: ev.omega,
        mu: ev.mu,
        gamma_star: ev.gamma_star,
        case: ev.case,
        dmu,
        im_h,
        im_h1,
    })
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub k: usize,
    /// The frequency this round selected (the maximizer of μ^{𝒱_k}; for
    /// k = 0, the initialization frequency).
    pub omega_next: f64,
    pub gamma_at_opt: f64,
    /// μ at `omega_next`, read off the subspace that has absorbed it.
    pub mu_k: f64,
    /// 1/mu_k, stored as computed.
    pub r_k: f64,
    pub basis_dim: usize,
    /// Seconds spent in this round; 0 unless timings were requested.
    pub wall_time: f64,
    /// The expansion at `omega_next` added no new direction.
    pub deflated: bool,
}

#[derive(Clone, Debug)]
pub struct RadiusResult {
    pub radius: f64,
    pub omega_star: f64,
    pub gamma_star: f64,
    pub mu_star: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Continue,
    Converged,
    IterationCap,
}

/// Converged iff |r_k − r_prev| < eps_rel·½·|r_k + r_prev|; otherwise a cap
/// verdict once k exceeds the budget.
pub fn check_termination(
    r_k: f64,
    r_prev: f64,
    k: usize,
    cfg: &SolverConfig,
) -> Result<Termination> {
    if !(r_k > 0.0) || !(r_prev > 0.0) {
        return Err(Error::ContractMisuse { r_k, r_prev });
    }
    if (r_k - r_prev).abs() < cfg.eps_rel * 0.5 * (r_k + r_prev).abs() {
        Ok(Termination::Converged)
    } else if k > cfg.k_max {
        Ok(Termination::IterationCap)
    } else {
        Ok(Termination::Continue)
    }
}

/// Global maximization of μ over [0, omega_max] (negative ω never searched:
/// μ is even).
///
/// Coarse uniform sweep, then local refinement around every local maximum
/// within 5% of the best sample — by bisecting μ′ when both bracket ends
/// carry a smooth derivative straddling zero, by golden section otherwise.
/// For scalar transfer functions, sign changes of Im H are additionally
/// hunted down, since μ is nonzero only where Im H vanishes and such spikes
/// slip between grid points.
///
/// Evaluation failures at isolated frequencies are skipped; if every sample
/// fails the optimizer reports starvation.
pub fn maximize_mu<F>(mut evaluate: F, omega_max: f64, cfg: &SolverConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<MuSample>,
{
    let n = cfg.coarse_samples.max(2);
    let step = omega_max / (n - 1) as f64;
    let samples: Vec<(f64, Option<MuSample>)> = (0..n)
        .map(|i| {
            let w = if i + 1 == n { omega_max } else { step * i as f64 };
            (w, evaluate(w).ok())
        })
        .collect();
    if samples.iter().all(|(_, s)| s.is_none()) {
        return Err(Error::OptimizerStarved);
    }

    let mu_at = |i: usize| -> f64 {
        samples[i]
            .1
            .as_ref()
            .map(|s| s.mu)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let coarse_best = (0..n).map(mu_at).fold(f64::NEG_INFINITY, f64::max);
    let mut best = (0..n)
        .max_by(|&i, &j| mu_at(i).total_cmp(&mu_at(j)))
        .map(|i| (samples[i].0, mu_at(i)))
        .expect("at least one sample");

    let consider = |w: f64, mu: f64, best: &mut (f64, f64)| {
        if mu > best.1 {
            *best = (w, mu);
        }
    };

    for i in 0..n {
        let here = mu_at(i);
        if !here.is_finite() {
            continue;
        }
        let left = if i == 0 { f64::NEG_INFINITY } else { mu_at(i - 1) };
        let right = if i + 1 == n { f64::NEG_INFINITY } else { mu_at(i + 1) };
        if here < left || here < right || here < 0.95 * coarse_best {
            continue;
        }
        let lo = if i == 0 { samples[0].0 } else { samples[i - 1].0 };
        let hi = if i + 1 == n { samples[n - 1].0 } else { samples[i + 1].0 };
        if hi - lo <= cfg.refine_tol {
            continue;
        }

        // μ′-bisection when the bracket ends have derivatives straddling a
        // maximum; otherwise golden section on μ itself.
        let d_lo = samples[i.saturating_sub(1)].1.as_ref().and_then(|s| s.dmu);
        let d_hi = samples[(i + 1).min(n - 1)].1.as_ref().and_then(|s| s.dmu);
        let mut refined = None;
        if let (Some(da), Some(db)) = (d_lo, d_hi) {
            if i > 0 && i + 1 < n && da > 0.0 && db < 0.0 {
                let root = bisect_root(
                    |w| {
                        evaluate(w).and_then(|s| {
                            s.dmu.ok_or(Error::NonsmoothPoint {
                                omega: w,
                                gap: 0.0,
                                tol: cfg.gap_tol,
                            })
                        })
                    },
                    lo,
                    hi,
                    da,
                    cfg.refine_tol,
                );
                if let Ok(w) = root {
                    if let Ok(s) = evaluate(w) {
                        refined = Some((w, s.mu));
                    }
                }
            }
        }
        let (w, mu) = refined.unwrap_or_else(|| {
            golden_max(
                |w| evaluate(w).map(|s| s.mu).unwrap_or(f64::NEG_INFINITY),
                lo,
                hi,
                cfg.refine_tol,
            )
        });
        consider(w, mu, &mut best);
    }

    // Spike hunt for scalar transfer functions: μ is supported on the zero
    // set of Im H, and those roots slip between coarse samples. Each coarse
    // cell is re-scanned on a subgrid before bisecting sign changes, since a
    // cell can hide an even number of roots that endpoint parity never sees;
    // a subsegment whose endpoint signs agree is still probed for an interior
    // extremum of Im H dipping through zero (the derivative of Im H rides on
    // the same factorization, so the scan stays one solve per point).
    const SUBCELLS: usize = 10;
    let scalar = samples
        .iter()
        .find_map(|(_, s)| s.as_ref())
        .is_some_and(|s| s.im_h.is_some());
    if scalar {
        for i in 0..n.saturating_sub(1) {
            let (Some(sa), Some(sb)) = (&samples[i].1, &samples[i + 1].1) else {
                continue;
            };
            let (wa, wb) = (samples[i].0, samples[i + 1].0);
            let mut grid: Vec<(f64, Option<MuSample>)> =
                Vec::with_capacity(SUBCELLS + 1);
            grid.push((wa, Some(sa.clone())));
            for j in 1..SUBCELLS {
                let w = wa + (wb - wa) * j as f64 / SUBCELLS as f64;
                let s = evaluate(w).ok();
                if let Some(s) = &s {
                    consider(w, s.mu, &mut best);
                }
                grid.push((w, s));
            }
            grid.push((wb, Some(sb.clone())));

            for seg in grid.windows(2) {
                let ((a0, Some(sa)), (b, Some(sb))) = (&seg[0], &seg[1]) else {
                    continue;
                };
                let (Some(mut ia), Some(ib)) = (sa.im_h, sb.im_h) else {
                    continue;
                };
                let (mut a, b) = (*a0, *b);
                let width = b - a;
                // Im H is identically zero at ω = 0 for a real system, which
                // would hide a root inside the first segment; the usable sign
                // is the departing one just right of the exact zero
                if ia == 0.0 {
                    a += width * 1e-3;
                    match evaluate(a) {
                        Ok(s) => ia = s.im_h.unwrap_or(0.0),
                        Err(_) => continue,
                    }
                }
                // the μ value at a crossing only surfaces once |Im H| sinks
                // into the scalar zero band, so roots are driven far below
                // the outer ω tolerance (a few dozen extra solves each)
                let deep = (width * 1e-10).max(4.0 * f64::EPSILON * b.abs());
                let mut brackets: Vec<(f64, f64, f64)> = Vec::new();
                if ia * ib < 0.0 {
                    brackets.push((a, b, ia));
                } else if let (Some(da), Some(db)) = (sa.im_h1, sb.im_h1) {
                    if da * db < 0.0 {
                        // an interior extremum; if Im H recrosses zero there,
                        // split the segment into two honest brackets
                        let ext = bisect_root(
                            |w| evaluate(w).map(|s| s.im_h1.unwrap_or(0.0)),
                            a,
                            b,
                            da,
                            width * 1e-3,
                        );
                        if let Ok(we) = ext {
                            if let Ok(se) = evaluate(we) {
                                consider(we, se.mu, &mut best);
                                let ie = se.im_h.unwrap_or(0.0);
                                if ia * ie < 0.0 {
                                    brackets.push((a, we, ia));
                                    brackets.push((we, b, ie));
                                }
                            }
                        }
                    }
                }
                for (lo, hi, sign_lo) in brackets {
                    let root = bisect_root(
                        |w| evaluate(w).map(|s| s.im_h.unwrap_or(0.0)),
                        lo,
                        hi,
                        sign_lo,
                        deep,
                    );
                    if let Ok(w) = root {
                        if let Ok(s) = evaluate(w) {
                            consider(w, s.mu, &mut best);
                        }
                    }
                }
            }
        }
    }

    Ok(best)
}

/// A solve together with the subspace artifacts it produced, for
/// interpolation diagnostics after the fact.
#[derive(Clone, Debug)]
pub struct SolveDetail {
    pub result: RadiusResult,
    pub basis: SubspaceBasis,
    pub reduced: ReducedSystem,
}

pub fn compute_radius(sys: &StateSpaceSystem, cfg: &SolverConfig) -> Result<RadiusResult> {
    compute_radius_detailed(sys, cfg).map(|d| d.result)
}

pub fn compute_radius_detailed(sys: &StateSpaceSystem, cfg: &SolverConfig) -> Result<SolveDetail> {
    cfg.validate()?;
    let mu_cfg = cfg.mu_config();
    let omega_max = cfg.omega_max.unwrap_or_else(|| 10.0 * sys.a_norm_one());
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "derived ω range [0, {omega_max}] is unusable; set omega_max explicitly"
        )));
    }
    let mut warnings = Vec::new();
    let mut history: Vec<IterationRecord> = Vec::new();

    let clock = |started: Instant| -> f64 {
        if cfg.timings {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };

    // initialization: pick ω₁, absorb it, read μ off the subspace
    let started = Instant::now();
    let omega1 = match cfg.init_strategy {
        InitStrategy::UserOmega(w) => {
            let w = w.abs();
            if w > omega_max {
                warnings.push(format!(
                    "initial ω {w:.6e} clamped to the search range [0, {omega_max:.6e}]"
                ));
                omega_max
            } else {
                w
            }
        }
        InitStrategy::CoarseGridArgmax => {
            if sys.m() == 1 && sys.p() == 1 {
                // a scalar μ vanishes off the crossings of Im H, so a thin
                // argmax grid sees nothing but ω = 0; the full sweep with its
                // crossing hunt is the only informative seed (each sample is
                // a single shifted solve, so the sweep stays cheap)
                let (w, _) =
                    maximize_mu(|w| full_mu_sample(sys, w, &mu_cfg), omega_max, cfg)?;
                w
            } else {
                let n0 = (cfg.coarse_samples / 10).max(2);
                let mut best: Option<(f64, f64)> = None;
                for i in 0..n0 {
                    let w = omega_max * i as f64 / (n0 - 1) as f64;
                    if let Ok(s) = full_mu_sample(sys, w, &mu_cfg) {
                        if best.map(|(_, m)| s.mu > m).unwrap_or(true) {
                            best = Some((w, s.mu));
                        }
                    }
                }
                best.ok_or(Error::OptimizerStarved)?.0
            }
        }
    };

    let block = expansion_block(sys, omega1)?;
    let mut basis = extend_orthonormal(
        &SubspaceBasis::empty(sys.n(), cfg.rank_tol),
        &block,
        omega1,
    );
    let mut red = project(sys, &basis);
    let s0 = sample_on_subspace(sys, &red, omega1, &mu_cfg, &mut warnings)?;
    let mut r_prev = 1.0 / s0.mu;
    history.push(IterationRecord {
        k: 0,
        omega_next: omega1,
        gamma_at_opt: s0.gamma_star,
        mu_k: s0.mu,
        r_k: r_prev,
        basis_dim: basis.dim(),
        wall_time: clock(started),
        deflated: false,
    });

    let mut converged = false;
    let mut k = 1;
    while k <= cfg.k_max {
        let started = Instant::now();
        let (mut omega_next, mut best_mu) = maximize_mu(
            |w| reduced_mu_sample(&red, w, &mu_cfg),
            omega_max,
            cfg,
        )?;
        // absorbed frequencies are exact on the subspace and therefore always
        // competitive candidates; a surrogate with a poor global landscape
        // (most visibly the scalar spike case, where it is zero almost
        // everywhere) must never propose less than a point it interpolates
        for &wj in &basis.interpolation_points {
            if let Ok(s) = reduced_mu_sample(&red, wj, &mu_cfg) {
                if s.mu > best_mu {
                    omega_next = wj;
                    best_mu = s.mu;
                }
            }
        }

        // a maximizer that was already absorbed cannot enlarge the subspace;
        // settle at the current value instead of re-expanding forever
        let stagnant = basis
            .interpolation_points
            .iter()
            .any(|&w| (w - omega_next).abs() <= cfg.refine_tol);
        if stagnant {
            let s = sample_on_subspace(sys, &red, omega_next, &mu_cfg, &mut warnings)?;
            let r_k = 1.0 / s.mu;
            let verdict = check_termination(r_k, r_prev, k, cfg)?;
            history.push(IterationRecord {
                k,
                omega_next,
                gamma_at_opt: s.gamma_star,
                mu_k: s.mu,
                r_k,
                basis_dim: basis.dim(),
                wall_time: clock(started),
                deflated: true,
            });
            if verdict == Termination::Converged {
                converged = true;
            } else {
                warnings.push(format!(
                    "stagnation: maximizer ω = {omega_next:.6e} was already absorbed before \
                     the radius estimates settled"
                ));
            }
            break;
        }

        let block = expansion_block(sys, omega_next)?;
        let dim_before = basis.dim();
        basis = extend_orthonormal(&basis, &block, omega_next);
        let deflated = basis.dim() == dim_before;
        if !deflated {
            red = project(sys, &basis);
        }
        let s = sample_on_subspace(sys, &red, omega_next, &mu_cfg, &mut warnings)?;
        let r_k = 1.0 / s.mu;
        history.push(IterationRecord {
            k,
            omega_next,
            gamma_at_opt: s.gamma_star,
            mu_k: s.mu,
            r_k,
            basis_dim: basis.dim(),
            wall_time: clock(started),
            deflated,
        });
        match check_termination(r_k, r_prev, k, cfg)? {
            Termination::Converged => {
                converged = true;
                break;
            }
            Termination::IterationCap => break,
            Termination::Continue => {
                r_prev = r_k;
                k += 1;
            }
        }
    }

    let last = history.last().expect("initialization always records");
    if last.omega_next >= 0.99 * omega_max {
        warnings.push(format!(
            "maximizer ω = {:.6e} sits within 1% of the search bound omega_max = {omega_max:.6e}; \
             consider raising --omega-max",
            last.omega_next
        ));
    }
    let result = RadiusResult {
        radius: last.r_k,
        omega_star: last.omega_next,
        gamma_star: last.gamma_at_opt,
        mu_star: last.mu_k,
        converged,
        history,
        warnings,
    };
    Ok(SolveDetail {
        result,
        basis,
        reduced: red,
    })
}

/// μ at a frequency the basis has just absorbed: read from the reduced
/// problem, falling back to the full one if the reduced resolvent happens to
/// degenerate there.
fn sample_on_subspace(
    sys: &StateSpaceSystem,
    red: &ReducedSystem,
    omega: f64,
    mu_cfg: &MuConfig,
    warnings: &mut Vec<String>,
) -> Result<MuSample> {
    match reduced_mu_sample(red, omega, mu_cfg) {
        Ok(s) => Ok(s),
        Err(Error::DegenerateReduction { .. }) => {
            warnings.push(format!(
                "reduced resolvent degenerate at absorbed ω = {omega:.6e}; \
                 used the full system there"
            ));
            full_mu_sample(sys, omega, mu_cfg)
        }
        Err(e) => Err(e),
    }
}
