//! Scalar search primitives shared by the inner γ-minimization, the outer
//! frequency sweep, and the brute-force reference path: golden-section
//! minimization on an interval and sign-change bisection.

/// Interior ratios of the golden section: 1/φ ≈ 0.618 and 1/φ² ≈ 0.382.
const INV_PHI: f64 = 0.618_033_988_749_894_9;
const INV_PHI2: f64 = 0.381_966_011_250_105_2;

/// Minimizes a unimodal `f` over `[a, b]` to absolute tolerance `tol` in the
/// argument and returns `(x_min, f_min)`.
///
/// Both endpoints are evaluated and participate in the final comparison, so a
/// monotone `f` resolves to the correct boundary value rather than a point
/// `tol` away from it. The evaluation sequence is deterministic.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    assert!(b >= a, "golden_min needs an ordered interval");
    assert!(tol > 0.0, "golden_min needs a positive tolerance");
    let (a0, fa) = (a, f(a));
    let (b0, fb) = (b, f(b));

    let (mut lo, mut hi) = (a, b);
    let mut x1 = lo + INV_PHI2 * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + INV_PHI2 * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }

    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fa < best.1 {
        best = (a0, fa);
    }
    if fb < best.1 {
        best = (b0, fb);
    }
    best
}

/// Maximizes a unimodal `f` over `[a, b]`; see [`golden_min`].
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, neg) = golden_min(|t| -f(t), a, b, tol);
    (x, -neg)
}

/// Locates a root of a continuous `f` inside `[a, b]` by bisection, given the
/// already-computed value `fa = f(a)` with `sign(f(a)) ≠ sign(f(b))`.
///
/// Stops when the bracket is shorter than `tol` and returns its midpoint.
/// Evaluation failures propagate unchanged.
pub fn bisect_root<E, F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    assert!(b >= a && tol > 0.0);
    loop {
        let mid = 0.5 * (a + b);
        if b - a <= tol {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
}
