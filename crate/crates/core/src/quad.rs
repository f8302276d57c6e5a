//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol`. Returns `0` on an empty interval and
/// flips sign when `b < a`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    refine(f, a, b, fa, fm, fb, whole, tol.max(1e-15), MAX_DEPTH)
}

/// Integrates piecewise over `breaks` (sorted, assumed inside `(a, b)`), so
/// kinks in `f` land on panel boundaries.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    if b < a {
        return -integrate_with_breaks(f, b, a, breaks, tol);
    }
    let inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    if inner.is_empty() {
        return integrate(f, a, b, tol);
    }
    let per = tol / (inner.len() + 1) as f64;
    let mut total = 0.0;
    let mut lo = a;
    for &x in &inner {
        total += integrate(f, lo, x, per);
        lo = x;
    }
    total + integrate(f, lo, b, per)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
