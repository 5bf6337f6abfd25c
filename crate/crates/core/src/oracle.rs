//! Adaptive Simpson quadrature for smooth 1-D integrands.
//!
//! Used as an independent check on closed-form constants; it never touches
//! the grid code.

use std::f64::consts::PI;

/// `∫_a^b f` to absolute tolerance `tol` by recursive Simpson bisection with
/// Richardson correction.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    refine(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
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
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_0^∞ f` for integrands with Gaussian decay, split at the given breaks
/// and truncated at `cutoff`.
pub fn half_line(f: &impl Fn(f64) -> f64, breaks: &[f64], cutoff: f64, tol: f64) -> f64 {
    let mut edges = vec![0.0];
    edges.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < cutoff));
    edges.push(cutoff);
    let pieces = (edges.len() - 1) as f64;
    edges
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces))
        .sum()
}

/// `∫ |∇G|^q` by radial quadrature, written out independently of the
/// closed form: `|∇G|(r) = (r/2) (4π)^{-N/2} e^{-r²/4}` integrated against
/// `r^{N-1}` and the sphere measure (2 for `N = 1`, `2π` for `N = 2`).
pub fn grad_gaussian_power_quadrature(dim: usize, q: f64) -> f64 {
    let n = dim as f64;
    let f = move |r: f64| {
        let grad = 0.5 * r * (4.0 * PI).powf(-n / 2.0) * (-r * r / 4.0).exp();
        r.powf(n - 1.0) * grad.powf(q)
    };
    let measure = if dim == 1 { 2.0 } else { 2.0 * PI };
    measure * half_line(&f, &[0.5, 1.0, 2.0, 4.0, 8.0], 40.0, 1e-15)
}
