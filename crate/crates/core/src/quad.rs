//! Adaptive Simpson quadrature over a list of panels.

/// Tolerances for the Hellinger quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadControl {
    /// Absolute tolerance on the integral of `(sqrt f - sqrt g)^2`.
    pub abs_tol: f64,
    /// Densities below this value are treated as zero when truncating the range.
    pub truncation: f64,
    /// Number of uniform panels the truncated range is split into before refinement.
    pub panels: usize,
    pub max_depth: u32,
}

impl Default for QuadControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            truncation: 1e-14,
            panels: 128,
            max_depth: 40,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
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
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Stop once the discrepancy is at rounding level (or not a number): a
    // tolerance below it can never be met and would otherwise recurse to full
    // depth everywhere.
    let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0
        || !delta.is_finite()
        || delta.abs() <= 15.0 * tol
        || delta.abs() <= roundoff
        || (m - a).abs() < 1e-15 * (1.0 + m.abs())
    {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Integrates `f` over `[lo, hi]` split into `ctl.panels` uniform panels plus
/// the given interior breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, extra: &[f64], ctl: &QuadControl) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = ctl.panels.max(1);
    let mut pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    pts.extend(extra.iter().copied().filter(|x| *x > lo && *x < hi));
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let tol = ctl.abs_tol / (pts.len() - 1) as f64;
    pts.windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol, ctl.max_depth))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_gaussians() {
        let ctl = QuadControl::default();
        let v = integrate(&|x: f64| x * x, 0.0, 3.0, &[], &ctl);
        assert!((v - 9.0).abs() < 1e-10);
        let g = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(&g, -12.0, 12.0, &[0.0], &ctl);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unattainable_tolerance_terminates() {
        let ctl = QuadControl {
            abs_tol: 1e-30,
            ..QuadControl::default()
        };
        let g = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let calls = std::cell::Cell::new(0u64);
        let counted = |x: f64| {
            calls.set(calls.get() + 1);
            g(x)
        };
        let v = integrate(&counted, -12.0, 12.0, &[0.0], &ctl);
        assert!((v - 1.0).abs() < 1e-13);
        assert!(calls.get() < 1_000_000, "{} evaluations", calls.get());
    }

    #[test]
    fn nan_integrand_terminates() {
        let v = integrate(&|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &[], &QuadControl::default());
        assert!(v.is_nan());
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(&|_| 1.0, 1.0, 1.0, &[], &QuadControl::default()), 0.0);
    }
}
