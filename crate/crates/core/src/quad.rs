//! Quadrature rules, graded panel layouts and one-dimensional searches.

use alloc::vec::Vec;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(-x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(m + r * x);
        }
        s * r
    }

    /// Mapped nodes and weights for `[a, b]`, appended to the output vectors.
    pub fn push_mapped(&self, a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            xs.push(m + r * x);
            ws.push(w * r);
        }
    }

    /// Composite rule over consecutive breakpoints.
    pub fn integrate_breaks<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks.windows(2).map(|w| self.integrate(w[0], w[1], &mut f)).sum()
    }
}

/// Breakpoints `c ± r_k` with `r_k = outer · ratio^k`, stopping once
/// `r_k < inner`, plus the innermost interval `[c − r_K, c + r_K]`.
///
/// The result is sorted and symmetric about `c`; it resolves integrands with
/// a near-singularity of width `inner` at `c`.
pub fn graded_breaks(c: f64, inner: f64, outer: f64, ratio: f64) -> Vec<f64> {
    assert!(ratio > 0.0 && ratio < 1.0 && inner > 0.0 && outer > inner);
    let mut radii = Vec::new();
    let mut r = outer;
    while r >= inner {
        radii.push(r);
        r *= ratio;
    }
    radii.push(r);
    let mut out = Vec::with_capacity(2 * radii.len());
    for &r in &radii {
        out.push(c - r);
    }
    for &r in radii.iter().rev() {
        out.push(c + r);
    }
    out
}

/// Breakpoints on `[a, b]` graded geometrically toward `a`.
pub fn graded_toward(a: f64, b: f64, inner: f64, ratio: f64) -> Vec<f64> {
    let len = b - a;
    let mut pts = Vec::new();
    let mut r = len;
    while r > inner {
        pts.push(a + r);
        r *= ratio;
    }
    pts.push(a + r);
    pts.push(a);
    pts.reverse();
    pts
}

/// Merge extra cut points into a sorted breakpoint list (cuts outside the
/// range are ignored, duplicates removed).
pub fn insert_cuts(breaks: &mut Vec<f64>, cuts: &[f64]) {
    let (lo, hi) = (breaks[0], *breaks.last().unwrap());
    for &c in cuts {
        if c > lo && c < hi {
            breaks.push(c);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64 + ?Sized>(
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
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Golden-section minimisation on `[a, b]` to relative tolerance `rtol`.
/// Returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rtol: f64) -> (f64, f64) {
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a).abs() <= rtol * (a.abs() + b.abs()).max(1e-300) + 1e-300 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of a continuous function with a sign change on `[a, b]` by bisection.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Logarithmically spaced values from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0 && n >= 2);
    let (l0, l1) = (libm::log(lo), libm::log(hi));
    (0..n).map(|i| libm::exp(l0 + (l1 - l0) * i as f64 / (n - 1) as f64)).collect()
}

/// Evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(16);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(31));
        assert!((v - 2f64.powi(32) / 32.0).abs() / v < 1e-13);
    }

    #[test]
    fn graded_panels_resolve_lorentzian() {
        let gl = GaussLegendre::new(16);
        let h = 1e-6;
        let br = graded_breaks(0.0, h / 32.0, 1e4, 0.5);
        let v = gl.integrate_breaks(&br, |x| h / (core::f64::consts::PI * (x * x + h * h)));
        let exact = 2.0 / core::f64::consts::PI * libm::atan(1e4 / h);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn adaptive_simpson_hits_tolerance() {
        let v = adaptive_simpson(&|x: f64| libm::exp(x), 0.0, 1.0, 1e-13);
        assert!((v - (core::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, _) = golden_min(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
