//! Functions on the boundary line, their norms, H¹ atoms, the
//! Hardy–Littlewood maximal function, Hilbert transforms and BMO.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::LipschitzGraph;
use crate::linalg::Mat2;
use crate::quad::{self, GaussLegendre};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// Default half width of the integration range for functions without
/// compact support.
pub const FAR: f64 = 1e6;

/// How a boundary function is stored.
#[derive(Clone)]
pub enum Repr {
    Closure(ScalarFn),
    /// Piecewise-linear interpolation of samples, zero outside the sample
    /// range.
    Samples { xs: Arc<[f64]>, vals: Arc<[f64]> },
}

/// A real function of the boundary parameter `x`.
#[derive(Clone)]
pub struct BoundaryFunction {
    pub repr: Repr,
    /// Interval outside which the function vanishes.
    pub support: Option<(f64, f64)>,
    /// Abscissae where the function or its derivative may jump; quadrature
    /// panels are cut there.
    pub breaks: Vec<f64>,
    /// Length over which the function varies, when smaller features than
    /// the default panels must be resolved.
    pub scale: Option<f64>,
}

impl core::fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let kind = match &self.repr {
            Repr::Closure(_) => "closure",
            Repr::Samples { .. } => "samples",
        };
        f.debug_struct("BoundaryFunction").field("kind", &kind).field("support", &self.support).finish()
    }
}

impl BoundaryFunction {
    pub fn closure(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { repr: Repr::Closure(Arc::new(f)), support: None, breaks: Vec::new(), scale: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::closure(move |_| c)
    }

    /// Indicator of `[a, b]`.
    pub fn indicator(a: f64, b: f64) -> Self {
        Self::closure(move |x| if x >= a && x <= b { 1.0 } else { 0.0 }).with_support(a, b)
    }

    pub fn samples(xs: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != vals.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid!("samples need ≥ 2 strictly increasing abscissae with matching values"));
        }
        let support = Some((xs[0], xs[xs.len() - 1]));
        Ok(Self { repr: Repr::Samples { xs: xs.into(), vals: vals.into() }, support, breaks: Vec::new(), scale: None })
    }

    pub fn with_support(mut self, a: f64, b: f64) -> Self {
        self.support = Some((a, b));
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if let Some((a, b)) = self.support {
            if x < a || x > b {
                return 0.0;
            }
        }
        match &self.repr {
            Repr::Closure(f) => f(x),
            Repr::Samples { xs, vals } => {
                let n = xs.len();
                let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                vals[i - 1] * (1.0 - w) + vals[i] * w
            }
        }
    }

    /// Integration range: the support, or `[lo, hi]` when unbounded.
    pub fn range_or(&self, lo: f64, hi: f64) -> (f64, f64) {
        self.support.unwrap_or((lo, hi))
    }

    /// Panel breakpoints of `[a, b]` resolving this function: its breaks,
    /// its sample nodes (at most a few thousand) and `pieces` equal panels.
    pub fn panels(&self, a: f64, b: f64, pieces: usize) -> Vec<f64> {
        let mut br = quad::linspace(a, b, pieces.max(1) + 1);
        let mut cuts = self.breaks.clone();
        if let Some((s0, s1)) = self.support {
            cuts.push(s0);
            cuts.push(s1);
        }
        if let Repr::Samples { xs, .. } = &self.repr {
            cuts.extend(xs.iter().copied());
        }
        quad::insert_cuts(&mut br, &cuts);
        br
    }

    /// `(∫ |f|^p dσ)^{1/p}` (`dσ = (1 + φ′²)^{1/2} dx`, or `dx` without a graph)
    /// over the support, or over `window` when unbounded.
    pub fn lp_norm(&self, g: Option<&LipschitzGraph>, p: f64, window: (f64, f64)) -> f64 {
        assert!(p >= 1.0);
        let (a, b) = self.range_or(window.0, window.1);
        let gl = GaussLegendre::new(16);
        let br = self.panels(a, b, 256);
        let s = gl.integrate_breaks(&br, |x| {
            let w = g.map_or(1.0, |g| g.arc_weight(x));
            libm::pow(self.eval(x).abs(), p) * w
        });
        libm::pow(s, 1.0 / p)
    }
}

/// A function of the boundary parameter with values in 2×2 matrices.
#[derive(Clone)]
pub struct MatrixFunction {
    pub f: MatrixFn,
    pub support: Option<(f64, f64)>,
    pub breaks: Vec<f64>,
    pub scale: Option<f64>,
}

impl core::fmt::Debug for MatrixFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MatrixFunction").field("support", &self.support).finish()
    }
}

impl MatrixFunction {
    pub fn new(f: impl Fn(f64) -> Mat2 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), support: None, breaks: Vec::new(), scale: None }
    }

    pub fn with_support(mut self, a: f64, b: f64) -> Self {
        self.support = Some((a, b));
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    /// `x ↦ s(x) M`.
    pub fn scalar_times(s: BoundaryFunction, m: Mat2) -> Self {
        let (support, breaks, scale) = (s.support, s.breaks.clone(), s.scale);
        Self { f: Arc::new(move |x| m.scale(s.eval(x))), support, breaks, scale }
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        if let Some((a, b)) = self.support {
            if x < a || x > b {
                return Mat2::ZERO;
            }
        }
        (self.f)(x)
    }

    /// Left multiplication `x ↦ L(x) F(x)`, keeping support and breaks.
    pub fn left_mul(&self, l: impl Fn(f64) -> Mat2 + Send + Sync + 'static) -> Self {
        let inner = self.clone();
        Self { f: Arc::new(move |x| l(x) * inner.eval(x)), ..self.clone() }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    /// Entry `(i, j)` as a scalar function with the same support, breaks
    /// and scale.
    pub fn entry(&self, i: usize, j: usize) -> BoundaryFunction {
        let inner = self.clone();
        let pick = move |x: f64| {
            let m = inner.eval(x);
            [[m.a, m.b], [m.c, m.d]][i][j]
        };
        BoundaryFunction {
            repr: Repr::Closure(Arc::new(pick)),
            support: self.support,
            breaks: self.breaks.clone(),
            scale: self.scale,
        }
    }
}

/// Smooth compactly supported profile `β(u) = exp(1 − 1/(1 − u²))` on
/// `|u| < 1`, with `β(0) = 1`, together with `β′` and `β″`.
pub fn smooth_bump(u: f64) -> (f64, f64, f64) {
    if u.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - u * u;
    let b = libm::exp(1.0 - 1.0 / q);
    // d/du (−1/q) = −2u/q².
    let g1 = -2.0 * u / (q * q);
    let g2 = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
    (b, b * g1, b * (g1 * g1 + g2))
}

/// `(sup|β′|, sup|β″|)` of [`smooth_bump`], located by golden-section
/// search on the intervals where the extrema lie.
pub fn smooth_bump_derivative_sups() -> (f64, f64) {
    let d1 = quad::golden_min(|u| -smooth_bump(u).1.abs(), 0.0, 1.0, 1e-13).1.abs();
    // β″ is most negative at 0 and most positive on (0.6, 1).
    let d2_mid = smooth_bump(0.0).2.abs();
    let d2_out = quad::golden_min(|u| -smooth_bump(u).2, 0.5, 1.0, 1e-13).1.abs();
    (d1, d2_mid.max(d2_out))
}

/// Tolerance on `|∫ a|` for an H¹ atom.
pub const TOL_CANCEL: f64 = 1e-12;

/// An H¹ atom `a` on the interval `I`.
#[derive(Clone, Debug)]
pub struct H1Atom {
    pub interval: (f64, f64),
    pub a: BoundaryFunction,
}

impl H1Atom {
    /// Validate support, size and cancellation.
    pub fn new(interval: (f64, f64), a: BoundaryFunction) -> Result<Self> {
        let (lo, hi) = interval;
        if !(hi > lo) {
            return Err(Error::AtomInvariant("a nondegenerate interval".into()));
        }
        match a.support {
            Some((s0, s1)) if s0 >= lo && s1 <= hi => {}
            _ => return Err(Error::AtomInvariant("support inside I".into())),
        }
        let gl = GaussLegendre::new(16);
        let br = a.panels(lo, hi, 64);
        let l2 = libm::sqrt(gl.integrate_breaks(&br, |x| a.eval(x) * a.eval(x)));
        let bound = 1.0 / libm::sqrt(hi - lo);
        if l2 > bound * (1.0 + 1e-12) {
            return Err(Error::AtomInvariant(alloc::format!("‖a‖₂ = {l2} > |I|^(-1/2) = {bound}")));
        }
        let mean = gl.integrate_breaks(&br, |x| a.eval(x));
        if mean.abs() > TOL_CANCEL {
            return Err(Error::AtomInvariant(alloc::format!("∫a = {mean:e}")));
        }
        Ok(Self { interval, a })
    }

    /// Difference of two mollified indicators on the halves of
    /// `I = [c − r, c + r]`, scaled so that `‖a‖₂ = size·|I|^{−1/2}` with
    /// `0 < size ≤ 1`. Cancellation is exact by antisymmetry.
    pub fn smooth(center: f64, radius: f64, size: f64) -> Result<Self> {
        if !(radius > 0.0) || !(size > 0.0 && size <= 1.0) {
            return Err(Error::AtomInvariant("radius > 0 and size in (0, 1]".into()));
        }
        let half = 0.5 * radius;
        // ∫ β(u)² du on (−1, 1).
        let gl = GaussLegendre::new(16);
        let beta2 = gl.integrate_breaks(&quad::linspace(-1.0, 1.0, 33), |u| smooth_bump(u).0 * smooth_bump(u).0);
        // ‖a‖₂² = 2 · c² · half · beta2.
        let target = size / libm::sqrt(2.0 * radius);
        let c = target / libm::sqrt(2.0 * half * beta2) * (1.0 - 1e-14);
        let f = move |x: f64| {
            let u = x - center;
            // Antisymmetric in u, so the integral cancels pointwise.
            let s = if u < 0.0 { 1.0 } else { -1.0 };
            s * c * smooth_bump((u.abs() - half) / half).0
        };
        let a = BoundaryFunction::closure(f).with_support(center - radius, center + radius).with_breaks(alloc::vec![
            center - half,
            center,
            center + half
        ]);
        Self::new((center - radius, center + radius), a)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.interval.0 + self.interval.1)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.interval.1 - self.interval.0)
    }
}

/// Centred boundary ball `Δ_r(Q)` as a union of parameter intervals.
fn boundary_ball(g: Option<&LipschitzGraph>, x: f64, r: f64) -> Vec<(f64, f64)> {
    let Some(g) = g else {
        return alloc::vec![(x - r, x + r)];
    };
    let q = g.point(x);
    let inside = |y: f64| (g.point(y) - q).norm() < r;
    // Along the curve |Y − Q| ≥ |y − x|, so the ball lies in [x − r, x + r];
    // locate the crossings on a fine grid and polish by bisection.
    let n = 512;
    let ys = quad::linspace(x - r, x + r, n + 1);
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for w in ys.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ia, ib) = (inside(a), inside(b));
        if ia && start.is_none() {
            start = Some(a);
        }
        if ia != ib {
            let root = quad::bisect(|y| (g.point(y) - q).norm() - r, a, b, 1e-14 * (1.0 + r));
            if ib {
                start = Some(root);
            } else if let Some(s) = start.take() {
                out.push((s, root));
            }
        }
    }
    if let Some(s) = start {
        out.push((s, x + r));
    }
    out
}

/// Hardy–Littlewood maximal function `M f(Q) = sup_r σ(Δ_r)^{-1} ∫_{Δ_r} |f| dσ`
/// over a geometric radius grid, refined at the distances from `x` to the
/// breakpoints of `f` and by golden-section search around the best radius.
pub fn hl_maximal(f: &BoundaryFunction, g: Option<&LipschitzGraph>, x: f64, r_range: (f64, f64)) -> f64 {
    let gl = GaussLegendre::new(16);
    let avg = |r: f64| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in boundary_ball(g, x, r) {
            let mut br = f.panels(a, b, 8);
            quad::insert_cuts(&mut br, &[x]);
            num += gl.integrate_breaks(&br, |y| f.eval(y).abs() * g.map_or(1.0, |g| g.arc_weight(y)));
            den += gl.integrate_breaks(&br, |y| g.map_or(1.0, |g| g.arc_weight(y)));
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let (r0, r1) = r_range;
    let count = libm::ceil(libm::log2(r1 / r0) * 8.0).max(2.0) as usize;
    let mut radii = quad::geomspace(r0, r1, count);
    let mut cuts = f.breaks.clone();
    if let Some((a, b)) = f.support {
        cuts.push(a);
        cuts.push(b);
    }
    radii.extend(cuts.iter().map(|c| (c - x).abs()).filter(|r| *r >= r0 && *r <= r1));
    let (mut best_r, mut best) = (r0, 0.0);
    for &r in &radii {
        let v = avg(r);
        if v > best {
            best = v;
            best_r = r;
        }
    }
    let (_, refined) = quad::golden_min(|r| -avg(r), (best_r / 1.2).max(r0), (best_r * 1.2).min(r1), 1e-10);
    best.max(-refined)
}

/// Mean oscillation `⨍_I |f − ⨍_I f|` over `[a, b]`.
pub fn mean_oscillation(f: &BoundaryFunction, a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let br = f.panels(a, b, 4);
    let len = b - a;
    let mean = gl.integrate_breaks(&br, |y| f.eval(y)) / len;
    gl.integrate_breaks(&br, |y| (f.eval(y) - mean).abs()) / len
}

/// BMO seminorm over dyadic intervals of lengths `2^j`, `j ∈ levels`, inside
/// `window`, together with the same intervals shifted by half a length.
pub fn bmo_norm(f: &BoundaryFunction, window: (f64, f64), levels: (i32, i32)) -> f64 {
    let mut best = 0.0f64;
    for j in levels.0..=levels.1 {
        let len = libm::pow(2.0, j as f64);
        for shift in [0.0, 0.5] {
            let k0 = libm::floor(window.0 / len - shift) as i64;
            let k1 = libm::ceil(window.1 / len - shift) as i64;
            for k in k0..k1 {
                let a = (k as f64 + shift) * len;
                let b = a + len;
                if a < window.0 || b > window.1 {
                    continue;
                }
                best = best.max(mean_oscillation(f, a, b));
            }
        }
    }
    best
}

/// Hilbert transform `Hf(x) = p.v. (1/π) ∫ f(y)/(x − y) dy` by quadrature
/// of `(1/π) ∫₀^∞ (f(x − u) − f(x + u))/u du`.
pub fn hilbert_pv(f: &dyn Fn(f64) -> f64, x: f64, far: f64) -> f64 {
    let gl = GaussLegendre::new(16);
    let mut br = quad::graded_toward(0.0, 1.0, 1e-12, 0.5);
    let mut r = 1.0;
    while r < far {
        r = (2.0 * r).min(far);
        br.push(r);
    }
    // Keep outer panels at most unit length so oscillatory inputs resolve.
    let mut fine = Vec::with_capacity(br.len());
    for w in br.windows(2) {
        let m = libm::ceil((w[1] - w[0]) / 1.0).max(1.0) as usize;
        let m = m.min(4096);
        for i in 0..m {
            fine.push(w[0] + (w[1] - w[0]) * i as f64 / m as f64);
        }
    }
    fine.push(*br.last().unwrap());
    gl.integrate_breaks(&fine, |u| if u == 0.0 { 0.0 } else { (f(x - u) - f(x + u)) / u }) / core::f64::consts::PI
}

/// Hilbert transform of a periodic function sampled on `n` equispaced nodes
/// of a period, by the multiplier `−i·sign(ξ)`.
#[cfg(feature = "std")]
pub fn hilbert_periodic(vals: &[f64]) -> Vec<f64> {
    use num_complex::Complex64;
    use rustfft::FftPlanner;
    let n = vals.len();
    let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let sign = if k == 0 || 2 * k == n {
            0.0
        } else if 2 * k < n {
            1.0
        } else {
            -1.0
        };
        *c *= Complex64::new(0.0, -sign);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Direct `O(n²)` evaluation of the same multiplier, for builds without an
/// FFT backend.
#[cfg(not(feature = "std"))]
pub fn hilbert_periodic(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let tau = 2.0 * core::f64::consts::PI;
    let mut out = alloc::vec![0.0; n];
    for k in 1..(n + 1) / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, v) in vals.iter().enumerate() {
            let th = tau * (k * j) as f64 / n as f64;
            re += v * libm::cos(th);
            im -= v * libm::sin(th);
        }
        // Multiplier −i on positive frequencies, conjugate on negative.
        for (j, o) in out.iter_mut().enumerate() {
            let th = tau * (k * j) as f64 / n as f64;
            *o += 2.0 * (im * libm::cos(th) + re * libm::sin(th)) / n as f64;
        }
    }
    out
}

/// Randomised estimate of `‖H‖_{L²→L²}`: the largest ratio `‖Hf‖₂/‖f‖₂`
/// over `trials` random real trigonometric polynomials of degree below
/// `n/2` with zero mean.
pub fn hilbert_norm_estimate(n: usize, trials: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * core::f64::consts::PI;
    let mut best = 0.0f64;
    for _ in 0..trials {
        let coef: Vec<(f64, f64)> =
            (1..n / 2).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let th = tau * j as f64 / n as f64;
                coef.iter().enumerate().map(|(k, (a, b))| {
                    let kt = (k + 1) as f64 * th;
                    a * libm::cos(kt) + b * libm::sin(kt)
                }).sum()
            })
            .collect();
        let h = hilbert_periodic(&vals);
        let num: f64 = h.iter().map(|v| v * v).sum();
        let den: f64 = vals.iter().map(|v| v * v).sum();
        best = best.max(libm::sqrt(num / den));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximal_function_of_indicator() {
        let f = BoundaryFunction::indicator(0.0, 1.0);
        let m = hl_maximal(&f, None, 2.0, (1e-3, 1e3));
        assert!((m - 0.25).abs() < 1e-12, "{m}");
        let one = BoundaryFunction::constant(1.0);
        assert!((hl_maximal(&one, None, 0.3, (1e-2, 10.0)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn bmo_of_sign_and_constants() {
        let s = BoundaryFunction::closure(|x| if x >= 0.0 { 1.0 } else { -1.0 }).with_breaks(alloc::vec![0.0]);
        let v = bmo_norm(&s, (-8.0, 8.0), (-3, 3));
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        let c = BoundaryFunction::constant(5.0);
        assert!(bmo_norm(&c, (-4.0, 4.0), (-2, 2)) < 1e-14);
        let f = BoundaryFunction::closure(libm::sin);
        let g = BoundaryFunction::closure(|x| libm::sin(x) + 3.0);
        assert_eq!(bmo_norm(&f, (-4.0, 4.0), (-2, 2)), bmo_norm(&g, (-4.0, 4.0), (-2, 2)));
    }

    #[test]
    fn hilbert_classical_pairs() {
        let f = |x: f64| 1.0 / (1.0 + x * x);
        for x in [-2.0, 0.0, 0.5, 3.0] {
            let h = hilbert_pv(&f, x, 1e7);
            assert!((h - x / (1.0 + x * x)).abs() < 1e-6, "{x}: {h}");
        }
        let n = 64;
        let vals: Vec<f64> = (0..n).map(|j| libm::cos(2.0 * core::f64::consts::PI * j as f64 / n as f64)).collect();
        let h = hilbert_periodic(&vals);
        for (j, v) in h.iter().enumerate() {
            assert!((v - libm::sin(2.0 * core::f64::consts::PI * j as f64 / n as f64)).abs() < 1e-13);
        }
    }

    #[test]
    fn hilbert_is_an_isometry_squaring_to_minus_one() {
        let n = 128;
        let tau = 2.0 * core::f64::consts::PI;
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let t = tau * j as f64 / n as f64;
                libm::sin(3.0 * t) + 0.5 * libm::cos(7.0 * t) - 0.2 * libm::sin(20.0 * t)
            })
            .collect();
        let h = hilbert_periodic(&vals);
        let hh = hilbert_periodic(&h);
        for (a, b) in vals.iter().zip(&hh) {
            assert!((a + b).abs() < 1e-12);
        }
        let n2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        assert!((n2(&h) / n2(&vals) - 1.0).abs() < 1e-12);
        assert!((hilbert_norm_estimate(64, 20, 7) - 1.0).abs() < 0.01);
    }

    #[test]
    fn principal_value_matches_sinc_transform() {
        let sinc = |x: f64| if x == 0.0 { 1.0 } else { libm::sin(x) / x };
        for x in [0.7, 2.0, -5.0] {
            let h = hilbert_pv(&sinc, x, 1e6);
            let exact = (1.0 - libm::cos(x)) / x;
            assert!((h - exact).abs() < 1e-6, "{x}: {h} vs {exact}");
        }
    }

    #[test]
    fn maximal_function_is_sublinear_and_dominates() {
        let f = BoundaryFunction::closure(|x| libm::exp(-x * x));
        let g = BoundaryFunction::indicator(-1.0, 0.5);
        let fg = BoundaryFunction::closure(|x| libm::exp(-x * x) + if (-1.0..=0.5).contains(&x) { 1.0 } else { 0.0 })
            .with_breaks(alloc::vec![-1.0, 0.5]);
        for x in [-2.0, 0.0, 0.3, 1.5] {
            let (mf, mg, mfg) =
                (hl_maximal(&f, None, x, (1e-3, 1e2)), hl_maximal(&g, None, x, (1e-3, 1e2)), hl_maximal(&fg, None, x, (1e-3, 1e2)));
            assert!(mfg <= mf + mg + 1e-9);
            assert!(mf >= f.eval(x) - 1e-5);
        }
    }

    #[test]
    fn smooth_atoms_satisfy_invariants() {
        let a = H1Atom::smooth(0.3, 0.7, 1.0).unwrap();
        assert!((a.interval.0 + 0.4).abs() < 1e-15 && (a.interval.1 - 1.0).abs() < 1e-15);
        assert!((a.a.lp_norm(None, 2.0, (-1.0, 2.0)) - 1.0 / libm::sqrt(1.4)).abs() < 1e-10);
        let bad = BoundaryFunction::constant(1.0).with_support(0.0, 1.0);
        assert!(H1Atom::new((0.0, 1.0), bad).is_err());
        let wide = BoundaryFunction::constant(0.0).with_support(-1.0, 2.0);
        assert!(H1Atom::new((0.0, 1.0), wide).is_err());
    }
}
