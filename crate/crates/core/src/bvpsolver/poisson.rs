//! Harmonic extension from the flat boundary and the kernel norm identities
//! behind the energy estimate for the Dirichlet problem.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{BoundaryData, Decay, GridSolution, MeshSpec};
use crate::coefficients::CoefficientField;
use crate::error::{invalid, Result};
use crate::geometry::LipschitzGraph;
use crate::quad::{self, GaussLegendre};
use crate::stats;

/// `P_t(x) = t / (π(x² + t²))`.
pub fn poisson_kernel(x: f64, t: f64) -> f64 {
    t / (PI * (x * x + t * t))
}

/// `∂_x P_t(x)`.
pub fn poisson_dx(x: f64, t: f64) -> f64 {
    let d = x * x + t * t;
    -2.0 * x * t / (PI * d * d)
}

/// `∂_t P_t(x)`.
pub fn poisson_dt(x: f64, t: f64) -> f64 {
    let d = x * x + t * t;
    (x * x - t * t) / (PI * d * d)
}

/// Panels on `[a, b]`: 512 equal ones on the part inside `|x| ≤ 64` and
/// doubling ones outside.
pub(crate) fn window_panels(a: f64, b: f64) -> Vec<f64> {
    let (lo, hi) = (a.max(-64.0), b.min(64.0));
    let mut br = if hi > lo { quad::linspace(lo, hi, 513) } else { vec![a, b] };
    let mut r = 64.0;
    while r < b {
        r = (2.0 * r).min(b);
        br.push(r);
    }
    let mut r = -64.0;
    while r > a {
        r = (2.0 * r).max(a);
        br.push(r);
    }
    br.push(a);
    br.push(b);
    br.retain(|&v| v >= a && v <= b);
    br.sort_by(f64::total_cmp);
    br.dedup();
    br
}

/// `(∫_window |f|^p dσ)^{1/p}` by composite Gauss–Legendre.
pub fn lp_norm_closure(f: &dyn Fn(f64) -> f64, g: Option<&LipschitzGraph>, p: f64, window: (f64, f64)) -> f64 {
    let gl = GaussLegendre::new(16);
    let br = window_panels(window.0, window.1);
    let s = gl.integrate_breaks(&br, |x| libm::pow(f(x).abs(), p) * g.map_or(1.0, |g| g.arc_weight(x)));
    libm::pow(s, 1.0 / p)
}

/// Panels for `∫ f(y) P_t(x − y) dy` restricted to `[a, b]`: graded toward
/// `x` at scale `t`, steps of `step` on `|y| ≤ 64`, geometric beyond.
fn poisson_panels(x: f64, t: f64, a: f64, b: f64, step: f64) -> Vec<f64> {
    let core = 64.0f64.max(x.abs() + 8.0);
    let (lo, hi) = (a.max(-core), b.min(core));
    let mut br = if hi > lo { crate::potentials::split_long(&[lo, hi], step) } else { vec![a.max(-core).min(b), b.min(core).max(a)] };
    let mut r = core;
    while r < 1e6 {
        r *= 2.0;
        br.push(-r.min(1e6));
        br.push(r.min(1e6));
    }
    br.push(a.max(-1e6));
    br.push(b.min(1e6));
    if t > 0.0 && x > a && x < b {
        br.extend(quad::graded_breaks(x, t / 8.0, 8.0f64.max(4.0 * t), 0.5));
    }
    br.retain(|&v| v >= a.max(-1e6) && v <= b.min(1e6));
    br.sort_by(f64::total_cmp);
    br.dedup_by(|p, q| (*p - *q).abs() < 1e-14 * (1.0 + q.abs()));
    br
}

/// `w(x, t) = (f₀ ∗ P_t)(x)`; `support` bounds the integration when known.
pub fn poisson_value(f: &dyn Fn(f64) -> f64, support: (f64, f64), x: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return f(x);
    }
    let gl = GaussLegendre::new(16);
    let br = poisson_panels(x, t, support.0, support.1, 0.5);
    gl.integrate_breaks(&br, |y| f(y) * poisson_kernel(x - y, t))
}

/// Tail exponent of `|f|` read off at `|x| ∈ {10³, 10⁴, 10⁵}`; `None` when
/// `f` vanishes there.
fn tail_slope(f: &dyn Fn(f64) -> f64) -> Option<f64> {
    let rs = [1e3, 1e4, 1e5];
    let v: Vec<f64> = rs.iter().map(|&r| f(r).abs().max(f(-r).abs())).collect();
    if v.iter().all(|&a| a == 0.0) {
        return None;
    }
    if v.contains(&0.0) {
        return Some(0.0);
    }
    Some(stats::fit_power(&rs, &v).slope)
}

/// Harmonic extension of `f₀` sampled on a flat-boundary mesh.
///
/// Data whose tail decays no faster than `|x|^{−6/7}` (so `f₀ ∉ L^{7/6}`)
/// are rejected.
pub fn poisson_extend(f0: &BoundaryData, spec: &MeshSpec) -> Result<GridSolution> {
    let f = f0.f.clone();
    if let Some(s) = tail_slope(&|x| f(x)) {
        if s > -6.0 / 7.0 {
            return Err(invalid!("boundary data has tail |x|^{s:.3}, not in L^(7/6)"));
        }
    }
    let g = LipschitzGraph::flat();
    let a = CoefficientField::identity();
    let mesh = spec.build(&g, &a)?;
    let mut sol = GridSolution::from_fn(mesh, &g, &a, |p| poisson_value(&|x| f(x), f0.window, p.x, p.y));
    sol.decay = Decay::Sampled;
    Ok(sol)
}

/// Log–log fit of a norm against `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted: f64,
    pub predicted: f64,
}

/// Kernel norms whose dependence on `t` is fitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelNorm {
    /// `‖P_t‖_{L^q}^{power}`.
    Lq { q: f64, power: f64 },
    /// `‖∂_x P_t‖_{L¹}`.
    DxL1,
    /// `‖∂_t P_t‖_{L¹}`.
    DtL1,
}

/// `2∫_0^∞ k(x) dx` on panels scaled with `t` (breaks at `t·2^k`).
fn half_line(t: f64, k: impl Fn(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(20);
    let mut br = vec![0.0, t / 8.0, t / 4.0, t / 2.0];
    let mut r = t;
    while r < 1e9 * t {
        br.push(r);
        r *= 2.0;
    }
    2.0 * gl.integrate_breaks(&br, k)
}

impl KernelNorm {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            KernelNorm::Lq { q, power } => {
                libm::pow(half_line(t, |x| libm::pow(poisson_kernel(x, t), q)), power / q)
            }
            KernelNorm::DxL1 => half_line(t, |x| poisson_dx(x, t).abs()),
            KernelNorm::DtL1 => half_line(t, |x| poisson_dt(x, t).abs()),
        }
    }

    /// Exponent from `‖P_t‖_q = t^{1/q − 1}‖P₁‖_q` and `‖∂P_t‖₁ = t^{−1}‖∂P₁‖₁`.
    pub fn predicted(&self) -> f64 {
        match *self {
            KernelNorm::Lq { q, power } => (1.0 / q - 1.0) * power,
            _ => -1.0,
        }
    }
}

/// Fit the power law of a kernel norm over `ts`.
pub fn scaling_exponent(norm: KernelNorm, ts: &[f64]) -> ScalingReport {
    let values: Vec<f64> = ts.iter().map(|&t| norm.eval(t)).collect();
    let fitted = stats::fit_power(ts, &values).slope;
    ScalingReport { ts: ts.to_vec(), values, fitted, predicted: norm.predicted() }
}

/// Components of the `L^{17/6}` estimate for the harmonic extension.
#[derive(Clone, Debug)]
pub struct PoissonNormReport {
    pub f_l7_6: f64,
    pub f_l17_6: f64,
    /// `(t, ‖w(·, t)‖_{17/6})` for `t ≤ 1`; each is at most `‖f₀‖_{17/6}`.
    pub near: Vec<(f64, f64)>,
    /// `(t, ‖w(·, t)‖_{17/6}, ‖f₀‖_{7/6}·‖P_t‖_{119/59})` for `t ≥ 1`.
    pub tail: Vec<(f64, f64, f64)>,
    /// Fit of `‖P_t‖_{119/59}^{17/6}` against `t`.
    pub kernel: ScalingReport,
}

impl PoissonNormReport {
    /// Every near-boundary norm and every tail norm respects its bound.
    pub fn holds(&self, slack: f64) -> bool {
        self.near.iter().all(|&(_, w)| w <= self.f_l17_6 * (1.0 + slack))
            && self.tail.iter().all(|&(_, w, b)| w <= b * (1.0 + slack))
    }
}

/// Evaluate the split estimate for `f₀` at `t ∈ {1/8, 1/4, 1/2, 1}` and
/// `t ∈ {1, 2, 4, 8}`.
pub fn poisson_norm_report(f0: &BoundaryData) -> PoissonNormReport {
    let q = 119.0 / 59.0;
    let p = 17.0 / 6.0;
    let f = f0.f.clone();
    let (a, b) = f0.window;
    let f_l7_6 = lp_norm_closure(&|x| f(x), None, 7.0 / 6.0, f0.window);
    let f_l17_6 = lp_norm_closure(&|x| f(x), None, p, f0.window);
    let gl = GaussLegendre::new(16);
    let w_norm = |t: f64| {
        let br = window_panels(a.max(-1e5) - 8.0 - 4.0 * t, b.min(1e5) + 8.0 + 4.0 * t);
        let s = gl.integrate_breaks(&br, |x| libm::pow(poisson_value(&|y| f(y), f0.window, x, t).abs(), p));
        libm::pow(s, 1.0 / p)
    };
    let near = [0.125, 0.25, 0.5, 1.0].iter().map(|&t| (t, w_norm(t))).collect();
    let lq = KernelNorm::Lq { q, power: 1.0 };
    let tail = [1.0, 2.0, 4.0, 8.0].iter().map(|&t| (t, w_norm(t), f_l7_6 * lq.eval(t))).collect();
    let kernel = scaling_exponent(KernelNorm::Lq { q, power: p }, &[1.0, 2.0, 4.0, 8.0]);
    PoissonNormReport { f_l7_6, f_l17_6, near, tail, kernel }
}
