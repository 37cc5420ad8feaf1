//! The operator `L_h = div A∇` with `A = (1 m; −m 1)`, `m = h·sign x`, its
//! explicit solution `w = Im((|x| + it)^a)`, and the resulting failure of
//! the regularity and Neumann estimates in `L^p` once `bp > 1`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::bvpsolver::{solve_dirichlet, BoundaryData, MeshSpec};
use crate::coefficients::{conjugate_matrix, CoefficientField};
use crate::error::{invalid, Result};
use crate::geometry::LipschitzGraph;
use crate::linalg::Vec2;
use crate::quad::{self, GaussLegendre};
use crate::stats;

#[cfg(test)]
mod tests;

/// `(a, b, h)` with `b = 1 − a` and `h = tan(bπ/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KkptOperator {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

/// Operator for exponent `a ∈ (0, 1)`.
pub fn make_operator(a: f64) -> Result<KkptOperator> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid!("exponent a = {a} must lie in (0, 1)"));
    }
    let b = 1.0 - a;
    Ok(KkptOperator { a, b, h: libm::tan(b * PI / 2.0) })
}

impl KkptOperator {
    /// The Laplacian seen as the `a = 1` end of the family.
    pub fn laplace() -> Self {
        Self { a: 1.0, b: 0.0, h: 0.0 }
    }

    /// Same exponent with a different skew part, for negative controls.
    pub fn with_h(self, h: f64) -> Self {
        Self { h, ..self }
    }

    pub fn field(&self) -> CoefficientField {
        CoefficientField::kkpt(self.h)
    }

    pub fn m(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.h
        } else {
            -self.h
        }
    }

    /// `bp`, the quantity whose position relative to 1 decides the failure.
    pub fn bp(&self, p: f64) -> f64 {
        self.b * p
    }
}

fn z_of(x: f64, t: f64) -> Complex64 {
    Complex64::new(x.abs(), t)
}

/// `w(x, t) = Im((x + it)^a)` for `x ≥ 0`, `Im((−x + it)^a)` for `x < 0`.
pub fn exact_w(op: &KkptOperator, x: f64, t: f64) -> f64 {
    let z = z_of(x, t);
    if z == Complex64::new(0.0, 0.0) {
        return 0.0;
    }
    z.powf(op.a).im
}

/// `∇w` from the complex derivative `a z^{a−1}`.
pub fn exact_grad(op: &KkptOperator, x: f64, t: f64) -> Vec2 {
    let d = op.a * z_of(x, t).powf(op.a - 1.0);
    let sx = if x >= 0.0 { 1.0 } else { -1.0 };
    Vec2::new(sx * d.im, d.re)
}

/// `∇w̃` for the conjugate defined by `J∇w̃ = A∇w`.
pub fn conjugate_grad(op: &KkptOperator, x: f64, t: f64) -> Vec2 {
    let g = exact_grad(op, x, t);
    let m = op.m(x);
    Vec2::new(m * g.x - g.y, g.x + m * g.y)
}

/// Residuals of the interface identity `u_x⁻ − u_x⁺ − 2h u_t = 0`.
#[derive(Clone, Debug)]
pub struct TransmissionReport {
    pub ts: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max: f64,
}

/// Fourth-order one-sided first derivative, `dir = ±1`.
fn one_sided(f: impl Fn(f64) -> f64, x: f64, d: f64, dir: f64) -> f64 {
    let s = dir * d;
    (-25.0 * f(x) + 48.0 * f(x + s) - 36.0 * f(x + 2.0 * s) + 16.0 * f(x + 3.0 * s) - 3.0 * f(x + 4.0 * s)) / (12.0 * s)
}

fn central(f: impl Fn(f64) -> f64, x: f64, d: f64) -> f64 {
    (f(x - 2.0 * d) - 8.0 * f(x - d) + 8.0 * f(x + d) - f(x + 2.0 * d)) / (12.0 * d)
}

/// Check the transmission condition on `x = 0` at heights `ts` with
/// one-sided stencils of step `step` (at least `10⁻⁴`).
pub fn check_transmission(op: &KkptOperator, ts: &[f64], step: f64) -> Result<TransmissionReport> {
    if step < 1e-4 {
        return Err(invalid!("stencil step {step} is below 1e-4"));
    }
    let mut residuals = Vec::with_capacity(ts.len());
    for &t in ts {
        if t < 8.0 * step {
            return Err(invalid!("height {t} is underresolved by step {step}"));
        }
        let ux_plus = one_sided(|x| exact_w(op, x, t), 0.0, step, 1.0);
        let ux_minus = one_sided(|x| exact_w(op, x, t), 0.0, step, -1.0);
        let ut = central(|s| exact_w(op, 0.0, s), t, step);
        residuals.push((ux_minus - ux_plus - 2.0 * op.h * ut).abs());
    }
    let max = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(TransmissionReport { ts: ts.to_vec(), residuals, max })
}

/// Largest `|Δw| / (|w_xx| + |w_tt|)` over `pts`, all off the axis `x = 0`,
/// with fourth-order central second differences of step `d`.
pub fn laplacian_residual(op: &KkptOperator, pts: &[Vec2], d: f64) -> f64 {
    let second = |f: &dyn Fn(f64) -> f64, c: f64| (-f(c - 2.0 * d) + 16.0 * f(c - d) - 30.0 * f(c) + 16.0 * f(c + d) - f(c + 2.0 * d)) / (12.0 * d * d);
    pts.iter()
        .map(|p| {
            let wxx = second(&|x| exact_w(op, x, p.y), p.x);
            let wtt = second(&|t| exact_w(op, p.x, t), p.y);
            (wxx + wtt).abs() / (wxx.abs() + wtt.abs())
        })
        .fold(0.0, f64::max)
}

/// `‖v‖_{L^p(ε<|x|<1/2)}` for an even boundary density `v`, on panels
/// graded geometrically toward `ε`.
fn even_lp(v: &dyn Fn(f64) -> f64, p: f64, eps: f64) -> f64 {
    libm::pow(2.0 * power_integral(v, p, eps, 0.5), 1.0 / p)
}

fn power_integral(v: &dyn Fn(f64) -> f64, p: f64, lo: f64, hi: f64) -> f64 {
    let gl = GaussLegendre::new(20);
    let n = libm::ceil(4.0 * libm::log2(hi / lo)).max(1.0) as usize;
    let br = quad::geomspace(lo, hi, n + 1);
    gl.integrate_breaks(&br, |x| libm::pow(v(x).abs(), p))
}

/// Growth of a boundary `L^p` norm as the excluded interval shrinks.
#[derive(Clone, Debug)]
pub struct RateReport {
    pub p: f64,
    pub eps: Vec<f64>,
    pub norms: Vec<f64>,
    /// Log–log slope of the norms against `ε`.
    pub fitted: f64,
    /// `(1 − bp)/p` when `bp > 1`, else 0.
    pub predicted: f64,
    /// Exponent of the density read off from decade increments of
    /// `∫|v|^p`; equals `bp` for `v = c|x|^{−b}`.
    pub density_exponent: f64,
    pub diverges: bool,
}

fn rate_report(v: &dyn Fn(f64) -> f64, p: f64, bp: f64, eps: &[f64]) -> Result<RateReport> {
    if eps.len() < 2 || eps.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
        return Err(invalid!("need at least two cut-offs in (0, 1/2)"));
    }
    let norms: Vec<f64> = eps.iter().map(|&e| even_lp(v, p, e)).collect();
    let fitted = stats::fit_power(eps, &norms).slope;
    // Increments of ∫|v|^p over [ε/10, ε] and [ε/100, ε/10] at the smallest
    // cut-off: their ratio is 10^{bp − 1} for a pure power.
    let e = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let i1 = power_integral(v, p, e / 10.0, e);
    let i2 = power_integral(v, p, e / 100.0, e / 10.0);
    let density_exponent = if i1 > 0.0 && i2 > 0.0 { 1.0 + libm::log10(i2 / i1) } else { 0.0 };
    let predicted = if bp > 1.0 { (1.0 - bp) / p } else { 0.0 };
    Ok(RateReport { p, eps: eps.to_vec(), norms, fitted, predicted, density_exponent, diverges: density_exponent >= 1.0 - 1e-6 })
}

/// `‖∂_t w(·, 0⁺)‖_{L^p(ε<|x|<1/2)}` against `ε`.
pub fn regularity_failure_rate(op: &KkptOperator, p: f64, eps: &[f64]) -> Result<RateReport> {
    let o = *op;
    rate_report(&move |x| exact_grad(&o, x, 0.0).y, p, op.bp(p), eps)
}

/// Norms of the conjugate's boundary derivatives.
#[derive(Clone, Debug)]
pub struct NeumannFailure {
    /// `‖ν·Ã∇w̃‖_{L^p(ε_min<|x|<1/2)}`; equals `‖∂_x w‖_p`, which vanishes.
    pub conormal_norm: f64,
    /// Growth of `‖∂_x w̃‖_{L^p}`, the tangential derivative.
    pub tangential: RateReport,
    /// Largest mismatch `|ν·Ã∇w̃ + ∂_x w|` on the sampled boundary points,
    /// relative to `|∇w̃|`.
    pub swap_defect: f64,
}

impl NeumannFailure {
    pub fn fails(&self) -> bool {
        self.conormal_norm.is_finite() && self.tangential.diverges
    }
}

/// The conjugate `w̃` solves the equation with `Ã = Aᵗ/det A`; its conormal
/// derivative is the tangential derivative of `w` (zero) while its own
/// tangential derivative is the conormal derivative of `w`.
pub fn neumann_failure(op: &KkptOperator, p: f64, eps: &[f64]) -> Result<NeumannFailure> {
    let at = conjugate_matrix(&op.field())?;
    let nu = Vec2::new(0.0, -1.0);
    let o = *op;
    let conormal = move |x: f64| nu.dot(at.eval(x).apply(conjugate_grad(&o, x, 0.0)));
    let e_min = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let conormal_norm = even_lp(&conormal, p, e_min);
    let mut swap_defect = 0.0f64;
    for x in quad::geomspace(e_min, 0.5, 64) {
        for s in [x, -x] {
            let scale = conjugate_grad(op, s, 0.0).norm();
            swap_defect = swap_defect.max((conormal(s) + exact_grad(op, s, 0.0).x).abs() / scale);
        }
    }
    let tangential = rate_report(&move |x| conjugate_grad(&o, x, 0.0).x, p, op.bp(p), eps)?;
    Ok(NeumannFailure { conormal_norm, tangential, swap_defect })
}

/// One row of the failure dichotomy.
#[derive(Clone, Debug)]
pub struct DichotomyRow {
    pub a: f64,
    pub bp: f64,
    /// `bp ≥ 1` evaluated exactly on the tenths grid.
    pub predicted: bool,
    pub observed: bool,
    pub fitted: f64,
}

/// Dichotomy over `a ∈ {3/10, …, 9/10}` at exponent `p`.
///
/// At `bp = 1` the norm diverges logarithmically, so the prediction is
/// `bp ≥ 1`.
pub fn dichotomy_table(p: f64, eps: &[f64]) -> Result<Vec<DichotomyRow>> {
    (3..=9)
        .map(|k| {
            let op = make_operator(k as f64 / 10.0)?;
            let r = regularity_failure_rate(&op, p, eps)?;
            // (10 − k)·p ≥ 10 without rounding a/10 first.
            let predicted = (10 - k) as f64 * p >= 10.0;
            Ok(DichotomyRow { a: op.a, bp: op.bp(p), predicted, observed: r.diverges, fitted: r.fitted })
        })
        .collect()
}

/// Even smooth step data: 0 for `|x| < 1` and `|x| > 2`, 1 on
/// `9/8 ≤ |x| ≤ 15/8`, nonnegative throughout.
pub fn bump_data(x: f64) -> f64 {
    let r = x.abs();
    smooth_step(8.0 * (r - 1.0)) * smooth_step(8.0 * (2.0 - r))
}

fn smooth_step(u: f64) -> f64 {
    let e = |s: f64| if s > 0.0 { libm::exp(-1.0 / s) } else { 0.0 };
    let (p, q) = (e(u), e(1.0 - u));
    if p + q == 0.0 {
        0.0
    } else {
        p / (p + q)
    }
}

/// Boundary behaviour of `∂_t u` for the Dirichlet solution with
/// [`bump_data`].
#[derive(Clone, Debug)]
pub struct BumpProbeReport {
    pub xs: Vec<f64>,
    pub dt: Vec<f64>,
    pub slope: f64,
    pub predicted: f64,
    pub nodes: usize,
}

/// Cut-off `ε` of the fit window used with [`bump_probe_mesh`].
pub const BUMP_PROBE_EPS: f64 = 1e-4;

/// Mesh graded toward the corner at the origin, fine enough for
/// `ε = 10⁻⁴`.
pub fn bump_probe_mesh() -> MeshSpec {
    MeshSpec {
        x_range: (-8.0, 8.0),
        height: 8.0,
        core: 2.5,
        max_step: 0.04,
        far_ratio: 1.2,
        focus: alloc::vec![0.0],
        h_min: 2e-6,
        s_min: 2e-7,
        ratio: 1.15,
    }
}

/// Solve with zero data on the far sides and fit `log ∂_t u(x, 0⁺)` against
/// `log |x|` on `ε < |x| < 1/2`.
pub fn dirichlet_bump_probe(op: &KkptOperator, spec: &MeshSpec, eps: f64) -> Result<BumpProbeReport> {
    let data = BoundaryData::new(bump_data, (-2.0, 2.0));
    let rep = solve_dirichlet(&op.field(), &LipschitzGraph::flat(), &data, None, spec)?;
    let sol = &rep.solution;
    let dt = sol.dt_boundary();
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (i, &x) in sol.mesh.xs.iter().enumerate() {
        if x.abs() > eps && x.abs() < 0.5 {
            xs.push(x.abs());
            vs.push(dt[i].abs());
        }
    }
    if xs.len() < 4 {
        return Err(invalid!("mesh too coarse near the origin: {} samples in the fit window", xs.len()));
    }
    let slope = stats::fit_power(&xs, &vs).slope;
    Ok(BumpProbeReport { xs, dt: vs, slope, predicted: -op.b, nodes: sol.u.len() })
}
