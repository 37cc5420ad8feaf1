//! Boundary kernels `K_h`, `K̃_h`, the layer potentials `𝒦` and `ℒ`, the
//! matrices `B₁, B₂, B₃`, singular integral operators built from them and
//! the probes of the T(B) hypotheses.
//!
//! Boundary integrals are evaluated with composite Gauss–Legendre panels. A
//! window `[x − ρ, x + ρ]` around the evaluation point is graded
//! geometrically toward `x`, and the values `f(x)` are subtracted there so
//! that the integrand stays bounded. The subtracted mass is restored
//! exactly: for `ℒ` it is a difference of two values of `Γ`, and for `𝒦` it
//! is the flux of `B∇Γ_X` through a box below the graph (the divergence
//! theorem moves it off the singular arc).

pub mod bmatrices;
pub mod cz;
pub mod operators;

use alloc::vec::Vec;

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Result};
use crate::funcestim::BoundaryFunction;
use crate::geometry::LipschitzGraph;
use crate::greenfn::GreenEvaluator;
use crate::linalg::{Mat2, Vec2};
use crate::quad::{self, GaussLegendre};

pub use bmatrices::{build_b, BMatrices, BReport};
pub use cz::{domain_potential, fit_cz, maximal_apply, truncated_apply, CzFit, CzKernel};
pub use operators::{
    bmo_pairing, nystrom_layer, op_norm_estimate, pairing, random_atoms, random_bumps, wbp_probe, BmoReport, LayerKind, Operator, Sandwich,
    TOperator, TTilde, WbpReport, ZeroOperator,
};

/// Panel layout of boundary quadratures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSettings {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Geometric ratio of consecutive panels near the singular point.
    pub ratio: f64,
    /// Number of graded levels below `rho` (at `h = 0`).
    pub levels: usize,
    /// Longest admissible panel.
    pub max_panel: f64,
    /// Half width of the subtraction window around `x`.
    pub rho: f64,
    /// Distance from `x` over which panels stay uniform; beyond it they
    /// grow geometrically. Only used for functions without compact support.
    pub window: f64,
    /// Truncation distance for functions without compact support.
    pub far: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { order: 16, ratio: 0.5, levels: 40, max_panel: 1.0, rho: 1.0, window: 64.0, far: 1e6 }
    }
}

impl QuadSettings {
    /// Every panel length halved and one more graded level.
    pub fn refined(&self) -> Self {
        Self { max_panel: 0.5 * self.max_panel, levels: self.levels + 1, ..*self }
    }
}

/// Result of an `h ↘ 0` extrapolation.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport {
    pub value: f64,
    /// Offsets used.
    pub hs: Vec<f64>,
    /// Raw values `I(h)`.
    pub raw: Vec<f64>,
    /// Differences of successive extrapolated values.
    pub diffs: Vec<f64>,
    pub converged: bool,
}

/// Neville extrapolation to `h = 0` of the last three values with a
/// Cauchy test on successive extrapolants.
pub fn extrapolate_to_zero(hs: &[f64], raw: &[f64], tol: f64) -> LimitReport {
    assert!(hs.len() == raw.len() && hs.len() >= 2);
    let neville = |h: &[f64], v: &[f64]| -> f64 {
        let mut p = v.to_vec();
        let n = p.len();
        for m in 1..n {
            for i in 0..n - m {
                p[i] = (h[i] * p[i + 1] - h[i + m] * p[i]) / (h[i] - h[i + m]);
            }
        }
        p[0]
    };
    let mut ext = Vec::new();
    for k in 1..hs.len() {
        let lo = k.saturating_sub(2);
        ext.push(neville(&hs[lo..=k], &raw[lo..=k]));
    }
    let diffs: Vec<f64> = ext.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let value = *ext.last().unwrap();
    let converged = diffs.last().is_some_and(|d| *d <= tol * (1.0 + value.abs()));
    LimitReport { value, hs: hs.to_vec(), raw: raw.to_vec(), diffs, converged }
}

/// Layer potentials and boundary kernels for one graph and one operator.
#[derive(Clone, Debug)]
pub struct Potentials {
    pub g: LipschitzGraph,
    /// Evaluator of `Γ`.
    pub green: GreenEvaluator,
    /// Evaluator of `Γᵗ`, which carries the conjugate `Γ̃ᵗ`.
    pub green_t: GreenEvaluator,
    pub quad: QuadSettings,
    gl: GaussLegendre,
}

/// Values of the two layer potentials for one density.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LayerPair {
    /// `𝒦f(x)`.
    pub k: f64,
    /// `ℒf(x)`.
    pub l: f64,
}

impl Potentials {
    pub fn new(g: &LipschitzGraph, a: &CoefficientField) -> Result<Self> {
        Ok(Self::with_evaluator(g, GreenEvaluator::new(a)?))
    }

    pub fn with_evaluator(g: &LipschitzGraph, green: GreenEvaluator) -> Self {
        let green_t = green.transpose();
        let quad = QuadSettings::default();
        Self { g: g.clone(), green, green_t, gl: GaussLegendre::new(quad.order), quad }
    }

    pub fn with_quad(mut self, quad: QuadSettings) -> Self {
        self.gl = GaussLegendre::new(quad.order);
        self.quad = quad;
        self
    }

    /// Same graph and operator with the Green evaluator and the panels refined.
    pub fn refined(&self) -> Self {
        Self::with_evaluator(&self.g, self.green.refined()).with_quad(self.quad.refined())
    }

    pub fn gl(&self) -> &GaussLegendre {
        &self.gl
    }

    /// The pole `(x, φ(x) + h)`.
    pub fn pole(&self, x: f64, h: f64) -> Vec2 {
        Vec2::new(x, self.g.phi(x) + h)
    }

    /// `K_h(x, y)`: both rows equal `∇Γ_{(x, φ(x)+h)}(y, φ(y))`.
    pub fn kernel_k(&self, h: f64, x: f64, y: f64) -> Result<Mat2> {
        let gr = self.green.grad_y_smoothed(self.pole(x, h), self.g.point(y))?;
        Ok(Mat2::new(gr.x, gr.y, gr.x, gr.y))
    }

    /// `K̃_h(x, y)`: both rows equal `∇_X Γ̃ᵗ_{(x, φ(x)+h)}(y, φ(y))`.
    pub fn kernel_ktilde(&self, h: f64, x: f64, y: f64) -> Result<Mat2> {
        let gr = self.green_t.conj_grad_x_smoothed(self.pole(x, h), self.g.point(y))?;
        Ok(Mat2::new(gr.x, gr.y, gr.x, gr.y))
    }

    /// The densities `c(y) dy = ν·B∇Γ_X dσ` and `d(y) dy = τ·∇Γ_X dσ` at the
    /// boundary point over `y`, with `B` the matrix resolved by the evaluator.
    pub fn boundary_pair(&self, xp: Vec2, y: f64) -> Result<(f64, f64)> {
        let gy = self.green.grad(xp, self.g.point(y), true)?;
        let p = self.g.dphi(y);
        let flux = self.green.b_matrix(y).apply(gy);
        Ok((p * flux.x - flux.y, gy.x + p * gy.y))
    }

    /// Abscissae where boundary integrands lose smoothness: kinks of `φ`
    /// and jumps of `A`.
    pub fn geometry_cuts(&self) -> Vec<f64> {
        let mut c = self.g.profile.kinks();
        c.extend(self.green.field.jumps.iter().copied());
        c
    }

    /// `∫_a^b ν·B∇Γ_X dσ` as the outward flux of `B∇Γ_X` through the sides
    /// and bottom of the box `[a, b] × [min φ − (b − a)/2, φ]` below the
    /// graph. The pole must not lie in the box.
    pub fn closure_k(&self, xp: Vec2, a: f64, b: f64) -> Result<f64> {
        let (xl, xr) = (a, b);
        let rho = 0.5 * (b - a);
        let mut samples = quad::linspace(xl, xr, 65);
        samples.extend(self.g.profile.kinks().into_iter().filter(|k| *k > xl && *k < xr));
        let bottom = samples.iter().map(|&s| self.g.phi(s)).fold(f64::INFINITY, f64::min) - rho;
        let flux = |p: Vec2, n: Vec2| -> Result<f64> {
            let gy = self.green.grad(xp, p, true)?;
            Ok(n.dot(self.green.b_matrix(p.x).apply(gy)))
        };
        let gl = &self.gl;
        let mut total = 0.0;
        for (sx, n) in [(xl, Vec2::new(-1.0, 0.0)), (xr, Vec2::new(1.0, 0.0))] {
            let top = self.g.phi(sx);
            // Graded toward the top corner, the point nearest the pole.
            let br = quad::graded_toward(0.0, top - bottom, 1e-3 * rho, 0.5);
            let mut err = Ok(());
            total += gl.integrate_breaks(&br, |u| match flux(Vec2::new(sx, top - u), n) {
                Ok(v) => v,
                Err(e) => {
                    err = Err(e);
                    0.0
                }
            });
            err?;
        }
        let mut br = quad::linspace(xl, xr, 9);
        quad::insert_cuts(&mut br, &self.green.field.jumps);
        let mut err = Ok(());
        total += gl.integrate_breaks(&br, |s| match flux(Vec2::new(s, bottom), Vec2::new(0.0, -1.0)) {
            Ok(v) => v,
            Err(e) => {
                err = Err(e);
                0.0
            }
        });
        err?;
        Ok(total)
    }

    /// `∫_a^b τ·∇Γ_X dσ = Γ_X(Y(b)) − Γ_X(Y(a))`.
    pub fn closure_l(&self, xp: Vec2, a: f64, b: f64) -> Result<f64> {
        Ok(self.green.value(xp, self.g.point(b))? - self.green.value(xp, self.g.point(a))?)
    }

    /// Panels for a boundary integral at `x` with pole offset `h`:
    /// `(near, far)` where `near` covers `[x − ρ, x + ρ]` graded toward `x`
    /// and `far` covers the rest of `range` (or of the truncated line).
    ///
    /// Cuts are inserted before long panels are split, so panels away from
    /// the near window depend only on the cuts and not on `x`. When `scale`
    /// is given, `ρ` is capped by it and `max_panel` is read in units of
    /// `scale/8`.
    pub fn layout(
        &self,
        x: f64,
        h: f64,
        range: Option<(f64, f64)>,
        cuts: &[f64],
        scale: Option<f64>,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let q = &QuadSettings {
            rho: scale.map_or(self.quad.rho, |s| self.quad.rho.min(s)),
            max_panel: scale.map_or(self.quad.max_panel, |s| self.quad.max_panel * s / 8.0),
            ..self.quad
        };
        let rho = q.rho;
        // Grading stops well above the evaluator's coincidence radius.
        let floor = 1e3 * crate::greenfn::R_MIN;
        let inner = if h > 0.0 { h / 8.0 } else { (rho * libm::pow(q.ratio, q.levels as f64)).max(floor) };
        let mut near = if inner < rho { quad::graded_breaks(x, inner, rho, q.ratio) } else { alloc::vec![x - rho, x + rho] };
        // graded_breaks starts at ±ρ; make sure the ends are exact.
        near[0] = x - rho;
        *near.last_mut().unwrap() = x + rho;
        let mut all_cuts: Vec<f64> = cuts.to_vec();
        all_cuts.push(x);
        if let Some((a, b)) = range {
            all_cuts.push(a);
            all_cuts.push(b);
        }
        quad::insert_cuts(&mut near, &all_cuts);
        let near = split_long(&near, q.max_panel);
        let mut far = Vec::new();
        let pieces: Vec<(f64, f64)> = match range {
            Some((a, b)) => [(a, (x - rho).min(b)), ((x + rho).max(a), b)].into_iter().filter(|(l, r)| r > l).collect(),
            None => alloc::vec![(x - q.far, x - rho), (x + rho, x + q.far)],
        };
        for (l, r) in pieces {
            let mut br = if range.is_none() {
                // Uniform up to `window` from x, geometric beyond.
                let toward_x_is_right = r <= x;
                let d_lo = if toward_x_is_right { x - r } else { l - x };
                let d_hi = if toward_x_is_right { x - l } else { r - x };
                let mut ds = Vec::new();
                let w = q.window.min(d_hi);
                let n = libm::ceil((w - d_lo) / q.max_panel).max(1.0) as usize;
                for i in 0..=n {
                    ds.push(d_lo + (w - d_lo) * i as f64 / n as f64);
                }
                let mut d = w;
                while d < d_hi {
                    d = (2.0 * d).min(d_hi);
                    ds.push(d);
                }
                let mut v: Vec<f64> = ds.iter().map(|d| if toward_x_is_right { x - d } else { x + d }).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            } else {
                alloc::vec![l, r]
            };
            quad::insert_cuts(&mut br, &all_cuts);
            far.push(if range.is_some() { split_long(&br, q.max_panel) } else { br });
        }
        (near, far)
    }

    /// `𝒦f_i(x)` and `ℒf_i(x)` for several densities at once, with the pole
    /// `h ≥ 0` above the graph. At `h = 0` this is the boundary value of the
    /// layer potentials from inside `Ω`.
    pub fn layers_many(&self, x: f64, h: f64, fs: &[&BoundaryFunction]) -> Result<Vec<LayerPair>> {
        let xp = self.pole(x, h);
        let fx: Vec<f64> = fs.iter().map(|f| f.eval(x)).collect();
        let mut range: Option<(f64, f64)> = Some((f64::INFINITY, f64::NEG_INFINITY));
        let mut cuts = self.geometry_cuts();
        let scale = fs.iter().filter_map(|f| f.scale).reduce(f64::min);
        for f in fs {
            match (f.support, range) {
                (Some((a, b)), Some((lo, hi))) => range = Some((lo.min(a), hi.max(b))),
                _ => range = None,
            }
            cuts.extend(f.breaks.iter().copied());
            if let Some((a, b)) = f.support {
                cuts.push(a);
                cuts.push(b);
            }
        }
        let mut out = alloc::vec![LayerPair::default(); fs.len()];
        if let Some((lo, hi)) = range {
            if lo > hi {
                return Ok(out);
            }
        }
        let (near, far) = self.layout(x, h, range, &cuts, scale);
        let (na, nb) = (near[0], near[near.len() - 1]);
        let all_zero = fx.iter().all(|v| *v == 0.0);
        let mut err: Result<()> = Ok(());
        let mut acc = |y: f64, w: f64, subtract: bool, out: &mut [LayerPair]| {
            if let Some((lo, hi)) = range {
                if (y < lo || y > hi) && (!subtract || all_zero) {
                    return;
                }
            }
            let (c, d) = match self.boundary_pair(xp, y) {
                Ok(v) => v,
                Err(e) => {
                    err = Err(e);
                    return;
                }
            };
            for (i, f) in fs.iter().enumerate() {
                let v = f.eval(y) - if subtract { fx[i] } else { 0.0 };
                out[i].k += w * c * v;
                out[i].l += w * d * v;
            }
        };
        let (mut ys, mut ws) = (Vec::new(), Vec::new());
        for pw in near.windows(2) {
            self.gl.push_mapped(pw[0], pw[1], &mut ys, &mut ws);
        }
        for (y, w) in ys.iter().zip(&ws) {
            acc(*y, *w, true, &mut out);
        }
        ys.clear();
        ws.clear();
        for br in &far {
            for pw in br.windows(2) {
                self.gl.push_mapped(pw[0], pw[1], &mut ys, &mut ws);
            }
        }
        for (y, w) in ys.iter().zip(&ws) {
            acc(*y, *w, false, &mut out);
        }
        err?;
        if !all_zero {
            let ck = self.closure_k(xp, na, nb)?;
            let cl = self.closure_l(xp, na, nb)?;
            for (o, v) in out.iter_mut().zip(&fx) {
                o.k += v * ck;
                o.l += v * cl;
            }
        }
        Ok(out)
    }

    /// Boundary values `(𝒦f(x), ℒf(x))` evaluated directly at `h = 0`.
    pub fn layers_at(&self, f: &BoundaryFunction, x: f64) -> Result<LayerPair> {
        Ok(self.layers_many(x, 0.0, &[f])?[0])
    }

    fn limit(&self, f: &BoundaryFunction, x: f64, hs: &[f64], pick: fn(LayerPair) -> f64) -> Result<LimitReport> {
        if hs.len() < 2 || hs.iter().any(|h| !(*h > 0.0)) {
            return Err(invalid!("the h sequence needs at least two positive offsets"));
        }
        let raw: Result<Vec<f64>> = hs.iter().map(|&h| Ok(pick(self.layers_many(x, h, &[f])?[0]))).collect();
        Ok(extrapolate_to_zero(hs, &raw?, 1e-6))
    }

    /// `𝒦f(x) = lim_{h↘0} ∫ ν·Aᵗ∇Γ_{(x,φ(x)+h)} f dσ` along `hs`.
    pub fn layer_k(&self, f: &BoundaryFunction, x: f64, hs: &[f64]) -> Result<LimitReport> {
        self.limit(f, x, hs, |p| p.k)
    }

    /// `ℒf(x) = lim_{h↘0} ∫ τ·∇Γ_{(x,φ(x)+h)} f dσ` along `hs`.
    pub fn layer_l(&self, f: &BoundaryFunction, x: f64, hs: &[f64]) -> Result<LimitReport> {
        self.limit(f, x, hs, |p| p.l)
    }
}

/// Geometric offsets `h₀·2^{−k}`, `k < n`.
pub fn h_sequence(h0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| h0 * libm::pow(0.5, k as f64)).collect()
}

/// Subdivide consecutive breakpoints so that no panel exceeds `max`.
pub fn split_long(br: &[f64], max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(br.len());
    out.push(br[0]);
    for w in br.windows(2) {
        let n = libm::ceil((w[1] - w[0]) / max).max(1.0) as usize;
        for i in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    out
}

#[cfg(test)]
mod tests;
