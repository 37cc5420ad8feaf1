//! Fourier-in-`t` evaluator for fundamental solutions of `div(B(y)∇) = δ`
//! with a piecewise-constant `B`.
//!
//! Every frequency `ξ` turns the operator into a two-point problem in `y`.
//! Its decaying solutions are tracked through the layers by impedances
//! `Z = q/u` (flux over value), updated cell by cell with a formula that only
//! ever multiplies by decaying exponentials. The transform is then inverted
//! by Filon panels on a geometric frequency grid, after the exact transform
//! of a frozen constant-coefficient problem and the `1/ξ` pole have been
//! split off and added back in closed form.

use alloc::vec::Vec;

use num_complex::Complex64 as C;

use crate::coefficients::CoefficientField;
use crate::linalg::{Mat2, Vec2};

const PI: f64 = core::f64::consts::PI;

/// Frequency grid density (points per decade) and range.
pub const PER_DECADE: usize = 96;
pub const XI_MIN: f64 = 1e-6;
pub const XI_MAX: f64 = 1e6;

/// Per-layer constants of `b11 μ² + iξβμ − ξ² b22 = 0`.
#[derive(Clone, Copy, Debug)]
struct Layer {
    b: Mat2,
    /// `√D / b11` with `D` the determinant of the symmetric part.
    rate: f64,
    /// `β / (2 b11)` with `β = b12 + b21`.
    drift: f64,
    sqrt_d: f64,
}

impl Layer {
    fn new(b: Mat2) -> Self {
        let d = b.sym().det();
        assert!(d > 0.0 && b.a > 0.0, "layer matrix must be elliptic");
        let sqrt_d = libm::sqrt(d);
        Self { b, rate: sqrt_d / b.a, drift: 0.5 * (b.b + b.c) / b.a, sqrt_d }
    }

    /// `(μ₊, μ₋, z₊, z₋)` at `ξ > 0`, where `z = b11 μ + iξ b12`.
    #[inline]
    fn mode(&self, xi: f64) -> Mode {
        let r = xi * self.rate;
        let im = -xi * self.drift;
        let mu_p = C::new(r, im);
        let mu_m = C::new(-r, im);
        let ib12 = C::new(0.0, xi * self.b.b);
        Mode { mu_p, mu_m, z_p: mu_p * self.b.a + ib12, z_m: mu_m * self.b.a + ib12, decay: 2.0 * r }
    }

    /// `Z′` from the Riccati equation of the impedance.
    #[inline]
    fn riccati(&self, xi: f64, z: C) -> C {
        let b = self.b;
        let w = z - C::new(0.0, xi * b.b);
        (-C::new(0.0, xi * b.c) * w - z * w) / b.a + xi * xi * b.d
    }
}

#[derive(Clone, Copy, Debug)]
struct Mode {
    mu_p: C,
    mu_m: C,
    z_p: C,
    z_m: C,
    decay: f64,
}

/// Move the right-decaying impedance leftwards by `len`; returns the new
/// impedance and `log u(y − len) − log u(y)`.
#[inline]
fn step_left(z1: C, m: &Mode, len: f64) -> (C, C) {
    let alpha = (z1 - m.z_m) / (m.z_p - m.z_m);
    let beta = C::new(1.0, 0.0) - alpha;
    let e = libm::exp(-m.decay * len);
    let den = alpha * e + beta;
    ((alpha * m.z_p * e + beta * m.z_m) / den, -m.mu_m * len + den.ln())
}

/// Move the left-decaying impedance rightwards by `len`; returns the new
/// impedance and `log u(y + len) − log u(y)`.
#[inline]
fn step_right(z0: C, m: &Mode, len: f64) -> (C, C) {
    let alpha = (z0 - m.z_m) / (m.z_p - m.z_m);
    let beta = C::new(1.0, 0.0) - alpha;
    let e = libm::exp(-m.decay * len);
    let den = alpha + beta * e;
    ((alpha * m.z_p + beta * m.z_m * e) / den, m.mu_p * len + den.ln())
}

/// Piecewise-constant medium with precomputed impedance tables.
#[derive(Clone, Debug)]
pub struct Layered {
    /// Interfaces, strictly increasing.
    nodes: Vec<f64>,
    /// `layers[r]` covers region `r`: `(−∞, nodes[0])`, `[nodes[0], nodes[1])`, …
    layers: Vec<Layer>,
    xis: Vec<f64>,
    /// Right-decaying impedance and log-amplitude at each node, per frequency.
    zr: Vec<C>,
    pr: Vec<C>,
    /// Left-decaying impedance and log-amplitude at each node, per frequency.
    zl: Vec<C>,
    ql: Vec<C>,
    /// `lim_{ξ→0⁺} ξ Ĝ(x, x, ξ)`, independent of the points.
    kappa: C,
    /// `(lim Z_R/ξ, lim Z_L/ξ)` as `ξ → 0⁺`.
    c_far: (C, C),
}

/// Quantities wanted from one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub grad_y: Vec2,
    pub grad_x: Vec2,
}

impl Layered {
    /// Exact medium from interface positions and per-region matrices.
    pub fn new(nodes: Vec<f64>, mats: Vec<Mat2>) -> Self {
        assert!(!nodes.is_empty() && mats.len() == nodes.len() + 1);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        let layers: Vec<Layer> = mats.into_iter().map(Layer::new).collect();
        let ndec = libm::log10(XI_MAX / XI_MIN);
        let count = libm::round(ndec * PER_DECADE as f64) as usize + 1;
        let xis = crate::quad::geomspace(XI_MIN, XI_MAX, count);
        let n = nodes.len();
        let mut zr = alloc::vec![C::default(); count * n];
        let mut pr = zr.clone();
        let mut zl = zr.clone();
        let mut ql = zr.clone();
        for (i, &xi) in xis.iter().enumerate() {
            let base = i * n;
            zr[base + n - 1] = layers[n].mode(xi).z_m;
            for k in (1..n).rev() {
                let m = layers[k].mode(xi);
                let (z0, dp) = step_left(zr[base + k], &m, nodes[k] - nodes[k - 1]);
                zr[base + k - 1] = z0;
                pr[base + k - 1] = pr[base + k] + dp;
            }
            zl[base] = layers[0].mode(xi).z_p;
            for k in 0..n - 1 {
                let m = layers[k + 1].mode(xi);
                let (z1, dq) = step_right(zl[base + k], &m, nodes[k + 1] - nodes[k]);
                zl[base + k + 1] = z1;
                ql[base + k + 1] = ql[base + k] + dq;
            }
        }
        let (lf, rt) = (&layers[0], &layers[n]);
        let skew = |l: &Layer| 0.5 * (l.b.b - l.b.c);
        let c_r = C::new(-rt.sqrt_d, skew(rt));
        let c_l = C::new(lf.sqrt_d, skew(lf));
        let kappa = C::new(1.0, 0.0) / (c_r - c_l);
        Self { nodes, layers, xis, zr, pr, zl, ql, kappa, c_far: (c_r, c_l) }
    }

    /// Midpoint staircase of a coefficient field: `cells` equal cells over
    /// the region where the field varies, cut at its declared jumps. `field`
    /// is the matrix `B` of the operator `div(B∇)`.
    pub fn staircase(field: &CoefficientField, cells: usize) -> Self {
        if let crate::coefficients::FieldKind::Kkpt { .. } = field.kind {
            return Self::new(alloc::vec![0.0], alloc::vec![field.eval(-1.0), field.eval(1.0)]);
        }
        let r = field.constant_outside.unwrap_or(16.0);
        if field.is_constant() || r == 0.0 && field.jumps.is_empty() {
            let m = field.eval(0.0);
            return Self::new(alloc::vec![0.0], alloc::vec![m, m]);
        }
        let mut nodes = crate::quad::linspace(-r, r, cells + 1);
        crate::quad::insert_cuts(&mut nodes, &field.jumps);
        let mut mats = Vec::with_capacity(nodes.len() + 1);
        mats.push(field.eval(nodes[0] - 1.0));
        for w in nodes.windows(2) {
            mats.push(field.eval(0.5 * (w[0] + w[1])));
        }
        mats.push(field.eval(nodes[nodes.len() - 1] + 1.0));
        Self::new(nodes, mats)
    }

    fn region(&self, y: f64) -> usize {
        self.nodes.partition_point(|&n| n <= y)
    }

    /// `(Z_R(y), P_R(y))` at frequency index `i`.
    #[inline]
    fn right(&self, i: usize, y: f64, r: usize) -> (C, C) {
        let n = self.nodes.len();
        let xi = self.xis[i];
        let m = self.layers[r].mode(xi);
        if r == n {
            (m.z_m, m.mu_m * (y - self.nodes[n - 1]))
        } else {
            let (z, dp) = step_left(self.zr[i * n + r], &m, self.nodes[r] - y);
            (z, self.pr[i * n + r] + dp)
        }
    }

    /// `(Z_L(y), Q_L(y))` at frequency index `i`.
    #[inline]
    fn left(&self, i: usize, y: f64, r: usize) -> (C, C) {
        let n = self.nodes.len();
        let xi = self.xis[i];
        let m = self.layers[r].mode(xi);
        if r == 0 {
            (m.z_p, m.mu_p * (y - self.nodes[0]))
        } else {
            let (z, dq) = step_right(self.zl[i * n + r - 1], &m, y - self.nodes[r - 1]);
            (z, self.ql[i * n + r - 1] + dq)
        }
    }

    /// Matrix of the region containing `y`.
    pub fn matrix_at(&self, y: f64) -> Mat2 {
        self.layers[self.region(y)].b
    }

    /// Value and both gradients of `G` with `div_Y(B∇_Y G(X, ·)) = δ_X`.
    pub fn eval(&self, xp: Vec2, yp: Vec2) -> Sample {
        self.run(xp, yp, false).0
    }

    /// `∂_x` of the conjugate `G̃` with `J∇_Y G̃ = B∇_Y G`, normalised by the
    /// frequency regularisation (the normalisation never depends on `x`).
    pub fn conj_dx(&self, xp: Vec2, yp: Vec2) -> f64 {
        self.run(xp, yp, true).1
    }

    fn run(&self, xp: Vec2, yp: Vec2, conj: bool) -> (Sample, f64) {
        let (x, t, y, s) = (xp.x, xp.y, yp.x, yp.y);
        let d = y - x;
        let ds = s - t;
        let rx = self.region(x);
        let ry = self.region(y);
        let l0 = self.layers[rx];
        let b0 = l0.b;
        let ly = self.layers[ry];
        let right_side = d >= 0.0;
        // Frozen closed form (B frozen at B(x)).
        let p = l0.rate * d.abs();
        let q = ds - l0.drift * d;
        let rho2 = p * p + q * q;
        let c0 = 1.0 / (4.0 * PI * l0.sqrt_d);
        let gamma_f = c0 * libm::log(rho2);
        let py = l0.rate * if right_side { 1.0 } else { -1.0 };
        let gy_f = Vec2::new(2.0 * c0 * (p * py - q * l0.drift) / rho2, 2.0 * c0 * q / rho2);
        let gx_f = -gy_f;
        let kappa_v = self.kappa + C::new(0.5 / l0.sqrt_d, 0.0);

        // Component layout: value, ∂y, ∂s, ∂x, conj ∂x.
        const NC: usize = 5;
        let start_xi = 1e-4 / (1.0 + d.abs() + ds.abs() + x.abs() + y.abs() + self.span());
        let i0 = self.xis.partition_point(|&v| v < start_xi).min(self.xis.len() - 2);
        let mut hs: Vec<[C; NC]> = Vec::with_capacity(self.xis.len() - i0);
        let mut peak = 0.0f64;
        let mut quiet = 0;
        for i in i0..self.xis.len() {
            let xi = self.xis[i];
            let (zrx, prx) = self.right(i, x, rx);
            let (zlx, qlx) = self.left(i, x, rx);
            let gx = C::new(1.0, 0.0) / (zrx - zlx);
            let (zy, ly_log, lx_log, zx_side) = if right_side {
                let (zry, pry) = self.right(i, y, ry);
                (zry, pry, prx, zrx)
            } else {
                let (zly, qly) = self.left(i, y, ry);
                (zly, qly, qlx, zlx)
            };
            let f = gx * (ly_log - lx_log).exp();
            let ixi = C::new(0.0, xi);
            let fy = (zy - ixi * ly.b.b) / ly.b.a * f;
            let fs = ixi * f;
            let dzr = l0.riccati(xi, zrx);
            let dzl = l0.riccati(xi, zlx);
            let fx = -((zx_side - ixi * b0.b) / b0.a + (dzr - dzl) / (zrx - zlx)) * f;
            // Frozen transform.
            let m0 = l0.mode(xi);
            let (mu0, z0) = if right_side { (m0.mu_m, m0.z_m) } else { (m0.mu_p, m0.z_p) };
            let f0 = (mu0 * d).exp() / (m0.z_m - m0.z_p);
            let hv = f - f0 - kappa_v * libm::exp(-xi) / xi;
            let hy = fy - mu0 * f0;
            let hs_ = fs - ixi * f0;
            let hx = fx + mu0 * f0;
            let hc = if conj { (zy * fx + z0 * mu0 * f0) / ixi } else { C::default() };
            let row = [hv, hy, hs_, hx, hc];
            let mag = row.iter().map(|c| c.norm()).fold(0.0, f64::max) * xi;
            peak = peak.max(mag);
            hs.push(row);
            if i > i0 + 8 && mag <= 1e-16 * (1.0 + peak) {
                quiet += 1;
                if quiet >= 4 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        let xs = &self.xis[i0..i0 + hs.len()];
        let phases: Vec<C> = xs.iter().map(|&v| C::from_polar(1.0, ds * v)).collect();
        let mut out = [C::default(); NC];
        let mut vals = Vec::with_capacity(hs.len());
        for (c, o) in out.iter_mut().enumerate() {
            if c == 4 && !conj {
                continue;
            }
            vals.clear();
            vals.extend(hs.iter().map(|r| r[c]));
            *o = filon_richardson(xs, &vals, &phases, ds) + vals[0] * xs[0];
        }
        let value = gamma_f + out[0].re / PI - (kappa_v * C::new(1.0, -ds).ln()).re / PI;
        let grad_y = gy_f + Vec2::new(out[1].re, out[2].re).scale(1.0 / PI);
        let grad_x = Vec2::new(gx_f.x + out[3].re / PI, -grad_y.y);
        let conj_dx = if conj {
            // Frozen conjugate: ∂_x G̃_F = (B₀∇_Y G_F)₂.
            b0.apply(gy_f).y + out[4].re / PI
        } else {
            0.0
        };
        (Sample { value, grad_y, grad_x }, conj_dx)
    }

    fn span(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    /// Low-frequency limits used by callers that need the far-field constant.
    pub fn far_constants(&self) -> (C, C, C) {
        (self.kappa, self.c_far.0, self.c_far.1)
    }
}

/// `∫ H(ξ) e^{iωξ} dξ` over one panel with `H` interpolated exponentially
/// (or linearly when the exponential model is ill-conditioned).
/// `ea`, `eb` are the phases `e^{iωa}`, `e^{iωb}`.
#[inline]
fn filon_panel(a: f64, b: f64, ha: C, hb: C, ea: C, eb: C, omega: f64) -> C {
    let len = b - a;
    if ha.norm() > 0.0 && hb.norm() > 0.0 {
        let lr = (hb / ha).ln();
        if lr.im.abs() < 2.0 && lr.re.abs() < 40.0 {
            let w = lr / len + C::new(0.0, omega);
            let wl = w * len;
            if wl.norm() < 1e-4 {
                return ha * ea * len * (C::new(1.0, 0.0) + wl * 0.5 + wl * wl / 6.0);
            }
            return (hb * eb - ha * ea) / w;
        }
    }
    let wl = omega * len;
    if wl.abs() < 1e-2 {
        let em = C::new(0.0, omega * 0.5 * (a + b)).exp();
        return (ha * ea + (ha + hb) * 2.0 * em + hb * eb) * (len / 6.0);
    }
    let iw = C::new(0.0, omega);
    (hb * eb - ha * ea) / iw + (hb - ha) / len * (eb - ea) / (omega * omega)
}

/// Composite Filon sum with one Richardson step against the grid that skips
/// every other node.
fn filon_richardson(xs: &[f64], hs: &[C], ph: &[C], omega: f64) -> C {
    let n = xs.len();
    if n < 2 {
        return C::default();
    }
    let pairs = (n - 1) / 2;
    let mut fine = C::default();
    let mut coarse = C::default();
    for k in 0..pairs {
        let (a, m, b) = (2 * k, 2 * k + 1, 2 * k + 2);
        fine += filon_panel(xs[a], xs[m], hs[a], hs[m], ph[a], ph[m], omega)
            + filon_panel(xs[m], xs[b], hs[m], hs[b], ph[m], ph[b], omega);
        coarse += filon_panel(xs[a], xs[b], hs[a], hs[b], ph[a], ph[b], omega);
    }
    let mut total = fine + (fine - coarse) / 3.0;
    if (n - 1) % 2 == 1 {
        total += filon_panel(xs[n - 2], xs[n - 1], hs[n - 2], hs[n - 1], ph[n - 2], ph[n - 1], omega);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_value(xp: Vec2, yp: Vec2) -> f64 {
        libm::log((yp - xp).norm()) / (2.0 * PI)
    }

    #[test]
    fn identity_medium_reproduces_logarithm() {
        let lay = Layered::new(alloc::vec![0.0], alloc::vec![Mat2::IDENTITY, Mat2::IDENTITY]);
        for (xp, yp) in [
            (Vec2::new(0.3, 0.0), Vec2::new(1.1, 0.4)),
            (Vec2::new(-1.0, 2.0), Vec2::new(0.5, -3.0)),
            (Vec2::new(0.0, 0.0), Vec2::new(0.001, 0.02)),
            (Vec2::new(0.2, 0.0), Vec2::new(0.2, 7.0)),
        ] {
            let s = lay.eval(xp, yp);
            let v = laplace_value(xp, yp);
            assert!((s.value - v).abs() < 1e-7, "{} vs {}", s.value, v);
            let r = yp - xp;
            let g = r.scale(1.0 / (2.0 * PI * r.norm2()));
            assert!((s.grad_y - g).max_abs() < 1e-7 * (1.0 + g.max_abs()));
            assert!((s.grad_x + g).max_abs() < 1e-7 * (1.0 + g.max_abs()));
        }
    }
}

#[cfg(test)]
mod kkpt_tests {
    use super::*;
    use crate::greenfn::kkpt;

    fn medium(h: f64) -> Layered {
        // B = Aᵗ for A = kkpt:h.
        Layered::new(alloc::vec![0.0], alloc::vec![Mat2::new(1.0, h, -h, 1.0), Mat2::new(1.0, -h, h, 1.0)])
    }

    #[test]
    fn matches_closed_form() {
        let h = 1.0;
        let lay = medium(h);
        let pts = [
            (Vec2::new(0.3, 0.0), Vec2::new(1.1, 0.4)),
            (Vec2::new(0.3, 0.0), Vec2::new(-0.7, 0.4)),
            (Vec2::new(-1.0, 2.0), Vec2::new(0.5, -3.0)),
            (Vec2::new(0.05, 0.0), Vec2::new(-0.05, 0.01)),
            (Vec2::new(0.2, 0.0), Vec2::new(0.2, 7.0)),
            (Vec2::new(2.0, 0.0), Vec2::new(-30.0, 50.0)),
        ];
        for (xp, yp) in pts {
            let s = lay.eval(xp, yp);
            let c = kkpt::gamma(h, xp, yp).unwrap();
            std::println!("{xp:?} {yp:?} {} {} | {:?} {:?} | {:?} {:?}", s.value, c.value, s.grad_y, c.grad_y, s.grad_x, c.grad_x);
            assert!((s.value - c.value).abs() < 1e-7);
            let sc = 1.0 + c.grad_y.max_abs();
            assert!((s.grad_y - c.grad_y).max_abs() < 1e-7 * sc);
            assert!((s.grad_x - c.grad_x).max_abs() < 1e-7 * sc);
        }
    }
}
