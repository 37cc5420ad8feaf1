//! Coefficient matrices `A(x)`, ellipticity checks, the triangular-reduction
//! change of variables and the conjugate-operator algebra.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};
use crate::geometry::LipschitzGraph;
use crate::linalg::{Mat2, Vec2};
use crate::quad;

type MatFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// How the entries of `A` depend on `x`.
#[derive(Clone)]
pub enum FieldKind {
    Constant(Mat2),
    /// `A = (1 m; −m 1)` with `m = h` for `x ≥ 0` and `−h` for `x < 0`.
    Kkpt { h: f64 },
    /// `A = I + β(x/R)·M` with the smooth compactly supported bump
    /// `β(u) = exp(1 − 1/(1 − u²))` on `|u| < 1`.
    SmoothBump { m: Mat2, radius: f64 },
    /// Piecewise-linear interpolation of sampled matrices.
    Sampled { xs: Arc<[f64]>, mats: Arc<[Mat2]> },
    /// Callback field; derivatives are taken by central differences.
    Custom(MatFn),
    Transpose(Box<CoefficientField>),
    /// `Aᵗ / det A`.
    Conjugate(Box<CoefficientField>),
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Constant(m) => write!(f, "Constant({m:?})"),
            FieldKind::Kkpt { h } => write!(f, "Kkpt({h})"),
            FieldKind::SmoothBump { m, radius } => write!(f, "SmoothBump({m:?}, {radius})"),
            FieldKind::Sampled { xs, .. } => write!(f, "Sampled({} nodes)", xs.len()),
            FieldKind::Custom(_) => write!(f, "Custom"),
            FieldKind::Transpose(a) => write!(f, "Transpose({:?})", a.kind),
            FieldKind::Conjugate(a) => write!(f, "Conjugate({:?})", a.kind),
        }
    }
}

/// An `x`-dependent 2×2 coefficient matrix with its ellipticity bounds.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub kind: FieldKind,
    /// Ellipticity constant: `λ|ξ|² ≤ ξ·A(x)ξ`.
    pub lambda: f64,
    /// Entry bound: `max |a_ij| ≤ Λ`.
    pub big_lambda: f64,
    /// `A` is constant for `|x| ≥ R_A` when set.
    pub constant_outside: Option<f64>,
    /// Abscissae where entries jump.
    pub jumps: Vec<f64>,
    pub name: String,
}

/// Smooth bump `exp(1 − 1/(1 − u²))` and its derivative.
pub fn smooth_bump(u: f64) -> (f64, f64) {
    if u.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - u * u;
    let b = libm::exp(1.0 - 1.0 / q);
    (b, b * (-2.0 * u) / (q * q))
}

impl CoefficientField {
    fn with(kind: FieldKind, name: &str) -> Self {
        let mut f = Self {
            kind,
            lambda: 0.0,
            big_lambda: 0.0,
            constant_outside: None,
            jumps: Vec::new(),
            name: name.to_string(),
        };
        f.fill_bounds();
        f
    }

    /// Estimate `λ` and `Λ` on a dense grid (exact for constant and
    /// piecewise-constant fields).
    fn fill_bounds(&mut self) {
        let (lo, hi) = match self.constant_outside {
            Some(r) => (-r, r),
            None => (-16.0, 16.0),
        };
        let mut xs = quad::linspace(lo, hi, 4001);
        for &j in &self.jumps {
            xs.push(j);
            xs.push(j - 1e-9);
        }
        xs.push(-1e6);
        xs.push(1e6);
        let (mut lam, mut big) = (f64::INFINITY, 0.0f64);
        for x in xs {
            let a = self.eval(x);
            lam = lam.min(a.min_quadratic());
            big = big.max(a.max_abs());
        }
        self.lambda = lam;
        self.big_lambda = big;
    }

    pub fn identity() -> Self {
        let mut f = Self::with(FieldKind::Constant(Mat2::IDENTITY), "identity");
        f.constant_outside = Some(0.0);
        f
    }

    pub fn constant(m: Mat2) -> Self {
        let mut f = Self::with(FieldKind::Constant(m), "constant");
        f.constant_outside = Some(0.0);
        f
    }

    /// The appendix operator `(1 m; −m 1)`, `m = h·sign x`.
    pub fn kkpt(h: f64) -> Self {
        let mut f = Self {
            kind: FieldKind::Kkpt { h },
            lambda: 1.0,
            big_lambda: h.abs().max(1.0),
            constant_outside: Some(0.0),
            jumps: alloc::vec![0.0],
            name: alloc::format!("kkpt:{h}"),
        };
        f.fill_bounds();
        f
    }

    /// Constant `(1 h; −h 1)`.
    pub fn rot(h: f64) -> Self {
        let mut f = Self::constant(Mat2::new(1.0, h, -h, 1.0));
        f.name = alloc::format!("rot:{h}");
        f
    }

    pub fn smooth_bump_field(m: Mat2, radius: f64, name: &str) -> Self {
        let mut f = Self::with(FieldKind::SmoothBump { m, radius }, name);
        f.constant_outside = Some(radius);
        f.fill_bounds();
        f
    }

    /// Nonsymmetric smooth preset equal to the identity for `|x| ≥ 2`.
    pub fn bump_field() -> Self {
        Self::smooth_bump_field(Mat2::new(0.3, 0.4, -0.2, 0.2), 2.0, "bumpfield")
    }

    /// Symmetric smooth preset equal to the identity for `|x| ≥ 2`.
    pub fn sym_field() -> Self {
        Self::smooth_bump_field(Mat2::new(0.4, 0.2, 0.2, -0.3), 2.0, "symfield")
    }

    /// Sampled field, linear between samples; `jumps` lists abscissae where
    /// two consecutive samples share an abscissa.
    pub fn sampled(xs: Vec<f64>, mats: Vec<Mat2>, jumps: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != mats.len() {
            return Err(invalid!("sampled field needs ≥ 2 matching samples"));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid!("sample abscissae must be nondecreasing"));
        }
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let mut f = Self {
            kind: FieldKind::Sampled { xs: xs.into(), mats: mats.into() },
            lambda: 0.0,
            big_lambda: 0.0,
            constant_outside: Some(lo.abs().max(hi.abs())),
            jumps,
            name: "sampled".into(),
        };
        f.fill_bounds();
        Ok(f)
    }

    pub fn custom(f: MatFn, jumps: Vec<f64>, constant_outside: Option<f64>, name: &str) -> Self {
        let mut c = Self::with(FieldKind::Custom(f), name);
        c.jumps = jumps;
        c.constant_outside = constant_outside;
        c.fill_bounds();
        c
    }

    /// Registry of named fields: `identity`, `kkpt:h`, `rot:h`,
    /// `const:a11,a12,a21,a22`, `bumpfield`, `symfield`.
    pub fn from_name(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownPreset(name.to_string());
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a)),
            None => (name.trim(), None),
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| unknown());
        Ok(match (head, arg) {
            ("identity", None) => Self::identity(),
            ("bumpfield", None) => Self::bump_field(),
            ("symfield", None) => Self::sym_field(),
            ("kkpt", Some(a)) => Self::kkpt(num(a)?),
            ("rot", Some(a)) => Self::rot(num(a)?),
            ("const", Some(a)) => {
                let v: Vec<f64> = a.split(',').map(num).collect::<Result<_>>()?;
                if v.len() != 4 {
                    return Err(unknown());
                }
                Self::constant(Mat2::new(v[0], v[1], v[2], v[3]))
            }
            _ => return Err(unknown()),
        })
    }

    /// `A(x)`; at a jump the value from the right is returned.
    pub fn eval(&self, x: f64) -> Mat2 {
        match &self.kind {
            FieldKind::Constant(m) => *m,
            FieldKind::Kkpt { h } => {
                let m = if x >= 0.0 { *h } else { -*h };
                Mat2::new(1.0, m, -m, 1.0)
            }
            FieldKind::SmoothBump { m, radius } => Mat2::IDENTITY + m.scale(smooth_bump(x / radius).0),
            FieldKind::Sampled { xs, mats } => {
                let n = xs.len();
                if x <= xs[0] {
                    return mats[0];
                }
                if x >= xs[n - 1] {
                    return mats[n - 1];
                }
                let i = xs.partition_point(|&v| v <= x) - 1;
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                mats[i].scale(1.0 - w) + mats[i + 1].scale(w)
            }
            FieldKind::Custom(f) => f(x),
            FieldKind::Transpose(a) => a.eval(x).transpose(),
            FieldKind::Conjugate(a) => {
                let m = a.eval(x);
                m.transpose().scale(1.0 / m.det())
            }
        }
    }

    /// Derivative of the smooth part of `A` (jumps excluded).
    pub fn deriv(&self, x: f64) -> Mat2 {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Kkpt { .. } => Mat2::ZERO,
            FieldKind::SmoothBump { m, radius } => m.scale(smooth_bump(x / radius).1 / radius),
            FieldKind::Sampled { xs, mats } => {
                let n = xs.len();
                if x < xs[0] || x >= xs[n - 1] {
                    return Mat2::ZERO;
                }
                let i = xs.partition_point(|&v| v <= x) - 1;
                let dx = xs[i + 1] - xs[i];
                if dx == 0.0 {
                    Mat2::ZERO
                } else {
                    (mats[i + 1] - mats[i]).scale(1.0 / dx)
                }
            }
            FieldKind::Transpose(a) => a.deriv(x).transpose(),
            FieldKind::Custom(_) | FieldKind::Conjugate(_) => {
                let h = 1e-6 * (1.0 + x.abs());
                (self.eval(x + h) - self.eval(x - h)).scale(0.5 / h)
            }
        }
    }

    /// `A(x⁺) − A(x⁻)` at a declared jump.
    pub fn jump_at(&self, x: f64) -> Mat2 {
        let e = 1e-12 * (1.0 + x.abs());
        self.eval(x + e) - self.eval(x - e)
    }

    /// `A` at `x → −∞` and `x → +∞`.
    pub fn far_field(&self) -> (Mat2, Mat2) {
        let r = self.constant_outside.unwrap_or(1e6) + 1.0;
        (self.eval(-r), self.eval(r))
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) => true,
            FieldKind::Transpose(a) | FieldKind::Conjugate(a) => a.is_constant(),
            _ => false,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.clone();
        t.kind = FieldKind::Transpose(Box::new(self.clone()));
        t.name = alloc::format!("{}^t", self.name);
        t
    }

    pub fn is_symmetric(&self) -> bool {
        let mut xs = quad::linspace(-8.0, 8.0, 257);
        xs.extend(self.jumps.iter().cloned());
        xs.iter().all(|&x| {
            let a = self.eval(x);
            (a.b - a.c).abs() <= 1e-14 * a.max_abs()
        })
    }
}

/// Outcome of [`check_ellipticity`].
#[derive(Clone, Debug)]
pub struct EllipticityReport {
    pub lambda_emp: f64,
    pub big_lambda_emp: f64,
    pub pass: bool,
    /// Sample points `(x, ξ)` where `ξ·Aξ < λ|ξ|²`.
    pub violations: Vec<(f64, Vec2)>,
}

/// Empirical ellipticity bounds over sample grids.
pub fn check_ellipticity(a: &CoefficientField, x_grid: &[f64], xi_grid: &[Vec2]) -> Result<EllipticityReport> {
    if x_grid.is_empty() || xi_grid.is_empty() {
        return Err(invalid!("ellipticity grids must be nonempty"));
    }
    let (mut lam, mut big) = (f64::INFINITY, 0.0f64);
    let mut violations = Vec::new();
    for &x in x_grid {
        let m = a.eval(x);
        big = big.max(m.max_abs());
        for &xi in xi_grid {
            let n2 = xi.norm2();
            if n2 == 0.0 {
                continue;
            }
            let q = xi.dot(m.apply(xi)) / n2;
            lam = lam.min(q);
            if q < a.lambda || q <= 0.0 {
                violations.push((x, xi));
            }
        }
    }
    let pass = a.lambda > 0.0 && lam >= a.lambda * (1.0 - 1e-12) && big <= a.big_lambda * (1.0 + 1e-12);
    Ok(EllipticityReport { lambda_emp: lam, big_lambda_emp: big, pass, violations })
}

/// Unit directions on a uniform angular grid.
pub fn direction_grid(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|i| {
            let th = core::f64::consts::PI * i as f64 / n as f64;
            Vec2::new(libm::cos(th), libm::sin(th))
        })
        .collect()
}

/// The conjugate field `Ã = Aᵗ / det A`.
pub fn conjugate_matrix(a: &CoefficientField) -> Result<CoefficientField> {
    let mut xs = quad::linspace(-16.0, 16.0, 2001);
    xs.extend(a.jumps.iter().cloned());
    for &x in &xs {
        let d = a.eval(x).det();
        if !(d > 0.0) {
            return Err(Error::NotElliptic(alloc::format!("det A({x}) = {d}")));
        }
    }
    let mut c = CoefficientField {
        kind: FieldKind::Conjugate(Box::new(a.clone())),
        lambda: 0.0,
        big_lambda: 0.0,
        constant_outside: a.constant_outside,
        jumps: a.jumps.clone(),
        name: alloc::format!("conj({})", a.name),
    };
    c.fill_bounds();
    Ok(c)
}

/// Which triangular form the reduced matrix takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triangle {
    /// `B = (1 c; 0 d)`.
    Upper,
    /// `B = (1 0; c d)`.
    Lower,
}

/// Tolerance on the certified zero entry and unit corner of `B`.
pub const TOL_FORM: f64 = 1e-10;

/// Cumulative primitive `P(x) = ∫₀ˣ p` tabulated on a grid, with
/// adaptive Simpson refinement between grid nodes.
#[derive(Clone)]
struct Primitive {
    integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    nodes: Vec<f64>,
    values: Vec<f64>,
    cuts: Vec<f64>,
}

const SIMPSON_TOL: f64 = 1e-12;

impl Primitive {
    fn new(integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>, lo: f64, hi: f64, cuts: &[f64]) -> Self {
        let mut nodes = quad::linspace(lo, hi, 257);
        nodes.push(0.0);
        quad::insert_cuts(&mut nodes, cuts);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let zero = nodes.iter().position(|&v| v == 0.0).unwrap();
        let mut values = alloc::vec![0.0; nodes.len()];
        for i in (zero + 1)..nodes.len() {
            values[i] = values[i - 1] + quad::adaptive_simpson(&*integrand, nodes[i - 1], nodes[i], SIMPSON_TOL);
        }
        for i in (0..zero).rev() {
            values[i] = values[i + 1] - quad::adaptive_simpson(&*integrand, nodes[i], nodes[i + 1], SIMPSON_TOL);
        }
        Self { integrand, nodes, values, cuts: cuts.to_vec() }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let (lo, hi) = (self.nodes[0], self.nodes[n - 1]);
        let f = &*self.integrand;
        if x <= lo {
            return self.values[0] - quad::adaptive_simpson(f, x, lo, SIMPSON_TOL);
        }
        if x >= hi {
            return self.values[n - 1] + quad::adaptive_simpson(f, hi, x, SIMPSON_TOL);
        }
        let i = self.nodes.partition_point(|&v| v <= x) - 1;
        let _ = &self.cuts;
        self.values[i] + quad::adaptive_simpson(f, self.nodes[i], x, SIMPSON_TOL)
    }
}

/// Change of variables `Φ(y, s) = (f(y), s + g(y))` that brings `A` to
/// triangular form.
#[derive(Clone)]
pub struct TriangularReduction {
    pub triangle: Triangle,
    pub field: CoefficientField,
    pub graph: LipschitzGraph,
    /// `f⁻¹(x) = ∫₀ˣ 1/a₁₁`.
    finv: Primitive,
    /// `G(x) = ∫₀ˣ a₂₁/a₁₁` (upper) or `∫₀ˣ a₁₂/a₁₁` (lower); `g = G ∘ f`.
    gprim: Primitive,
}

impl fmt::Debug for TriangularReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TriangularReduction({:?}, {})", self.triangle, self.field.name)
    }
}

fn reduce(a: &CoefficientField, g: &LipschitzGraph, triangle: Triangle) -> Result<TriangularReduction> {
    let (lo, hi) = g.window;
    let mut grid = quad::linspace(lo, hi, 4001);
    grid.extend(a.jumps.iter().cloned());
    for &x in &grid {
        let a11 = a.eval(x).a;
        if !(a11 >= 0.5 * a.lambda) || !(a11 > 0.0) {
            return Err(Error::NotElliptic(alloc::format!("a11({x}) = {a11} below λ/2")));
        }
    }
    let f1 = a.clone();
    let finv = Primitive::new(Arc::new(move |x| 1.0 / f1.eval(x).a), lo, hi, &a.jumps);
    let f2 = a.clone();
    let gprim = match triangle {
        Triangle::Upper => Primitive::new(Arc::new(move |x| { let m = f2.eval(x); m.c / m.a }), lo, hi, &a.jumps),
        Triangle::Lower => Primitive::new(Arc::new(move |x| { let m = f2.eval(x); m.b / m.a }), lo, hi, &a.jumps),
    };
    let red = TriangularReduction { triangle, field: a.clone(), graph: g.clone(), finv, gprim };
    let err = red.certify(&quad::linspace(lo.max(-8.0), hi.min(8.0), 161));
    if err > TOL_FORM {
        return Err(invalid!("reduced matrix fails the triangular form by {err:e}"));
    }
    Ok(red)
}

/// Reduction to `B = (1 c; 0 d)`.
pub fn reduce_upper(a: &CoefficientField, g: &LipschitzGraph) -> Result<TriangularReduction> {
    reduce(a, g, Triangle::Upper)
}

/// Reduction to `B = (1 0; c d)`.
pub fn reduce_lower(a: &CoefficientField, g: &LipschitzGraph) -> Result<TriangularReduction> {
    reduce(a, g, Triangle::Lower)
}

impl TriangularReduction {
    pub fn f_inv(&self, x: f64) -> f64 {
        self.finv.eval(x)
    }

    /// `f(y)`, inverting the increasing primitive by safeguarded Newton.
    pub fn f(&self, y: f64) -> f64 {
        let lam = self.field.lambda.max(1e-12);
        let big = self.field.big_lambda.max(1.0);
        // f⁻¹ has slope in [1/Λ, 1/λ], so the root lies in this bracket.
        let (mut lo, mut hi) = if y >= 0.0 { (y * lam, y * big) } else { (y * big, y * lam) };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.finv.eval(x) - y;
            if r.abs() <= 1e-14 * (1.0 + y.abs()) {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = r * self.field.eval(x).a;
            let nx = x - step;
            x = if nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }

    pub fn g(&self, y: f64) -> f64 {
        self.gprim.eval(self.f(y))
    }

    pub fn forward(&self, p: Vec2) -> Vec2 {
        let x = self.f(p.x);
        Vec2::new(x, p.y + self.gprim.eval(x))
    }

    pub fn inverse(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.finv.eval(p.x), p.y - self.gprim.eval(p.x))
    }

    /// Jacobian `DΦ(y) = (f′ 0; g′ 1)`.
    pub fn jacobian(&self, y: f64) -> Mat2 {
        let x = self.f(y);
        let m = self.field.eval(x);
        let gp = match self.triangle {
            Triangle::Upper => m.c,
            Triangle::Lower => m.b,
        };
        Mat2::new(m.a, 0.0, gp, 1.0)
    }

    /// Pulled-back matrix `B = det(DΦ) · DΦ⁻¹ · A(Φ) · DΦ⁻ᵗ`.
    pub fn b_matrix(&self, y: f64) -> Mat2 {
        let j = self.jacobian(y);
        let ji = j.inverse().expect("Jacobian is invertible when a11 > 0");
        let a = self.field.eval(self.f(y));
        (ji * a * ji.transpose()).scale(j.det())
    }

    /// Off-diagonal entry `c` of the triangular `B`.
    pub fn c(&self, y: f64) -> f64 {
        let b = self.b_matrix(y);
        match self.triangle {
            Triangle::Upper => b.b,
            Triangle::Lower => b.c,
        }
    }

    /// Corner entry `d` of `B`.
    pub fn d(&self, y: f64) -> f64 {
        self.b_matrix(y).d
    }

    /// Largest deviation from the triangular form over the sample points.
    pub fn certify(&self, ys: &[f64]) -> f64 {
        ys.iter()
            .map(|&y| {
                let b = self.b_matrix(y);
                let zero = match self.triangle {
                    Triangle::Upper => b.c,
                    Triangle::Lower => b.b,
                };
                zero.abs().max((b.a - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }

    /// New boundary profile `ψ_Φ(y) = φ(f(y)) − g(y)`.
    pub fn psi(&self, y: f64) -> f64 {
        let x = self.f(y);
        self.graph.phi(x) - self.gprim.eval(x)
    }

    /// `Ω′ = Φ⁻¹(Ω)` as a Lipschitz graph with Lipschitz data measured on
    /// a sample grid.
    pub fn reduced_graph(&self) -> Result<LipschitzGraph> {
        let me = self.clone();
        let f = Arc::new(move |y: f64| {
            let x = me.f(y);
            let m = me.field.eval(x);
            let gp = match me.triangle {
                Triangle::Upper => m.c,
                Triangle::Lower => m.b,
            };
            (me.graph.phi(x) - me.gprim.eval(x), me.graph.dphi(x) * m.a - gp)
        });
        let (lo, hi) = (self.f_inv(self.graph.window.0), self.f_inv(self.graph.window.1));
        let mut slopes = Vec::new();
        for y in quad::linspace(lo, hi, 2001) {
            slopes.push(f(y).1);
        }
        let mn = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let k = mn.abs().max(mx.abs()) * (1.0 + 1e-9) + 1e-12;
        LipschitzGraph::custom(f, k, 0.5 * (mn + mx), 0.5 * (mx - mn) * (1.0 + 1e-9) + 1e-12, (lo, hi))
    }

    /// Lower ellipticity bound of the reduced `d`, measured on samples.
    pub fn d_min(&self, ys: &[f64]) -> f64 {
        ys.iter().map(|&y| self.d(y)).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipticity_examples() {
        let xs = quad::linspace(-2.0, 2.0, 11);
        let dirs = direction_grid(64);
        let r = check_ellipticity(&CoefficientField::identity(), &xs, &dirs).unwrap();
        assert!(r.pass && (r.lambda_emp - 1.0).abs() < 1e-12 && r.big_lambda_emp == 1.0);
        let r = check_ellipticity(&CoefficientField::kkpt(2.0), &xs, &dirs).unwrap();
        assert!(r.pass && (r.lambda_emp - 1.0).abs() < 1e-12);
        let r = check_ellipticity(&CoefficientField::constant(Mat2::diag(1.0, -1.0)), &xs, &dirs).unwrap();
        assert!(!r.pass && !r.violations.is_empty());
    }

    #[test]
    fn conjugate_is_an_involution() {
        let a = CoefficientField::bump_field();
        let cc = conjugate_matrix(&conjugate_matrix(&a).unwrap()).unwrap();
        for x in quad::linspace(-3.0, 3.0, 37) {
            assert!((cc.eval(x) - a.eval(x)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn rot_reduction_closed_form() {
        let h = 0.7;
        let red = reduce_upper(&CoefficientField::rot(h), &LipschitzGraph::flat()).unwrap();
        assert!((red.f(1.3) - 1.3).abs() < 1e-12);
        assert!((red.g(1.3) + h * 1.3).abs() < 1e-12);
        let b = red.b_matrix(0.4);
        assert!((b - Mat2::new(1.0, 2.0 * h, 0.0, 1.0 + h * h)).max_abs() < 1e-12);
        let low = reduce_lower(&CoefficientField::rot(h), &LipschitzGraph::flat()).unwrap();
        assert!((low.g(2.0) - 2.0 * h).abs() < 1e-12);
    }
}
