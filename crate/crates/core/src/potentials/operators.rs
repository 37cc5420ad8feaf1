//! Singular integral operators on matrix-valued boundary functions and the
//! probes of the T(B) hypotheses: weak boundedness, BMO pairings against
//! atoms and operator-norm estimates.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{extrapolate_to_zero, h_sequence, BMatrices, Potentials};
use crate::error::{invalid, Result};
use crate::funcestim::boundary::{smooth_bump, smooth_bump_derivative_sups};
use crate::funcestim::{H1Atom, MatrixFunction};
use crate::linalg::Mat2;
use crate::quad::{self, GaussLegendre};

type MatFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// A singular integral operator on `2×2`-matrix-valued functions.
pub trait Operator: Send + Sync {
    /// `T(F)(x)`.
    fn apply(&self, f: &MatrixFunction, x: f64) -> Result<Mat2>;
    /// The kernel `K(x, y)`, `x ≠ y`.
    fn kernel(&self, x: f64, y: f64) -> Result<Mat2>;
    fn name(&self) -> String;
}

/// The operator with kernel `K` of the layer potentials, applied through
/// `F = B₁χ`: `T(F)_{ij} = 𝒦(χ_{1j}) + ℒ(χ_{2j})` in both rows.
#[derive(Clone, Debug)]
pub struct TOperator {
    pub pot: Arc<Potentials>,
    pub b: BMatrices,
}

impl TOperator {
    pub fn new(pot: Arc<Potentials>, alpha0: f64) -> Self {
        let b = BMatrices::resolved(&pot.g, &pot.green, alpha0);
        Self { pot, b }
    }
}

impl Operator for TOperator {
    fn apply(&self, f: &MatrixFunction, x: f64) -> Result<Mat2> {
        let b = self.b.clone();
        let chi = f.left_mul(move |y| b.b1(y).inverse().unwrap_or(Mat2::ZERO));
        let e = [chi.entry(0, 0), chi.entry(1, 0), chi.entry(0, 1), chi.entry(1, 1)];
        let v = self.pot.layers_many(x, 0.0, &[&e[0], &e[1], &e[2], &e[3]])?;
        let c0 = v[0].k + v[1].l;
        let c1 = v[2].k + v[3].l;
        Ok(Mat2::new(c0, c1, c0, c1))
    }

    fn kernel(&self, x: f64, y: f64) -> Result<Mat2> {
        self.pot.kernel_k(0.0, x, y)
    }

    fn name(&self) -> String {
        alloc::format!("T[{}; {}]", self.pot.green.field.name, self.pot.g.name)
    }
}

/// The operator with kernel `K̃`, as the `h ↘ 0` limit of `∫ K̃_h F`.
#[derive(Clone, Debug)]
pub struct TTilde {
    pub pot: Arc<Potentials>,
    pub hs: Vec<f64>,
}

impl TTilde {
    pub fn new(pot: Arc<Potentials>) -> Self {
        Self { pot, hs: h_sequence(1e-2, 5) }
    }
}

impl Operator for TTilde {
    fn apply(&self, f: &MatrixFunction, x: f64) -> Result<Mat2> {
        let p = &self.pot;
        let mut cuts = p.geometry_cuts();
        cuts.extend(f.breaks.iter().copied());
        let fx = f.eval(x);
        let mut raw: [Vec<f64>; 4] = Default::default();
        for &h in &self.hs {
            let (near, far) = p.layout(x, h, f.support, &cuts, f.scale);
            let mut acc = Mat2::ZERO;
            let gl = p.gl();
            let mut err = Ok(());
            let mut panel = |a: f64, b: f64, subtract: bool| {
                let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
                for (u, w) in gl.nodes.iter().zip(&gl.weights) {
                    let y = m + r * u;
                    match p.kernel_ktilde(h, x, y) {
                        Ok(k) => {
                            let fy = f.eval(y);
                            acc = acc + (k * if subtract { fy - fx } else { fy }).scale(w * r);
                            if subtract {
                                acc = acc + (k * fx).scale(w * r);
                            }
                        }
                        Err(e) => err = Err(e),
                    }
                }
            };
            for w in near.windows(2) {
                panel(w[0], w[1], true);
            }
            for br in &far {
                for w in br.windows(2) {
                    panel(w[0], w[1], false);
                }
            }
            err?;
            for (slot, v) in raw.iter_mut().zip([acc.a, acc.b, acc.c, acc.d]) {
                slot.push(v);
            }
        }
        let lim: Vec<f64> = raw.iter().map(|r| extrapolate_to_zero(&self.hs, r, 1e-6).value).collect();
        Ok(Mat2::new(lim[0], lim[1], lim[2], lim[3]))
    }

    fn kernel(&self, x: f64, y: f64) -> Result<Mat2> {
        self.pot.kernel_ktilde(0.0, x, y)
    }

    fn name(&self) -> String {
        alloc::format!("T~[{}; {}]", self.pot.green.field.name, self.pot.g.name)
    }
}

/// `M_L T M_R`: `F ↦ L·T(R·F)`.
#[derive(Clone)]
pub struct Sandwich {
    pub left: MatFn,
    pub inner: Arc<dyn Operator>,
    pub right: MatFn,
    pub label: String,
}

impl Sandwich {
    pub fn new(
        left: impl Fn(f64) -> Mat2 + Send + Sync + 'static,
        inner: Arc<dyn Operator>,
        right: impl Fn(f64) -> Mat2 + Send + Sync + 'static,
        label: &str,
    ) -> Self {
        Self { left: Arc::new(left), inner, right: Arc::new(right), label: label.into() }
    }

    /// `M_{B₂ᵗ} T M_{B₁}`.
    pub fn b2t_t_b1(t: TOperator) -> Self {
        let (l, r) = (t.b.clone(), t.b.clone());
        Self::new(move |x| l.b2(x).transpose(), Arc::new(t), move |y| r.b1(y), "B2t T B1")
    }

    /// `M_{B₁ᵗ} T̃ M_{B₃}`.
    pub fn b1t_ttilde_b3(tt: TTilde, b: BMatrices) -> Self {
        let (l, r) = (b.clone(), b);
        Self::new(move |x| l.b1(x).transpose(), Arc::new(tt), move |y| r.b3(y), "B1t T~ B3")
    }
}

impl Operator for Sandwich {
    fn apply(&self, f: &MatrixFunction, x: f64) -> Result<Mat2> {
        let r = self.right.clone();
        let rf = f.left_mul(move |y| r(y));
        Ok((self.left)(x) * self.inner.apply(&rf, x)?)
    }

    fn kernel(&self, x: f64, y: f64) -> Result<Mat2> {
        Ok((self.left)(x) * self.inner.kernel(x, y)? * (self.right)(y))
    }

    fn name(&self) -> String {
        alloc::format!("{} ({})", self.label, self.inner.name())
    }
}

/// The zero operator.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroOperator;

impl Operator for ZeroOperator {
    fn apply(&self, _: &MatrixFunction, _: f64) -> Result<Mat2> {
        Ok(Mat2::ZERO)
    }
    fn kernel(&self, _: f64, _: f64) -> Result<Mat2> {
        Ok(Mat2::ZERO)
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// Quadrature nodes and weights over the support of `g`, cut at its breaks
/// and split into `panels` pieces.
fn support_nodes(g: &MatrixFunction, panels: usize, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = g.support.ok_or_else(|| invalid!("the test function needs compact support"))?;
    let mut br = quad::linspace(a, b, panels.max(1) + 1);
    quad::insert_cuts(&mut br, &g.breaks);
    let gl = GaussLegendre::new(order);
    let (mut xs, mut ws) = (Vec::new(), Vec::new());
    for w in br.windows(2) {
        gl.push_mapped(w[0], w[1], &mut xs, &mut ws);
    }
    Ok((xs, ws))
}

/// `⟨G, T(F)⟩ = ∫ tr(G(x)ᵗ T(F)(x)) dx` over the support of `G` split into
/// `panels` Gauss–Legendre panels.
pub fn pairing(g: &MatrixFunction, op: &dyn Operator, f: &MatrixFunction, panels: usize) -> Result<f64> {
    let (xs, ws) = support_nodes(g, panels, 16)?;
    let mut s = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let gx = g.eval(*x);
        if gx.max_abs() == 0.0 {
            continue;
        }
        s += w * gx.frob(&op.apply(f, *x)?);
    }
    Ok(s)
}

/// A normalised bump: `coef·β((x − center)/radius)` with `radius ≤ 10` and
/// `coef` scaled so that the entries and their first two derivatives are
/// bounded by one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedBump {
    pub center: f64,
    pub radius: f64,
    pub coef: Mat2,
}

impl NormalizedBump {
    pub fn new(center: f64, radius: f64, coef: Mat2) -> Result<Self> {
        if !(radius > 0.0 && radius <= 10.0) {
            return Err(invalid!("bump radius must lie in (0, 10], got {radius}"));
        }
        let (d1, d2) = smooth_bump_derivative_sups();
        let s = 1.0f64.min(radius / d1).min(radius * radius / d2) / coef.max_abs().max(1e-300);
        Ok(Self { center, radius, coef: coef.scale(s.min(1.0 / coef.max_abs().max(1e-300)).min(s)) })
    }

    /// `F_R = R^{−1}F(·/R)`.
    pub fn dilated(&self, r: f64) -> MatrixFunction {
        let (c, rad, m) = (self.center, self.radius, self.coef);
        MatrixFunction::new(move |x| m.scale(smooth_bump((x / r - c) / rad).0 / r))
            .with_support(r * (c - rad), r * (c + rad))
            .with_breaks(alloc::vec![r * c])
            .with_scale(r * rad)
    }
}

/// `count` random normalised bumps with centres in `[−10, 10]` and radii
/// in `[1, 10]`.
pub fn random_bumps(count: usize, seed: u64) -> Vec<NormalizedBump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut e = || rng.random_range(-1.0..1.0);
            let coef = Mat2::new(e(), e(), e(), e());
            let center = 10.0 * e();
            let radius = 1.0 + 4.5 * (e() + 1.0);
            NormalizedBump::new(center, radius, coef).expect("radius in range")
        })
        .collect()
}

/// `count` smooth atoms with centres in `[−5, 5]`, radii `2^u` for
/// `u ∈ [−3, 3]` and sizes in `[1/2, 1]`, each paired with a matrix whose
/// entries lie in `[−1, 1]`.
pub fn random_atoms(count: usize, seed: u64) -> Result<Vec<(H1Atom, Mat2)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let center = rng.random_range(-5.0..5.0);
            let radius = libm::exp2(rng.random_range(-3.0..3.0));
            let size = rng.random_range(0.5..1.0);
            let mut e = || rng.random_range(-1.0..=1.0);
            let m = Mat2::new(e(), e(), e(), e());
            Ok((H1Atom::smooth(center, radius, size)?, m))
        })
        .collect()
}

/// Outcome of a weak-boundedness sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct WbpReport {
    /// `(R, pair index, R·|⟨G_R, T F_R⟩|)`.
    pub values: Vec<(f64, usize, f64)>,
    pub sup: f64,
}

/// `sup R·|⟨G_R, T F_R⟩|` over the dilations and bump pairs, with the
/// pairing integrated on `panels` panels across the support of `G_R`.
pub fn wbp_probe(
    op: &dyn Operator,
    pairs: &[(NormalizedBump, NormalizedBump)],
    r_grid: &[f64],
    panels: usize,
) -> Result<WbpReport> {
    let mut values = Vec::new();
    let mut sup = 0.0f64;
    for &r in r_grid {
        for (i, (f, g)) in pairs.iter().enumerate() {
            let v = r * pairing(&g.dilated(r), op, &f.dilated(r), panels)?.abs();
            sup = sup.max(v);
            values.push((r, i, v));
        }
    }
    Ok(WbpReport { values, sup })
}

/// The cut-off `η`: one on `[c − 2r, c + 2r]`, zero outside
/// `[c − 2rf, c + 2rf]`, with a smooth monotone transition. Returned with
/// the transition subdivided into eight panels.
pub fn eta_cutoff(c: f64, r: f64, factor: f64) -> (Arc<dyn Fn(f64) -> f64 + Send + Sync>, Vec<f64>) {
    assert!(factor > 1.0);
    let (a, b) = (2.0 * r, 2.0 * r * factor);
    let psi = |u: f64| if u <= 0.0 { 0.0 } else { libm::exp(-1.0 / u) };
    let step = move |d: f64| {
        // 1 for d ≤ a, 0 for d ≥ b.
        let u = ((d - a) / (b - a)).clamp(0.0, 1.0);
        let (p, q) = (psi(1.0 - u), psi(u));
        if p + q == 0.0 {
            0.0
        } else {
            p / (p + q)
        }
    };
    let mut br = Vec::new();
    for k in 0..=8 {
        let d = a + (b - a) * k as f64 / 8.0;
        br.push(c - d);
        br.push(c + d);
    }
    br.sort_by(f64::total_cmp);
    (Arc::new(move |x: f64| step((x - c).abs())), br)
}

/// Both evaluations of `⟨A₀, T(B₀)⟩` for the matrix atom `A₀ = a·M`.
#[derive(Clone, Debug, PartialEq)]
pub struct BmoReport {
    /// Values for the cut-offs with transition factors 2 and 4.
    pub values: [f64; 2],
    pub difference: f64,
}

/// `⟨A₀, T(B₀)⟩ := ⟨A₀, T(ηB₀)⟩ + ∫ tr([∫ A₀(x)ᵗK(x, y) dx](1 − η(y))B₀(y)) dy`
/// for `A₀ = a·M` (`|M_ij| ≤ 1`), computed for two cut-offs `η`.
///
/// Both evaluations share the `x` nodes over the atom and the `y` panels
/// outside `2I`, so the two `η`-dependent pieces are the same double sum
/// taken in either order.
pub fn bmo_pairing(op: &dyn Operator, b0: &MatrixFunction, atom: &H1Atom, m: Mat2) -> Result<BmoReport> {
    if m.max_abs() > 1.0 {
        return Err(crate::error::Error::AtomInvariant("|M_ij| ≤ 1".into()));
    }
    let (c, r) = (atom.center(), atom.radius());
    let factors = [2.0, 4.0];
    let cut: Vec<_> = factors.iter().map(|&f| eta_cutoff(c, r, f)).collect();
    let mut shared: Vec<f64> = cut.iter().flat_map(|(_, b)| b.iter().copied()).collect();
    shared.extend(b0.breaks.iter().copied());
    shared.sort_by(f64::total_cmp);
    shared.dedup();

    // x nodes over I.
    let mut xb = quad::linspace(atom.interval.0, atom.interval.1, 9);
    quad::insert_cuts(&mut xb, &atom.a.breaks);
    let gl = GaussLegendre::new(16);
    let (mut xs, mut xw) = (Vec::new(), Vec::new());
    for w in xb.windows(2) {
        gl.push_mapped(w[0], w[1], &mut xs, &mut xw);
    }
    let ax: Vec<f64> = xs.iter().map(|&x| atom.a.eval(x)).collect();

    // y panels outside 2I: the shared breaks, split at the resolution the
    // operator uses for densities of scale r, then geometric out to 10⁶.
    let far = 1e6;
    let outer = 2.0 * r * factors[1];
    let mut ybr: Vec<f64> = shared.iter().copied().filter(|y| (y - c).abs() >= 2.0 * r - 1e-12).collect();
    let mut d = outer;
    while d < far {
        d = (2.0 * d).min(far);
        ybr.push(c - d);
        ybr.push(c + d);
    }
    ybr.sort_by(f64::total_cmp);
    let mut ys_all = Vec::new();
    let mut yw_all = Vec::new();
    for w in ybr.windows(2) {
        if w[0] < c && w[1] > c {
            continue;
        }
        let n = libm::ceil((w[1] - w[0]) / (r / 8.0)).max(1.0) as usize;
        let n = if (w[0] - c).abs().max((w[1] - c).abs()) <= outer + 1e-12 { n } else { 1 };
        for k in 0..n {
            let a = w[0] + (w[1] - w[0]) * k as f64 / n as f64;
            let b = w[0] + (w[1] - w[0]) * (k + 1) as f64 / n as f64;
            gl.push_mapped(a, b, &mut ys_all, &mut yw_all);
        }
    }
    // W(y) = ∫ A₀(x)ᵗ K(x, y) dx on the y nodes.
    let mut wy = Vec::with_capacity(ys_all.len());
    for &y in &ys_all {
        let mut acc = Mat2::ZERO;
        for ((x, w), a) in xs.iter().zip(&xw).zip(&ax) {
            acc = acc + (m.transpose() * op.kernel(*x, y)?).scale(w * a);
        }
        wy.push(acc);
    }

    let mut values = [0.0; 2];
    for (k, (eta, _)) in cut.iter().enumerate() {
        let eta = eta.clone();
        let b0c = b0.clone();
        let f = MatrixFunction::new(move |y| b0c.eval(y).scale(eta(y)))
            .with_support(c - 2.0 * r * factors[k], c + 2.0 * r * factors[k])
            .with_breaks(shared.clone())
            .with_scale(r);
        let mut t1 = 0.0;
        for ((x, w), a) in xs.iter().zip(&xw).zip(&ax) {
            t1 += w * a * m.frob(&op.apply(&f, *x)?);
        }
        let mut t2 = 0.0;
        for ((y, w), wm) in ys_all.iter().zip(&yw_all).zip(&wy) {
            let one_minus = 1.0 - cut[k].0(*y);
            if one_minus != 0.0 {
                t2 += w * one_minus * (*wm * b0.eval(*y)).trace();
            }
        }
        values[k] = t1 + t2;
    }
    Ok(BmoReport { values, difference: (values[0] - values[1]).abs() })
}

/// Which layer potential a Nyström matrix discretises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    K,
    L,
}

/// Dense Nyström matrix (row-major, `n × n`) of `𝒦` or `ℒ` on the uniform
/// grid of `n` cell midpoints of `[a, b]`: off-diagonal entries are `Δ`
/// times the kernel density, and each diagonal entry restores the exact
/// integral of the density over `[a, b]`.
pub fn nystrom_layer(p: &Potentials, kind: LayerKind, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    let dx = (b - a) / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * dx).collect();
    let mut m = alloc::vec![0.0; n * n];
    for (i, &x) in xs.iter().enumerate() {
        let xp = p.pole(x, 0.0);
        let mut row = 0.0;
        for (j, &y) in xs.iter().enumerate() {
            if i == j {
                continue;
            }
            let (c, d) = p.boundary_pair(xp, y)?;
            let v = dx * if kind == LayerKind::K { c } else { d };
            m[i * n + j] = v;
            row += v;
        }
        let total = match kind {
            LayerKind::K => p.closure_k(xp, a, b)?,
            LayerKind::L => p.closure_l(xp, a, b)?,
        };
        m[i * n + i] = total - row;
    }
    Ok(m)
}

fn matvec(m: &[f64], n: usize, x: &[f64], transpose: bool) -> Vec<f64> {
    let mut y = alloc::vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = if transpose { m[j * n + i] } else { m[i * n + j] };
            y[i] += v * x[j];
        }
    }
    y
}

fn lp(v: &[f64], p: f64) -> f64 {
    libm::pow(v.iter().map(|x| libm::pow(x.abs(), p)).sum::<f64>(), 1.0 / p)
}

fn dual(v: &[f64], p: f64) -> Vec<f64> {
    v.iter().map(|x| x.signum() * libm::pow(x.abs(), p - 1.0)).collect()
}

/// Lower estimate of `‖M‖_{ℓ^p → ℓ^p}` for a dense `n × n` matrix by
/// Boyd's power iteration from a smooth mean-zero start and `trials`
/// random starts.
pub fn op_norm_estimate(m: &[f64], n: usize, p: f64, trials: usize, seed: u64) -> f64 {
    assert!(p > 1.0 && m.len() == n * n);
    let q = p / (p - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(
        (0..n)
            .map(|i| {
                let u = 2.0 * (i as f64 + 0.5) / n as f64 - 1.0;
                libm::sin(core::f64::consts::PI * u) * (1.0 - u * u)
            })
            .collect(),
    );
    for _ in 0..trials {
        starts.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let mut best = 0.0f64;
    for mut x in starts {
        let nx = lp(&x, p);
        if nx == 0.0 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let mut est = 0.0;
        for _ in 0..200 {
            let y = matvec(m, n, &x, false);
            let ny = lp(&y, p);
            if ny == 0.0 {
                est = 0.0;
                break;
            }
            let z = matvec(m, n, &dual(&y, p), true);
            let nz = lp(&z, q);
            if nz == 0.0 {
                break;
            }
            let xn = dual(&z, q);
            let s = lp(&xn, p);
            x = xn.iter().map(|v| v / s).collect();
            let new = lp(&matvec(m, n, &x, false), p);
            if (new - est).abs() <= 1e-12 * new {
                est = new;
                break;
            }
            est = new;
        }
        best = best.max(est);
    }
    best
}

/// A boxed operator for uniform handling.
pub type DynOperator = Box<dyn Operator>;
