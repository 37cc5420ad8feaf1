//! Lipschitz graph domains `Ω = {(x, t) : t > φ(x)}`, their boundary calculus,
//! non-tangential cones and graded meshes over truncated windows.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};
use crate::linalg::Vec2;
use crate::quad;

/// Relative tolerance of the nearest-point search in [`LipschitzGraph::boundary_distance`].
pub const RTOL_GEO: f64 = 1e-10;

type ProfileFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Boundary profile `φ`, either closed form or piecewise linear.
#[derive(Clone)]
pub enum Profile {
    Flat,
    /// `φ(x) = k|x|`.
    Vee { k: f64 },
    /// `φ(x) = α₀ x`.
    Ramp { alpha: f64 },
    /// `φ(x) = amp · exp(−x²)`.
    Bump { amp: f64 },
    /// Linear interpolation of samples with strictly increasing abscissae,
    /// extended by the end slopes.
    PiecewiseLinear { xs: Arc<[f64]>, ys: Arc<[f64]> },
    /// User callback returning `(φ(x), φ′(x))`.
    Custom(ProfileFn),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Flat => write!(f, "Flat"),
            Profile::Vee { k } => write!(f, "Vee({k})"),
            Profile::Ramp { alpha } => write!(f, "Ramp({alpha})"),
            Profile::Bump { amp } => write!(f, "Bump({amp})"),
            Profile::PiecewiseLinear { xs, .. } => write!(f, "PiecewiseLinear({} nodes)", xs.len()),
            Profile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Profile {
    /// `(φ(x), φ′(x))`; at kinks the right-hand derivative is returned.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Profile::Flat => (0.0, 0.0),
            Profile::Vee { k } => (k * x.abs(), if x >= 0.0 { *k } else { -k }),
            Profile::Ramp { alpha } => (alpha * x, *alpha),
            Profile::Bump { amp } => {
                let e = libm::exp(-x * x);
                (amp * e, -2.0 * amp * x * e)
            }
            Profile::PiecewiseLinear { xs, ys } => pl_eval(xs, ys, x),
            Profile::Custom(f) => f(x),
        }
    }

    /// Abscissae where `φ′` jumps.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Profile::Vee { .. } => alloc::vec![0.0],
            Profile::PiecewiseLinear { xs, .. } => xs.to_vec(),
            _ => Vec::new(),
        }
    }
}

fn pl_eval(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    let n = xs.len();
    // Right-derivative convention: a breakpoint belongs to the cell on its right.
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    (ys[i] + s * (x - xs[i]), s)
}

/// The boundary curve together with its Lipschitz data.
#[derive(Clone, Debug)]
pub struct LipschitzGraph {
    pub profile: Profile,
    /// Bound on `|φ′|`.
    pub k: f64,
    /// Slope centre `α₀`.
    pub alpha0: f64,
    /// Oscillation `ε₀ ≥ ‖φ′ − α₀‖∞`.
    pub eps0: f64,
    /// Truncation window `[x_min, x_max]` used by all searches.
    pub window: (f64, f64),
    pub name: String,
}

const DEFAULT_WINDOW: (f64, f64) = (-64.0, 64.0);

impl LipschitzGraph {
    pub fn flat() -> Self {
        Self::from_parts(Profile::Flat, 0.0, 0.0, 0.0, "flat")
    }
    pub fn vee(k: f64) -> Self {
        Self::from_parts(Profile::Vee { k }, k.abs(), 0.0, k.abs(), &alloc::format!("vee:{k}"))
    }
    pub fn ramp(alpha: f64) -> Self {
        Self::from_parts(Profile::Ramp { alpha }, alpha.abs(), alpha, 0.0, &alloc::format!("ramp:{alpha}"))
    }
    pub fn bump(amp: f64) -> Self {
        let k = amp.abs() * libm::sqrt(2.0 / core::f64::consts::E);
        Self::from_parts(Profile::Bump { amp }, k, 0.0, k, &alloc::format!("bump:{amp}"))
    }
    /// Gaussian bump scaled so that `max |φ′| = k`.
    pub fn bump_with_slope(k: f64) -> Self {
        Self::bump(k / libm::sqrt(2.0 / core::f64::consts::E))
    }

    /// Piecewise-linear profile through `(xs, ys)`; the Lipschitz data are
    /// read off the cell slopes.
    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(invalid!("piecewise-linear profile needs ≥ 2 matching samples"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid!("abscissae must be strictly increasing"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid!("profile samples must be finite"));
        }
        let slopes: Vec<f64> = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let k = lo.abs().max(hi.abs());
        let window = (xs[0].min(DEFAULT_WINDOW.0), xs[xs.len() - 1].max(DEFAULT_WINDOW.1));
        let mut g = Self::from_parts(
            Profile::PiecewiseLinear { xs: xs.into(), ys: ys.into() },
            k,
            0.5 * (lo + hi),
            0.5 * (hi - lo),
            "piecewise-linear",
        );
        g.window = window;
        Ok(g)
    }

    /// Callback profile with caller-supplied Lipschitz data, verified on a
    /// sample grid over the window.
    pub fn custom(f: ProfileFn, k: f64, alpha0: f64, eps0: f64, window: (f64, f64)) -> Result<Self> {
        let mut g = Self::from_parts(Profile::Custom(f), k, alpha0, eps0, "custom");
        g.window = window;
        g.verify(2001)?;
        Ok(g)
    }

    fn from_parts(profile: Profile, k: f64, alpha0: f64, eps0: f64, name: &str) -> Self {
        Self { profile, k, alpha0, eps0, window: DEFAULT_WINDOW, name: name.to_string() }
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    /// Named registry: `flat`, `vee:k`, `ramp:α₀`, `bump` or `bump:amp`,
    /// `bumpk:k` (bump with prescribed maximal slope).
    pub fn from_name(name: &str) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        let num = |d: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a.trim().parse::<f64>().map_err(|_| Error::UnknownPreset(name.to_string())),
                None => d.ok_or_else(|| Error::UnknownPreset(name.to_string())),
            }
        };
        let g = match head.trim() {
            "flat" if arg.is_none() => Self::flat(),
            "vee" => Self::vee(num(Some(1.0))?),
            "ramp" => Self::ramp(num(None)?),
            "bump" => Self::bump(num(Some(0.25))?),
            "bumpk" => Self::bump_with_slope(num(None)?),
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        Ok(g)
    }

    /// Check the invariants `|φ(x) − φ(y)| ≤ k|x − y|`, `‖φ′ − α₀‖ ≤ ε₀`,
    /// `ε₀ ≤ k`, `|α₀| ≤ k` on `n` samples.
    pub fn verify(&self, n: usize) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.k);
        if self.eps0 > self.k + slack || self.alpha0.abs() > self.k + slack {
            return Err(invalid!("Lipschitz data violate ε₀ ≤ k, |α₀| ≤ k"));
        }
        let xs = quad::linspace(self.window.0, self.window.1, n.max(2));
        let mut prev = self.phi(xs[0]);
        for w in xs.windows(2) {
            let cur = self.phi(w[1]);
            if (cur - prev).abs() > (self.k + slack) * (w[1] - w[0]) {
                return Err(invalid!("Lipschitz bound violated near x = {}", w[1]));
            }
            if (self.dphi(w[1]) - self.alpha0).abs() > self.eps0 + slack {
                return Err(invalid!("slope oscillation exceeds ε₀ near x = {}", w[1]));
            }
            prev = cur;
        }
        Ok(())
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.profile.eval(x).0
    }
    pub fn dphi(&self, x: f64) -> f64 {
        self.profile.eval(x).1
    }
    /// Boundary point `(x, φ(x))`.
    pub fn point(&self, x: f64) -> Vec2 {
        Vec2::new(x, self.phi(x))
    }

    /// Unit tangent `(1, φ′)/(1 + φ′²)^{1/2}`.
    pub fn tangent(&self, x: f64) -> Vec2 {
        let p = self.dphi(x);
        Vec2::new(1.0, p).scale(1.0 / libm::sqrt(1.0 + p * p))
    }

    /// Outward unit normal `(φ′, −1)/(1 + φ′²)^{1/2}`; with this ordering
    /// `det[τ; ν] = −1`, i.e. `ν = Jτ` for the quarter turn `J`.
    pub fn outward_normal(&self, x: f64) -> Vec2 {
        let p = self.dphi(x);
        Vec2::new(p, -1.0).scale(1.0 / libm::sqrt(1.0 + p * p))
    }

    /// Arc-length density `(1 + φ′²)^{1/2}`.
    pub fn arc_weight(&self, x: f64) -> f64 {
        let p = self.dphi(x);
        libm::sqrt(1.0 + p * p)
    }

    /// Signed vertical offset `t − φ(x)`; positive inside `Ω`.
    pub fn height(&self, p: Vec2) -> f64 {
        p.y - self.phi(p.x)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.height(p) > 0.0
    }

    /// `dist(X, ∂Ω)` by a seeded golden-section search over the boundary
    /// parameter. The minimiser lies within `|t − φ(x)|` of `x`; if that
    /// bracket leaves the window the distance could be underestimated and
    /// an error is returned instead.
    pub fn boundary_distance(&self, p: Vec2) -> Result<f64> {
        let v = self.height(p).abs();
        if v == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = (p.x - v, p.x + v);
        if lo < self.window.0 || hi > self.window.1 {
            return Err(Error::OutsideWindow(alloc::format!("({}, {})", p.x, p.y)));
        }
        if matches!(self.profile, Profile::Flat) {
            return Ok(v);
        }
        if let Profile::Ramp { alpha } = self.profile {
            return Ok(v / libm::sqrt(1.0 + alpha * alpha));
        }
        let d2 = |y: f64| {
            let q = self.point(y);
            (q - p).norm2()
        };
        const SEEDS: usize = 64;
        let mut ys = quad::linspace(lo, hi, SEEDS + 1);
        quad::insert_cuts(&mut ys, &self.profile.kinks());
        let vals: Vec<f64> = ys.iter().map(|&y| d2(y)).collect();
        let mut best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        for i in 0..ys.len() {
            let left_ok = i == 0 || vals[i] <= vals[i - 1];
            let right_ok = i + 1 == ys.len() || vals[i] <= vals[i + 1];
            if left_ok && right_ok {
                let a = ys[i.saturating_sub(1)];
                let b = ys[(i + 1).min(ys.len() - 1)];
                let (_, m) = quad::golden_min(d2, a, b, RTOL_GEO);
                best = best.min(m);
            }
        }
        Ok(libm::sqrt(best))
    }
}

/// Non-tangential approach region `Γ(Q) = {X : |X − Q| ≤ (1 + a)δ(X), δ(X) ≤ T}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    /// Boundary parameter of the vertex `Q = (q, φ(q))`.
    pub vertex_x: f64,
    pub aperture: f64,
    pub cap: f64,
}

impl Cone {
    pub fn new(vertex_x: f64, aperture: f64, cap: f64) -> Result<Self> {
        if !(aperture > 0.0) || !(cap > 0.0) {
            return Err(invalid!("cone aperture and cap must be positive"));
        }
        Ok(Self { vertex_x, aperture, cap })
    }

    /// Membership predicate given a precomputed distance `δ(X)`.
    pub fn contains_with_distance(&self, g: &LipschitzGraph, p: Vec2, delta: f64) -> bool {
        if !(delta > 0.0) || delta > self.cap || !g.contains(p) {
            return false;
        }
        (p - g.point(self.vertex_x)).norm() <= (1.0 + self.aperture) * delta
    }

    pub fn contains(&self, g: &LipschitzGraph, p: Vec2) -> Result<bool> {
        let d = g.boundary_distance(p)?;
        Ok(self.contains_with_distance(g, p, d))
    }
}

/// Tensor mesh of nodes `(x_i, φ(x_i) + s_j)`.
///
/// Offsets `s_j` may be negative, which places nodes below the graph (used
/// for fields on the exterior domain).
#[derive(Clone, Debug)]
pub struct GradedMesh {
    pub xs: Vec<f64>,
    pub ss: Vec<f64>,
    pub phis: Vec<f64>,
}

impl GradedMesh {
    pub fn new(g: &LipschitzGraph, xs: Vec<f64>, ss: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || ss.len() < 2 {
            return Err(invalid!("mesh needs at least two nodes per direction"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || ss.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid!("mesh coordinates must be strictly increasing"));
        }
        let phis = xs.iter().map(|&x| g.phi(x)).collect();
        Ok(Self { xs, ss, phis })
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }
    pub fn ns(&self) -> usize {
        self.ss.len()
    }
    pub fn len(&self) -> usize {
        self.xs.len() * self.ss.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Linear node index; the offset index varies fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ss.len() + j
    }
    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n / self.ss.len(), n % self.ss.len())
    }
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.xs[i], self.phis[i] + self.ss[j])
    }
    pub fn node_at(&self, n: usize) -> Vec2 {
        let (i, j) = self.ij(n);
        self.node(i, j)
    }
    pub fn nodes(&self) -> impl Iterator<Item = Vec2> + '_ {
        (0..self.len()).map(move |n| self.node_at(n))
    }

    /// Offsets `0 = s_0 < s_1 < … < s_{n}` growing geometrically from `s_min`
    /// (ratio `ratio`) until the spacing reaches `max_step`, then uniform up
    /// to `height`.
    pub fn graded_offsets(s_min: f64, ratio: f64, max_step: f64, height: f64) -> Vec<f64> {
        let mut ss = alloc::vec![0.0, s_min];
        let mut step = s_min;
        loop {
            step = (step * ratio).min(max_step);
            let next = ss[ss.len() - 1] + step;
            if next >= height * (1.0 - 1e-12) {
                ss.push(height);
                break;
            }
            ss.push(next);
        }
        ss
    }

    /// Abscissae on `[lo, hi]` with spacing at most `max_step`, refined
    /// geometrically (ratio `ratio`, smallest gap `h_min`) toward each point
    /// of `focus`. Focus points are themselves nodes.
    pub fn graded_abscissae(lo: f64, hi: f64, max_step: f64, focus: &[f64], h_min: f64, ratio: f64) -> Vec<f64> {
        let mut pts = alloc::vec![lo, hi];
        for &c in focus {
            if c > lo && c < hi {
                pts.push(c);
                let mut step = h_min;
                let mut r = h_min;
                while r < (hi - lo) {
                    pts.push(c - r);
                    pts.push(c + r);
                    step = (step * ratio).min(max_step);
                    r += step;
                }
            }
        }
        let mut x = lo;
        while x < hi {
            pts.push(x);
            x += max_step;
        }
        pts.retain(|&v| v >= lo && v <= hi);
        pts.sort_by(f64::total_cmp);
        // Merge near-duplicates, keeping the finer local structure.
        let mut out: Vec<f64> = Vec::with_capacity(pts.len());
        for v in pts {
            if let Some(&last) = out.last() {
                let local = local_min_gap(v, focus, h_min, ratio, max_step);
                if v - last < 0.5 * local {
                    continue;
                }
            }
            out.push(v);
        }
        if *out.last().unwrap() < hi {
            out.push(hi);
        }
        out
    }
}

fn local_min_gap(v: f64, focus: &[f64], h_min: f64, ratio: f64, max_step: f64) -> f64 {
    // Target spacing near v is roughly h_min + (ratio − 1)·dist to the focus.
    let mut gap = max_step;
    for &c in focus {
        gap = gap.min(h_min + (ratio - 1.0) * (v - c).abs());
    }
    gap.max(h_min)
}

/// Mesh nodes lying in the cone `Γ(Q)` (index and position); the distances
/// `δ` must be the per-node boundary distances of `mesh`.
pub fn cone_points(
    g: &LipschitzGraph,
    cone: &Cone,
    mesh: &GradedMesh,
    delta: &[f64],
) -> Result<Vec<(usize, Vec2)>> {
    if cone.vertex_x < mesh.xs[0] || cone.vertex_x > *mesh.xs.last().unwrap() {
        return Err(Error::OutsideWindow(alloc::format!("cone vertex {}", cone.vertex_x)));
    }
    let mut out = Vec::new();
    let reach = (2.0 + cone.aperture) * cone.cap * (1.0 + g.k);
    let lo = mesh.xs.partition_point(|&x| x < cone.vertex_x - reach);
    let hi = mesh.xs.partition_point(|&x| x <= cone.vertex_x + reach);
    for i in lo..hi {
        for j in 0..mesh.ns() {
            let n = mesh.index(i, j);
            let p = mesh.node(i, j);
            if cone.contains_with_distance(g, p, delta[n]) {
                out.push((n, p));
            }
        }
    }
    Ok(out)
}

/// Boundary distance of every mesh node (zero for nodes on or below `∂Ω`).
pub fn node_distances(g: &LipschitzGraph, mesh: &GradedMesh) -> Result<Vec<f64>> {
    mesh.nodes()
        .map(|p| if g.contains(p) { g.boundary_distance(p) } else { Ok(0.0) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_and_normal_examples() {
        let g = LipschitzGraph::flat();
        assert_eq!(g.tangent(0.0), Vec2::new(1.0, 0.0));
        assert_eq!(g.outward_normal(0.0), Vec2::new(0.0, -1.0));
        let r = LipschitzGraph::ramp(-0.75);
        let t = r.tangent(3.0);
        assert!((t.x - 0.8).abs() < 1e-15 && (t.y + 0.6).abs() < 1e-15);
        assert!((r.arc_weight(1.0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn vee_distance_from_axis() {
        let g = LipschitzGraph::vee(1.0);
        let d = g.boundary_distance(Vec2::new(0.0, 1.0)).unwrap();
        assert!((d - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_uses_right_derivative() {
        let g = LipschitzGraph::piecewise_linear(alloc::vec![0.0, 1.0, 2.0], alloc::vec![0.0, 1.0, 0.5]).unwrap();
        assert_eq!(g.dphi(1.0), -0.5);
        assert_eq!(g.dphi(0.5), 1.0);
        assert!((g.alpha0 - 0.25).abs() < 1e-15 && (g.eps0 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn graded_abscissae_contain_focus_and_respect_step() {
        let xs = GradedMesh::graded_abscissae(-4.0, 4.0, 0.25, &[0.0], 1e-4, 1.3);
        assert!(xs.contains(&0.0));
        assert!(xs.windows(2).all(|w| w[1] - w[0] <= 0.25 + 1e-12 && w[1] > w[0]));
        let near: Vec<_> = xs.iter().filter(|x| x.abs() < 1e-3).collect();
        assert!(near.len() > 5);
    }
}
