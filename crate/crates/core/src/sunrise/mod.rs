//! Build-up scheme for arbitrary Lipschitz graphs: the rising-sun
//! replacement of a nearly affine profile, the schedule of Lipschitz classes
//! it walks through, and the resulting decomposition tree.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::LipschitzGraph;
use crate::greenfn::GreenEvaluator;
use crate::potentials::Potentials;

#[cfg(test)]
mod tests;

/// Slack for slope comparisons made on differences of stored samples.
const SLOPE_TOL: f64 = 1e-10;

/// Piecewise-linear profile through vertex values on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub x0: f64,
    pub h: f64,
    pub ys: Vec<f64>,
}

impl Profile {
    pub fn new(x0: f64, h: f64, ys: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || ys.len() < 2 {
            return Err(invalid!("profile needs a positive step and at least one cell"));
        }
        Ok(Self { x0, h, ys })
    }

    pub fn cells(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn slope(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / self.h
    }

    pub fn slopes(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.slope(i)).collect()
    }

    /// `max |φ′ − α|` over the cells.
    pub fn oscillation(&self, alpha: f64) -> f64 {
        self.slopes().iter().map(|s| (s - alpha).abs()).fold(0.0, f64::max)
    }

    /// Vertices `i0..=i1`.
    pub fn restrict(&self, i0: usize, i1: usize) -> Self {
        Self { x0: self.x(i0), h: self.h, ys: self.ys[i0..=i1].to_vec() }
    }

    /// The profile as a graph, continued affinely with slope `alpha` on
    /// both sides.
    pub fn graph(&self, alpha: f64) -> Result<LipschitzGraph> {
        let n = self.ys.len();
        let span = self.h * self.cells() as f64;
        let mut xs = Vec::with_capacity(n + 2);
        let mut ys = Vec::with_capacity(n + 2);
        xs.push(self.x0 - 64.0 * span);
        ys.push(self.ys[0] - alpha * 64.0 * span);
        for i in 0..n {
            xs.push(self.x(i));
            ys.push(self.ys[i]);
        }
        xs.push(self.x(n - 1) + 64.0 * span);
        ys.push(self.ys[n - 1] + alpha * 64.0 * span);
        LipschitzGraph::piecewise_linear(xs, ys)
    }
}

/// Which one-sided slope window `ψ` obeys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `−(4/5)ε₀ ≤ ψ′ − α₀ ≤ ε₀`.
    Upper,
    /// `−ε₀ ≤ ψ′ − α₀ ≤ (4/5)ε₀`.
    Lower,
}

impl Branch {
    pub fn window(self, eps0: f64) -> (f64, f64) {
        match self {
            Branch::Upper => (-0.8 * eps0, eps0),
            Branch::Lower => (-eps0, 0.8 * eps0),
        }
    }

    /// Centre of the window, so that `|ψ′ − α₀ − shift| ≤ 9ε₀/10`.
    pub fn shift(self, eps0: f64) -> f64 {
        match self {
            Branch::Upper => 0.1 * eps0,
            Branch::Lower => -0.1 * eps0,
        }
    }
}

/// One replacement of `φ` on an interval.
#[derive(Clone, Debug)]
pub struct SunriseStep {
    /// Vertex range of `I` on the grid of the input profile.
    pub vertices: (usize, usize),
    pub interval: (f64, f64),
    pub alpha0: f64,
    pub eps0: f64,
    pub k: f64,
    pub branch: Branch,
    /// `ψ` on the vertices of `I`.
    pub psi: Profile,
    /// Cells of `I` (local indices) on which `ψ = φ`.
    pub e_cells: Vec<usize>,
    /// `E` as a union of closed intervals.
    pub e: Vec<(f64, f64)>,
    /// `|E| / |I|`.
    pub measure_ratio: f64,
    /// `1 / (3(1 + (k + ε₀)²)^{1/2})`.
    pub bound: f64,
    /// Smallest and largest `ψ′ − α₀` over the cells.
    pub slope_range: (f64, f64),
}

/// Lower bound on `|E|/|I|`.
pub fn measure_bound(k: f64, eps0: f64) -> f64 {
    1.0 / (3.0 * libm::sqrt(1.0 + (k + eps0) * (k + eps0)))
}

impl SunriseStep {
    /// Slope centre of `ψ`'s class.
    pub fn alpha_next(&self) -> f64 {
        self.alpha0 + self.branch.shift(self.eps0)
    }

    /// Cells of one grid step.
    pub fn cell_ratio(&self) -> f64 {
        1.0 / self.psi.cells() as f64
    }

    /// Re-measure the three invariants against the input samples `phi` of
    /// the interval.
    pub fn certify(&self, phi: &Profile) -> Certificate {
        let measure = self.e_cells.len() as f64 * self.cell_ratio();
        let measure_ok = measure + self.cell_ratio() >= self.bound;
        let agree_ok = self.e_cells.iter().all(|&c| self.psi.ys[c] == phi.ys[c] && self.psi.ys[c + 1] == phi.ys[c + 1]);
        let (lo, hi) = self.branch.window(self.eps0);
        let tol = SLOPE_TOL * (1.0 + self.alpha0.abs() + self.eps0);
        let window_ok = self.psi.slopes().iter().all(|s| {
            let d = s - self.alpha0;
            d >= lo - tol && d <= hi + tol
        });
        let a1 = self.alpha_next();
        let class_ok = a1.abs() <= self.k + 0.1 * self.eps0 + tol && self.psi.oscillation(a1) <= 0.9 * self.eps0 + tol;
        Certificate { measure, measure_ok, agree_ok, window_ok, class_ok }
    }
}

/// Outcome of [`SunriseStep::certify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub measure: f64,
    pub measure_ok: bool,
    pub agree_ok: bool,
    pub window_ok: bool,
    /// `ψ ∈ Λ^{k+ε₀/10}(9ε₀/10)` with centre `α₀ ± ε₀/10`.
    pub class_ok: bool,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.measure_ok && self.agree_ok && self.window_ok && self.class_ok
    }
}

/// Rising-sun envelope of `φ − βx` from the left.
///
/// For `upper`, `ψ − βx` is the running maximum of `φ − βx`, so `ψ′ ≥ β`;
/// otherwise the running minimum, so `ψ′ ≤ β`. Vertices where the running
/// extremum is attained keep `φ` exactly.
fn envelope(phi: &Profile, beta: f64, upper: bool) -> (Vec<f64>, Vec<bool>) {
    let n = phi.ys.len();
    let mut psi = vec![0.0; n];
    let mut hit = vec![false; n];
    let mut best = f64::NAN;
    for i in 0..n {
        let xi = i as f64 * phi.h;
        let v = phi.ys[i] - beta * xi;
        let take = i == 0 || if upper { v >= best } else { v <= best };
        if take {
            best = v;
            psi[i] = phi.ys[i];
            hit[i] = true;
        } else {
            psi[i] = best + beta * xi;
        }
    }
    (psi, hit)
}

fn merge_cells(phi: &Profile, cells: &[usize]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut last = usize::MAX;
    for &c in cells {
        let (a, b) = (phi.x(c), phi.x(c + 1));
        if last != usize::MAX && c == last + 1 {
            out.last_mut().unwrap().1 = b;
        } else {
            out.push((a, b));
        }
        last = c;
    }
    out
}

/// Replace `φ ∈ Λ^k(ε₀)` (centre `α₀`) on the whole sampled interval.
///
/// Both branches are built by the rising-sun envelope with slope bound
/// `α₀ ∓ (4/5)ε₀`; the branch that retains more cells is kept.
pub fn rising_sun(phi: &Profile, alpha0: f64, eps0: f64, k: f64) -> Result<SunriseStep> {
    if !(eps0 > 0.0) || !(k >= 0.0) {
        return Err(invalid!("need ε₀ > 0 and k ≥ 0"));
    }
    let tol = SLOPE_TOL * (1.0 + alpha0.abs() + eps0);
    let osc = phi.oscillation(alpha0);
    if osc > eps0 + tol {
        return Err(invalid!("slope oscillation {osc} exceeds ε₀ = {eps0}"));
    }
    let build = |branch: Branch| {
        let (beta, upper) = match branch {
            Branch::Upper => (alpha0 - 0.8 * eps0, true),
            Branch::Lower => (alpha0 + 0.8 * eps0, false),
        };
        let (psi, hit) = envelope(phi, beta, upper);
        let cells: Vec<usize> = (0..phi.cells()).filter(|&c| hit[c] && hit[c + 1]).collect();
        (branch, psi, cells)
    };
    let up = build(Branch::Upper);
    let lo = build(Branch::Lower);
    let (branch, psi, e_cells) = if lo.2.len() > up.2.len() { lo } else { up };
    let psi = Profile { x0: phi.x0, h: phi.h, ys: psi };
    let slopes = psi.slopes();
    let slope_range = slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s - alpha0), b.max(s - alpha0)));
    let n = phi.cells();
    Ok(SunriseStep {
        vertices: (0, n),
        interval: (phi.x0, phi.x(n)),
        alpha0,
        eps0,
        k,
        branch,
        e: merge_cells(phi, &e_cells),
        measure_ratio: e_cells.len() as f64 / n as f64,
        e_cells,
        bound: measure_bound(k, eps0),
        psi,
        slope_range,
    })
}

/// Random piecewise-linear `φ ∈ Λ^k(ε₀)` on `[0, 1]` with `cells` cells:
/// `α₀` uniform in `[−k, k]`, `ε₀` uniform in `[k/20, k]`, and slopes
/// `α₀ + ε₀u` with `u ∈ [−1, 1]` constant on random runs of cells.
pub fn random_profile(rng: &mut ChaCha8Rng, k: f64, cells: usize) -> (Profile, f64, f64) {
    let alpha0 = rng.random_range(-k..=k);
    let eps0 = rng.random_range(0.05 * k..=k);
    let h = 1.0 / cells as f64;
    let mut ys = Vec::with_capacity(cells + 1);
    ys.push(0.0);
    let mut slope = alpha0;
    let mut run = 0usize;
    for _ in 0..cells {
        if run == 0 {
            // Slopes are stored as differences, so shrink them slightly to
            // keep the recomputed slopes inside the class.
            slope = alpha0 + eps0 * (1.0 - 1e-9) * rng.random_range(-1.0..=1.0);
            run = rng.random_range(1..=cells / 8 + 1);
        }
        run -= 1;
        let y = *ys.last().unwrap() + slope * h;
        ys.push(y);
    }
    (Profile { x0: 0.0, h, ys }, alpha0, eps0)
}

/// Seeded battery of random profiles.
pub fn random_battery(count: usize, k: f64, cells: usize, seed: u64) -> Vec<(Profile, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_profile(&mut rng, k, cells)).collect()
}

/// Exact schedule `a_j = 1/4 − (1/80)Σ_{i=j}^{m−1}(9/10)^i`, `j = 0, …, m`,
/// with `ε_j = (9/10)^j k/8`.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildUpSchedule {
    pub k: BigRational,
    pub eps_target: BigRational,
    pub m: usize,
    pub a: Vec<BigRational>,
    pub eps: Vec<BigRational>,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Smallest `m` with `(9/10)^m k/8 < ε₀` and its coefficients.
pub fn build_schedule(k: &BigRational, eps_target: &BigRational) -> Result<BuildUpSchedule> {
    if !(*eps_target > BigRational::zero()) || !(*k > BigRational::zero()) {
        return Err(invalid!("need k > 0 and ε₀ > 0"));
    }
    let nine_tenths = ratio(9, 10);
    let mut eps = vec![k / ratio(8, 1)];
    while eps.last().unwrap() >= eps_target {
        let next = eps.last().unwrap() * &nine_tenths;
        eps.push(next);
    }
    let m = eps.len() - 1;
    let quarter = ratio(1, 4);
    let eightieth = ratio(1, 80);
    let mut a = vec![quarter.clone(); m + 1];
    let mut power = BigRational::one();
    let mut powers = Vec::with_capacity(m);
    for _ in 0..m {
        powers.push(power.clone());
        power *= &nine_tenths;
    }
    let mut tail = BigRational::zero();
    for j in (0..m).rev() {
        tail += &powers[j];
        a[j] = &quarter - &eightieth * &tail;
    }
    Ok(BuildUpSchedule { k: k.clone(), eps_target: eps_target.clone(), m, a, eps })
}

/// Exact rational from a float (its binary value) or a decimal or `p/q`
/// string.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| invalid!("bad rational `{s}`"))?;
        let d: BigInt = d.trim().parse().map_err(|_| invalid!("bad rational `{s}`"))?;
        if d.is_zero() {
            return Err(invalid!("zero denominator in `{s}`"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(invalid!("bad rational `{s}`"));
    }
    let digits: BigInt = alloc::format!("{int}{frac}").parse().map_err(|_| invalid!("bad rational `{s}`"))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, den);
    Ok(if neg { -r } else { r })
}

impl BuildUpSchedule {
    pub fn a0(&self) -> &BigRational {
        &self.a[0]
    }

    /// `a_{j−1} < a_j` for every `j` and `a₀ > 1/8`, exactly.
    pub fn certify(&self) -> bool {
        self.a.windows(2).all(|w| w[0] < w[1]) && self.a[0] > ratio(1, 8) && self.a[self.m] == ratio(1, 4)
    }

    pub fn a_f64(&self, j: usize) -> f64 {
        to_f64(&self.a[j])
    }

    pub fn eps_f64(&self, j: usize) -> f64 {
        to_f64(&self.eps[j])
    }

    pub fn k_f64(&self) -> f64 {
        to_f64(&self.k)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Node of the decomposition: the profile reached at `level` on `interval`.
#[derive(Clone, Debug)]
pub struct CoronaNode {
    pub level: usize,
    pub parent: Option<usize>,
    /// Vertex range on the root grid.
    pub vertices: (usize, usize),
    /// Slope centre and oscillation bound of the node's class.
    pub alpha: f64,
    pub eps: f64,
    /// Bound on `|alpha|`, that is `a_level · k`.
    pub k_level: f64,
    pub profile: Profile,
    /// Step that produced this node from its parent (none at the root).
    pub step: Option<SunriseStep>,
}

/// Decomposition tree, stored flat in breadth-first order.
#[derive(Clone, Debug)]
pub struct CoronaTree {
    pub nodes: Vec<CoronaNode>,
    pub depth: usize,
    /// Dyadic depth reached at each level.
    pub dyadic: Vec<usize>,
}

impl CoronaTree {
    pub fn level(&self, j: usize) -> impl Iterator<Item = &CoronaNode> {
        self.nodes.iter().filter(move |n| n.level == j)
    }

    /// Smallest `|E|/|I|` over all steps.
    pub fn min_ratio(&self) -> f64 {
        self.nodes.iter().filter_map(|n| n.step.as_ref()).map(|s| s.measure_ratio).fold(1.0, f64::min)
    }

    /// Every step passes its certificate against its parent's profile and
    /// every node lies in its level's class.
    pub fn certify(&self) -> bool {
        self.nodes.iter().all(|n| {
            let in_class = n.alpha.abs() <= n.k_level + SLOPE_TOL && n.profile.oscillation(n.alpha) <= n.eps * (1.0 + SLOPE_TOL) + SLOPE_TOL;
            let step_ok = match (&n.step, n.parent) {
                (Some(s), Some(p)) => {
                    let parent = &self.nodes[p];
                    let (a, b) = n.vertices;
                    let off = parent.vertices.0;
                    s.certify(&parent.profile.restrict(a - off, b - off)).ok()
                }
                _ => true,
            };
            in_class && step_ok
        })
    }
}

/// Walk `φ` (centre `alpha0`) through the classes of `schedule`.
///
/// Level `j + 1` applies [`rising_sun`] to the level-`j` profiles on dyadic
/// subintervals of the root interval. The dyadic depth is the largest one
/// whose node count `Σ_j 2^{min(j, D)}` fits in `budget`.
pub fn corona_decompose(phi: &Profile, alpha0: f64, schedule: &BuildUpSchedule, budget: usize) -> Result<CoronaTree> {
    let m = schedule.m;
    let k = schedule.k_f64();
    let cells = phi.cells();
    // Already in the final class: nothing to build up.
    let (km, em) = (schedule.a_f64(m) * k, schedule.eps_f64(m));
    if alpha0.abs() <= km && phi.oscillation(alpha0) <= em {
        let root = CoronaNode { level: 0, parent: None, vertices: (0, cells), alpha: alpha0, eps: em, k_level: km, profile: phi.clone(), step: None };
        return Ok(CoronaTree { nodes: vec![root], depth: 0, dyadic: vec![0] });
    }
    let count = |d: usize| (0..=m).map(|j| 1usize << j.min(d)).sum::<usize>();
    if count(0) > budget {
        return Err(Error::Budget(alloc::format!("{} levels need {} nodes, budget is {budget}", m + 1, count(0))));
    }
    let mut d_max = 0;
    while d_max < m && count(d_max + 1) <= budget && cells % (1 << (d_max + 1)) == 0 {
        d_max += 1;
    }
    let (k0, e0) = (schedule.a_f64(0) * k, schedule.eps_f64(0));
    let tol = SLOPE_TOL * (1.0 + alpha0.abs() + e0);
    if alpha0.abs() > k0 + tol || phi.oscillation(alpha0) > e0 + tol {
        return Err(invalid!("root profile is not in the class Λ^(a₀k)(k/8) with centre {alpha0}"));
    }
    let mut nodes = vec![CoronaNode { level: 0, parent: None, vertices: (0, cells), alpha: alpha0, eps: e0, k_level: k0, profile: phi.clone(), step: None }];
    let mut dyadic = vec![0];
    let mut frontier = vec![0usize];
    for j in 0..m {
        let d = (j + 1).min(d_max);
        let split = d > dyadic[j];
        dyadic.push(d);
        let mut next = Vec::new();
        for &pi in &frontier {
            let parent = nodes[pi].clone();
            let (a, b) = parent.vertices;
            let ranges = if split { vec![(a, (a + b) / 2), ((a + b) / 2, b)] } else { vec![(a, b)] };
            for (lo, hi) in ranges {
                let local = parent.profile.restrict(lo - a, hi - a);
                let step = rising_sun(&local, parent.alpha, parent.eps, parent.k_level)?;
                let step = SunriseStep { vertices: (lo, hi), ..step };
                nodes.push(CoronaNode {
                    level: j + 1,
                    parent: Some(pi),
                    vertices: (lo, hi),
                    alpha: step.alpha_next(),
                    eps: schedule.eps_f64(j + 1),
                    k_level: schedule.a_f64(j + 1) * k,
                    profile: step.psi.clone(),
                    step: Some(step),
                });
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
    }
    Ok(CoronaTree { nodes, depth: m, dyadic })
}

/// A kernel built from a boundary graph, used to compare a profile with the
/// profiles of the tree.
pub trait GraphKernel {
    /// Scalar kernel `κ(x, y)` for the graph.
    fn bind(&self, g: &LipschitzGraph) -> Result<Box<dyn Fn(f64, f64) -> Result<f64> + '_>>;
}

/// `κ(x, y) = (1, φ′(y))·∇_YΓ_{(x, φ(x))}(y, φ(y))`, the density of `ℒ`
/// against `dy`.
pub struct LayerKernel {
    pub green: GreenEvaluator,
}

impl GraphKernel for LayerKernel {
    fn bind(&self, g: &LipschitzGraph) -> Result<Box<dyn Fn(f64, f64) -> Result<f64> + '_>> {
        let pot = Potentials::with_evaluator(g, self.green.clone());
        Ok(Box::new(move |x, y| {
            let k = pot.kernel_k(0.0, x, y)?;
            Ok(k.a + pot.g.dphi(y) * k.b)
        }))
    }
}

/// The zero kernel.
pub struct ZeroKernel;

impl GraphKernel for ZeroKernel {
    fn bind(&self, _: &LipschitzGraph) -> Result<Box<dyn Fn(f64, f64) -> Result<f64> + '_>> {
        Ok(Box::new(|_, _| Ok(0.0)))
    }
}

/// Largest `|κ_I(x, y) − κ(x, y)| / |κ(x, y)|` over pairs of points of `E`
/// for one node, on about `samples` cell midpoints.
pub fn kernel_agreement(kernel: &dyn GraphKernel, tree: &CoronaTree, node: usize, samples: usize) -> Result<f64> {
    let n = &tree.nodes[node];
    let (Some(step), Some(p)) = (&n.step, n.parent) else {
        return Ok(0.0);
    };
    let parent = &tree.nodes[p];
    let kp = kernel.bind(&parent.profile.graph(parent.alpha)?)?;
    let kn = kernel.bind(&n.profile.graph(n.alpha)?)?;
    // Cell midpoints, where both profiles and their slopes coincide.
    let stride = (step.e_cells.len() / samples.max(1)).max(1);
    let picked: Vec<f64> = step.e_cells.iter().step_by(stride).map(|&c| n.profile.x(c) + 0.5 * n.profile.h).collect();
    let mut worst = 0.0f64;
    for (i, &x) in picked.iter().enumerate() {
        for (j, &y) in picked.iter().enumerate() {
            if i == j {
                continue;
            }
            let (a, b) = (kp(x, y)?, kn(x, y)?);
            let scale = a.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Ok(worst)
}

/// Maximal truncated operator norm estimates for a profile and the tree.
#[derive(Clone, Debug)]
pub struct TransferReport {
    /// `max_F ‖T*F‖₂ / ‖F‖₂` for the root kernel.
    pub root: f64,
    /// The same quantity for each non-root node's kernel (the root's own
    /// value when the tree is a single node).
    pub nodes: Vec<f64>,
    pub max_node: f64,
    /// `root / max_node`, or 0 when both vanish.
    pub fitted_c: f64,
}

/// `max_F ‖sup_δ |T_δF|‖₂ / ‖F‖₂` on the points `xs` with weight `w`, for
/// truncations `δ = |I|·2^{−k}`, `k = 1, …, 6`.
fn maximal_estimate(kappa: &dyn Fn(f64, f64) -> Result<f64>, xs: &[f64], w: f64, battery: &[&dyn Fn(f64) -> f64], span: f64) -> Result<f64> {
    let n = xs.len();
    let mut mat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                mat[i * n + j] = kappa(xs[i], xs[j])? * w;
            }
        }
    }
    let deltas: Vec<f64> = (1..=6).map(|k| span / (1u64 << k) as f64).collect();
    let mut best = 0.0f64;
    for f in battery {
        let fv: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let nf = libm::sqrt(fv.iter().map(|v| v * v).sum::<f64>() * w);
        if nf == 0.0 {
            continue;
        }
        let mut tstar = 0.0;
        for i in 0..n {
            let mut sup = 0.0f64;
            for &d in &deltas {
                let s: f64 = (0..n).filter(|&j| (xs[i] - xs[j]).abs() > d).map(|j| mat[i * n + j] * fv[j]).sum();
                sup = sup.max(s.abs());
            }
            tstar += sup * sup * w;
        }
        best = best.max(libm::sqrt(tstar) / nf);
    }
    Ok(best)
}

/// Compare the root kernel's maximal estimate with the node kernels'.
pub fn transfer_probe(kernel: &dyn GraphKernel, tree: &CoronaTree, battery: &[&dyn Fn(f64) -> f64], n: usize) -> Result<TransferReport> {
    let root = &tree.nodes[0];
    let span = root.profile.h * root.profile.cells() as f64;
    let r = (root.profile.cells() / n.max(2)).max(1);
    let n = root.profile.cells() / r;
    let w = span / n as f64;
    // Fine-cell midpoints, so no probe point sits on a kink.
    let xs: Vec<f64> = (0..n).map(|i| root.profile.x(i * r) + 0.5 * root.profile.h).collect();
    let est = |node: &CoronaNode| -> Result<f64> {
        let kb = kernel.bind(&node.profile.graph(node.alpha)?)?;
        maximal_estimate(&*kb, &xs, w, battery, span)
    };
    let root_est = est(root)?;
    // Node profiles live on subintervals; continue them affinely across
    // the root interval.
    let nodes = if tree.nodes.len() == 1 { vec![root_est] } else { tree.nodes.iter().skip(1).map(&est).collect::<Result<Vec<f64>>>()? };
    let max_node = nodes.iter().cloned().fold(0.0, f64::max);
    let fitted_c = if max_node == 0.0 { if root_est == 0.0 { 0.0 } else { f64::INFINITY } } else { root_est / max_node };
    Ok(TransferReport { root: root_est, nodes, max_node, fitted_c })
}
