//! Cone functionals on mesh fields: `N`, `Ñ`, `S`, the tent functionals and
//! the adapted distance of the exterior domain.

use alloc::vec;
use alloc::vec::Vec;

use crate::bvpsolver::GridSolution;
use crate::error::{invalid, Error, Result};
use crate::geometry::{self, Cone, GradedMesh, LipschitzGraph};
use crate::linalg::Vec2;
use crate::quad::{self, GaussLegendre};

/// Aperture `a` and truncation height `T` of `Γ(Q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeParams {
    pub aperture: f64,
    pub cap: f64,
}

impl Default for ConeParams {
    fn default() -> Self {
        Self { aperture: 1.0, cap: 2.0 }
    }
}

/// `N(u)(Q) = max |u|` over the mesh nodes of `Γ(Q)`.
pub fn nt_max(u: &GridSolution, q: f64, params: ConeParams) -> Result<f64> {
    let cone = Cone::new(q, params.aperture, params.cap)?;
    let delta = geometry::node_distances(&u.graph, &u.mesh)?;
    let pts = geometry::cone_points(&u.graph, &cone, &u.mesh, &delta)?;
    if pts.is_empty() {
        return Err(Error::Empty(alloc::format!("cone at {q} has no mesh nodes")));
    }
    Ok(pts.iter().map(|(n, _)| u.u[*n].abs()).fold(0.0, f64::max))
}

/// Quantity averaged over the Whitney regions of [`ConeTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellQuantity {
    /// `|u|²`.
    Value,
    /// `|∇u|²`.
    Gradient,
    /// `|∂_t u|²`.
    Dt,
}

/// Cell-level data of a mesh field, prepared once for many cone vertices.
///
/// A cell is the quadrilateral `[x_i, x_{i+1}] × [s_j, s_{j+1}]`; `δ` is the
/// boundary distance of its centre. The Whitney ball `B_{δ/2}(X)` is
/// approximated by the box `|x′ − x| < δ/2`, `|s′ − s| < δ/2` of cells.
pub struct ConeTable<'a> {
    u: &'a GridSolution,
    params: ConeParams,
    nx1: usize,
    ns1: usize,
    centre: Vec<Vec2>,
    xmid: Vec<f64>,
    smid: Vec<f64>,
    area: Vec<f64>,
    delta: Vec<f64>,
}

impl<'a> ConeTable<'a> {
    pub fn new(u: &'a GridSolution, params: ConeParams) -> Result<Self> {
        let m = &u.mesh;
        let (nx1, ns1) = (m.nx() - 1, m.ns() - 1);
        let xmid: Vec<f64> = m.xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let smid: Vec<f64> = m.ss.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut centre = Vec::with_capacity(nx1 * ns1);
        let mut area = Vec::with_capacity(nx1 * ns1);
        let mut delta = Vec::with_capacity(nx1 * ns1);
        for i in 0..nx1 {
            let phi = 0.5 * (m.phis[i] + m.phis[i + 1]);
            for j in 0..ns1 {
                let c = Vec2::new(xmid[i], phi + smid[j]);
                centre.push(c);
                area.push((m.xs[i + 1] - m.xs[i]) * (m.ss[j + 1] - m.ss[j]));
                delta.push(if smid[j] <= 0.0 { 0.0 } else { u.graph.boundary_distance(c).unwrap_or(smid[j]) });
            }
        }
        Ok(Self { u, params, nx1, ns1, centre, xmid, smid, area, delta })
    }

    fn cell(&self, i: usize, j: usize) -> usize {
        i * self.ns1 + j
    }

    /// Per-cell mean of the chosen squared quantity.
    pub fn cell_means(&self, what: CellQuantity) -> Vec<f64> {
        let mut acc = vec![0.0; self.nx1 * self.ns1];
        let dt = if what == CellQuantity::Dt { Some(self.u.dt_nodal()) } else { None };
        for t in self.u.triangles() {
            let (i, j, _) = t.cell;
            let (area, _, _) = self.u.geometry(&t);
            let v = match what {
                CellQuantity::Gradient => self.u.tri_gradient(&t).norm2(),
                CellQuantity::Value => t.nodes.iter().map(|&n| self.u.u[n] * self.u.u[n]).sum::<f64>() / 3.0,
                CellQuantity::Dt => {
                    let d = dt.as_ref().unwrap();
                    t.nodes.iter().map(|&n| d[n] * d[n]).sum::<f64>() / 3.0
                }
            };
            acc[self.cell(i, j)] += area * v;
        }
        acc.iter().zip(&self.area).map(|(a, w)| a / w).collect()
    }

    /// RMS of per-cell means over each cell's Whitney box.
    pub fn whitney(&self, means: &[f64]) -> Vec<f64> {
        // Prefix sums along x for every row.
        let mut pre = vec![0.0; (self.nx1 + 1) * self.ns1];
        let mut pa = vec![0.0; (self.nx1 + 1) * self.ns1];
        for j in 0..self.ns1 {
            for i in 0..self.nx1 {
                let c = self.cell(i, j);
                pre[(i + 1) * self.ns1 + j] = pre[i * self.ns1 + j] + means[c] * self.area[c];
                pa[(i + 1) * self.ns1 + j] = pa[i * self.ns1 + j] + self.area[c];
            }
        }
        let mut out = vec![0.0; means.len()];
        for i in 0..self.nx1 {
            for j in 0..self.ns1 {
                let c = self.cell(i, j);
                let r = 0.5 * self.delta[c];
                let i0 = self.xmid.partition_point(|&x| x < self.xmid[i] - r).min(i);
                let i1 = self.xmid.partition_point(|&x| x <= self.xmid[i] + r).max(i + 1);
                let j0 = self.smid.partition_point(|&s| s < self.smid[j] - r).min(j);
                let j1 = self.smid.partition_point(|&s| s <= self.smid[j] + r).max(j + 1);
                let (mut s, mut a) = (0.0, 0.0);
                for jj in j0..j1 {
                    s += pre[i1 * self.ns1 + jj] - pre[i0 * self.ns1 + jj];
                    a += pa[i1 * self.ns1 + jj] - pa[i0 * self.ns1 + jj];
                }
                out[c] = libm::sqrt(s / a);
            }
        }
        out
    }

    /// For every cell inside some truncated cone, call `visit(k, cell)` for
    /// each vertex `qs[k]` whose cone contains the cell centre.
    fn for_each_membership(&self, qs: &[f64], mut visit: impl FnMut(usize, usize)) {
        let g = &self.u.graph;
        let a1 = 1.0 + self.params.aperture;
        let qpts: Vec<Vec2> = qs.iter().map(|&q| g.point(q)).collect();
        for c in 0..self.centre.len() {
            let d = self.delta[c];
            if !(d > 0.0) || d > self.params.cap {
                continue;
            }
            let p = self.centre[c];
            let r = a1 * d;
            let k0 = qs.partition_point(|&q| q < p.x - r);
            let k1 = qs.partition_point(|&q| q <= p.x + r);
            for k in k0..k1 {
                if (p - qpts[k]).norm() <= r {
                    visit(k, c);
                }
            }
        }
    }

    /// `sup_{Γ(Q)} v` for per-cell values `v`, at every sorted vertex in `qs`.
    pub fn cone_sup(&self, cell_values: &[f64], qs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; qs.len()];
        self.for_each_membership(qs, |k, c| out[k] = out[k].max(cell_values[c]));
        out
    }

    /// `(∫_{Γ(Q)} v dX)^{1/2}` for per-cell densities `v`.
    pub fn cone_integral_sqrt(&self, cell_values: &[f64], qs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; qs.len()];
        self.for_each_membership(qs, |k, c| out[k] += cell_values[c] * self.area[c]);
        out.into_iter().map(libm::sqrt).collect()
    }

    /// `Ñ` of the chosen quantity at every vertex in `qs`.
    pub fn nt_avg(&self, what: CellQuantity, qs: &[f64]) -> Vec<f64> {
        let w = self.whitney(&self.cell_means(what));
        self.cone_sup(&w, qs)
    }

    /// `N` of the chosen quantity (cell RMS, no Whitney averaging).
    pub fn nt_cells(&self, what: CellQuantity, qs: &[f64]) -> Vec<f64> {
        let m: Vec<f64> = self.cell_means(what).into_iter().map(libm::sqrt).collect();
        self.cone_sup(&m, qs)
    }

    /// Square function `S(u)` at every vertex in `qs`.
    pub fn square(&self, qs: &[f64]) -> Vec<f64> {
        self.cone_integral_sqrt(&self.cell_means(CellQuantity::Gradient), qs)
    }
}

/// `Ñ(∇u)(Q)` with Whitney averages.
pub fn nt_max_avg(u: &GridSolution, q: f64, params: ConeParams) -> Result<f64> {
    let table = ConeTable::new(u, params)?;
    Ok(table.nt_avg(CellQuantity::Gradient, &[q])[0])
}

/// `S(u)(Q) = (∫_{Γ(Q)} |∇u|²)^{1/2}`.
pub fn square_function(u: &GridSolution, q: f64, params: ConeParams) -> Result<f64> {
    let table = ConeTable::new(u, params)?;
    Ok(table.square(&[q])[0])
}

/// `(∫ v(x)^p dσ)^{1/p}` for samples on sorted abscissae (trapezoid rule).
pub fn boundary_lp(g: &LipschitzGraph, xs: &[f64], v: &[f64], p: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..xs.len().saturating_sub(1) {
        let h = xs[k + 1] - xs[k];
        let a = libm::pow(v[k].abs(), p) * g.arc_weight(xs[k]);
        let b = libm::pow(v[k + 1].abs(), p) * g.arc_weight(xs[k + 1]);
        s += 0.5 * h * (a + b);
    }
    libm::pow(s, 1.0 / p)
}

/// Samples of a field on cells of `Ω` or of `Ω⁻`: centres, areas and
/// boundary distances.
#[derive(Clone, Debug)]
pub struct CellField {
    pub centre: Vec<Vec2>,
    pub area: Vec<f64>,
    pub delta: Vec<f64>,
    pub value: Vec<f64>,
}

impl CellField {
    /// Sample `f` at the cell centres of `mesh` (offsets may be negative).
    pub fn from_mesh(g: &LipschitzGraph, mesh: &GradedMesh, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let (mut centre, mut area, mut delta, mut value) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..mesh.nx() - 1 {
            let phi = g.phi(0.5 * (mesh.xs[i] + mesh.xs[i + 1]));
            for j in 0..mesh.ns() - 1 {
                let s = 0.5 * (mesh.ss[j] + mesh.ss[j + 1]);
                let c = Vec2::new(0.5 * (mesh.xs[i] + mesh.xs[i + 1]), phi + s);
                centre.push(c);
                area.push((mesh.xs[i + 1] - mesh.xs[i]) * (mesh.ss[j + 1] - mesh.ss[j]));
                delta.push(g.boundary_distance(c)?);
                value.push(f(c));
            }
        }
        Ok(Self { centre, area, delta, value })
    }

    pub fn with_values(&self, f: impl Fn(Vec2) -> f64) -> Self {
        Self { value: self.centre.iter().map(|&c| f(c)).collect(), ..self.clone() }
    }
}

/// `𝔗(F)(Q) = sup_r ((1/|Δ_r|)∬_{B_r(Q)} |F|² dY/δ)^{1/2}` over `radii`
/// (balls centred at `Q`), and `𝔖(F)(Q) = (∬_{Γ(Q)} |F|² dY/δ²)^{1/2}` with
/// the cone taken on the side where the samples live.
pub fn tent_functionals(g: &LipschitzGraph, f: &CellField, q: f64, radii: &[f64], params: ConeParams) -> (f64, f64) {
    let qp = g.point(q);
    let mut t_best = 0.0f64;
    for &r in radii {
        let mut s = 0.0;
        for k in 0..f.centre.len() {
            if f.delta[k] > 0.0 && (f.centre[k] - qp).norm() < r {
                s += f.area[k] * f.value[k] * f.value[k] / f.delta[k];
            }
        }
        t_best = t_best.max(libm::sqrt(s / (2.0 * r)));
    }
    let mut s = 0.0;
    for k in 0..f.centre.len() {
        let d = f.delta[k];
        if d > 0.0 && d <= params.cap && (f.centre[k] - qp).norm() <= (1.0 + params.aperture) * d {
            s += f.area[k] * f.value[k] * f.value[k] / (d * d);
        }
    }
    (t_best, libm::sqrt(s))
}

/// Both sides of `∬ |FG| dY/δ ≤ C ∫ 𝔗(F)𝔖(G) dσ`, the right side by the
/// trapezoid rule on `qs`.
pub fn tent_duality(g: &LipschitzGraph, f: &CellField, gf: &CellField, qs: &[f64], radii: &[f64], params: ConeParams) -> (f64, f64) {
    let lhs: f64 = (0..f.centre.len())
        .filter(|&k| f.delta[k] > 0.0)
        .map(|k| f.area[k] * (f.value[k] * gf.value[k]).abs() / f.delta[k])
        .sum();
    let prod: Vec<f64> = qs
        .iter()
        .map(|&q| tent_functionals(g, f, q, radii, params).0 * tent_functionals(g, gf, q, radii, params).1)
        .collect();
    (lhs, boundary_lp(g, qs, &prod, 1.0))
}

/// Regularised distance on `Ω⁻ = {t < φ(x)}`.
///
/// With `ρ(x, λ) = (φ ∗ η_λ)(x)` for a smooth even bump `η`, the value at
/// `(x, t)` is `c₀λ` where `λ > 0` solves `ρ(x, λ) − c₀λ = t`. The choice
/// `c₀ = 1 + k` makes the left side strictly decreasing in `λ`. On a flat
/// boundary it reduces to `|t|`.
#[derive(Clone, Debug)]
pub struct AdaptedDistance {
    pub g: LipschitzGraph,
    pub c0: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AdaptedDistance {
    pub fn new(g: &LipschitzGraph) -> Self {
        let gl = GaussLegendre::new(48);
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        gl.push_mapped(-1.0, 1.0, &mut nodes, &mut weights);
        for (z, w) in nodes.iter().zip(weights.iter_mut()) {
            *w *= super::boundary::smooth_bump(*z).0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { g: g.clone(), c0: 1.0 + g.k, nodes, weights }
    }

    fn rho(&self, x: f64, lam: f64) -> (f64, f64) {
        let (mut v, mut d) = (0.0, 0.0);
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            let (p, dp) = self.g.profile.eval(x - lam * z);
            v += w * p;
            d -= w * dp * z;
        }
        (v, d)
    }

    /// `δ₀(X)` for `X` strictly below the graph.
    pub fn eval(&self, p: Vec2) -> Result<f64> {
        let v = self.g.phi(p.x) - p.y;
        if !(v > 0.0) {
            return Err(invalid!("adapted distance needs a point below the graph"));
        }
        // F(λ) = ρ(x, λ) − c₀λ − t is decreasing, F(0) = v > 0.
        let f = |lam: f64| self.rho(p.x, lam).0 - self.c0 * lam - p.y;
        let mut hi = v / self.c0;
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        let mut lam = quad::bisect(f, 0.0, hi, 1e-15 * hi);
        for _ in 0..3 {
            let (r, dr) = self.rho(p.x, lam);
            lam -= (r - self.c0 * lam - p.y) / (dr - self.c0);
        }
        Ok(self.c0 * lam)
    }

    /// Gradient and Hessian norm of `δ₀` by central differences at scale
    /// `10⁻³ δ₀`.
    pub fn derivatives(&self, p: Vec2) -> Result<(Vec2, f64)> {
        let d = self.eval(p)?;
        let h = 1e-3 * d;
        let e = |dx: f64, dy: f64| self.eval(Vec2::new(p.x + dx, p.y + dy));
        let (xp, xm, yp, ym) = (e(h, 0.0)?, e(-h, 0.0)?, e(0.0, h)?, e(0.0, -h)?);
        let grad = Vec2::new((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h));
        let dxx = (xp - 2.0 * d + xm) / (h * h);
        let dyy = (yp - 2.0 * d + ym) / (h * h);
        let dxy = (e(h, h)? - e(h, -h)? - e(-h, h)? + e(-h, -h)?) / (4.0 * h * h);
        Ok((grad, libm::sqrt(dxx * dxx + dyy * dyy + 2.0 * dxy * dxy)))
    }
}

/// Which boundary value problem a ratio refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// `‖N(u)‖_p / ‖f₀‖_p`.
    D,
    /// `‖Ñ(∇u)‖_p / ‖g₀‖_p`.
    N,
    /// `‖Ñ(∇u)‖_p / ‖∂_τ f₀‖_p`.
    R,
}

/// Empirical problem constants over a data battery and a refinement ladder.
#[derive(Clone, Debug)]
pub struct ProblemConstantReport {
    pub problem: Problem,
    pub p: f64,
    /// `ratios[level][datum]`.
    pub ratios: Vec<Vec<f64>>,
    /// Battery supremum per level.
    pub constants: Vec<f64>,
    /// Largest ratio between consecutive levels.
    pub drift: f64,
    /// Constants strictly increase from level to level.
    pub growing: bool,
    pub params: ConeParams,
    /// Boundary window on which the maximal functions were integrated.
    pub window: (f64, f64),
}

/// Solve each datum of `battery` on each mesh of `specs` and compare the
/// cone functional with the data norm. Dirichlet data (problems D and R)
/// and Neumann data (problem N) are taken as `ν·A∇u`.
pub fn lp_problem_constant(
    problem: Problem,
    a: &crate::coefficients::CoefficientField,
    g: &LipschitzGraph,
    p: f64,
    battery: &[crate::bvpsolver::BoundaryData],
    specs: &[crate::bvpsolver::MeshSpec],
    window: (f64, f64),
    params: ConeParams,
) -> Result<ProblemConstantReport> {
    use crate::bvpsolver::{BottomCondition, FemSystem};
    let bottom = if problem == Problem::N { BottomCondition::Neumann } else { BottomCondition::Dirichlet };
    let mut ratios = Vec::new();
    for spec in specs {
        let sys = FemSystem::new(g, a, spec, bottom)?;
        let qs: Vec<f64> = sys.mesh().xs.iter().copied().filter(|&x| x >= window.0 && x <= window.1).collect();
        let mut row = Vec::new();
        for datum in battery {
            let u = sys.solve(&|x| datum.eval(x), &|_| 0.0)?;
            let table = ConeTable::new(&u, params)?;
            let (num, den) = match problem {
                Problem::D => {
                    let n = table.nt_cells(CellQuantity::Value, &qs);
                    (boundary_lp(g, &qs, &n, p), crate::bvpsolver::lp_norm_closure(&|x| datum.eval(x), Some(g), p, datum.window))
                }
                Problem::N => {
                    let n = table.nt_avg(CellQuantity::Gradient, &qs);
                    (boundary_lp(g, &qs, &n, p), crate::bvpsolver::lp_norm_closure(&|x| datum.eval(x), Some(g), p, datum.window))
                }
                Problem::R => {
                    let n = table.nt_avg(CellQuantity::Gradient, &qs);
                    (boundary_lp(g, &qs, &n, p), crate::bvpsolver::lp_norm_closure(&|x| datum.d_tau(g, x), Some(g), p, datum.window))
                }
            };
            // A vanishing datum with a vanishing response counts as ratio 0.
            row.push(if den == 0.0 && num < 1e-12 { 0.0 } else { num / den });
        }
        ratios.push(row);
    }
    let constants: Vec<f64> = ratios.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).collect();
    let drift = constants.windows(2).map(|w| crate::stats::drift(w[0], w[1])).fold(1.0, f64::max);
    let growing = constants.windows(2).all(|w| w[1] > w[0]);
    Ok(ProblemConstantReport { problem, p, ratios, constants, drift, growing, params, window })
}
