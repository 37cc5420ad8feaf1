//! Weak-form Dirichlet and Neumann solvers on truncated graph domains.
//!
//! The computational domain is the window `[x_lo, x_hi] × [φ(x), φ(x) + H]`
//! meshed by a tensor grid in `(x, s)` with `t = φ(x) + s`. Each cell is cut
//! into two triangles and the bilinear form `∬ A∇u·∇v` is discretised with
//! first-order conforming elements. `A` is assembled as given, so the system
//! is nonsymmetric whenever `A` is.

mod poisson;
mod probes;

pub use poisson::{
    lp_norm_closure, poisson_dt, poisson_dx, poisson_extend, poisson_kernel, poisson_norm_report,
    poisson_value, scaling_exponent, KernelNorm, PoissonNormReport, ScalingReport,
};
pub use probes::{
    bump_battery, discrete_maximal, poincare_constant, rellich_probe, representation_residual, trace_bmo_bound,
    BmoTraceReport, RellichProblem, RellichReport, RepresentationReport,
};

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Error, Result};
use crate::funcestim::BoundaryFunction;
use crate::geometry::{GradedMesh, LipschitzGraph};
use crate::linalg::{BandMatrix, Mat2, Vec2};
use crate::quad::GaussLegendre;

/// Far-field behaviour assumed when the window was truncated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decay {
    /// Zero Dirichlet data on the artificial boundary: `u(X) = O(|X|^{δ−1})`.
    Vanishing,
    /// Artificial boundary values taken from a reference field.
    Prescribed,
    /// Field sampled from a closed form, no boundary value problem solved.
    Sampled,
}

/// Layout of a graded tensor mesh.
///
/// Horizontal spacing is `max_step` on `|x| ≤ core`, grows by `far_ratio` per
/// cell outside, and shrinks geometrically (ratio `ratio`, smallest gap
/// `h_min`) toward every `focus` abscissa. Vertical offsets start at `s_min`
/// and grow geometrically up to `max_step`, then follow the same far rule.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshSpec {
    pub x_range: (f64, f64),
    pub height: f64,
    pub core: f64,
    pub max_step: f64,
    pub far_ratio: f64,
    pub focus: Vec<f64>,
    pub h_min: f64,
    pub s_min: f64,
    pub ratio: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            x_range: (-16.0, 16.0),
            height: 16.0,
            core: 4.0,
            max_step: 0.1,
            far_ratio: 1.15,
            focus: Vec::new(),
            h_min: 1e-3,
            s_min: 1e-3,
            ratio: 1.2,
        }
    }
}

impl MeshSpec {
    /// Every length scale halved and every growth rate slowed accordingly.
    pub fn refined(&self) -> Self {
        Self {
            max_step: 0.5 * self.max_step,
            far_ratio: 1.0 + 0.5 * (self.far_ratio - 1.0),
            h_min: 0.5 * self.h_min,
            s_min: 0.5 * self.s_min,
            ratio: 1.0 + 0.5 * (self.ratio - 1.0),
            ..self.clone()
        }
    }

    fn cap(&self, d: f64) -> f64 {
        self.max_step + (self.far_ratio - 1.0) * (d - self.core).max(0.0)
    }

    fn sigma_x(&self, x: f64) -> f64 {
        let mut s = self.cap(x.abs());
        for &f in &self.focus {
            s = s.min(self.h_min + (self.ratio - 1.0) * (x - f).abs());
        }
        s
    }

    fn sigma_s(&self, s: f64) -> f64 {
        self.cap(s).min(self.s_min + (self.ratio - 1.0) * s)
    }

    /// Build the mesh; kinks of `φ` and jumps of `A` become mesh lines.
    pub fn build(&self, g: &LipschitzGraph, a: &CoefficientField) -> Result<GradedMesh> {
        let (lo, hi) = self.x_range;
        if !(hi > lo) || !(self.height > 0.0) || !(self.max_step > 0.0) || !(self.ratio > 1.0) {
            return Err(invalid!("degenerate mesh specification"));
        }
        let mut fixed = vec![lo, hi];
        fixed.extend(self.focus.iter().chain(a.jumps.iter()).chain(g.profile.kinks().iter()).filter(|&&v| v > lo && v < hi));
        fixed.sort_by(f64::total_cmp);
        fixed.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
        let mut xs = vec![lo];
        for w in fixed.windows(2) {
            let seg = equidistribute(w[0], w[1], &|x| self.sigma_x(x));
            xs.extend_from_slice(&seg[1..]);
        }
        let ss = equidistribute(0.0, self.height, &|s| self.sigma_s(s));
        GradedMesh::new(g, xs, ss)
    }
}

/// Nodes on `[a, b]` equidistributing `∫ dx / σ(x)`, endpoints included.
fn equidistribute(a: f64, b: f64, sigma: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let mut xs = vec![a];
    let mut cum = vec![0.0];
    let mut x = a;
    while x < b {
        let dx = (sigma(x) / 8.0).min(b - x);
        let mid = x + 0.5 * dx;
        x = if b - (x + dx) < 1e-13 * (1.0 + b.abs()) { b } else { x + dx };
        cum.push(cum[cum.len() - 1] + dx / sigma(mid));
        xs.push(x);
    }
    let total = cum[cum.len() - 1];
    let n = libm::ceil(total - 1e-9).max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(a);
    let mut k = 0;
    for m in 1..n {
        let target = total * m as f64 / n as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let w = (target - cum[k]) / (cum[k + 1] - cum[k]);
        out.push(xs[k] + w * (xs[k + 1] - xs[k]));
    }
    out.push(b);
    out
}

/// One triangle of the mesh: node indices in counter-clockwise order.
#[derive(Clone, Copy, Debug)]
pub struct Tri {
    pub nodes: [usize; 3],
    /// Cell indices `(i, j)` and which half (0 below the diagonal, 1 above).
    pub cell: (usize, usize, u8),
}

/// A nodal field on a graded mesh together with its provenance.
#[derive(Clone)]
pub struct GridSolution {
    pub mesh: GradedMesh,
    pub graph: LipschitzGraph,
    pub field: CoefficientField,
    pub u: Vec<f64>,
    /// Largest interior weak-form residual relative to the row scale.
    pub residual: f64,
    pub decay: Decay,
}

impl core::fmt::Debug for GridSolution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GridSolution")
            .field("nx", &self.mesh.nx())
            .field("ns", &self.mesh.ns())
            .field("residual", &self.residual)
            .field("decay", &self.decay)
            .finish()
    }
}

impl GridSolution {
    /// Sample a closed-form field at the mesh nodes.
    pub fn from_fn(
        mesh: GradedMesh,
        graph: &LipschitzGraph,
        field: &CoefficientField,
        f: impl Fn(Vec2) -> f64,
    ) -> Self {
        let u = mesh.nodes().map(f).collect();
        Self { mesh, graph: graph.clone(), field: field.clone(), u, residual: 0.0, decay: Decay::Sampled }
    }

    /// Same mesh and metadata, new nodal values.
    pub fn with_values(&self, u: Vec<f64>) -> Self {
        assert_eq!(u.len(), self.u.len());
        Self { u, residual: 0.0, decay: Decay::Sampled, ..self.clone() }
    }

    pub fn triangles(&self) -> impl Iterator<Item = Tri> + '_ {
        let (nx, ns) = (self.mesh.nx(), self.mesh.ns());
        let m = &self.mesh;
        (0..nx - 1).flat_map(move |i| {
            (0..ns - 1).flat_map(move |j| {
                let (a, b, c, d) = (m.index(i, j), m.index(i + 1, j), m.index(i + 1, j + 1), m.index(i, j + 1));
                [Tri { nodes: [a, b, c], cell: (i, j, 0) }, Tri { nodes: [a, c, d], cell: (i, j, 1) }]
            })
        })
    }

    fn vertices(&self, t: &Tri) -> [Vec2; 3] {
        t.nodes.map(|n| self.mesh.node_at(n))
    }

    /// Area, centroid and barycentric gradients of a triangle.
    pub fn geometry(&self, t: &Tri) -> (f64, Vec2, [Vec2; 3]) {
        let p = self.vertices(t);
        tri_geometry(&p)
    }

    /// Constant gradient of the field on a triangle.
    pub fn tri_gradient(&self, t: &Tri) -> Vec2 {
        let (_, _, gl) = self.geometry(t);
        let mut g = Vec2::ZERO;
        for k in 0..3 {
            g = g + self.u[t.nodes[k]] * gl[k];
        }
        g
    }

    /// Per-triangle `(area, centroid, ∇u)`.
    pub fn gradients(&self) -> Vec<(f64, Vec2, Vec2)> {
        self.triangles()
            .map(|t| {
                let (area, c, gl) = self.geometry(&t);
                let mut g = Vec2::ZERO;
                for k in 0..3 {
                    g = g + self.u[t.nodes[k]] * gl[k];
                }
                (area, c, g)
            })
            .collect()
    }

    /// Area-weighted nodal average of a per-triangle vector quantity.
    pub fn recover(&self, per_tri: &[Vec2]) -> Vec<Vec2> {
        let mut acc = vec![Vec2::ZERO; self.u.len()];
        let mut w = vec![0.0; self.u.len()];
        for (t, v) in self.triangles().zip(per_tri) {
            let (area, _, _) = self.geometry(&t);
            for &n in &t.nodes {
                acc[n] = acc[n] + area * *v;
                w[n] += area;
            }
        }
        acc.iter().zip(&w).map(|(a, w)| a.scale(1.0 / w)).collect()
    }

    /// Recovered nodal gradient `∇u`.
    pub fn nodal_gradients(&self) -> Vec<Vec2> {
        let g: Vec<Vec2> = self.gradients().into_iter().map(|v| v.2).collect();
        self.recover(&g)
    }

    /// Recovered nodal flux `A∇u` (averaged from element fluxes so that the
    /// continuous normal flux survives coefficient jumps).
    pub fn nodal_fluxes(&self) -> Vec<Vec2> {
        let f: Vec<Vec2> = self.gradients().into_iter().map(|(_, c, g)| self.field.eval(c.x).apply(g)).collect();
        self.recover(&f)
    }

    /// Locate the cell containing `p` and its local coordinates.
    fn locate(&self, p: Vec2) -> Option<(usize, usize, f64, f64)> {
        let m = &self.mesh;
        let (x0, x1) = (m.xs[0], m.xs[m.nx() - 1]);
        if p.x < x0 || p.x > x1 {
            return None;
        }
        let i = (m.xs.partition_point(|&v| v <= p.x).max(1) - 1).min(m.nx() - 2);
        let xi = (p.x - m.xs[i]) / (m.xs[i + 1] - m.xs[i]);
        let phi = m.phis[i] + xi * (m.phis[i + 1] - m.phis[i]);
        let s = p.y - phi;
        if s < -1e-12 || s > m.ss[m.ns() - 1] + 1e-12 {
            return None;
        }
        let j = (m.ss.partition_point(|&v| v <= s).max(1) - 1).min(m.ns() - 2);
        let eta = (s - m.ss[j]) / (m.ss[j + 1] - m.ss[j]);
        Some((i, j, xi, eta))
    }

    /// Piecewise-linear interpolant at `p`.
    pub fn value(&self, p: Vec2) -> Result<f64> {
        let (i, j, xi, eta) = self.locate(p).ok_or_else(|| Error::OutsideWindow(alloc::format!("({}, {})", p.x, p.y)))?;
        let m = &self.mesh;
        let u = |a, b| self.u[m.index(a, b)];
        let (u00, u10, u11, u01) = (u(i, j), u(i + 1, j), u(i + 1, j + 1), u(i, j + 1));
        Ok(if eta <= xi { u00 + xi * (u10 - u00) + eta * (u11 - u10) } else { u00 + xi * (u11 - u01) + eta * (u01 - u00) })
    }

    /// Gradient of the interpolant at `p`.
    pub fn gradient(&self, p: Vec2) -> Result<Vec2> {
        let (i, j, xi, eta) = self.locate(p).ok_or_else(|| Error::OutsideWindow(alloc::format!("({}, {})", p.x, p.y)))?;
        let m = &self.mesh;
        let (a, b, c, d) = (m.index(i, j), m.index(i + 1, j), m.index(i + 1, j + 1), m.index(i, j + 1));
        let t = if eta <= xi { Tri { nodes: [a, b, c], cell: (i, j, 0) } } else { Tri { nodes: [a, c, d], cell: (i, j, 1) } };
        Ok(self.tri_gradient(&t))
    }

    /// `∂_t u` at every node by finite differences along mesh columns
    /// (second order on the nonuniform offsets, one-sided at the ends).
    pub fn dt_nodal(&self) -> Vec<f64> {
        let m = &self.mesh;
        let ns = m.ns();
        let mut out = vec![0.0; self.u.len()];
        for i in 0..m.nx() {
            let col = |j: usize| self.u[m.index(i, j)];
            for j in 0..ns {
                let (j0, j1, j2) = if j == 0 { (0, 1, 2) } else if j == ns - 1 { (ns - 3, ns - 2, ns - 1) } else { (j - 1, j, j + 1) };
                out[m.index(i, j)] = lagrange_derivative([m.ss[j0], m.ss[j1], m.ss[j2]], [col(j0), col(j1), col(j2)], m.ss[j]);
            }
        }
        out
    }

    /// `∂_t u(x_i, φ(x_i)⁺)` along the bottom row.
    pub fn dt_boundary(&self) -> Vec<f64> {
        let d = self.dt_nodal();
        (0..self.mesh.nx()).map(|i| d[self.mesh.index(i, 0)]).collect()
    }

    /// `‖∇u‖_{L²}` over the window.
    pub fn energy(&self) -> f64 {
        libm::sqrt(self.gradients().iter().map(|(a, _, g)| a * g.norm2()).sum())
    }

    /// Weighted norm `(∬ |u|² dX/(1 + |X|²) + ‖∇u‖²)^{1/2}`.
    pub fn weighted_norm(&self) -> f64 {
        let mut s = 0.0;
        for t in self.triangles() {
            let (area, c, gl) = self.geometry(&t);
            let mut g = Vec2::ZERO;
            let mut mean = 0.0;
            for k in 0..3 {
                g = g + self.u[t.nodes[k]] * gl[k];
                mean += self.u[t.nodes[k]] / 3.0;
            }
            s += area * (mean * mean / (1.0 + c.norm2()) + g.norm2());
        }
        libm::sqrt(s)
    }

    /// Lumped nodal quadrature weights (one third of the adjacent areas).
    pub fn node_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.u.len()];
        for t in self.triangles() {
            let (area, _, _) = self.geometry(&t);
            for &n in &t.nodes {
                w[n] += area / 3.0;
            }
        }
        w
    }

    /// Relative `L²` distance to a reference field, with lumped weights;
    /// nodes failing `keep` are ignored.
    pub fn relative_l2(&self, reference: impl Fn(Vec2) -> f64, keep: impl Fn(Vec2) -> bool) -> f64 {
        let w = self.node_weights();
        let (mut num, mut den) = (0.0, 0.0);
        for (n, p) in self.mesh.nodes().enumerate() {
            if !keep(p) {
                continue;
            }
            let r = reference(p);
            num += w[n] * (self.u[n] - r) * (self.u[n] - r);
            den += w[n] * r * r;
        }
        libm::sqrt(num / den)
    }

    /// Remove the mean over the boundary panel `[a, b]`.
    pub fn gauge(&mut self, a: f64, b: f64) {
        let tr = trace(self);
        let (mut s, mut l) = (0.0, 0.0);
        for w in tr.windows(2) {
            let ((x0, v0), (x1, v1)) = (w[0], w[1]);
            let (lo, hi) = (x0.max(a), x1.min(b));
            if hi > lo {
                let mid = 0.5 * (lo + hi);
                let v = v0 + (v1 - v0) * (mid - x0) / (x1 - x0);
                s += v * (hi - lo);
                l += hi - lo;
            }
        }
        let c = s / l;
        self.u.iter_mut().for_each(|v| *v -= c);
    }
}

fn tri_geometry(p: &[Vec2; 3]) -> (f64, Vec2, [Vec2; 3]) {
    let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
    let perp = |e: Vec2| Vec2::new(-e.y, e.x).scale(1.0 / area2);
    let gl = [perp(p[2] - p[1]), perp(p[0] - p[2]), perp(p[1] - p[0])];
    (0.5 * area2, (p[0] + p[1] + p[2]).scale(1.0 / 3.0), gl)
}

/// Derivative at `x` of the quadratic through three points.
fn lagrange_derivative(s: [f64; 3], v: [f64; 3], x: f64) -> f64 {
    let [a, b, c] = s;
    v[0] * ((x - b) + (x - c)) / ((a - b) * (a - c))
        + v[1] * ((x - a) + (x - c)) / ((b - a) * (b - c))
        + v[2] * ((x - a) + (x - b)) / ((c - a) * (c - b))
}

/// Nodal restriction to `∂Ω` as `(x_i, u(x_i, φ(x_i)))` pairs.
pub fn trace(u: &GridSolution) -> Vec<(f64, f64)> {
    (0..u.mesh.nx()).map(|i| (u.mesh.xs[i], u.u[u.mesh.index(i, 0)])).collect()
}

/// [`trace`] as a sampled boundary function.
pub fn trace_function(u: &GridSolution) -> Result<BoundaryFunction> {
    let (xs, vs): (Vec<f64>, Vec<f64>) = trace(u).into_iter().unzip();
    BoundaryFunction::samples(xs, vs)
}

/// Which boundary rows carry Dirichlet data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BottomCondition {
    Dirichlet,
    Neumann,
}

/// Assembled and factorised stiffness system on one mesh; reused for every
/// right-hand side.
pub struct FemSystem {
    pub template: GridSolution,
    bottom: BottomCondition,
    lu: BandMatrix,
    fixed: Vec<bool>,
    /// Couplings `(row, fixed column, value)` moved to the right-hand side.
    couplings: Vec<(usize, usize, f64)>,
    /// Smallest diagonal pivot seen during factorisation (coercivity signal).
    pub min_pivot: f64,
}

impl FemSystem {
    pub fn new(g: &LipschitzGraph, a: &CoefficientField, spec: &MeshSpec, bottom: BottomCondition) -> Result<Self> {
        let mesh = spec.build(g, a)?;
        let (nx, ns) = (mesh.nx(), mesh.ns());
        let n = mesh.len();
        let template = GridSolution {
            mesh,
            graph: g.clone(),
            field: a.clone(),
            u: vec![0.0; n],
            residual: 0.0,
            decay: Decay::Vanishing,
        };
        let mut fixed = vec![false; n];
        for i in 0..nx {
            for j in 0..ns {
                let side = i == 0 || i == nx - 1 || j == ns - 1;
                let bot = j == 0 && bottom == BottomCondition::Dirichlet;
                fixed[template.mesh.index(i, j)] = side || bot;
            }
        }
        let mut lu = BandMatrix::zeros(n, ns + 1);
        let mut couplings = Vec::new();
        for t in template.triangles() {
            let k = element_matrix(&template, &t);
            for (r, &row) in t.nodes.iter().enumerate() {
                if fixed[row] {
                    continue;
                }
                for (c, &col) in t.nodes.iter().enumerate() {
                    if fixed[col] {
                        couplings.push((row, col, k[r][c]));
                    } else {
                        lu.add(row, col, k[r][c]);
                    }
                }
            }
        }
        let mut min_pivot = f64::INFINITY;
        for (i, &f) in fixed.iter().enumerate() {
            if f {
                lu.add(i, i, 1.0);
            } else {
                min_pivot = min_pivot.min(lu.get(i, i));
            }
        }
        if !(min_pivot > 0.0) {
            return Err(Error::NotElliptic(alloc::format!("stiffness diagonal {min_pivot}")));
        }
        lu.factor()?;
        Ok(Self { template, bottom, lu, fixed, couplings, min_pivot })
    }

    pub fn mesh(&self) -> &GradedMesh {
        &self.template.mesh
    }

    /// Solve with boundary data: `bottom(x)` is Dirichlet data or conormal
    /// data `ν·A∇u` depending on the bottom condition; `far(X)` gives the
    /// values on the artificial boundary.
    pub fn solve(&self, bottom: &dyn Fn(f64) -> f64, far: &dyn Fn(Vec2) -> f64) -> Result<GridSolution> {
        let m = &self.template.mesh;
        let n = m.len();
        let mut vals = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for (k, p) in m.nodes().enumerate() {
            if self.fixed[k] {
                let (i, j) = m.ij(k);
                vals[k] = if j == 0 && self.bottom == BottomCondition::Dirichlet { bottom(m.xs[i]) } else { far(p) };
                rhs[k] = vals[k];
            }
        }
        if self.bottom == BottomCondition::Neumann {
            let gl = GaussLegendre::new(4);
            for i in 0..m.nx() - 1 {
                let (x0, x1) = (m.xs[i], m.xs[i + 1]);
                let len = libm::hypot(x1 - x0, m.phis[i + 1] - m.phis[i]);
                let (mut l0, mut l1) = (0.0, 0.0);
                for (z, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let w = 0.5 * (z + 1.0);
                    let gv = bottom(x0 + w * (x1 - x0));
                    l0 += 0.5 * wt * gv * (1.0 - w) * len;
                    l1 += 0.5 * wt * gv * w * len;
                }
                let (a, b) = (m.index(i, 0), m.index(i + 1, 0));
                if !self.fixed[a] {
                    rhs[a] += l0;
                }
                if !self.fixed[b] {
                    rhs[b] += l1;
                }
            }
        }
        for &(row, col, v) in &self.couplings {
            rhs[row] -= v * vals[col];
        }
        let u = self.lu.solve(&rhs);
        let mut sol = self.template.clone();
        sol.u = u;
        sol.decay = Decay::Prescribed;
        sol.residual = weak_residual(&sol, &self.fixed, &rhs_free(&rhs, &self.fixed, &self.couplings, &vals));
        Ok(sol)
    }
}

/// Right-hand side of the free rows before the fixed couplings were moved.
fn rhs_free(rhs: &[f64], fixed: &[bool], couplings: &[(usize, usize, f64)], vals: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = rhs.iter().zip(fixed).map(|(v, &f)| if f { 0.0 } else { *v }).collect();
    for &(row, col, v) in couplings {
        r[row] += v * vals[col];
    }
    r
}

/// `max_i |(Ku)_i − b_i| / max_i Σ_l |K_il u_l|` over free rows.
fn weak_residual(u: &GridSolution, fixed: &[bool], b: &[f64]) -> f64 {
    let n = u.u.len();
    let mut r = vec![0.0; n];
    let mut scale = vec![0.0; n];
    for t in u.triangles() {
        let k = element_matrix(u, &t);
        for (a, &row) in t.nodes.iter().enumerate() {
            for (c, &col) in t.nodes.iter().enumerate() {
                r[row] += k[a][c] * u.u[col];
                scale[row] += (k[a][c] * u.u[col]).abs();
            }
        }
    }
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for i in 0..n {
        if !fixed[i] {
            num = num.max((r[i] - b[i]).abs());
            den = den.max(scale[i]);
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `K_rc = ∬_T A∇λ_c·∇λ_r` with `A` frozen at the centroid.
fn element_matrix(u: &GridSolution, t: &Tri) -> [[f64; 3]; 3] {
    let (area, c, gl) = u.geometry(t);
    let a: Mat2 = u.field.eval(c.x);
    let mut k = [[0.0; 3]; 3];
    for r in 0..3 {
        for col in 0..3 {
            k[r][col] = area * a.apply(gl[col]).dot(gl[r]);
        }
    }
    k
}

/// Norms of boundary data demanded by the solvability statements.
#[derive(Clone, Debug, PartialEq)]
pub struct NormBundle {
    pub l7_6: f64,
    pub l2: f64,
    pub l17_6: f64,
    pub lp_user: f64,
    /// `‖f‖_{L²} + ‖∂_τ f‖_{L²}`.
    pub w12: f64,
    /// `‖∂_τ f‖_{L^p}` for the user exponent.
    pub w1p: f64,
}

/// Boundary data `f(x)` with its norm bundle.
#[derive(Clone)]
pub struct BoundaryData {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Interval outside which `f` vanishes (or is negligible).
    pub window: (f64, f64),
}

impl BoundaryData {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, window: (f64, f64)) -> Self {
        Self { f: Arc::new(f), window }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// Tangential derivative `∂_τ f = f′ / (1 + φ′²)^{1/2}` by central
    /// differences.
    pub fn d_tau(&self, g: &LipschitzGraph, x: f64) -> f64 {
        let h = 1e-5 * (1.0 + x.abs());
        ((self.f)(x + h) - (self.f)(x - h)) / (2.0 * h) / g.arc_weight(x)
    }

    pub fn norms(&self, g: &LipschitzGraph, p_user: f64) -> NormBundle {
        let f = self.f.clone();
        let lp = |p: f64| lp_norm_closure(&|x| f(x), Some(g), p, self.window);
        let dl = |p: f64| lp_norm_closure(&|x| self.d_tau(g, x), Some(g), p, self.window);
        let l2 = lp(2.0);
        NormBundle { l7_6: lp(7.0 / 6.0), l2, l17_6: lp(17.0 / 6.0), lp_user: lp(p_user), w12: l2 + dl(2.0), w1p: dl(p_user) }
    }
}

/// Report of [`solve_dirichlet`].
#[derive(Clone, Debug)]
pub struct DirichletReport {
    pub solution: GridSolution,
    pub energy: f64,
    pub norms: NormBundle,
    /// `‖∇u‖ / (‖f₀‖_{W^{1,2}} + ‖f₀‖_{L^{7/6}} + ‖f₀‖_{L^{17/6}})`.
    pub energy_constant: f64,
    /// Relative `L²` trace mismatch on the bottom row.
    pub trace_error: f64,
}

/// Dirichlet problem `div A∇u = 0`, `u = f₀` on `∂Ω`; the artificial
/// boundary takes `far` (zero if `None`).
pub fn solve_dirichlet(
    a: &CoefficientField,
    g: &LipschitzGraph,
    f0: &BoundaryData,
    far: Option<&dyn Fn(Vec2) -> f64>,
    spec: &MeshSpec,
) -> Result<DirichletReport> {
    let sys = FemSystem::new(g, a, spec, BottomCondition::Dirichlet)?;
    let zero = |_: Vec2| 0.0;
    let far_fn: &dyn Fn(Vec2) -> f64 = far.unwrap_or(&zero);
    let mut sol = sys.solve(&|x| f0.eval(x), far_fn)?;
    if far.is_none() {
        sol.decay = Decay::Vanishing;
    }
    let norms = f0.norms(g, 2.0);
    let energy = sol.energy();
    let (mut num, mut den) = (0.0, 0.0);
    for (x, v) in trace(&sol) {
        let r = f0.eval(x);
        num += (v - r) * (v - r);
        den += r * r;
    }
    let trace_error = if den > 0.0 { libm::sqrt(num / den) } else { libm::sqrt(num) };
    let bound = norms.w12 + norms.l7_6 + norms.l17_6;
    let energy_constant = if bound > 0.0 { energy / bound } else { 0.0 };
    Ok(DirichletReport { solution: sol, energy, norms, energy_constant, trace_error })
}

/// Report of [`solve_neumann`].
#[derive(Clone, Debug)]
pub struct NeumannReport {
    pub solution: GridSolution,
    pub energy: f64,
    /// `|∫ g₀ dσ| / ∫ |g₀| dσ`; large values flag incompatible data.
    pub mean_defect: f64,
    pub compatible: bool,
}

/// Neumann problem `ν·A∇u = g₀` on `∂Ω`. The artificial boundary takes
/// `far` (zero if `None`); the result is gauged to zero mean on `panel`.
pub fn solve_neumann(
    a: &CoefficientField,
    g: &LipschitzGraph,
    g0: &BoundaryData,
    far: Option<&dyn Fn(Vec2) -> f64>,
    panel: (f64, f64),
    spec: &MeshSpec,
) -> Result<NeumannReport> {
    let sys = FemSystem::new(g, a, spec, BottomCondition::Neumann)?;
    let zero = |_: Vec2| 0.0;
    let mut sol = sys.solve(&|x| g0.eval(x), far.unwrap_or(&zero))?;
    sol.gauge(panel.0, panel.1);
    let f = g0.f.clone();
    let mean = crate::quad::GaussLegendre::new(16)
        .integrate_breaks(&crate::quad::linspace(g0.window.0, g0.window.1, 257), |x| f(x) * g.arc_weight(x));
    let total = lp_norm_closure(&|x| f(x), Some(g), 1.0, g0.window);
    let mean_defect = if total > 0.0 { mean.abs() / total } else { 0.0 };
    Ok(NeumannReport { energy: sol.energy(), solution: sol, mean_defect, compatible: mean_defect < 1e-6 })
}

/// Conjugate `ũ` of a solution from `dũ = −(A∇u)₂ dx + (A∇u)₁ dt`.
///
/// The form is integrated along the top row of the window first, then down
/// each column. `ũ` is normalised to vanish at the top node nearest `x = 0`.
/// The pair system is only imposed along those paths, so the returned
/// number is its relative mismatch on interior cells, which estimates the
/// path dependence.
pub fn conjugate_field(u: &GridSolution) -> (GridSolution, f64) {
    let flux = u.nodal_fluxes();
    let m = &u.mesh;
    let ns = m.ns();
    let mut ut = vec![0.0; u.u.len()];
    let top = ns - 1;
    let mut row = vec![0.0; m.nx()];
    for i in 1..m.nx() {
        let (a, b) = (m.index(i - 1, top), m.index(i, top));
        let f = 0.5 * (flux[a] + flux[b]);
        row[i] = row[i - 1] - f.y * (m.xs[i] - m.xs[i - 1]) + f.x * (m.phis[i] - m.phis[i - 1]);
    }
    let i0 = (0..m.nx()).min_by(|&p, &q| m.xs[p].abs().total_cmp(&m.xs[q].abs())).unwrap_or(0);
    let shift = row[i0];
    for i in 0..m.nx() {
        let mut acc = row[i] - shift;
        ut[m.index(i, top)] = acc;
        for j in (0..ns - 1).rev() {
            let (a, b) = (m.index(i, j), m.index(i, j + 1));
            acc -= 0.5 * (flux[a].x + flux[b].x) * (m.ss[j + 1] - m.ss[j]);
            ut[a] = acc;
        }
    }
    let tilde = u.with_values(ut);
    // Mismatch of J∇ũ = A∇u on cells away from the window edges.
    let g_t = tilde.gradients();
    let g_u = u.gradients();
    let (mut num, mut den) = (0.0, 0.0);
    for ((t, gt), (_, c, gu)) in u.triangles().zip(&g_t).zip(&g_u) {
        let (i, j, _) = t.cell;
        if i == 0 || j == 0 || i + 2 >= m.nx() || j + 2 >= ns {
            continue;
        }
        let f = u.field.eval(c.x).apply(*gu);
        let jg = Vec2::new(gt.2.y, -gt.2.x);
        num += gt.0 * (jg - f).norm2();
        den += gt.0 * f.norm2();
    }
    let rel = if den > 0.0 { libm::sqrt(num / den) } else { 0.0 };
    (tilde, rel)
}

#[cfg(test)]
mod tests;
