//! Checks run on computed solutions: the trace into BMO, the Green
//! representation of `u_t`, the regularity/Neumann ratios and the
//! coercivity of the discrete form.

use alloc::vec;
use alloc::vec::Vec;

use super::{trace_function, BoundaryData, FemSystem, GridSolution, MeshSpec};
use crate::coefficients::CoefficientField;
use crate::error::Result;
use crate::funcestim::bmo_norm;
use crate::funcestim::cone::{
    lp_problem_constant, CellQuantity, ConeParams, ConeTable, Problem, ProblemConstantReport,
};
use crate::geometry::LipschitzGraph;
use crate::greenfn::GreenEvaluator;
use crate::linalg::{BandMatrix, Mat2, Vec2};
use crate::quad::{self, GaussLegendre};

/// Empirical bound of `‖Tr u‖_BMO / ‖∇u‖_{L²}` over a family.
#[derive(Clone, Debug, PartialEq)]
pub struct BmoTraceReport {
    pub ratios: Vec<f64>,
    pub sup: f64,
}

/// BMO seminorm of each trace (dyadic levels `2^{-4} … 2^{3}` inside
/// `window`) divided by the energy of the field.
pub fn trace_bmo_bound(family: &[GridSolution], window: (f64, f64)) -> Result<BmoTraceReport> {
    let mut ratios = Vec::with_capacity(family.len());
    for u in family {
        let tr = trace_function(u)?;
        let b = bmo_norm(&tr, window, (-4, 3));
        let e = u.energy();
        ratios.push(if e > 0.0 { b / e } else { 0.0 });
    }
    let sup = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(BmoTraceReport { ratios, sup })
}

/// Both sides of `u_t(X) = ∫_{∂Ω} (ν·Aᵗ∇Γ_X) u_t + (τ·∇Γ_X) ũ_t dσ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationReport {
    pub points: Vec<Vec2>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `max |lhs − rhs| / max |lhs|`.
    pub residual: f64,
}

/// Evaluate the Green representation of `u_t` at interior points. `ut` and
/// `ut_tilde` are `u_t` and its conjugate on a common mesh; the boundary
/// integral runs over the bottom row with the data interpolated linearly.
pub fn representation_residual(
    ut: &GridSolution,
    ut_tilde: &GridSolution,
    green: &GreenEvaluator,
    points: &[Vec2],
) -> Result<RepresentationReport> {
    let g = &ut.graph;
    let m = &ut.mesh;
    let gl = GaussLegendre::new(6);
    let bottom = |u: &GridSolution, i: usize| u.u[m.index(i, 0)];
    let mut lhs = Vec::with_capacity(points.len());
    let mut rhs = Vec::with_capacity(points.len());
    for &xp in points {
        lhs.push(ut.value(xp)?);
        let mut acc = 0.0;
        for i in 0..m.nx() - 1 {
            let (x0, x1) = (m.xs[i], m.xs[i + 1]);
            let (u0, u1) = (bottom(ut, i), bottom(ut, i + 1));
            let (v0, v1) = (bottom(ut_tilde, i), bottom(ut_tilde, i + 1));
            for (z, w) in gl.nodes.iter().zip(&gl.weights) {
                let s = 0.5 * (z + 1.0);
                let x = x0 + s * (x1 - x0);
                let y = g.point(x);
                let grad = green.grad(xp, y, true)?;
                let b = green.b_matrix(x);
                let conormal = g.outward_normal(x).dot(b.apply(grad));
                let tangential = g.tangent(x).dot(grad);
                let data_u = u0 + s * (u1 - u0);
                let data_v = v0 + s * (v1 - v0);
                acc += 0.5 * w * (x1 - x0) * g.arc_weight(x) * (conormal * data_u + tangential * data_v);
            }
        }
        rhs.push(acc);
    }
    let scale = lhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = lhs.iter().zip(&rhs).fold(0.0f64, |a, (l, r)| a.max((l - r).abs()));
    let residual = if scale > 0.0 { err / scale } else { err };
    Ok(RepresentationReport { points: points.to_vec(), lhs, rhs, residual })
}

/// Which estimate [`rellich_probe`] tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RellichProblem {
    /// `‖Ñ(∇u)‖_p ≤ C‖∂_τ f₀‖_p` for Dirichlet data `f₀`.
    Regularity,
    /// `‖Ñ(∇u)‖_p ≤ C‖g₀‖_p` for conormal data `g₀`.
    Neumann,
}

/// Outcome of [`rellich_probe`].
#[derive(Clone, Debug)]
pub struct RellichReport {
    pub constants: ProblemConstantReport,
    /// Smallest `C` with `Ñ(∇u)(Q) ≤ C(M(∂_τu)(Q) + M(N(u_t))(Q))` at every
    /// sampled vertex, over the battery on the finest mesh.
    pub pointwise_constant: f64,
}

/// `count` smooth bumps `β((x − c)/r)` with centres spread over
/// `[−3/2, 3/2]` and radii cycling through `1/2, 3/4, 1`.
pub fn bump_battery(count: usize) -> Vec<BoundaryData> {
    (0..count)
        .map(|k| {
            let c = if count > 1 { -1.5 + 3.0 * k as f64 / (count - 1) as f64 } else { 0.0 };
            let r = [0.5, 0.75, 1.0][k % 3];
            BoundaryData::new(move |x| crate::coefficients::smooth_bump((x - c) / r).0, (c - r, c + r))
        })
        .collect()
}

/// Hardy–Littlewood maximal function of samples on sorted abscissae, over
/// centred intervals with radii `radii` (trapezoid primitive, linear
/// interpolation at the interval ends).
pub fn discrete_maximal(g: &LipschitzGraph, xs: &[f64], v: &[f64], radii: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut prim = vec![0.0; n];
    let mut arc = vec![0.0; n];
    for k in 1..n {
        let h = xs[k] - xs[k - 1];
        prim[k] = prim[k - 1] + 0.5 * h * (v[k].abs() * g.arc_weight(xs[k]) + v[k - 1].abs() * g.arc_weight(xs[k - 1]));
        arc[k] = arc[k - 1] + 0.5 * h * (g.arc_weight(xs[k]) + g.arc_weight(xs[k - 1]));
    }
    let at = |table: &[f64], x: f64| -> f64 {
        let x = x.clamp(xs[0], xs[n - 1]);
        let k = (xs.partition_point(|&t| t <= x).max(1) - 1).min(n - 2);
        let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
        table[k] + w * (table[k + 1] - table[k])
    };
    xs.iter()
        .zip(v)
        .map(|(&x, &vx)| {
            let mut best = vx.abs();
            for &r in radii {
                let len = at(&arc, x + r) - at(&arc, x - r);
                if len > 0.0 {
                    best = best.max((at(&prim, x + r) - at(&prim, x - r)) / len);
                }
            }
            best
        })
        .collect()
}

/// Empirical `(R)_p` or `(N)_p` constants over a data battery on a ladder
/// of meshes, plus the pointwise domination constant on the finest mesh.
pub fn rellich_probe(
    a: &CoefficientField,
    g: &LipschitzGraph,
    battery: &[BoundaryData],
    p: f64,
    problem: RellichProblem,
    specs: &[MeshSpec],
    window: (f64, f64),
    params: ConeParams,
) -> Result<RellichReport> {
    let kind = match problem {
        RellichProblem::Regularity => Problem::R,
        RellichProblem::Neumann => Problem::N,
    };
    let constants = lp_problem_constant(kind, a, g, p, battery, specs, window, params)?;
    let bottom = match problem {
        RellichProblem::Regularity => super::BottomCondition::Dirichlet,
        RellichProblem::Neumann => super::BottomCondition::Neumann,
    };
    let sys = FemSystem::new(g, a, specs.last().expect("at least one mesh"), bottom)?;
    let qs: Vec<f64> = sys.mesh().xs.iter().copied().filter(|&x| x >= window.0 && x <= window.1).collect();
    let radii = quad::geomspace(1e-3, window.1 - window.0, 40);
    let mut pointwise_constant = 0.0f64;
    for datum in battery {
        let u = sys.solve(&|x| datum.eval(x), &|_| 0.0)?;
        let table = ConeTable::new(&u, params)?;
        let nt = table.nt_avg(CellQuantity::Gradient, &qs);
        let n_ut = table.nt_cells(CellQuantity::Dt, &qs);
        let tr = super::trace(&u);
        let dtau: Vec<f64> = qs
            .iter()
            .map(|&q| {
                let k = tr.partition_point(|&(x, _)| x < q).clamp(1, tr.len() - 2);
                let ((x0, u0), (x1, u1)) = (tr[k - 1], tr[k + 1]);
                (u1 - u0) / (x1 - x0) / g.arc_weight(q)
            })
            .collect();
        let m1 = discrete_maximal(g, &qs, &dtau, &radii);
        let m2 = discrete_maximal(g, &qs, &n_ut, &radii);
        for k in 0..qs.len() {
            let den = m1[k] + m2[k];
            if den > 0.0 {
                pointwise_constant = pointwise_constant.max(nt[k] / den);
            }
        }
    }
    Ok(RellichReport { constants, pointwise_constant })
}

/// Element-wise assembly of `∬ M∇u·∇v` with all window-boundary rows fixed.
fn assemble_dirichlet(template: &GridSolution, mat: &dyn Fn(f64) -> Mat2) -> Result<(BandMatrix, Vec<bool>)> {
    let m = &template.mesh;
    let n = m.len();
    let mut fixed = vec![false; n];
    for k in 0..n {
        let (i, j) = m.ij(k);
        fixed[k] = i == 0 || j == 0 || i == m.nx() - 1 || j == m.ns() - 1;
    }
    let mut band = BandMatrix::zeros(n, m.ns() + 1);
    for t in template.triangles() {
        let (area, c, gl) = template.geometry(&t);
        let a = mat(c.x);
        for (r, &row) in t.nodes.iter().enumerate() {
            for (col_k, &col) in t.nodes.iter().enumerate() {
                if !fixed[row] && !fixed[col] {
                    band.add(row, col, area * a.apply(gl[col_k]).dot(gl[r]));
                }
            }
        }
    }
    for (k, &f) in fixed.iter().enumerate() {
        if f {
            band.add(k, k, 1.0);
        }
    }
    Ok((band, fixed))
}

/// Smallest generalised eigenvalue of `(K_M, W)` for a diagonal `W` by
/// inverse iteration; `K_M` must be symmetric positive definite.
fn smallest_ritz(template: &GridSolution, mat: &dyn Fn(f64) -> Mat2, weight: &[f64], rhs_op: Option<&BandMatrix>) -> Result<f64> {
    let (band, fixed) = assemble_dirichlet(template, mat)?;
    let mut lu = band.clone();
    lu.factor()?;
    let apply_w = |v: &[f64]| -> Vec<f64> {
        match rhs_op {
            Some(b) => b.matvec(v).iter().zip(&fixed).map(|(x, &f)| if f { 0.0 } else { *x }).collect(),
            None => v.iter().zip(weight).zip(&fixed).map(|((x, w), &f)| if f { 0.0 } else { x * w }).collect(),
        }
    };
    let mut v: Vec<f64> = (0..weight.len()).map(|k| if fixed[k] { 0.0 } else { 1.0 + 0.1 * ((k * 7919) % 13) as f64 }).collect();
    let mut mu = 0.0;
    for _ in 0..60 {
        let w = lu.solve(&apply_w(&v));
        let norm = libm::sqrt(w.iter().map(|x| x * x).sum::<f64>());
        v = w.iter().map(|x| x / norm).collect();
        let kv = band.matvec(&v);
        let num: f64 = v.iter().zip(&kv).zip(&fixed).map(|((a, b), &f)| if f { 0.0 } else { a * b }).sum();
        let den: f64 = v.iter().zip(apply_w(&v)).map(|(a, b)| a * b).sum();
        mu = num / den;
    }
    Ok(mu)
}

/// Poincaré constant `C` in `∬ |ψ|² dX/(1 + |X|²) ≤ C ∬ |∇ψ|²` over
/// discrete `ψ` vanishing on the window boundary, and the coercivity ratio
/// `min a(ψ, ψ)/‖∇ψ‖²` of `A` on the same space (the smallest Ritz value of
/// the symmetric part against the Dirichlet form).
pub fn poincare_constant(a: &CoefficientField, g: &LipschitzGraph, spec: &MeshSpec) -> Result<(f64, f64)> {
    let mesh = spec.build(g, a)?;
    let template = GridSolution::from_fn(mesh, g, a, |_| 0.0);
    let weights: Vec<f64> = template
        .node_weights()
        .iter()
        .zip(template.mesh.nodes())
        .map(|(w, p)| w / (1.0 + p.norm2()))
        .collect();
    let lam = smallest_ritz(&template, &|_| Mat2::IDENTITY, &weights, None)?;
    let (lap, _) = assemble_dirichlet(&template, &|_| Mat2::IDENTITY)?;
    let coercive = smallest_ritz(&template, &|x| a.eval(x).sym(), &weights, Some(&lap))?;
    Ok((1.0 / lam, coercive))
}
