//! Certification checks for fundamental solutions: symmetry, the weak
//! identity, gradient decay and the interior estimates used as oracles.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GreenEvaluator;
use crate::error::Result;
use crate::linalg::{Mat2, Vec2};
use crate::quad::{self, GaussLegendre};
use crate::stats;

pub const TOL_WEAK: f64 = 1e-3;
pub const TOL_SYM: f64 = 1e-3;
pub const TOL_CONJ: f64 = 1e-3;
pub const TOL_LOOP: f64 = 1e-6;

/// Outcome of [`verify_symmetry`].
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub max_rel: f64,
    pub pass: bool,
    pub violations: Vec<(Vec2, Vec2, f64)>,
}

/// `max |Γ_X(Y) − Γᵗ_Y(X)| / max(|Γ_X(Y)|, |Γᵗ_Y(X)|)` over the pairs.
pub fn verify_symmetry(g: &GreenEvaluator, gt: &GreenEvaluator, pairs: &[(Vec2, Vec2)], tol: f64) -> Result<SymmetryReport> {
    let mut max_rel = 0.0f64;
    let mut violations = Vec::new();
    for &(x, y) in pairs {
        let a = g.value(x, y)?;
        let b = gt.value(y, x)?;
        let den = a.abs().max(b.abs());
        let rel = if den == 0.0 { 0.0 } else { (a - b).abs() / den };
        if rel > tol {
            violations.push((x, y, rel));
        }
        max_rel = max_rel.max(rel);
    }
    Ok(SymmetryReport { max_rel, pass: violations.is_empty(), violations })
}

/// Random pairs whose values stay away from the zero level of `Γ`, so the
/// relative symmetry error is meaningful.
pub fn symmetry_pairs(g: &GreenEvaluator, n: usize, seed: u64) -> Result<Vec<(Vec2, Vec2)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
        let r = libm::exp(rng.random_range(-3.0f64..3.0));
        let th = rng.random_range(0.0..2.0 * core::f64::consts::PI);
        let y = x + Vec2::new(libm::cos(th), libm::sin(th)).scale(r);
        if g.value(x, y)?.abs() >= 0.05 {
            out.push((x, y));
        }
    }
    Ok(out)
}

/// Compactly supported test function `φ(Y) = (1 − |Y − c|²/ρ²)⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestBump {
    pub center: Vec2,
    pub radius: f64,
}

impl TestBump {
    pub fn value(&self, p: Vec2) -> f64 {
        let v = p - self.center;
        let q = 1.0 - v.norm2() / (self.radius * self.radius);
        if q <= 0.0 {
            0.0
        } else {
            q * q * q * q
        }
    }

    /// Gradient and Hessian `(φ_yy, φ_ys, φ_ss)`.
    pub fn derivs(&self, p: Vec2) -> (Vec2, [f64; 3]) {
        let v = p - self.center;
        let r2 = self.radius * self.radius;
        let q = 1.0 - v.norm2() / r2;
        if q <= 0.0 {
            return (Vec2::default(), [0.0; 3]);
        }
        let g = v.scale(-8.0 * q * q * q / r2);
        let c1 = 48.0 * q * q / (r2 * r2);
        let c2 = 8.0 * q * q * q / r2;
        (g, [c1 * v.x * v.x - c2, c1 * v.x * v.y, c1 * v.y * v.y - c2])
    }
}

/// Residual `|∬ Γ_X div(M∇φ) dY − φ(X)|` of the weak identity, where
/// `M = Bᵗ` is the adjoint of the evaluator's operator. Jumps of `M` enter
/// as line integrals along the jump lines.
pub fn weak_identity_residual(g: &GreenEvaluator, x: Vec2, bump: &TestBump) -> Result<f64> {
    let m_at = |y: f64| -> (Mat2, Mat2) {
        let a = g.field.eval(y);
        let da = g.field.deriv(y);
        if g.transposed {
            (a.transpose(), da.transpose())
        } else {
            (a, da)
        }
    };
    let div = |p: Vec2| -> f64 {
        let (m, dm) = m_at(p.x);
        let (gr, [hyy, hys, hss]) = bump.derivs(p);
        dm.a * gr.x + dm.b * gr.y + m.a * hyy + (m.b + m.c) * hys + m.d * hss
    };
    let gl = GaussLegendre::new(10);
    let c = bump.center;
    let rho = bump.radius;
    let w = x - c;
    assert!(w.norm() < rho, "pole must lie inside the bump support");
    let n_theta = 64;
    let mut area = 0.0;
    let mut err = None;
    for k in 0..n_theta {
        let th = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / n_theta as f64;
        let e = Vec2::new(libm::cos(th), libm::sin(th));
        // Ray X + r e leaves the disc at r2.
        let b = w.dot(e);
        let r2 = -b + libm::sqrt(b * b - (w.norm2() - rho * rho));
        let mut breaks = quad::graded_toward(0.0, r2, 1e-4 * r2, 0.2);
        let mut cuts = Vec::new();
        for &j in &g.field.jumps {
            if e.x.abs() > 1e-14 {
                cuts.push((j - x.x) / e.x);
            }
        }
        quad::insert_cuts(&mut breaks, &cuts);
        let ring = gl.integrate_breaks(&breaks, |r| {
            if r == 0.0 {
                return 0.0;
            }
            let p = x + e.scale(r);
            match g.value(x, p) {
                Ok(v) => r * v * div(p),
                Err(er) => {
                    err = Some(er);
                    0.0
                }
            }
        });
        area += ring;
    }
    if let Some(e) = err {
        return Err(e);
    }
    area *= 2.0 * core::f64::consts::PI / n_theta as f64;
    // Line terms ∫ Γ (Y = (j, s)) ([M₁₁]φ_y + [M₁₂]φ_s) ds.
    let mut line = 0.0;
    for &j in &g.field.jumps {
        let dx = j - c.x;
        if dx.abs() >= rho {
            continue;
        }
        let half = libm::sqrt(rho * rho - dx * dx);
        let (m_right, _) = m_at(j + 1e-12 * (1.0 + j.abs()));
        let (m_left, _) = m_at(j - 1e-12 * (1.0 + j.abs()));
        let jump = m_right - m_left;
        let (lo, hi) = (c.y - half, c.y + half);
        let mut breaks = alloc::vec![lo, hi];
        if x.y > lo && x.y < hi {
            let d = (x.x - j).abs().max(1e-9);
            breaks = quad::graded_breaks(x.y, 1e-3 * d, (hi - lo) * 2.0, 0.5)
                .into_iter()
                .map(|v| v.clamp(lo, hi))
                .collect();
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        }
        line += gl.integrate_breaks(&breaks, |s| {
            let p = Vec2::new(j, s);
            let (gr, _) = bump.derivs(p);
            match g.value(x, p) {
                Ok(v) => v * (jump.a * gr.x + jump.b * gr.y),
                Err(er) => {
                    err = Some(er);
                    0.0
                }
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok((area + line - bump.value(x)).abs())
}

/// Outcome of [`weak_identity_battery`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeakReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Weak identity on `count` random bumps, each with the pole inside.
pub fn weak_identity_battery(g: &GreenEvaluator, count: usize, seed: u64, tol: f64) -> Result<WeakReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(count);
    for _ in 0..count {
        let bump = TestBump {
            center: Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0)),
            radius: rng.random_range(0.4..1.2),
        };
        let r = bump.radius * libm::sqrt(rng.random_range(0.0..0.36));
        let th = rng.random_range(0.0..2.0 * core::f64::consts::PI);
        let x = bump.center + Vec2::new(libm::cos(th), libm::sin(th)).scale(r);
        residuals.push(weak_identity_residual(g, x, &bump)?);
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(WeakReport { pass: max_residual <= tol, max_residual, residuals })
}

/// Fitted gradient-decay constant `C₃ = max |∇_Y Γ_X(Y)|·|X − Y|` over
/// dyadic annuli around sample poles.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub c3: f64,
    /// Per-annulus maxima `(r, max |∇Γ|·r)`.
    pub annuli: Vec<(f64, f64)>,
}

pub fn fit_gradient_bound(g: &GreenEvaluator, poles: &[Vec2], k_range: (i32, i32), n_angles: usize) -> Result<DecayFit> {
    let mut annuli = Vec::new();
    let mut c3 = 0.0f64;
    for k in k_range.0..=k_range.1 {
        let r = libm::pow(2.0, k as f64);
        let mut best = 0.0f64;
        for &x in poles {
            for i in 0..n_angles {
                let th = 2.0 * core::f64::consts::PI * (i as f64 + 0.25) / n_angles as f64;
                let y = x + Vec2::new(libm::cos(th), libm::sin(th)).scale(r);
                best = best.max(g.grad(x, y, true)?.norm() * r);
            }
        }
        c3 = c3.max(best);
        annuli.push((r, best));
    }
    Ok(DecayFit { c3, annuli })
}

/// Empirical constants for the interior estimates on a ball `B_r(center)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InteriorReport {
    /// `∬_{B_r}|∇u|² / (r⁻² ∬_{B_{2r}}|u|²)`.
    pub caccioppoli: f64,
    /// `sup_{B_r}|u| / (⨍_{B_{2r}}|u|²)^{1/2}`.
    pub sup_ratio: f64,
    /// `(⨍_{B_r}|∇u|^p)^{1/p} / (⨍_{B_{2r}}|∇u|²)^{1/2}` with `p = 2.2`.
    pub reverse_holder: f64,
    /// Hölder exponent of `u` fitted from oscillations on shrinking balls,
    /// clamped to `(0, 1]`.
    pub holder_alpha: f64,
    /// `sup_ρ osc_{B_ρ} u / (ρ/r)^α`, the matching Hölder constant.
    pub holder_c: f64,
}

/// Reverse Hölder exponent used by [`interior_estimate_oracles`].
pub const REVERSE_HOLDER_P: f64 = 2.2;

/// Interior estimate ratios for a solution `u` sampled through closures.
/// `inside` masks points outside the solution's domain (for half balls).
pub fn interior_estimate_oracles(
    u: &dyn Fn(Vec2) -> f64,
    grad: &dyn Fn(Vec2) -> Vec2,
    inside: &dyn Fn(Vec2) -> bool,
    center: Vec2,
    r: f64,
) -> InteriorReport {
    let gl = GaussLegendre::new(12);
    let n_theta = 64;
    let ball = |rad: f64, f: &dyn Fn(Vec2) -> f64| -> (f64, f64) {
        // (integral, area) over the masked ball.
        let mut tot = 0.0;
        let mut area = 0.0;
        let breaks = quad::graded_toward(0.0, rad, 1e-4 * rad, 0.5);
        for k in 0..n_theta {
            let th = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / n_theta as f64;
            let e = Vec2::new(libm::cos(th), libm::sin(th));
            tot += gl.integrate_breaks(&breaks, |s| {
                let p = center + e.scale(s);
                if inside(p) {
                    s * f(p)
                } else {
                    0.0
                }
            });
            area += gl.integrate_breaks(&breaks, |s| if inside(center + e.scale(s)) { s } else { 0.0 });
        }
        let w = 2.0 * core::f64::consts::PI / n_theta as f64;
        (tot * w, area * w)
    };
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let (g2_r, area_r) = ball(r, &|p| grad(p).norm2());
    let (u2_2r, area_2r) = ball(2.0 * r, &|p| u(p) * u(p));
    let (g2_2r, _) = ball(2.0 * r, &|p| grad(p).norm2());
    let (gp_r, _) = ball(r, &|p| libm::pow(grad(p).norm(), REVERSE_HOLDER_P));
    let caccioppoli = ratio(g2_r, u2_2r / (r * r));
    // Sup and oscillation by sampling on a polar grid.
    let sample = |rad: f64| -> (f64, f64, f64) {
        let (mut mx, mut mn, mut sup) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
        for i in 0..=24 {
            let s = rad * i as f64 / 24.0;
            for k in 0..48 {
                let th = 2.0 * core::f64::consts::PI * k as f64 / 48.0;
                let p = center + Vec2::new(libm::cos(th), libm::sin(th)).scale(s);
                if !inside(p) {
                    continue;
                }
                let v = u(p);
                mx = mx.max(v);
                mn = mn.min(v);
                sup = sup.max(v.abs());
            }
        }
        (mx, mn, sup)
    };
    let (_, _, sup_r) = sample(r);
    let sup_ratio = ratio(sup_r, libm::sqrt(u2_2r / area_2r));
    let reverse_holder = ratio(libm::pow(gp_r / area_r, 1.0 / REVERSE_HOLDER_P), libm::sqrt(g2_2r / area_2r));
    let mut rhos = Vec::new();
    let mut oscs = Vec::new();
    for k in 0..8 {
        let rho = r * libm::pow(0.5, k as f64);
        let (mx, mn, _) = sample(rho);
        if mx.is_finite() && mx - mn > 0.0 {
            rhos.push(rho);
            oscs.push(mx - mn);
        }
    }
    let (holder_alpha, holder_c) = if rhos.len() >= 2 {
        let fit = stats::fit_power(&rhos, &oscs);
        let alpha = fit.slope.clamp(f64::MIN_POSITIVE, 1.0);
        let c = rhos.iter().zip(&oscs).map(|(rho, o)| o / libm::pow(rho / r, alpha)).fold(0.0, f64::max);
        (alpha, c)
    } else {
        (1.0, 0.0)
    };
    InteriorReport { caccioppoli, sup_ratio, reverse_holder, holder_alpha, holder_c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientField;

    #[test]
    fn weak_identity_for_closed_forms() {
        for a in [CoefficientField::identity(), CoefficientField::kkpt(1.0), CoefficientField::rot(0.5)] {
            let g = GreenEvaluator::new(&a).unwrap();
            let rep = weak_identity_battery(&g, 5, 7, TOL_WEAK).unwrap();
            assert!(rep.pass, "{}: {:?}", a.name, rep.residuals);
            let rep = weak_identity_battery(&g.transpose(), 3, 8, TOL_WEAK).unwrap();
            assert!(rep.pass, "{}ᵗ: {:?}", a.name, rep.residuals);
        }
    }

    #[test]
    fn kkpt_symmetry_is_exact() {
        let g = GreenEvaluator::new(&CoefficientField::kkpt(1.0)).unwrap();
        let pairs = symmetry_pairs(&g, 50, 3).unwrap();
        let rep = verify_symmetry(&g, &g.transpose(), &pairs, 1e-12).unwrap();
        assert!(rep.pass, "{}", rep.max_rel);
    }

    #[test]
    fn interior_oracles_on_harmonic_quadratic() {
        let u = |p: Vec2| p.x * p.x - p.y * p.y;
        let g = |p: Vec2| Vec2::new(2.0 * p.x, -2.0 * p.y);
        let rep = interior_estimate_oracles(&u, &g, &|_| true, Vec2::default(), 1.0);
        assert!(rep.caccioppoli.is_finite() && rep.caccioppoli > 0.0);
        let c = interior_estimate_oracles(&|_| 3.0, &|_| Vec2::default(), &|_| true, Vec2::default(), 1.0);
        assert_eq!(c.caccioppoli, 0.0);
        assert_eq!(c.reverse_holder, 0.0);
    }
}
