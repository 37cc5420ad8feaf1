//! Path-integral conjugate `Γ̃ᵗ_X(Y) = ∫_{γ(Y₀,Y)} ν·A∇Γᵗ_X dl`.

use alloc::vec::Vec;

use super::GreenEvaluator;
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::quad::{self, GaussLegendre};

/// Conjugate of `Γᵗ_X` anchored at `Y₀`, defined off the upward ray
/// `{(x, r) : r ≥ t}`.
#[derive(Clone, Debug)]
pub struct ConjugateGreen {
    /// Evaluator of `Γᵗ` (transposed family).
    pub gt: GreenEvaluator,
    pub pole: Vec2,
    pub anchor: Vec2,
    gl: GaussLegendre,
}

impl ConjugateGreen {
    /// `g` may be either family; the transposed one is used internally.
    pub fn new(g: &GreenEvaluator, pole: Vec2, anchor: Vec2) -> Result<Self> {
        let gt = if g.transposed { g.clone() } else { g.transpose() };
        let me = Self { gt, pole, anchor, gl: GaussLegendre::new(16) };
        me.check_off_ray(anchor)?;
        Ok(me)
    }

    fn check_off_ray(&self, p: Vec2) -> Result<()> {
        let v = p - self.pole;
        if v.x.abs() <= 1e-14 * (1.0 + p.x.abs()) && v.y >= 0.0 {
            Err(Error::OnBranchRay)
        } else {
            Ok(())
        }
    }

    /// `∇_Y Γ̃ᵗ = J⁻¹A∇Γᵗ = (−(A∇Γᵗ)₂, (A∇Γᵗ)₁)`.
    pub fn grad_y(&self, yp: Vec2) -> Result<Vec2> {
        let g = self.gt.grad(self.pole, yp, true)?;
        let f = self.gt.b_matrix(yp.x).apply(g);
        Ok(Vec2::new(-f.y, f.x))
    }

    /// `∇_X Γ̃ᵗ_X(Y)`.
    pub fn grad_x(&self, yp: Vec2) -> Result<Vec2> {
        self.gt.conj_grad_x(self.pole, yp)
    }

    /// Line integral of `∇Γ̃ᵗ` along a segment, graded toward the point
    /// nearest the pole.
    fn segment(&self, a: Vec2, b: Vec2) -> Result<f64> {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return Ok(0.0);
        }
        let u = d.scale(1.0 / len);
        let tau = ((self.pole - a).dot(u)).clamp(0.0, len);
        let dist = (a + u.scale(tau) - self.pole).norm();
        if dist < super::R_MIN {
            return Err(Error::Pole(dist));
        }
        let mut breaks: Vec<f64> = Vec::new();
        let inner = (1e-3 * dist).max(1e-14 * len);
        if tau > 0.0 {
            let left = quad::graded_toward(0.0, tau, inner, 0.5);
            breaks.extend(left.iter().map(|v| tau - v));
        }
        if tau < len {
            breaks.extend(quad::graded_toward(tau, len, inner, 0.5));
        }
        breaks.push(0.0);
        breaks.push(len);
        if u.x.abs() > 1e-14 {
            for &j in &self.gt.field.jumps {
                let r = (j - a.x) / u.x;
                if r > 0.0 && r < len {
                    breaks.push(r);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * len);
        let mut err = None;
        let v = self.gl.integrate_breaks(&breaks, |r| match self.grad_y(a + u.scale(r)) {
            Ok(g) => g.dot(u),
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `Γ̃ᵗ_X(Y)` with `Γ̃ᵗ_X(Y₀) = 0`, integrating down from `Y₀`, across
    /// below the pole and up to `Y`.
    pub fn value(&self, yp: Vec2) -> Result<f64> {
        self.check_off_ray(yp)?;
        let low = self.anchor.y.min(yp.y).min(self.pole.y) - 1.0;
        let p1 = Vec2::new(self.anchor.x, low);
        let p2 = Vec2::new(yp.x, low);
        Ok(self.segment(self.anchor, p1)? + self.segment(p1, p2)? + self.segment(p2, yp)?)
    }

    /// Circulation `∮ ∇Γ̃ᵗ·dl = ∮ ν·A∇Γᵗ dl` over a counter-clockwise circle;
    /// one when the circle winds once around the pole and zero when it
    /// does not.
    pub fn loop_integral(&self, center: Vec2, radius: f64, panels: usize) -> Result<f64> {
        let two_pi = 2.0 * core::f64::consts::PI;
        let mut breaks = quad::linspace(0.0, two_pi, panels + 1);
        // Cut at crossings of coefficient jumps so each panel is smooth.
        let mut cuts = Vec::new();
        for &j in &self.gt.field.jumps {
            let c = (j - center.x) / radius;
            if c.abs() < 1.0 {
                let th = libm::acos(c);
                cuts.push(th);
                cuts.push(two_pi - th);
            }
        }
        quad::insert_cuts(&mut breaks, &cuts);
        let mut err = None;
        let v = self.gl.integrate_breaks(&breaks, |th| {
            let (s, c) = (libm::sin(th), libm::cos(th));
            let p = center + Vec2::new(c, s).scale(radius);
            match self.gt.grad(self.pole, p, true) {
                Ok(g) => self.gt.b_matrix(p.x).apply(g).dot(Vec2::new(c, s)) * radius,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientField;

    #[test]
    fn laplace_argument_and_loops() {
        let g = GreenEvaluator::new(&CoefficientField::identity()).unwrap();
        let x = Vec2::new(0.2, -0.1);
        let y0 = Vec2::new(1.0, -2.0);
        let cg = ConjugateGreen::new(&g, x, y0).unwrap();
        let c0 = g.transpose().conj_closed_value(x, y0).unwrap().unwrap();
        for y in [Vec2::new(-1.0, 0.5), Vec2::new(0.3, 3.0), Vec2::new(0.1, -4.0)] {
            let v = cg.value(y).unwrap();
            let c = g.transpose().conj_closed_value(x, y).unwrap().unwrap() - c0;
            assert!((v - c).abs() < 1e-10, "{v} {c}");
        }
        assert!((cg.loop_integral(x, 0.5, 32).unwrap() - 1.0).abs() < 1e-12);
        assert!(cg.loop_integral(Vec2::new(3.0, 0.0), 1.0, 32).unwrap().abs() < 1e-12);
        assert_eq!(cg.value(Vec2::new(0.2, 1.0)), Err(Error::OnBranchRay));
    }

    #[test]
    fn kkpt_path_integral_matches_closed_form() {
        let a = CoefficientField::kkpt(1.0);
        let g = GreenEvaluator::new(&a).unwrap();
        let gt = g.transpose();
        for x in [Vec2::new(0.4, 0.1), Vec2::new(-0.3, 0.0)] {
            let y0 = Vec2::new(-1.0, -1.5);
            let cg = ConjugateGreen::new(&gt, x, y0).unwrap();
            let c0 = gt.conj_closed_value(x, y0).unwrap().unwrap();
            for y in [Vec2::new(1.0, 0.5), Vec2::new(-0.7, 2.0), Vec2::new(0.1, -0.3), Vec2::new(2.5, -1.0)] {
                let v = cg.value(y).unwrap();
                let c = gt.conj_closed_value(x, y).unwrap().unwrap() - c0;
                assert!((v - c).abs() < 1e-9, "{x:?} {y:?}: {v} {c}");
            }
            assert!((cg.loop_integral(x, 0.7, 64).unwrap() - 1.0).abs() < 1e-9);
            assert!(cg.loop_integral(Vec2::new(x.x + 2.0, 0.0), 0.5, 64).unwrap().abs() < 1e-9);
        }
    }
}
