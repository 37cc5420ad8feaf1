//! Fundamental solutions `Γ_X` of `Lᵗ`, their transposes and the conjugate
//! `Γ̃ᵗ`, with the checks that certify them.
//!
//! Conventions: `Γ_X` solves `div_Y(Aᵗ(Y)∇_Y Γ_X(Y)) = δ_X`, so that
//! `∬ Aᵗ∇Γ_X·∇φ = −φ(X)`. The transposed solution `Γᵗ_X` solves the same
//! problem with `A` in place of `Aᵗ`, and `Γ_X(Y) = Γᵗ_Y(X)`.

pub mod checks;
pub mod conjugate;
pub mod kkpt;
pub mod layered;

use alloc::sync::Arc;

use crate::coefficients::{CoefficientField, FieldKind};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

pub use conjugate::ConjugateGreen;
pub use kkpt::Triple;
pub use layered::Layered;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Pairs closer than this are treated as coincident.
pub const R_MIN: f64 = 1e-12;

/// Default number of staircase cells for smooth fields.
pub const DEFAULT_CELLS: usize = 200;

/// How an evaluator computes `Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedFormConstant,
    ClosedFormKkpt,
    FourierInT,
}

#[derive(Clone, Debug)]
enum Engine {
    Constant(Mat2),
    /// `h` as it enters [`kkpt::gamma`].
    Kkpt(f64),
    Fourier(Arc<Layered>),
}

/// Evaluator of `Γ_X(Y)` (or `Γᵗ_X(Y)` when `transposed`) and its gradients.
#[derive(Clone, Debug)]
pub struct GreenEvaluator {
    pub field: CoefficientField,
    pub transposed: bool,
    pub method: Method,
    /// Staircase resolution used by the Fourier method.
    pub cells: usize,
    engine: Engine,
}

/// Closed-form fundamental solution of `div(A∇)` for constant elliptic `A`:
/// `(1/(2π√det S)) log|S^{−1/2}(Y − X)|` with `S` the symmetric part.
pub fn green_constant(a: &Mat2, xp: Vec2, yp: Vec2) -> Result<f64> {
    let s = a.sym();
    let det = s.det();
    if !(det > 0.0 && s.a > 0.0) {
        return Err(Error::NotElliptic(alloc::format!("symmetric part {s:?} is not positive definite")));
    }
    let v = yp - xp;
    let r = v.norm();
    if r < R_MIN {
        return Err(Error::Pole(r));
    }
    let si = s.inverse().unwrap();
    Ok(libm::log(v.dot(si.apply(v))) / (4.0 * core::f64::consts::PI * libm::sqrt(det)))
}

fn constant_triple(b: &Mat2, xp: Vec2, yp: Vec2) -> Result<Triple> {
    let value = green_constant(b, xp, yp)?;
    let s = b.sym();
    let si = s.inverse().unwrap();
    let v = yp - xp;
    let g = si.apply(v).scale(1.0 / (TWO_PI * libm::sqrt(s.det()) * v.dot(si.apply(v))));
    Ok(Triple { value, grad_y: g, grad_x: -g })
}

impl GreenEvaluator {
    /// Evaluator for `Γ` with the cheapest exact method available.
    pub fn new(a: &CoefficientField) -> Result<Self> {
        Self::build(a, false, DEFAULT_CELLS, None)
    }

    /// Force the Fourier method with `cells` staircase cells.
    pub fn fourier(a: &CoefficientField, cells: usize) -> Result<Self> {
        Self::build(a, false, cells, Some(Method::FourierInT))
    }

    fn build(a: &CoefficientField, transposed: bool, cells: usize, force: Option<Method>) -> Result<Self> {
        if !(a.lambda > 0.0) {
            return Err(Error::NotElliptic(alloc::format!("λ = {} for field {}", a.lambda, a.name)));
        }
        let b_field = if transposed { a.clone() } else { a.transpose() };
        let method = force.unwrap_or(match a.kind {
            _ if a.is_constant() => Method::ClosedFormConstant,
            FieldKind::Kkpt { .. } => Method::ClosedFormKkpt,
            _ => Method::FourierInT,
        });
        let engine = match (method, &a.kind) {
            (Method::ClosedFormConstant, _) => Engine::Constant(b_field.eval(0.0)),
            (Method::ClosedFormKkpt, FieldKind::Kkpt { h }) => Engine::Kkpt(if transposed { -*h } else { *h }),
            (Method::ClosedFormKkpt, _) => return Err(Error::Invalid("kkpt closed form needs a kkpt field".into())),
            (Method::FourierInT, _) => Engine::Fourier(Arc::new(Layered::staircase(&b_field, cells))),
        };
        Ok(Self { field: a.clone(), transposed, method, cells, engine })
    }

    /// Evaluator of the transposed family (`Γᵗ` from `Γ` and back).
    pub fn transpose(&self) -> Self {
        let force = Some(self.method);
        Self::build(&self.field, !self.transposed, self.cells, force).expect("field already validated")
    }

    /// Same method at a finer resolution (twice the staircase cells).
    pub fn refined(&self) -> Self {
        Self::build(&self.field, self.transposed, self.cells * 2, Some(self.method)).expect("field already validated")
    }

    /// The matrix `B` with `div(B∇Γ) = δ` at abscissa `y`, as resolved by
    /// the method.
    pub fn b_matrix(&self, y: f64) -> Mat2 {
        match &self.engine {
            Engine::Fourier(l) => l.matrix_at(y),
            _ => {
                let a = self.field.eval(y);
                if self.transposed {
                    a
                } else {
                    a.transpose()
                }
            }
        }
    }

    /// The matrix `B` of the continuous operator at abscissa `y` (the
    /// Fourier method resolves it by a staircase, see [`Self::b_matrix`]).
    pub fn exact_b(&self, y: f64) -> Mat2 {
        let a = self.field.eval(y);
        if self.transposed {
            a
        } else {
            a.transpose()
        }
    }

    /// `∇_Y Γ_X(Y)` with the staircase jumps of `∂₁Γ` removed: the flux
    /// component `(B∇Γ)₁` and `∂₂Γ`, which are continuous across the
    /// staircase interfaces, are kept and `∂₁Γ` is recovered with the exact
    /// matrix. Identical to the plain gradient for the closed forms.
    pub fn grad_y_smoothed(&self, xp: Vec2, yp: Vec2) -> Result<Vec2> {
        let g = self.grad(xp, yp, true)?;
        if self.method != Method::FourierInT {
            return Ok(g);
        }
        let q1 = self.b_matrix(yp.x).apply(g).x;
        let b = self.exact_b(yp.x);
        Ok(Vec2::new((q1 - b.b * g.y) / b.a, g.y))
    }

    /// `Γ_X(Y)` with both gradients.
    pub fn eval(&self, xp: Vec2, yp: Vec2) -> Result<Triple> {
        let r = (yp - xp).norm();
        if !(r >= R_MIN) {
            return Err(Error::Pole(r));
        }
        match &self.engine {
            Engine::Constant(b) => constant_triple(b, xp, yp),
            Engine::Kkpt(h) => kkpt::gamma(*h, xp, yp),
            Engine::Fourier(l) => {
                let s = l.eval(xp, yp);
                Ok(Triple { value: s.value, grad_y: s.grad_y, grad_x: s.grad_x })
            }
        }
    }

    pub fn value(&self, xp: Vec2, yp: Vec2) -> Result<f64> {
        Ok(self.eval(xp, yp)?.value)
    }

    /// Gradient in `Y` (`in_y = true`) or in `X`.
    pub fn grad(&self, xp: Vec2, yp: Vec2, in_y: bool) -> Result<Vec2> {
        let t = self.eval(xp, yp)?;
        Ok(if in_y { t.grad_y } else { t.grad_x })
    }

    /// `∇_X Γ̃_X(Y)` for the conjugate of this family (`J∇_Y Γ̃ = B∇_Y Γ`).
    /// Meaningful for the transposed evaluator, where it is `∇_X Γ̃ᵗ_X(Y)`.
    pub fn conj_grad_x(&self, xp: Vec2, yp: Vec2) -> Result<Vec2> {
        let v = yp - xp;
        if v.x == 0.0 && v.y >= 0.0 {
            return Err(Error::OnBranchRay);
        }
        let t = self.eval(xp, yp)?;
        let flux = self.b_matrix(yp.x).apply(t.grad_y);
        let dx = match &self.engine {
            Engine::Constant(_) => flux.y,
            Engine::Kkpt(hb) => kkpt_conj_dx(-*hb, xp, yp)?,
            Engine::Fourier(l) => l.conj_dx(xp, yp),
        };
        Ok(Vec2::new(dx, -flux.x))
    }

    /// [`Self::conj_grad_x`] with the staircase jumps in `x` removed. As a
    /// function of `X` the gradient obeys the transmission rule of the
    /// operator with matrix `Bᵗ`, so its second component and the first
    /// component of `Bᵗ∇` are continuous; `∂_x` is recovered from them with
    /// the exact matrix.
    pub fn conj_grad_x_smoothed(&self, xp: Vec2, yp: Vec2) -> Result<Vec2> {
        let g = self.conj_grad_x(xp, yp)?;
        if self.method != Method::FourierInT {
            return Ok(g);
        }
        let q1 = self.b_matrix(xp.x).transpose().apply(g).x;
        let e = self.exact_b(xp.x).transpose();
        Ok(Vec2::new((q1 - e.b * g.y) / e.a, g.y))
    }

    /// Closed-form conjugate value when one exists (constant and kkpt
    /// fields), normalised so that it depends on `Y − X` only for constant
    /// fields and with the cut on the upward ray.
    pub fn conj_closed_value(&self, xp: Vec2, yp: Vec2) -> Option<Result<f64>> {
        match &self.engine {
            Engine::Constant(b) => Some(constant_conjugate(b, xp, yp)),
            Engine::Kkpt(hb) => Some(kkpt::conjugate(-*hb, xp, yp)),
            Engine::Fourier(_) => None,
        }
    }
}

/// `∂_x Γ̃ᵗ_X(Y)` for `A = kkpt:h` by differentiating the closed form.
fn kkpt_conj_dx(h: f64, xp: Vec2, yp: Vec2) -> Result<f64> {
    if xp.x < 0.0 {
        let r = |p: Vec2| Vec2::new(-p.x, p.y);
        return kkpt_conj_dx(h, r(xp), r(yp));
    }
    let v = yp - xp;
    let gt = kkpt::gamma(-h, xp, yp)?.grad_x.x;
    let k = 1.0 + h * h;
    let (x, t, y, s) = (xp.x, xp.y, yp.x, yp.y);
    if y >= 0.0 {
        let (re, im) = (-h * h / k, -h / k);
        let u2 = y + x;
        let w = s - t;
        let r2 = u2 * u2 + w * w;
        Ok((v.y / v.norm2() + im * u2 / r2 - re * w / r2) / TWO_PI + h * gt)
    } else {
        let (re, im) = (1.0 / k, h / k);
        let r1 = v.norm2();
        Ok((-im * v.x / r1 - re * (t - s) / r1) / TWO_PI - h * gt)
    }
}

/// Conjugate for constant `A = S + aJ`: `aΓ + (1/2π)·∠(S^{−1/2}(0,−1), S^{−1/2}v)`,
/// the angle taken in `(−π, π]` so the cut is the upward ray.
fn constant_conjugate(a: &Mat2, xp: Vec2, yp: Vec2) -> Result<f64> {
    let v = yp - xp;
    if v.x == 0.0 && v.y >= 0.0 {
        return Err(Error::OnBranchRay);
    }
    let g = green_constant(a, xp, yp)?;
    let s = a.sym();
    let si = s.sqrt_spd().inverse().unwrap();
    let w = si.apply(v);
    let down = si.apply(Vec2::new(0.0, -1.0));
    let ang = libm::atan2(down.cross(w), down.dot(w));
    // atan2 returns −π on the up ray side from one direction only; the ray
    // itself was excluded above, so the range is (−π, π).
    Ok(a.skew() * g + ang / TWO_PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_examples() {
        let o = Vec2::new(0.0, 0.0);
        let v = green_constant(&Mat2::IDENTITY, o, Vec2::new(3.0, 4.0)).unwrap();
        assert!((v - libm::log(5.0) / TWO_PI).abs() < 1e-15);
        let rot = Mat2::new(1.0, 0.8, -0.8, 1.0);
        assert_eq!(green_constant(&rot, o, Vec2::new(0.3, 0.2)).unwrap(), green_constant(&Mat2::IDENTITY, o, Vec2::new(0.3, 0.2)).unwrap());
        let d = green_constant(&Mat2::diag(4.0, 1.0), o, Vec2::new(2.0, 0.0)).unwrap();
        assert!(d.abs() < 1e-15);
        assert!(matches!(green_constant(&Mat2::IDENTITY, o, o), Err(Error::Pole(_))));
        assert!(green_constant(&Mat2::diag(1.0, -1.0), o, Vec2::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn laplace_gradient_example() {
        let g = GreenEvaluator::new(&CoefficientField::identity()).unwrap();
        let gy = g.grad(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), true).unwrap();
        assert!((gy - Vec2::new(1.0 / TWO_PI, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn fourier_conjugate_derivative_matches_closed_forms() {
        for a in [CoefficientField::rot(0.6), CoefficientField::kkpt(1.2), CoefficientField::constant(Mat2::new(2.0, 0.3, -0.5, 1.0))] {
            let exact = GreenEvaluator::new(&a).unwrap().transpose();
            let four = GreenEvaluator::fourier(&a, 8).unwrap().transpose();
            for (xp, yp) in [
                (Vec2::new(0.4, 0.0), Vec2::new(1.0, 0.5)),
                (Vec2::new(0.4, 0.0), Vec2::new(-0.5, -0.7)),
                (Vec2::new(-0.2, 0.3), Vec2::new(0.6, 2.0)),
                (Vec2::new(-0.2, 0.3), Vec2::new(-0.1, -1.0)),
            ] {
                let e = exact.conj_grad_x(xp, yp).unwrap();
                let f = four.conj_grad_x(xp, yp).unwrap();
                assert!((e - f).max_abs() < 1e-6 * (1.0 + e.max_abs()), "{}: {e:?} vs {f:?}", a.name);
                // Finite differences of the closed-form conjugate.
                if let Some(Ok(_)) = exact.conj_closed_value(xp, yp) {
                    let h = 1e-6;
                    let c = |p: Vec2| exact.conj_closed_value(p, yp).unwrap().unwrap();
                    let dx = (c(xp + Vec2::new(h, 0.0)) - c(xp - Vec2::new(h, 0.0))) / (2.0 * h);
                    let dt = (c(xp + Vec2::new(0.0, h)) - c(xp - Vec2::new(0.0, h))) / (2.0 * h);
                    assert!((e - Vec2::new(dx, dt)).max_abs() < 1e-7, "{}: {e:?} vs fd ({dx}, {dt})", a.name);
                }
            }
        }
    }
}
