//! Closed forms for the appendix operator `A = (1 m; −m 1)`, `m = h·sign x`.
//!
//! In each half plane the coefficients are constant, so `Γ` is built from
//! logarithms and angles about the pole and its mirror image. The
//! coefficients below are fixed by continuity of `Γ` across `x = 0` and the
//! flux condition `[∂_x Γ] = ±2h ∂_t Γ` there.

use crate::error::{Error, Result};
use crate::linalg::Vec2;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Value and gradients of a fundamental solution at one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Triple {
    pub value: f64,
    pub grad_y: Vec2,
    pub grad_x: Vec2,
}

/// `Γ_X(Y)` for `A = kkpt:h`, i.e. `div_Y(Aᵗ∇Γ_X) = δ_X`. The transposed
/// solution `Γᵗ` is the same formula with `h ↦ −h`.
pub fn gamma(h: f64, xp: Vec2, yp: Vec2) -> Result<Triple> {
    let r = (yp - xp).norm();
    if r == 0.0 {
        return Err(Error::Pole(0.0));
    }
    if xp.x < 0.0 {
        let mut t = gamma(h, reflect(xp), reflect(yp))?;
        t.grad_y.x = -t.grad_y.x;
        t.grad_x.x = -t.grad_x.x;
        return Ok(t);
    }
    Ok(gamma_right(h, xp, yp))
}

fn reflect(p: Vec2) -> Vec2 {
    Vec2::new(-p.x, p.y)
}

/// Pole in the closed right half plane.
fn gamma_right(h: f64, xp: Vec2, yp: Vec2) -> Triple {
    let (x, t, y, s) = (xp.x, xp.y, yp.x, yp.y);
    let k = 1.0 + h * h;
    if y >= 0.0 {
        let (r_, s_) = (-h * h / k, -h / k);
        let (u1, v) = (y - x, s - t);
        let r1 = u1 * u1 + v * v;
        let u2 = y + x;
        let r2 = u2 * u2 + v * v;
        let value = (0.5 * libm::log(r1) + r_ * 0.5 * libm::log(r2) + s_ * libm::atan2(v, u2)) / TWO_PI;
        let gy = Vec2::new(u1 / r1 + r_ * u2 / r2 - s_ * v / r2, v / r1 + r_ * v / r2 + s_ * u2 / r2);
        let gx = Vec2::new(-u1 / r1 + r_ * u2 / r2 - s_ * v / r2, -v / r1 - r_ * v / r2 - s_ * u2 / r2);
        Triple { value, grad_y: gy.scale(1.0 / TWO_PI), grad_x: gx.scale(1.0 / TWO_PI) }
    } else {
        let (t_, u_) = (1.0 / k, h / k);
        let (u, v) = (x - y, t - s);
        let r1 = u * u + v * v;
        let value = (t_ * 0.5 * libm::log(r1) + u_ * libm::atan2(v, u)) / TWO_PI;
        let gy = Vec2::new(-t_ * u / r1 + u_ * v / r1, -t_ * v / r1 - u_ * u / r1);
        let gx = Vec2::new(t_ * u / r1 - u_ * v / r1, t_ * v / r1 + u_ * u / r1);
        Triple { value, grad_y: gy.scale(1.0 / TWO_PI), grad_x: gx.scale(1.0 / TWO_PI) }
    }
}

/// Angle of `v` in `(−3π/2, π/2]`, discontinuous on the upward ray.
pub fn arg_up(v: Vec2) -> f64 {
    let a = libm::atan2(v.y, v.x);
    if a > 0.5 * core::f64::consts::PI {
        a - TWO_PI
    } else {
        a
    }
}

/// Conjugate `Γ̃ᵗ_X(Y)` for `A = kkpt:h`, with `J∇_Y Γ̃ᵗ = A∇_Y Γᵗ`, branch
/// cut on the upward ray from `X`.
pub fn conjugate(h: f64, xp: Vec2, yp: Vec2) -> Result<f64> {
    let v = yp - xp;
    if v.x == 0.0 && v.y >= 0.0 {
        return Err(Error::OnBranchRay);
    }
    if xp.x < 0.0 {
        return Ok(-conjugate(h, reflect(xp), reflect(yp))?);
    }
    let (x, t, y, s) = (xp.x, xp.y, yp.x, yp.y);
    let k = 1.0 + h * h;
    let gt = gamma(-h, xp, yp)?.value;
    if y >= 0.0 {
        let (re, im) = (-h * h / k, -h / k);
        let u2 = y + x;
        let w = s - t;
        let l2 = 0.5 * libm::log(u2 * u2 + w * w);
        Ok((arg_up(v) + im * l2 + re * libm::atan2(w, u2)) / TWO_PI + h * gt + 0.25)
    } else {
        let (re, im) = (1.0 / k, h / k);
        let l1 = 0.5 * libm::log(v.norm2());
        Ok((im * l1 + re * libm::atan2(t - s, x - y)) / TWO_PI - h * gt - 0.25)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;

    fn a(h: f64, y: f64) -> Mat2 {
        let m = if y >= 0.0 { h } else { -h };
        Mat2::new(1.0, m, -m, 1.0)
    }

    #[test]
    fn gradients_match_differences() {
        let h = 1.3;
        let e = 1e-6;
        for (xp, yp) in [
            (Vec2::new(0.4, 0.1), Vec2::new(1.0, 0.7)),
            (Vec2::new(0.4, 0.1), Vec2::new(-0.8, -0.5)),
            (Vec2::new(-0.3, 0.2), Vec2::new(0.9, 1.5)),
            (Vec2::new(-0.3, 0.2), Vec2::new(-1.1, -0.4)),
        ] {
            let g = gamma(h, xp, yp).unwrap();
            let f = |p: Vec2, q: Vec2| gamma(h, p, q).unwrap().value;
            let dy = (f(xp, yp + Vec2::new(e, 0.0)) - f(xp, yp - Vec2::new(e, 0.0))) / (2.0 * e);
            let ds = (f(xp, yp + Vec2::new(0.0, e)) - f(xp, yp - Vec2::new(0.0, e))) / (2.0 * e);
            let dx = (f(xp + Vec2::new(e, 0.0), yp) - f(xp - Vec2::new(e, 0.0), yp)) / (2.0 * e);
            let dt = (f(xp + Vec2::new(0.0, e), yp) - f(xp - Vec2::new(0.0, e), yp)) / (2.0 * e);
            assert!((g.grad_y - Vec2::new(dy, ds)).max_abs() < 1e-8);
            assert!((g.grad_x - Vec2::new(dx, dt)).max_abs() < 1e-8);
        }
    }

    #[test]
    fn transmission_and_continuity_across_interface() {
        let h = 0.7;
        let xp = Vec2::new(0.5, 0.0);
        for s in [-1.0, 0.3, 2.0] {
            let up = gamma(h, xp, Vec2::new(1e-12, s)).unwrap();
            let dn = gamma(h, xp, Vec2::new(-1e-12, s)).unwrap();
            assert!((up.value - dn.value).abs() < 1e-10);
            // Conormal flux of Aᵗ∇Γ is continuous: (Aᵗ∇Γ)₁ = Γ_y − mΓ_s.
            let fu = up.grad_y.x - h * up.grad_y.y;
            let fd = dn.grad_y.x + h * dn.grad_y.y;
            assert!((fu - fd).abs() < 1e-9, "{fu} {fd}");
        }
    }

    #[test]
    fn conjugate_satisfies_the_system() {
        let h = 1.1;
        let e = 1e-6;
        for xp in [Vec2::new(0.4, 0.2), Vec2::new(-0.6, -0.1)] {
            for yp in [Vec2::new(1.3, 0.9), Vec2::new(-0.9, 1.4), Vec2::new(0.2, -1.0), Vec2::new(-1.5, -0.3)] {
                let f = |q: Vec2| conjugate(h, xp, q).unwrap();
                let gy = (f(yp + Vec2::new(e, 0.0)) - f(yp - Vec2::new(e, 0.0))) / (2.0 * e);
                let gs = (f(yp + Vec2::new(0.0, e)) - f(yp - Vec2::new(0.0, e))) / (2.0 * e);
                let gt = gamma(-h, xp, yp).unwrap().grad_y;
                let flux = a(h, yp.x).apply(gt);
                assert!((gs - flux.x).abs() < 1e-7 && (gy + flux.y).abs() < 1e-7, "{xp:?} {yp:?}");
            }
        }
    }

    #[test]
    fn conjugate_is_continuous_off_the_ray() {
        let h = 0.9;
        for xp in [Vec2::new(0.4, 0.2), Vec2::new(-0.6, -0.1)] {
            // Across the interface.
            for s in [-2.0, 0.0, 0.5, 3.0] {
                let l = conjugate(h, xp, Vec2::new(-1e-10, s)).unwrap();
                let r = conjugate(h, xp, Vec2::new(1e-10, s)).unwrap();
                assert!((l - r).abs() < 1e-8, "interface {xp:?} s={s}: {l} {r}");
            }
            // Across the downward ray.
            let l = conjugate(h, xp, Vec2::new(xp.x - 1e-10, xp.y - 1.0)).unwrap();
            let r = conjugate(h, xp, Vec2::new(xp.x + 1e-10, xp.y - 1.0)).unwrap();
            assert!((l - r).abs() < 1e-8, "down ray {xp:?}: {l} {r}");
            // The upward ray carries a unit jump.
            let l = conjugate(h, xp, Vec2::new(xp.x - 1e-10, xp.y + 1.0)).unwrap();
            let r = conjugate(h, xp, Vec2::new(xp.x + 1e-10, xp.y + 1.0)).unwrap();
            assert!(((l - r).abs() - 1.0).abs() < 1e-8, "up ray {xp:?}: {l} {r}");
        }
    }
}
