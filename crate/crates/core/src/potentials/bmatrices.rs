//! The matrices `B₁`, `B₂`, `B₃` that make the boundary operators accretive.

use alloc::sync::Arc;

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::geometry::LipschitzGraph;
use crate::greenfn::GreenEvaluator;
use crate::linalg::{Mat2, Vec2};

type MatFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// `B₁ = [w·Aν | w·τ]`, `B₂ = diag(w·ν·Aᵗκ⊥)`, `B₃ = diag(w·τ·κ)` with
/// `w = (1 + φ′²)^{1/2}`, `κ = (1, α₀)` and `κ⊥ = (−α₀, 1)`.
#[derive(Clone)]
pub struct BMatrices {
    pub g: LipschitzGraph,
    pub alpha0: f64,
    a: MatFn,
}

impl core::fmt::Debug for BMatrices {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BMatrices").field("graph", &self.g.name).field("alpha0", &self.alpha0).finish()
    }
}

/// Sup norms of `B_i` and `B_i⁻¹` over a sample grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BReport {
    pub sup: [f64; 3],
    pub inv_sup: [f64; 3],
}

/// `B₁, B₂, B₃` for the graph and the coefficient matrix `A` (the `A` with
/// `div(Aᵗ∇Γ) = δ`).
pub fn build_b(g: &LipschitzGraph, a: &CoefficientField, alpha0: f64) -> BMatrices {
    let a = a.clone();
    BMatrices { g: g.clone(), alpha0, a: Arc::new(move |x| a.eval(x)) }
}

impl BMatrices {
    /// The matrices built from the coefficient matrix as resolved by a Green
    /// evaluator, so that `K·B₁` reproduces its layer densities exactly.
    pub fn resolved(g: &LipschitzGraph, green: &GreenEvaluator, alpha0: f64) -> Self {
        let green = green.clone();
        // `b_matrix` is `Aᵗ` for Γ and `A` for Γᵗ.
        let a: MatFn = if green.transposed {
            Arc::new(move |x| green.b_matrix(x))
        } else {
            Arc::new(move |x| green.b_matrix(x).transpose())
        };
        Self { g: g.clone(), alpha0, a }
    }

    pub fn a(&self, x: f64) -> Mat2 {
        (self.a)(x)
    }

    pub fn b1(&self, x: f64) -> Mat2 {
        let p = self.g.dphi(x);
        let wnu = Vec2::new(p, -1.0);
        Mat2::from_cols(self.a(x).apply(wnu), Vec2::new(1.0, p))
    }

    pub fn b2(&self, x: f64) -> Mat2 {
        let p = self.g.dphi(x);
        let v = Vec2::new(p, -1.0).dot(self.a(x).transpose().apply(Vec2::new(-self.alpha0, 1.0)));
        Mat2::diag(v, v)
    }

    pub fn b3(&self, x: f64) -> Mat2 {
        let v = 1.0 + self.g.dphi(x) * self.alpha0;
        Mat2::diag(v, v)
    }

    /// Sup norms of the matrices and their inverses over `xs`; a singular
    /// matrix is reported with its abscissa.
    pub fn certify(&self, xs: &[f64]) -> Result<BReport> {
        let mut r = BReport { sup: [0.0; 3], inv_sup: [0.0; 3] };
        for &x in xs {
            for (i, m) in [self.b1(x), self.b2(x), self.b3(x)].into_iter().enumerate() {
                let inv = m
                    .inverse()
                    .filter(|v| v.max_abs().is_finite() && v.max_abs() < 1e12)
                    .ok_or(Error::NotInvertible { which: i + 1, x })?;
                r.sup[i] = r.sup[i].max(m.max_abs());
                r.inv_sup[i] = r.inv_sup[i].max(inv.max_abs());
            }
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_identity_matrices() {
        let b = build_b(&LipschitzGraph::flat(), &CoefficientField::identity(), 0.0);
        assert_eq!(b.b1(0.3), Mat2::new(0.0, 1.0, -1.0, 0.0));
        assert_eq!(b.b2(-2.0), Mat2::diag(-1.0, -1.0));
        assert_eq!(b.b3(5.0), Mat2::IDENTITY);
        let rep = b.certify(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(rep.inv_sup, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn degenerate_b2_is_reported() {
        // With α₀ chosen so that κ⊥ is parallel to the graph the second
        // matrix vanishes on a ramp of slope 1 and A = I.
        let g = LipschitzGraph::ramp(1.0);
        let b = build_b(&g, &CoefficientField::identity(), -1.0);
        assert!(matches!(b.certify(&[0.5]), Err(Error::NotInvertible { which: 2, .. })));
    }
}
