//! Calderón–Zygmund kernels: truncated and maximal operators, the domain
//! potential `𝒯` and empirical fits of the kernel constants.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Potentials;
use crate::error::{invalid, Result};
use crate::funcestim::MatrixFunction;
use crate::linalg::{Mat2, Vec2};
use crate::quad;
use crate::stats;

type KernelFn = Arc<dyn Fn(f64, f64) -> Result<Mat2> + Send + Sync>;

/// A matrix kernel `K(x, y)` defined off the diagonal.
#[derive(Clone)]
pub struct CzKernel {
    pub name: String,
    k: KernelFn,
}

impl core::fmt::Debug for CzKernel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CzKernel").field("name", &self.name).finish()
    }
}

impl CzKernel {
    pub fn new(name: &str, k: impl Fn(f64, f64) -> Result<Mat2> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), k: Arc::new(k) }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<Mat2> {
        (self.k)(x, y)
    }

    /// `K_h` of a potential family (`h = 0` is the boundary kernel `K`).
    pub fn k(p: &Potentials, h: f64) -> Self {
        let p = p.clone();
        Self::new(&alloc::format!("K_{h}[{}; {}]", p.green.field.name, p.g.name), move |x, y| p.kernel_k(h, x, y))
    }

    /// `K̃_h` of a potential family.
    pub fn ktilde(p: &Potentials, h: f64) -> Self {
        let p = p.clone();
        Self::new(&alloc::format!("K~_{h}[{}; {}]", p.green.field.name, p.g.name), move |x, y| {
            p.kernel_ktilde(h, x, y)
        })
    }
}

fn check_matrix_support(f: &MatrixFunction) -> Result<(f64, f64)> {
    f.support.ok_or_else(|| invalid!("matrix density needs compact support"))
}

/// `T^{(δ)}F(x) = ∫_{|y−x| ≥ δ} K(x, y)F(y) dy` for compactly supported `F`.
pub fn truncated_apply(k: &CzKernel, delta: f64, f: &MatrixFunction, x: f64) -> Result<Mat2> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid!("truncation radius must be positive, got {delta}"));
    }
    let (lo, hi) = check_matrix_support(f)?;
    let gl = quad::GaussLegendre::new(16);
    let mut total = Mat2::ZERO;
    let mut cuts = f.breaks.clone();
    cuts.extend([lo, hi]);
    for side in [-1.0f64, 1.0] {
        // Distances from x covered on this side, graded outward from δ.
        let (d0, d1) = if side > 0.0 { (delta.max(lo - x), hi - x) } else { (delta.max(x - hi), x - lo) };
        if !(d1 > d0) {
            continue;
        }
        let mut ds = alloc::vec![d0];
        let mut d = d0;
        while d < d1 {
            d = (2.0 * d).min(d1).min(d + 1.0);
            ds.push(d);
        }
        let mut br: Vec<f64> = ds.iter().map(|d| x + side * d).collect();
        br.sort_by(f64::total_cmp);
        quad::insert_cuts(&mut br, &cuts);
        let mut err = Ok(());
        for w in br.windows(2) {
            let (m, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (u, wt) in gl.nodes.iter().zip(&gl.weights) {
                let y = m + r * u;
                match k.eval(x, y) {
                    Ok(kv) => total = total + (kv * f.eval(y)).scale(wt * r),
                    Err(e) => err = Err(e),
                }
            }
        }
        err?;
    }
    Ok(total)
}

/// `max_δ |T^{(δ)}F(x)|` over `deltas` (entrywise maximum norm).
pub fn maximal_apply(k: &CzKernel, f: &MatrixFunction, x: f64, deltas: &[f64]) -> Result<f64> {
    let mut best = 0.0f64;
    for &d in deltas {
        best = best.max(truncated_apply(k, d, f, x)?.max_abs());
    }
    Ok(best)
}

/// `𝒯(F)(Z) = ∫ K_r(z, y)F(y) dy` for `Z = (z, r)` inside `Ω`, with the
/// kernel's pole at `Z` itself.
pub fn domain_potential(p: &Potentials, f: &MatrixFunction, z: Vec2) -> Result<Mat2> {
    let h = p.g.height(z);
    if !(h > 0.0) {
        return Err(invalid!("({}, {}) is not inside the domain", z.x, z.y));
    }
    let (lo, hi) = check_matrix_support(f)?;
    let q = p.quad;
    let mut br = quad::graded_breaks(z.x, h / 8.0, (hi - lo).max(4.0 * h) + (z.x - lo).abs().max((hi - z.x).abs()), q.ratio);
    br.retain(|v| *v > lo && *v < hi);
    br.push(lo);
    br.push(hi);
    br.sort_by(f64::total_cmp);
    let mut br = super::split_long(&br, q.max_panel);
    let mut cuts = f.breaks.clone();
    cuts.extend(p.geometry_cuts());
    quad::insert_cuts(&mut br, &cuts);
    let gl = p.gl();
    let mut total = Mat2::ZERO;
    let mut err = Ok(());
    for w in br.windows(2) {
        let (m, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (u, wt) in gl.nodes.iter().zip(&gl.weights) {
            let y = m + r * u;
            match p.green.grad(z, p.g.point(y), true) {
                Ok(gr) => total = total + (Mat2::new(gr.x, gr.y, gr.x, gr.y) * f.eval(y)).scale(wt * r),
                Err(e) => err = Err(e),
            }
        }
    }
    err?;
    Ok(total)
}

/// Fitted constants of the three Calderón–Zygmund estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct CzFit {
    /// `sup |K(x,y)|·|x − y|`.
    pub c1: f64,
    /// Hölder exponent and constant in the first variable.
    pub alpha_x: f64,
    pub c2: f64,
    /// Hölder exponent and constant in the second variable.
    pub alpha_y: f64,
    pub c3: f64,
    pub samples: usize,
}

impl CzFit {
    pub fn alpha(&self) -> f64 {
        self.alpha_x.min(self.alpha_y)
    }

    pub fn constant(&self) -> f64 {
        self.c1.max(self.c2).max(self.c3)
    }
}

/// One Hölder sample: `ρ = |x − x′|/(|x − y| + |x′ − y|)` and
/// `q = |ΔK|·(|x − y| + |x′ − y|)`, so that the estimate reads `q ≤ Cρ^α`.
#[derive(Clone, Copy, Debug)]
struct HolderSample {
    rho: f64,
    q: f64,
}

/// Upper-envelope exponent: the slope of the dyadic-bin maxima of `log q`
/// against `log ρ`, clamped into `(0, 1]`.
fn envelope_alpha(s: &[HolderSample]) -> f64 {
    let mut bins: Vec<(i32, f64, f64)> = Vec::new();
    for v in s.iter().filter(|v| v.q > 0.0) {
        let b = libm::floor(libm::log2(v.rho)) as i32;
        match bins.iter_mut().find(|e| e.0 == b) {
            Some(e) => {
                if v.q > e.2 {
                    e.1 = v.rho;
                    e.2 = v.q;
                }
            }
            None => bins.push((b, v.rho, v.q)),
        }
    }
    if bins.len() < 2 {
        return 1.0;
    }
    let xs: Vec<f64> = bins.iter().map(|e| e.1).collect();
    let ys: Vec<f64> = bins.iter().map(|e| e.2).collect();
    stats::fit_power(&xs, &ys).slope.clamp(1e-3, 1.0)
}

fn holder_constant(s: &[HolderSample], alpha: f64) -> f64 {
    s.iter().map(|v| v.q / libm::pow(v.rho, alpha)).fold(0.0, f64::max)
}

/// Random pairs and triples for the kernel estimates: `x ∈ [−4, 4]`,
/// `|x − y| = 2^u` with `u ∈ [−8, 4]` and perturbations
/// `|x − x′| = ½|x − y|·2^{−v}`, `v ∈ [0, 10]`.
pub fn cz_samples(count: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = rng.random_range(-4.0..4.0);
            let sgn = |r: &mut ChaCha8Rng| if r.random_bool(0.5) { 1.0 } else { -1.0 };
            let d = libm::exp2(rng.random_range(-8.0..4.0));
            let y = x + sgn(&mut rng) * d;
            let e = 0.5 * d * libm::exp2(-rng.random_range(0.0..10.0));
            let xp = x + sgn(&mut rng) * e;
            let yp = y + sgn(&mut rng) * e;
            [x, y, xp, yp]
        })
        .collect()
}

/// Fit `C` and `α` in the size and smoothness estimates of a kernel on the
/// given samples (see [`cz_samples`]). When `alpha` is given the Hölder
/// exponents `(α_x, α_y)` are fixed to it rather than fitted.
pub fn fit_cz(k: &CzKernel, samples: &[[f64; 4]], alpha: Option<(f64, f64)>) -> Result<CzFit> {
    let mut c1 = 0.0f64;
    let (mut sx, mut sy) = (Vec::with_capacity(samples.len()), Vec::with_capacity(samples.len()));
    for &[x, y, xp, yp] in samples {
        let kxy = k.eval(x, y)?;
        c1 = c1.max(kxy.max_abs() * (x - y).abs());
        let span = (x - y).abs() + (xp - y).abs();
        sx.push(HolderSample { rho: (x - xp).abs() / span, q: (kxy - k.eval(xp, y)?).max_abs() * span });
        let span = (x - y).abs() + (x - yp).abs();
        sy.push(HolderSample { rho: (y - yp).abs() / span, q: (kxy - k.eval(x, yp)?).max_abs() * span });
    }
    let (alpha_x, alpha_y) = alpha.unwrap_or_else(|| (envelope_alpha(&sx), envelope_alpha(&sy)));
    Ok(CzFit {
        c1,
        alpha_x,
        c2: holder_constant(&sx, alpha_x),
        alpha_y,
        c3: holder_constant(&sy, alpha_y),
        samples: samples.len(),
    })
}
