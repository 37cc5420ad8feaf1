//! Small regression helpers used for exponent and constant fits.

/// Result of an ordinary least-squares line fit `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Least-squares line through the points `(x_i, y_i)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (a, b) in x.iter().zip(y) {
        let r = b - (slope * a + intercept);
        ss += r * r;
    }
    LineFit { slope, intercept, rms: libm::sqrt(ss / n) }
}

/// Fit `y ≈ C x^p` by a line in log–log coordinates; returns the line fit
/// in `(ln x, ln y)`.
pub fn fit_power(x: &[f64], y: &[f64]) -> LineFit {
    let lx: alloc::vec::Vec<f64> = x.iter().map(|v| libm::log(*v)).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|v| libm::log(*v)).collect();
    fit_line(&lx, &ly)
}

/// Ratio `max(a, b) / min(a, b)` used for refinement-drift checks; infinite
/// when exactly one side vanishes and 1 when both do.
pub fn drift(a: f64, b: f64) -> f64 {
    let (a, b) = (a.abs(), b.abs());
    if a == 0.0 && b == 0.0 {
        1.0
    } else if a == 0.0 || b == 0.0 {
        f64::INFINITY
    } else {
        a.max(b) / a.min(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_fit_recovers_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: alloc::vec::Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-10.0 / 7.0)).collect();
        let f = fit_power(&x, &y);
        assert!((f.slope + 10.0 / 7.0).abs() < 1e-12);
    }
}
