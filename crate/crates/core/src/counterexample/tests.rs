use super::*;

#[test]
fn operator_triples() {
    let op = make_operator(0.5).unwrap();
    assert!((op.h - 1.0).abs() < 1e-15);
    let op = make_operator(0.4).unwrap();
    assert!((op.b - 0.6).abs() < 1e-15);
    assert!((op.h - 1.3763819204711736).abs() < 1e-12, "{}", op.h);
    assert!(make_operator(0.999_999).unwrap().h < 2e-6);
    assert!(make_operator(0.0).is_err() && make_operator(1.0).is_err() && make_operator(f64::NAN).is_err());
}

#[test]
fn closed_form_values() {
    let op = make_operator(0.4).unwrap();
    assert_eq!(exact_w(&op, 2.0, 0.0), 0.0);
    assert_eq!(exact_w(&op, -3.0, 0.0), 0.0);
    assert!((exact_w(&op, 0.0, 1.0) - libm::sin(0.2 * PI)).abs() < 1e-15);
    assert_eq!(exact_w(&op, 0.0, 0.0), 0.0);
    // Self-similarity and evenness.
    for &(x, t) in &[(0.3, 0.7), (-1.2, 0.05), (2.0, 3.0)] {
        let s = 3.7;
        let l = exact_w(&op, s * x, s * t);
        let r = libm::pow(s, op.a) * exact_w(&op, x, t);
        assert!((l - r).abs() < 1e-14 * r.abs().max(1.0));
        assert_eq!(exact_w(&op, x, t), exact_w(&op, -x, t));
    }
    // ∂_t w = a|x|^{−b} on the boundary and ∂_x w = 0 there.
    for &x in &[0.01, 0.3, -0.2] {
        let g = exact_grad(&op, x, 0.0);
        assert!((g.y - op.a * libm::pow(f64::abs(x), -op.b)).abs() < 1e-12 * g.y);
        assert_eq!(g.x, 0.0);
    }
}

#[test]
fn gradient_matches_differences() {
    let op = make_operator(0.3).unwrap();
    for &(x, t) in &[(0.4, 0.2), (-0.7, 1.1)] {
        let g = exact_grad(&op, x, t);
        let d = 1e-5;
        let gx = (exact_w(&op, x + d, t) - exact_w(&op, x - d, t)) / (2.0 * d);
        let gt = (exact_w(&op, x, t + d) - exact_w(&op, x, t - d)) / (2.0 * d);
        assert!((g.x - gx).abs() < 1e-8 && (g.y - gt).abs() < 1e-8);
    }
}

#[test]
fn transmission_holds_and_fails_for_wrong_h() {
    let ts: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    for a in [0.4, 0.5] {
        let op = make_operator(a).unwrap();
        let r = check_transmission(&op, &ts, 1e-3).unwrap();
        assert!(r.max <= 1e-6, "a = {a}: {}", r.max);
    }
    let op = make_operator(0.5).unwrap();
    let bad = check_transmission(&op.with_h(1.1 * op.h), &[1.0], 1e-3).unwrap();
    assert!(bad.max > 1e-2, "{}", bad.max);
    assert!(check_transmission(&op, &[1.0], 1e-5).is_err());
    assert!(check_transmission(&op, &[1e-3], 1e-3).is_err());
}

#[test]
fn quarter_plane_harmonicity() {
    let op = make_operator(0.4).unwrap();
    let pts = [Vec2::new(0.5, 0.5), Vec2::new(-0.3, 0.2), Vec2::new(1.0, 2.0), Vec2::new(-2.0, 0.4)];
    assert!(laplacian_residual(&op, &pts, 1e-2) < 1e-5);
}

#[test]
fn regularity_rate_for_a_04() {
    let op = make_operator(0.4).unwrap();
    let eps = quad::geomspace(1e-10, 1e-4, 7);
    let r = regularity_failure_rate(&op, 2.0, &eps).unwrap();
    assert!((r.predicted + 0.1).abs() < 1e-12);
    assert!((r.fitted - r.predicted).abs() < 0.05, "{}", r.fitted);
    assert!(r.diverges);
    assert!((r.density_exponent - 1.2).abs() < 1e-9, "{}", r.density_exponent);
    let r = regularity_failure_rate(&make_operator(0.8).unwrap(), 2.0, &eps).unwrap();
    assert!(!r.diverges && r.fitted.abs() < 0.01, "{}", r.fitted);
}

#[test]
fn dichotomy_matches_threshold() {
    let eps = quad::geomspace(1e-10, 1e-4, 7);
    let table = dichotomy_table(2.0, &eps).unwrap();
    assert_eq!(table.len(), 7);
    for row in &table {
        assert_eq!(row.predicted, row.observed, "{row:?}");
    }
    let div: Vec<bool> = table.iter().map(|r| r.observed).collect();
    assert_eq!(div, [true, true, true, false, false, false, false]);
}

#[test]
fn neumann_failure_through_conjugate() {
    let eps = quad::geomspace(1e-10, 1e-4, 7);
    let f = neumann_failure(&make_operator(0.4).unwrap(), 2.0, &eps).unwrap();
    assert!(f.swap_defect < 1e-14, "{}", f.swap_defect);
    // Vanishes up to rounding against a tangential norm of order one.
    assert!(f.conormal_norm < 1e-12 * f.tangential.norms[0], "{}", f.conormal_norm);
    assert!(f.fails());
    assert!((f.tangential.fitted + 0.1).abs() < 0.05);
    let g = neumann_failure(&make_operator(0.9).unwrap(), 2.0, &eps).unwrap();
    assert!(!g.fails());
}

#[test]
fn bump_data_shape() {
    assert_eq!(bump_data(0.5), 0.0);
    assert_eq!(bump_data(-2.5), 0.0);
    assert_eq!(bump_data(1.5), 1.0);
    assert_eq!(bump_data(-1.2), 1.0);
    assert!((0..400).all(|k| {
        let v = bump_data(-2.2 + 0.011 * k as f64);
        (0.0..=1.0).contains(&v)
    }));
}

#[test]
fn bump_probe_slopes() {
    // The local slope reaches −b only for |x| ≲ 0.05; the window fit
    // carries the bend near |x| = 1/2, hence the loose match.
    for a in [0.4, 0.5] {
        let op = make_operator(a).unwrap();
        let r = dirichlet_bump_probe(&op, &bump_probe_mesh(), BUMP_PROBE_EPS).unwrap();
        assert!((r.slope - r.predicted).abs() < 0.1, "a = {a}: {}", r.slope);
        let near: (Vec<f64>, Vec<f64>) = r.xs.iter().zip(&r.dt).filter(|(x, _)| **x < 0.01).map(|(x, v)| (*x, *v)).unzip();
        let local = stats::fit_power(&near.0, &near.1).slope;
        assert!((local - r.predicted).abs() < 0.01, "a = {a}: {local}");
    }
    let r = dirichlet_bump_probe(&KkptOperator::laplace(), &bump_probe_mesh(), BUMP_PROBE_EPS).unwrap();
    assert!(r.slope.abs() < 0.1, "{}", r.slope);
}
