use super::*;
use crate::coefficients::CoefficientField;

fn line(alpha: f64, cells: usize) -> Profile {
    let h = 1.0 / cells as f64;
    Profile::new(0.0, h, (0..=cells).map(|i| alpha * i as f64 * h).collect()).unwrap()
}

/// Slopes `α₀ ± ε₀` alternating every `run` cells.
fn square_wave(alpha0: f64, eps0: f64, cells: usize, run: usize) -> Profile {
    let h = 1.0 / cells as f64;
    let mut ys = vec![0.0];
    for i in 0..cells {
        let s = if (i / run) % 2 == 0 { alpha0 + eps0 } else { alpha0 - eps0 };
        ys.push(ys[i] + s * h);
    }
    Profile::new(0.0, h, ys).unwrap()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn straight_line_is_kept_whole() {
    let phi = line(0.3, 64);
    let s = rising_sun(&phi, 0.3, 0.1, 1.0).unwrap();
    assert_eq!(s.e_cells.len(), 64);
    assert_eq!(s.psi, phi);
    assert_eq!(s.e, vec![(0.0, 1.0)]);
    assert!(s.certify(&phi).ok());
}

#[test]
fn square_wave_step() {
    let phi = square_wave(0.2, 0.125, 256, 8);
    let s = rising_sun(&phi, 0.2, 0.125, 1.0).unwrap();
    let c = s.certify(&phi);
    assert!(c.ok(), "{c:?}");
    assert!(s.measure_ratio >= s.bound);
    let (lo, hi) = s.branch.window(0.125);
    assert!(s.slope_range.0 >= lo - 1e-12 && s.slope_range.1 <= hi + 1e-12);
    // Descending wave: the lower branch keeps more.
    let down = square_wave(-0.5, 0.1, 256, 3);
    let mut ys = down.ys.clone();
    ys.reverse();
    let rev = Profile::new(0.0, down.h, ys.iter().map(|y| -y).collect()).unwrap();
    assert!(rising_sun(&rev, -0.5, 0.1, 1.0).unwrap().certify(&rev).ok());
}

#[test]
fn measure_bound_value() {
    let b = measure_bound(1.0, 0.125);
    assert!((b - 1.0 / (3.0 * (1.0f64 + 1.265625).sqrt())).abs() < 1e-15);
    // 1/(3·√(145/64)) = 8/(3√145).
    assert!((b - 8.0 / (3.0 * 145f64.sqrt())).abs() < 1e-15);
    assert!((b - 0.2214546).abs() < 1e-7, "{b}");
}

#[test]
fn rejects_profiles_outside_the_class() {
    let phi = square_wave(0.0, 0.3, 32, 2);
    assert!(rising_sun(&phi, 0.0, 0.2, 1.0).is_err());
    assert!(rising_sun(&phi, 0.0, 0.0, 1.0).is_err());
}

#[test]
fn random_battery_certifies() {
    for (phi, a0, e0) in random_battery(100, 1.0, 512, 7) {
        let s = rising_sun(&phi, a0, e0, 1.0).unwrap();
        let c = s.certify(&phi);
        assert!(c.ok(), "{c:?} for α₀ = {a0}, ε₀ = {e0}");
    }
}

#[test]
fn schedule_for_k1() {
    let s = build_schedule(&q(1, 1), &q(1, 100)).unwrap();
    assert_eq!(s.m, 24);
    assert!(s.certify());
    assert!(s.a0() > &q(1, 8));
    assert_eq!(s.a[24], q(1, 4));
    assert_eq!(&s.a[23], &(q(1, 4) - q(1, 80) * num_traits::pow(q(9, 10), 23)));
    // 0.9^24/8 < 1/100 ≤ 0.9^23/8.
    assert!(s.eps[24] < q(1, 100) && s.eps[23] >= q(1, 100));
    // Infinite-sum limit: 1/4 − (1/80)·10 = 1/8.
    assert_eq!(q(1, 4) - q(1, 80) * q(10, 1), q(1, 8));
}

#[test]
fn empty_schedule() {
    let s = build_schedule(&q(1, 1), &q(1, 5)).unwrap();
    assert_eq!(s.m, 0);
    assert_eq!(s.a, vec![q(1, 4)]);
    assert!(s.certify());
    assert!(build_schedule(&q(1, 1), &q(0, 1)).is_err());
}

#[test]
fn rationals_parse_exactly() {
    assert_eq!(parse_rational("0.01").unwrap(), q(1, 100));
    assert_eq!(parse_rational("3/12").unwrap(), q(1, 4));
    assert_eq!(parse_rational("-2.5").unwrap(), q(-5, 2));
    assert_eq!(parse_rational("7").unwrap(), q(7, 1));
    assert!(parse_rational("1/0").is_err() && parse_rational("x").is_err() && parse_rational(".").is_err());
}

#[test]
fn corona_of_line_is_trivial() {
    let sched = build_schedule(&q(1, 1), &q(1, 100)).unwrap();
    let t = corona_decompose(&line(0.1, 64), 0.1, &sched, 8).unwrap();
    assert_eq!(t.nodes.len(), 1);
    assert!(t.certify());
}

#[test]
fn corona_of_sawtooth() {
    let sched = build_schedule(&q(1, 1), &q(1, 100)).unwrap();
    let phi = square_wave(0.0, 0.125, 512, 4);
    let t = corona_decompose(&phi, 0.0, &sched, 64).unwrap();
    assert_eq!(t.depth, 24);
    assert_eq!(t.dyadic.last(), Some(&1));
    assert_eq!(t.nodes.len(), 49);
    assert!(t.certify());
    let theta = 1.0 / (3.0 * 2f64.sqrt());
    assert!(t.min_ratio() >= theta, "{}", t.min_ratio());
    assert!(matches!(corona_decompose(&phi, 0.0, &sched, 10), Err(Error::Budget(_))));
    // Same input, same tree.
    let again = corona_decompose(&phi, 0.0, &sched, 64).unwrap();
    assert!(t.nodes.iter().zip(&again.nodes).all(|(a, b)| a.profile == b.profile && a.vertices == b.vertices));
}

#[test]
fn kernels_agree_on_retained_set() {
    let sched = build_schedule(&q(1, 1), &q(1, 100)).unwrap();
    let phi = square_wave(0.0, 0.125, 128, 4);
    let t = corona_decompose(&phi, 0.0, &sched, 32).unwrap();
    let lk = LayerKernel { green: GreenEvaluator::new(&CoefficientField::identity()).unwrap() };
    for node in [1, 2, 5, t.nodes.len() - 1] {
        let d = kernel_agreement(&lk, &t, node, 12).unwrap();
        assert!(d < 1e-12, "node {node}: {d}");
    }
}

#[test]
fn transfer_probe_cases() {
    let sched = build_schedule(&q(1, 1), &q(1, 100)).unwrap();
    let lk = LayerKernel { green: GreenEvaluator::new(&CoefficientField::identity()).unwrap() };
    let f1 = |x: f64| libm::sin(6.0 * x);
    let f2 = |x: f64| if x < 0.5 { 1.0 } else { 0.0 };
    let battery: [&dyn Fn(f64) -> f64; 2] = [&f1, &f2];
    let flat = corona_decompose(&line(0.0, 64), 0.0, &sched, 8).unwrap();
    let r = transfer_probe(&lk, &flat, &battery, 32).unwrap();
    assert_eq!(r.fitted_c, 1.0);
    let saw = corona_decompose(&square_wave(0.0, 0.125, 128, 4), 0.0, &sched, 32).unwrap();
    let r = transfer_probe(&lk, &saw, &battery, 32).unwrap();
    assert!(r.fitted_c.is_finite() && r.fitted_c > 0.5 && r.fitted_c < 2.0, "{r:?}");
    let z = transfer_probe(&ZeroKernel, &saw, &battery, 32).unwrap();
    assert_eq!((z.root, z.fitted_c), (0.0, 0.0));
}

#[test]
fn transfer_probe_kkpt_sawtooth() {
    let sched = build_schedule(&q(1, 1), &q(1, 100)).unwrap();
    let lk = LayerKernel { green: GreenEvaluator::new(&CoefficientField::kkpt(1.0)).unwrap() };
    let f1 = |x: f64| libm::cos(5.0 * x);
    let battery: [&dyn Fn(f64) -> f64; 1] = [&f1];
    let saw = corona_decompose(&square_wave(0.0, 0.125, 128, 4), 0.0, &sched, 32).unwrap();
    let r = transfer_probe(&lk, &saw, &battery, 16).unwrap();
    assert!(r.fitted_c.is_finite() && r.fitted_c > 0.0 && r.fitted_c < 4.0, "{r:?}");
}
