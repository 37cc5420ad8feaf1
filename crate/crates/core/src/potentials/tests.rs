use super::*;
use crate::coefficients::CoefficientField;
use crate::funcestim::BoundaryFunction;

fn laplace_flat() -> Potentials {
    Potentials::new(&LipschitzGraph::flat(), &CoefficientField::identity()).unwrap()
}

fn sinc2(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let s = libm::sin(x) / x;
        s * s
    }
}

#[test]
fn flat_kernel_on_the_axis() {
    let p = laplace_flat();
    let k = p.kernel_k(0.0, 0.3, 1.3).unwrap();
    assert!((k.a - 1.0 / (2.0 * core::f64::consts::PI)).abs() < 1e-14);
    assert!(k.b.abs() < 1e-15 && k.c == k.a && k.d == k.b);
}

#[test]
fn double_layer_of_one_is_half() {
    let p = laplace_flat();
    let one = BoundaryFunction::constant(1.0);
    let v = p.layers_at(&one, 0.4).unwrap();
    assert!((v.k - 0.5).abs() < 1e-12, "{}", v.k);
    assert!(v.l.abs() < 1e-12);
    let lim = p.layer_k(&one, 0.4, &h_sequence(1e-2, 5)).unwrap();
    assert!((lim.value - 0.5).abs() < 1e-6, "{lim:?}");
}

#[test]
fn flat_laplace_layers_match_hilbert() {
    let p = laplace_flat();
    let f = BoundaryFunction::closure(sinc2);
    for x in [-3.0, -0.2, 0.0, 1.0, 2.5] {
        let v = p.layers_at(&f, x).unwrap();
        let hf = if x == 0.0 { 0.0 } else { (2.0 * x - libm::sin(2.0 * x)) / (2.0 * x * x) };
        assert!((v.k - 0.5 * sinc2(x)).abs() < 1e-6, "K at {x}: {}", v.k);
        assert!((v.l + 0.5 * hf).abs() < 1e-5, "L at {x}: {} vs {}", v.l, -0.5 * hf);
    }
}

#[test]
fn h_limit_agrees_with_boundary_value() {
    let p = Potentials::new(&LipschitzGraph::bump(0.2), &CoefficientField::kkpt(1.0)).unwrap();
    let f = BoundaryFunction::closure(|x| libm::exp(-x * x));
    let x = 0.3;
    let direct = p.layers_at(&f, x).unwrap();
    let lk = p.layer_k(&f, x, &h_sequence(1e-2, 6)).unwrap();
    let ll = p.layer_l(&f, x, &h_sequence(1e-2, 6)).unwrap();
    assert!((lk.value - direct.k).abs() < 1e-5, "{lk:?} vs {}", direct.k);
    assert!((ll.value - direct.l).abs() < 1e-5, "{ll:?} vs {}", direct.l);
}

#[test]
fn truncated_hilbert_block() {
    let p = laplace_flat();
    let k = CzKernel::k(&p, 0.0);
    let f = crate::funcestim::MatrixFunction::new(|_| Mat2::IDENTITY).with_support(1.0, 2.0);
    let v = truncated_apply(&k, 0.5, &f, 0.0).unwrap();
    let expect = libm::log(2.0) / (2.0 * core::f64::consts::PI);
    assert!((v.a - expect).abs() < 1e-13 && (v.c - expect).abs() < 1e-13, "{v:?}");
    assert!(truncated_apply(&k, 10.0, &f, 0.0).unwrap().max_abs() == 0.0);
    let m = maximal_apply(&k, &f, 0.0, &crate::quad::geomspace(1e-3, 4.0, 40)).unwrap();
    assert!((m - expect).abs() < 1e-13);
}

#[test]
fn flat_norms_by_nystrom() {
    let p = laplace_flat();
    let n = 400;
    let ml = nystrom_layer(&p, LayerKind::L, -20.0, 20.0, n).unwrap();
    let nl = op_norm_estimate(&ml, n, 2.0, 2, 1);
    assert!((nl - 0.5).abs() < 0.025, "{nl}");
    let mk = nystrom_layer(&p, LayerKind::K, -20.0, 20.0, n).unwrap();
    let nk = op_norm_estimate(&mk, n, 2.0, 2, 1);
    assert!((nk - 0.5).abs() < 1e-9, "{nk}");
    assert_eq!(op_norm_estimate(&alloc::vec![0.0; 16], 4, 2.0, 2, 1), 0.0);
}
