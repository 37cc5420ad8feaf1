use rellich_core::bvpsolver::{GridSolution, MeshSpec};
use rellich_core::coefficients::CoefficientField;
use rellich_core::funcestim::{nt_max, tent_duality, CellField, CellQuantity, nt_max_avg, square_function, AdaptedDistance, ConeParams, ConeTable};
use rellich_core::geometry::{GradedMesh, LipschitzGraph};
use rellich_core::linalg::Vec2;

fn field(f: impl Fn(Vec2) -> f64 + 'static) -> GridSolution {
    let g = LipschitzGraph::flat();
    let a = CoefficientField::identity();
    let spec = MeshSpec { x_range: (-6.0, 6.0), height: 4.0, max_step: 0.05, s_min: 0.01, ..MeshSpec::default() };
    GridSolution::from_fn(spec.build(&g, &a).unwrap(), &g, &a, f)
}

#[test]
fn maximal_function_of_constant_is_constant() {
    let u = field(|_| 1.0);
    let p = ConeParams::default();
    assert_eq!(nt_max(&u, 0.0, p).unwrap(), 1.0);
    let t = ConeTable::new(&u, p).unwrap();
    for v in t.nt_cells(CellQuantity::Value, &[-1.0, 0.0, 2.0]) {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gradient_functionals_of_linear_field() {
    // |∇u| = 1, and Γ(Q) ∩ {δ ≤ 2} is |x − q| ≤ √3 t, 0 < t ≤ 2, of area 4√3.
    let u = field(|p| p.x);
    let p = ConeParams::default();
    let n = nt_max_avg(&u, 0.5, p).unwrap();
    assert!((n - 1.0).abs() < 1e-10, "{n}");
    let s = square_function(&u, 0.5, p).unwrap();
    let exact = (4.0 * 3f64.sqrt()).sqrt();
    assert!((s / exact - 1.0).abs() < 0.03, "{s} vs {exact}");
}

#[test]
fn functionals_are_homogeneous() {
    let p = ConeParams::default();
    let u = field(|p| (p.x * 0.7).sin() * (-p.y).exp());
    let v = field(|p| -3.0 * (p.x * 0.7).sin() * (-p.y).exp());
    let (tu, tv) = (ConeTable::new(&u, p).unwrap(), ConeTable::new(&v, p).unwrap());
    let qs = [-2.0, 0.0, 1.5];
    for (a, b) in tu.nt_avg(CellQuantity::Gradient, &qs).iter().zip(tv.nt_avg(CellQuantity::Gradient, &qs)) {
        assert!((3.0 * a - b).abs() < 1e-12 * b.max(1.0));
    }
    for (a, b) in tu.square(&qs).iter().zip(tv.square(&qs)) {
        assert!((3.0 * a - b).abs() < 1e-12 * b.max(1.0));
    }
}

#[test]
fn maximal_function_of_decaying_field_approaches_boundary_value() {
    let u = field(|p| (-p.y).exp());
    let n = nt_max(&u, 0.0, ConeParams::default()).unwrap();
    assert!(n <= 1.0 && n > 0.98, "{n}");
}

#[test]
fn adapted_distance_flat_and_vee() {
    let flat = AdaptedDistance::new(&LipschitzGraph::flat());
    for &(x, t) in &[(0.0, -1.0), (3.0, -0.01), (-2.0, -5.0)] {
        let d = flat.eval(Vec2::new(x, t)).unwrap();
        assert!((d + t).abs() < 1e-12, "{d}");
    }
    assert!(flat.eval(Vec2::new(0.0, 0.5)).is_err());
    let g = LipschitzGraph::vee(1.0);
    let ad = AdaptedDistance::new(&g);
    for &(x, t) in &[(0.0, -0.5), (1.0, -0.2), (-0.3, -2.0), (0.05, -0.05)] {
        let p = Vec2::new(x, t);
        let d0 = ad.eval(p).unwrap();
        let dist = g.boundary_distance(p).unwrap();
        assert!(d0 >= 0.5 * dist && d0 <= 4.0 * dist, "{p:?}: {d0} vs {dist}");
        let (grad, _) = ad.derivatives(p).unwrap();
        assert!(grad.norm() > 0.1 && grad.norm() < 10.0);
    }
}

#[test]
fn tent_duality_is_bounded() {
    let g = LipschitzGraph::flat();
    let xs: Vec<f64> = (0..=160).map(|i| -4.0 + 0.05 * i as f64).collect();
    let ss: Vec<f64> = (0..=60).map(|j| -3.0 + 0.05 * j as f64).collect();
    let mesh = GradedMesh::new(&g, xs, ss).unwrap();
    let f = CellField::from_mesh(&g, &mesh, |p| (-p.x * p.x - p.y * p.y).exp()).unwrap();
    let h = f.with_values(|p| p.y.abs() * (-(p.x - 0.5).powi(2)).exp());
    let qs: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
    let radii = [0.25, 0.5, 1.0, 2.0];
    let (lhs, rhs) = tent_duality(&g, &f, &h, &qs, &radii, ConeParams::default());
    assert!(lhs > 0.0 && rhs > 0.0);
    assert!(lhs <= 10.0 * rhs, "{lhs} vs {rhs}");
}
