use rellich_core::bvpsolver::{bump_battery, rellich_probe, MeshSpec, RellichProblem};
use rellich_core::coefficients::CoefficientField;
use rellich_core::counterexample::make_operator;
use rellich_core::funcestim::ConeParams;
use rellich_core::geometry::LipschitzGraph;

fn base() -> MeshSpec {
    MeshSpec { x_range: (-8.0, 8.0), height: 8.0, max_step: 0.1, focus: vec![0.0], h_min: 1e-2, s_min: 1e-2, ratio: 1.3, ..MeshSpec::default() }
}

/// Meshes whose corner grading reaches 10⁻², 10⁻³ and 10⁻⁴.
fn corner_ladder() -> Vec<MeshSpec> {
    [1e-2, 1e-3, 1e-4].iter().map(|&h| MeshSpec { h_min: h, s_min: h, ..base() }).collect()
}

fn regularity_constants(a: &CoefficientField, g: &LipschitzGraph, specs: &[MeshSpec]) -> Vec<f64> {
    rellich_probe(a, g, &bump_battery(10), 2.0, RellichProblem::Regularity, specs, (-3.0, 3.0), ConeParams::default())
        .unwrap()
        .constants
        .constants
}

#[test]
fn symmetric_field_has_stable_regularity_constant() {
    for g in [LipschitzGraph::flat(), LipschitzGraph::bump_with_slope(0.25)] {
        let r = rellich_probe(&CoefficientField::sym_field(), &g, &bump_battery(10), 2.0, RellichProblem::Regularity, &[base(), base().refined()], (-3.0, 3.0), ConeParams::default()).unwrap();
        assert!(r.constants.constants.iter().all(|c| c.is_finite() && *c > 0.0));
        assert!(r.constants.drift <= 2.0, "{:?}", r.constants.constants);
        assert!(r.pointwise_constant.is_finite());
    }
}

#[test]
fn kkpt_regularity_constant_grows_with_corner_resolution() {
    let op = make_operator(0.4).unwrap();
    let c = regularity_constants(&op.field(), &LipschitzGraph::flat(), &corner_ladder());
    assert!(c.windows(2).all(|w| w[1] > 1.1 * w[0]), "{c:?}");
}

#[test]
fn corner_ladder_controls_stay_flat() {
    // Same ladder, no corner singularity in L²: symmetric field and bp < 1.
    for a in [CoefficientField::sym_field(), make_operator(0.8).unwrap().field()] {
        let c = regularity_constants(&a, &LipschitzGraph::flat(), &corner_ladder());
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        assert!(hi / lo < 1.05, "{c:?}");
    }
}
