//! Run configuration: presets, mesh and functional parameters, tolerances
//! and the seed for randomized batteries.

use std::path::{Path, PathBuf};

use rellich_core::bvpsolver::MeshSpec;
use rellich_core::coefficients::CoefficientField;
use rellich_core::geometry::LipschitzGraph;
use rellich_core::sunrise::parse_rational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

/// Boundary data presets for the solver subcommands.
pub const DATA_PRESETS: &[&str] = &["poisson1", "bump", "kkpt-bump"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub height: f64,
    pub max_step: f64,
    /// Abscissae toward which the mesh is graded.
    pub focus: Vec<f64>,
    pub h_min: f64,
    pub s_min: f64,
    pub ratio: f64,
    /// Number of mesh levels in refinement comparisons (at least 1).
    pub levels: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { x_min: -8.0, x_max: 8.0, height: 8.0, max_step: 0.1, focus: vec![0.0], h_min: 1e-2, s_min: 1e-2, ratio: 1.3, levels: 2 }
    }
}

impl MeshConfig {
    pub fn spec(&self) -> MeshSpec {
        MeshSpec {
            x_range: (self.x_min, self.x_max),
            height: self.height,
            max_step: self.max_step,
            focus: self.focus.clone(),
            h_min: self.h_min,
            s_min: self.s_min,
            ratio: self.ratio,
            ..MeshSpec::default()
        }
    }

    /// The base spec followed by `levels − 1` refinements.
    pub fn ladder(&self) -> Vec<MeshSpec> {
        let mut out = vec![self.spec()];
        while out.len() < self.levels {
            let next = out.last().unwrap().refined();
            out.push(next);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SunriseConfig {
    /// Lipschitz constant as an exact rational (`"1"`, `"3/2"`, `"0.75"`).
    pub k: String,
    pub eps_target: String,
    pub cells: usize,
    /// Size of the random profile battery.
    pub count: usize,
    /// Node budget of the corona tree.
    pub budget: usize,
}

impl Default for SunriseConfig {
    fn default() -> Self {
        Self { k: "1".into(), eps_target: "1/100".into(), cells: 512, count: 100, budget: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub weak: f64,
    pub symmetry: f64,
    pub drift: f64,
    pub bmo: f64,
    pub transmission: f64,
    pub exponent: f64,
    pub dirichlet_l2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { weak: 1e-3, symmetry: 1e-3, drift: 2.0, bmo: 1e-6, transmission: 1e-6, exponent: 0.05, dirichlet_l2: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Domain profile preset (`flat`, `vee:k`, `ramp:α`, `bump:h`, `bumpk:k`).
    pub graph: String,
    /// Coefficient preset (`identity`, `symfield`, `bumpfield`, `kkpt:h`,
    /// `rot:θ`, `const:a,b,c,d`).
    pub field: String,
    /// Boundary data preset, one of [`DATA_PRESETS`].
    pub data: String,
    pub mesh: MeshConfig,
    /// Exponents for the boundary functionals.
    pub p: Vec<f64>,
    /// Counterexample exponent `a ∈ (0, 1)`.
    pub a: f64,
    /// Smallest `ε` of the counterexample sweep.
    pub eps_min: f64,
    /// Cone aperture and truncation height.
    pub aperture: f64,
    pub cap: f64,
    /// Sample counts of the potential-theory probes.
    pub cz_samples: usize,
    pub battery: usize,
    pub sunrise: SunriseConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            graph: "flat".into(),
            field: "identity".into(),
            data: "poisson1".into(),
            mesh: MeshConfig::default(),
            p: vec![2.0],
            a: 0.4,
            eps_min: 1e-10,
            aperture: 1.0,
            cap: 2.0,
            cz_samples: 2000,
            battery: 10,
            sunrise: SunriseConfig::default(),
            tolerances: Tolerances::default(),
            seed: 1,
            out: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl Config {
    /// Read a JSON config file. Absent keys take their defaults.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// Check presets, ranges and tolerances.
    pub fn validate(&self) -> Result<(), LabError> {
        LipschitzGraph::from_name(&self.graph).map_err(|e| bad(format!("graph: {e}")))?;
        CoefficientField::from_name(&self.field).map_err(|e| bad(format!("field: {e}")))?;
        if !DATA_PRESETS.contains(&self.data.as_str()) {
            return Err(bad(format!("data: unknown preset `{}` (known: {})", self.data, DATA_PRESETS.join(", "))));
        }
        let m = &self.mesh;
        let positive = [m.height, m.max_step, m.h_min, m.s_min];
        if !(m.x_max > m.x_min) || positive.iter().any(|v| !(*v > 0.0)) || !(m.ratio > 1.0) || m.levels == 0 {
            return Err(bad("mesh: need x_max > x_min, positive steps, ratio > 1 and levels ≥ 1"));
        }
        if self.p.is_empty() || self.p.iter().any(|p| !(*p > 1.0) || !p.is_finite()) {
            return Err(bad("p: need a non-empty list of exponents > 1"));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(bad(format!("a = {} must lie in (0, 1)", self.a)));
        }
        if !(self.eps_min > 0.0 && self.eps_min < 1e-4) {
            return Err(bad(format!("eps_min = {} must lie in (0, 1e-4)", self.eps_min)));
        }
        if !(self.aperture > 0.0 && self.cap > 0.0) {
            return Err(bad("aperture and cap must be positive"));
        }
        if self.cz_samples == 0 || self.battery == 0 {
            return Err(bad("cz_samples and battery must be positive"));
        }
        let s = &self.sunrise;
        parse_rational(&s.k).map_err(|e| bad(format!("sunrise.k: {e}")))?;
        parse_rational(&s.eps_target).map_err(|e| bad(format!("sunrise.eps_target: {e}")))?;
        if s.cells < 2 || s.count == 0 || s.budget == 0 {
            return Err(bad("sunrise: need cells ≥ 2, count ≥ 1 and budget ≥ 1"));
        }
        let t = &self.tolerances;
        let tols = [t.weak, t.symmetry, t.drift, t.bmo, t.transmission, t.exponent, t.dirichlet_l2];
        if tols.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(bad("tolerances must be positive and finite"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, embedded in every report. The
    /// output directory does not enter, so a rerun elsewhere reproduces
    /// every report byte for byte.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&Config { out: None, ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn graph(&self) -> LipschitzGraph {
        LipschitzGraph::from_name(&self.graph).expect("validated preset")
    }

    pub fn coefficients(&self) -> CoefficientField {
        CoefficientField::from_name(&self.field).expect("validated preset")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_is_stable() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.hash(), Config::default().hash());
        assert_eq!(c.hash().len(), 64);
        let d = Config { seed: 2, ..Config::default() };
        assert_ne!(c.hash(), d.hash());
        let e = Config { out: Some("elsewhere".into()), ..Config::default() };
        assert_eq!(c.hash(), e.hash());
    }

    #[test]
    fn unknown_presets_and_bad_ranges_are_config_errors() {
        for c in [
            Config { graph: "spiral".into(), ..Config::default() },
            Config { field: "kkpt".into(), ..Config::default() },
            Config { data: "nope".into(), ..Config::default() },
            Config { a: 1.0, ..Config::default() },
            Config { p: vec![1.0], ..Config::default() },
        ] {
            assert!(matches!(c.validate(), Err(LabError::Config(_))), "{c:?}");
        }
        let mut c = Config::default();
        c.tolerances.weak = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults_and_rejects_unknown_keys() {
        let c: Config = serde_json::from_str(r#"{"graph": "vee:0.5", "mesh": {"levels": 3}}"#).unwrap();
        assert_eq!(c.graph, "vee:0.5");
        assert_eq!(c.mesh.levels, 3);
        assert_eq!(c.mesh.max_step, MeshConfig::default().max_step);
        assert_eq!(c.mesh.ladder().len(), 3);
        assert!(serde_json::from_str::<Config>(r#"{"grpah": "flat"}"#).is_err());
    }
}
