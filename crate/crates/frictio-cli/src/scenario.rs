use serde::{Deserialize, Serialize};

use frictio::contact::LoadPath;

/// What a scenario file asks the tool to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Incremental,
    March,
    FemMarch,
    JumpScenario,
    ContinuumFamily,
    Critical,
}

impl Kind {
    pub fn parse(s: &str) -> Option<Kind> {
        Some(match s {
            "incremental" => Kind::Incremental,
            "march" => Kind::March,
            "fem-march" => Kind::FemMarch,
            "jump-scenario" => Kind::JumpScenario,
            "continuum-family" => Kind::ContinuumFamily,
            "critical" => Kind::Critical,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Incremental => "incremental",
            Kind::March => "march",
            Kind::FemMarch => "fem-march",
            Kind::JumpScenario => "jump-scenario",
            Kind::ContinuumFamily => "continuum-family",
            Kind::Critical => "critical",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct MaterialSpec {
    pub e: f64,
    pub nu: f64,
}

/// Scenario file: one solver run and its parameters. Every field can also
/// be supplied or overridden by a command-line flag.
#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub kind: Option<String>,
    /// Stiffness entries `[k_nn, k_nt, k_tt]`.
    #[serde(default)]
    pub k: Option<[f64; 3]>,
    #[serde(default)]
    pub f: Option<f64>,
    /// Magnitude of the jump-scenario load ramp.
    #[serde(default)]
    pub r: Option<f64>,
    /// Refinement parameter of the variation subdivision.
    #[serde(default)]
    pub m: Option<usize>,
    /// Tangential load of the continuum family.
    #[serde(default)]
    pub f_t: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Force `[F_n, F_t]` of a single incremental solve.
    #[serde(default)]
    pub force: Option<[f64; 2]>,
    #[serde(default)]
    pub w_t: Option<f64>,
    /// Initial state `[u_n, u_t, t_n, t_t]`.
    #[serde(default)]
    pub u0: Option<[f64; 4]>,
    #[serde(default)]
    pub load: Option<LoadPath>,
    #[serde(default)]
    pub load_file: Option<String>,
    #[serde(default)]
    pub mesh_file: Option<String>,
    #[serde(default)]
    pub material: Option<MaterialSpec>,
    /// Constant body force for fem scenarios.
    #[serde(default)]
    pub volume: Option<[f64; 2]>,
    /// Edge-load mode: "virtual-work" (default) or "length-squared".
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Trajectory output path (CSV).
    #[serde(default)]
    pub out: Option<String>,
    /// Report output path (JSON).
    #[serde(default)]
    pub report: Option<String>,
    /// Emit the exact closed-form trajectory instead of marching
    /// (jump-scenario only).
    #[serde(default)]
    pub exact: Option<bool>,
}
