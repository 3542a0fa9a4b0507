use serde::{Deserialize, Serialize};

use crate::controllers::ControllerSpec;
use crate::dynamics::{DisturbanceSpec, MatrixInverseObserver, ObservationSpec, DEFAULT_DIVERGENCE_CAP};
use crate::function_space::PlantFunction;
use crate::graph::{GraphSpec, WeightedDigraph};
use crate::{Error, Result};

/// Guard used by adversarial runs when no cap is configured.
pub const ADVERSARY_DIVERGENCE_CAP: f64 = 1e250;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    /// Slope bound `B`; defaults to `4/‖A‖♯`.
    #[serde(default)]
    pub slope: Option<f64>,
}

/// One closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    /// Ignored when `adversary` is set.
    #[serde(default = "default_function")]
    pub function: PlantFunction,
    pub x0: Vec<f64>,
    pub horizon: usize,
    pub controller: ControllerSpec,
    pub disturbance: DisturbanceSpec,
    #[serde(default = "ObservationSpec::exact")]
    pub observation: ObservationSpec,
    /// Master seed; when set it replaces the disturbance and observation seeds.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub divergence_cap: Option<f64>,
    /// Tail level below which a run without an analytic bound counts as stabilised.
    #[serde(default)]
    pub stable_cap: Option<f64>,
    #[serde(default)]
    pub adversary: Option<AdversaryConfig>,
}

fn default_function() -> PlantFunction {
    PlantFunction::Linear { a: 1.0, b: 0.0 }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn cap(&self) -> f64 {
        match (self.divergence_cap, &self.adversary) {
            (Some(c), _) => c,
            (None, Some(_)) => ADVERSARY_DIVERGENCE_CAP,
            (None, None) => DEFAULT_DIVERGENCE_CAP,
        }
    }

    /// Disturbance and observation specs after applying the master seed.
    pub fn resolved(&self) -> (DisturbanceSpec, ObservationSpec) {
        let mut d = self.disturbance.clone();
        let mut o = self.observation.clone();
        if let Some(s) = self.seed {
            d.seed = s;
            if let ObservationSpec::Direct { seed, .. } = &mut o {
                *seed = s ^ 0x9e37_79b9_7f4a_7c15;
            }
        }
        (d, o)
    }

    /// Field and cross-field checks. Returns the built graph.
    pub fn validate(&self) -> Result<WeightedDigraph> {
        let g = self.graph.build().map_err(|e| invalid("graph", e))?;
        let n = g.n();
        if self.adversary.is_none() {
            self.function.validate().map_err(|e| invalid("function", e))?;
        }
        if self.x0.len() != n {
            return Err(invalid("x0", format!("has {} entries, graph has {n} nodes", self.x0.len())));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x0", "entries must be finite"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        self.disturbance.validate(n).map_err(|e| invalid("disturbance", e))?;
        match self.observation {
            ObservationSpec::Direct { d0, .. } => {
                if !(d0 >= 0.0 && d0.is_finite()) {
                    return Err(invalid("observation", "d0 must be non-negative and finite"));
                }
            }
            ObservationSpec::MatrixInverse { condition_limit } => {
                MatrixInverseObserver::new(&g, condition_limit).map_err(|e| invalid("observation", e))?;
            }
        }
        let cap = self.cap();
        if !(cap > 0.0) {
            return Err(invalid("divergence_cap", "must be positive"));
        }
        if let Some(c) = self.stable_cap {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid("stable_cap", "must be non-negative and finite"));
            }
        }
        match self.controller {
            ControllerSpec::CycleGlobal if !g.is_unit_cycle() => {
                return Err(invalid("controller", "cycle_global needs the unit-weight directed cycle"));
            }
            ControllerSpec::PathRoot if !g.has_unit_root_selfloop() => {
                return Err(invalid("controller", "path_root needs node 1 to have only a unit self-loop as in-neighbour"));
            }
            ControllerSpec::MaxEnhanced if !g.is_strongly_connected() => {
                return Err(invalid("controller", "max_enhanced needs a strongly connected graph"));
            }
            ControllerSpec::NetworkFlow { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                return Err(invalid("controller", "epsilon must be positive and finite"));
            }
            _ => {}
        }
        if let Some(a) = &self.adversary {
            if !(g.sharp_metric() > 0.0) {
                return Err(invalid("adversary", "graph has no arcs"));
            }
            if !g.is_strongly_connected() {
                return Err(invalid("adversary", "graph must be strongly connected"));
            }
            if !g.sign_pattern().is_uniform() {
                return Err(invalid("adversary", "edge weights must share one sign"));
            }
            if let Some(b) = a.slope {
                let min = 4.0 / g.sharp_metric();
                if !(b.is_finite() && b >= min) {
                    return Err(invalid("adversary", format!("slope {b} is below 4/sharp = {min}")));
                }
            }
        }
        Ok(g)
    }
}
