//! Feedback laws. Each controller only sees the flow view its class allows:
//! network-flow laws read the whole [`FlowLog`], local laws receive a
//! [`LocalFlowView`](crate::flow::LocalFlowView) per node, and the enhanced
//! law additionally gets the consensus extremes.

mod global;
mod local;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{ExtremeHistory, FlowError, FlowLog};
use crate::graph::WeightedDigraph;

pub use global::{nn_estimate_global, CycleController, NetworkFlowController, PathRootController};
pub use local::{nn_estimate_enhanced, nn_estimate_local, EnhancedNodeLaw, LocalFlowController, LocalNodeLaw, MaxEnhancedController};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("controller {controller} needs {requirement}")]
    WrongGraph { controller: &'static str, requirement: &'static str },
    #[error("epsilon must be positive and finite")]
    BadEpsilon,
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    Zero,
    #[serde(alias = "network_flow_local_decision")]
    NetworkFlow {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    PathRoot,
    CycleGlobal,
    LocalFlow,
    MaxEnhanced,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::Zero => "zero",
            ControllerSpec::NetworkFlow { .. } => "network_flow",
            ControllerSpec::PathRoot => "path_root",
            ControllerSpec::CycleGlobal => "cycle_global",
            ControllerSpec::LocalFlow => "local_flow",
            ControllerSpec::MaxEnhanced => "max_enhanced",
        }
    }

    pub fn needs_extremes(&self) -> bool {
        matches!(self, ControllerSpec::MaxEnhanced)
    }

    pub fn build(&self, graph: &WeightedDigraph) -> Result<Box<dyn Controller + Send>, ControllerError> {
        Ok(match *self {
            ControllerSpec::Zero => Box::new(ZeroController),
            ControllerSpec::NetworkFlow { epsilon } => Box::new(NetworkFlowController::new(epsilon)?),
            ControllerSpec::PathRoot => Box::new(PathRootController::new(graph)?),
            ControllerSpec::CycleGlobal => Box::new(CycleController::new(graph)?),
            ControllerSpec::LocalFlow => Box::new(LocalFlowController::new(graph)),
            ControllerSpec::MaxEnhanced => Box::new(MaxEnhancedController::new(graph)?),
        })
    }
}

/// What a controller may be handed at time `t = log.t()`.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub graph: &'a WeightedDigraph,
    pub log: &'a FlowLog,
    pub extremes: Option<&'a ExtremeHistory>,
}

/// A feedback law producing `U(t)` from the history up to `t`.
/// Implementations keep incremental state, so they must be fed every
/// time step in order.
pub trait Controller {
    fn name(&self) -> &'static str;
    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError>;
}

/// `u ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError> {
        Ok(vec![0.0; ctx.log.n()])
    }
}

/// Nearest stored state picked for an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub node: usize,
    pub time: usize,
    pub value: f64,
    pub distance: f64,
    pub estimate: f64,
}

/// Running extremes `ȳ(t)`, `y̲(t)` over all nodes and steps, and the
/// per-node `x̄_i(t)`, `x̲_i(t)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtremeLedger {
    seen: usize,
    global: Option<(f64, f64)>,
    per_node: Vec<(f64, f64)>,
}

impl ExtremeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold in every state of `log` not yet seen, up to and including `X(t)`.
    pub fn catch_up(&mut self, log: &FlowLog) {
        while self.seen <= log.t() {
            self.push(log.x(self.seen));
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        if self.per_node.is_empty() {
            self.per_node = x.iter().map(|&v| (v, v)).collect();
        }
        for (e, &v) in self.per_node.iter_mut().zip(x) {
            e.0 = e.0.max(v);
            e.1 = e.1.min(v);
        }
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        self.global = Some(match self.global {
            None => (hi, lo),
            Some((a, b)) => (a.max(hi), b.min(lo)),
        });
        self.seen += 1;
    }

    pub fn steps(&self) -> usize {
        self.seen
    }

    pub fn y_max(&self) -> f64 {
        self.global.map_or(f64::NAN, |g| g.0)
    }

    pub fn y_min(&self) -> f64 {
        self.global.map_or(f64::NAN, |g| g.1)
    }

    pub fn midpoint(&self) -> f64 {
        (self.y_min() + self.y_max()) / 2.0
    }

    pub fn node_max(&self, i: usize) -> f64 {
        self.per_node[i].0
    }

    pub fn node_min(&self, i: usize) -> f64 {
        self.per_node[i].1
    }

    pub fn node_midpoint(&self, i: usize) -> f64 {
        (self.node_min(i) + self.node_max(i)) / 2.0
    }
}

/// `κ(b)`: the representative of `b mod n` in `1..=n`.
pub fn kappa(b: i64, n: usize) -> usize {
    assert!(n >= 1, "kappa needs n >= 1");
    ((b - 1).rem_euclid(n as i64) + 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(4, 3), 1);
        assert_eq!(kappa(0, 3), 3);
        assert_eq!(kappa(-1, 3), 2);
        assert_eq!(kappa(-7, 1), 1);
    }

    #[test]
    fn ledger_tracks_extremes() {
        let mut led = ExtremeLedger::new();
        led.push(&[1.0, -2.0]);
        led.push(&[3.0, 0.0]);
        assert_eq!((led.y_max(), led.y_min()), (3.0, -2.0));
        assert_eq!(led.midpoint(), 0.5);
        assert_eq!((led.node_max(1), led.node_min(1)), (0.0, -2.0));
        assert_eq!(led.node_midpoint(0), 2.0);
    }

    #[test]
    fn spec_json() {
        let s: ControllerSpec = serde_json::from_str(r#"{"kind":"network_flow"}"#).unwrap();
        assert_eq!(s, ControllerSpec::NetworkFlow { epsilon: 1e-3 });
        let s: ControllerSpec = serde_json::from_str(r#"{"kind":"network_flow_local_decision","epsilon":0.01}"#).unwrap();
        assert_eq!(s, ControllerSpec::NetworkFlow { epsilon: 0.01 });
        let s: ControllerSpec = serde_json::from_str(r#"{"kind":"max_enhanced"}"#).unwrap();
        assert!(s.needs_extremes());
        assert!(serde_json::from_str::<ControllerSpec>(r#"{"kind":"pid"}"#).is_err());
    }

    proptest! {
        #[test]
        fn kappa_is_residue(b in -1000i64..1000, n in 1usize..20) {
            let k = kappa(b, n);
            prop_assert!((1..=n).contains(&k));
            prop_assert_eq!((k as i64 - b).rem_euclid(n as i64), 0);
        }

        #[test]
        fn ledger_monotone(rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..20)) {
            let mut led = ExtremeLedger::new();
            let mut prev: Option<(f64, f64)> = None;
            for r in &rows {
                led.push(r);
                prop_assert!(led.y_max() >= led.y_min());
                if let Some((hi, lo)) = prev {
                    prop_assert!(led.y_max() >= hi && led.y_min() <= lo);
                }
                prev = Some((led.y_max(), led.y_min()));
            }
        }
    }
}
