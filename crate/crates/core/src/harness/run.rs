use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::adversary::{Adversary, DivergenceCertificate, StepRecord};
use crate::controllers::{ControllerSpec, StepContext};
use crate::dynamics::{step, DynamicsError, Observer, PlantState};
use crate::flow::{consensus_extremes, ExtremeHistory, FlowLog};
use crate::function_space::{quasi_norm, w_f_bound, Nonlinearity, QuasiNormCertificate};
use crate::{Error, Result};

pub const CERTIFICATE_FILE: &str = "certificate.json";

/// Slack on the analytic bound when classifying a run as stabilised.
const BOUND_SLACK: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stabilized,
    Diverged,
    HorizonReached,
}

/// Contents of `summary.json`. Every key is always present; inapplicable
/// values are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub verdict: Verdict,
    pub controller: String,
    pub n: usize,
    pub horizon: usize,
    /// Steps actually simulated; smaller than `horizon` when the guard tripped.
    pub steps: usize,
    /// `max_t max_i |x_i(t)|` over the whole run.
    pub sup_state: f64,
    /// `max |x_i(t)|` over the last tenth of the simulated steps.
    pub tail_sup: f64,
    /// Ultimate bound `(W_f(r) + D_0)‖A‖∞ + w_*` when it applies.
    pub bound: Option<f64>,
    /// `false` when the `W_f` term is only an upper estimate.
    pub bound_exact: Option<bool>,
    pub inf_norm: f64,
    pub sharp_metric: f64,
    pub quasi_norm: Option<f64>,
    pub d0_effective: f64,
    pub w_star: f64,
    pub divergence_cap: f64,
    pub seed: Option<u64>,
    /// File name of the divergence certificate for adversarial runs.
    pub certificate: Option<String>,
    pub certificate_verdict: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub log: FlowLog,
    /// `W(0..steps)`.
    pub disturbances: Vec<Vec<f64>>,
    pub adversary: Option<AdversaryTrace>,
}

#[derive(Debug, Clone)]
pub struct AdversaryTrace {
    pub slope: f64,
    pub pins: Vec<(f64, f64)>,
    pub records: Vec<StepRecord>,
    pub certificate: Option<DivergenceCertificate>,
}

fn network_bound(
    cfg: &ExperimentConfig,
    inf_norm: f64,
    d0: f64,
    w_star: f64,
) -> Option<(f64, bool)> {
    if cfg.adversary.is_some() || !matches!(cfg.controller, ControllerSpec::NetworkFlow { .. }) {
        return None;
    }
    let (xg, _) = crate::capacity::xie_guo_constant();
    let r = if inf_norm > 0.0 { xg / inf_norm } else { f64::INFINITY };
    let cert = QuasiNormCertificate::for_function(&cfg.function).ok()?;
    if !(cert.l < r) {
        return None;
    }
    let wf = w_f_bound(&cert, r).ok()?;
    wf.value.is_finite().then(|| ((wf.value + d0) * inf_norm + w_star, wf.exact))
}

fn state_sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}

/// Runs one closed-loop experiment to the horizon or until the guard trips.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let g = cfg.validate()?;
    let n = g.n();
    let (dspec, ospec) = cfg.resolved();
    let mut source = dspec.source(n)?;
    let mut observer = Observer::new(&ospec, &g)?;
    let mut controller = cfg.controller.build(&g)?;
    let mut adversary = match &cfg.adversary {
        Some(a) => Some(Adversary::new(&g, &cfg.x0, a.slope)?),
        None => None,
    };
    let needs_extremes = cfg.controller.needs_extremes();
    let cap = cfg.cap();

    let mut log = FlowLog::new(cfg.x0.clone())?;
    let mut extremes = ExtremeHistory::new();
    let mut disturbances = Vec::with_capacity(cfg.horizon);
    let mut state = PlantState::new(cfg.x0.clone());
    let mut diverged = false;

    for t in 0..cfg.horizon {
        if needs_extremes {
            extremes.push_states(&consensus_extremes(&g, log.x(t))?);
        }
        let ctx = StepContext { graph: &g, log: &log, extremes: needs_extremes.then_some(&extremes) };
        let u = controller.control(&ctx)?;
        let w = source.next_vector();
        if let Some(adv) = adversary.as_mut() {
            adv.decide(&u, &w)?;
        }
        let f: &dyn Nonlinearity = match &adversary {
            Some(adv) => adv.function(),
            None => &cfg.function,
        };
        let next = match step(&g, f, &state, &u, &w) {
            Ok(s) => s,
            Err(DynamicsError::NonFiniteControl { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let z = observer.observe(f, &state.x, &next.x, &u);
        if needs_extremes {
            extremes.push_estimates(&z)?;
        }
        if let Some(adv) = adversary.as_mut() {
            adv.advance(&next.x)?;
        }
        log.record(z, u, next.x.clone())?;
        disturbances.push(w);
        state = next;
        if state.exceeds(cap) {
            diverged = true;
            break;
        }
    }

    let steps = log.t();
    let sups: Vec<f64> = log.states().iter().map(|x| state_sup(x)).collect();
    let sup_state = sups.iter().cloned().fold(0.0, f64::max);
    let tail_len = (steps / 10).max(1).min(sups.len());
    let tail_sup = sups[sups.len() - tail_len..].iter().cloned().fold(0.0, f64::max);
    if !(tail_sup <= sup_state) && !sup_state.is_nan() {
        return Err(Error::Invariant(format!("tail {tail_sup} exceeds sup {sup_state}")));
    }

    let d0 = observer.estimate_bound(dspec.w_star);
    let inf_norm = g.inf_norm();
    let bound = network_bound(cfg, inf_norm, d0, dspec.w_star);

    let trace = adversary.as_ref().map(|adv| AdversaryTrace {
        slope: adv.slope(),
        pins: adv.function().pins().to_vec(),
        records: adv.records().to_vec(),
        certificate: adv.certificate().ok(),
    });
    let cert_passed = trace.as_ref().and_then(|t| t.certificate.as_ref()).map(|c| c.passed());

    let verdict = if diverged || cert_passed == Some(true) {
        Verdict::Diverged
    } else if bound.is_some_and(|(b, _)| tail_sup <= BOUND_SLACK * b)
        || cfg.stable_cap.is_some_and(|c| tail_sup <= c)
    {
        Verdict::Stabilized
    } else {
        Verdict::HorizonReached
    };

    let summary = RunSummary {
        verdict,
        controller: cfg.controller.name().to_string(),
        n,
        horizon: cfg.horizon,
        steps,
        sup_state,
        tail_sup,
        bound: bound.map(|b| b.0),
        bound_exact: bound.map(|b| b.1),
        inf_norm,
        sharp_metric: g.sharp_metric(),
        quasi_norm: if cfg.adversary.is_some() { None } else { quasi_norm(&cfg.function).ok() },
        d0_effective: d0,
        w_star: dspec.w_star,
        divergence_cap: cap,
        seed: cfg.seed,
        certificate: trace.as_ref().map(|_| CERTIFICATE_FILE.to_string()),
        certificate_verdict: cert_passed.map(|p| if p { "pass" } else { "fail" }.to_string()),
    };
    Ok(RunOutput { summary, log, disturbances, adversary: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DisturbanceSpec, ObservationSpec};
    use crate::function_space::PlantFunction;
    use crate::graph::GraphSpec;
    use crate::harness::AdversaryConfig;

    fn cfg(controller: ControllerSpec, a: f64) -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSpec::Cycle { n: 3, weight: 1.0 },
            function: PlantFunction::Linear { a, b: 0.0 },
            x0: vec![1.0, -0.5, 0.25],
            horizon: 200,
            controller,
            disturbance: DisturbanceSpec::uniform(0.1, 5),
            observation: ObservationSpec::exact(),
            seed: None,
            divergence_cap: None,
            stable_cap: None,
            adversary: None,
        }
    }

    #[test]
    fn uncontrolled_unstable_plant_diverges() {
        let out = run_experiment(&cfg(ControllerSpec::Zero, 2.0)).unwrap();
        assert_eq!(out.summary.verdict, Verdict::Diverged);
        assert!(out.summary.steps < 200);
        assert!(out.summary.bound.is_none());
    }

    #[test]
    fn network_flow_stabilises_with_bound() {
        let mut c = cfg(ControllerSpec::NetworkFlow { epsilon: 1e-3 }, 2.0);
        c.horizon = 4000;
        let out = run_experiment(&c).unwrap();
        let s = &out.summary;
        assert_eq!(s.verdict, Verdict::Stabilized, "{s:?}");
        assert_eq!(s.steps, 4000);
        let b = s.bound.unwrap();
        // W_f = 0 for a linear plant, D_0 = 0, ‖A‖∞ = 1
        assert!((b - 0.1).abs() < 1e-15);
        assert!(s.tail_sup <= s.sup_state);
        assert_eq!(out.log.states().len(), 4001);
        assert_eq!(out.disturbances.len(), 4000);
    }

    #[test]
    fn seeded_runs_repeat() {
        let mut c = cfg(ControllerSpec::LocalFlow, 1.5);
        c.seed = Some(11);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.log.states(), b.log.states());
        c.seed = Some(12);
        let d = run_experiment(&c).unwrap();
        assert_ne!(a.log.states(), d.log.states());
    }

    #[test]
    fn stable_cap_classifies() {
        let mut c = cfg(ControllerSpec::Zero, 0.5);
        assert_eq!(run_experiment(&c).unwrap().summary.verdict, Verdict::HorizonReached);
        c.stable_cap = Some(1.0);
        assert_eq!(run_experiment(&c).unwrap().summary.verdict, Verdict::Stabilized);
    }

    #[test]
    fn adversarial_run_certifies() {
        let mut c = cfg(ControllerSpec::NetworkFlow { epsilon: 1e-3 }, 1.0);
        c.disturbance = DisturbanceSpec::zero(0.1);
        c.adversary = Some(AdversaryConfig::default());
        c.horizon = 30;
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.summary.verdict, Verdict::Diverged);
        assert_eq!(out.summary.certificate_verdict.as_deref(), Some("pass"));
        let t = out.adversary.unwrap();
        assert_eq!(t.slope, 4.0);
        assert_eq!(t.records.len(), out.summary.steps);
    }
}
