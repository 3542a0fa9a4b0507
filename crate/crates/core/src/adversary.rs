//! Adaptive adversarial plant: a piecewise-linear function with slopes
//! `±B`, `B ≥ 4/‖A‖♯`, whose values are committed online one interval
//! extension at a time, choosing the branch that pushes the attacked node
//! out of the visited interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::node_update;
use crate::function_space::Nonlinearity;
use crate::graph::WeightedDigraph;

/// Relative tolerance on committed slopes in the feasibility check.
const SLOPE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("adversary needs a strongly connected graph")]
    NotStronglyConnected,
    #[error("adversary needs all arc weights of one sign")]
    MixedSigns,
    #[error("adversary needs at least one arc")]
    NoArcs,
    #[error("slope {b} is below 4/‖A‖♯ = {min}")]
    SlopeTooSmall { b: f64, min: f64 },
    #[error("initial state must be finite")]
    NonFiniteState,
    #[error("{what} has length {got}, expected {expected}")]
    Length { what: &'static str, got: usize, expected: usize },
    #[error("divergence certificate needs at least 2 recorded steps, got {0}")]
    TooFewSteps(usize),
    #[error("step order violated: {0}")]
    Protocol(&'static str),
    #[error("committed function left H*_B: {0}")]
    Infeasible(String),
}

impl AdversaryError {
    /// Failures of the construction itself rather than of its inputs.
    pub fn is_invariant(&self) -> bool {
        matches!(self, AdversaryError::Infeasible(_) | AdversaryError::Protocol(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    P,
    N,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::P => 1.0,
            Branch::N => -1.0,
        }
    }
}

/// Finitely many committed values of a function in `H*_B`, linearly
/// interpolated. Outside the pinned range the function continues with
/// slope `+B` to the right and `−B` to the left on the p-branch, and the
/// reverse on the n-branch.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnedPiecewiseLinear {
    b: f64,
    pins: Vec<(f64, f64)>,
    branches: Vec<Branch>,
}

impl PinnedPiecewiseLinear {
    pub fn new(b: f64) -> Self {
        Self { b, pins: Vec::new(), branches: Vec::new() }
    }

    pub fn slope_bound(&self) -> f64 {
        self.b
    }

    pub fn pins(&self) -> &[(f64, f64)] {
        &self.pins
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Pins a value; an existing abscissa is kept if its value agrees.
    pub fn pin(&mut self, x: f64, v: f64) -> Result<(), AdversaryError> {
        match self.pins.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(k) => {
                let old = self.pins[k].1;
                if old != v {
                    return Err(AdversaryError::Infeasible(format!("abscissa {x} re-pinned from {old} to {v}")));
                }
            }
            Err(k) => self.pins.insert(k, (x, v)),
        }
        Ok(())
    }

    fn push_branch(&mut self, b: Branch) {
        self.branches.push(b);
    }

    fn extension_sign(&self) -> f64 {
        self.branches.last().map_or(1.0, |b| b.sign())
    }

    /// Every pin pair is `B`-Lipschitz and adjacent pins have slope `±B`.
    pub fn check_feasible(&self) -> Result<(), AdversaryError> {
        let b = self.b;
        for w in self.pins.windows(2) {
            let (dx, dv) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if (dv.abs() - b * dx).abs() > SLOPE_TOL * (b * dx).max(dv.abs()).max(f64::MIN_POSITIVE) {
                return Err(AdversaryError::Infeasible(format!("segment [{}, {}] has slope {} not ±{b}", w[0].0, w[1].0, dv / dx)));
            }
        }
        for (k, p) in self.pins.iter().enumerate() {
            for q in &self.pins[k + 1..] {
                let (dx, dv) = ((q.0 - p.0).abs(), (q.1 - p.1).abs());
                if dv > b * dx * (1.0 + SLOPE_TOL) {
                    return Err(AdversaryError::Infeasible(format!("pins at {} and {} violate the Lipschitz bound", p.0, q.0)));
                }
            }
        }
        Ok(())
    }
}

impl Nonlinearity for PinnedPiecewiseLinear {
    fn eval(&self, x: f64) -> f64 {
        let pins = &self.pins;
        let Some(&(x0, v0)) = pins.first() else { return 0.0 };
        let (xn, vn) = *pins.last().expect("non-empty");
        let s = self.extension_sign();
        if x <= x0 {
            return v0 + s * self.b * (x0 - x);
        }
        if x >= xn {
            return vn + s * self.b * (x - xn);
        }
        let k = pins.partition_point(|p| p.0 <= x);
        let (xa, va) = pins[k - 1];
        let (xb, vb) = pins[k];
        if x == xa {
            return va;
        }
        va + (vb - va) * ((x - xa) / (xb - xa))
    }
}

/// Running hull `I_t` of visited states and its increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalLedger {
    pub lo: f64,
    pub hi: f64,
    pub lo_holder: usize,
    pub hi_holder: usize,
    pub i0: f64,
    /// `|R_s|`, `|L_s|`, `χ(s)` for `s = 1..=t`.
    pub r: Vec<f64>,
    pub l: Vec<f64>,
    pub chi: Vec<f64>,
}

fn argmax(x: &[f64]) -> usize {
    let mut k = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[k] {
            k = i;
        }
    }
    k
}

fn argmin(x: &[f64]) -> usize {
    let mut k = 0;
    for (i, &v) in x.iter().enumerate() {
        if v < x[k] {
            k = i;
        }
    }
    k
}

fn dist_to_interval(x: f64, lo: f64, hi: f64) -> f64 {
    if x > hi {
        x - hi
    } else if x < lo {
        lo - x
    } else {
        0.0
    }
}

impl IntervalLedger {
    pub fn new(x0: &[f64]) -> Self {
        let (hi_holder, lo_holder) = (argmax(x0), argmin(x0));
        let (hi, lo) = (x0[hi_holder], x0[lo_holder]);
        Self { lo, hi, lo_holder, hi_holder, i0: hi - lo, r: Vec::new(), l: Vec::new(), chi: Vec::new() }
    }

    pub fn from_trajectory(states: &[Vec<f64>]) -> Self {
        let mut led = Self::new(&states[0]);
        for x in &states[1..] {
            led.extend(x);
        }
        led
    }

    pub fn t(&self) -> usize {
        self.chi.len()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    /// `max_i dist(x_i, I_t)`.
    pub fn excursion(&self, x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, &v| m.max(dist_to_interval(v, self.lo, self.hi)))
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Absorb `X(t+1)`; returns `χ(t+1)`.
    pub fn extend(&mut self, x: &[f64]) -> f64 {
        let (hk, lk) = (argmax(x), argmin(x));
        let (r, l) = ((x[hk] - self.hi).max(0.0), (self.lo - x[lk]).max(0.0));
        if x[hk] > self.hi {
            self.hi = x[hk];
            self.hi_holder = hk;
        }
        if x[lk] < self.lo {
            self.lo = x[lk];
            self.lo_holder = lk;
        }
        let chi = r.max(l);
        self.r.push(r);
        self.l.push(l);
        self.chi.push(chi);
        chi
    }

    /// `θ_t`: holder of the side that grew most in the last step.
    pub fn theta(&self) -> usize {
        match (self.r.last(), self.l.last()) {
            (Some(r), Some(l)) if r < l => self.lo_holder,
            _ => self.hi_holder,
        }
    }

    pub fn certificate(&self) -> Result<DivergenceCertificate, AdversaryError> {
        DivergenceCertificate::from_chi(self.i0, &self.chi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    Pass,
    Fail,
}

/// `E_0 = |I_0|/2`, `E_t = |I_0|/2 + Σ_{s≤t} χ(s)`; passes iff
/// `E_{t+1} > 2E_t` for every recorded `t ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCertificate {
    pub chi: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    pub verdict: CertificateVerdict,
}

impl DivergenceCertificate {
    /// `chi[k]` is `χ(k+1)`.
    pub fn from_chi(i0: f64, chi: &[f64]) -> Result<Self, AdversaryError> {
        if chi.len() < 2 {
            return Err(AdversaryError::TooFewSteps(chi.len()));
        }
        let mut e = vec![i0 / 2.0];
        for c in chi {
            e.push(e.last().unwrap() + c);
        }
        let pass = (1..e.len() - 1).all(|t| e[t + 1] > 2.0 * e[t]);
        Ok(Self { chi: chi.to_vec(), e, verdict: if pass { CertificateVerdict::Pass } else { CertificateVerdict::Fail } })
    }

    pub fn passed(&self) -> bool {
        self.verdict == CertificateVerdict::Pass
    }
}

/// Branch decision at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub t: usize,
    pub theta: usize,
    pub target: usize,
    pub probe: f64,
    pub threshold: f64,
    pub branch: Branch,
}

/// Per-step consequences checked against the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub decision: Decision,
    pub chi_next: f64,
    pub escaped: bool,
    /// `χ(1) ≥ ‖A‖♯ + 3.5|I_0|` at `t = 0`, else `χ(t+1) ≥ 4χ(t) − |I_0|/2 − Σ_{s≤t} χ(s)`.
    pub growth_bound: f64,
    pub growth_ok: bool,
}

/// The online construction. Per step: [`decide`](Self::decide) with the
/// controller's `U(t)` and the disturbance `W(t)`, evaluate the plant with
/// [`function`](Self::function), then [`advance`](Self::advance) with `X(t+1)`.
#[derive(Debug, Clone)]
pub struct Adversary {
    graph: WeightedDigraph,
    sharp: f64,
    b: f64,
    f: PinnedPiecewiseLinear,
    ledger: IntervalLedger,
    x: Vec<f64>,
    prev: Option<(f64, f64)>,
    pending: Option<Decision>,
    records: Vec<StepRecord>,
}

impl Adversary {
    /// Uses `B = 4/‖A‖♯` unless a larger `slope` is given.
    pub fn new(graph: &WeightedDigraph, x0: &[f64], slope: Option<f64>) -> Result<Self, AdversaryError> {
        if graph.is_zero() {
            return Err(AdversaryError::NoArcs);
        }
        if !graph.sign_pattern().is_uniform() {
            return Err(AdversaryError::MixedSigns);
        }
        if !graph.is_strongly_connected() {
            return Err(AdversaryError::NotStronglyConnected);
        }
        if x0.len() != graph.n() {
            return Err(AdversaryError::Length { what: "X(0)", got: x0.len(), expected: graph.n() });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(AdversaryError::NonFiniteState);
        }
        let sharp = graph.sharp_metric();
        let min = 4.0 / sharp;
        let b = slope.unwrap_or(min);
        if !(b >= min) || !b.is_finite() {
            return Err(AdversaryError::SlopeTooSmall { b, min });
        }
        Ok(Self {
            graph: graph.clone(),
            sharp,
            b,
            f: PinnedPiecewiseLinear::new(b),
            ledger: IntervalLedger::new(x0),
            x: x0.to_vec(),
            prev: None,
            pending: None,
            records: Vec::new(),
        })
    }

    pub fn slope(&self) -> f64 {
        self.b
    }

    pub fn function(&self) -> &PinnedPiecewiseLinear {
        &self.f
    }

    pub fn ledger(&self) -> &IntervalLedger {
        &self.ledger
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn t(&self) -> usize {
        self.ledger.t()
    }

    /// New pins for the current step on the given branch.
    fn tentative(&self, branch: Branch) -> Vec<(f64, f64)> {
        let s = branch.sign();
        let b = self.b;
        let led = &self.ledger;
        match self.prev {
            None => vec![(led.lo, s), (led.hi, s * (1.0 + b * led.i0))],
            Some((prev_lo, prev_hi)) => {
                let v_hi = self.f.eval(prev_hi) + s * b * led.r.last().copied().unwrap_or(0.0);
                let v_lo = self.f.eval(prev_lo) + s * b * led.l.last().copied().unwrap_or(0.0);
                vec![(led.hi, v_hi), (led.lo, v_lo)]
            }
        }
    }

    /// Chooses and commits the branch for step `t`.
    pub fn decide(&mut self, u: &[f64], w: &[f64]) -> Result<Decision, AdversaryError> {
        if self.pending.is_some() {
            return Err(AdversaryError::Protocol("decide called twice without advance"));
        }
        let n = self.graph.n();
        if u.len() != n {
            return Err(AdversaryError::Length { what: "U", got: u.len(), expected: n });
        }
        if w.len() != n {
            return Err(AdversaryError::Length { what: "W", got: w.len(), expected: n });
        }
        let t = self.t();
        let theta = self.ledger.theta();
        let target = *self.graph.out_neighbors(theta).first().expect("strongly connected graph has out-arcs");
        let mut probe_fn = self.f.clone();
        for (x, v) in self.tentative(Branch::P) {
            probe_fn.pin(x, v)?;
        }
        probe_fn.push_branch(Branch::P);
        let next = node_update(&self.graph, &probe_fn, &self.x, target, u[target], w[target]);
        let probe = (next - self.ledger.midpoint()).abs();
        let threshold = if t == 0 { self.sharp + 4.0 * self.ledger.i0 } else { 4.0 * self.ledger.chi[t - 1] };
        let branch = if probe >= threshold { Branch::P } else { Branch::N };
        for (x, v) in self.tentative(branch) {
            self.f.pin(x, v)?;
        }
        self.f.push_branch(branch);
        self.f.check_feasible()?;
        let d = Decision { t, theta, target, probe, threshold, branch };
        self.pending = Some(d);
        Ok(d)
    }

    /// Absorbs `X(t+1)` and checks the step against the construction.
    pub fn advance(&mut self, x_next: &[f64]) -> Result<StepRecord, AdversaryError> {
        let decision = self.pending.take().ok_or(AdversaryError::Protocol("advance called before decide"))?;
        if x_next.len() != self.graph.n() {
            return Err(AdversaryError::Length { what: "X", got: x_next.len(), expected: self.graph.n() });
        }
        let before = self.ledger.clone();
        let sum_chi: f64 = before.chi.iter().sum();
        let escaped = !before.contains(x_next[decision.target]);
        let excursion = before.excursion(x_next);
        self.prev = Some((before.lo, before.hi));
        let chi_next = self.ledger.extend(x_next);
        if excursion != chi_next {
            return Err(AdversaryError::Infeasible(format!("χ mismatch: {chi_next} vs excursion {excursion}")));
        }
        let growth_bound = if decision.t == 0 {
            self.sharp + 3.5 * before.i0
        } else {
            4.0 * before.chi[decision.t - 1] - before.i0 / 2.0 - sum_chi
        };
        self.x = x_next.to_vec();
        let rec = StepRecord { decision, chi_next, escaped, growth_bound, growth_ok: chi_next >= growth_bound };
        self.records.push(rec);
        Ok(rec)
    }

    pub fn certificate(&self) -> Result<DivergenceCertificate, AdversaryError> {
        self.ledger.certificate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{step, PlantState};
    use crate::function_space::PlantFunction;
    use crate::graph::GraphSpec;
    use proptest::prelude::*;

    fn three_node() -> WeightedDigraph {
        WeightedDigraph::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap()
    }

    /// Runs the construction against `u ≡ 0`.
    fn run(g: &WeightedDigraph, x0: &[f64], steps: usize, u: impl Fn(&[f64]) -> Vec<f64>) -> Adversary {
        let mut adv = Adversary::new(g, x0, None).unwrap();
        let mut x = x0.to_vec();
        for t in 0..steps {
            let uu = u(&x);
            let w = vec![0.0; x.len()];
            adv.decide(&uu, &w).unwrap();
            let next = step(g, adv.function(), &PlantState { t, x: x.clone() }, &uu, &w).unwrap();
            adv.advance(&next.x).unwrap();
            x = next.x;
        }
        adv
    }

    #[test]
    fn initial_pins() {
        let g = GraphSpec::Cycle { n: 2, weight: 1.0 }.build().unwrap();
        let adv = Adversary::new(&g, &[0.0, 1.0], None).unwrap();
        assert_eq!(adv.slope(), 4.0);
        assert_eq!(adv.tentative(Branch::P), vec![(0.0, 1.0), (1.0, 5.0)]);
        assert_eq!(adv.tentative(Branch::N), vec![(0.0, -1.0), (1.0, -5.0)]);
        let flat = Adversary::new(&g, &[2.0, 2.0], None).unwrap();
        assert_eq!(flat.tentative(Branch::P), vec![(2.0, 1.0), (2.0, 1.0)]);
    }

    #[test]
    fn rejects_bad_graphs() {
        let mixed = WeightedDigraph::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(Adversary::new(&mixed, &[0.0, 1.0], None).unwrap_err(), AdversaryError::MixedSigns);
        let path = GraphSpec::PathRootSelfloop { n: 3, root_weight: 1.0, arc_weight: 1.0 }.build().unwrap();
        assert_eq!(Adversary::new(&path, &[0.0; 3], None).unwrap_err(), AdversaryError::NotStronglyConnected);
        let g = three_node();
        assert!(matches!(Adversary::new(&g, &[0.0; 3], Some(1.0)), Err(AdversaryError::SlopeTooSmall { .. })));
        let mut adv = Adversary::new(&g, &[0.0; 3], None).unwrap();
        assert!(adv.advance(&[0.0; 3]).unwrap_err().is_invariant());
    }

    #[test]
    fn pinned_function_eval_and_extension() {
        let mut f = PinnedPiecewiseLinear::new(2.0);
        f.pin(0.0, 1.0).unwrap();
        f.pin(1.0, 3.0).unwrap();
        f.pin(-1.0, 3.0).unwrap();
        f.push_branch(Branch::P);
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(-0.5), 2.0);
        assert_eq!(f.eval(2.0), 5.0);
        assert_eq!(f.eval(-2.0), 5.0);
        f.push_branch(Branch::N);
        assert_eq!(f.eval(2.0), 1.0);
        f.check_feasible().unwrap();
        assert!(f.pin(0.0, 2.0).is_err());
        f.pin(0.0, 1.0).unwrap();
        f.pin(3.0, 3.5).unwrap();
        assert!(f.check_feasible().is_err());
    }

    #[test]
    fn certificate_examples() {
        let c = DivergenceCertificate::from_chi(1.0, &[4.0, 11.5]).unwrap();
        assert_eq!(c.e, vec![0.5, 4.5, 16.0]);
        assert!(c.passed());
        assert_eq!(DivergenceCertificate::from_chi(1.0, &[4.0]), Err(AdversaryError::TooFewSteps(1)));
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["verdict"], "pass");
        assert_eq!(json["E"][2], 16.0);
        assert!(json["chi"].is_array());
    }

    #[test]
    fn benign_run_fails_certificate() {
        let g = GraphSpec::Cycle { n: 3, weight: 1.0 }.build().unwrap();
        let f = PlantFunction::Linear { a: 0.5, b: 0.0 };
        let mut s = PlantState::new(vec![1.0, -1.0, 0.5]);
        let mut states = vec![s.x.clone()];
        for _ in 0..30 {
            s = step(&g, &f, &s, &[0.0; 3], &[0.0; 3]).unwrap();
            states.push(s.x.clone());
        }
        let c = IntervalLedger::from_trajectory(&states).certificate().unwrap();
        assert!(!c.passed());
    }

    #[test]
    fn construction_beats_zero_control() {
        let g = three_node();
        let adv = run(&g, &[0.0, 0.5, 1.0], 30, |x| vec![0.0; x.len()]);
        let recs = adv.records();
        assert!(recs[0].chi_next >= 1.0 + 3.5);
        for r in recs {
            assert!(r.escaped, "{r:?}");
            assert!(r.growth_ok, "{r:?}");
        }
        assert!(adv.certificate().unwrap().passed());
        let led = adv.ledger();
        let total: f64 = led.i0 + led.r.iter().sum::<f64>() + led.l.iter().sum::<f64>();
        assert!((led.width() - total).abs() <= 1e-9 * led.width());
    }

    #[test]
    fn construction_beats_cancelling_control() {
        // a controller that guesses f = identity and cancels it
        let g = three_node();
        let adv = run(&g, &[1.0, 0.0, 0.0], 30, |x| {
            vec![-(x[1] + x[2]), -x[0], -x[1]]
        });
        assert!(adv.records().iter().all(|r| r.escaped && r.growth_ok));
        assert!(adv.certificate().unwrap().passed());
    }

    #[test]
    fn branches_agree_on_committed_pins() {
        let g = three_node();
        let adv = run(&g, &[0.0, 0.25, 1.0], 8, |x| vec![0.1 * x[0]; 3]);
        let committed = adv.function().pins().to_vec();
        let mut p = adv.clone();
        let mut n = adv.clone();
        for (x, v) in adv.tentative(Branch::P) {
            p.f.pin(x, v).unwrap();
        }
        for (x, v) in adv.tentative(Branch::N) {
            n.f.pin(x, v).unwrap();
        }
        for (x, v) in committed {
            assert_eq!(p.f.eval(x), v);
            assert_eq!(n.f.eval(x), v);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn construction_invariants(x0 in prop::collection::vec(-4i32..4, 3), gain in -2.0f64..2.0, offset in -3.0f64..3.0) {
            let g = three_node();
            let x0: Vec<f64> = x0.iter().map(|&v| v as f64 * 0.5).collect();
            let adv = run(&g, &x0, 20, |x| x.iter().map(|v| gain * v + offset).collect());
            adv.function().check_feasible().unwrap();
            for r in adv.records() {
                prop_assert!(r.escaped);
            }
            prop_assert!(adv.certificate().unwrap().passed());
        }
    }
}
