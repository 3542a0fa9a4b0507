use super::{Controller, ControllerError, ExtremeLedger, StepContext, Witness};
use crate::flow::{nearest_brute, FlowLog, Hit, NearestIndex};
use crate::graph::WeightedDigraph;

fn witness(hit: Hit<(usize, usize)>) -> Witness {
    let (time, node) = hit.tag;
    Witness { node, time, value: hit.value, distance: hit.distance, estimate: hit.payload }
}

/// Nearest neighbour of `x_i(t)` among `x_j(τ)`, `j ∈ V`, `0 ≤ τ < t`, with
/// ties going to the earliest `τ` and then the lowest `j`. Returns `None` at `t = 0`.
pub fn nn_estimate_global(log: &FlowLog, i: usize, t: usize) -> Option<Witness> {
    let x = log.x(t)[i];
    let cands = (0..t).flat_map(|tau| (0..log.n()).map(move |j| (log.x(tau)[j], (tau, j), log.z(tau)[j])));
    nearest_brute(cands, x).map(witness)
}

/// Global history index shared by the network-flow controller.
#[derive(Debug, Clone, Default)]
struct History {
    index: NearestIndex<(usize, usize)>,
    ingested: usize,
}

impl History {
    /// Make `X(0..t)` with `Z(0..t)` searchable.
    fn catch_up(&mut self, log: &FlowLog) {
        while self.ingested < log.t() {
            let s = self.ingested;
            for (j, (&x, &z)) in log.x(s).iter().zip(log.z(s)).enumerate() {
                self.index.insert(x, (s, j), z);
            }
            self.ingested += 1;
        }
    }
}

/// Nearest-neighbour estimate plus the ε-switched global midpoint.
#[derive(Debug, Clone)]
pub struct NetworkFlowController {
    epsilon: f64,
    history: History,
    ledger: ExtremeLedger,
    witnesses: Vec<Witness>,
    midpoint_active: bool,
}

impl NetworkFlowController {
    pub fn new(epsilon: f64) -> Result<Self, ControllerError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ControllerError::BadEpsilon);
        }
        Ok(Self {
            epsilon,
            history: History::default(),
            ledger: ExtremeLedger::new(),
            witnesses: Vec::new(),
            midpoint_active: false,
        })
    }

    /// Witnesses chosen at the last call (empty at `t = 0`).
    pub fn witnesses(&self) -> &[Witness] {
        &self.witnesses
    }

    /// Whether the last control included `(y̲ + ȳ)/2`.
    pub fn midpoint_active(&self) -> bool {
        self.midpoint_active
    }

    pub fn ledger(&self) -> &ExtremeLedger {
        &self.ledger
    }
}

impl Controller for NetworkFlowController {
    fn name(&self) -> &'static str {
        "network_flow"
    }

    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError> {
        let (g, log) = (ctx.graph, ctx.log);
        let n = log.n();
        self.ledger.catch_up(log);
        self.history.catch_up(log);
        self.witnesses.clear();
        self.midpoint_active = false;
        let t = log.t();
        if t == 0 {
            return Ok(vec![0.0; n]);
        }
        let x = log.x(t);
        for &xi in x {
            let hit = self.history.index.nearest(xi).expect("history is non-empty for t >= 1");
            self.witnesses.push(witness(hit));
        }
        let within = self.witnesses.iter().all(|w| w.distance <= self.epsilon);
        self.midpoint_active = !within;
        let mid = self.ledger.midpoint();
        Ok((0..n)
            .map(|i| {
                let s: f64 = g.in_neighbors(i).iter().map(|&j| g.weight(i, j) * self.witnesses[j].estimate).sum();
                if within {
                    -s
                } else {
                    -s + mid
                }
            })
            .collect())
    }
}

/// Scalar rule at the root of a path with unit self-loop; zero elsewhere.
#[derive(Debug, Clone)]
pub struct PathRootController {
    index: NearestIndex<usize>,
    ingested: usize,
    ledger: ExtremeLedger,
}

impl PathRootController {
    pub fn new(graph: &WeightedDigraph) -> Result<Self, ControllerError> {
        if !graph.has_unit_root_selfloop() {
            return Err(ControllerError::WrongGraph {
                controller: "path_root",
                requirement: "node 1 to have a unit self-loop as its only incoming arc",
            });
        }
        Ok(Self { index: NearestIndex::new(), ingested: 0, ledger: ExtremeLedger::new() })
    }
}

impl Controller for PathRootController {
    fn name(&self) -> &'static str {
        "path_root"
    }

    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError> {
        let log = ctx.log;
        let t = log.t();
        self.ledger.catch_up(log);
        while self.ingested < t {
            let s = self.ingested;
            self.index.insert(log.x(s)[0], s, log.z(s)[0]);
            self.ingested += 1;
        }
        let mut u = vec![0.0; log.n()];
        if t >= 1 {
            let hit = self.index.nearest(log.x(t)[0]).expect("root history is non-empty");
            u[0] = -hit.payload + self.ledger.node_midpoint(0);
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, Copy)]
struct Diagonal {
    max: f64,
    min: f64,
}

/// Rotating-diagonal controller for the unit directed cycle.
///
/// Diagonal `c` (0-based) is the sequence `[x_c]_τ = x_{κ(c+τ)}(τ)`; node
/// `i` at time `t` reads diagonal `(i − t) mod n`.
#[derive(Debug, Clone)]
pub struct CycleController {
    n: usize,
    indices: Vec<NearestIndex<usize>>,
    ranges: Vec<Option<Diagonal>>,
    ingested: usize,
    ranged: usize,
}

impl CycleController {
    pub fn new(graph: &WeightedDigraph) -> Result<Self, ControllerError> {
        if !graph.is_unit_cycle() {
            return Err(ControllerError::WrongGraph { controller: "cycle_global", requirement: "the unit-weight directed cycle" });
        }
        let n = graph.n();
        Ok(Self { n, indices: vec![NearestIndex::new(); n], ranges: vec![None; n], ingested: 0, ranged: 0 })
    }

    /// Node (0-based) holding diagonal `c` at time `tau`.
    pub fn diagonal_node(c: usize, tau: usize, n: usize) -> usize {
        (c + tau % n + n - 1) % n
    }

    /// Diagonal read by node `i` (0-based) at time `t`.
    pub fn diagonal_of(i: usize, t: usize, n: usize) -> usize {
        (i + n - t % n) % n
    }
}

impl Controller for CycleController {
    fn name(&self) -> &'static str {
        "cycle_global"
    }

    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError> {
        let log = ctx.log;
        let n = self.n;
        let t = log.t();
        while self.ranged <= t {
            let tau = self.ranged;
            for c in 0..n {
                let v = log.x(tau)[Self::diagonal_node(c, tau, n)];
                self.ranges[c] = Some(match self.ranges[c] {
                    None => Diagonal { max: v, min: v },
                    Some(d) => Diagonal { max: d.max.max(v), min: d.min.min(v) },
                });
            }
            self.ranged += 1;
        }
        while self.ingested < t {
            let tau = self.ingested;
            for c in 0..n {
                let k = Self::diagonal_node(c, tau, n);
                self.indices[c].insert(log.x(tau)[k], tau, log.z(tau)[k]);
            }
            self.ingested += 1;
        }
        if t == 0 {
            return Ok(vec![0.0; n]);
        }
        Ok((0..n)
            .map(|i| {
                let c = Self::diagonal_of(i, t, n);
                let query = log.x(t)[(i + n - 1) % n];
                let hit = self.indices[c].nearest(query).expect("diagonal history is non-empty");
                let d = self.ranges[c].expect("diagonal range initialised");
                -hit.payload + (d.max + d.min) / 2.0
            })
            .collect())
    }
}
