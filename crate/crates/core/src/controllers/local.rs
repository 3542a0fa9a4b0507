use super::{Controller, ControllerError, StepContext, Witness};
use crate::flow::{nearest_brute, EnhancedFlowView, FlowError, Hit, LocalFlowView, Member, NearestIndex};
use crate::graph::WeightedDigraph;

fn local_witness(hit: Hit<(usize, usize)>) -> Witness {
    let (time, node) = hit.tag;
    Witness { node, time, value: hit.value, distance: hit.distance, estimate: hit.payload }
}

/// Node `i`'s nearest neighbour of `x_j(t)` among its own view, with ties
/// going to the earliest time and then the lowest node.
pub fn nn_estimate_local(view: &LocalFlowView<'_>, j: Member) -> Option<Witness> {
    let t = view.t();
    let x = view.x(j, t);
    let members: Vec<Member> = view.members().collect();
    let cands = (0..t).flat_map(|s| members.iter().map(move |&k| (view.x(k, s), (s, k.index()), view.z(k, s))));
    nearest_brute(cands, x).map(local_witness)
}

/// Tag ordering of the enhanced witness set: neighbourhood states first,
/// then extremes, each by time; maxima before minima.
type EnhancedTag = (u8, usize, usize);

const EXTREME_NODE: usize = usize::MAX;

fn enhanced(hit: Hit<EnhancedTag>) -> Witness {
    let (class, time, node) = hit.tag;
    let node = if class == 0 { node } else { EXTREME_NODE };
    Witness { node, time, value: hit.value, distance: hit.distance, estimate: hit.payload }
}

/// Lookup through `K_i^t` over `𝒳_i(t)`. Extreme witnesses report
/// `node == usize::MAX`.
pub fn nn_estimate_enhanced(view: &EnhancedFlowView<'_>, j: Member) -> Option<Witness> {
    let local = &view.local;
    let ext = view.extremes;
    let t = local.t();
    let x = local.x(j, t);
    let members: Vec<Member> = local.members().collect();
    let hood = (0..t).flat_map(|s| members.iter().map(move |&k| (local.x(k, s), (0u8, s, k.index()), local.z(k, s))));
    let tops = (0..t).flat_map(|s| [(ext.max_x(s), (1u8, s, 0), ext.max_z(s)), (ext.min_x(s), (1u8, s, 1), ext.min_z(s))]);
    nearest_brute(hood.chain(tops), x).map(enhanced)
}

/// Per-node local-flow rule: `u_i = −Σ a_ij f̂_i(x_j(t)) + x_i(0)`.
#[derive(Debug, Clone, Default)]
pub struct LocalNodeLaw {
    index: NearestIndex<(usize, usize)>,
    ingested: usize,
}

impl LocalNodeLaw {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn control(&mut self, view: &LocalFlowView<'_>) -> f64 {
        let t = view.t();
        while self.ingested < t {
            let s = self.ingested;
            for k in view.members() {
                self.index.insert(view.x(k, s), (s, k.index()), view.z(k, s));
            }
            self.ingested += 1;
        }
        if t == 0 {
            return 0.0;
        }
        let s: f64 = view
            .neighbors()
            .map(|(j, a)| a * self.index.nearest(view.x(j, t)).expect("local history is non-empty").payload)
            .sum();
        -s + view.x(view.node(), 0)
    }
}

#[derive(Debug, Clone)]
pub struct LocalFlowController {
    laws: Vec<LocalNodeLaw>,
}

impl LocalFlowController {
    pub fn new(graph: &WeightedDigraph) -> Self {
        Self { laws: vec![LocalNodeLaw::new(); graph.n()] }
    }
}

impl Controller for LocalFlowController {
    fn name(&self) -> &'static str {
        "local_flow"
    }

    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError> {
        Ok(self
            .laws
            .iter_mut()
            .enumerate()
            .map(|(i, law)| law.control(&ctx.log.local_view(ctx.graph, i)))
            .collect())
    }
}

/// Per-node rule over the max-consensus enhanced view.
#[derive(Debug, Clone, Default)]
pub struct EnhancedNodeLaw {
    index: NearestIndex<EnhancedTag>,
    ingested: usize,
    folded: usize,
    y: Option<(f64, f64)>,
}

impl EnhancedNodeLaw {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn control(&mut self, view: &EnhancedFlowView<'_>) -> f64 {
        let local = &view.local;
        let ext = view.extremes;
        let t = local.t();
        while self.folded <= t {
            let s = self.folded;
            let (hi, lo) = (ext.max_x(s), ext.min_x(s));
            self.y = Some(match self.y {
                None => (hi, lo),
                Some((a, b)) => (a.max(hi), b.min(lo)),
            });
            self.folded += 1;
        }
        while self.ingested < t {
            let s = self.ingested;
            for k in local.members() {
                self.index.insert(local.x(k, s), (0, s, k.index()), local.z(k, s));
            }
            self.index.insert(ext.max_x(s), (1, s, 0), ext.max_z(s));
            self.index.insert(ext.min_x(s), (1, s, 1), ext.min_z(s));
            self.ingested += 1;
        }
        if t == 0 {
            return 0.0;
        }
        let (y_max, y_min) = self.y.expect("extremes folded");
        let s: f64 = local
            .neighbors()
            .map(|(j, a)| a * self.index.nearest(local.x(j, t)).expect("enhanced history is non-empty").payload)
            .sum();
        -s + (y_max + y_min) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct MaxEnhancedController {
    laws: Vec<EnhancedNodeLaw>,
}

impl MaxEnhancedController {
    pub fn new(graph: &WeightedDigraph) -> Result<Self, ControllerError> {
        if !graph.is_strongly_connected() {
            return Err(FlowError::NotStronglyConnected.into());
        }
        Ok(Self { laws: vec![EnhancedNodeLaw::new(); graph.n()] })
    }
}

impl Controller for MaxEnhancedController {
    fn name(&self) -> &'static str {
        "max_enhanced"
    }

    fn control(&mut self, ctx: &StepContext<'_>) -> Result<Vec<f64>, ControllerError> {
        let ext = ctx.extremes.ok_or(FlowError::MissingExtremes(ctx.log.t()))?;
        let mut u = Vec::with_capacity(self.laws.len());
        for (i, law) in self.laws.iter_mut().enumerate() {
            let view = EnhancedFlowView::new(ctx.log.local_view(ctx.graph, i), ext)?;
            u.push(law.control(&view));
        }
        Ok(u)
    }
}
