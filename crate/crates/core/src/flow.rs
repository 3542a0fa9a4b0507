//! Information-flow histories, the views handed to each controller class,
//! nearest-neighbour lookup over stored states and finite max/min-consensus.

use std::collections::BTreeMap;
use std::ops::Bound;

use thiserror::Error;

use crate::graph::WeightedDigraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("{what} has length {got}, expected {expected}")]
    Length { what: &'static str, got: usize, expected: usize },
    #[error("flow log needs at least one node")]
    Empty,
    #[error("graph is not strongly connected; consensus extremes are unavailable")]
    NotStronglyConnected,
    #[error("consensus extremes missing for time {0}")]
    MissingExtremes(usize),
}

/// Signal class of a flow coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    X,
    Z,
    U,
}

/// One scalar entry of a flow vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub signal: Signal,
    pub node: usize,
    pub time: usize,
}

/// Append-only record of `X(0..=t)`, `Z(0..t)`, `U(0..t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowLog {
    n: usize,
    xs: Vec<Vec<f64>>,
    zs: Vec<Vec<f64>>,
    us: Vec<Vec<f64>>,
}

impl FlowLog {
    pub fn new(x0: Vec<f64>) -> Result<Self, FlowError> {
        if x0.is_empty() {
            return Err(FlowError::Empty);
        }
        Ok(Self { n: x0.len(), xs: vec![x0], zs: Vec::new(), us: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Current time `t`: the log holds `X(0..=t)`.
    pub fn t(&self) -> usize {
        self.xs.len() - 1
    }

    /// Close step `t` with `Z(t)`, `U(t)` and open step `t+1` with `X(t+1)`.
    pub fn record(&mut self, z: Vec<f64>, u: Vec<f64>, x_next: Vec<f64>) -> Result<(), FlowError> {
        for (what, got) in [("Z", z.len()), ("U", u.len()), ("X", x_next.len())] {
            if got != self.n {
                return Err(FlowError::Length { what, got, expected: self.n });
            }
        }
        self.zs.push(z);
        self.us.push(u);
        self.xs.push(x_next);
        Ok(())
    }

    pub fn x(&self, s: usize) -> &[f64] {
        &self.xs[s]
    }

    pub fn z(&self, s: usize) -> &[f64] {
        &self.zs[s]
    }

    pub fn u(&self, s: usize) -> &[f64] {
        &self.us[s]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn estimates(&self) -> &[Vec<f64>] {
        &self.zs
    }

    pub fn controls(&self) -> &[Vec<f64>] {
        &self.us
    }

    /// Coordinates making up `Θ(t)`.
    pub fn theta_coords(&self, t: usize) -> Vec<Coord> {
        coords_for(0..self.n, t)
    }

    /// Copy of the log with every coordinate outside `keep` shifted by `offset`.
    pub fn with_offset_outside(&self, keep: &[usize], offset: f64) -> FlowLog {
        let shift = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().enumerate().map(|(j, v)| if keep.contains(&j) { *v } else { v + offset }).collect())
                .collect()
        };
        FlowLog { n: self.n, xs: shift(&self.xs), zs: shift(&self.zs), us: shift(&self.us) }
    }

    pub fn local_view<'a>(&'a self, graph: &WeightedDigraph, i: usize) -> LocalFlowView<'a> {
        LocalFlowView::new(self, graph, i)
    }
}

fn coords_for(nodes: impl Iterator<Item = usize> + Clone, t: usize) -> Vec<Coord> {
    let mut out = Vec::new();
    for node in nodes {
        out.extend((0..=t).map(|time| Coord { signal: Signal::X, node, time }));
        out.extend((0..t).map(|time| Coord { signal: Signal::Z, node, time }));
        out.extend((0..t).map(|time| Coord { signal: Signal::U, node, time }));
    }
    out
}

/// Node handle that can only be obtained from a [`LocalFlowView`], which
/// makes reading a coordinate outside `N_i ∪ {i}` unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Member(usize);

impl Member {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `Θ_i(t)`: restriction of the log to `N_i ∪ {i}`.
#[derive(Debug, Clone)]
pub struct LocalFlowView<'a> {
    log: &'a FlowLog,
    node: usize,
    members: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl<'a> LocalFlowView<'a> {
    pub fn new(log: &'a FlowLog, graph: &WeightedDigraph, i: usize) -> Self {
        let mut members: Vec<usize> = graph.in_neighbors(i).to_vec();
        if !members.contains(&i) {
            members.push(i);
        }
        members.sort_unstable();
        let neighbors = graph.in_neighbors(i).iter().map(|&j| (j, graph.weight(i, j))).collect();
        Self { log, node: i, members, neighbors }
    }

    pub fn node(&self) -> Member {
        Member(self.node)
    }

    pub fn t(&self) -> usize {
        self.log.t()
    }

    /// `N_i ∪ {i}` in increasing index order.
    pub fn members(&self) -> impl Iterator<Item = Member> + '_ {
        self.members.iter().map(|&j| Member(j))
    }

    /// `(j, a_ij)` for `j ∈ N_i`.
    pub fn neighbors(&self) -> impl Iterator<Item = (Member, f64)> + '_ {
        self.neighbors.iter().map(|&(j, a)| (Member(j), a))
    }

    pub fn x(&self, m: Member, s: usize) -> f64 {
        self.log.x(s)[m.0]
    }

    pub fn z(&self, m: Member, s: usize) -> f64 {
        self.log.z(s)[m.0]
    }

    pub fn u(&self, m: Member, s: usize) -> f64 {
        self.log.u(s)[m.0]
    }

    pub fn coords(&self) -> Vec<Coord> {
        coords_for(self.members.iter().copied(), self.t())
    }
}

/// Consensus output for one time instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub max_x: f64,
    pub max_holder: usize,
    pub min_x: f64,
    pub min_holder: usize,
    pub rounds: usize,
}

/// `x̄(s), x̲(s)` for `s ≤ t` and `z̄(s), z̲(s)` for `s < t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtremeHistory {
    max_x: Vec<f64>,
    min_x: Vec<f64>,
    holders: Vec<(usize, usize)>,
    max_z: Vec<f64>,
    min_z: Vec<f64>,
}

impl ExtremeHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Extremes of the current state, before its estimates exist.
    pub fn push_states(&mut self, e: &Extremes) {
        self.max_x.push(e.max_x);
        self.min_x.push(e.min_x);
        self.holders.push((e.max_holder, e.min_holder));
    }

    /// Attach `Z(s)` to the extremes of time `s` (must be the oldest open slot).
    pub fn push_estimates(&mut self, z: &[f64]) -> Result<(), FlowError> {
        let s = self.max_z.len();
        let &(hi, lo) = self.holders.get(s).ok_or(FlowError::MissingExtremes(s))?;
        self.max_z.push(z[hi]);
        self.min_z.push(z[lo]);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.max_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.max_x.is_empty()
    }

    pub fn max_x(&self, s: usize) -> f64 {
        self.max_x[s]
    }

    pub fn min_x(&self, s: usize) -> f64 {
        self.min_x[s]
    }

    pub fn max_z(&self, s: usize) -> f64 {
        self.max_z[s]
    }

    pub fn min_z(&self, s: usize) -> f64 {
        self.min_z[s]
    }

    pub fn closed(&self) -> usize {
        self.max_z.len()
    }
}

/// `Θ_i^e(t)`: the local view plus consensus extremes.
#[derive(Debug, Clone)]
pub struct EnhancedFlowView<'a> {
    pub local: LocalFlowView<'a>,
    pub extremes: &'a ExtremeHistory,
}

impl<'a> EnhancedFlowView<'a> {
    pub fn new(local: LocalFlowView<'a>, extremes: &'a ExtremeHistory) -> Result<Self, FlowError> {
        let t = local.t();
        if extremes.len() < t + 1 {
            return Err(FlowError::MissingExtremes(extremes.len()));
        }
        if extremes.closed() < t {
            return Err(FlowError::MissingExtremes(extremes.closed()));
        }
        Ok(Self { local, extremes })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key(i64);

fn key(v: f64) -> Key {
    let v = if v == 0.0 { 0.0 } else { v };
    // total_cmp order encoded as a sortable integer
    let bits = v.to_bits() as i64;
    let ordered = bits ^ ((((bits >> 63) as u64) >> 1) as i64);
    Key(ordered)
}

fn unkey(k: &Key) -> f64 {
    let ordered = k.0;
    let bits = ordered ^ ((((ordered >> 63) as u64) >> 1) as i64);
    f64::from_bits(bits as u64)
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<T> {
    pub value: f64,
    pub tag: T,
    pub payload: f64,
    pub distance: f64,
}

/// Stored states keyed by value. Among equally distant candidates the
/// smallest tag wins, so tags encode the tie rule.
#[derive(Debug, Clone)]
pub struct NearestIndex<T> {
    map: BTreeMap<Key, (T, f64)>,
}

impl<T: Ord + Copy> Default for NearestIndex<T> {
    fn default() -> Self {
        Self { map: BTreeMap::new() }
    }
}

impl<T: Ord + Copy> NearestIndex<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Non-finite values are ignored.
    pub fn insert(&mut self, value: f64, tag: T, payload: f64) {
        if !value.is_finite() {
            return;
        }
        self.map
            .entry(key(value))
            .and_modify(|e| {
                if tag < e.0 {
                    *e = (tag, payload);
                }
            })
            .or_insert((tag, payload));
    }

    pub fn nearest(&self, x: f64) -> Option<Hit<T>> {
        if self.map.is_empty() || x.is_nan() {
            return None;
        }
        let k = key(x);
        let below = self.map.range(..=k);
        let above = self.map.range((Bound::Excluded(k), Bound::Unbounded));
        let d_lo = below.clone().next_back().map(|(v, _)| (x - unkey(v)).abs());
        let d_hi = above.clone().next().map(|(v, _)| (x - unkey(v)).abs());
        let dmin = match (d_lo, d_hi) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return None,
        };
        let mut best: Option<Hit<T>> = None;
        let mut consider = |v: &Key, e: &(T, f64)| {
            let value = unkey(v);
            let hit = Hit { value, tag: e.0, payload: e.1, distance: dmin };
            if best.is_none_or(|b| hit.tag < b.tag) {
                best = Some(hit);
            }
        };
        for (v, e) in below.rev().take_while(|(v, _)| (x - unkey(v)).abs() == dmin) {
            consider(v, e);
        }
        for (v, e) in above.take_while(|(v, _)| (x - unkey(v)).abs() == dmin) {
            consider(v, e);
        }
        best
    }
}

/// Linear-scan reference for [`NearestIndex::nearest`].
pub fn nearest_brute<T: Ord + Copy>(candidates: impl IntoIterator<Item = (f64, T, f64)>, x: f64) -> Option<Hit<T>> {
    let mut best: Option<Hit<T>> = None;
    for (value, tag, payload) in candidates {
        if !value.is_finite() {
            continue;
        }
        let distance = (x - value).abs();
        let better = match best {
            None => true,
            Some(b) => distance < b.distance || (distance == b.distance && tag < b.tag),
        };
        if better {
            best = Some(Hit { value, tag, payload, distance });
        }
    }
    best
}

/// Per-node consensus registers: value, paired estimate and originating node.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub holder: Vec<usize>,
    pub round: usize,
}

impl ConsensusState {
    pub fn new(x: &[f64], z: &[f64]) -> Self {
        Self { x: x.to_vec(), z: z.to_vec(), holder: (0..x.len()).collect(), round: 0 }
    }
}

fn consensus_round(g: &WeightedDigraph, s: &ConsensusState, want_max: bool) -> ConsensusState {
    let n = s.x.len();
    let beats = |a: usize, b: usize| {
        let (xa, xb) = (s.x[a], s.x[b]);
        let strictly = if want_max { xa > xb } else { xa < xb };
        strictly || (xa == xb && s.holder[a] < s.holder[b])
    };
    let mut out = ConsensusState { x: vec![0.0; n], z: vec![0.0; n], holder: vec![0; n], round: s.round + 1 };
    for i in 0..n {
        let mut best = i;
        for &j in g.in_neighbors(i) {
            if beats(j, best) {
                best = j;
            }
        }
        out.x[i] = s.x[best];
        out.z[i] = s.z[best];
        out.holder[i] = s.holder[best];
    }
    out
}

/// One synchronous max-consensus round over `N_i ∪ {i}`.
pub fn max_consensus_round(g: &WeightedDigraph, s: &ConsensusState) -> ConsensusState {
    consensus_round(g, s, true)
}

pub fn min_consensus_round(g: &WeightedDigraph, s: &ConsensusState) -> ConsensusState {
    consensus_round(g, s, false)
}

fn settle(g: &WeightedDigraph, mut s: ConsensusState, want_max: bool) -> ConsensusState {
    let cap = g.n();
    while s.round < cap {
        let next = consensus_round(g, &s, want_max);
        let fixed = next.holder == s.holder;
        s = next;
        if fixed {
            break;
        }
    }
    s
}

/// Runs max- and min-consensus on `X(t)` and reports the agreed extremes
/// and their holders.
pub fn consensus_extremes(g: &WeightedDigraph, x: &[f64]) -> Result<Extremes, FlowError> {
    if x.len() != g.n() {
        return Err(FlowError::Length { what: "X", got: x.len(), expected: g.n() });
    }
    if !g.is_strongly_connected() {
        return Err(FlowError::NotStronglyConnected);
    }
    let start = ConsensusState::new(x, &vec![0.0; x.len()]);
    let hi = settle(g, start.clone(), true);
    let lo = settle(g, start, false);
    Ok(Extremes {
        max_x: hi.x[0],
        max_holder: hi.holder[0],
        min_x: lo.x[0],
        min_holder: lo.holder[0],
        rounds: hi.round.max(lo.round),
    })
}

/// `(x̄, z̄, x̲, z̲)` agreed on by every node, plus the round count.
pub fn run_extreme_consensus(g: &WeightedDigraph, x: &[f64], z: &[f64]) -> Result<(f64, f64, f64, f64, usize), FlowError> {
    if z.len() != g.n() {
        return Err(FlowError::Length { what: "Z", got: z.len(), expected: g.n() });
    }
    if x.len() != g.n() {
        return Err(FlowError::Length { what: "X", got: x.len(), expected: g.n() });
    }
    if !g.is_strongly_connected() {
        return Err(FlowError::NotStronglyConnected);
    }
    let start = ConsensusState::new(x, z);
    let hi = settle(g, start.clone(), true);
    let lo = settle(g, start, false);
    for s in [&hi, &lo] {
        debug_assert!(s.holder.iter().all(|&h| h == s.holder[0]));
    }
    Ok((hi.x[0], hi.z[0], lo.x[0], lo.z[0], hi.round.max(lo.round)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn cycle(n: usize) -> WeightedDigraph {
        GraphSpec::Cycle { n, weight: 1.0 }.build().unwrap()
    }

    #[test]
    fn log_sections() {
        let mut log = FlowLog::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(log.t(), 0);
        assert_eq!(log.theta_coords(0).len(), 2);
        assert!(log.estimates().is_empty() && log.controls().is_empty());
        log.record(vec![0.5, 0.5], vec![0.0, 0.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(log.t(), 1);
        assert_eq!(log.x(0), &[1.0, 2.0]);
        assert_eq!(log.x(1), &[3.0, 4.0]);
        assert_eq!(log.z(0), &[0.5, 0.5]);
        assert_eq!(log.theta_coords(1).len(), 2 * 4);
        assert!(log.record(vec![0.0], vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert_eq!(log.t(), 1);
        assert!(FlowLog::new(vec![]).is_err());
    }

    #[test]
    fn local_view_membership() {
        let g = GraphSpec::PathRootSelfloop { n: 3, root_weight: 1.0, arc_weight: 1.0 }.build().unwrap();
        let mut log = FlowLog::new(vec![1.0, 2.0, 3.0]).unwrap();
        log.record(vec![0.0; 3], vec![0.0; 3], vec![4.0, 5.0, 6.0]).unwrap();
        let v = log.local_view(&g, 2);
        let m: Vec<usize> = v.members().map(Member::index).collect();
        assert_eq!(m, vec![1, 2]);
        let nodes: BTreeSet<usize> = v.coords().iter().map(|c| c.node).collect();
        assert_eq!(nodes, BTreeSet::from([1, 2]));
        let root = log.local_view(&g, 0);
        assert_eq!(root.members().map(Member::index).collect::<Vec<_>>(), vec![0]);
        assert_eq!(root.neighbors().count(), 1);
    }

    #[test]
    fn offset_outside_keeps_members() {
        let mut log = FlowLog::new(vec![1.0, 2.0, 3.0]).unwrap();
        log.record(vec![1.0; 3], vec![2.0; 3], vec![4.0, 5.0, 6.0]).unwrap();
        let p = log.with_offset_outside(&[0, 2], 1e6);
        assert_eq!(p.x(1), &[4.0, 1e6 + 5.0, 6.0]);
        assert_eq!(p.u(0), &[2.0, 1e6 + 2.0, 2.0]);
    }

    #[test]
    fn consensus_examples() {
        let g = cycle(3);
        let (xmax, zmax, xmin, zmin, rounds) = run_extreme_consensus(&g, &[2.0, 7.0, 4.0], &[20.0, 70.0, 40.0]).unwrap();
        assert_eq!((xmax, zmax, xmin, zmin), (7.0, 70.0, 2.0, 20.0));
        assert!(rounds <= 3);

        let mut s = ConsensusState::new(&[5.0, 1.0, 3.0], &[50.0, 10.0, 30.0]);
        for _ in 0..3 {
            s = max_consensus_round(&g, &s);
        }
        assert!(s.x.iter().all(|&x| x == 5.0));
        assert!(s.z.iter().all(|&z| z == 50.0));

        let flat = ConsensusState::new(&[1.0; 4], &[0.0; 4]);
        assert_eq!(max_consensus_round(&cycle(4), &flat).holder, vec![0, 0, 1, 2]);

        let (xmax, zmax, _, _, _) = run_extreme_consensus(&g, &[7.0, 1.0, 7.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((xmax, zmax), (7.0, 1.0));

        let path = GraphSpec::PathRootSelfloop { n: 3, root_weight: 1.0, arc_weight: 1.0 }.build().unwrap();
        assert_eq!(run_extreme_consensus(&path, &[1.0; 3], &[1.0; 3]), Err(FlowError::NotStronglyConnected));
    }

    #[test]
    fn single_node_consensus() {
        let one = GraphSpec::SingleSelfloop { n: 1, a11: 1.0 }.build().unwrap();
        let r = run_extreme_consensus(&one, &[3.0], &[9.0]).unwrap();
        assert_eq!((r.0, r.1, r.2, r.3), (3.0, 9.0, 3.0, 9.0));
    }

    #[test]
    fn extreme_history_slots() {
        let mut h = ExtremeHistory::new();
        h.push_states(&Extremes { max_x: 3.0, max_holder: 1, min_x: -1.0, min_holder: 0, rounds: 1 });
        h.push_estimates(&[10.0, 30.0]).unwrap();
        assert_eq!((h.max_z(0), h.min_z(0)), (30.0, 10.0));
        assert!(h.push_estimates(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn key_order_matches_numeric_order() {
        let vals = [-1e300, -2.5, -0.0, 0.0, 1e-300, 3.0, f64::MAX];
        for w in vals.windows(2) {
            assert!(key(w[0]) <= key(w[1]));
            assert_eq!(unkey(&key(w[1])), w[1]);
        }
        assert_eq!(key(-0.0), key(0.0));
    }

    #[test]
    fn nearest_ties() {
        let mut idx = NearestIndex::new();
        idx.insert(1.0, (0usize, 1usize), 10.0);
        idx.insert(3.0, (0, 0), 30.0);
        let h = idx.nearest(2.0).unwrap();
        assert_eq!((h.value, h.tag), (3.0, (0, 0)));
        idx.insert(1.0, (0, 0), 99.0);
        assert_eq!(idx.nearest(2.0).unwrap().payload, 99.0);
        idx.insert(3.0, (1, 0), 0.0);
        assert_eq!(idx.nearest(3.0).unwrap().payload, 30.0);
        assert!(NearestIndex::<usize>::new().nearest(0.0).is_none());
    }

    proptest! {
        #[test]
        fn index_matches_brute(points in prop::collection::vec((-20i32..20, 0usize..5, 0usize..4), 1..60), q in -25i32..25, scale in prop::sample::select(vec![1.0, 0.1, 0.25])) {
            let mut idx = NearestIndex::new();
            // tags are unique in every real index
            let mut seen = std::collections::BTreeSet::new();
            let cands: Vec<(f64, (usize, usize), f64)> = points
                .iter()
                .filter(|&&(_, s, j)| seen.insert((s, j)))
                .map(|&(v, s, j)| (v as f64 * scale, (s, j), (v as f64) + 100.0 * s as f64 + j as f64))
                .collect();
            for &(v, tag, p) in &cands {
                idx.insert(v, tag, p);
            }
            let x = q as f64 * scale * 0.5;
            let a = idx.nearest(x).unwrap();
            let b = nearest_brute(cands.iter().copied(), x).unwrap();
            prop_assert_eq!(a.tag, b.tag);
            prop_assert_eq!(a.value, b.value);
            prop_assert_eq!(a.distance, b.distance);
        }

        #[test]
        fn consensus_is_monotone(x in prop::collection::vec(-5i32..5, 4)) {
            let g = WeightedDigraph::from_rows(&[
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ]).unwrap();
            let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let mut s = ConsensusState::new(&xs, &xs);
            for _ in 0..4 {
                let next = max_consensus_round(&g, &s);
                for i in 0..4 {
                    prop_assert!(next.x[i] >= s.x[i]);
                }
                s = next;
            }
            let m = xs.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(s.x.iter().all(|&v| v == m));
        }

        #[test]
        fn view_containment(n in 1usize..5, steps in 0usize..4, i in 0usize..5) {
            let g = cycle(n);
            let i = i % n;
            let mut log = FlowLog::new(vec![0.0; n]).unwrap();
            for _ in 0..steps {
                log.record(vec![0.0; n], vec![0.0; n], vec![1.0; n]).unwrap();
            }
            let t = log.t();
            let global: BTreeSet<Coord> = log.theta_coords(t).into_iter().collect();
            let next: BTreeSet<Coord> = log.theta_coords(t + 1).into_iter().collect();
            let local: BTreeSet<Coord> = log.local_view(&g, i).coords().into_iter().collect();
            prop_assert!(local.is_subset(&global));
            prop_assert!(global.is_subset(&next));
        }
    }
}
