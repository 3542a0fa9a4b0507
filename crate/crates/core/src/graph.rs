//! Weighted directed interaction graphs.
//!
//! Node `i` is influenced by its in-neighbors `N_i = { j : (j, i) is an arc }`,
//! and the arc `(j, i)` carries the weight `a_ij = A[i][j]`. Arcs are derived
//! from the nonzero pattern of the weight matrix, so the two can never disagree.
//!
//! Indices are 0-based in this API; configuration files and CSV output use
//! 1-based node labels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("weight matrix row {row} has {len} entries, expected {n}")]
    Ragged { row: usize, len: usize, n: usize },
    #[error("weight a[{row}][{col}] is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("invalid canonical graph: {0}")]
    InvalidCanonical(String),
    #[error("cannot parse graph shorthand `{0}` (expected kind:n, e.g. cycle:5)")]
    Shorthand(String),
}

/// Sign classification of the entries of `A_G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    AllNonnegative,
    AllNonpositive,
    Mixed,
}

impl SignPattern {
    pub fn is_uniform(self) -> bool {
        !matches!(self, SignPattern::Mixed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    weights: Vec<f64>,
    in_neighbors: Vec<Vec<usize>>,
    out_neighbors: Vec<Vec<usize>>,
}

impl WeightedDigraph {
    /// Builds a graph from a dense row-major matrix with `rows[i][j] = a_ij`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = rows.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut weights = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::Ragged { row: i, len: row.len(), n });
            }
            for (j, &a) in row.iter().enumerate() {
                if !a.is_finite() {
                    return Err(GraphError::NonFinite { row: i, col: j });
                }
                weights.push(a);
            }
        }
        Ok(Self::from_dense(n, weights))
    }

    fn from_dense(n: usize, weights: Vec<f64>) -> Self {
        let mut in_neighbors = vec![Vec::new(); n];
        let mut out_neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if weights[i * n + j] != 0.0 {
                    in_neighbors[i].push(j);
                    out_neighbors[j].push(i);
                }
            }
        }
        Self { n, weights, in_neighbors, out_neighbors }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `a_ij`, the weight of arc `(j, i)`; zero when the arc is absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Row `i` of `A_G`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `N_i`, sorted ascending. Contains `i` iff there is a self-arc.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    /// Nodes `d` with `(i, d)` an arc, i.e. `i ∈ N_d`. Sorted ascending.
    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_neighbors[i]
    }

    /// All arcs `(j, i)` (tail, head), ordered by head then tail.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| self.in_neighbors[i].iter().map(move |&j| (j, i)))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&a| a == 0.0)
    }

    /// `‖A_G‖∞`: maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖A_G‖♯`: smallest nonzero entry magnitude, 0 for the zero matrix.
    pub fn sharp_metric(&self) -> f64 {
        let m = self
            .weights
            .iter()
            .filter(|&&a| a != 0.0)
            .map(|a| a.abs())
            .fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            m
        } else {
            0.0
        }
    }

    pub fn sign_pattern(&self) -> SignPattern {
        let any_pos = self.weights.iter().any(|&a| a > 0.0);
        let any_neg = self.weights.iter().any(|&a| a < 0.0);
        match (any_pos, any_neg) {
            (_, false) => SignPattern::AllNonnegative,
            (false, true) => SignPattern::AllNonpositive,
            (true, true) => SignPattern::Mixed,
        }
    }

    /// Every node reaches every other node along arcs. Self-arcs play no role.
    pub fn is_strongly_connected(&self) -> bool {
        let reach = |adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(&self.out_neighbors) && reach(&self.in_neighbors)
    }

    /// `‖A‖∞` for an arbitrary square matrix given row-major.
    pub(crate) fn matrix_inf_norm(n: usize, m: &[f64]) -> f64 {
        (0..n)
            .map(|i| m[i * n..(i + 1) * n].iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// True when this is the unit-weight directed cycle `1 → 2 → … → n → 1`
    /// (for `n = 1`, a unit self-loop).
    pub fn is_unit_cycle(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            let pred = (i + n - 1) % n;
            self.in_neighbors[i] == [pred] && self.weight(i, pred) == 1.0
        })
    }

    /// True when node 1's only in-neighbor is itself with `a_11 = 1`.
    /// Holds for the rooted path and for the single-self-loop network.
    pub fn has_unit_root_selfloop(&self) -> bool {
        self.in_neighbors[0] == [0] && self.weight(0, 0) == 1.0
    }
}

/// Canonical constructions used by the stabilization and impossibility results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    /// Directed cycle `1 → 2 → … → n → 1`, every arc weighted `weight`.
    Cycle {
        n: usize,
        #[serde(default = "one")]
        weight: f64,
    },
    /// Directed path `1 → 2 → … → n` plus a self-arc at the root.
    PathRootSelfloop {
        n: usize,
        #[serde(default = "one")]
        root_weight: f64,
        #[serde(default = "one")]
        arc_weight: f64,
    },
    /// `n` nodes, the only arc being the self-arc at node 1.
    SingleSelfloop {
        n: usize,
        #[serde(default = "one")]
        a11: f64,
    },
    /// Explicit weight matrix, `weights[i][j] = a_ij`.
    Custom { weights: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

impl GraphSpec {
    pub fn build(&self) -> Result<WeightedDigraph, GraphError> {
        build_canonical(self)
    }

    /// Parses the `kind:n` shorthand accepted on the command line
    /// (`cycle:5`, `path:4`, `selfloop:3`), all with unit weights.
    pub fn parse_shorthand(s: &str) -> Result<Self, GraphError> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| GraphError::Shorthand(s.to_string()))?;
        let n: usize = n.trim().parse().map_err(|_| GraphError::Shorthand(s.to_string()))?;
        match kind.trim() {
            "cycle" => Ok(GraphSpec::Cycle { n, weight: 1.0 }),
            "path" | "path_root_selfloop" => Ok(GraphSpec::PathRootSelfloop {
                n,
                root_weight: 1.0,
                arc_weight: 1.0,
            }),
            "selfloop" | "single_selfloop" => Ok(GraphSpec::SingleSelfloop { n, a11: 1.0 }),
            _ => Err(GraphError::Shorthand(s.to_string())),
        }
    }
}

pub fn build_canonical(spec: &GraphSpec) -> Result<WeightedDigraph, GraphError> {
    let nonzero = |w: f64, what: &str| {
        if w == 0.0 || !w.is_finite() {
            Err(GraphError::InvalidCanonical(format!("{what} must be finite and nonzero")))
        } else {
            Ok(w)
        }
    };
    let size = |n: usize| {
        if n == 0 {
            Err(GraphError::Empty)
        } else {
            Ok(n)
        }
    };
    match *spec {
        GraphSpec::Cycle { n, weight } => {
            let n = size(n)?;
            let w = nonzero(weight, "cycle weight")?;
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + (i + n - 1) % n] = w;
            }
            Ok(WeightedDigraph::from_dense(n, m))
        }
        GraphSpec::PathRootSelfloop { n, root_weight, arc_weight } => {
            let n = size(n)?;
            let r = nonzero(root_weight, "root weight")?;
            let w = nonzero(arc_weight, "arc weight")?;
            let mut m = vec![0.0; n * n];
            m[0] = r;
            for i in 1..n {
                m[i * n + i - 1] = w;
            }
            Ok(WeightedDigraph::from_dense(n, m))
        }
        GraphSpec::SingleSelfloop { n, a11 } => {
            let n = size(n)?;
            let a = nonzero(a11, "a11")?;
            let mut m = vec![0.0; n * n];
            m[0] = a;
            Ok(WeightedDigraph::from_dense(n, m))
        }
        GraphSpec::Custom { ref weights } => WeightedDigraph::from_rows(weights),
    }
}
