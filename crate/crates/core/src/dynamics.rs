//! Closed-loop network dynamics
//! `x_i(t+1) = Σ_{j∈N_i} a_ij f(x_j(t)) + u_i(t) + w_i(t)`,
//! bounded disturbance generators, and the two estimate sources for
//! `z_i(t)`: direct noisy observation and the matrix-inverse observer.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::function_space::Nonlinearity;
use crate::graph::WeightedDigraph;

/// Condition-number limit above which the inverse observer is refused.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;
/// Default divergence guard on `max_i |x_i(t)|`.
pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("{what} has length {got}, expected {expected}")]
    Length { what: &'static str, got: usize, expected: usize },
    #[error("control input u_{node} is not finite")]
    NonFiniteControl { node: usize },
    #[error("adjacency matrix is singular; use direct observation instead")]
    Singular,
    #[error("adjacency matrix condition estimate {cond:e} exceeds {limit:e}; use direct observation instead")]
    IllConditioned { cond: f64, limit: f64 },
    #[error("invalid disturbance: {0}")]
    Disturbance(String),
    #[error("invalid observation: {0}")]
    Observation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub t: usize,
    pub x: Vec<f64>,
}

impl PlantState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { t: 0, x }
    }

    pub fn sup_norm(&self) -> f64 {
        self.x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Non-finite, or some coordinate beyond `cap` in magnitude.
    pub fn exceeds(&self, cap: f64) -> bool {
        self.x.iter().any(|v| !v.is_finite() || v.abs() > cap)
    }
}

/// Right-hand side for a single node. Both the plant step and the
/// adversary's probe go through here so they round identically.
pub fn node_update<F: Nonlinearity + ?Sized>(
    graph: &WeightedDigraph,
    f: &F,
    x: &[f64],
    i: usize,
    u_i: f64,
    w_i: f64,
) -> f64 {
    let drive: f64 = graph
        .in_neighbors(i)
        .iter()
        .map(|&j| graph.weight(i, j) * f.eval(x[j]))
        .sum();
    drive + u_i + w_i
}

pub fn step<F: Nonlinearity + ?Sized>(
    graph: &WeightedDigraph,
    f: &F,
    state: &PlantState,
    u: &[f64],
    w: &[f64],
) -> Result<PlantState, DynamicsError> {
    let n = graph.n();
    check_len("state", state.x.len(), n)?;
    check_len("control", u.len(), n)?;
    check_len("disturbance", w.len(), n)?;
    if let Some(node) = u.iter().position(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFiniteControl { node });
    }
    let x = (0..n).map(|i| node_update(graph, f, &state.x, i, u[i], w[i])).collect();
    Ok(PlantState { t: state.t + 1, x })
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), DynamicsError> {
    if got == expected {
        Ok(())
    } else {
        Err(DynamicsError::Length { what, got, expected })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceGenerator {
    Zero,
    /// Independent uniform draws on `[−w_*, w_*]`.
    SeededUniform,
    /// Every coordinate fixed at `+w_*` or `−w_*`.
    ConstantSign { positive: bool },
    /// Externally scripted sequence: row `t` is `W(t)`; zero past the end.
    AdversaryHook { values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub w_star: f64,
    pub generator: DisturbanceGenerator,
    #[serde(default)]
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn zero(w_star: f64) -> Self {
        Self { w_star, generator: DisturbanceGenerator::Zero, seed: 0 }
    }

    pub fn uniform(w_star: f64, seed: u64) -> Self {
        Self { w_star, generator: DisturbanceGenerator::SeededUniform, seed }
    }

    pub fn validate(&self, n: usize) -> Result<(), DynamicsError> {
        if !(self.w_star > 0.0 && self.w_star.is_finite()) {
            return Err(DynamicsError::Disturbance("w_star must be positive and finite".into()));
        }
        if let DisturbanceGenerator::AdversaryHook { values } = &self.generator {
            for (t, row) in values.iter().enumerate() {
                if row.len() != n {
                    return Err(DynamicsError::Disturbance(format!("row {t} has {} entries, expected {n}", row.len())));
                }
                if row.iter().any(|v| !(v.abs() <= self.w_star)) {
                    return Err(DynamicsError::Disturbance(format!("row {t} exceeds the bound w_star")));
                }
            }
        }
        Ok(())
    }

    pub fn source(&self, n: usize) -> Result<DisturbanceSource, DynamicsError> {
        self.validate(n)?;
        Ok(DisturbanceSource { spec: self.clone(), n, t: 0, rng: ChaCha8Rng::seed_from_u64(self.seed) })
    }
}

/// Stateful emitter of `W(0), W(1), …`.
#[derive(Debug, Clone)]
pub struct DisturbanceSource {
    spec: DisturbanceSpec,
    n: usize,
    t: usize,
    rng: ChaCha8Rng,
}

impl DisturbanceSource {
    pub fn next_vector(&mut self) -> Vec<f64> {
        let w = self.spec.w_star;
        let out = match &self.spec.generator {
            DisturbanceGenerator::Zero => vec![0.0; self.n],
            DisturbanceGenerator::SeededUniform => (0..self.n).map(|_| self.rng.gen_range(-w..=w)).collect(),
            DisturbanceGenerator::ConstantSign { positive } => vec![if *positive { w } else { -w }; self.n],
            DisturbanceGenerator::AdversaryHook { values } => {
                values.get(self.t).cloned().unwrap_or_else(|| vec![0.0; self.n])
            }
        };
        self.t += 1;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ObservationSpec {
    /// `z_i(t) = f(x_i(t)) + e_i`, `e_i` uniform on `[−d0, d0]`.
    Direct {
        d0: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `Z(t) = A_G⁻¹ (X(t+1) − U(t))`.
    MatrixInverse {
        #[serde(default = "default_condition_limit")]
        condition_limit: f64,
    },
}

fn default_condition_limit() -> f64 {
    DEFAULT_CONDITION_LIMIT
}

impl ObservationSpec {
    pub fn exact() -> Self {
        ObservationSpec::Direct { d0: 0.0, seed: 0 }
    }
}

/// Direct observation with seeded bounded noise.
#[derive(Debug, Clone)]
pub struct DirectObserver {
    d0: f64,
    rng: ChaCha8Rng,
}

impl DirectObserver {
    pub fn new(d0: f64, seed: u64) -> Result<Self, DynamicsError> {
        if !(d0 >= 0.0 && d0.is_finite()) {
            return Err(DynamicsError::Observation("d0 must be non-negative and finite".into()));
        }
        Ok(Self { d0, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn observe<F: Nonlinearity + ?Sized>(&mut self, f: &F, x: &[f64]) -> Vec<f64> {
        let d0 = self.d0;
        x.iter()
            .map(|&xi| {
                let e = if d0 > 0.0 { self.rng.gen_range(-d0..=d0) } else { 0.0 };
                f.eval(xi) + e
            })
            .collect()
    }
}

/// Inverse-based observer; the inverse is computed once per run.
#[derive(Debug, Clone)]
pub struct MatrixInverseObserver {
    n: usize,
    inverse: Vec<f64>,
    inverse_inf_norm: f64,
    condition: f64,
}

impl MatrixInverseObserver {
    pub fn new(graph: &WeightedDigraph, condition_limit: f64) -> Result<Self, DynamicsError> {
        let n = graph.n();
        let a = DMatrix::from_fn(n, n, |i, j| graph.weight(i, j));
        let inv = a.try_inverse().ok_or(DynamicsError::Singular)?;
        let inverse: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| inv[(i, j)]).collect();
        if inverse.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::Singular);
        }
        let inverse_inf_norm = WeightedDigraph::matrix_inf_norm(n, &inverse);
        let condition = graph.inf_norm() * inverse_inf_norm;
        if !(condition <= condition_limit) {
            return Err(DynamicsError::IllConditioned { cond: condition, limit: condition_limit });
        }
        Ok(Self { n, inverse, inverse_inf_norm, condition })
    }

    /// `‖A_G⁻¹‖∞`; the estimate error is at most this times `w_*`.
    pub fn inverse_inf_norm(&self) -> f64 {
        self.inverse_inf_norm
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn estimate(&self, x_next: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let rhs: Vec<f64> = x_next.iter().zip(u).map(|(x, u)| x - u).collect();
        (0..n)
            .map(|i| self.inverse[i * n..(i + 1) * n].iter().zip(&rhs).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Producer of `Z(t)` for a run.
#[derive(Debug, Clone)]
pub enum Observer {
    Direct(DirectObserver),
    Inverse(MatrixInverseObserver),
}

impl Observer {
    pub fn new(spec: &ObservationSpec, graph: &WeightedDigraph) -> Result<Self, DynamicsError> {
        match *spec {
            ObservationSpec::Direct { d0, seed } => Ok(Observer::Direct(DirectObserver::new(d0, seed)?)),
            ObservationSpec::MatrixInverse { condition_limit } => {
                Ok(Observer::Inverse(MatrixInverseObserver::new(graph, condition_limit)?))
            }
        }
    }

    /// `Z(t)`, available once `X(t+1)` has been produced.
    pub fn observe<F: Nonlinearity + ?Sized>(&mut self, f: &F, x: &[f64], x_next: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Observer::Direct(d) => d.observe(f, x),
            Observer::Inverse(m) => m.estimate(x_next, u),
        }
    }

    /// Effective `D_0` for this observer given the disturbance bound.
    pub fn estimate_bound(&self, w_star: f64) -> f64 {
        match self {
            Observer::Direct(d) => d.d0(),
            Observer::Inverse(m) => m.inverse_inf_norm() * w_star,
        }
    }
}

/// Immutable description of one plant.
#[derive(Debug, Clone)]
pub struct PlantModel<F> {
    pub graph: WeightedDigraph,
    pub f: F,
    pub disturbance: DisturbanceSpec,
    pub observation: ObservationSpec,
}

impl<F: Nonlinearity> PlantModel<F> {
    pub fn step(&self, state: &PlantState, u: &[f64], w: &[f64]) -> Result<PlantState, DynamicsError> {
        step(&self.graph, &self.f, state, u, w)
    }
}
