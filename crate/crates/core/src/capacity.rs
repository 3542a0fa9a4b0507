//! Sequence recursions behind the capacity results: the scalar two-sequence
//! recursion and its critical gain `3/2 + √2`, the coupled recursion that
//! defines `‖A‖†`, a bisection estimate of `‖A‖†`, and threshold sweeps of
//! the closed loop over the quasi-norm bound `L`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedDigraph;
use crate::harness::{run_experiment, ExperimentConfig, Verdict};

/// Tail increment below which a finite run counts as summable.
pub const SUMMABLE_TOL: f64 = 1e-9;
/// Magnitude treated as numerical blow-up.
pub const OVERFLOW: f64 = 1e300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("gain M must be positive and finite, got {0}")]
    BadGain(f64),
    #[error("horizon must be at least 10 steps, got {0}")]
    BadHorizon(usize),
    #[error("omega must be positive and finite, got {0}")]
    BadOmega(f64),
    #[error("bracket [{low}, {high}] is inverted or non-finite")]
    BadBracket { low: f64, high: f64 },
    #[error("bracket low {low} is below the floor 1/‖A‖∞ = {floor}")]
    BelowFloor { low: f64, floor: f64 },
    #[error("sweep run at L = {l} failed: {message}")]
    Sweep { l: f64, message: String },
}

/// `inf_{ξ>1} (ξ² − ξ/2)/(ξ − 1)` and its minimiser, by golden-section search.
pub fn xie_guo_constant() -> (f64, f64) {
    let g = |xi: f64| (xi * xi - xi / 2.0) / (xi - 1.0);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.0 + 1e-6, 10.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-12 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let xi = (a + b) / 2.0;
    (g(xi), xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumVerdict {
    Summable,
    Diverging,
}

/// How the inequalities are turned into an update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Lemma2Mode {
    /// `p` meets its bound with equality, `q ≡ 0`. This is the extremal
    /// trajectory whose critical gain is `3/2 + √2`.
    Equality,
    /// Both `p` and `q` meet the bound.
    Symmetric,
    /// `p` and `q` are independent seeded fractions in `[0, 1]` of the bound.
    SeededSlack { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Run {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `Σ_{s≤t}(p_s + q_s)`.
    pub partial_sums: Vec<f64>,
    pub verdict: SumVerdict,
    pub overflowed: bool,
}

fn tail_verdict(partial: &[f64], overflowed: bool) -> SumVerdict {
    if overflowed || partial.is_empty() {
        return SumVerdict::Diverging;
    }
    let t = partial.len();
    let from = t - (t / 10).max(1);
    let base = if from == 0 { 0.0 } else { partial[from - 1] };
    let inc = partial[t - 1] - base;
    if inc.is_finite() && inc < SUMMABLE_TOL {
        SumVerdict::Summable
    } else {
        SumVerdict::Diverging
    }
}

/// Iterates `p_{t+1} = (M max{max p, max q, ρ} − ρ/2 − ½Σ(p+q) + ω)^+`
/// (and the same bound for `q`) for `t = 0..T`.
pub fn simulate_lemma2(m: f64, omega: f64, rho: f64, mode: Lemma2Mode, horizon: usize) -> Result<Lemma2Run, CapacityError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(CapacityError::BadGain(m));
    }
    if horizon < 10 {
        return Err(CapacityError::BadHorizon(horizon));
    }
    let mut rng = match mode {
        Lemma2Mode::SeededSlack { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let (mut p, mut q, mut partial) = (Vec::with_capacity(horizon), Vec::with_capacity(horizon), Vec::with_capacity(horizon));
    let (mut peak, mut sum) = (rho, 0.0);
    let mut overflowed = false;
    for _ in 0..horizon {
        let arg = (m * peak - rho / 2.0 - sum / 2.0 + omega).max(0.0);
        let (pn, qn) = match mode {
            Lemma2Mode::Equality => (arg, 0.0),
            Lemma2Mode::Symmetric => (arg, arg),
            Lemma2Mode::SeededSlack { .. } => {
                let r = rng.as_mut().expect("seeded");
                (arg * r.gen::<f64>(), arg * r.gen::<f64>())
            }
        };
        peak = peak.max(pn).max(qn);
        sum += pn + qn;
        p.push(pn);
        q.push(qn);
        partial.push(sum);
        if !(sum.is_finite() && sum < OVERFLOW) {
            overflowed = true;
            break;
        }
    }
    let verdict = tail_verdict(&partial, overflowed);
    Ok(Lemma2Run { p, q, partial_sums: partial, verdict, overflowed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaggerRun {
    /// `p[i][t]`, `t = 0` standing for `p^i_1`.
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// `Σ_i Σ_{s≤t}(p^i_s + q^i_s)`.
    pub partial_sums: Vec<f64>,
    pub verdict: SumVerdict,
    pub overflowed: bool,
}

/// Equality-mode iteration of the coupled recursion
/// `p^i_{t+1} = (M Σ_{j∈N_i} |a_ij| max_{s≤t}{p^j_s, q^j_s} + ω − Σ_{s≤t} p^i_s)^+`,
/// started from the empty history so that `p^i_1 = q^i_1 = ω`.
pub fn simulate_dagger_recursion(g: &WeightedDigraph, m: f64, omega: f64, horizon: usize) -> Result<DaggerRun, CapacityError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(CapacityError::BadGain(m));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CapacityError::BadOmega(omega));
    }
    if horizon < 10 {
        return Err(CapacityError::BadHorizon(horizon));
    }
    let n = g.n();
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| g.in_neighbors(i).iter().map(|&j| (j, g.weight(i, j).abs())).collect()).collect();
    let mut peak = vec![0.0f64; n];
    let mut sp = vec![0.0f64; n];
    let mut sq = vec![0.0f64; n];
    let mut p = vec![Vec::with_capacity(horizon); n];
    let mut q = vec![Vec::with_capacity(horizon); n];
    let mut partial = Vec::with_capacity(horizon);
    let mut total = 0.0;
    let mut overflowed = false;
    for _ in 0..horizon {
        let drive: Vec<f64> = rows.iter().map(|r| m * r.iter().map(|&(j, a)| a * peak[j]).sum::<f64>() + omega).collect();
        for i in 0..n {
            let pn = (drive[i] - sp[i]).max(0.0);
            let qn = (drive[i] - sq[i]).max(0.0);
            sp[i] += pn;
            sq[i] += qn;
            total += pn + qn;
            p[i].push(pn);
            q[i].push(qn);
        }
        for i in 0..n {
            peak[i] = peak[i].max(*p[i].last().unwrap()).max(*q[i].last().unwrap());
        }
        partial.push(total);
        if !(total.is_finite() && total < OVERFLOW) {
            overflowed = true;
            break;
        }
    }
    let verdict = tail_verdict(&partial, overflowed);
    Ok(DaggerRun { p, q, partial_sums: partial, verdict, overflowed })
}

pub const DEFAULT_OMEGA_GRID: [f64; 3] = [0.1, 1.0, 10.0];
pub const DEFAULT_DAGGER_HORIZON: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaggerEstimate {
    pub estimate: f64,
    pub m_low: f64,
    pub m_high: f64,
    pub floor: f64,
    pub floor_verified: bool,
    pub saturated: bool,
    pub horizon: usize,
    pub omega_grid: Vec<f64>,
    pub iterations: usize,
    pub note: &'static str,
}

const DAGGER_NOTE: &str = "heuristic: finite-horizon summability test over a finite omega grid; not a certified supremum";

fn summable_for_all(g: &WeightedDigraph, m: f64, horizon: usize, omegas: &[f64]) -> Result<bool, CapacityError> {
    for &w in omegas {
        if simulate_dagger_recursion(g, m, w, horizon)?.verdict != SumVerdict::Summable {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `1/‖A‖∞`, or `+∞` for the zero matrix.
pub fn dagger_floor(g: &WeightedDigraph) -> f64 {
    1.0 / g.inf_norm()
}

/// Bisection for the largest `M` whose recursion is summable for every `ω`
/// on the grid. `bracket.0` defaults to `1/‖A‖∞` and is never lowered.
pub fn estimate_dagger(g: &WeightedDigraph, bracket: Option<(f64, f64)>, horizon: usize, omega_grid: &[f64]) -> Result<DaggerEstimate, CapacityError> {
    let floor = dagger_floor(g);
    let (low, high) = match bracket {
        Some(b) => b,
        None if floor.is_finite() => (floor, floor * 20.0),
        None => (1.0, 20.0),
    };
    if !(low.is_finite() && high.is_finite() && low < high && low > 0.0) {
        return Err(CapacityError::BadBracket { low, high });
    }
    if floor.is_finite() && low < floor {
        return Err(CapacityError::BelowFloor { low, floor });
    }
    for &w in omega_grid {
        if !(w > 0.0 && w.is_finite()) {
            return Err(CapacityError::BadOmega(w));
        }
    }
    let floor_verified = summable_for_all(g, low, horizon, omega_grid)?;
    let (mut lo, mut hi) = (low, high);
    let mut iterations = 0;
    let saturated = summable_for_all(g, hi, horizon, omega_grid)?;
    if saturated {
        lo = hi;
    } else {
        while hi - lo > 1e-6 * lo.max(1.0) && iterations < 60 {
            let mid = 0.5 * (lo + hi);
            if summable_for_all(g, mid, horizon, omega_grid)? {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
    }
    Ok(DaggerEstimate {
        estimate: lo,
        m_low: lo,
        m_high: hi,
        floor,
        floor_verified,
        saturated,
        horizon,
        omega_grid: omega_grid.to_vec(),
        iterations,
        note: DAGGER_NOTE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    #[serde(rename = "L")]
    pub l: f64,
    pub trials: usize,
    pub stabilized: bool,
    pub diverged: bool,
    pub sup_state: f64,
    pub bound: Option<f64>,
    pub adversary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Largest `L` at which every trial stabilised.
    pub last_stabilized: Option<f64>,
    /// Smallest `L` at which some trial diverged.
    pub first_diverged: Option<f64>,
    pub note: &'static str,
}

/// Re-runs `base` with the plant slope set to each `L` and `trials` seeds per
/// point. With `adversary` set, points with `L ≥ 4/‖A‖♯` use the adaptive
/// adversarial plant instead.
pub fn threshold_sweep(base: &ExperimentConfig, ls: &[f64], trials: usize, adversary: bool) -> Result<SweepReport, CapacityError> {
    let sharp = base.graph.build().map(|g| g.sharp_metric()).unwrap_or(0.0);
    let trials = trials.max(1);
    let points: Result<Vec<SweepPoint>, CapacityError> = ls
        .par_iter()
        .map(|&l| {
            let adversarial = adversary && sharp > 0.0 && l >= 4.0 / sharp;
            let mut stabilized = true;
            let mut diverged = false;
            let mut sup_state: f64 = 0.0;
            let mut bound = None;
            for k in 0..trials {
                let mut cfg = base.clone();
                cfg.function = base.function.with_slope(l);
                cfg.seed = Some(base.seed.unwrap_or(0).wrapping_add(k as u64));
                if adversarial {
                    cfg.adversary = Some(Default::default());
                }
                let out = run_experiment(&cfg).map_err(|e| CapacityError::Sweep { l, message: e.to_string() })?;
                let s = &out.summary;
                stabilized &= s.verdict == Verdict::Stabilized;
                diverged |= s.verdict == Verdict::Diverged;
                sup_state = sup_state.max(s.sup_state);
                bound = s.bound;
            }
            Ok(SweepPoint { l, trials, stabilized, diverged, sup_state, bound, adversary: adversarial })
        })
        .collect();
    let points = points?;
    let last_stabilized = points.iter().filter(|p| p.stabilized).map(|p| p.l).fold(None, |a: Option<f64>, l| Some(a.map_or(l, |a| a.max(l))));
    let first_diverged = points.iter().filter(|p| p.diverged).map(|p| p.l).fold(None, |a: Option<f64>, l| Some(a.map_or(l, |a| a.min(l))));
    Ok(SweepReport { points, last_stabilized, first_diverged, note: "empirical finite-horizon illustration" })
}
