//! Plant nonlinearities and their quasi-norm certificates.
//!
//! The quasi-norm `‖f‖_q = lim_{α→∞} sup |f(x) − f(y)| / (|x − y| + α)` is
//! computed analytically per family; it cannot be recovered from samples.
//! Sampled checks of the Lipschitz-style inequality
//! `|f(x) − f(y)| ≤ (L + η)|x − y| + c` are the numerical fallback.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("quasi-norm is not computable for tabulated functions")]
    Unsupported,
    #[error("W_f(r) requires r > L (got r = {r}, L = {l})")]
    RadiusBelowNorm { r: f64, l: f64 },
    #[error("invalid function: {0}")]
    Invalid(String),
}

/// Anything that can play the role of the unknown `f: ℝ → ℝ`.
pub trait Nonlinearity {
    fn eval(&self, x: f64) -> f64;
}

impl<F: Nonlinearity + ?Sized> Nonlinearity for &F {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
}

/// Continuous piecewise-linear function given by its breakpoints.
///
/// Between adjacent knots the function interpolates linearly; left of the
/// first knot it continues with derivative `left_slope`, right of the last
/// with `right_slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self, FunctionError> {
        if knots.is_empty() {
            return Err(FunctionError::Invalid("piecewise-linear function needs a knot".into()));
        }
        if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(FunctionError::Invalid("knot abscissae must be strictly increasing".into()));
        }
        let finite = knots.iter().all(|(x, v)| x.is_finite() && v.is_finite());
        if !finite || !left_slope.is_finite() || !right_slope.is_finite() {
            return Err(FunctionError::Invalid("knots and slopes must be finite".into()));
        }
        Ok(Self { knots, left_slope, right_slope })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    /// Slopes of the interior segments, left to right.
    pub fn segment_slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }
}

impl Nonlinearity for PiecewiseLinear {
    fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let (x0, v0) = k[0];
        let (xl, vl) = k[k.len() - 1];
        if x <= x0 {
            return v0 + self.left_slope * (x - x0);
        }
        if x >= xl {
            return vl + self.right_slope * (x - xl);
        }
        // first knot strictly right of x
        let hi = k.partition_point(|&(kx, _)| kx <= x);
        let (xa, va) = k[hi - 1];
        let (xb, vb) = k[hi];
        if x == xa {
            return va;
        }
        va + (vb - va) * (x - xa) / (xb - xa)
    }
}

/// Sample table with linear interpolation and constant extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, FunctionError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(FunctionError::Invalid("table needs matching, non-empty xs and ys".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FunctionError::Invalid("table abscissae must be strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }
}

impl Nonlinearity for Tabulated {
    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let hi = self.xs.partition_point(|&kx| kx <= x);
        let (xa, xb) = (self.xs[hi - 1], self.xs[hi]);
        let (ya, yb) = (self.ys[hi - 1], self.ys[hi]);
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantFunction {
    /// `f(x) = a x + b`
    Linear {
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// `f(x) = a x + b + amplitude · sin(frequency · x)`
    BoundedPerturbedLinear {
        a: f64,
        #[serde(default)]
        b: f64,
        amplitude: f64,
        frequency: f64,
    },
    PiecewiseLinear(PiecewiseLinear),
    CustomTabulated(Tabulated),
}

impl Nonlinearity for PlantFunction {
    fn eval(&self, x: f64) -> f64 {
        match self {
            PlantFunction::Linear { a, b } => a * x + b,
            PlantFunction::BoundedPerturbedLinear { a, b, amplitude, frequency } => {
                a * x + b + amplitude * (frequency * x).sin()
            }
            PlantFunction::PiecewiseLinear(p) => p.eval(x),
            PlantFunction::CustomTabulated(t) => t.eval(x),
        }
    }
}

impl PlantFunction {
    pub fn validate(&self) -> Result<(), FunctionError> {
        let finite = match self {
            PlantFunction::Linear { a, b } => a.is_finite() && b.is_finite(),
            PlantFunction::BoundedPerturbedLinear { a, b, amplitude, frequency } => {
                [a, b, amplitude, frequency].iter().all(|v| v.is_finite())
            }
            // constructors already validated these
            PlantFunction::PiecewiseLinear(p) => PiecewiseLinear::new(p.knots.clone(), p.left_slope, p.right_slope).is_ok(),
            PlantFunction::CustomTabulated(t) => Tabulated::new(t.xs.clone(), t.ys.clone()).is_ok(),
        };
        if finite {
            Ok(())
        } else {
            Err(FunctionError::Invalid("function parameters must be finite and well formed".into()))
        }
    }

    /// Same family with its linear slope replaced; used by threshold sweeps.
    pub fn with_slope(&self, slope: f64) -> PlantFunction {
        match *self {
            PlantFunction::Linear { b, .. } => PlantFunction::Linear { a: slope, b },
            PlantFunction::BoundedPerturbedLinear { b, amplitude, frequency, .. } => {
                PlantFunction::BoundedPerturbedLinear { a: slope, b, amplitude, frequency }
            }
            _ => PlantFunction::Linear { a: slope, b: 0.0 },
        }
    }
}

/// Exact quasi-norm for the analytic families.
pub fn quasi_norm(f: &PlantFunction) -> Result<f64, FunctionError> {
    match f {
        PlantFunction::Linear { a, .. } | PlantFunction::BoundedPerturbedLinear { a, .. } => Ok(a.abs()),
        PlantFunction::PiecewiseLinear(p) => Ok(p.left_slope.abs().max(p.right_slope.abs())),
        PlantFunction::CustomTabulated(_) => Err(FunctionError::Unsupported),
    }
}

/// A witness set for `|f(x) − f(y)| ≤ (L + η)|x − y| + c`.
///
/// `pairs` are explicit `(η, c)` witnesses. `uniform_c`, when present, is a
/// constant that witnesses the inequality for every `η > 0`; `uniform_exact`
/// says whether it is the true infimum or only an upper estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiNormCertificate {
    pub l: f64,
    pub pairs: Vec<(f64, f64)>,
    pub uniform_c: Option<f64>,
    pub uniform_exact: bool,
}

impl QuasiNormCertificate {
    pub fn tabulated(l: f64, pairs: Vec<(f64, f64)>) -> Self {
        Self { l, pairs, uniform_c: None, uniform_exact: false }
    }

    /// Analytic certificate for the families with a known quasi-norm.
    pub fn for_function(f: &PlantFunction) -> Result<Self, FunctionError> {
        let l = quasi_norm(f)?;
        let (c, exact) = match f {
            PlantFunction::Linear { .. } => (0.0, true),
            PlantFunction::BoundedPerturbedLinear { amplitude, .. } => (2.0 * amplitude.abs(), false),
            PlantFunction::PiecewiseLinear(p) => {
                // |f(y) − f(x)| ≤ ∫|f'| ≤ L|y − x| + Σ (|s_k| − L)^+ · len_k
                let excess: f64 = p
                    .knots
                    .windows(2)
                    .map(|w| {
                        let len = w[1].0 - w[0].0;
                        let slope = ((w[1].1 - w[0].1) / len).abs();
                        (slope - l).max(0.0) * len
                    })
                    .sum();
                (excess, excess == 0.0)
            }
            PlantFunction::CustomTabulated(_) => unreachable!("quasi_norm rejects tabulated"),
        };
        Ok(Self { l, pairs: Vec::new(), uniform_c: Some(c), uniform_exact: exact })
    }
}

/// Value of a `W_f(r)` query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WfBound {
    pub value: f64,
    /// `false` when `value` is only an upper estimate of the infimum.
    pub exact: bool,
}

/// `W_f(r) = inf { c : L + η < r, (η, c) witnesses the inequality }`.
///
/// Returns `+∞` (inexact) if no stored witness qualifies.
pub fn w_f_bound(cert: &QuasiNormCertificate, r: f64) -> Result<WfBound, FunctionError> {
    if !(r > cert.l) {
        return Err(FunctionError::RadiusBelowNorm { r, l: cert.l });
    }
    let from_pairs = cert
        .pairs
        .iter()
        .filter(|&&(eta, _)| eta > 0.0 && cert.l + eta < r)
        .map(|&(_, c)| c)
        .fold(f64::INFINITY, f64::min);
    match cert.uniform_c {
        Some(c) if c <= from_pairs => Ok(WfBound { value: c, exact: cert.uniform_exact }),
        _ => Ok(WfBound { value: from_pairs, exact: false }),
    }
}

/// Deterministic grid of `(x, y)` pairs for sampled inequality checks.
///
/// Half of the pairs are near (`|x − y| ≤ 1`), half are far (independent
/// uniform draws over `[−half_width, half_width]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub pairs: usize,
    pub half_width: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { pairs: 10_000, half_width: 1e3, seed: 0x5eed }
    }
}

impl SampleSpec {
    pub fn generate(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let w = self.half_width;
        (0..self.pairs)
            .map(|k| {
                let x = rng.gen_range(-w..=w);
                let y = if k % 2 == 0 {
                    x + rng.gen_range(-1.0..=1.0)
                } else {
                    rng.gen_range(-w..=w)
                };
                (x, y)
            })
            .collect()
    }
}

/// Checks `|f(x) − f(y)| ≤ (L + η)|x − y| + c` on every sampled pair, up to
/// a rounding allowance of `1e-12` relative to the magnitudes involved.
pub fn check_eq5<F: Nonlinearity + ?Sized>(f: &F, l: f64, eta: f64, c: f64, sample: &SampleSpec) -> bool {
    sample.generate().into_iter().all(|(x, y)| {
        let (fx, fy) = (f.eval(x), f.eval(y));
        let lhs = (fx - fy).abs();
        let rhs = (l + eta) * (x - y).abs() + c;
        let slack = 1e-12 * (1.0 + fx.abs() + fy.abs());
        lhs <= rhs + slack
    })
}
