//! Adaptive FIR estimators: LMS, LAE (sign error), and their reweighted-L1
//! penalized variants RL1-LMS and RL1-LAE.
//!
//! All four share the same shape: given a regressor `x(n)` (the N most recent
//! input samples) and an observation `d(n)`, compute the prior error
//!
//! ```text
//! e(n) = d(n) - x^T(n) w(n)
//! ```
//!
//! and update the weight vector:
//!
//! ```text
//! LMS:      w(n+1) = w(n) + mu * e(n) * x(n)
//! LAE:      w(n+1) = w(n) + mu * sgn(e(n)) * x(n)
//! RL1-LMS:  w(n+1) = w(n) + mu * e(n) * x(n)      - mu * lambda_r * sgn(w(n)) / (delta_r + |w(n-1)|)
//! RL1-LAE:  w(n+1) = w(n) + mu * sgn(e(n)) * x(n) - mu * lambda_r * sgn(w(n)) / (delta_r + |w(n-1)|)
//! ```
//!
//! with `sgn(0) = 0` and the penalty term applied elementwise. The sign-error
//! update bounds per-step motion by `mu * (max|x_i| + lambda_r / delta_r)`
//! regardless of the noise amplitude, which is what makes the LAE family
//! robust to impulsive interference. The reweighted-L1 penalty shrinks small
//! coefficients toward zero while leaving large ones nearly untouched; the
//! reweight denominator reads the *previous* iterate `w(n-1)`, so the filter
//! state keeps both the current and the prior weight vector.

use thiserror::Error;

/// Errors raised by filter construction and stepping.
#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("regressor length {got} does not match filter length {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Inputs are rejected before any state change.
    #[error("non-finite regressor or observation at step {iteration}")]
    NonFiniteInput { iteration: u64 },
    /// The update produced a non-finite coefficient; the state is left as it
    /// was before the step so the caller can inspect it.
    #[error("filter diverged at step {iteration}: update produced non-finite weights")]
    Diverged { iteration: u64 },
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

/// Sign function with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The four supported update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Lms,
    Lae,
    Rl1Lms,
    Rl1Lae,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Lms,
        Algorithm::Lae,
        Algorithm::Rl1Lms,
        Algorithm::Rl1Lae,
    ];

    /// Stable label used in CSV output and configuration files.
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Lms => "LMS",
            Algorithm::Lae => "LAE",
            Algorithm::Rl1Lms => "RL1-LMS",
            Algorithm::Rl1Lae => "RL1-LAE",
        }
    }

    /// True for the sign-error (least-absolute-error) family.
    pub fn is_sign_error(&self) -> bool {
        matches!(self, Algorithm::Lae | Algorithm::Rl1Lae)
    }

    /// True for the reweighted-L1 penalized variants.
    pub fn is_sparse(&self) -> bool {
        matches!(self, Algorithm::Rl1Lms | Algorithm::Rl1Lae)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LMS" => Ok(Algorithm::Lms),
            "LAE" => Ok(Algorithm::Lae),
            "RL1-LMS" => Ok(Algorithm::Rl1Lms),
            "RL1-LAE" => Ok(Algorithm::Rl1Lae),
            other => Err(format!(
                "unknown algorithm {other:?} (expected LMS, LAE, RL1-LMS or RL1-LAE)"
            )),
        }
    }
}

/// Step size and sparse-penalty parameters shared by all update rules.
///
/// `lambda_r = 0` makes RL1-LAE behave bit-for-bit like LAE and RL1-LMS like
/// LMS, so the plain algorithms are the `lambda_r = 0` special case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    mu: f64,
    lambda_r: f64,
    delta_r: f64,
}

impl FilterParams {
    pub fn new(mu: f64, lambda_r: f64, delta_r: f64) -> Result<Self, FilterError> {
        if mu <= 0.0 || !mu.is_finite() {
            return Err(FilterError::InvalidParameter {
                name: "mu",
                message: format!("step size must be a positive finite real, got {mu}"),
            });
        }
        if lambda_r < 0.0 || !lambda_r.is_finite() {
            return Err(FilterError::InvalidParameter {
                name: "lambda_r",
                message: format!("penalty weight must be non-negative and finite, got {lambda_r}"),
            });
        }
        if delta_r <= 0.0 || !delta_r.is_finite() {
            return Err(FilterError::InvalidParameter {
                name: "delta_r",
                message: format!("reweight threshold must be a positive finite real, got {delta_r}"),
            });
        }
        Ok(Self { mu, lambda_r, delta_r })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda_r(&self) -> f64 {
        self.lambda_r
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }
}

/// Fixed-length coefficient vector; every entry stays finite after every
/// accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn zeros(len: usize) -> Self {
        WeightVector(vec![0.0; len])
    }

    /// Wraps an existing coefficient vector; rejects non-finite entries.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self, FilterError> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(FilterError::InvalidParameter {
                name: "coefficients",
                message: "weight vector entries must be finite".to_string(),
            });
        }
        Ok(WeightVector(coefficients))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Outcome of one accepted step: the error computed *before* the update and a
/// view of the weights after it.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub prior_error: f64,
    pub updated_weights: &'a WeightVector,
}

/// One adaptive estimator: weights, the prior iterate consumed by the
/// reweight vector, and the update rule.
///
/// Single-threaded mutable state machine; run independent instances for
/// parallel trials.
#[derive(Debug, Clone)]
pub struct FilterState {
    algorithm: Algorithm,
    params: FilterParams,
    weights: WeightVector,
    previous_weights: WeightVector,
    scratch: Vec<f64>,
    steps: u64,
}

impl FilterState {
    /// Creates a filter of length `taps` with both the current and previous
    /// weight vectors zeroed.
    pub fn new(algorithm: Algorithm, params: FilterParams, taps: usize) -> Self {
        FilterState {
            algorithm,
            params,
            weights: WeightVector::zeros(taps),
            previous_weights: WeightVector::zeros(taps),
            scratch: vec![0.0; taps],
            steps: 0,
        }
    }

    /// Creates a filter warm-started at an explicit (current, previous)
    /// weight pair, e.g. to resume from a checkpoint or to probe the update
    /// rule at a chosen point.
    pub fn with_weights(
        algorithm: Algorithm,
        params: FilterParams,
        weights: WeightVector,
        previous_weights: WeightVector,
    ) -> Result<Self, FilterError> {
        if weights.len() != previous_weights.len() {
            return Err(FilterError::DimensionMismatch {
                expected: weights.len(),
                got: previous_weights.len(),
            });
        }
        let taps = weights.len();
        Ok(FilterState {
            algorithm,
            params,
            weights,
            previous_weights,
            scratch: vec![0.0; taps],
            steps: 0,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn previous_weights(&self) -> &WeightVector {
        &self.previous_weights
    }

    /// Number of accepted steps since construction.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Consumes one (regressor, observation) pair and updates the weights.
    ///
    /// On any error the state is unchanged: inputs are validated before the
    /// update, and an update that would produce non-finite weights is
    /// rejected as [`FilterError::Diverged`].
    pub fn step(&mut self, regressor: &[f64], observation: f64) -> Result<StepRecord<'_>, FilterError> {
        let n = self.weights.len();
        if regressor.len() != n {
            return Err(FilterError::DimensionMismatch {
                expected: n,
                got: regressor.len(),
            });
        }
        if !observation.is_finite() || regressor.iter().any(|x| !x.is_finite()) {
            return Err(FilterError::NonFiniteInput { iteration: self.steps });
        }

        let w = self.weights.as_slice();
        let wp = self.previous_weights.as_slice();
        let error = observation - dot(regressor, w);

        // Error-driven gain: mu*e for the LMS family, mu*sgn(e) for the sign
        // family. The penalized variants subtract the reweighted-L1 shrinkage
        // term afterwards; with lambda_r = 0 that term is an exact zero, so
        // the arithmetic below keeps the plain and penalized paths
        // bit-identical in that case.
        let gain = if self.algorithm.is_sign_error() {
            self.params.mu * sgn(error)
        } else {
            self.params.mu * error
        };
        let mu_lambda = self.params.mu * self.params.lambda_r;
        let delta = self.params.delta_r;

        if self.algorithm.is_sparse() {
            for i in 0..n {
                self.scratch[i] = w[i] + gain * regressor[i] - mu_lambda * sgn(w[i]) / (delta + wp[i].abs());
            }
        } else {
            for i in 0..n {
                self.scratch[i] = w[i] + gain * regressor[i];
            }
        }

        if self.scratch.iter().any(|c| !c.is_finite()) {
            return Err(FilterError::Diverged { iteration: self.steps });
        }

        if self.algorithm.is_sign_error() {
            debug_assert!(
                increment_bound_holds(&self.scratch, w, regressor, &self.params),
                "sign-family step exceeded its increment bound"
            );
        }

        std::mem::swap(&mut self.previous_weights.0, &mut self.weights.0);
        std::mem::swap(&mut self.weights.0, &mut self.scratch);
        self.steps += 1;

        Ok(StepRecord {
            prior_error: error,
            updated_weights: &self.weights,
        })
    }
}

/// Checks the sign-family motion bound
/// `max_i |w'(i) - w(i)| <= mu * (max_i |x_i| + lambda_r / delta_r)`,
/// with a hair of multiplicative slack for rounding.
pub fn increment_bound_holds(updated: &[f64], previous: &[f64], regressor: &[f64], params: &FilterParams) -> bool {
    let max_step = updated
        .iter()
        .zip(previous)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let max_reg = regressor.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let bound = params.mu * (max_reg + params.lambda_r / params.delta_r);
    max_step <= bound * (1.0 + 1e-12)
}

/// Reweight vector `f_i = 1 / (delta_r + |w_prev_i|)`; every entry is
/// strictly positive.
pub fn compute_reweight_vector(previous_weights: &WeightVector, delta_r: f64) -> Result<Vec<f64>, FilterError> {
    if delta_r <= 0.0 || !delta_r.is_finite() {
        return Err(FilterError::InvalidParameter {
            name: "delta_r",
            message: format!("reweight threshold must be a positive finite real, got {delta_r}"),
        });
    }
    Ok(previous_weights
        .as_slice()
        .iter()
        .map(|w| 1.0 / (delta_r + w.abs()))
        .collect())
}

/// Instantaneous cost of the penalized sign-error filter:
/// `|error| + lambda_r * sum_i |w_i| / (delta_r + |w_prev_i|)`.
///
/// The update path never evaluates this; it exists so tests can check the
/// step direction against finite differences of an independently computed
/// objective (with the reweight vector frozen at `previous_weights`).
pub fn rl1_lae_cost(
    weights: &WeightVector,
    previous_weights: &WeightVector,
    error: f64,
    lambda_r: f64,
    delta_r: f64,
) -> Result<f64, FilterError> {
    if delta_r <= 0.0 || !delta_r.is_finite() {
        return Err(FilterError::InvalidParameter {
            name: "delta_r",
            message: format!("reweight threshold must be a positive finite real, got {delta_r}"),
        });
    }
    let penalty: f64 = weights
        .as_slice()
        .iter()
        .zip(previous_weights.as_slice())
        .map(|(w, wp)| w.abs() / (delta_r + wp.abs()))
        .sum();
    Ok(error.abs() + lambda_r * penalty)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
