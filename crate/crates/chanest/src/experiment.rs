//! Monte-Carlo orchestration: runs M independent trials per scenario, drives
//! every requested estimator over identical signal realizations, and
//! aggregates normalized-MSE learning curves.
//!
//! Within a trial all algorithms consume byte-identical signals (same
//! channel, same input, same noise), so curve differences isolate the
//! algorithm. Trials are independent units of parallel work; the average is
//! an ordered reduction over trial indices, so results are bitwise
//! independent of scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::filters::{Algorithm, FilterError, FilterParams, FilterState, WeightVector};
use crate::signals::{snr_to_sigma1_sq, synthesize_trial, ChannelSpec, GmmNoiseParams, SignalError, TrialSignals};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("estimate length {estimate} does not match truth length {truth}")]
    MismatchedLengths { estimate: usize, truth: usize },
    #[error("truth vector has zero norm; normalized MSE is undefined")]
    ZeroNormTruth,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("tail fraction must lie in (0, 1], got {0}")]
    InvalidTailFraction(f64),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// A fully resolved simulation scenario.
///
/// `noise.sigma1_sq` is always derived from `snr_db`; the constructor
/// enforces it, so a scenario cannot carry an inconsistent background
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub channel: ChannelSpec,
    pub noise: GmmNoiseParams,
    pub snr_db: f64,
    pub filter_params: BTreeMap<Algorithm, FilterParams>,
    pub algorithms: Vec<Algorithm>,
    pub iterations: usize,
    pub num_runs: usize,
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// Builds a scenario. `noise.sigma1_sq` is replaced by
    /// `snr_to_sigma1_sq(snr_db)` (the SNR is authoritative), and `params`
    /// is applied to every requested algorithm.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        channel: ChannelSpec,
        noise: GmmNoiseParams,
        snr_db: f64,
        params: FilterParams,
        algorithms: Vec<Algorithm>,
        iterations: usize,
        num_runs: usize,
        master_seed: u64,
    ) -> Result<Self, ExperimentError> {
        let noise = GmmNoiseParams {
            sigma1_sq: snr_to_sigma1_sq(snr_db),
            ..noise
        };
        noise.validate()?;
        let filter_params = algorithms.iter().map(|a| (*a, params)).collect();
        let config = Self {
            channel,
            noise,
            snr_db,
            filter_params,
            algorithms,
            iterations,
            num_runs,
            master_seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Overrides the parameters of one algorithm.
    pub fn with_algorithm_params(mut self, algorithm: Algorithm, params: FilterParams) -> Self {
        self.filter_params.insert(algorithm, params);
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.iterations == 0 {
            return Err(ExperimentError::InvalidConfig("iterations must be at least 1".to_string()));
        }
        if self.num_runs == 0 {
            return Err(ExperimentError::InvalidConfig("runs must be at least 1".to_string()));
        }
        if self.algorithms.is_empty() {
            return Err(ExperimentError::InvalidConfig("at least one algorithm is required".to_string()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.algorithms {
            if !seen.insert(*a) {
                return Err(ExperimentError::InvalidConfig(format!("algorithm {a} listed twice")));
            }
            if !self.filter_params.contains_key(a) {
                return Err(ExperimentError::InvalidConfig(format!("no filter parameters for {a}")));
            }
        }
        self.noise.validate()?;
        if self.noise.sigma1_sq.to_bits() != snr_to_sigma1_sq(self.snr_db).to_bits() {
            return Err(ExperimentError::InvalidConfig(
                "sigma1_sq is not consistent with snr_db".to_string(),
            ));
        }
        Ok(())
    }

    pub fn params_for(&self, algorithm: Algorithm) -> FilterParams {
        self.filter_params[&algorithm]
    }
}

/// Normalized squared estimation error `||estimate - truth||^2 / ||truth||^2`.
pub fn normalized_mse(estimate: &[f64], truth: &WeightVector) -> Result<f64, ExperimentError> {
    if estimate.len() != truth.len() {
        return Err(ExperimentError::MismatchedLengths {
            estimate: estimate.len(),
            truth: truth.len(),
        });
    }
    let denom: f64 = truth.as_slice().iter().map(|t| t * t).sum();
    if denom <= 0.0 {
        return Err(ExperimentError::ZeroNormTruth);
    }
    let num: f64 = estimate
        .iter()
        .zip(truth.as_slice())
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(num / denom)
}

/// Result of driving one algorithm through one trial.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmRun {
    /// Normalized MSE after each step, length = iterations.
    Completed { mse: Vec<f64> },
    /// The filter produced non-finite weights; `partial_mse` covers the
    /// steps accepted before that.
    Diverged { at_iteration: u64, partial_mse: Vec<f64> },
}

/// Drives one freshly zero-initialized filter over a trial's signals and
/// records the normalized MSE after every step.
pub fn run_algorithm(
    signals: &TrialSignals,
    algorithm: Algorithm,
    params: FilterParams,
) -> Result<AlgorithmRun, ExperimentError> {
    let n = signals.true_channel().len();
    let mut filter = FilterState::new(algorithm, params, n);
    let mut regressor = vec![0.0; n];
    let mut mse = Vec::with_capacity(signals.len());
    for step in 0..signals.len() {
        signals.fill_regressor(step, &mut regressor);
        match filter.step(&regressor, signals.observations()[step]) {
            Ok(record) => {
                mse.push(normalized_mse(record.updated_weights.as_slice(), signals.true_channel())?);
            }
            Err(FilterError::Diverged { iteration }) => {
                return Ok(AlgorithmRun::Diverged { at_iteration: iteration, partial_mse: mse });
            }
            Err(other) => return Err(other.into()),
        }
    }
    Ok(AlgorithmRun::Completed { mse })
}

/// Runs every configured algorithm over one shared signal realization.
///
/// The realization is seeded from `(master_seed, trial_index)`, so a trial
/// can be reproduced in isolation.
pub fn run_trial(
    config: &ScenarioConfig,
    trial_index: u64,
) -> Result<Vec<(Algorithm, AlgorithmRun)>, ExperimentError> {
    config.validate()?;
    let signals = synthesize_trial(
        &config.channel,
        &config.noise,
        config.iterations,
        config.master_seed,
        trial_index,
    )?;
    config
        .algorithms
        .iter()
        .map(|algo| Ok((*algo, run_algorithm(&signals, *algo, config.params_for(*algo))?)))
        .collect()
}

/// Average normalized-MSE learning curve for one algorithm.
///
/// `num_runs` counts the completed runs included in the average;
/// `diverged_runs` counts the excluded ones. If every run diverged the
/// trajectory is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MseTrajectory {
    pub algorithm: Algorithm,
    pub mse_per_iteration: Vec<f64>,
    pub num_runs: usize,
    pub diverged_runs: usize,
}

/// Element-wise mean of the per-trial MSE sequences, in trial order.
/// Diverged runs are counted and excluded rather than poisoning the mean.
fn average_runs(algorithm: Algorithm, runs: &[&AlgorithmRun], iterations: usize) -> MseTrajectory {
    let mut sum = vec![0.0f64; iterations];
    let mut completed = 0usize;
    let mut diverged = 0usize;
    for run in runs {
        match run {
            AlgorithmRun::Completed { mse } => {
                for (acc, v) in sum.iter_mut().zip(mse) {
                    *acc += v;
                }
                completed += 1;
            }
            AlgorithmRun::Diverged { .. } => diverged += 1,
        }
    }
    let mse_per_iteration = if completed == 0 {
        Vec::new()
    } else {
        sum.iter().map(|s| s / completed as f64).collect()
    };
    MseTrajectory {
        algorithm,
        mse_per_iteration,
        num_runs: completed,
        diverged_runs: diverged,
    }
}

/// Runs the scenario's M trials (in parallel) and averages the learning
/// curves per algorithm. The reduction is ordered by trial index, so the
/// output is bitwise identical regardless of thread count.
pub fn run_monte_carlo(config: &ScenarioConfig) -> Result<Vec<MseTrajectory>, ExperimentError> {
    config.validate()?;
    let trials: Vec<Vec<(Algorithm, AlgorithmRun)>> = (0..config.num_runs as u64)
        .into_par_iter()
        .map(|trial_index| run_trial(config, trial_index))
        .collect::<Result<_, _>>()?;

    Ok(config
        .algorithms
        .iter()
        .enumerate()
        .map(|(slot, algo)| {
            let runs: Vec<&AlgorithmRun> = trials.iter().map(|t| &t[slot].1).collect();
            average_runs(*algo, &runs, config.iterations)
        })
        .collect())
}

/// Steady-state level of a learning curve: the mean of the trailing
/// `ceil(tail_fraction * iterations)` entries, reported in dB.
pub fn steady_state_mse(trajectory: &MseTrajectory, tail_fraction: f64) -> Result<f64, ExperimentError> {
    if tail_fraction <= 0.0 || tail_fraction > 1.0 || tail_fraction.is_nan() {
        return Err(ExperimentError::InvalidTailFraction(tail_fraction));
    }
    let len = trajectory.mse_per_iteration.len();
    if len == 0 {
        return Err(ExperimentError::EmptyTrajectory);
    }
    let tail = (tail_fraction * len as f64).ceil() as usize;
    let tail = tail.clamp(1, len);
    let mean: f64 = trajectory.mse_per_iteration[len - tail..].iter().sum::<f64>() / tail as f64;
    Ok(10.0 * mean.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::stream_rng;

    fn table1_params() -> FilterParams {
        FilterParams::new(0.01, 0.0001, 0.01).unwrap()
    }

    #[allow(clippy::too_many_arguments)]
    fn scenario(
        n: usize,
        k: usize,
        snr_db: f64,
        phi: f64,
        sigma2_sq: f64,
        algorithms: Vec<Algorithm>,
        iterations: usize,
        num_runs: usize,
        seed: u64,
    ) -> ScenarioConfig {
        ScenarioConfig::new(
            ChannelSpec::new(n, k).unwrap(),
            GmmNoiseParams { phi, alpha1: 0.0, alpha2: 0.0, sigma1_sq: 0.0, sigma2_sq },
            snr_db,
            table1_params(),
            algorithms,
            iterations,
            num_runs,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn normalized_mse_hand_values() {
        let truth = WeightVector::from_coefficients(vec![1.0, 0.0]).unwrap();
        assert_eq!(normalized_mse(&[1.0, 0.0], &truth).unwrap(), 0.0);
        assert_eq!(normalized_mse(&[0.0, 0.0], &truth).unwrap(), 1.0);
        assert_eq!(normalized_mse(&[1.0, 1.0], &truth).unwrap(), 1.0);

        let zero = WeightVector::zeros(2);
        assert!(matches!(
            normalized_mse(&[0.0, 0.0], &zero),
            Err(ExperimentError::ZeroNormTruth)
        ));
        assert!(matches!(
            normalized_mse(&[0.0], &truth),
            Err(ExperimentError::MismatchedLengths { .. })
        ));
    }

    #[test]
    fn mse_before_any_step_is_exactly_one() {
        // Zero-initialized weights against any unit-norm truth: the
        // numerator and denominator are the same sum, so the ratio is 1.0
        // exactly, not just approximately.
        for seed in 0..20 {
            let spec = ChannelSpec::new(40, 6).unwrap();
            let truth =
                crate::signals::generate_sparse_channel(&spec, &mut stream_rng(seed, 0, "c")).unwrap();
            let zeros = vec![0.0; truth.len()];
            assert_eq!(normalized_mse(&zeros, &truth).unwrap(), 1.0);
        }
    }

    #[test]
    fn steady_state_hand_values() {
        let traj = |v: Vec<f64>| MseTrajectory {
            algorithm: Algorithm::Lae,
            mse_per_iteration: v,
            num_runs: 1,
            diverged_runs: 0,
        };
        let constant = traj(vec![0.01; 7]);
        assert!((steady_state_mse(&constant, 0.3).unwrap() + 20.0).abs() < 1e-12);
        assert!((steady_state_mse(&constant, 1.0).unwrap() + 20.0).abs() < 1e-12);

        let two = traj(vec![1.0, 0.1]);
        assert!((steady_state_mse(&two, 0.5).unwrap() + 10.0).abs() < 1e-12);

        let four = traj(vec![0.04, 0.02, 0.01, 0.01]);
        assert!((steady_state_mse(&four, 0.5).unwrap() + 20.0).abs() < 1e-12);

        assert!(matches!(
            steady_state_mse(&traj(vec![]), 0.5),
            Err(ExperimentError::EmptyTrajectory)
        ));
        assert!(matches!(
            steady_state_mse(&constant, 0.0),
            Err(ExperimentError::InvalidTailFraction(_))
        ));
        assert!(matches!(
            steady_state_mse(&constant, 1.5),
            Err(ExperimentError::InvalidTailFraction(_))
        ));
    }

    #[test]
    fn averaging_is_the_arithmetic_mean() {
        let a = AlgorithmRun::Completed { mse: vec![0.5, 0.3] };
        let b = AlgorithmRun::Completed { mse: vec![0.1, 0.1] };
        let t = average_runs(Algorithm::Lms, &[&a, &b], 2);
        assert_eq!(t.mse_per_iteration, vec![0.3, 0.2]);
        assert_eq!(t.num_runs, 2);
        assert_eq!(t.diverged_runs, 0);
    }

    #[test]
    fn diverged_runs_are_excluded_and_counted() {
        let ok = AlgorithmRun::Completed { mse: vec![0.4, 0.2] };
        let bad = AlgorithmRun::Diverged { at_iteration: 1, partial_mse: vec![9.0] };
        let t = average_runs(Algorithm::Lms, &[&ok, &bad], 2);
        assert_eq!(t.mse_per_iteration, vec![0.4, 0.2]);
        assert_eq!(t.num_runs, 1);
        assert_eq!(t.diverged_runs, 1);

        let t = average_runs(Algorithm::Lms, &[&bad], 2);
        assert!(t.mse_per_iteration.is_empty());
        assert_eq!(t.num_runs, 0);
        assert_eq!(t.diverged_runs, 1);
    }

    #[test]
    fn config_validation() {
        let base = scenario(8, 2, 10.0, 0.2, 40.0, vec![Algorithm::Lms], 10, 2, 1);
        assert!(base.validate().is_ok());

        let mut bad = base.clone();
        bad.iterations = 0;
        assert!(bad.validate().is_err());

        let mut bad = base.clone();
        bad.num_runs = 0;
        assert!(bad.validate().is_err());

        let mut bad = base.clone();
        bad.algorithms = vec![];
        assert!(bad.validate().is_err());

        let mut bad = base.clone();
        bad.algorithms = vec![Algorithm::Lms, Algorithm::Lms];
        assert!(bad.validate().is_err());

        let mut bad = base.clone();
        bad.algorithms = vec![Algorithm::Lae];
        bad.filter_params.clear();
        assert!(bad.validate().is_err());

        // sigma1_sq must track the SNR.
        let mut bad = base;
        bad.noise.sigma1_sq = 0.2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trial_is_deterministic() {
        let config = scenario(16, 4, 10.0, 0.2, 40.0, Algorithm::ALL.to_vec(), 50, 2, 77);
        let a = run_trial(&config, 1).unwrap();
        let b = run_trial(&config, 1).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&config, 0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_trial_monte_carlo_equals_run_trial() {
        let config = scenario(12, 3, 10.0, 0.2, 40.0, vec![Algorithm::Lae, Algorithm::Rl1Lae], 40, 1, 5);
        let trial = run_trial(&config, 0).unwrap();
        let mc = run_monte_carlo(&config).unwrap();
        for (t, m) in trial.iter().zip(&mc) {
            assert_eq!(t.0, m.algorithm);
            match &t.1 {
                AlgorithmRun::Completed { mse } => assert_eq!(mse, &m.mse_per_iteration),
                AlgorithmRun::Diverged { .. } => panic!("trial should not diverge"),
            }
            assert_eq!(m.num_runs, 1);
        }
    }

    #[test]
    fn monte_carlo_is_independent_of_thread_count() {
        let config = scenario(16, 4, 10.0, 0.2, 40.0, Algorithm::ALL.to_vec(), 60, 8, 13);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_monte_carlo(&config).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_monte_carlo(&config).unwrap());
        for (a, b) in single.iter().zip(&multi) {
            assert_eq!(a.algorithm, b.algorithm);
            assert_eq!(a.mse_per_iteration.len(), b.mse_per_iteration.len());
            for (x, y) in a.mse_per_iteration.iter().zip(&b.mse_per_iteration) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn shared_realization_pairs_algorithms() {
        // All algorithms in a trial see the same signals: reconstruct the
        // trial signals independently and check the first prior error any
        // algorithm sees equals d(0) (weights start at zero).
        let config = scenario(8, 2, 10.0, 0.2, 40.0, Algorithm::ALL.to_vec(), 5, 1, 21);
        let signals = synthesize_trial(&config.channel, &config.noise, 5, 21, 0).unwrap();
        for algo in Algorithm::ALL {
            let mut filter = FilterState::new(algo, config.params_for(algo), 8);
            let mut reg = vec![0.0; 8];
            signals.fill_regressor(0, &mut reg);
            let rec = filter.step(&reg, signals.observations()[0]).unwrap();
            assert_eq!(rec.prior_error, signals.observations()[0]);
        }
    }

    #[test]
    fn noiseless_lms_identifies_unit_channel() {
        // Channel e0, no noise: LMS at mu = 0.01 should essentially nail the
        // channel within 1500 iterations.
        let n = 16;
        let mut taps = vec![0.0; n];
        taps[0] = 1.0;
        let truth = WeightVector::from_coefficients(taps).unwrap();
        let input = crate::signals::generate_training_signal(1500, &mut stream_rng(3, 0, "x"));
        let signals = TrialSignals::assemble(truth, input, vec![0.0; 1500]).unwrap();
        match run_algorithm(&signals, Algorithm::Lms, table1_params()).unwrap() {
            AlgorithmRun::Completed { mse } => {
                assert!(*mse.last().unwrap() < 1e-4, "final MSE {}", mse.last().unwrap());
            }
            AlgorithmRun::Diverged { .. } => panic!("noiseless LMS must not diverge"),
        }
    }

    #[test]
    fn single_iteration_boundary() {
        let config = scenario(8, 2, 20.0, 0.0, 0.0, Algorithm::ALL.to_vec(), 1, 1, 9);
        let outcome = run_trial(&config, 0).unwrap();
        let signals = synthesize_trial(&config.channel, &config.noise, 1, 9, 0).unwrap();
        let mut reg = vec![0.0; 8];
        signals.fill_regressor(0, &mut reg);
        let max_reg = reg.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let d = signals.observations()[0];
        for (algo, run) in &outcome {
            let mse = match run {
                AlgorithmRun::Completed { mse } => {
                    assert_eq!(mse.len(), 1);
                    mse[0]
                }
                AlgorithmRun::Diverged { .. } => panic!("one step cannot diverge here"),
            };
            // One step from zero weights: the estimate moved at most
            // step_bound per coefficient, so the MSE cannot exceed
            // (1 + step_bound * sqrt(N))^2.
            let p = config.params_for(*algo);
            let per_coeff = if algo.is_sign_error() {
                p.mu() * (max_reg + p.lambda_r() / p.delta_r())
            } else {
                p.mu() * d.abs() * max_reg + p.mu() * p.lambda_r() / p.delta_r()
            };
            let bound = (1.0 + per_coeff * (8f64).sqrt()).powi(2);
            assert!(mse <= bound, "{algo}: one-step MSE {mse} above bound {bound}");
            assert!(mse.is_finite() && mse >= 0.0);
        }
    }

    #[test]
    fn noiseless_floors_match_theory() {
        // Noiseless Table-1 defaults: the LMS family converges essentially to
        // machine-level MSE, while the fixed-step sign family stalls at its
        // dither floor near (mu * N * sqrt(pi/2) / 2)^2. The penalized
        // variants sit at or slightly below their plain counterparts.
        let config = scenario(80, 8, f64::INFINITY, 0.0, 0.0, Algorithm::ALL.to_vec(), 3000, 3, 31);
        let results = run_monte_carlo(&config).unwrap();
        let tail_db = |algo: Algorithm| {
            let t = results.iter().find(|t| t.algorithm == algo).unwrap();
            steady_state_mse(t, 0.1).unwrap()
        };
        assert!(tail_db(Algorithm::Lms) < -30.0, "LMS tail {}", tail_db(Algorithm::Lms));
        assert!(tail_db(Algorithm::Rl1Lms) < -30.0, "RL1-LMS tail {}", tail_db(Algorithm::Rl1Lms));

        let floor_db = 10.0 * (0.01f64 * 80.0 * (std::f64::consts::PI / 2.0).sqrt() / 2.0)
            .powi(2)
            .log10();
        for algo in [Algorithm::Lae, Algorithm::Rl1Lae] {
            let got = tail_db(algo);
            assert!(
                (got - floor_db).abs() < 1.5,
                "{algo}: noiseless tail {got:.2} dB, dither-floor prediction {floor_db:.2} dB"
            );
        }
    }

    #[test]
    fn divergent_step_size_is_recorded_not_fatal() {
        // A step size this absurd overflows the LMS-family updates within a
        // few iterations; the harness reports empty trajectories with every
        // run counted as diverged instead of failing.
        let huge = FilterParams::new(1e160, 0.0001, 0.01).unwrap();
        let config = ScenarioConfig::new(
            ChannelSpec::new(8, 2).unwrap(),
            GmmNoiseParams { phi: 0.2, alpha1: 0.0, alpha2: 0.0, sigma1_sq: 0.0, sigma2_sq: 40.0 },
            10.0,
            huge,
            vec![Algorithm::Lms, Algorithm::Rl1Lms],
            30,
            3,
            11,
        )
        .unwrap();
        let results = run_monte_carlo(&config).unwrap();
        for t in results {
            assert!(t.mse_per_iteration.is_empty());
            assert_eq!(t.num_runs, 0);
            assert_eq!(t.diverged_runs, 3);
            assert!(matches!(
                steady_state_mse(&t, 0.1),
                Err(ExperimentError::EmptyTrajectory)
            ));
        }
    }

    #[test]
    fn weights_stay_finite_under_harsh_impulses() {
        // 10^5 steps at Table-1 defaults under strong impulsive noise: no
        // divergence, all coefficients finite.
        let spec = ChannelSpec::new(80, 8).unwrap();
        let noise = GmmNoiseParams::new(0.4, 0.0, 0.0, snr_to_sigma1_sq(10.0), 80.0).unwrap();
        let signals = synthesize_trial(&spec, &noise, 100_000, 17, 0).unwrap();
        for algo in Algorithm::ALL {
            match run_algorithm(&signals, algo, table1_params()).unwrap() {
                AlgorithmRun::Completed { mse } => {
                    assert!(mse.iter().all(|v| v.is_finite()), "{algo}: non-finite MSE");
                }
                AlgorithmRun::Diverged { at_iteration, .. } => {
                    panic!("{algo} diverged at {at_iteration}")
                }
            }
        }
    }
}
