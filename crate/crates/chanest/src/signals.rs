//! Seeded generators for the training signal, the sparse channel and the
//! Gaussian-mixture impulsive noise, plus the observation synthesizer.
//!
//! Every generator is a pure function of its parameters and a seeded RNG
//! stream: repeated calls with the same seed agree bitwise. Streams are
//! derived as `hash(master_seed, trial_index, label)` so each trial is
//! reproducible on its own, independent of execution order or parallelism.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::filters::{dot, WeightVector};

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

fn invalid(name: &'static str, message: String) -> SignalError {
    SignalError::InvalidParameter { name, message }
}

/// Two-component Gaussian mixture: with probability `1 - phi` a sample is
/// drawn from `Normal(alpha1, sigma1_sq)`, otherwise from
/// `Normal(alpha2, sigma2_sq)`. The second component models impulses:
/// low probability, large variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmNoiseParams {
    pub phi: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

impl GmmNoiseParams {
    pub fn new(phi: f64, alpha1: f64, alpha2: f64, sigma1_sq: f64, sigma2_sq: f64) -> Result<Self, SignalError> {
        let p = Self { phi, alpha1, alpha2, sigma1_sq, sigma2_sq };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !(0.0..=1.0).contains(&self.phi) || !self.phi.is_finite() {
            return Err(invalid("phi", format!("mixture probability must lie in [0, 1], got {}", self.phi)));
        }
        if self.sigma1_sq < 0.0 || !self.sigma1_sq.is_finite() {
            return Err(invalid("sigma1_sq", format!("variance must be non-negative and finite, got {}", self.sigma1_sq)));
        }
        if self.sigma2_sq < 0.0 || !self.sigma2_sq.is_finite() {
            return Err(invalid("sigma2_sq", format!("variance must be non-negative and finite, got {}", self.sigma2_sq)));
        }
        if !self.alpha1.is_finite() || !self.alpha2.is_finite() {
            return Err(invalid("alpha1", "component means must be finite".to_string()));
        }
        Ok(())
    }

    /// Mixture mean `(1 - phi) alpha1 + phi alpha2`.
    pub fn mean(&self) -> f64 {
        (1.0 - self.phi) * self.alpha1 + self.phi * self.alpha2
    }

    /// Mixture variance
    /// `(1 - phi)(sigma1_sq + alpha1^2) + phi (sigma2_sq + alpha2^2) - mean^2`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (1.0 - self.phi) * (self.sigma1_sq + self.alpha1 * self.alpha1)
            + self.phi * (self.sigma2_sq + self.alpha2 * self.alpha2)
            - m * m
    }
}

/// Length and sparsity of the FIR channel to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelSpec {
    length_n: usize,
    sparsity_k: usize,
}

impl ChannelSpec {
    pub fn new(length_n: usize, sparsity_k: usize) -> Result<Self, SignalError> {
        if length_n == 0 {
            return Err(invalid("n", "channel length must be at least 1".to_string()));
        }
        if sparsity_k == 0 || sparsity_k > length_n {
            return Err(invalid(
                "k",
                format!("number of dominant taps must satisfy 1 <= k <= n, got k={sparsity_k}, n={length_n}"),
            ));
        }
        Ok(Self { length_n, sparsity_k })
    }

    pub fn length(&self) -> usize {
        self.length_n
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity_k
    }
}

/// Converts a received SNR in dB to the background-noise variance
/// `sigma1_sq = 10^(-snr_db / 10)`; the training signal has unit power.
///
/// The impulsive component never enters this: SNR describes the background
/// Gaussian floor only.
pub fn snr_to_sigma1_sq(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Derives the RNG for one labeled stream of one trial.
///
/// Seeds are hashed (SHA-256 over master seed, trial index and label) into a
/// full ChaCha key, so streams are independent and stable across platforms
/// and scheduling.
pub fn stream_rng(master_seed: u64, trial_index: u64, label: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(trial_index.to_le_bytes());
    hasher.update(label.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Which mixture component produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseComponent {
    Background,
    Impulse,
}

/// Draws `count` GMM samples together with their component labels.
///
/// The labeled and unlabeled samplers produce identical value sequences for
/// the same stream; the labels exist so tests can check the component
/// fraction directly.
pub fn sample_gmm_noise_labeled(
    params: &GmmNoiseParams,
    count: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<NoiseComponent>), SignalError> {
    params.validate()?;
    let sigma1 = params.sigma1_sq.sqrt();
    let sigma2 = params.sigma2_sq.sqrt();
    let mut values = Vec::with_capacity(count);
    let mut components = Vec::with_capacity(count);
    for _ in 0..count {
        let impulse = rng.gen::<f64>() < params.phi;
        let z: f64 = rng.sample(StandardNormal);
        let (mean, sigma, label) = if impulse {
            (params.alpha2, sigma2, NoiseComponent::Impulse)
        } else {
            (params.alpha1, sigma1, NoiseComponent::Background)
        };
        values.push(mean + sigma * z);
        components.push(label);
    }
    Ok((values, components))
}

/// Draws `count` samples of Gaussian-mixture noise.
pub fn sample_gmm_noise(params: &GmmNoiseParams, count: usize, rng: &mut impl Rng) -> Result<Vec<f64>, SignalError> {
    sample_gmm_noise_labeled(params, count, rng).map(|(values, _)| values)
}

/// Generates a sparse channel: exactly K nonzero taps at uniformly chosen
/// distinct positions, values standard normal, the whole vector rescaled to
/// unit L2 norm. Zero taps are exact zeros.
pub fn generate_sparse_channel(spec: &ChannelSpec, rng: &mut impl Rng) -> Result<WeightVector, SignalError> {
    let n = spec.length();
    let k = spec.sparsity();
    let mut taps = vec![0.0f64; n];
    // Rejection loop: an all-zero draw (probability zero in theory, possible
    // only through astronomically unlikely exact zeros) cannot be normalized.
    loop {
        let positions = sample_indices(rng, n, k);
        for slot in taps.iter_mut() {
            *slot = 0.0;
        }
        for pos in positions.iter() {
            taps[pos] = rng.sample(StandardNormal);
        }
        let norm = dot(&taps, &taps).sqrt();
        if norm > 0.0 {
            for t in taps.iter_mut() {
                *t /= norm;
            }
            break;
        }
    }
    WeightVector::from_coefficients(taps).map_err(|e| invalid("channel", e.to_string()))
}

/// Generates `length` i.i.d. standard-normal training samples (unit power).
pub fn generate_training_signal(length: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..length).map(|_| rng.sample(StandardNormal)).collect()
}

/// One trial's worth of synthetic data: the channel, the raw input, the
/// noise, and the observations they produce.
#[derive(Debug, Clone)]
pub struct TrialSignals {
    true_channel: WeightVector,
    input_sequence: Vec<f64>,
    noise_sequence: Vec<f64>,
    observations: Vec<f64>,
    /// Input prefixed with N-1 zeros so regressor windows never go out of
    /// bounds.
    padded_input: Vec<f64>,
}

impl TrialSignals {
    /// Assembles a trial from an explicit channel and input/noise sequences.
    ///
    /// Observations follow `d(n) = x^T(n) w + z(n)` with the tapped-delay
    /// regressor `x(n) = [x(n), x(n-1), ..., x(n-N+1)]` and zero pre-history.
    pub fn assemble(
        true_channel: WeightVector,
        input_sequence: Vec<f64>,
        noise_sequence: Vec<f64>,
    ) -> Result<Self, SignalError> {
        if input_sequence.len() != noise_sequence.len() {
            return Err(invalid(
                "noise",
                format!(
                    "input and noise lengths differ: {} vs {}",
                    input_sequence.len(),
                    noise_sequence.len()
                ),
            ));
        }
        let n = true_channel.len();
        let len = input_sequence.len();
        let mut padded_input = vec![0.0; n - 1 + len];
        padded_input[n - 1..].copy_from_slice(&input_sequence);

        let mut regressor = vec![0.0; n];
        let mut observations = Vec::with_capacity(len);
        for (step, z) in noise_sequence.iter().enumerate() {
            fill_regressor(&padded_input, n, step, &mut regressor);
            observations.push(dot(&regressor, true_channel.as_slice()) + z);
        }
        Ok(Self {
            true_channel,
            input_sequence,
            noise_sequence,
            observations,
            padded_input,
        })
    }

    pub fn true_channel(&self) -> &WeightVector {
        &self.true_channel
    }

    pub fn input_sequence(&self) -> &[f64] {
        &self.input_sequence
    }

    pub fn noise_sequence(&self) -> &[f64] {
        &self.noise_sequence
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Writes the regressor `[x(n), x(n-1), ..., x(n-N+1)]` for step `n` into
    /// `out` (length N, zero pre-history before the first sample).
    pub fn fill_regressor(&self, step: usize, out: &mut [f64]) {
        fill_regressor(&self.padded_input, self.true_channel.len(), step, out);
    }
}

fn fill_regressor(padded_input: &[f64], n: usize, step: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), n);
    let newest = n - 1 + step;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = padded_input[newest - i];
    }
}

/// Labels for the per-trial RNG streams.
pub mod stream_label {
    pub const CHANNEL: &str = "channel";
    pub const INPUT: &str = "input";
    pub const NOISE: &str = "noise";
}

/// Synthesizes a full trial: channel, training input, GMM noise and the
/// observations, each from its own labeled stream of
/// `(master_seed, trial_index)`.
pub fn synthesize_trial(
    spec: &ChannelSpec,
    noise: &GmmNoiseParams,
    length: usize,
    master_seed: u64,
    trial_index: u64,
) -> Result<TrialSignals, SignalError> {
    if length == 0 {
        return Err(invalid("length", "trial length must be at least 1".to_string()));
    }
    let channel = generate_sparse_channel(
        spec,
        &mut stream_rng(master_seed, trial_index, stream_label::CHANNEL),
    )?;
    let input = generate_training_signal(
        length,
        &mut stream_rng(master_seed, trial_index, stream_label::INPUT),
    );
    let noise_seq = sample_gmm_noise(
        noise,
        length,
        &mut stream_rng(master_seed, trial_index, stream_label::NOISE),
    )?;
    TrialSignals::assemble(channel, input, noise_seq)
}
