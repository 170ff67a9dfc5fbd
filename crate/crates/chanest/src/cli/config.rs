//! Scenario configuration: a flat key-value TOML document with defaults for
//! every field, plus the run manifest written next to each result set.
//!
//! A manifest is the same document with every key resolved and a `[meta]`
//! table appended, so feeding a manifest back to `run` reproduces the run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::ScenarioConfig;
use crate::filters::{Algorithm, FilterParams};
use crate::signals::{snr_to_sigma1_sq, ChannelSpec, GmmNoiseParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse configuration: {0}")]
    Parse(String),
    #[error("invalid value for {key}: {message}")]
    Range { key: String, message: String },
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
}

/// Default scenario values: the standard simulation setup (N = 80, K = 8,
/// SNR = 10 dB, mu = 0.01, lambda_r = 1e-4, delta_r = 0.01, zero-mean noise
/// components, M = 1000 runs) with a moderate impulsive environment
/// (phi = 0.2, sigma2_sq = 40).
pub mod defaults {
    pub const N: usize = 80;
    pub const K: usize = 8;
    pub const SNR_DB: f64 = 10.0;
    pub const PHI: f64 = 0.2;
    pub const ALPHA1: f64 = 0.0;
    pub const ALPHA2: f64 = 0.0;
    pub const SIGMA2_SQ: f64 = 40.0;
    pub const MU: f64 = 0.01;
    pub const LAMBDA_R: f64 = 0.0001;
    pub const DELTA_R: f64 = 0.01;
    pub const ITERATIONS: usize = 3000;
    pub const RUNS: usize = 1000;
    pub const SEED: u64 = 42;
}

/// The flat configuration document. Every field is optional; unspecified
/// fields take the defaults above. Unknown keys are rejected with an error
/// naming the key. The `meta` table is reserved for manifests and is ignored
/// when a manifest is re-run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithms: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<ManifestMeta>,
}

/// Tool metadata recorded alongside each result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub tool_version: String,
    pub master_seed: u64,
    pub created_utc: String,
    pub outputs: Vec<String>,
}

fn range_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { key: key.to_string(), message: message.into() }
}

impl ConfigDocument {
    /// Parses a TOML document without resolving defaults.
    pub fn from_toml(source: &str) -> Result<Self, ConfigError> {
        toml::from_str(source).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    /// Applies command-line overrides on top of the document.
    pub fn apply_overrides(&mut self, seed: Option<u64>, runs: Option<usize>, iterations: Option<usize>) {
        if seed.is_some() {
            self.seed = seed;
        }
        if runs.is_some() {
            self.runs = runs;
        }
        if iterations.is_some() {
            self.iterations = iterations;
        }
    }

    /// Sets one of the sweepable floating-point keys.
    pub fn set_float_key(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        match key {
            "phi" => self.phi = Some(value),
            "snr_db" => self.snr_db = Some(value),
            "sigma2_sq" => self.sigma2_sq = Some(value),
            "mu" => self.mu = Some(value),
            "lambda_r" => self.lambda_r = Some(value),
            "delta_r" => self.delta_r = Some(value),
            other => {
                return Err(range_err(
                    "param",
                    format!("{other:?} is not sweepable (use phi, snr_db, sigma2_sq, mu, lambda_r or delta_r)"),
                ))
            }
        }
        Ok(())
    }

    /// Fills defaults, validates every field and builds the scenario.
    pub fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let n = self.n.unwrap_or(defaults::N);
        let k = self.k.unwrap_or(defaults::K);
        let snr_db = self.snr_db.unwrap_or(defaults::SNR_DB);
        let phi = self.phi.unwrap_or(defaults::PHI);
        let alpha1 = self.alpha1.unwrap_or(defaults::ALPHA1);
        let alpha2 = self.alpha2.unwrap_or(defaults::ALPHA2);
        let sigma2_sq = self.sigma2_sq.unwrap_or(defaults::SIGMA2_SQ);
        let mu = self.mu.unwrap_or(defaults::MU);
        let lambda_r = self.lambda_r.unwrap_or(defaults::LAMBDA_R);
        let delta_r = self.delta_r.unwrap_or(defaults::DELTA_R);
        let iterations = self.iterations.unwrap_or(defaults::ITERATIONS);
        let runs = self.runs.unwrap_or(defaults::RUNS);
        let seed = self.seed.unwrap_or(defaults::SEED);

        if n == 0 {
            return Err(range_err("n", "channel length must be at least 1"));
        }
        if k == 0 || k > n {
            return Err(range_err("k", format!("must satisfy 1 <= k <= n (= {n}), got {k}")));
        }
        if snr_db.is_nan() || !snr_to_sigma1_sq(snr_db).is_finite() {
            return Err(range_err("snr_db", format!("must give a finite background variance, got {snr_db}")));
        }
        if !(0.0..=1.0).contains(&phi) || phi.is_nan() {
            return Err(range_err("phi", format!("mixture probability must lie in [0, 1], got {phi}")));
        }
        if !alpha1.is_finite() {
            return Err(range_err("alpha1", format!("must be finite, got {alpha1}")));
        }
        if !alpha2.is_finite() {
            return Err(range_err("alpha2", format!("must be finite, got {alpha2}")));
        }
        if sigma2_sq < 0.0 || !sigma2_sq.is_finite() {
            return Err(range_err("sigma2_sq", format!("variance must be non-negative and finite, got {sigma2_sq}")));
        }
        if mu <= 0.0 || !mu.is_finite() {
            return Err(range_err("mu", format!("step size must be positive and finite, got {mu}")));
        }
        if lambda_r < 0.0 || !lambda_r.is_finite() {
            return Err(range_err("lambda_r", format!("penalty weight must be non-negative and finite, got {lambda_r}")));
        }
        if delta_r <= 0.0 || !delta_r.is_finite() {
            return Err(range_err("delta_r", format!("threshold must be positive and finite, got {delta_r}")));
        }
        if iterations == 0 {
            return Err(range_err("iterations", "must be at least 1"));
        }
        if runs == 0 {
            return Err(range_err("runs", "must be at least 1"));
        }

        let algorithms = match &self.algorithms {
            None => Algorithm::ALL.to_vec(),
            Some(labels) => {
                if labels.is_empty() {
                    return Err(range_err("algorithms", "at least one algorithm is required"));
                }
                let mut parsed = Vec::with_capacity(labels.len());
                for label in labels {
                    let algo: Algorithm = label
                        .parse()
                        .map_err(|e: String| range_err("algorithms", e))?;
                    if parsed.contains(&algo) {
                        return Err(range_err("algorithms", format!("{algo} listed twice")));
                    }
                    parsed.push(algo);
                }
                parsed
            }
        };

        let channel = ChannelSpec::new(n, k).map_err(|e| range_err("k", e.to_string()))?;
        let noise = GmmNoiseParams::new(phi, alpha1, alpha2, snr_to_sigma1_sq(snr_db), sigma2_sq)
            .map_err(|e| range_err("phi", e.to_string()))?;
        let params = FilterParams::new(mu, lambda_r, delta_r).map_err(|e| range_err("mu", e.to_string()))?;
        ScenarioConfig::new(channel, noise, snr_db, params, algorithms, iterations, runs, seed)
            .map_err(|e| range_err("scenario", e.to_string()))
    }
}

/// Parses a flat key-value TOML document into a fully resolved scenario.
pub fn parse_config(source: &str) -> Result<ScenarioConfig, ConfigError> {
    ConfigDocument::from_toml(source)?.resolve()
}

/// Represents a resolved scenario as a fully populated document.
///
/// Only scenarios with identical parameters across algorithms are
/// file-representable; that is the only kind the CLI produces.
pub fn to_document(config: &ScenarioConfig) -> Result<ConfigDocument, ConfigError> {
    let mut params: BTreeMap<Algorithm, FilterParams> = BTreeMap::new();
    for algo in &config.algorithms {
        params.insert(*algo, config.params_for(*algo));
    }
    let mut values = params.values();
    let first = *values.next().expect("scenario has at least one algorithm");
    if values.any(|p| *p != first) {
        return Err(ConfigError::Serialize(
            "per-algorithm parameter overrides cannot be expressed in a flat document".to_string(),
        ));
    }
    Ok(ConfigDocument {
        n: Some(config.channel.length()),
        k: Some(config.channel.sparsity()),
        snr_db: Some(config.snr_db),
        phi: Some(config.noise.phi),
        alpha1: Some(config.noise.alpha1),
        alpha2: Some(config.noise.alpha2),
        sigma2_sq: Some(config.noise.sigma2_sq),
        mu: Some(first.mu()),
        lambda_r: Some(first.lambda_r()),
        delta_r: Some(first.delta_r()),
        iterations: Some(config.iterations),
        runs: Some(config.num_runs),
        seed: Some(config.master_seed),
        algorithms: Some(config.algorithms.iter().map(|a| a.label().to_string()).collect()),
        meta: None,
    })
}

/// Serializes a resolved scenario as a flat TOML document.
pub fn serialize_config(config: &ScenarioConfig) -> Result<String, ConfigError> {
    let doc = to_document(config)?;
    toml::to_string(&doc).map_err(|e| ConfigError::Serialize(e.to_string()))
}

/// Builds the manifest document for a completed run.
pub fn build_manifest(config: &ScenarioConfig, outputs: Vec<String>, created_utc: String) -> Result<String, ConfigError> {
    let mut doc = to_document(config)?;
    doc.meta = Some(ManifestMeta {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        created_utc,
        outputs,
    });
    toml::to_string(&doc).map_err(|e| ConfigError::Serialize(e.to_string()))
}
