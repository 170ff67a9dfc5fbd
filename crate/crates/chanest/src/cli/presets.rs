//! Named scenario presets covering the standard evaluation matrix: a pure
//! Gaussian baseline, a range of impulsive-noise severities, a sparser
//! channel, and a mixture-probability sweep. All presets use SNR = 10 dB and
//! K = 8 dominant taps unless stated otherwise.

use super::config::ConfigDocument;

/// A named scenario: overrides applied on top of the configuration defaults,
/// plus an optional mixture-probability sweep.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub overrides: ConfigDocument,
    /// When set, the preset runs once per phi value and also emits a
    /// steady-state summary.
    pub phi_sweep: Option<Vec<f64>>,
}

impl Preset {
    fn new(name: &'static str, summary: &'static str, overrides: ConfigDocument) -> Self {
        Preset { name, summary, overrides, phi_sweep: None }
    }
}

fn doc(k: Option<usize>, phi: Option<f64>, sigma2_sq: Option<f64>) -> ConfigDocument {
    ConfigDocument {
        k,
        phi,
        sigma2_sq,
        ..ConfigDocument::default()
    }
}

/// The preset catalog.
pub fn list_presets() -> Vec<Preset> {
    vec![
        Preset::new("fig1", "Gaussian noise only (phi = 0), K = 8", doc(None, Some(0.0), None)),
        Preset::new("fig2", "GMM noise, phi = 0.2, sigma2_sq = 20, K = 8", doc(None, Some(0.2), Some(20.0))),
        Preset::new("fig3", "GMM noise, phi = 0.2, sigma2_sq = 40, K = 8", doc(None, Some(0.2), Some(40.0))),
        Preset::new("fig4", "GMM noise, phi = 0.2, sigma2_sq = 40, sparser channel K = 4", doc(Some(4), Some(0.2), Some(40.0))),
        Preset::new("fig5", "GMM noise, phi = 0.2, sigma2_sq = 80, K = 8", doc(None, Some(0.2), Some(80.0))),
        Preset {
            name: "fig6",
            summary: "phi sweep {0, 0.1, 0.2, 0.4} at sigma2_sq = 40, K = 8",
            overrides: doc(None, None, Some(40.0)),
            phi_sweep: Some(vec![0.0, 0.1, 0.2, 0.4]),
        },
    ]
}

/// Looks up a preset by name.
pub fn find_preset(name: &str) -> Option<Preset> {
    list_presets().into_iter().find(|p| p.name == name)
}
