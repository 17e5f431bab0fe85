//! Structured harness configuration (TOML or JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::OpticalPath;
use crate::harness::sweep::{default_flux_points, SweepSpec};
use crate::homodyne_sim::HomodyneConfig;
use crate::quantum_states::flux_from_power;
use crate::sideband_scheme::SchemeConfig;
use crate::spdm_sim::SpdmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Incident flux at the reference point, photons/s. Defaults to 29
    /// log-spaced points over 1e2..1e9.
    pub flux_points: Option<Vec<f64>>,
    /// Alternatively, incident optical powers in watts, converted at `wavelength_m`.
    pub power_points_w: Option<Vec<f64>>,
    pub repetitions: usize,
    pub wavelength_m: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { flux_points: None, power_points_w: None, repetitions: 20, wavelength_m: 1540e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub sweep: SweepSettings,
    pub scheme: SchemeConfig,
    pub homodyne: HomodyneConfig,
    pub spdm: SpdmConfig,
    /// Losses from point A to the homodyne detector (B1), excluding the AOM.
    pub homodyne_path: OpticalPath,
    /// Losses from point A to the photon counter (B2).
    pub spdm_path: OpticalPath,
}

/// 50/50 fibre coupler feeding both detectors simultaneously.
pub fn coupler_path() -> OpticalPath {
    OpticalPath::new("A", &[("coupler", 0.5)]).expect("valid constant path")
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            sweep: SweepSettings::default(),
            scheme: SchemeConfig::default(),
            homodyne: HomodyneConfig::default(),
            spdm: SpdmConfig::default(),
            homodyne_path: coupler_path(),
            spdm_path: coupler_path(),
        }
    }
}

impl HarnessConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn flux_points(&self) -> Result<Vec<f64>> {
        match (&self.sweep.flux_points, &self.sweep.power_points_w) {
            (Some(_), Some(_)) => Err(Error::Config("give either flux_points or power_points_w, not both".into())),
            (Some(f), None) => Ok(f.clone()),
            (None, Some(p)) => p.iter().map(|&w| flux_from_power(w, self.sweep.wavelength_m)).collect(),
            (None, None) => Ok(default_flux_points()),
        }
    }

    pub fn to_spec(&self, seed: u64) -> Result<SweepSpec> {
        let spec = SweepSpec {
            flux_points: self.flux_points()?,
            repetitions: self.sweep.repetitions,
            scheme: self.scheme,
            homodyne: self.homodyne,
            spdm: self.spdm,
            homodyne_path: self.homodyne_path.clone(),
            spdm_path: self.spdm_path.clone(),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
