//! Frequency-shifted detection topology.
//!
//! An acousto-optic modulator offsets the mode of interest from the local
//! oscillator by an RF frequency, so the mirror sideband is filled only by an
//! independent vacuum input. With no cross-sideband correlation left, the
//! measured variance loses its dependence on the LO phase and the occupied
//! sideband's photon number is simply `V − 1`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum_states::{variance_spectrum, Complex64, SidebandField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDirection {
    /// Signal shifted above the LO; vacuum enters at `-ω`.
    SignalUpshifted,
    /// LO shifted above the signal; vacuum enters at `+ω`.
    LoUpshifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    /// AOM drive frequency, Hz.
    pub omega_aom: f64,
    /// Analysis (spectrum analyzer centre) frequency, Hz.
    pub detection_center: f64,
    pub direction: ShiftDirection,
    /// Power transmission of the AOM path.
    pub aom_transmission: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            omega_aom: 80e6,
            // second diffraction order
            detection_center: 160e6,
            direction: ShiftDirection::SignalUpshifted,
            aom_transmission: 1.0,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_aom > 0.0) {
            return Err(Error::invalid("omega_aom", format!("must be > 0, got {}", self.omega_aom)));
        }
        if !(self.detection_center > 0.0) {
            return Err(Error::invalid("detection_center", format!("must be > 0, got {}", self.detection_center)));
        }
        if !(0.0..=1.0).contains(&self.aom_transmission) {
            return Err(Error::invalid(
                "aom_transmission",
                format!("must lie in [0, 1], got {}", self.aom_transmission),
            ));
        }
        Ok(())
    }
}

/// Places the single occupied mode of `input` on the sideband selected by
/// `cfg.direction`, attenuated by the AOM transmission, with an independent
/// vacuum on the mirror sideband.
pub fn apply_scheme(input: &SidebandField, cfg: &SchemeConfig) -> Result<SidebandField> {
    cfg.validate()?;
    if input.squeezed() && input.r() > 0.0 {
        return Err(Error::BothSidebandsOccupied);
    }
    let zero = Complex64::new(0.0, 0.0);
    let alpha = match (input.alpha_plus() != zero, input.alpha_minus() != zero) {
        (true, true) => return Err(Error::BothSidebandsOccupied),
        (true, false) => input.alpha_plus(),
        (false, _) => input.alpha_minus(),
    };
    let alpha = alpha * cfg.aom_transmission.sqrt();
    Ok(match cfg.direction {
        ShiftDirection::SignalUpshifted => SidebandField::upper_with_vacuum_mirror(alpha),
        ShiftDirection::LoUpshifted => SidebandField::lower_with_vacuum_mirror(alpha),
    })
}

/// Photons per mode in the occupied sideband, `V − 1`. Not clamped.
pub fn single_sideband_photon_number(v: f64) -> f64 {
    v - 1.0
}

/// Variance at `n_points` equally spaced LO phases over `[0, 2π)`.
pub fn phase_sweep(field: &SidebandField, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n_points });
    }
    Ok((0..n_points)
        .map(|k| {
            let theta = TAU * k as f64 / n_points as f64;
            (theta, variance_spectrum(field, theta))
        })
        .collect())
}
