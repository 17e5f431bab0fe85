//! Homodyne detector and spectrum-analyzer record synthesis.
//!
//! One record is `N = floor(record_seconds × rbw_measured)` independent RBW
//! bins. Each bin is the power `|z|²/2` of a circular complex Gaussian whose
//! per-quadrature variance is `η(V − 1) + 1 + dark_variance`: optical excess
//! noise is scaled by the detection efficiency, the vacuum unit enters through
//! every loss port and electronic noise adds on top. Noise-only bins are
//! therefore exponential in linear power and log-Rician-like in dB.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::quantum_states::{variance_spectrum, SidebandField};
use crate::rng::{self, tag};

/// Bins per RNG stream. Fixed, so records are independent of thread count.
const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomodyneConfig {
    /// PIN photodiode quantum efficiency.
    pub eta_det: f64,
    /// Interferometric fringe visibility.
    pub visibility: f64,
    /// LO phase, radians.
    pub lo_phase: f64,
    /// Nominal SA resolution bandwidth, Hz.
    pub rbw_nominal: f64,
    /// Measured SA resolution bandwidth, Hz. This one sets bin count and flux scaling.
    pub rbw_measured: f64,
    pub record_seconds: f64,
    /// Electronic noise power, QNL-relative.
    pub dark_variance: f64,
    pub seed: u64,
}

impl Default for HomodyneConfig {
    fn default() -> Self {
        HomodyneConfig {
            eta_det: 0.9,
            visibility: 0.93,
            lo_phase: 0.0,
            rbw_nominal: 30.0,
            rbw_measured: 33.18,
            record_seconds: 30.0,
            dark_variance: 0.1,
            seed: 0,
        }
    }
}

/// `floor(x)` for a count computed as a ratio of decimal parameters; absorbs
/// representation error so that e.g. `300 / 1e-5` counts 3e7, not 3e7 − 1.
pub(crate) fn count_floor(x: f64) -> u64 {
    (x * (1.0 + 1e-12)).floor() as u64
}

impl HomodyneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(Error::invalid("eta_det", format!("must lie in (0, 1], got {}", self.eta_det)));
        }
        if !(self.visibility > 0.0 && self.visibility <= 1.0) {
            return Err(Error::invalid("visibility", format!("must lie in (0, 1], got {}", self.visibility)));
        }
        if !self.lo_phase.is_finite() {
            return Err(Error::invalid("lo_phase", "must be finite"));
        }
        if !(self.rbw_measured > 0.0 && self.rbw_measured.is_finite()) {
            return Err(Error::invalid("rbw_measured", format!("must be > 0, got {}", self.rbw_measured)));
        }
        if !(self.rbw_nominal > 0.0) {
            return Err(Error::invalid("rbw_nominal", format!("must be > 0, got {}", self.rbw_nominal)));
        }
        if !(self.record_seconds > 0.0 && self.record_seconds.is_finite()) {
            return Err(Error::invalid("record_seconds", format!("must be > 0, got {}", self.record_seconds)));
        }
        if !(self.dark_variance >= 0.0 && self.dark_variance.is_finite()) {
            return Err(Error::invalid("dark_variance", format!("must be >= 0, got {}", self.dark_variance)));
        }
        let n = self.n_samples();
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
        if n as u64 > BLOCK as u64 * (u32::MAX as u64) {
            return Err(Error::invalid("record_seconds", "record too long"));
        }
        Ok(())
    }

    /// Number of independent RBW bins in one record.
    pub fn n_samples(&self) -> usize {
        count_floor(self.record_seconds * self.rbw_measured) as usize
    }

    /// Duration of one bin, `1/RBW`.
    pub fn bin_seconds(&self) -> f64 {
        1.0 / self.rbw_measured
    }
}

/// Dark-subtracted or raw variance with its statistical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub n_samples: usize,
    pub sigma: f64,
    pub dark_subtracted: bool,
}

/// Overall detection efficiency `VIS² · η_det`.
pub fn effective_efficiency(cfg: &HomodyneConfig) -> f64 {
    cfg.visibility * cfg.visibility * cfg.eta_det
}

/// Expected bin power for `field` under `cfg`.
pub fn expected_bin_power(field: &SidebandField, cfg: &HomodyneConfig) -> f64 {
    let v_true = variance_spectrum(field, cfg.lo_phase);
    effective_efficiency(cfg) * (v_true - 1.0) + 1.0 + cfg.dark_variance
}

fn synthesize(per_quadrature_variance: f64, n: usize, seed: u64, stream_tag: u64) -> Vec<f64> {
    let scale = per_quadrature_variance.sqrt();
    let blocks = n.div_ceil(BLOCK);
    let chunks = par::map_indices(blocks, |b| {
        let len = BLOCK.min(n - b * BLOCK);
        let mut rng = rng::stream(seed, stream_tag, b as u64);
        (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let (re, im) = (scale * re, scale * im);
                0.5 * (re * re + im * im)
            })
            .collect::<Vec<f64>>()
    });
    chunks.concat()
}

/// Per-bin power samples (QNL-relative) recorded for `field`.
pub fn synthesize_variance_record(field: &SidebandField, cfg: &HomodyneConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok(synthesize(expected_bin_power(field, cfg), cfg.n_samples(), cfg.seed, tag::HOMODYNE_SIGNAL))
}

/// Bin powers with the optical input blocked and no LO: electronic noise only.
pub fn synthesize_dark_record(cfg: &HomodyneConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok(synthesize(cfg.dark_variance, cfg.n_samples(), cfg.seed, tag::HOMODYNE_DARK))
}

/// Video-averaged variance: sample mean with standard error `std/√N`.
pub fn measure_variance(samples: &[f64]) -> Result<VarianceEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let std = (ss / (nf - 1.0)).sqrt();
    Ok(VarianceEstimate { value: mean, n_samples: n, sigma: std / nf.sqrt(), dark_subtracted: false })
}

/// Measured electronic-noise level for `cfg`.
pub fn dark_record(cfg: &HomodyneConfig) -> Result<VarianceEstimate> {
    measure_variance(&synthesize_dark_record(cfg)?)
}

/// Removes the electronic-noise contribution; uncertainties add in quadrature.
/// Negative results are returned as-is.
pub fn subtract_dark(measured: &VarianceEstimate, dark: &VarianceEstimate) -> Result<VarianceEstimate> {
    if measured.dark_subtracted || dark.dark_subtracted {
        return Err(Error::Precondition("subtract_dark expects two raw estimates"));
    }
    Ok(VarianceEstimate {
        value: measured.value - dark.value,
        n_samples: measured.n_samples,
        sigma: measured.sigma.hypot(dark.sigma),
        dark_subtracted: true,
    })
}
