//! Photon-flux estimators and calibration-point bookkeeping.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne_sim::{effective_efficiency, HomodyneConfig, VarianceEstimate};
use crate::sideband_scheme::single_sideband_photon_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Vacuum-subtracted homodyne estimate, `n̄ = V − 1`.
    Quantum,
    /// Homodyne estimate without vacuum subtraction, `n̄ = V`.
    Semiclassical,
    SpdmLinear,
    SpdmLog,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Quantum, Method::Semiclassical, Method::SpdmLinear, Method::SpdmLog];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quantum => "quantum",
            Method::Semiclassical => "semiclassical",
            Method::SpdmLinear => "spdm_linear",
            Method::SpdmLog => "spdm_log",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inferred mean photon flux (photons/s) at a named point.
///
/// Negative estimates are reported as `phi = 0` with `negative_mean_deleted`
/// set; the untruncated value stays available in `raw_phi` for statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxEstimate {
    pub phi: f64,
    pub raw_phi: f64,
    pub sigma: f64,
    pub method: Method,
    pub point: String,
    pub negative_mean_deleted: bool,
}

impl FluxEstimate {
    pub fn new(raw_phi: f64, sigma: f64, method: Method, point: impl Into<String>) -> Self {
        let deleted = raw_phi < 0.0;
        FluxEstimate {
            phi: if deleted { 0.0 } else { raw_phi },
            raw_phi,
            sigma,
            method,
            point: point.into(),
            negative_mean_deleted: deleted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathElement {
    pub label: String,
    pub transmission: f64,
}

/// Ordered losses from a reference point to a detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalPath {
    /// Label of the reference point estimates are referred back to.
    pub reference: String,
    pub elements: Vec<PathElement>,
}

impl OpticalPath {
    pub fn new(reference: impl Into<String>, elements: &[(&str, f64)]) -> Result<Self> {
        let path = OpticalPath {
            reference: reference.into(),
            elements: elements
                .iter()
                .map(|&(label, transmission)| PathElement { label: label.to_owned(), transmission })
                .collect(),
        };
        path.validate()?;
        Ok(path)
    }

    /// Lossless path.
    pub fn direct(reference: impl Into<String>) -> Self {
        OpticalPath { reference: reference.into(), elements: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.elements {
            if !(e.transmission > 0.0 && e.transmission <= 1.0) {
                return Err(Error::invalid(
                    "transmission",
                    format!("element `{}` must lie in (0, 1], got {}", e.label, e.transmission),
                ));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.elements.iter().map(|e| e.transmission).product()
    }

    /// This path followed by one more element.
    pub fn then(&self, label: &str, transmission: f64) -> OpticalPath {
        let mut p = self.clone();
        p.elements.push(PathElement { label: label.to_owned(), transmission });
        p
    }
}

/// Photons per mode of the analysis bandwidth for a flux in photons/s.
pub fn occupancy_from_flux(flux: f64, rbw: f64) -> f64 {
    flux / rbw
}

fn check_subtracted(v: &VarianceEstimate) -> Result<()> {
    if v.dark_subtracted {
        Ok(())
    } else {
        Err(Error::Precondition("homodyne flux estimators expect a dark-subtracted variance"))
    }
}

/// `Φ = (V − 1) · RBW / η` using the measured RBW.
pub fn homodyne_flux_quantum(v: &VarianceEstimate, cfg: &HomodyneConfig) -> Result<FluxEstimate> {
    check_subtracted(v)?;
    let scale = cfg.rbw_measured / effective_efficiency(cfg);
    Ok(FluxEstimate::new(single_sideband_photon_number(v.value) * scale, v.sigma * scale, Method::Quantum, "detector"))
}

/// `Φ = V · RBW / η`, treating the vacuum floor as signal.
pub fn homodyne_flux_semiclassical(v: &VarianceEstimate, cfg: &HomodyneConfig) -> Result<FluxEstimate> {
    check_subtracted(v)?;
    let scale = cfg.rbw_measured / effective_efficiency(cfg);
    Ok(FluxEstimate::new(v.value * scale, v.sigma * scale, Method::Semiclassical, "detector"))
}

/// Divides flux and uncertainty by the path's total transmission.
pub fn refer_to_reference(est: &FluxEstimate, path: &OpticalPath) -> Result<FluxEstimate> {
    path.validate()?;
    let t = path.total();
    if !(t > 0.0) {
        return Err(Error::invalid("path", "total transmission must be > 0"));
    }
    let mut out = FluxEstimate::new(est.raw_phi / t, est.sigma / t, est.method, path.reference.clone());
    out.negative_mean_deleted = est.negative_mean_deleted || out.negative_mean_deleted;
    Ok(out)
}

/// Standard error after averaging `n` independent samples of spread `base_sigma`.
pub fn statistical_sigma(n_samples: usize, base_sigma: f64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    Ok(base_sigma / (n_samples as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_cfg() -> HomodyneConfig {
        HomodyneConfig { eta_det: 1.0, visibility: 0.93, ..Default::default() }
    }

    fn sub(value: f64, sigma: f64) -> VarianceEstimate {
        VarianceEstimate { value, n_samples: 995, sigma, dark_subtracted: true }
    }

    #[test]
    fn quantum_examples() {
        let cfg = default_cfg();
        let vac = homodyne_flux_quantum(&sub(1.0, 0.0), &cfg).unwrap();
        assert_eq!(vac.phi, 0.0);
        assert!(!vac.negative_mean_deleted);
        let one = homodyne_flux_quantum(&sub(2.0, 0.0), &cfg).unwrap();
        assert_relative_eq!(one.phi, 38.362_816_510_579_26, max_relative = 1e-12);
        assert_eq!(one.method, Method::Quantum);
    }

    #[test]
    fn quantum_negative_mean_is_flagged() {
        let est = homodyne_flux_quantum(&sub(0.95, 0.01), &default_cfg()).unwrap();
        assert!(est.negative_mean_deleted);
        assert_eq!(est.phi, 0.0);
        assert!(est.raw_phi < 0.0);
        assert!(est.sigma > 0.0);
    }

    #[test]
    fn raw_variance_rejected() {
        let raw = VarianceEstimate { dark_subtracted: false, ..sub(2.0, 0.0) };
        assert!(homodyne_flux_quantum(&raw, &default_cfg()).is_err());
        assert!(homodyne_flux_semiclassical(&raw, &default_cfg()).is_err());
    }

    #[test]
    fn semiclassical_examples() {
        let cfg = default_cfg();
        let vac = homodyne_flux_semiclassical(&sub(1.0, 0.0), &cfg).unwrap();
        assert_relative_eq!(vac.phi, 38.362_816_510_579_26, max_relative = 1e-12);
        let q = homodyne_flux_quantum(&sub(1001.0, 0.0), &cfg).unwrap();
        let s = homodyne_flux_semiclassical(&sub(1001.0, 0.0), &cfg).unwrap();
        assert_relative_eq!(s.phi / q.phi, 1.001, max_relative = 1e-12);
        let q2 = homodyne_flux_quantum(&sub(2.0, 0.0), &cfg).unwrap();
        let s2 = homodyne_flux_semiclassical(&sub(2.0, 0.0), &cfg).unwrap();
        assert_relative_eq!(s2.phi, 2.0 * q2.phi, max_relative = 1e-15);
    }

    #[test]
    fn model_gap_is_rbw_over_eta() {
        let cfg = HomodyneConfig::default();
        let gap = cfg.rbw_measured / effective_efficiency(&cfg);
        for v in [1.0, 1.3, 7.0, 1e3, 1e7] {
            let q = homodyne_flux_quantum(&sub(v, 0.0), &cfg).unwrap();
            let s = homodyne_flux_semiclassical(&sub(v, 0.0), &cfg).unwrap();
            assert!((s.raw_phi - q.raw_phi - gap).abs() <= 1e-9 * s.raw_phi.max(1.0));
        }
    }

    #[test]
    fn referral_examples() {
        let est = FluxEstimate::new(50.0, 5.0, Method::Quantum, "B1");
        let unity = OpticalPath::new("A", &[("fiber", 1.0)]).unwrap();
        let same = refer_to_reference(&est, &unity).unwrap();
        assert_eq!(same.phi, 50.0);
        assert_eq!(same.point, "A");
        let half = OpticalPath::new("A", &[("coupler", 0.5)]).unwrap();
        let r = refer_to_reference(&est, &half).unwrap();
        assert_eq!((r.phi, r.sigma), (100.0, 10.0));
        let chained = OpticalPath::new("A", &[("a", 0.5), ("b", 0.5)]).unwrap();
        let single = OpticalPath::new("A", &[("ab", 0.25)]).unwrap();
        assert_eq!(refer_to_reference(&est, &chained).unwrap().phi, refer_to_reference(&est, &single).unwrap().phi);
    }

    #[test]
    fn referral_keeps_deletion_flag() {
        let est = FluxEstimate::new(-3.0, 1.0, Method::SpdmLinear, "B2");
        let r = refer_to_reference(&est, &OpticalPath::direct("A")).unwrap();
        assert!(r.negative_mean_deleted);
        assert_eq!(r.phi, 0.0);
        assert_eq!(r.raw_phi, -3.0);
    }

    #[test]
    fn zero_transmission_rejected() {
        assert!(OpticalPath::new("A", &[("blocked", 0.0)]).is_err());
        let bad =
            OpticalPath { reference: "A".into(), elements: vec![PathElement { label: "x".into(), transmission: 0.0 }] };
        assert!(refer_to_reference(&FluxEstimate::new(1.0, 0.0, Method::Quantum, "B1"), &bad).is_err());
    }

    #[test]
    fn statistical_sigma_examples() {
        assert_eq!(statistical_sigma(1, 3.0).unwrap(), 3.0);
        assert_eq!(statistical_sigma(100, 3.0).unwrap(), 0.3);
        assert!(statistical_sigma(0, 3.0).is_err());
    }

    #[test]
    fn quantum_estimate_is_monotone() {
        let cfg = HomodyneConfig::default();
        let mut last = f64::NEG_INFINITY;
        for k in 0..200 {
            let v = 0.5 + k as f64 * 0.37;
            let phi = homodyne_flux_quantum(&sub(v, 0.0), &cfg).unwrap().raw_phi;
            assert!(phi > last);
            last = phi;
        }
    }
}
