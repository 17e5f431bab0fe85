//! Gated InGaAs APD single-photon detector model.
//!
//! Each gate clicks at most once, with probability `1 − e^{−μ}` where
//! `μ = (η_S·(Φ + Φ_bg) + R_dark)·τ_G`. Without afterpulsing the gates are
//! independent and a display bin's count is drawn as one binomial variate;
//! with afterpulsing the gates form a two-state chain that is simulated gate
//! by gate.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{FluxEstimate, Method};
use crate::homodyne_sim::count_floor;
use crate::par;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpdmConfig {
    /// APD quantum efficiency.
    pub eta_s: f64,
    /// Gate width, s.
    pub gate_width: f64,
    /// Gate repetition interval, s.
    pub gate_interval: f64,
    pub integration_seconds: f64,
    /// Dark counts per second of open-gate time.
    pub dark_rate: f64,
    /// Stray photons/s reaching the APD in both bright and dark records.
    pub background_flux: f64,
    /// Probability that a click triggers a click in the following gate.
    pub afterpulse_prob: f64,
    /// Display bin width for the count time series, s.
    pub bin_seconds: f64,
    pub seed: u64,
}

impl Default for SpdmConfig {
    fn default() -> Self {
        SpdmConfig {
            eta_s: 0.11,
            gate_width: 100e-9,
            gate_interval: 10e-6,
            integration_seconds: 300.0,
            dark_rate: 2000.0,
            background_flux: 0.0,
            afterpulse_prob: 0.0,
            bin_seconds: 1.0,
            seed: 0,
        }
    }
}

impl SpdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_s > 0.0 && self.eta_s <= 1.0) {
            return Err(Error::invalid("eta_s", format!("must lie in (0, 1], got {}", self.eta_s)));
        }
        if !(self.gate_width > 0.0 && self.gate_width < self.gate_interval) {
            return Err(Error::invalid(
                "gate_width",
                format!("need 0 < gate_width < gate_interval, got {} / {}", self.gate_width, self.gate_interval),
            ));
        }
        if !(self.integration_seconds > 0.0 && self.integration_seconds.is_finite()) {
            return Err(Error::invalid(
                "integration_seconds",
                format!("must be > 0, got {}", self.integration_seconds),
            ));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::invalid("dark_rate", format!("must be >= 0, got {}", self.dark_rate)));
        }
        if !(self.background_flux >= 0.0 && self.background_flux.is_finite()) {
            return Err(Error::invalid("background_flux", format!("must be >= 0, got {}", self.background_flux)));
        }
        if !(0.0..=1.0).contains(&self.afterpulse_prob) {
            return Err(Error::invalid("afterpulse_prob", format!("must lie in [0, 1], got {}", self.afterpulse_prob)));
        }
        if !(self.bin_seconds > 0.0) || self.gates_per_bin() == 0 {
            return Err(Error::invalid("bin_seconds", "a display bin must hold at least one gate"));
        }
        if self.n_gates() == 0 {
            return Err(Error::invalid("integration_seconds", "shorter than one gate interval"));
        }
        if self.n_gates().div_ceil(self.gates_per_bin()) > u32::MAX as u64 {
            return Err(Error::invalid("bin_seconds", "too many display bins"));
        }
        Ok(())
    }

    /// Total gates, partial trailing interval dropped.
    pub fn n_gates(&self) -> u64 {
        count_floor(self.integration_seconds / self.gate_interval)
    }

    pub fn gates_per_bin(&self) -> u64 {
        count_floor(self.bin_seconds / self.gate_interval)
    }
}

/// Clicks accumulated over one integration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub clicks: u64,
    pub gates: u64,
    /// Gates per display bin; the last bin may be shorter.
    pub bin_gates: u64,
    pub binned_clicks: Vec<u64>,
}

impl CountRecord {
    pub fn click_fraction(&self) -> f64 {
        self.clicks as f64 / self.gates as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Click rate taken as proportional to flux.
    Linear,
    /// Inverts `p = 1 − e^{−μ}` before scaling.
    LogCorrected,
}

/// Mean photoelectrons plus dark events per gate.
pub fn mean_events_per_gate(flux_at_apd: f64, cfg: &SpdmConfig) -> f64 {
    (cfg.eta_s * (flux_at_apd + cfg.background_flux) + cfg.dark_rate) * cfg.gate_width
}

/// Probability that a gate registers a click (at least one event).
pub fn click_probability(flux_at_apd: f64, cfg: &SpdmConfig) -> f64 {
    -(-mean_events_per_gate(flux_at_apd, cfg)).exp_m1()
}

#[derive(Clone, Copy)]
struct ChainEnd {
    clicks: u64,
    last_clicked: bool,
}

/// Outcome of one bin's gates for both possible states of the preceding gate.
struct BinChains {
    idle: ChainEnd,
    armed: ChainEnd,
}

fn run_bin_chains(rng: &mut impl Rng, gates: u64, p: f64, afterpulse: f64) -> BinChains {
    let mut idle = ChainEnd { clicks: 0, last_clicked: false };
    let mut armed = ChainEnd { clicks: 0, last_clicked: true };
    for _ in 0..gates {
        let primary = rng.random::<f64>() < p;
        let after = rng.random::<f64>() < afterpulse;
        for chain in [&mut idle, &mut armed] {
            let click = primary || (chain.last_clicked && after);
            chain.clicks += click as u64;
            chain.last_clicked = click;
        }
    }
    BinChains { idle, armed }
}

fn simulate(flux_at_apd: f64, cfg: &SpdmConfig, stream_tag: u64, per_gate: bool) -> Result<CountRecord> {
    cfg.validate()?;
    if !(flux_at_apd >= 0.0 && flux_at_apd.is_finite()) {
        return Err(Error::invalid("flux", format!("must be finite and >= 0, got {flux_at_apd}")));
    }
    let p = click_probability(flux_at_apd, cfg);
    let gates = cfg.n_gates();
    let bin_gates = cfg.gates_per_bin();
    let n_bins = gates.div_ceil(bin_gates) as usize;
    let len = |b: usize| bin_gates.min(gates - b as u64 * bin_gates);

    let binned_clicks: Vec<u64> = if per_gate || cfg.afterpulse_prob > 0.0 {
        let chains = par::map_indices(n_bins, |b| {
            let mut rng = rng::stream(cfg.seed, stream_tag, b as u64);
            run_bin_chains(&mut rng, len(b), p, cfg.afterpulse_prob)
        });
        let mut prev = false;
        chains
            .into_iter()
            .map(|c| {
                let end = if prev { c.armed } else { c.idle };
                prev = end.last_clicked;
                end.clicks
            })
            .collect()
    } else {
        par::map_indices(n_bins, |b| {
            let mut rng = rng::stream(cfg.seed, stream_tag, b as u64);
            // p is a probability in [0, 1] by construction
            Binomial::new(len(b), p).expect("valid binomial").sample(&mut rng)
        })
    };

    Ok(CountRecord { clicks: binned_clicks.iter().sum(), gates, bin_gates, binned_clicks })
}

/// Illuminated record at `flux_at_apd` photons/s.
pub fn simulate_counts(flux_at_apd: f64, cfg: &SpdmConfig) -> Result<CountRecord> {
    simulate(flux_at_apd, cfg, tag::SPDM_BRIGHT, false)
}

/// Same as [`simulate_counts`] but always steps through individual gates.
pub fn simulate_counts_per_gate(flux_at_apd: f64, cfg: &SpdmConfig) -> Result<CountRecord> {
    simulate(flux_at_apd, cfg, tag::SPDM_BRIGHT, true)
}

/// Record with the signal blocked, drawn from a stream independent of the
/// bright record for the same seed.
pub fn simulate_dark_counts(cfg: &SpdmConfig) -> Result<CountRecord> {
    simulate(0.0, cfg, tag::SPDM_DARK, false)
}

/// Flux at the APD from a bright and a dark record, with the dark mean
/// subtracted.
pub fn estimate_flux_from_counts(
    bright: &CountRecord,
    dark: &CountRecord,
    cfg: &SpdmConfig,
    mode: EstimatorMode,
) -> Result<FluxEstimate> {
    cfg.validate()?;
    if bright.gates != dark.gates || bright.gates == 0 {
        return Err(Error::Mismatch(format!("bright record has {} gates, dark record {}", bright.gates, dark.gates)));
    }
    let gates = bright.gates as f64;
    let per_gate_scale = cfg.gate_width * cfg.eta_s;
    match mode {
        EstimatorMode::Linear => {
            let scale = gates * per_gate_scale;
            let phi = (bright.clicks as f64 - dark.clicks as f64) / scale;
            let sigma = ((bright.clicks + dark.clicks) as f64).sqrt() / scale;
            Ok(FluxEstimate::new(phi, sigma, Method::SpdmLinear, "detector"))
        }
        EstimatorMode::LogCorrected => {
            let (pb, pd) = (bright.click_fraction(), dark.click_fraction());
            for p in [pb, pd] {
                if p >= 1.0 {
                    return Err(Error::Saturated(p));
                }
            }
            let phi = (-(-pb).ln_1p() + (-pd).ln_1p()) / per_gate_scale;
            let var = (pb / (1.0 - pb) + pd / (1.0 - pd)) / gates;
            Ok(FluxEstimate::new(phi, var.sqrt() / per_gate_scale, Method::SpdmLog, "detector"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quiet() -> SpdmConfig {
        SpdmConfig { dark_rate: 0.0, ..Default::default() }
    }

    #[test]
    fn default_gate_bookkeeping() {
        let cfg = SpdmConfig::default();
        assert_eq!(cfg.n_gates(), 30_000_000);
        assert_eq!(cfg.gates_per_bin(), 100_000);
    }

    #[test]
    fn click_probability_examples() {
        assert_eq!(click_probability(0.0, &quiet()), 0.0);
        assert_relative_eq!(click_probability(1e5, &quiet()), 1.099_395_221_772_381_2e-3, max_relative = 1e-12);
        assert_eq!(click_probability(1e30, &quiet()), 1.0);
    }

    #[test]
    fn dark_only_gate_probability() {
        let cfg = SpdmConfig::default();
        assert_relative_eq!(click_probability(0.0, &cfg), -(-2e-4f64).exp_m1(), max_relative = 1e-12);
    }

    #[test]
    fn no_light_no_dark_no_clicks() {
        let rec = simulate_counts(0.0, &quiet()).unwrap();
        assert_eq!(rec.clicks, 0);
        assert_eq!(rec.gates, 30_000_000);
        assert_eq!(rec.binned_clicks.len(), 300);
    }

    #[test]
    fn default_operating_point_click_total() {
        let cfg = SpdmConfig { seed: 4, ..quiet() };
        let rec = simulate_counts(1e5, &cfg).unwrap();
        let expected = 3e7 * click_probability(1e5, &cfg);
        assert!((rec.clicks as f64 - expected).abs() < 4.0 * expected.sqrt(), "{}", rec.clicks);
        assert!((expected - 3.3e4).abs() < 100.0);
    }

    #[test]
    fn clicks_never_exceed_gates() {
        let cfg = SpdmConfig { integration_seconds: 0.5, afterpulse_prob: 0.5, ..quiet() };
        let rec = simulate_counts(1e9, &cfg).unwrap();
        assert!(rec.clicks <= rec.gates);
        assert!(rec.binned_clicks.iter().all(|&c| c <= rec.bin_gates));
    }

    #[test]
    fn partial_trailing_bin() {
        let cfg = SpdmConfig { integration_seconds: 2.5, ..Default::default() };
        let rec = simulate_counts(1e6, &cfg).unwrap();
        assert_eq!(rec.binned_clicks.len(), 3);
        assert_eq!(rec.gates, 250_000);
    }

    #[test]
    fn seeded_records_repeat() {
        let cfg = SpdmConfig { integration_seconds: 5.0, afterpulse_prob: 0.1, seed: 8, ..Default::default() };
        assert_eq!(simulate_counts(1e6, &cfg).unwrap(), simulate_counts(1e6, &cfg).unwrap());
        let plain = SpdmConfig { afterpulse_prob: 0.0, ..cfg };
        assert_eq!(simulate_counts(1e6, &plain).unwrap(), simulate_counts(1e6, &plain).unwrap());
    }

    #[test]
    fn dark_stream_is_independent_of_bright_stream() {
        let cfg = SpdmConfig { integration_seconds: 5.0, seed: 2, ..Default::default() };
        assert_ne!(simulate_counts(0.0, &cfg).unwrap(), simulate_dark_counts(&cfg).unwrap());
    }

    #[test]
    fn per_gate_chain_agrees_with_binomial_path() {
        let cfg = SpdmConfig { integration_seconds: 20.0, seed: 21, ..Default::default() };
        let flux = 2e6;
        let a = simulate_counts(flux, &cfg).unwrap();
        let b = simulate_counts_per_gate(flux, &cfg).unwrap();
        let p = click_probability(flux, &cfg);
        let sd = (a.gates as f64 * p * (1.0 - p)).sqrt();
        assert!((a.clicks as f64 - b.clicks as f64).abs() < 4.0 * std::f64::consts::SQRT_2 * sd);
    }

    #[test]
    fn afterpulsing_raises_the_click_rate() {
        // stationary rate of the two-state chain: p / (1 − (1 − p)·a)
        let cfg = SpdmConfig { integration_seconds: 20.0, afterpulse_prob: 0.2, seed: 5, ..quiet() };
        let flux = 5e6;
        let p = click_probability(flux, &cfg);
        let q = p / (1.0 - (1.0 - p) * cfg.afterpulse_prob);
        let rec = simulate_counts(flux, &cfg).unwrap();
        let n = rec.gates as f64;
        // chain variance is inflated by positive correlation; 8σ of the iid value is generous
        assert!((rec.click_fraction() - q).abs() < 8.0 * (q * (1.0 - q) / n).sqrt(), "{} vs {q}", rec.click_fraction());
        assert!(rec.click_fraction() > p);
    }

    #[test]
    fn equal_records_give_zero_flux() {
        let rec = simulate_counts(1e5, &SpdmConfig { integration_seconds: 2.0, ..Default::default() }).unwrap();
        for mode in [EstimatorMode::Linear, EstimatorMode::LogCorrected] {
            let est = estimate_flux_from_counts(&rec, &rec, &SpdmConfig::default(), mode).unwrap();
            assert_eq!(est.phi, 0.0);
            assert!(!est.negative_mean_deleted);
        }
    }

    fn record_with_fraction(p: f64, gates: u64) -> CountRecord {
        let clicks = (p * gates as f64).round() as u64;
        CountRecord { clicks, gates, bin_gates: gates, binned_clicks: vec![clicks] }
    }

    #[test]
    fn log_corrected_inverts_click_probability() {
        let cfg = quiet();
        let gates = 1u64 << 40;
        let bright = CountRecord {
            clicks: (click_probability(1e5, &cfg) * gates as f64) as u64,
            gates,
            bin_gates: gates,
            binned_clicks: vec![],
        };
        let dark = CountRecord { clicks: 0, gates, bin_gates: gates, binned_clicks: vec![] };
        let est = estimate_flux_from_counts(&bright, &dark, &cfg, EstimatorMode::LogCorrected).unwrap();
        assert_relative_eq!(est.phi, 1e5, max_relative = 1e-6);
        assert_eq!(est.method, Method::SpdmLog);
    }

    #[test]
    fn linear_mode_saturation_bias() {
        let cfg = quiet();
        let mu: f64 = 0.5;
        let flux = mu / (cfg.eta_s * cfg.gate_width);
        let gates = 1u64 << 40;
        let bright = record_with_fraction(click_probability(flux, &cfg), gates);
        let dark = record_with_fraction(0.0, gates);
        let est = estimate_flux_from_counts(&bright, &dark, &cfg, EstimatorMode::Linear).unwrap();
        assert_relative_eq!(est.phi / flux, 0.786_938_680_574_733_2, max_relative = 1e-9);
    }

    #[test]
    fn saturated_record_cannot_be_inverted() {
        let full = record_with_fraction(1.0, 100);
        let dark = record_with_fraction(0.0, 100);
        assert_eq!(
            estimate_flux_from_counts(&full, &dark, &quiet(), EstimatorMode::LogCorrected),
            Err(Error::Saturated(1.0))
        );
        assert!(estimate_flux_from_counts(&full, &dark, &quiet(), EstimatorMode::Linear).is_ok());
    }

    #[test]
    fn dark_excess_is_flagged_not_fatal() {
        let bright = record_with_fraction(1e-4, 1_000_000);
        let dark = record_with_fraction(2e-4, 1_000_000);
        let est = estimate_flux_from_counts(&bright, &dark, &quiet(), EstimatorMode::Linear).unwrap();
        assert!(est.negative_mean_deleted);
        assert_eq!(est.phi, 0.0);
    }

    #[test]
    fn mismatched_records_rejected() {
        let a = record_with_fraction(0.1, 100);
        let b = record_with_fraction(0.1, 200);
        assert!(matches!(estimate_flux_from_counts(&a, &b, &quiet(), EstimatorMode::Linear), Err(Error::Mismatch(_))));
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            SpdmConfig { eta_s: 0.0, ..Default::default() },
            SpdmConfig { gate_width: 20e-6, ..Default::default() },
            SpdmConfig { integration_seconds: 0.0, ..Default::default() },
            SpdmConfig { dark_rate: -1.0, ..Default::default() },
            SpdmConfig { afterpulse_prob: 1.5, ..Default::default() },
            SpdmConfig { bin_seconds: 1e-6, ..Default::default() },
        ];
        for cfg in bad {
            assert!(simulate_counts(1.0, &cfg).is_err(), "{cfg:?}");
        }
        assert!(simulate_counts(-1.0, &SpdmConfig::default()).is_err());
    }
}
