//! Analytic identity checks on the closed-form state algebra and estimators.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::estimation::{homodyne_flux_quantum, homodyne_flux_semiclassical};
use crate::homodyne_sim::{effective_efficiency, HomodyneConfig, VarianceEstimate};
use crate::quantum_states::{
    coherent_variances, mean_photon_from_variances, squeeze_factor_from_gain, variance_spectrum, Complex64,
    QuadratureVariance, SidebandField,
};
use crate::sideband_scheme::{apply_scheme, phase_sweep, single_sideband_photon_number, SchemeConfig};

const SELFTEST_SEED: u64 = 0x5e1f_7e57;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, max_error: f64, tolerance: f64) -> Check {
    Check { name, max_error, tolerance, passed: max_error <= tolerance }
}

/// Error scaled by `max(1, |expected|)`: relative for large values, absolute
/// near zero where the inputs themselves carry rounding of order 1e-16.
fn scaled_err(got: f64, expected: f64) -> f64 {
    (got - expected).abs() / expected.abs().max(1.0)
}

fn coherent_mean_photon(rng: &mut ChaCha8Rng) -> f64 {
    (0..1000)
        .map(|_| {
            // uniform over the disk |α| ≤ 10
            let radius = 10.0 * rng.random::<f64>().sqrt();
            let alpha = Complex64::from_polar(radius, TAU * rng.random::<f64>());
            let n = mean_photon_from_variances(&coherent_variances(alpha));
            (n - alpha.norm_sqr()).abs() / alpha.norm_sqr()
        })
        .fold(0.0, f64::max)
}

fn squeezed_mean_photon() -> f64 {
    (0..=300)
        .map(|k| {
            let r = k as f64 * 0.01;
            let expected = r.sinh().powi(2);
            let field = SidebandField::squeezed_vacuum(r).expect("r >= 0");
            let via_field = mean_photon_from_variances(&field.quadrature_pair(0.0));
            let closed = QuadratureVariance { v_plus: (-2.0 * r).exp(), v_minus: (2.0 * r).exp() };
            scaled_err(via_field, expected).max(scaled_err(mean_photon_from_variances(&closed), expected))
        })
        .fold(0.0, f64::max)
}

fn single_vs_two_sideband() -> f64 {
    [1.0, 1.25, 2.0, 3.7, 101.0, 1e6]
        .iter()
        .map(|&v| {
            let avg = mean_photon_from_variances(&QuadratureVariance { v_plus: v, v_minus: v });
            scaled_err(single_sideband_photon_number(v), 2.0 * avg)
        })
        .fold(0.0, f64::max)
}

fn orthogonal_pair_invariance() -> f64 {
    let fields = [
        SidebandField::coherent(Complex64::new(1.2, -0.4)),
        SidebandField::squeezed_vacuum(0.8).expect("r >= 0"),
        SidebandField::squeezed_coherent(Complex64::new(0.3, 2.0), 1.5).expect("r >= 0"),
        SidebandField::two_sideband(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.5)),
    ];
    fields
        .iter()
        .map(|f| {
            let reference = mean_photon_from_variances(&f.quadrature_pair(0.0));
            (0..100)
                .map(|k| {
                    let theta = PI * k as f64 / 100.0;
                    (mean_photon_from_variances(&f.quadrature_pair(theta)) - reference).abs()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn gain_monotone() -> f64 {
    let gains: Vec<f64> = (0..400).map(|k| 1.0 + (k as f64 * 0.05).powi(2)).collect();
    let rs: Vec<f64> = gains.iter().map(|&g| squeeze_factor_from_gain(g).expect("G >= 1")).collect();
    rs.windows(2).filter(|w| w[1] <= w[0]).count() as f64
}

fn scheme_phase_flatness() -> f64 {
    let input = SidebandField::single_sideband(Complex64::new(3.0, 1.0));
    let out = apply_scheme(&input, &SchemeConfig::default()).expect("single-sideband input");
    let sweep = phase_sweep(&out, 100).expect("n >= 2");
    let max = sweep.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let min = sweep.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let quad_gap = (variance_spectrum(&out, 0.0) - variance_spectrum(&out, FRAC_PI_2)).abs();
    (max - min).max(quad_gap)
}

fn model_gap() -> f64 {
    let cfg = HomodyneConfig::default();
    let gap = cfg.rbw_measured / effective_efficiency(&cfg);
    [1.0, 1.5, 10.0, 1e4]
        .iter()
        .map(|&value| {
            let v = VarianceEstimate { value, n_samples: 995, sigma: 0.0, dark_subtracted: true };
            let q = homodyne_flux_quantum(&v, &cfg).expect("subtracted");
            let s = homodyne_flux_semiclassical(&v, &cfg).expect("subtracted");
            scaled_err(s.raw_phi - q.raw_phi, gap)
        })
        .fold(0.0, f64::max)
}

/// Runs every identity check. Deterministic; completes in milliseconds.
pub fn run_selftest() -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(SELFTEST_SEED);
    let unity_gain = squeeze_factor_from_gain(1.0).expect("G = 1 is valid");
    SelftestReport {
        checks: vec![
            check("coherent_mean_photon_equals_alpha_sq", coherent_mean_photon(&mut rng), 1e-12),
            check("squeezed_vacuum_mean_photon_equals_sinh_sq", squeezed_mean_photon(), 1e-12),
            check("single_sideband_equals_twice_two_sideband_average", single_vs_two_sideband(), 1e-12),
            check("unity_gain_gives_zero_squeeze", unity_gain.abs(), 0.0),
            check("orthogonal_pair_mean_photon_rotation_invariant", orthogonal_pair_invariance(), 1e-10),
            check("squeeze_factor_monotone_in_gain", gain_monotone(), 0.0),
            check("scheme_output_phase_flat", scheme_phase_flatness(), 1e-12),
            check("semiclassical_minus_quantum_is_rbw_over_eta", model_gap(), 1e-9),
        ],
    }
}
