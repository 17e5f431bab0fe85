//! Closed-form sideband state algebra.
//!
//! Fields are described by c-number sideband moments at `+ω` and `-ω`
//! relative to the local oscillator. Quadrature variances are expressed in
//! units of the quantum noise limit (vacuum = 1) with the convention
//! `X^θ = δa·e^{iθ} + δa†·e^{-iθ}`.

use std::f64::consts::FRAC_PI_2;

pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// CODATA exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J·s.
    pub h: f64,
    /// Speed of light in vacuum, m/s.
    pub c: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants { h: 6.626_070_15e-34, c: 299_792_458.0 };
}

/// Parametric optical state at the two sidebands `±ω` of the local oscillator.
///
/// `alpha_plus`/`alpha_minus` are coherent amplitudes per mode of the analysis
/// bandwidth. When `squeezed` is set, an amplitude-quadrature squeeze of
/// factor `r` is superposed on the displacement. A vacuum flag marks a
/// sideband as an independent vacuum input: it carries no amplitude and no
/// correlation with the other sideband.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandField {
    alpha_plus: Complex64,
    alpha_minus: Complex64,
    r: f64,
    squeezed: bool,
    vacuum_plus: bool,
    vacuum_minus: bool,
}

/// Second moments entering the sideband variance decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandMoments {
    /// `⟨δA(ω)†δA(ω)⟩`
    pub n_plus: f64,
    /// `⟨δA(-ω)†δA(-ω)⟩`
    pub n_minus: f64,
    /// `⟨δA(-ω)δA(ω)⟩`; its conjugate is the `δA(-ω)†δA(ω)†` term.
    pub correlation: Complex64,
}

impl SidebandField {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn raw(alpha_plus: Complex64, alpha_minus: Complex64) -> Self {
        SidebandField { alpha_plus, alpha_minus, r: 0.0, squeezed: false, vacuum_plus: false, vacuum_minus: false }
    }

    pub fn vacuum() -> Self {
        let mut f = Self::raw(Self::ZERO, Self::ZERO);
        f.vacuum_plus = true;
        f.vacuum_minus = true;
        f
    }

    /// Single-mode coherent state `|α⟩` viewed at frequency `ω`: equal,
    /// fully correlated amplitudes at both sidebands, so that
    /// `V⁺ = 4Re(α)² + 1` and `V⁻ = 4Im(α)² + 1`.
    pub fn coherent(alpha: Complex64) -> Self {
        Self::raw(alpha, alpha)
    }

    /// Coherent amplitude in the `+ω` sideband only; the `-ω` sideband is
    /// empty but not yet flagged as an independent vacuum input.
    pub fn single_sideband(alpha: Complex64) -> Self {
        Self::raw(alpha, Self::ZERO)
    }

    /// Independent coherent amplitudes in both sidebands.
    pub fn two_sideband(alpha_plus: Complex64, alpha_minus: Complex64) -> Self {
        Self::raw(alpha_plus, alpha_minus)
    }

    /// Amplitude-squeezed vacuum, `ΔX⁺ = e^{-r}`.
    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        Self::squeezed_coherent(Self::ZERO, r)
    }

    /// Displaced amplitude-squeezed state `|α, r⟩`.
    pub fn squeezed_coherent(alpha: Complex64, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", format!("squeeze factor must be finite and >= 0, got {r}")));
        }
        let mut f = Self::coherent(alpha);
        f.r = r;
        f.squeezed = true;
        Ok(f)
    }

    /// Occupied `+ω` sideband with an independent vacuum at `-ω`.
    pub(crate) fn upper_with_vacuum_mirror(alpha: Complex64) -> Self {
        let mut f = Self::raw(alpha, Self::ZERO);
        f.vacuum_minus = true;
        f
    }

    /// Occupied `-ω` sideband with an independent vacuum at `+ω`.
    pub(crate) fn lower_with_vacuum_mirror(alpha: Complex64) -> Self {
        let mut f = Self::raw(Self::ZERO, alpha);
        f.vacuum_plus = true;
        f
    }

    pub fn alpha_plus(&self) -> Complex64 {
        self.alpha_plus
    }

    pub fn alpha_minus(&self) -> Complex64 {
        self.alpha_minus
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn squeezed(&self) -> bool {
        self.squeezed
    }

    pub fn vacuum_plus(&self) -> bool {
        self.vacuum_plus
    }

    pub fn vacuum_minus(&self) -> bool {
        self.vacuum_minus
    }

    /// Scales every amplitude for a power transmission `t` (beam-splitter loss).
    /// Squeezed fields are rejected: loss would turn them into mixed states,
    /// which this parametrisation does not carry.
    pub fn attenuate(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid("transmission", format!("must lie in [0, 1], got {t}")));
        }
        if self.squeezed && self.r > 0.0 {
            return Err(Error::Precondition("attenuation of squeezed fields is not modeled"));
        }
        let k = t.sqrt();
        let mut f = *self;
        f.alpha_plus *= k;
        f.alpha_minus *= k;
        Ok(f)
    }

    pub fn moments(&self) -> SidebandMoments {
        let mut n_plus = self.alpha_plus.norm_sqr();
        let mut n_minus = self.alpha_minus.norm_sqr();
        let mut correlation = self.alpha_plus * self.alpha_minus;
        if self.squeezed && self.r > 0.0 {
            let (s, c) = (self.r.sinh(), self.r.cosh());
            if !self.vacuum_plus {
                n_plus += s * s;
            }
            if !self.vacuum_minus {
                n_minus += s * s;
            }
            if !(self.vacuum_plus || self.vacuum_minus) {
                correlation -= Complex64::new(s * c, 0.0);
            }
        }
        if self.vacuum_plus || self.vacuum_minus {
            correlation = Self::ZERO;
        }
        SidebandMoments { n_plus, n_minus, correlation }
    }

    /// Quadrature variances at `θ` and `θ + π/2`.
    pub fn quadrature_pair(&self, theta: f64) -> QuadratureVariance {
        QuadratureVariance {
            v_plus: variance_spectrum(self, theta),
            v_minus: variance_spectrum(self, theta + FRAC_PI_2),
        }
    }
}

/// Amplitude/phase quadrature variance pair, QNL-relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureVariance {
    pub v_plus: f64,
    pub v_minus: f64,
}

impl QuadratureVariance {
    /// Checked constructor: both variances non-negative and
    /// `v_plus · v_minus ≥ 1` up to rounding.
    pub fn new(v_plus: f64, v_minus: f64) -> Result<Self> {
        if !(v_plus >= 0.0 && v_minus >= 0.0) {
            return Err(Error::invalid("variance", format!("must be >= 0, got ({v_plus}, {v_minus})")));
        }
        if v_plus * v_minus < 1.0 - 1e-12 {
            return Err(Error::invalid(
                "variance",
                format!("product {} violates the uncertainty bound", v_plus * v_minus),
            ));
        }
        Ok(QuadratureVariance { v_plus, v_minus })
    }
}

/// `⟨|δX^θ(ω)|²⟩` for the parametric field: both sideband occupations, the
/// two cross-sideband terms (phase-dependent), and the unit vacuum term.
pub fn variance_spectrum(field: &SidebandField, theta: f64) -> f64 {
    let m = field.moments();
    let rot = Complex64::from_polar(1.0, 2.0 * theta);
    m.n_plus + m.n_minus + 2.0 * (rot * m.correlation).re + 1.0
}

/// Mean photon number averaged over both sidebands, `(V⁺ + V⁻ − 2)/4`.
/// Not clamped: noisy inputs may yield negative values.
pub fn mean_photon_from_variances(v: &QuadratureVariance) -> f64 {
    (v.v_plus + v.v_minus - 2.0) / 4.0
}

pub fn coherent_variances(alpha: Complex64) -> QuadratureVariance {
    QuadratureVariance { v_plus: 4.0 * alpha.re * alpha.re + 1.0, v_minus: 4.0 * alpha.im * alpha.im + 1.0 }
}

/// `|α|² + sinh² r`.
pub fn squeezed_photon_number(alpha: Complex64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::invalid("r", format!("squeeze factor must be >= 0, got {r}")));
    }
    let s = r.sinh();
    Ok(alpha.norm_sqr() + s * s)
}

/// Squeeze factor for a gain `G ≥ 1`: `r = −ln(√G − √(G−1))`.
///
/// Evaluated as `ln(√G + √(G−1))`, which is the same number (the two
/// logarithm arguments are reciprocal) without the cancellation at large G.
pub fn squeeze_factor_from_gain(gain: f64) -> Result<f64> {
    if !(gain >= 1.0 && gain.is_finite()) {
        return Err(Error::invalid("gain", format!("must be finite and >= 1, got {gain}")));
    }
    Ok((gain.sqrt() + (gain - 1.0).sqrt()).ln())
}

/// Photon flux `Pλ/(hc)` in photons/s for optical power `P` (W) at wavelength `λ` (m).
pub fn flux_from_power(power: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::invalid("wavelength", format!("must be > 0, got {wavelength}")));
    }
    if !(power >= 0.0) {
        return Err(Error::invalid("power", format!("must be >= 0, got {power}")));
    }
    let k = PhysicalConstants::CODATA;
    Ok(power * wavelength / (k.h * k.c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_variance_is_one_at_every_angle() {
        let vac = SidebandField::vacuum();
        for k in 0..16 {
            assert_eq!(variance_spectrum(&vac, k as f64 * 0.4), 1.0);
        }
    }

    #[test]
    fn coherent_amplitude_quadrature() {
        // 4·Re(α)² + 1 with α = 2
        let f = SidebandField::coherent(c(2.0, 0.0));
        assert_relative_eq!(variance_spectrum(&f, 0.0), 17.0, epsilon = 1e-12);
        assert_relative_eq!(variance_spectrum(&f, PI / 2.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_vacuum_amplitude_quadrature() {
        let f = SidebandField::squeezed_vacuum(1.0).unwrap();
        assert_relative_eq!(variance_spectrum(&f, 0.0), 0.135_335_283_236_612_7, max_relative = 1e-12);
        assert_relative_eq!(variance_spectrum(&f, PI / 2.0), 1f64.exp().powi(2), max_relative = 1e-12);
    }

    #[test]
    fn mean_photon_examples() {
        let q = |a, b| QuadratureVariance::new(a, b).unwrap();
        assert_eq!(mean_photon_from_variances(&q(1.0, 1.0)), 0.0);
        assert_eq!(mean_photon_from_variances(&q(17.0, 1.0)), 4.0);
        let e2 = 2f64.exp();
        assert_relative_eq!(
            mean_photon_from_variances(&q(1.0 / e2, e2)),
            1.381_097_845_541_815_5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn coherent_variance_examples() {
        assert_eq!(coherent_variances(c(0.0, 0.0)), QuadratureVariance { v_plus: 1.0, v_minus: 1.0 });
        assert_eq!(coherent_variances(c(2.0, 0.0)), QuadratureVariance { v_plus: 17.0, v_minus: 1.0 });
        assert_eq!(coherent_variances(c(1.0, 1.0)), QuadratureVariance { v_plus: 5.0, v_minus: 5.0 });
    }

    #[test]
    fn coherent_field_matches_closed_form_pair() {
        let a = c(1.3, -0.7);
        let pair = SidebandField::coherent(a).quadrature_pair(0.0);
        let closed = coherent_variances(a);
        assert_relative_eq!(pair.v_plus, closed.v_plus, max_relative = 1e-12);
        assert_relative_eq!(pair.v_minus, closed.v_minus, max_relative = 1e-12);
    }

    #[test]
    fn squeezed_photon_number_examples() {
        assert_eq!(squeezed_photon_number(c(0.0, 0.0), 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            squeezed_photon_number(c(0.0, 0.0), 1.0).unwrap(),
            1.381_097_845_541_815_5,
            max_relative = 1e-12
        );
        assert_eq!(squeezed_photon_number(c(2.0, 0.0), 0.0).unwrap(), 4.0);
        assert!(squeezed_photon_number(c(0.0, 0.0), -0.1).is_err());
    }

    #[test]
    fn squeeze_factor_examples() {
        assert_eq!(squeeze_factor_from_gain(1.0).unwrap(), 0.0);
        assert_relative_eq!(squeeze_factor_from_gain(2.0).unwrap(), 0.881_373_587_019_542_9, max_relative = 1e-14);
        assert_relative_eq!(squeeze_factor_from_gain(5.0).unwrap(), 1.443_635_475_178_809_9, max_relative = 1e-12);
        assert!(squeeze_factor_from_gain(0.99).is_err());
        assert!(squeeze_factor_from_gain(f64::NAN).is_err());
    }

    #[test]
    fn squeeze_factor_matches_literal_form() {
        for g in [1.0, 1.5, 3.0, 10.0, 100.0] {
            let literal = -(f64::sqrt(g) - f64::sqrt(g - 1.0)).ln();
            assert_relative_eq!(squeeze_factor_from_gain(g).unwrap(), literal, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn flux_from_power_examples() {
        assert_eq!(flux_from_power(0.0, 1540e-9).unwrap(), 0.0);
        // hc/λ watts is one photon per second
        assert_relative_eq!(flux_from_power(1.289_899_907_239_564e-19, 1540e-9).unwrap(), 1.0, max_relative = 1e-5);
        assert_relative_eq!(flux_from_power(1e-12, 1540e-9).unwrap(), 7.752_539_514_015_773e6, max_relative = 1e-9);
        assert!(flux_from_power(1e-12, 0.0).is_err());
        assert!(flux_from_power(-1e-12, 1540e-9).is_err());
    }

    #[test]
    fn vacuum_mirror_removes_correlations() {
        let f = SidebandField::upper_with_vacuum_mirror(c(2.0, 1.0));
        assert_eq!(f.moments().correlation, Complex64::new(0.0, 0.0));
        assert_eq!(f.alpha_minus(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn uncertainty_bound_is_enforced() {
        assert!(QuadratureVariance::new(0.5, 1.5).is_err());
        assert!(QuadratureVariance::new(-0.1, 20.0).is_err());
        let e2 = 2f64.exp();
        assert!(QuadratureVariance::new(1.0 / e2, e2).is_ok());
    }

    #[test]
    fn negative_squeeze_rejected() {
        assert!(SidebandField::squeezed_vacuum(-1.0).is_err());
    }
}
