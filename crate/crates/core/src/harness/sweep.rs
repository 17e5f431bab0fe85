//! Flux sweeps through both detector chains.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    homodyne_flux_quantum, homodyne_flux_semiclassical, occupancy_from_flux, refer_to_reference, FluxEstimate, Method,
    OpticalPath,
};
use crate::harness::config::coupler_path;
use crate::homodyne_sim::{dark_record, measure_variance, subtract_dark, synthesize_variance_record, HomodyneConfig};
use crate::par;
use crate::quantum_states::{Complex64, SidebandField};
use crate::rng::derive_seed;
use crate::sideband_scheme::{apply_scheme, SchemeConfig};
use crate::spdm_sim::{estimate_flux_from_counts, simulate_counts, simulate_dark_counts, EstimatorMode, SpdmConfig};

/// Bump when the CSV column set changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 5] = ["flux_a", "method", "phi_est", "sigma", "flagged"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Incident flux at point A, photons/s, ascending.
    pub flux_points: Vec<f64>,
    pub repetitions: usize,
    pub scheme: SchemeConfig,
    /// Detector settings; the `seed` field is replaced per row.
    pub homodyne: HomodyneConfig,
    pub spdm: SpdmConfig,
    pub homodyne_path: OpticalPath,
    pub spdm_path: OpticalPath,
    pub seed: u64,
}

/// 29 points, four per decade, from 1e2 to 1e9 photons/s.
pub fn default_flux_points() -> Vec<f64> {
    let mantissas = [1.0, 10f64.powf(0.25), 10f64.powf(0.5), 10f64.powf(0.75)];
    let mut pts: Vec<f64> = (2..9).flat_map(|d| mantissas.iter().map(move |m| m * 10f64.powi(d))).collect();
    pts.push(1e9);
    pts
}

impl SweepSpec {
    pub fn standard(seed: u64) -> Self {
        SweepSpec {
            flux_points: default_flux_points(),
            repetitions: 20,
            scheme: SchemeConfig::default(),
            homodyne: HomodyneConfig::default(),
            spdm: SpdmConfig::default(),
            homodyne_path: coupler_path(),
            spdm_path: coupler_path(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        if self.flux_points.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::invalid("flux_points", "every point must be finite and > 0"));
        }
        if self.flux_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("flux_points", "must be strictly ascending"));
        }
        self.scheme.validate()?;
        self.homodyne.validate()?;
        self.spdm.validate()?;
        self.homodyne_path.validate()?;
        self.spdm_path.validate()
    }

    /// Every loss between point A and the homodyne detector, AOM included.
    pub fn homodyne_referral_path(&self) -> OpticalPath {
        self.homodyne_path.then("aom", self.scheme.aom_transmission)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub result: std::result::Result<FluxEstimate, Error>,
}

/// Estimates for one (flux point, repetition), referred to point A.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub repetition: usize,
    pub flux_a: f64,
    /// One entry per method, in [`Method::ALL`] order.
    pub estimates: Vec<MethodOutcome>,
}

impl SweepRow {
    pub fn get(&self, method: Method) -> Option<&std::result::Result<FluxEstimate, Error>> {
        self.estimates.iter().find(|o| o.method == method).map(|o| &o.result)
    }
}

/// Field at the homodyne detector for an incident flux at A.
pub fn homodyne_field(spec: &SweepSpec, flux_a: f64) -> Result<SidebandField> {
    let flux = flux_a * spec.homodyne_path.total();
    let occupancy = occupancy_from_flux(flux, spec.homodyne.rbw_measured);
    let input = SidebandField::single_sideband(Complex64::new(occupancy.sqrt(), 0.0));
    apply_scheme(&input, &spec.scheme)
}

fn homodyne_estimates(spec: &SweepSpec, flux_a: f64, seed: u64) -> Result<(FluxEstimate, FluxEstimate)> {
    let cfg = HomodyneConfig { seed, ..spec.homodyne };
    let field = homodyne_field(spec, flux_a)?;
    let measured = measure_variance(&synthesize_variance_record(&field, &cfg)?)?;
    let v = subtract_dark(&measured, &dark_record(&cfg)?)?;
    let path = spec.homodyne_referral_path();
    let at_b1 = |mut e: FluxEstimate| {
        e.point = "B1".into();
        refer_to_reference(&e, &path)
    };
    Ok((at_b1(homodyne_flux_quantum(&v, &cfg)?)?, at_b1(homodyne_flux_semiclassical(&v, &cfg)?)?))
}

fn spdm_estimates(spec: &SweepSpec, flux_a: f64, seed: u64) -> Result<(Result<FluxEstimate>, Result<FluxEstimate>)> {
    let cfg = SpdmConfig { seed, ..spec.spdm };
    let bright = simulate_counts(flux_a * spec.spdm_path.total(), &cfg)?;
    let dark = simulate_dark_counts(&cfg)?;
    let estimate = |mode| {
        let mut e = estimate_flux_from_counts(&bright, &dark, &cfg, mode)?;
        e.point = "B2".into();
        refer_to_reference(&e, &spec.spdm_path)
    };
    Ok((estimate(EstimatorMode::Linear), estimate(EstimatorMode::LogCorrected)))
}

fn run_row(spec: &SweepSpec, point: usize, repetition: usize) -> SweepRow {
    let flux_a = spec.flux_points[point];
    let row_seed = derive_seed(spec.seed, &[point as u64, repetition as u64]);
    let (quantum, semiclassical) = match homodyne_estimates(spec, flux_a, derive_seed(row_seed, &[1])) {
        Ok((q, s)) => (Ok(q), Ok(s)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let (linear, log) = match spdm_estimates(spec, flux_a, derive_seed(row_seed, &[2])) {
        Ok(pair) => pair,
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let estimates = [quantum, semiclassical, linear, log]
        .into_iter()
        .zip(Method::ALL)
        .map(|(result, method)| MethodOutcome { method, result })
        .collect();
    SweepRow { point, repetition, flux_a, estimates }
}

/// Runs every (flux point × repetition). Per-row failures are recorded in the
/// row; only an invalid spec is an error. Rows are ordered by point, then
/// repetition, whatever the scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let reps = spec.repetitions;
    Ok(par::map_indices(spec.flux_points.len() * reps, |i| run_row(spec, i / reps, i % reps)))
}

/// Long-format CSV, one line per row and method. `phi_est` is the reported
/// (truncated) flux; `flagged` is `ok`, `negative_mean_deleted` or `error`.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        for o in &row.estimates {
            let flux = row.flux_a.to_string();
            let rec = match &o.result {
                Ok(e) => [
                    flux,
                    o.method.to_string(),
                    e.phi.to_string(),
                    e.sigma.to_string(),
                    if e.negative_mean_deleted { "negative_mean_deleted" } else { "ok" }.to_owned(),
                ],
                Err(_) => [flux, o.method.to_string(), String::new(), String::new(), "error".to_owned()],
            };
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SweepSpec {
        SweepSpec {
            flux_points: vec![1e4, 1e6],
            repetitions: 2,
            spdm: SpdmConfig { integration_seconds: 5.0, ..Default::default() },
            ..SweepSpec::standard(seed)
        }
    }

    #[test]
    fn default_points_span_seven_decades() {
        let p = default_flux_points();
        assert_eq!(p.len(), 29);
        assert_eq!(p[0], 1e2);
        assert_eq!(p[4], 1e3);
        assert_eq!(p[28], 1e9);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        for f in [1.6e5, 8.0e6, 9.8e8] {
            assert!(f > p[0] && f < p[28]);
        }
    }

    #[test]
    fn empty_sweep_is_empty() {
        let spec = SweepSpec { flux_points: vec![], ..small(1) };
        assert!(run_sweep(&spec).unwrap().is_empty());
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let rows = run_sweep(&small(3)).unwrap();
        assert_eq!(rows.len(), 4);
        let keys: Vec<_> = rows.iter().map(|r| (r.point, r.repetition)).collect();
        assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        for r in &rows {
            assert_eq!(r.estimates.len(), 4);
            for o in &r.estimates {
                assert_eq!(o.result.as_ref().unwrap().point, "A");
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec { repetitions: 0, ..small(1) }.validate().is_err());
        assert!(SweepSpec { flux_points: vec![-1.0], ..small(1) }.validate().is_err());
        assert!(SweepSpec { flux_points: vec![2.0, 2.0], ..small(1) }.validate().is_err());
    }

    #[test]
    fn row_errors_are_recorded_not_fatal() {
        // everything saturates: log-corrected inversion fails, the rest still runs
        let spec = SweepSpec {
            flux_points: vec![1e15],
            repetitions: 1,
            spdm: SpdmConfig { integration_seconds: 0.01, dark_rate: 0.0, ..Default::default() },
            ..SweepSpec::standard(1)
        };
        let rows = run_sweep(&spec).unwrap();
        assert!(matches!(rows[0].get(Method::SpdmLog), Some(Err(Error::Saturated(_)))));
        assert!(rows[0].get(Method::Quantum).unwrap().is_ok());
        let csv = csv_string(&rows).unwrap();
        assert!(csv.lines().any(|l| l.ends_with(",error") && l.contains("spdm_log")));
    }

    #[test]
    fn csv_layout() {
        let rows = run_sweep(&small(9)).unwrap();
        let csv = csv_string(&rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("flux_a,method,phi_est,sigma,flagged"));
        assert_eq!(csv.lines().count(), 1 + 4 * rows.len());
        assert!(!csv.contains('\r'));
        let methods: Vec<&str> = csv.lines().skip(1).take(4).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(methods, ["quantum", "semiclassical", "spdm_linear", "spdm_log"]);
    }

    #[test]
    fn sweep_is_seed_deterministic() {
        let a = csv_string(&run_sweep(&small(5)).unwrap()).unwrap();
        let b = csv_string(&run_sweep(&small(5)).unwrap()).unwrap();
        let c = csv_string(&run_sweep(&small(6)).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
