//! Time series, histograms and distribution checks for single records of both
//! detectors: Poissonian click counts and exponential (log-Rician in dB)
//! spectrum-analyzer bin powers.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};
use crate::harness::sweep::{homodyne_field, SweepSpec};
use crate::homodyne_sim::{synthesize_dark_record, synthesize_variance_record, HomodyneConfig};
use crate::quantum_states::SidebandField;
use crate::rng::derive_seed;
use crate::spdm_sim::{simulate_counts, simulate_dark_counts, CountRecord, SpdmConfig};

/// Significance level of every distribution check.
pub const ALPHA: f64 = 0.01;

const POWER_BINS: usize = 40;
const MAX_COUNT_BINS: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: Option<f64>,
    pub p_value: f64,
    pub passed: bool,
}

impl TestResult {
    fn new(statistic: f64, dof: Option<f64>, p_value: f64) -> Self {
        TestResult { statistic, dof, p_value, passed: p_value > ALPHA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountStats {
    pub bin_seconds: f64,
    #[serde(skip)]
    pub series: Vec<u64>,
    pub histogram: Vec<HistBin>,
    pub mean: f64,
    pub variance: f64,
    /// Variance-to-mean chi-square test.
    pub dispersion: TestResult,
    /// Chi-square goodness of fit against a Poisson of the sample mean.
    pub poisson_fit: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerStats {
    pub bin_seconds: f64,
    #[serde(skip)]
    pub series: Vec<f64>,
    /// Histogram of `10·log10(power)`.
    pub db_histogram: Vec<HistBin>,
    pub mean: f64,
    pub std: f64,
    /// Kolmogorov–Smirnov test of the linear powers against an exponential.
    pub exponential_fit: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub flux_a: f64,
    pub spdm_bright: CountStats,
    pub spdm_dark: CountStats,
    pub homodyne_signal: PowerStats,
    pub homodyne_qnl: PowerStats,
    pub homodyne_dark: PowerStats,
}

fn chi2_sf(stat: f64, dof: f64) -> Result<f64> {
    let d = ChiSquared::new(dof).map_err(|e| Error::invalid("dof", e.to_string()))?;
    Ok(1.0 - d.cdf(stat))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Index-of-dispersion test: `Σ(x − x̄)²/x̄ ~ χ²(K−1)` for Poisson counts,
/// two-sided.
pub fn dispersion_test(counts: &[u64]) -> Result<TestResult> {
    if counts.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: counts.len() });
    }
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (mean, var) = mean_var(&xs);
    if mean <= 0.0 {
        return Err(Error::invalid("counts", "dispersion test needs a positive mean"));
    }
    let dof = (xs.len() - 1) as f64;
    let stat = var * dof / mean;
    let upper = chi2_sf(stat, dof)?;
    Ok(TestResult::new(stat, Some(dof), (2.0 * upper.min(1.0 - upper)).min(1.0)))
}

/// Pearson chi-square fit against `Poisson(x̄)`, cells pooled to an expected
/// count of at least five.
pub fn poisson_gof(counts: &[u64]) -> Result<TestResult> {
    let k_total = counts.len();
    if k_total < 2 {
        return Err(Error::TooFewSamples { min: 2, got: k_total });
    }
    let n = k_total as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let pois = Poisson::new(mean).map_err(|e| Error::invalid("counts", e.to_string()))?;
    let kmax = *counts.iter().max().expect("non-empty");
    let mut observed = vec![0u64; kmax as usize + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=kmax {
        o += observed[k as usize] as f64;
        e += n * pois.pmf(k);
        let tail = n * pois.sf(k);
        if e >= 5.0 && tail >= 5.0 {
            cells.push((o, e));
            (o, e) = (0.0, 0.0);
        }
    }
    e += n * pois.sf(kmax);
    match cells.last_mut() {
        Some(last) if e < 5.0 => {
            last.0 += o;
            last.1 += e;
        }
        _ => cells.push((o, e)),
    }
    if cells.len() < 3 {
        return Err(Error::invalid("counts", "too few populated cells for a goodness-of-fit test"));
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = (cells.len() - 2) as f64;
    Ok(TestResult::new(stat, Some(dof), chi2_sf(stat, dof)?))
}

/// Asymptotic Kolmogorov survival function.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS distance of `samples` from an exponential with the sample mean. Using
/// the estimated mean makes the asymptotic p-value conservative.
pub fn exponential_ks(samples: &[f64]) -> Result<TestResult> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Err(Error::invalid("samples", "exponential fit needs a positive mean"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -(-x / mean).exp_m1();
            (cdf - i as f64 / nf).abs().max(((i + 1) as f64 / nf - cdf).abs())
        })
        .fold(0.0, f64::max);
    let lambda = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    Ok(TestResult::new(d, None, kolmogorov_sf(lambda)))
}

fn count_histogram(counts: &[u64]) -> Vec<HistBin> {
    let (Some(&lo), Some(&hi)) = (counts.iter().min(), counts.iter().max()) else {
        return Vec::new();
    };
    let width = (hi - lo + 1).div_ceil(MAX_COUNT_BINS).max(1);
    let nbins = (hi - lo) / width + 1;
    let mut bins: Vec<HistBin> = (0..nbins)
        .map(|i| HistBin { lo: (lo + i * width) as f64, hi: (lo + (i + 1) * width) as f64, count: 0 })
        .collect();
    for &c in counts {
        bins[((c - lo) / width) as usize].count += 1;
    }
    bins
}

/// Equal-width histogram of `10·log10(x)` over the positive samples.
pub fn db_histogram(samples: &[f64], nbins: usize) -> Vec<HistBin> {
    let db: Vec<f64> = samples.iter().filter(|&&x| x > 0.0).map(|x| 10.0 * x.log10()).collect();
    if db.is_empty() || nbins == 0 {
        return Vec::new();
    }
    let lo = db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / nbins as f64 } else { 1.0 };
    let mut bins: Vec<HistBin> =
        (0..nbins).map(|i| HistBin { lo: lo + i as f64 * width, hi: lo + (i + 1) as f64 * width, count: 0 }).collect();
    for x in db {
        let i = (((x - lo) / width) as usize).min(nbins - 1);
        bins[i].count += 1;
    }
    bins
}

pub fn count_stats(rec: &CountRecord, cfg: &SpdmConfig) -> Result<CountStats> {
    // a short trailing bin would bias both tests
    let full: Vec<u64> = if rec.gates.is_multiple_of(rec.bin_gates) {
        rec.binned_clicks.clone()
    } else {
        rec.binned_clicks[..rec.binned_clicks.len() - 1].to_vec()
    };
    let xs: Vec<f64> = full.iter().map(|&c| c as f64).collect();
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: xs.len() });
    }
    let (mean, variance) = mean_var(&xs);
    Ok(CountStats {
        bin_seconds: rec.bin_gates as f64 * cfg.gate_interval,
        histogram: count_histogram(&full),
        mean,
        variance,
        dispersion: dispersion_test(&full)?,
        poisson_fit: poisson_gof(&full)?,
        series: full,
    })
}

pub fn power_stats(samples: Vec<f64>, cfg: &HomodyneConfig) -> Result<PowerStats> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: samples.len() });
    }
    let (mean, var) = mean_var(&samples);
    Ok(PowerStats {
        bin_seconds: cfg.bin_seconds(),
        db_histogram: db_histogram(&samples, POWER_BINS),
        mean,
        std: var.sqrt(),
        exponential_fit: if mean > 0.0 { Some(exponential_ks(&samples)?) } else { None },
        series: samples,
    })
}

/// One bright and one dark record per detector at incident flux `flux_a`,
/// plus a vacuum (QNL) homodyne record.
pub fn stats_report(flux_a: f64, spec: &SweepSpec) -> Result<StatsReport> {
    spec.validate()?;
    if !(flux_a >= 0.0 && flux_a.is_finite()) {
        return Err(Error::invalid("flux_a", format!("must be finite and >= 0, got {flux_a}")));
    }
    let seed = |k: u64| derive_seed(spec.seed, &[u64::MAX, k]);
    let spdm = SpdmConfig { seed: seed(1), ..spec.spdm };
    let bright = simulate_counts(flux_a * spec.spdm_path.total(), &spdm)?;
    let dark = simulate_dark_counts(&spdm)?;

    let signal_cfg = HomodyneConfig { seed: seed(2), ..spec.homodyne };
    let qnl_cfg = HomodyneConfig { seed: seed(3), ..spec.homodyne };
    let signal = synthesize_variance_record(&homodyne_field(spec, flux_a)?, &signal_cfg)?;
    let qnl = synthesize_variance_record(&SidebandField::vacuum(), &qnl_cfg)?;
    let hdark = synthesize_dark_record(&signal_cfg)?;

    Ok(StatsReport {
        flux_a,
        spdm_bright: count_stats(&bright, &spdm)?,
        spdm_dark: count_stats(&dark, &spdm)?,
        homodyne_signal: power_stats(signal, &signal_cfg)?,
        homodyne_qnl: power_stats(qnl, &qnl_cfg)?,
        homodyne_dark: power_stats(hdark, &signal_cfg)?,
    })
}

/// Plain-text `bin_lo bin_hi count` lines.
pub fn write_histogram<W: Write>(bins: &[HistBin], mut out: W) -> Result<()> {
    for b in bins {
        writeln!(out, "{} {} {}", b.lo, b.hi, b.count)?;
    }
    Ok(())
}

/// Two-column CSV time series, `t_s,value`.
pub fn write_series<W: Write, T: ToString>(values: &[T], bin_seconds: f64, mut out: W) -> Result<()> {
    writeln!(out, "t_s,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", i as f64 * bin_seconds, v.to_string())?;
    }
    Ok(())
}
