//! Per-decade accuracy summary of every estimator over a sweep.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::Method;
use crate::harness::sweep::{SweepRow, CSV_SCHEMA_VERSION};

/// A point is usable when a single measurement's RMS relative error
/// (systematic bias and scatter combined) is below this.
pub const USABLE_REL_ERROR: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub flux_a: f64,
    pub n: usize,
    pub errors: usize,
    pub deleted: usize,
    pub mean_estimate: f64,
    pub rel_bias: f64,
    pub rel_spread: f64,
    pub rel_rms: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecadeSummary {
    /// `floor(log10(flux_a))`
    pub decade: i32,
    pub flux_lo: f64,
    pub flux_hi: f64,
    pub n_points: usize,
    pub mean_bias: f64,
    pub mean_spread: f64,
    pub worst_rel_rms: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub points: Vec<PointSummary>,
    pub decades: Vec<DecadeSummary>,
    /// Length of the longest run of consecutive usable decades.
    pub usable_decades: usize,
    /// Flux bounds of that run.
    pub usable_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub schema_version: u32,
    pub usable_threshold: f64,
    pub methods: Vec<MethodReport>,
}

impl ModelReport {
    pub fn method(&self, m: Method) -> &MethodReport {
        self.methods.iter().find(|r| r.method == m).expect("every method is reported")
    }
}

fn decade_of(flux: f64) -> i32 {
    (flux.log10() + 1e-9).floor() as i32
}

fn summarize_point(flux_a: f64, rows: &[&SweepRow], method: Method) -> PointSummary {
    let mut values = Vec::new();
    let mut sigmas = Vec::new();
    let (mut errors, mut deleted) = (0, 0);
    for row in rows {
        match row.get(method) {
            Some(Ok(e)) => {
                values.push(e.raw_phi);
                sigmas.push(e.sigma);
                deleted += e.negative_mean_deleted as usize;
            }
            _ => errors += 1,
        }
    }
    let n = values.len();
    let (mean, spread) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mean = values.iter().sum::<f64>() / n as f64;
        let spread = if n >= 2 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            sigmas[0]
        };
        (mean, spread)
    };
    let rel_bias = mean / flux_a - 1.0;
    let rel_spread = spread / flux_a;
    let rel_rms = rel_bias.hypot(rel_spread);
    PointSummary {
        flux_a,
        n,
        errors,
        deleted,
        mean_estimate: mean,
        rel_bias,
        rel_spread,
        rel_rms,
        usable: errors == 0 && n > 0 && rel_rms < USABLE_REL_ERROR,
    }
}

fn method_report(groups: &[(f64, Vec<&SweepRow>)], method: Method) -> MethodReport {
    let points: Vec<PointSummary> = groups.iter().map(|(f, rows)| summarize_point(*f, rows, method)).collect();

    let mut decades: Vec<DecadeSummary> = Vec::new();
    for p in &points {
        let d = decade_of(p.flux_a);
        if decades.last().is_none_or(|last| last.decade != d) {
            decades.push(DecadeSummary {
                decade: d,
                flux_lo: 10f64.powi(d),
                flux_hi: 10f64.powi(d + 1),
                n_points: 0,
                mean_bias: 0.0,
                mean_spread: 0.0,
                worst_rel_rms: 0.0,
                usable: true,
            });
        }
        let cur = decades.last_mut().expect("pushed above");
        cur.n_points += 1;
        cur.mean_bias += p.rel_bias;
        cur.mean_spread += p.rel_spread;
        cur.worst_rel_rms = if p.rel_rms.is_nan() { f64::NAN } else { cur.worst_rel_rms.max(p.rel_rms) };
        cur.usable &= p.usable;
    }
    for d in &mut decades {
        d.mean_bias /= d.n_points as f64;
        d.mean_spread /= d.n_points as f64;
    }

    let (mut best, mut best_end, mut run) = (0usize, 0usize, 0usize);
    for (i, d) in decades.iter().enumerate() {
        let contiguous = i == 0 || decades[i - 1].decade + 1 == d.decade;
        run = match (d.usable, contiguous) {
            (false, _) => 0,
            (true, true) => run + 1,
            (true, false) => 1,
        };
        if run > best {
            best = run;
            best_end = i;
        }
    }
    let usable_range = (best > 0).then(|| (decades[best_end + 1 - best].flux_lo, decades[best_end].flux_hi));

    MethodReport { method, points, decades, usable_decades: best, usable_range }
}

/// Groups rows by flux point and summarises bias, scatter and usable range
/// per method.
pub fn model_report(rows: &[SweepRow]) -> Result<ModelReport> {
    if rows.is_empty() {
        return Err(Error::invalid("rows", "report needs at least one sweep row"));
    }
    let mut groups: Vec<(f64, Vec<&SweepRow>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(f, _)| f.to_bits() == row.flux_a.to_bits()) {
            Some((_, g)) => g.push(row),
            None => groups.push((row.flux_a, vec![row])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ModelReport {
        schema_version: CSV_SCHEMA_VERSION,
        usable_threshold: USABLE_REL_ERROR,
        methods: Method::ALL.iter().map(|&m| method_report(&groups, m)).collect(),
    })
}
