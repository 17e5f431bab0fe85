use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homodyne_flux::harness::stats::{write_histogram, write_series};
use homodyne_flux::harness::{
    model_report, run_selftest, run_sweep, stats_report, write_csv, HarnessConfig, SweepSpec,
};
use homodyne_flux::{with_threads, Error, Result};

#[derive(Parser)]
#[command(name = "homodyne-flux", version, about = "Sideband photon-flux measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flux sweep and write the estimate table as CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Output CSV path (stdout when omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a sweep and write the per-decade model comparison as JSON.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Output JSON path (stdout when omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write the sweep table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write time series and histograms for single records of both detectors.
    Stats {
        #[command(flatten)]
        run: RunArgs,
        /// Incident flux at point A, photons/s.
        #[arg(long, default_value_t = 2e7)]
        flux_a: f64,
        /// Directory for the series/histogram files.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check the analytic identities.
    Selftest,
    /// Print the default configuration as TOML.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    /// TOML (or .json) configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master RNG seed.
    #[arg(long)]
    seed: u64,
    /// Override the number of repetitions per flux point.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Override the flux points (photons/s at point A), comma separated.
    #[arg(long, value_delimiter = ',')]
    flux: Option<Vec<f64>>,
    /// Worker threads (output does not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn spec(&self) -> Result<SweepSpec> {
        let mut cfg = match &self.config {
            Some(p) => HarnessConfig::load(p)?,
            None => HarnessConfig::default(),
        };
        if let Some(r) = self.repetitions {
            cfg.sweep.repetitions = r;
        }
        if let Some(f) = &self.flux {
            cfg.sweep.flux_points = Some(f.clone());
            cfg.sweep.power_points_w = None;
        }
        cfg.to_spec(self.seed)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep { run, out } => {
            let spec = run.spec()?;
            let rows = with_threads(run.threads, || run_sweep(&spec))?;
            write_csv(&rows, output(out.as_deref())?)?;
        }
        Command::Report { run, out, csv } => {
            let spec = run.spec()?;
            let rows = with_threads(run.threads, || run_sweep(&spec))?;
            if let Some(p) = csv {
                write_csv(&rows, BufWriter::new(File::create(p)?))?;
            }
            write_json(&model_report(&rows)?, output(out.as_deref())?)?;
        }
        Command::Stats { run, flux_a, out_dir } => {
            let spec = run.spec()?;
            let report = with_threads(run.threads, || stats_report(flux_a, &spec))?;
            fs::create_dir_all(&out_dir)?;
            let file =
                |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(out_dir.join(name))?)) };
            for (name, s) in [("spdm_bright", &report.spdm_bright), ("spdm_dark", &report.spdm_dark)] {
                write_series(&s.series, s.bin_seconds, file(&format!("{name}_series.csv"))?)?;
                write_histogram(&s.histogram, file(&format!("{name}_hist.txt"))?)?;
            }
            for (name, s) in [
                ("homodyne_signal", &report.homodyne_signal),
                ("homodyne_qnl", &report.homodyne_qnl),
                ("homodyne_dark", &report.homodyne_dark),
            ] {
                write_series(&s.series, s.bin_seconds, file(&format!("{name}_series.csv"))?)?;
                write_histogram(&s.db_histogram, file(&format!("{name}_db_hist.txt"))?)?;
            }
            write_json(&report, file("summary.json")?)?;
            write_json(&report, io::stdout().lock())?;
        }
        Command::Selftest => {
            let report = run_selftest();
            for c in &report.checks {
                println!(
                    "{} {:<52} max_err={:e} tol={:e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_error,
                    c.tolerance
                );
            }
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Defaults => print!("{}", HarnessConfig::default().to_toml()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
