use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kernel_spectra::calculus::{self, DerivativeSeriesConfig};
use kernel_spectra::report::{self, EigfunSample};
use kernel_spectra::spectra::{eigenfunction, Spectrum, DEFAULT_ORDER, DEFAULT_PANELS};
use kernel_spectra::suites::{run_suite, Suite, SuiteContext};
use kernel_spectra::Error;

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

/// Spectral toolkit for the kernel K(x,y) = 1/2 - {1/(xy)}.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads for assembly and eigensolves (0 = all cores).
    #[arg(long, global = true, env = "KERNEL_SPECTRA_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the leading eigenvalues as CSV.
    Spectrum {
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample an eigenfunction, its derivative and P, Q as CSV.
    Eigfun {
        /// 1-based index by increasing |λ|.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        j: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        /// Multiplier applied to every numeric tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Write the report as JSON to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Sample points `(i + ½)/S`, nudged off reciprocal integers.
fn sample_points(samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| {
            let x = (i as f64 + 0.5) / samples as f64;
            let n = (1.0 / x).round();
            if (x - 1.0 / n).abs() < 1e-12 {
                x * (1.0 - 1e-9)
            } else {
                x
            }
        })
        .collect()
}

fn eigfun(j: u64, samples: usize, out: PathBuf) -> kernel_spectra::Result<u8> {
    let spec = Spectrum::compute(DEFAULT_PANELS, DEFAULT_ORDER)?;
    let h = eigenfunction(&spec, j as usize)?;
    let cfg = DerivativeSeriesConfig::default();
    let rows = sample_points(samples)
        .into_iter()
        .map(|x| {
            Ok(EigfunSample {
                x,
                phi: h.evaluate(x)?,
                dphi: calculus::derivative(&h, x, &cfg).ok(),
                p: calculus::p_eval(&h, x)?,
                q: calculus::q_eval(&h, x).ok(),
            })
        })
        .collect::<kernel_spectra::Result<Vec<_>>>()?;
    report::write_eigfun_csv(&rows, BufWriter::new(File::create(out)?))?;
    Ok(0)
}

fn run(command: Command) -> kernel_spectra::Result<u8> {
    match command {
        Command::Spectrum { panels, order, count, out } => {
            let spec = Spectrum::compute(panels, order)?;
            report::write_spectrum_csv(&spec, count, BufWriter::new(File::create(out)?))?;
            Ok(0)
        }
        Command::Eigfun { j, samples, out } => eigfun(j, samples, out),
        Command::Verify { suite, tol_scale, json } => {
            let ctx = SuiteContext::new(tol_scale);
            let report = run_suite(suite, &ctx)?;
            for e in &report.entries {
                let status = if e.pass { "PASS" } else { "FAIL" };
                println!("{status} {:<44} computed={:.6e} reference={:.6e}", e.check_id, e.computed, e.reference);
            }
            let failed = report.failures().count();
            println!("{} checks, {failed} failed", report.entries.len());
            if let Some(path) = json {
                std::fs::write(path, report.to_json()?)?;
            }
            Ok(if failed == 0 { 0 } else { EXIT_FAILED_CHECKS })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Domain(_) | Error::Pole(_) => EXIT_USAGE,
                Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
                _ => EXIT_FAILED_CHECKS,
            })
        }
    }
}
