use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fdsec::harness::{audit_csv, parse_sweep, run_experiment, summarize_csv, ExperimentSpec};
use fdsec::scenario::{Mode, Scheme, SystemConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fdsec", version, about = "Secrecy-rate experiments for full-duplex multiuser cells")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte Carlo sweep and write a results CSV.
    Run {
        /// TOML system config; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// AXIS=v1,v2,... with AXIS one of pbs, sigma_si, rbar_ul, nt_nr, k_l.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Comma-separated: proposed-fd, conventional-fd, hd.
        #[arg(long, value_delimiter = ',')]
        schemes: Option<Vec<Scheme>>,
        /// Comma-separated: ewci, scsi, wcs, each optionally with -dl.
        #[arg(long, value_delimiter = ',')]
        mode: Option<Vec<Mode>>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Write zero solve times so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Per-cell statistics and paired gains of a results CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Re-check every ok record against the exact rate model.
    Audit {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run { config, sweep, runs, seed, out, schemes, mode, jobs, no_timing } => {
            let base = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    SystemConfig::from_toml(&text)?
                }
                None => SystemConfig::default(),
            };
            let mut spec = ExperimentSpec::new(base, out);
            if let Some(s) = sweep {
                (spec.axis, spec.values) = parse_sweep(&s)?;
            }
            if let Some(s) = schemes {
                spec.schemes = s;
            }
            if let Some(m) = mode {
                spec.modes = m;
            }
            spec.n_runs = runs;
            spec.base_seed = seed;
            spec.jobs = jobs;
            spec.record_timing = !no_timing;
            let records = run_experiment(&spec)?;
            print!("{}", fdsec::harness::summarize(&records));
            let bad = records.iter().filter(|r| !r.is_ok()).count();
            eprintln!("{} records, {} not ok, written to {}", records.len(), bad, spec.out.display());
            Ok(code(bad == 0))
        }
        Cmd::Summarize { input } => {
            print!("{}", summarize_csv(&input)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Audit { input } => {
            let report = audit_csv(&input)?;
            for (run, scheme, mode, why) in &report.failures {
                println!("run {run} {scheme} {mode}: {why}");
            }
            println!("{} records checked, {} failed", report.checked, report.failures.len());
            Ok(code(report.passed()))
        }
    }
}
