//! Monte Carlo experiment runner: paired draws over a parameter sweep,
//! incremental CSV output, summaries and re-audits of finished runs.

mod record;
mod spec;
mod summary;

pub use record::{fmt_float, read_records, read_records_file, ResultRecord, Status, COLUMNS};
pub use spec::{parse_sweep, run_seed, ExperimentSpec, SweepAxis};
pub use summary::{mean, sample_std, summarize, CellStats, Gain, Summary};

use crate::algorithms::{block_shares, cell_rates, objective_value, run_scheme, scheme_instances, SchemeOutcome, AUDIT_SLACK, POWER_SLACK};
use crate::error::{Error, Result};
use crate::rates::{self, DesignPoint};
use crate::scenario::{sample_channels, sample_topology, Mode, Objective, Scheme, SystemConfig};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::LN_2;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

/// Final points of one record, kept beside the CSV for `audit_csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointsLine {
    pub run: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub mode: Mode,
    pub config: SystemConfig,
    /// One per optimized block, physical units.
    pub points: Vec<DesignPoint<f64>>,
}

/// `results.csv` → `results.points.jsonl`.
pub fn points_path(csv: &Path) -> PathBuf {
    csv.with_extension("points.jsonl")
}

fn failed(run: usize, seed: u64, hash: &str, scheme: Scheme, mode: Mode, value: f64, status: Status, detail: String) -> ResultRecord {
    ResultRecord {
        run,
        seed,
        channel_hash: hash.to_string(),
        scheme,
        mode,
        sweep_value: value,
        min_sr: f64::NAN,
        user_srs: vec![],
        iterations: 0,
        solve_time: 0.0,
        tau: vec![],
        an_fraction: f64::NAN,
        status,
        detail,
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn describe(o: &SchemeOutcome) -> String {
    o.termination().iter().map(|t| format!("{t:?}").to_ascii_lowercase()).collect::<Vec<_>>().join("+")
}

struct TaskOutput {
    records: Vec<ResultRecord>,
    points: Vec<PointsLine>,
}

/// Every scheme and mode of one run, all on the same draw.
fn run_task(spec: &ExperimentSpec, sweep: usize, run: usize) -> TaskOutput {
    let seed = run_seed(spec.base_seed, sweep, run);
    let value = spec.values[sweep];
    let mut out = TaskOutput { records: vec![], points: vec![] };
    let draw = catch_unwind(AssertUnwindSafe(|| -> Result<_> {
        let cfg = spec.config_at(sweep, spec.base.mode)?;
        let topo = sample_topology(&cfg, seed)?;
        Ok(sample_channels::<f64>(&topo, &cfg, seed))
    }));
    let ch = match draw {
        Ok(Ok(ch)) => ch,
        other => {
            let (status, why) = match other {
                Ok(Err(e)) => (Status::of_error(&e), e.to_string()),
                Err(p) => (Status::Panicked, panic_message(p)),
                Ok(Ok(_)) => unreachable!(),
            };
            for &mode in &spec.modes {
                for &scheme in &spec.schemes {
                    out.records.push(failed(run, seed, "", scheme, mode, value, status, why.clone()));
                }
            }
            return out;
        }
    };
    let hash = ch.digest();
    for &mode in &spec.modes {
        let cfg = match spec.config_at(sweep, mode) {
            Ok(c) => c,
            Err(e) => {
                for &scheme in &spec.schemes {
                    out.records.push(failed(run, seed, &hash, scheme, mode, value, Status::of_error(&e), e.to_string()));
                }
                continue;
            }
        };
        for &scheme in &spec.schemes {
            let res = catch_unwind(AssertUnwindSafe(|| run_scheme(&ch, &cfg, scheme)));
            let rec = match res {
                Ok(Ok(o)) => {
                    out.points.push(PointsLine { run, seed, scheme, mode, config: cfg.clone(), points: o.points() });
                    ResultRecord {
                        run,
                        seed,
                        channel_hash: hash.clone(),
                        scheme,
                        mode,
                        sweep_value: value,
                        min_sr: o.min_sr / LN_2,
                        user_srs: o.dl_sr.iter().chain(&o.ul_sr).map(|x| x / LN_2).collect(),
                        iterations: o.iterations,
                        solve_time: if spec.record_timing { o.solve_time } else { 0.0 },
                        tau: o.tau.clone(),
                        an_fraction: 100.0 * o.an_fraction,
                        status: if o.passed { Status::Ok } else { Status::AuditFailed },
                        detail: describe(&o),
                    }
                }
                Ok(Err(e)) => failed(run, seed, &hash, scheme, mode, value, Status::of_error(&e), e.to_string()),
                Err(p) => failed(run, seed, &hash, scheme, mode, value, Status::Panicked, panic_message(p)),
            };
            out.records.push(rec);
        }
    }
    out
}

fn header_lines(spec: &ExperimentSpec) -> Vec<String> {
    let list = |v: Vec<String>| v.join(",");
    vec![
        format!(
            "# fdsec experiment: axis={} ({}) values={} runs={} base_seed={}",
            spec.axis,
            spec.axis.unit(),
            list(spec.values.iter().map(|v| v.to_string()).collect()),
            spec.n_runs,
            spec.base_seed
        ),
        format!(
            "# schemes={} modes={}",
            list(spec.schemes.iter().map(|s| s.to_string()).collect()),
            list(spec.modes.iter().map(|m| m.to_string()).collect())
        ),
        "# min_sr and user_srs in bits/s/Hz, an_fraction in percent, solve_time in seconds".into(),
    ]
}

/// Runs every (sweep value, run) cell on a worker pool. Records reach the
/// CSV in (sweep, run, mode, scheme) order whatever the scheduling, each
/// task flushed as soon as its predecessors are written. A summary block
/// of `#` lines closes the file. Failed runs are recorded, never fatal.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    if let Some(dir) = spec.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = BufWriter::new(File::create(&spec.out)?);
    for line in header_lines(spec) {
        writeln!(file, "{line}")?;
    }
    let mut csv = record::csv_writer(file);
    csv.write_record(COLUMNS)?;
    csv.flush()?;
    let mut sidecar = BufWriter::new(File::create(points_path(&spec.out))?);

    let n_tasks = spec.values.len() * spec.n_runs;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<(usize, TaskOutput)>();
    let mut all = vec![];
    std::thread::scope(|scope| -> Result<()> {
        scope.spawn(move || {
            pool.install(|| {
                use rayon::prelude::*;
                (0..n_tasks).into_par_iter().for_each_with(tx, |tx, t| {
                    let out = run_task(spec, t / spec.n_runs, t % spec.n_runs);
                    let _ = tx.send((t, out));
                });
            })
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (t, out) in rx {
            pending.insert(t, out);
            while let Some(out) = pending.remove(&next) {
                for r in &out.records {
                    csv.write_record(r.fields())?;
                }
                csv.flush()?;
                for p in &out.points {
                    serde_json::to_writer(&mut sidecar, p).map_err(|e| Error::Parse(e.to_string()))?;
                    writeln!(sidecar)?;
                }
                sidecar.flush()?;
                all.extend(out.records);
                next += 1;
            }
        }
        Ok(())
    })?;
    if all.len() != n_tasks * spec.modes.len() * spec.schemes.len() {
        return Err(Error::Config("a worker exited before finishing its runs".into()));
    }
    let mut file = csv.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    for line in summarize(&all).to_string().lines() {
        writeln!(file, "# {line}")?;
    }
    file.flush()?;
    Ok(all)
}

pub fn summarize_csv(path: &Path) -> Result<Summary> {
    Ok(summarize(&read_records_file(path)?))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub checked: usize,
    /// `(run, scheme, mode, reason)`.
    pub failures: Vec<(usize, Scheme, Mode, String)>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn recheck(rec: &ResultRecord, line: &PointsLine) -> std::result::Result<(), String> {
    let cfg = &line.config;
    let topo = sample_topology(cfg, rec.seed).map_err(|e| e.to_string())?;
    let ch = sample_channels::<f64>(&topo, cfg, rec.seed);
    if ch.digest() != rec.channel_hash {
        return Err("channel draw does not reproduce".into());
    }
    let insts = scheme_instances(&ch, cfg, rec.scheme);
    if insts.len() != line.points.len() {
        return Err("wrong number of stored points".into());
    }
    let shares = block_shares(cfg, rec.scheme);
    let (dl, ul) = cell_rates(&insts, &line.points, &shares, cfg.mode.eve, ch.n_dl(), ch.n_ul()).map_err(|e| e.to_string())?;
    let min_sr = objective_value(cfg.mode.objective, &dl, &ul) / LN_2;
    if (min_sr - rec.min_sr).abs() > 1e-6 * rec.min_sr.abs().max(1.0) {
        return Err(format!("min-SR {min_sr:.9e} differs from recorded {:.9e}", rec.min_sr));
    }
    for (inst, pt) in insts.iter().zip(&line.points) {
        let pw = rates::power_use(inst, pt);
        let mut excess = (pw.bs - inst.pbs) / inst.pbs;
        for u in pw.ul.iter().flatten() {
            excess = excess.max((u - inst.pu) / inst.pu);
        }
        excess = excess.max(pt.tau().iter().sum::<f64>() - 1.0);
        if excess > POWER_SLACK {
            return Err(format!("budget exceeded by {excess:.2e} (relative)"));
        }
    }
    if cfg.mode.objective == Objective::MaxminDl && !dl.is_empty() {
        let worst = ul.iter().copied().fold(f64::INFINITY, f64::min);
        if worst < cfg.rbar_ul_nats() - AUDIT_SLACK {
            return Err(format!("UL rate {:.6} bits below target", worst / LN_2));
        }
    }
    Ok(())
}

/// Re-checks every ok record of `csv` against the exact rate model, using
/// the stored points and a fresh draw from the recorded seed.
pub fn audit_csv(csv: &Path) -> Result<AuditReport> {
    let records = read_records_file(csv)?;
    let mut lines: HashMap<(u64, Scheme, Mode), PointsLine> = HashMap::new();
    let side = points_path(csv);
    for l in BufReader::new(File::open(&side)?).lines() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let p: PointsLine = serde_json::from_str(&l).map_err(|e| Error::Parse(format!("{}: {e}", side.display())))?;
        lines.insert((p.seed, p.scheme, p.mode), p);
    }
    let mut report = AuditReport::default();
    for rec in records.iter().filter(|r| r.is_ok()) {
        report.checked += 1;
        let outcome = match lines.get(&(rec.seed, rec.scheme, rec.mode)) {
            Some(line) => recheck(rec, line),
            None => Err("no stored points".into()),
        };
        if let Err(why) = outcome {
            report.failures.push((rec.run, rec.scheme, rec.mode, why));
        }
    }
    Ok(report)
}
