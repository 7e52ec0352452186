use fdsec::harness::*;
use fdsec::scenario::{EveModel, Mode, Objective, Scheme, SystemConfig};
use std::path::PathBuf;

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fdsec-harness-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn spec(name: &str) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(SystemConfig::default(), tmp(name));
    s.base_seed = 11;
    s
}

#[test]
fn one_value_one_run_one_scheme_gives_one_record() {
    let mut s = spec("single.csv");
    s.schemes = vec![Scheme::ProposedFd];
    let recs = run_experiment(&s).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].is_ok(), "{:?}", recs[0]);
    let text = std::fs::read_to_string(&s.out).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 2);
    assert_eq!(body[0], COLUMNS.join(","));
    assert!(text.lines().next().unwrap().starts_with("# fdsec experiment"));
    assert!(text.lines().last().unwrap().starts_with("# "));
    let back: Vec<ResultRecord> = recs.iter().map(read_back).collect();
    assert_eq!(read_records_file(&s.out).unwrap(), back);
}

fn read_back(r: &ResultRecord) -> ResultRecord {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    w.write_record(COLUMNS).unwrap();
    w.write_record(r.fields()).unwrap();
    read_records(&w.into_inner().unwrap()[..]).unwrap().remove(0)
}

#[test]
fn schemes_of_a_run_share_the_draw_and_audit_clean() {
    let mut s = spec("paired.csv");
    s.n_runs = 2;
    let recs = run_experiment(&s).unwrap();
    assert_eq!(recs.len(), 6);
    for run in 0..2 {
        let hashes: Vec<&str> = recs.iter().filter(|r| r.run == run).map(|r| r.channel_hash.as_str()).collect();
        assert_eq!(hashes.len(), 3);
        assert!(hashes.iter().all(|h| *h == hashes[0] && !h.is_empty()));
    }
    assert_ne!(recs[0].channel_hash, recs[3].channel_hash);
    let report = audit_csv(&s.out).unwrap();
    assert_eq!(report.checked, recs.iter().filter(|r| r.is_ok()).count());
    assert!(report.passed(), "{:?}", report.failures);
}

#[test]
fn tampered_rates_fail_the_audit() {
    let mut s = spec("tampered.csv");
    s.schemes = vec![Scheme::Hd];
    run_experiment(&s).unwrap();
    let text = std::fs::read_to_string(&s.out).unwrap();
    let mut recs = read_records(text.as_bytes()).unwrap();
    recs[0].min_sr *= 1.01;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    w.write_record(COLUMNS).unwrap();
    w.write_record(recs[0].fields()).unwrap();
    let bad = tmp("tampered-edit.csv");
    std::fs::write(&bad, w.into_inner().unwrap()).unwrap();
    std::fs::copy(fdsec::harness::points_path(&s.out), fdsec::harness::points_path(&bad)).unwrap();
    let report = audit_csv(&bad).unwrap();
    assert_eq!(report.checked, 1);
    assert!(!report.passed());
}

#[test]
fn output_is_byte_identical_across_worker_counts() {
    let mut a = spec("det-a.csv");
    a.values = vec![22.0, 26.0];
    a.n_runs = 2;
    a.schemes = vec![Scheme::ProposedFd, Scheme::Hd];
    a.record_timing = false;
    a.jobs = 1;
    let mut b = a.clone();
    b.out = tmp("det-b.csv");
    b.jobs = 3;
    run_experiment(&a).unwrap();
    run_experiment(&b).unwrap();
    assert_eq!(std::fs::read(&a.out).unwrap(), std::fs::read(&b.out).unwrap());
    assert_eq!(std::fs::read(points_path(&a.out)).unwrap(), std::fs::read(points_path(&b.out)).unwrap());
}

#[test]
fn a_failing_mode_leaves_the_other_records_intact() {
    let mut s = spec("isolated.csv");
    s.base.rbar_ul = 20.0;
    s.schemes = vec![Scheme::ProposedFd];
    s.modes = vec![Mode::new(EveModel::Ewci, Objective::MaxminAll), Mode::new(EveModel::Ewci, Objective::MaxminDl)];
    let recs = run_experiment(&s).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].status, Status::Ok);
    assert_eq!(recs[1].status, Status::UlInfeasible);
    assert!(recs[1].min_sr.is_nan());
    let sum = summarize_csv(&s.out).unwrap();
    let c = sum.cell(recs[1].sweep_value, recs[1].mode, Scheme::ProposedFd).unwrap();
    assert_eq!((c.records, c.count), (1, 0));
    assert!(c.mean.is_nan());
}
