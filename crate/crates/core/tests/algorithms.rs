use fdsec::algorithms::*;
use fdsec::rates::{self, Instance};
use fdsec::scenario::*;
use fdsec::Error;

fn draw(cfg: &SystemConfig, seed: u64) -> ChannelSet<f64> {
    let topo = sample_topology(cfg, seed).unwrap();
    sample_channels(&topo, cfg, seed)
}

fn check_trace(t: &RunTrace) {
    assert!(t.is_monotone(MONOTONE_SLACK), "etas {:?}", t.etas());
    assert!((t.tau.iter().sum::<f64>() - 1.0).abs() <= 1e-6, "tau {:?}", t.tau);
    assert!(t.audit.passed, "{:?}", t.audit);
    assert!(t.audit.min_sr >= t.eta - AUDIT_SLACK);
}

#[test]
fn default_ewci_run_is_monotone_and_short() {
    let cfg = SystemConfig::default();
    let ch = draw(&cfg, 0);
    let inst = Instance::proposed(&ch, &cfg);
    let t = run_mode(&inst, &RunSettings::from_config(&cfg), None).unwrap();
    check_trace(&t);
    assert_eq!(t.termination, Termination::Converged);
    assert!(t.iters.len() <= 20, "{} iterations", t.iters.len());
}

#[test]
fn initial_point_is_reached_quickly_and_phase_aligned() {
    let cfg = SystemConfig::default();
    let ch = draw(&cfg, 1);
    let inst = Instance::proposed(&ch, &cfg);
    let (pt, passes) = find_initial_point(&inst, &RunSettings::from_config(&cfg)).unwrap();
    assert!(passes <= 5);
    for (g, gp) in inst.groups.iter().zip(&pt.groups) {
        for (h, w) in g.h.iter().zip(&gp.w) {
            let z = fdsec::scalar::inner(h, w);
            assert!(z.re >= 0.0 && z.im.abs() <= 1e-9 * z.re.max(1e-30));
        }
    }
}

#[test]
fn eve_free_run_has_no_clamp() {
    let cfg = SystemConfig { m: 0, ne: vec![], ..SystemConfig::default() };
    let ch = draw(&cfg, 2);
    let inst = Instance::proposed(&ch, &cfg);
    let t = run_mode(&inst, &RunSettings::from_config(&cfg), None).unwrap();
    check_trace(&t);
    assert_eq!(t.audit.clamped, 0);
    let sr = rates::secrecy_rates(&inst, &t.point, EveModel::Ewci).unwrap();
    for (i, g) in inst.groups.iter().enumerate() {
        for k in 0..g.k() {
            assert_eq!(sr.dl[i][k], rates::dl_rate(&inst, &t.point, i, k).unwrap());
        }
        assert_eq!(sr.ul[i], rates::ul_rates(&inst, &t.point, i).unwrap());
    }
}

#[test]
fn every_eve_model_passes_its_audit() {
    for eve in [EveModel::Ewci, EveModel::Scsi, EveModel::Wcs] {
        let cfg = SystemConfig { mode: Mode::new(eve, Objective::MaxminAll), ..SystemConfig::default() };
        let out = run_scheme(&draw(&cfg, 3), &cfg, Scheme::ProposedFd).unwrap();
        assert!(out.passed, "{eve:?}");
        check_trace(&out.traces[0]);
    }
}

#[test]
fn maxmin_dl_meets_ul_targets() {
    let cfg = SystemConfig { mode: Mode::new(EveModel::Ewci, Objective::MaxminDl), ..SystemConfig::default() };
    let out = run_scheme(&draw(&cfg, 4), &cfg, Scheme::ProposedFd).unwrap();
    assert!(out.passed);
    for r in &out.ul_sr {
        assert!(r / std::f64::consts::LN_2 >= cfg.rbar_ul - 1e-3, "{r}");
    }
}

#[test]
fn huge_ul_target_is_reported() {
    let cfg = SystemConfig { rbar_ul: 20.0, mode: Mode::new(EveModel::Ewci, Objective::MaxminDl), ..SystemConfig::default() };
    let inst = Instance::proposed(&draw(&cfg, 5), &cfg);
    match run_mode(&inst, &RunSettings::from_config(&cfg), None) {
        Err(Error::UplinkQos(_)) | Err(Error::Init(_)) => {}
        other => panic!("expected a UL target failure, got {other:?}"),
    }
}

#[test]
fn zero_ul_target_dominates_all_user_dl_rate() {
    let all = SystemConfig::default();
    let dl = SystemConfig { rbar_ul: 0.0, mode: Mode::new(EveModel::Ewci, Objective::MaxminDl), ..all.clone() };
    let ch = draw(&all, 6);
    let a = run_scheme(&ch, &all, Scheme::ProposedFd).unwrap();
    let b = run_scheme(&ch, &dl, Scheme::ProposedFd).unwrap();
    let a_dl = a.dl_sr.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(b.min_sr >= a_dl - 1e-3, "{} < {}", b.min_sr, a_dl);
}

#[test]
fn conventional_matches_proposed_with_one_group() {
    let cfg = SystemConfig::default();
    let mut ch = draw(&cfg, 7);
    ch.dl_zone.iter_mut().for_each(|z| *z = 0);
    ch.ul_zone.iter_mut().for_each(|z| *z = 1);
    let p = run_scheme(&ch, &cfg, Scheme::ProposedFd).unwrap();
    let c = run_scheme(&ch, &cfg, Scheme::ConventionalFd).unwrap();
    assert_eq!(p.tau, vec![1.0]);
    assert!((p.min_sr - c.min_sr).abs() <= 1e-4, "{} vs {}", p.min_sr, c.min_sr);
}

#[test]
fn hd_rates_are_half_of_block_rates() {
    let cfg = SystemConfig::default();
    let ch = draw(&cfg, 8);
    let out = run_scheme(&ch, &cfg, Scheme::Hd).unwrap();
    let insts = scheme_instances(&ch, &cfg, Scheme::Hd);
    assert_eq!(out.traces.len(), 2);
    for (&id, b) in insts[0].groups[0].dl_ids.iter().zip(&out.traces[0].audit.dl_sr) {
        assert_eq!(out.dl_sr[id], 0.5 * b);
    }
    for (&id, b) in insts[1].groups[0].ul_ids.iter().zip(&out.traces[1].audit.ul_sr) {
        assert_eq!(out.ul_sr[id], 0.5 * b);
    }
}

#[test]
fn hd_without_eves_passes_audit() {
    let cfg = SystemConfig { m: 0, ne: vec![], ..SystemConfig::default() };
    let out = run_scheme(&draw(&cfg, 9), &cfg, Scheme::Hd).unwrap();
    assert!(out.passed);
    assert_eq!(out.clamped, 0);
    for t in &out.traces {
        check_trace(t);
    }
}
