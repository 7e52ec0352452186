use super::*;
use crate::testkit::{self, Shape};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// Interference at a DL user from the full transmit covariance.
fn dl_rate_by_covariance(inst: &Instance<f64>, pt: &DesignPoint<f64>, i: usize, k: usize) -> f64 {
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    let h = &g.h[k];
    let mut q = &p.v * p.v.adjoint();
    for (j, w) in p.w.iter().enumerate() {
        if j != k {
            q += w * w.adjoint();
        }
    }
    let leak = (h.adjoint() * q * h)[(0, 0)].re;
    let mut cci = 0.0;
    for (l, f) in g.f[k].iter().enumerate() {
        let x = f * p.rho[l];
        cci += (x * x.conj()).re;
    }
    let s = (h.adjoint() * &p.w[k])[(0, 0)].norm_sqr();
    (1.0 + s / (leak + cci + inst.sigma2)).ln() / p.alpha
}

fn log_det(a: &CMat<f64>) -> f64 {
    let c = Cholesky::<Complex<f64>, Dyn>::new(a.clone()).unwrap();
    2.0 * c.l().diagonal().iter().map(|z| z.re.ln()).sum::<f64>()
}

#[test]
fn zero_point_has_zero_rates() {
    let inst = testkit::instance(1, Shape::default());
    let pt = DesignPoint::zeros(&inst, &[2.0, 2.0]);
    for i in 0..2 {
        for k in 0..2 {
            assert_eq!(dl_rate(&inst, &pt, i, k).unwrap(), 0.0);
        }
        assert!(ul_rates(&inst, &pt, i).unwrap().iter().all(|&r| r == 0.0));
    }
}

#[test]
fn single_user_reductions() {
    let s = Shape { groups: 1, k: 1, l: 1, m: 0, ..Shape::default() };
    let mut inst = testkit::instance(2, s);
    inst.g_si = CMat::zeros(3, 3);
    let mut pt = testkit::point(2, &inst, &[1.0]);
    pt.groups[0].v = CMat::zeros(3, 3);
    pt.groups[0].rho[0] = 0.0;
    let h = &inst.groups[0].h[0];
    let expect = (1.0 + inner(h, &pt.groups[0].w[0]).norm_sqr()).ln();
    assert!(rel(dl_rate(&inst, &pt, 0, 0).unwrap(), expect) < 1e-14);

    pt.groups[0].w[0] = CVec::zeros(3);
    pt.groups[0].rho[0] = 0.7;
    let g = &inst.groups[0].g[0];
    let expect = (1.0 + 0.49 * norm_sq(g)).ln();
    assert!(rel(ul_rates(&inst, &pt, 0).unwrap()[0], expect) < 1e-14);
}

#[test]
fn dl_rate_matches_covariance_oracle() {
    for seed in 0..20 {
        let inst = testkit::instance(seed, Shape::default());
        let pt = testkit::point(seed, &inst, &[1.7, 2.4]);
        for i in 0..2 {
            for k in 0..2 {
                let a = dl_rate(&inst, &pt, i, k).unwrap();
                let b = dl_rate_by_covariance(&inst, &pt, i, k);
                assert!(rel(a, b) < 1e-12, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn sic_sum_rate_equals_log_det() {
    for seed in 0..20 {
        let s = Shape { groups: 1, l: 3, ..Shape::default() };
        let mut inst = testkit::instance(seed, s);
        inst.g_si = CMat::zeros(3, 3);
        let pt = testkit::point(seed, &inst, &[1.0]);
        let sum: f64 = ul_rates(&inst, &pt, 0).unwrap().iter().sum();
        let mut m = CMat::identity(3, 3);
        for (g, r) in inst.groups[0].g.iter().zip(&pt.groups[0].rho) {
            m += (g * g.adjoint()) * Complex::new(r * r, 0.0);
        }
        assert!(rel(sum, log_det(&m)) < 1e-12);
    }
}

#[test]
fn ewci_matches_trace_oracle() {
    for seed in 0..20 {
        let inst = testkit::instance(seed, Shape::default());
        let pt = testkit::point(seed, &inst, &[2.0, 2.0]);
        for i in 0..2 {
            let r = eve_rates_ewci(&inst, &pt, i).unwrap();
            let p = &pt.groups[i];
            for (m, e) in inst.groups[i].eves.iter().enumerate() {
                let EveView::Full { h, g } = &e.view else { unreachable!() };
                let hh = h * h.adjoint();
                let pw = |w: &CVec<f64>| (w.adjoint() * &hh * w)[(0, 0)].re;
                let an = (p.v.adjoint() * &hh * &p.v).trace().re;
                let ul: Vec<f64> = g.iter().zip(&p.rho).map(|(x, r)| r * r * x.norm_squared()).collect();
                let all: f64 = p.w.iter().map(pw).sum::<f64>() + an + ul.iter().sum::<f64>() + 2.0;
                for k in 0..2 {
                    let s = pw(&p.w[k]);
                    assert!(rel(r.dl[k][m], (s / (all - s)).ln_1p() / 2.0) < 1e-12);
                }
                for l in 0..2 {
                    assert!(rel(r.ul[l][m], (ul[l] / (all - ul[l])).ln_1p() / 2.0) < 1e-12);
                }
            }
        }
    }
}

#[test]
fn eve_reductions() {
    let inst = testkit::instance(4, Shape::default());
    let mut pt = testkit::point(4, &inst, &[2.0, 2.0]);
    pt.groups[0].w[1] = CVec::zeros(3);
    pt.groups[0].rho[0] = 0.0;
    let r = eve_rates_ewci(&inst, &pt, 0).unwrap();
    assert!(r.dl[1].iter().all(|&x| x == 0.0));
    let w = eve_rates_wcs(&inst, &pt, 0).unwrap();
    assert!(w.ul[0].iter().all(|&x| x == 0.0));

    pt.groups[0].v = CMat::zeros(3, 3);
    let w = eve_rates_wcs(&inst, &pt, 0).unwrap();
    let EveView::Full { h, .. } = &inst.groups[0].eves[0].view else { unreachable!() };
    let expect = norm_sq(&(h.adjoint() * &pt.groups[0].w[0])).ln_1p() / 2.0;
    assert!(rel(w.dl[0][0], expect) < 1e-12);

    let mut noisy = inst.clone();
    noisy.sigma2 = 1e12;
    let r = eve_rates_ewci(&noisy, &testkit::point(4, &inst, &[2.0, 2.0]), 0).unwrap();
    assert!(r.dl.iter().flatten().all(|&x| x < 1e-9));
}

#[test]
fn wcs_dominates_ewci() {
    for seed in 0..1000 {
        let inst = testkit::instance(seed, Shape::default());
        let pt = testkit::point(seed, &inst, &[2.0, 2.0]);
        for i in 0..2 {
            let a = eve_rates_ewci(&inst, &pt, i).unwrap();
            let b = eve_rates_wcs(&inst, &pt, i).unwrap();
            for (x, y) in a.dl.iter().flatten().zip(b.dl.iter().flatten()) {
                assert!(*y >= *x - 1e-9);
            }
            for (x, y) in a.ul.iter().flatten().zip(b.ul.iter().flatten()) {
                assert!(*y >= *x - 1e-9);
            }
        }
    }
}

#[test]
fn secrecy_clamps_and_min() {
    let inst = testkit::instance(5, Shape::default());
    let mut pt = testkit::point(5, &inst, &[2.0, 2.0]);
    pt.groups[1].w[0] = CVec::zeros(3);
    let s = secrecy_rates(&inst, &pt, EveModel::Ewci).unwrap();
    assert_eq!(s.dl[1][0], 0.0);
    let all: Vec<f64> = s.dl.iter().chain(&s.ul).flatten().copied().collect();
    let brute = all.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(s.min_all(), brute);
    assert!(all.iter().all(|&x| x >= 0.0));

    let mut no_eve = inst.clone();
    no_eve.groups.iter_mut().for_each(|g| g.eves.clear());
    let s = secrecy_rates(&no_eve, &pt, EveModel::Ewci).unwrap();
    assert_eq!(s.dl[0][1], dl_rate(&no_eve, &pt, 0, 1).unwrap());
}

#[test]
fn dimension_mismatch_is_an_error() {
    let inst = testkit::instance(6, Shape::default());
    let mut pt = testkit::point(6, &inst, &[2.0, 2.0]);
    pt.groups[0].w.pop();
    assert!(dl_rate(&inst, &pt, 0, 0).is_err());
    assert!(dl_rate(&inst, &testkit::point(6, &inst, &[2.0, 2.0]), 0, 5).is_err());
}

#[test]
fn normalization_preserves_rates() {
    let mut inst = testkit::instance(7, Shape::default());
    inst.sigma2 = 4e-14;
    inst.pbs = 0.4;
    inst.pu = 0.2;
    let pt = testkit::point(7, &inst, &[1.5, 3.0]);
    let (n, u) = inst.normalized();
    let q = pt.rescaled(&u, true);
    let a = secrecy_rates(&inst, &pt, EveModel::Wcs).unwrap();
    let b = secrecy_rates(&n, &q, EveModel::Wcs).unwrap();
    for (x, y) in a.dl_margin.iter().flatten().zip(b.dl_margin.iter().flatten()) {
        assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
    }
    let back = q.rescaled(&u, false);
    for (x, y) in back.groups[0].w[0].iter().zip(pt.groups[0].w[0].iter()) {
        assert!((x - y).norm() < 1e-15);
    }
}

#[test]
fn scsi_caps_and_outage_sampler() {
    let inst = testkit::with_stats(&testkit::instance(8, Shape::default()));
    let mut pt = testkit::point(8, &inst, &[2.0, 2.0]);
    for i in 0..2 {
        pt.aux.gamma_dl[i] = vec![f64::INFINITY; 2];
        pt.aux.gamma_ul[i] = vec![f64::INFINITY; 2];
    }
    let o = empirical_outage(&inst, &pt, 200, 1).unwrap();
    assert_eq!(o.min(), 1.0);
    for i in 0..2 {
        pt.aux.gamma_dl[i] = vec![0.0; 2];
        pt.aux.gamma_ul[i] = vec![0.0; 2];
    }
    let o = empirical_outage(&inst, &pt, 200, 1).unwrap();
    assert!(o.dl.iter().flatten().all(|&p| p == 0.0));
    assert!(empirical_outage(&inst, &pt, 99, 1).is_err());
    assert!(eve_rates_scsi(&inst, &pt, 0).is_ok());
    assert!(eve_rates_ewci(&inst, &pt, 0).is_err());
}

#[test]
fn outage_slack_limits() {
    assert!(outage_slack(1.0 - 1e-15, 1) < 1e-14);
    assert!((outage_slack(0.99f64, 2) - (1.0 - 0.99f64.sqrt())).abs() < 1e-16);
    assert_eq!(outage_slack(0.5f64, 0), 0.0);
}

#[test]
fn f32_oracle_tracks_f64() {
    let inst = testkit::instance(9, Shape::default());
    let pt = testkit::point(9, &inst, &[2.0, 2.0]);
    let a = dl_rate(&inst, &pt, 0, 0).unwrap();
    let cast_inst = Instance::<f32> {
        nt: inst.nt,
        nr: inst.nr,
        groups: inst
            .groups
            .iter()
            .map(|g| Group {
                dl_ids: g.dl_ids.clone(),
                ul_ids: g.ul_ids.clone(),
                h: g.h.iter().map(crate::scalar::cast_vec).collect(),
                g: g.g.iter().map(crate::scalar::cast_vec).collect(),
                f: g.f.iter().map(|r| r.iter().map(|z| Complex::new(z.re as f32, z.im as f32)).collect()).collect(),
                eves: vec![],
            })
            .collect(),
        g_si: crate::scalar::cast_mat(&inst.g_si),
        sigma2: 1.0,
        pbs: 1.0,
        pu: 1.0,
        timing: inst.timing.clone(),
        an: true,
        eps_outage: 0.99,
    };
    let cast_pt = DesignPoint::<f32> {
        groups: pt
            .groups
            .iter()
            .map(|g| GroupPoint {
                w: g.w.iter().map(crate::scalar::cast_vec).collect(),
                v: crate::scalar::cast_mat(&g.v),
                rho: g.rho.iter().map(|&x| x as f32).collect(),
                alpha: g.alpha as f32,
            })
            .collect(),
        aux: Aux::default(),
    };
    let b = dl_rate(&cast_inst, &cast_pt, 0, 0).unwrap() as f64;
    assert!(rel(b, a) < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn secrecy_is_clamped_difference(seed in 0u64..10_000, a1 in 1.1f64..5.0, a2 in 1.1f64..5.0) {
        let inst = testkit::instance(seed, Shape::default());
        let pt = testkit::point(seed, &inst, &[a1, a2]);
        let s = secrecy_rates(&inst, &pt, EveModel::Ewci).unwrap();
        for (m, c) in s.dl_margin.iter().flatten().zip(s.dl.iter().flatten()) {
            prop_assert!(*c >= 0.0);
            if *m >= 0.0 { prop_assert_eq!(*m, *c); }
        }
    }

    #[test]
    fn dl_rate_grows_with_beam_gain(seed in 0u64..10_000, c in 1.0f64..4.0) {
        let inst = testkit::instance(seed, Shape::default());
        let pt = testkit::point(seed, &inst, &[2.0, 2.0]);
        let mut big = pt.clone();
        // Scaling only the useful component keeps interference to others out of the picture.
        let h = &inst.groups[0].h[0];
        let dir = h * Complex::new(1.0 / h.norm(), 0.0);
        let proj = inner(&dir, &pt.groups[0].w[0]);
        big.groups[0].w[0] += &dir * (proj * (c - 1.0));
        let a = dl_rate(&inst, &pt, 0, 0).unwrap();
        let b = dl_rate(&inst, &big, 0, 0).unwrap();
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn eve_rate_grows_with_signal_power(seed in 0u64..10_000, c in 1.0f64..4.0) {
        let inst = testkit::instance(seed, Shape::default());
        let pt = testkit::point(seed, &inst, &[2.0, 2.0]);
        let mut big = pt.clone();
        big.groups[1].rho[1] *= c;
        let a = eve_rates_ewci(&inst, &pt, 1).unwrap();
        let b = eve_rates_ewci(&inst, &big, 1).unwrap();
        for m in 0..2 {
            prop_assert!(b.ul[1][m] >= a.ul[1][m] - 1e-12);
        }
    }

    #[test]
    fn sic_conservation(seed in 0u64..10_000) {
        let s = Shape { groups: 1, ..Shape::default() };
        let mut inst = testkit::instance(seed, s);
        inst.g_si = CMat::zeros(3, 3);
        let pt = testkit::point(seed, &inst, &[1.0]);
        let sum: f64 = ul_rates(&inst, &pt, 0).unwrap().iter().sum();
        let mut m = CMat::identity(3, 3);
        for (g, r) in inst.groups[0].g.iter().zip(&pt.groups[0].rho) {
            m += (g * g.adjoint()) * Complex::new(r * r, 0.0);
        }
        prop_assert!(rel(sum, log_det(&m)) < 1e-10);
    }
}
