//! Random fixtures for tests and benchmarks.

use crate::rates::{DesignPoint, EveView, Group, GroupEve, Instance, Timing};
use crate::scalar::{CMat, CVec};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut ChaCha8Rng, scale: f64) -> Complex<f64> {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex::new(a, b) * (scale * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn cvec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVec<f64> {
    CVec::from_fn(n, |_, _| cn(rng, scale))
}

pub fn cmat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> CMat<f64> {
    CMat::from_fn(r, c, |_, _| cn(rng, scale))
}

/// Shape of a synthetic instance.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub groups: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub nt: usize,
    pub nr: usize,
    pub ne: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { groups: 2, k: 2, l: 2, m: 2, nt: 3, nr: 3, ne: 2 }
    }
}

/// Unit-noise instance with O(1)-to-O(10) channel gains.
pub fn instance(seed: u64, s: Shape) -> Instance<f64> {
    let mut r = rng(seed);
    let groups = (0..s.groups)
        .map(|gi| Group {
            dl_ids: (0..s.k).map(|k| gi * s.k + k).collect(),
            ul_ids: (0..s.l).map(|l| gi * s.l + l).collect(),
            h: (0..s.k).map(|_| cvec(&mut r, s.nt, 3.0)).collect(),
            g: (0..s.l).map(|_| cvec(&mut r, s.nr, 3.0)).collect(),
            f: (0..s.k).map(|_| (0..s.l).map(|_| cn(&mut r, 0.5)).collect()).collect(),
            eves: (0..s.m)
                .map(|_| GroupEve {
                    ne: s.ne,
                    view: EveView::Full {
                        h: cmat(&mut r, s.nt, s.ne, 1.0),
                        g: (0..s.l).map(|_| cvec(&mut r, s.ne, 1.0)).collect(),
                    },
                })
                .collect(),
        })
        .collect();
    Instance {
        nt: s.nt,
        nr: s.nr,
        groups,
        g_si: cmat(&mut r, s.nt, s.nr, 0.1),
        sigma2: 1.0,
        pbs: 1.0,
        pu: 1.0,
        timing: if s.groups == 2 { Timing::Fractional } else { Timing::Fixed(vec![1.0; s.groups]) },
        an: true,
        eps_outage: 0.99,
    }
}

/// Replaces every Eve view by the matching second-moment view (unit gain).
pub fn with_stats(inst: &Instance<f64>) -> Instance<f64> {
    let mut out = inst.clone();
    for g in out.groups.iter_mut() {
        let l = g.l();
        for e in g.eves.iter_mut() {
            let ne = e.ne as f64;
            e.view = EveView::Stats {
                hbar: CMat::identity(inst.nt, inst.nt) * Complex::new(ne, 0.0),
                gbar: vec![ne; l],
            };
        }
    }
    out
}

/// Random point with powers of order one and the given `α` per group.
pub fn point(seed: u64, inst: &Instance<f64>, alpha: &[f64]) -> DesignPoint<f64> {
    let mut r = rng(seed ^ 0x9e37_79b9);
    let mut p = DesignPoint::zeros(inst, alpha);
    for gp in p.groups.iter_mut() {
        gp.w.iter_mut().for_each(|w| *w = cvec(&mut r, inst.nt, 0.5));
        gp.v = cmat(&mut r, inst.nt, inst.nt, 0.1);
        gp.rho.iter_mut().for_each(|x| *x = r.random::<f64>() + 0.05);
    }
    p
}

/// [`point`] rescaled so each group radiates 90% of the BS budget and every
/// UL amplitude meets its budget with the given `α`.
pub fn feasible_point(seed: u64, inst: &Instance<f64>, alpha: &[f64]) -> DesignPoint<f64> {
    let mut p = point(seed, inst, alpha);
    for gp in p.groups.iter_mut() {
        let tx: f64 = gp.w.iter().map(crate::scalar::norm_sq).sum::<f64>() + crate::scalar::fro_sq(&gp.v);
        let c = Complex::new((0.9 * inst.pbs / tx).sqrt(), 0.0);
        gp.w.iter_mut().for_each(|w| *w *= c);
        gp.v *= c;
        let cap = (0.9 * inst.pu).sqrt();
        gp.rho.iter_mut().for_each(|r| *r = r.min(cap));
    }
    p
}
