//! Exact rate and secrecy-rate oracles.
//!
//! Everything here works on the nonconvex model directly and is what the
//! optimizers are audited against.

mod instance;
mod point;

pub use instance::{EveView, Group, GroupEve, Instance, Timing, Units};
pub use point::{Aux, DesignPoint, GroupPoint};

use crate::error::{Error, Result};
use crate::scalar::{fro_sq, inner, norm_sq, CMat, CVec, Scalar};
use crate::scenario::EveModel;
use nalgebra::{Cholesky, Dyn, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cplx<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn check_dims<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize) -> Result<()> {
    let (g, p) = match (inst.groups.get(i), pt.groups.get(i)) {
        (Some(g), Some(p)) => (g, p),
        _ => return Err(Error::Dimension(format!("group {i} missing"))),
    };
    let ok = p.w.len() == g.k()
        && p.rho.len() == g.l()
        && p.w.iter().all(|w| w.len() == inst.nt)
        && p.v.nrows() == inst.nt
        && p.v.ncols() == inst.nt;
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(format!("design point does not match group {i}")))
    }
}

/// Interference-plus-noise seen by DL user `k` of group `i`.
pub fn dl_interference<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize, k: usize) -> T {
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    let h = &g.h[k];
    let mui = p
        .w
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .fold(T::zero(), |acc, (_, w)| acc + inner(h, w).norm_sqr());
    let an = (h.adjoint() * &p.v).iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let cci = g.f[k]
        .iter()
        .zip(&p.rho)
        .fold(T::zero(), |acc, (f, r)| acc + *r * *r * f.norm_sqr());
    mui + an + cci + inst.sigma2
}

pub fn dl_sinr<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize, k: usize) -> T {
    let s = inner(&inst.groups[i].h[k], &pt.groups[i].w[k]).norm_sqr();
    s / dl_interference(inst, pt, i, k)
}

/// `τ_i ln(1 + SINR)` for DL user `k` of group `i`.
pub fn dl_rate<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize, k: usize) -> Result<T> {
    check_dims(inst, pt, i)?;
    if k >= inst.groups[i].k() {
        return Err(Error::Dimension(format!("no DL user {k} in group {i}")));
    }
    Ok(pt.groups[i].tau() * dl_sinr(inst, pt, i, k).ln_1p())
}

/// BS receive covariance with UL users `from..` still undecoded.
pub fn ul_covariance<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize, from: usize) -> CMat<T> {
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    let mut phi = CMat::identity(inst.nr, inst.nr) * cplx(inst.sigma2);
    for j in from..g.l() {
        phi += (&g.g[j] * g.g[j].adjoint()) * cplx(p.rho[j] * p.rho[j]);
    }
    let gh = inst.g_si.adjoint();
    let mut tx = &p.v * p.v.adjoint();
    for w in &p.w {
        tx += w * w.adjoint();
    }
    phi += &gh * tx * &inst.g_si;
    phi
}

/// `g^H Φ^{-1} g` for a Hermitian positive definite `Φ`.
pub fn quad_inv<T: Scalar>(phi: &CMat<T>, g: &CVec<T>) -> T {
    let chol = Cholesky::<Complex<T>, Dyn>::new(phi.clone()).expect("covariance is positive definite");
    inner(g, &chol.solve(g)).re
}

/// MMSE-SIC SINRs in decoding order.
pub fn ul_sinrs<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize) -> Vec<T> {
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    (0..g.l())
        .map(|l| {
            let phi = ul_covariance(inst, pt, i, l + 1);
            p.rho[l] * p.rho[l] * quad_inv(&phi, &g.g[l])
        })
        .collect()
}

pub fn ul_rates<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize) -> Result<Vec<T>> {
    check_dims(inst, pt, i)?;
    let tau = pt.groups[i].tau();
    Ok(ul_sinrs(inst, pt, i).into_iter().map(|s| tau * s.ln_1p()).collect())
}

/// Eavesdropper rates `[user][eve]` for the DL and UL users of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct EveRates<T: Scalar> {
    pub dl: Vec<Vec<T>>,
    pub ul: Vec<Vec<T>>,
}

impl<T: Scalar> EveRates<T> {
    pub fn max_dl(&self, k: usize) -> T {
        self.dl[k].iter().fold(T::zero(), |a, &b| a.max(b))
    }

    pub fn max_ul(&self, l: usize) -> T {
        self.ul[l].iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

fn full_view<T: Scalar>(e: &GroupEve<T>) -> Result<(&CMat<T>, &Vec<CVec<T>>)> {
    match &e.view {
        EveView::Full { h, g } => Ok((h, g)),
        EveView::Stats { .. } => Err(Error::Domain("eavesdropper channels are statistical only".into())),
    }
}

fn stats_view<T: Scalar>(e: &GroupEve<T>) -> Result<(&CMat<T>, &Vec<T>)> {
    match &e.view {
        EveView::Stats { hbar, gbar } => Ok((hbar, gbar)),
        EveView::Full { .. } => Err(Error::Domain("eavesdropper statistics are missing".into())),
    }
}

/// Received powers at one Eve: per-beam, AN, per-UL-user.
fn eve_powers<T: Scalar>(h: &CMat<T>, gm: &[CVec<T>], p: &GroupPoint<T>) -> (Vec<T>, T, Vec<T>) {
    let hh = h.adjoint();
    let beams = p.w.iter().map(|w| norm_sq(&(&hh * w))).collect();
    let an = fro_sq(&(&hh * &p.v));
    let ul = gm.iter().zip(&p.rho).map(|(g, r)| *r * *r * norm_sq(g)).collect();
    (beams, an, ul)
}

/// Eve rates when each Eve treats all other signals as noise.
pub fn eve_rates_ewci<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize) -> Result<EveRates<T>> {
    check_dims(inst, pt, i)?;
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    let tau = p.tau();
    let mut dl = vec![Vec::with_capacity(g.eves.len()); g.k()];
    let mut ul = vec![Vec::with_capacity(g.eves.len()); g.l()];
    for e in &g.eves {
        let (h, gm) = full_view(e)?;
        let (beams, an, upow) = eve_powers(h, gm, p);
        let noise = T::lit(e.ne as f64) * inst.sigma2;
        let sb: T = beams.iter().fold(T::zero(), |a, &b| a + b);
        let su: T = upow.iter().fold(T::zero(), |a, &b| a + b);
        for k in 0..g.k() {
            let psi = sb - beams[k] + an + su + noise;
            dl[k].push(tau * (beams[k] / psi).ln_1p());
        }
        for l in 0..g.l() {
            let chi = sb + an + su - upow[l] + noise;
            ul[l].push(tau * (upow[l] / chi).ln_1p());
        }
    }
    Ok(EveRates { dl, ul })
}

/// Eve rates with an MMSE decoder that removes everything but AN.
pub fn eve_rates_wcs<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize) -> Result<EveRates<T>> {
    check_dims(inst, pt, i)?;
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    let tau = p.tau();
    let mut dl = vec![Vec::with_capacity(g.eves.len()); g.k()];
    let mut ul = vec![Vec::with_capacity(g.eves.len()); g.l()];
    for e in &g.eves {
        let (h, gm) = full_view(e)?;
        let hv = h.adjoint() * &p.v;
        let xi = &hv * hv.adjoint() + CMat::identity(e.ne, e.ne) * cplx(inst.sigma2);
        for (k, w) in p.w.iter().enumerate() {
            let b = h.adjoint() * w;
            dl[k].push(tau * quad_inv(&xi, &b).ln_1p());
        }
        for (l, gv) in gm.iter().enumerate() {
            let r2 = p.rho[l] * p.rho[l];
            ul[l].push(tau * (r2 * quad_inv(&xi, gv)).ln_1p());
        }
    }
    Ok(EveRates { dl, ul })
}

/// `1 − ε^{1/M}`, the per-Eve outage share of the noise slack.
pub fn outage_slack<T: Scalar>(eps: T, m: usize) -> T {
    if m == 0 {
        return T::zero();
    }
    T::one() - eps.powf(T::one() / T::lit(m as f64))
}

/// Outage-guaranteed Eve rate caps from second moments, `τ ln(1 + β)` with
/// `β = E{signal} / (E{interference} + (1 − ε^{1/M}) N_e σ²)`.
pub fn eve_rates_scsi<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize) -> Result<EveRates<T>> {
    check_dims(inst, pt, i)?;
    let g = &inst.groups[i];
    let p = &pt.groups[i];
    let tau = p.tau();
    let slack = outage_slack(inst.eps_outage, g.eves.len());
    let mut dl = vec![Vec::with_capacity(g.eves.len()); g.k()];
    let mut ul = vec![Vec::with_capacity(g.eves.len()); g.l()];
    for e in &g.eves {
        let (hbar, gbar) = stats_view(e)?;
        let beams: Vec<T> = p.w.iter().map(|w| inner(w, &(hbar * w)).re).collect();
        let an = (p.v.adjoint() * hbar * &p.v).trace().re;
        let upow: Vec<T> = gbar.iter().zip(&p.rho).map(|(gb, r)| *r * *r * *gb).collect();
        let sb = beams.iter().fold(T::zero(), |a, &b| a + b);
        let su = upow.iter().fold(T::zero(), |a, &b| a + b);
        let noise = slack * T::lit(e.ne as f64) * inst.sigma2;
        for k in 0..g.k() {
            let psi = sb - beams[k] + an + su + noise;
            dl[k].push(tau * (beams[k] / psi).ln_1p());
        }
        for l in 0..g.l() {
            let chi = sb + an + su - upow[l] + noise;
            ul[l].push(tau * (upow[l] / chi).ln_1p());
        }
    }
    Ok(EveRates { dl, ul })
}

pub fn eve_rates<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, i: usize, model: EveModel) -> Result<EveRates<T>> {
    match model {
        EveModel::Ewci => eve_rates_ewci(inst, pt, i),
        EveModel::Scsi => eve_rates_scsi(inst, pt, i),
        EveModel::Wcs => eve_rates_wcs(inst, pt, i),
    }
}

/// Secrecy rates per user, `[group][user]`, in nats/s/Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct Secrecy<T: Scalar> {
    /// User rate minus the strongest Eve rate, unclamped.
    pub dl_margin: Vec<Vec<T>>,
    pub ul_margin: Vec<Vec<T>>,
    pub dl: Vec<Vec<T>>,
    pub ul: Vec<Vec<T>>,
}

impl<T: Scalar> Secrecy<T> {
    fn min_of(v: &[Vec<T>]) -> Option<T> {
        v.iter().flatten().copied().fold(None, |a, b| Some(a.map_or(b, |a: T| a.min(b))))
    }

    pub fn min_dl(&self) -> Option<T> {
        Self::min_of(&self.dl)
    }

    pub fn min_ul(&self) -> Option<T> {
        Self::min_of(&self.ul)
    }

    pub fn min_all(&self) -> T {
        match (self.min_dl(), self.min_ul()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => T::zero(),
        }
    }

    /// Users whose margin is negative, so the clamp is active.
    pub fn clamped(&self) -> usize {
        self.dl_margin.iter().chain(&self.ul_margin).flatten().filter(|&&x| x < T::zero()).count()
    }
}

pub fn secrecy_rates<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, model: EveModel) -> Result<Secrecy<T>> {
    let mut out = Secrecy { dl_margin: vec![], ul_margin: vec![], dl: vec![], ul: vec![] };
    for i in 0..inst.groups.len() {
        let ev = eve_rates(inst, pt, i, model)?;
        let dl: Vec<T> = (0..inst.groups[i].k())
            .map(|k| dl_rate(inst, pt, i, k).map(|c| c - ev.max_dl(k)))
            .collect::<Result<_>>()?;
        let ul: Vec<T> = ul_rates(inst, pt, i)?
            .into_iter()
            .enumerate()
            .map(|(l, c)| c - ev.max_ul(l))
            .collect();
        out.dl.push(dl.iter().map(|&x| x.max(T::zero())).collect());
        out.ul.push(ul.iter().map(|&x| x.max(T::zero())).collect());
        out.dl_margin.push(dl);
        out.ul_margin.push(ul);
    }
    Ok(out)
}

/// Time-averaged power drawn at the BS and by each UL user.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerUse<T: Scalar> {
    pub bs: T,
    pub an: T,
    /// `[group][user]`.
    pub ul: Vec<Vec<T>>,
}

pub fn power_use<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>) -> PowerUse<T> {
    let _ = inst;
    let mut bs = T::zero();
    let mut an = T::zero();
    let mut ul = Vec::new();
    for p in &pt.groups {
        let tau = p.tau();
        let v = fro_sq(&p.v);
        bs += tau * (p.w.iter().fold(T::zero(), |a, w| a + norm_sq(w)) + v);
        an += tau * v;
        ul.push(p.rho.iter().map(|&r| tau * r * r).collect());
    }
    PowerUse { bs, an, ul }
}

/// Monte Carlo probability that the strongest Eve stays below each rate cap `Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Outage {
    pub dl: Vec<Vec<f64>>,
    pub ul: Vec<Vec<f64>>,
}

impl Outage {
    pub fn min(&self) -> f64 {
        self.dl.iter().chain(&self.ul).flatten().copied().fold(1.0, f64::min)
    }
}

fn sqrt_psd<T: Scalar>(a: &CMat<T>) -> CMat<T> {
    let eig = SymmetricEigen::new(a.clone());
    let d = eig.eigenvalues.map(|x| cplx(x.max(T::zero()).sqrt()));
    &eig.eigenvectors * CMat::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

pub fn empirical_outage<T: Scalar>(inst: &Instance<T>, pt: &DesignPoint<T>, n_samples: usize, seed: u64) -> Result<Outage> {
    if n_samples < 100 {
        return Err(Error::Domain("empirical_outage needs at least 100 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cn = |rng: &mut ChaCha8Rng| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(a * std::f64::consts::FRAC_1_SQRT_2), T::lit(b * std::f64::consts::FRAC_1_SQRT_2))
    };
    let mut out = Outage { dl: vec![], ul: vec![] };
    for (i, g) in inst.groups.iter().enumerate() {
        check_dims(inst, pt, i)?;
        let p = &pt.groups[i];
        let roots: Vec<(CMat<T>, Vec<T>, usize)> = g
            .eves
            .iter()
            .map(|e| stats_view(e).map(|(hb, gb)| (sqrt_psd(&(hb / cplx(T::lit(e.ne as f64)))), gb.clone(), e.ne)))
            .collect::<Result<_>>()?;
        let mut ok_dl = vec![0usize; g.k()];
        let mut ok_ul = vec![0usize; g.l()];
        for _ in 0..n_samples {
            let mut worst_dl = vec![T::zero(); g.k()];
            let mut worst_ul = vec![T::zero(); g.l()];
            for (root, gbar, ne) in &roots {
                let z = CMat::from_fn(inst.nt, *ne, |_, _| cn(&mut rng));
                let h = root * z;
                let gm: Vec<CVec<T>> = gbar
                    .iter()
                    .map(|&gb| CVec::from_fn(*ne, |_, _| cn(&mut rng)) * cplx((gb / T::lit(*ne as f64)).sqrt()))
                    .collect();
                let (beams, an, upow) = eve_powers(&h, &gm, p);
                let noise = T::lit(*ne as f64) * inst.sigma2;
                let sb = beams.iter().fold(T::zero(), |a, &b| a + b);
                let su = upow.iter().fold(T::zero(), |a, &b| a + b);
                let tau = p.tau();
                for k in 0..g.k() {
                    let r = tau * (beams[k] / (sb - beams[k] + an + su + noise)).ln_1p();
                    worst_dl[k] = worst_dl[k].max(r);
                }
                for l in 0..g.l() {
                    let r = tau * (upow[l] / (sb + an + su - upow[l] + noise)).ln_1p();
                    worst_ul[l] = worst_ul[l].max(r);
                }
            }
            for k in 0..g.k() {
                if worst_dl[k] <= pt.aux.gamma_dl[i][k] {
                    ok_dl[k] += 1;
                }
            }
            for l in 0..g.l() {
                if worst_ul[l] <= pt.aux.gamma_ul[i][l] {
                    ok_ul[l] += 1;
                }
            }
        }
        let frac = |c: usize| c as f64 / n_samples as f64;
        out.dl.push(ok_dl.into_iter().map(frac).collect());
        out.ul.push(ok_ul.into_iter().map(frac).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
