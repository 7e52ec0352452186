//! Auxiliary variables that are functions of `(X, α)` at an iterate.

use crate::error::Result;
use crate::rates::{self, outage_slack, quad_inv, DesignPoint, EveView, Instance};
use crate::scalar::{fro_sq, inner, norm_sq, CMat};
use crate::scenario::{EveModel, Objective};
use num_complex::Complex;

/// Floor for `β` and `t` so the ratio bounds stay well defined.
pub const AUX_FLOOR: f64 = 1e-8;

/// Which users enter `η` and what the remaining users must reach.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub objective: Objective,
    /// UL secrecy target in nats.
    pub rbar_ul: f64,
}

/// Fills every auxiliary of `pt` for `model` (`None` leaves the Eve
/// auxiliaries at zero), then `η` and the UL shortfall.
pub fn close_aux(inst: &Instance<f64>, pt: &DesignPoint<f64>, model: Option<EveModel>, target: Target) -> Result<DesignPoint<f64>> {
    let mut out = pt.clone();
    out.aux = rates::Aux::zeros(inst);
    let model = if inst.m() == 0 { None } else { model };
    for (i, g) in inst.groups.iter().enumerate() {
        let p = &pt.groups[i];
        let a = p.alpha;
        for (m, e) in g.eves.iter().enumerate() {
            let ne = e.ne as f64;
            match (model, &e.view) {
                (Some(EveModel::Ewci), EveView::Full { h, g: gm }) => {
                    let beams: Vec<f64> = p.w.iter().map(|w| norm_sq(&(h.adjoint() * w))).collect();
                    let an = fro_sq(&(h.adjoint() * &p.v));
                    let up: Vec<f64> = gm.iter().zip(&p.rho).map(|(gv, r)| r * r * norm_sq(gv)).collect();
                    let total = beams.iter().sum::<f64>() + an + up.iter().sum::<f64>() + ne * inst.sigma2;
                    for k in 0..g.k() {
                        out.aux.mu_dl[i][k][m] = a * (total - beams[k]);
                    }
                    for l in 0..g.l() {
                        out.aux.mu_ul[i][l][m] = a * (total - up[l]);
                    }
                }
                (Some(EveModel::Scsi), EveView::Stats { hbar, gbar }) => {
                    let slack = outage_slack(inst.eps_outage, g.eves.len());
                    let beams: Vec<f64> = p.w.iter().map(|w| inner(w, &(hbar * w)).re).collect();
                    let an = (p.v.adjoint() * hbar * &p.v).trace().re;
                    let up: Vec<f64> = gbar.iter().zip(&p.rho).map(|(gb, r)| r * r * gb).collect();
                    let total = beams.iter().sum::<f64>() + an + up.iter().sum::<f64>() + slack * ne * inst.sigma2;
                    for k in 0..g.k() {
                        let b = beams[k] / (total - beams[k]);
                        out.aux.beta_dl[i][k] = out.aux.beta_dl[i][k].max(b).max(AUX_FLOOR);
                    }
                    for l in 0..g.l() {
                        let b = up[l] / (total - up[l]);
                        out.aux.beta_ul[i][l] = out.aux.beta_ul[i][l].max(b).max(AUX_FLOOR);
                    }
                }
                (Some(EveModel::Wcs), EveView::Full { h, g: gm }) => {
                    let hv = h.adjoint() * &p.v;
                    let xi = &hv * hv.adjoint() + CMat::identity(e.ne, e.ne) * Complex::new(inst.sigma2, 0.0);
                    for (k, w) in p.w.iter().enumerate() {
                        out.aux.t_dl[i][k][m] = quad_inv(&xi, &(h.adjoint() * w)).max(AUX_FLOOR);
                    }
                    for (l, gv) in gm.iter().enumerate() {
                        out.aux.t_ul[i][l][m] = (p.rho[l] * p.rho[l] * quad_inv(&xi, gv)).max(AUX_FLOOR);
                    }
                }
                (None, _) => {}
                _ => return Err(crate::Error::Domain("Eve view does not match the Eve model".into())),
            }
        }
        // Γ as the largest Eve rate implied by the auxiliaries.
        for k in 0..g.k() {
            out.aux.gamma_dl[i][k] = match model {
                Some(EveModel::Scsi) => out.aux.beta_dl[i][k].ln_1p() / a,
                Some(EveModel::Wcs) => out.aux.t_dl[i][k].iter().fold(0.0f64, |x, t| x.max(t.ln_1p() / a)),
                Some(EveModel::Ewci) => rates::eve_rates_ewci(inst, pt, i)?.max_dl(k),
                None => 0.0,
            };
        }
        for l in 0..g.l() {
            out.aux.gamma_ul[i][l] = match model {
                Some(EveModel::Scsi) => out.aux.beta_ul[i][l].ln_1p() / a,
                Some(EveModel::Wcs) => out.aux.t_ul[i][l].iter().fold(0.0f64, |x, t| x.max(t.ln_1p() / a)),
                Some(EveModel::Ewci) => rates::eve_rates_ewci(inst, pt, i)?.max_ul(l),
                None => 0.0,
            };
        }
    }
    let (dl, ul) = margins(inst, &out)?;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (eta, ul_min) = match target.objective {
        Objective::MaxminAll => (min(&dl).min(min(&ul)), f64::INFINITY),
        Objective::MaxminDl => (min(&dl), min(&ul)),
    };
    out.aux.eta = if eta.is_finite() { eta } else { 0.0 };
    out.aux.slack = if ul_min.is_finite() { (target.rbar_ul - ul_min).max(0.0) } else { 0.0 };
    Ok(out)
}

/// `C − Γ` per DL and UL user, flattened group-major.
pub fn margins(inst: &Instance<f64>, pt: &DesignPoint<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut dl = vec![];
    let mut ul = vec![];
    for (i, g) in inst.groups.iter().enumerate() {
        for k in 0..g.k() {
            dl.push(rates::dl_rate(inst, pt, i, k)? - pt.aux.gamma_dl[i][k]);
        }
        for (l, c) in rates::ul_rates(inst, pt, i)?.into_iter().enumerate() {
            ul.push(c - pt.aux.gamma_ul[i][l]);
        }
    }
    Ok((dl, ul))
}
