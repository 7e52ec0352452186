//! Per-constraint sketch builders. Every builder works in the units of the
//! instance it is given and registers epigraph variables with their values
//! at the expansion point.

use super::bounds::{log_majorant, zeta_minorant};
use super::expansion::ExpansionPoint;
use super::sketch::{ConstraintSketch as S, Family, FamilyKind as FK};
use crate::conic::expr::{AffineExpr, CAffine};
use crate::conic::layout::{lin_adjoint, lin_apply, lin_inner, push_parts, Slot, VariableLayout};
use crate::error::{Error, Result};
use crate::rates::{outage_slack, EveView, Timing};
use crate::scalar::{fro_sq, inner, norm_sq, CMat, CVec};

pub const DELTA_TRUST: f64 = 1e-9;
pub const DELTA_ALPHA: f64 = 1e-6;
pub const DELTA_MU: f64 = 1e-9;
pub const RHO_FLOOR: f64 = 1e-12;

/// A legitimate user inside a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum User {
    Dl(usize),
    Ul(usize),
}

fn constant(c: f64) -> AffineExpr {
    AffineExpr::constant(c)
}

fn w_vars(exp: &ExpansionPoint, lay: &VariableLayout, i: usize, k: usize) -> Vec<CAffine> {
    lay.w(i, k, exp.inst.nt)
}

fn v_cols(exp: &ExpansionPoint, lay: &VariableLayout, i: usize) -> Vec<Vec<CAffine>> {
    if !lay.has_v() {
        return vec![];
    }
    (0..exp.inst.nt).map(|c| lay.v_col(i, c, exp.inst.nt)).collect()
}

fn v0_cols(exp: &ExpansionPoint, i: usize) -> Vec<CVec<f64>> {
    let v = &exp.point.groups[i].v;
    (0..v.ncols()).map(|c| v.column(c).into_owned()).collect()
}

/// `2 Re{(Q x0)^H x} − x0^H Q x0` summed over pairs, for Hermitian PSD `Q`.
fn quad_lin(q: &CMat<f64>, pairs: &[(CVec<f64>, Vec<CAffine>)]) -> AffineExpr {
    let mut out = AffineExpr::zero();
    for (x0, x) in pairs {
        let qx0 = q * x0;
        out += lin_inner(&qx0, x).re * 2.0;
        out -= constant(inner(x0, &qx0).re);
    }
    out
}

/// Interfering beams (all but `skip`) and AN columns of group `i`, paired with their values.
fn interferers(exp: &ExpansionPoint, lay: &VariableLayout, i: usize, skip: Option<usize>) -> Vec<(CVec<f64>, Vec<CAffine>)> {
    let p = &exp.point.groups[i];
    let mut out: Vec<(CVec<f64>, Vec<CAffine>)> = (0..p.w.len())
        .filter(|&j| Some(j) != skip)
        .map(|j| (p.w[j].clone(), w_vars(exp, lay, i, j)))
        .collect();
    if lay.has_v() {
        out.extend(v0_cols(exp, i).into_iter().zip(v_cols(exp, lay, i)));
    }
    out
}

/// `Σ_j (2 ρ_j0 ρ_j − ρ_j0²) c_j` over UL users other than `skip`.
fn ul_power_lin(exp: &ExpansionPoint, lay: &VariableLayout, i: usize, skip: Option<usize>, c: &[f64]) -> AffineExpr {
    let mut out = AffineExpr::zero();
    for (l, &cl) in c.iter().enumerate() {
        if Some(l) == skip {
            continue;
        }
        let r0 = exp.point.groups[i].rho[l];
        out += lay.rho(i, l) * (2.0 * r0 * cl);
        out -= constant(r0 * r0 * cl);
    }
    out
}

/// DL rate: `A − B φ/θ − C α ≥ target`, trust region and phase condition.
pub fn dl_minorant_constraint(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, k: usize, target: AffineExpr) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let r0 = exp.dl_gain[i][k];
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("Re{{h^H w}} = {r0:e} for DL user ({i},{k}); expected > 0")));
    }
    let a0 = exp.point.groups[i].alpha;
    let (a, b, c) = zeta_minorant(exp.dl_sinr[i][k], a0)?;
    let h = &g.h[k];
    let hw = lin_inner(h, &w_vars(exp, lay, i, k)).re;
    let mut u = vec![];
    for j in (0..g.k()).filter(|&j| j != k) {
        push_parts(&mut u, [lin_inner(h, &w_vars(exp, lay, i, j))]);
    }
    for col in v_cols(exp, lay, i) {
        push_parts(&mut u, [lin_inner(h, &col)]);
    }
    for (l, f) in g.f[k].iter().enumerate() {
        u.push(lay.rho(i, l) * f.norm());
    }
    u.push(constant(inst.sigma2.sqrt()));
    let theta = (hw.clone() * 2.0 - r0) * (r0 / b);
    let s = constant(a) - lay.alpha(inst, i) * c - target;

    let mut rate = Family::new(FK::DlRate);
    rate.push(S::QuadOverAffine { u, s, theta });
    let mut trust = Family::new(FK::DlTrust);
    trust.push(S::Affine(hw.clone() * 2.0 - r0 - DELTA_TRUST));
    let mut phase = Family::new(FK::DlPhase);
    phase.push(S::Affine(hw));
    Ok(vec![rate, trust, phase])
}

/// The `X`-only UL log minorant `L(X)` split as `(affine part, squared terms)`,
/// so `L(X) = affine − ‖u‖²`.
fn ul_log_parts(exp: &ExpansionPoint, lay: &VariableLayout, i: usize, l: usize) -> (AffineExpr, Vec<AffineExpr>) {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let p = &exp.point.groups[i];
    let gamma0 = exp.ul_sinr[i][l];
    let rho0 = p.rho[l].max(RHO_FLOOR);
    let omega = &exp.omega[i][l];
    let root = &exp.omega_root[i][l];
    let mut u = vec![];
    for j in l..g.l() {
        let cj = inner(&g.g[j], &(omega * &g.g[j])).re.max(0.0);
        u.push(lay.rho(i, j) * cj.sqrt());
    }
    let rg = root * inst.g_si.adjoint();
    for col in v_cols(exp, lay, i) {
        push_parts(&mut u, lin_apply(&rg, &col));
    }
    for k in 0..g.k() {
        push_parts(&mut u, lin_apply(&rg, &w_vars(exp, lay, i, k)));
    }
    let affine = constant(gamma0.ln_1p() - gamma0 - inst.sigma2 * omega.trace().re)
        + lay.rho(i, l) * (2.0 * gamma0 / rho0);
    (affine, u)
}

/// UL rate. With a fixed `α0` this is `L(X)/α0 ≥ target`; with a free `α`
/// the quotient is bounded by `2√(ln0 L(X))/α0 − ln0 α/α0²`.
pub fn ul_minorant_constraint(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, l: usize, target: AffineExpr) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let a0 = exp.point.groups[i].alpha;
    let (affine, u) = ul_log_parts(exp, lay, i, l);
    let mut rate = Family::new(FK::UlRate);
    match inst.fixed_alpha(i) {
        Some(af) => {
            rate.push(S::QuadOverAffine { u, s: affine - target * af, theta: constant(1.0) });
        }
        None => {
            let ln0 = exp.ul_sinr[i][l].ln_1p();
            let z = lay.epi(ln0);
            let sq = ln0.sqrt();
            let mut uz = vec![z.clone()];
            uz.extend(u.into_iter().map(|e| e * sq));
            rate.push(S::QuadOverAffine { u: uz, s: affine * ln0, theta: constant(1.0) });
            rate.push(S::Affine(z * (2.0 / a0) - lay.alpha(inst, i) * (ln0 / (a0 * a0)) - target));
        }
    }
    let mut nonneg = Family::new(FK::UlNonneg);
    nonneg.push(S::Affine(lay.rho(i, l)));
    Ok(vec![rate, nonneg])
}

/// UL rate through the frozen MMSE filter `q`: `γ ≥ ρ²|q^H g|²/(q^H Φ q)`,
/// which has the DL shape and takes the same minorant and trust region.
pub fn ul_filter_constraint(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, l: usize, target: AffineExpr) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let q = &exp.ul_filter[i][l];
    let gain = inner(q, &g.g[l]).norm();
    let r0 = exp.point.groups[i].rho[l] * gain;
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("UL user ({i},{l}) has zero received amplitude at the expansion point")));
    }
    let phi0 = exp.point.groups[i].rho[l..]
        .iter()
        .zip(&g.g[l..])
        .skip(1)
        .map(|(r, gj)| r * r * inner(q, gj).norm_sqr())
        .sum::<f64>();
    let sq = &inst.g_si * q;
    let p = &exp.point.groups[i];
    let si0: f64 = p.w.iter().map(|w| inner(&sq, w).norm_sqr()).sum::<f64>() + (p.v.adjoint() * &sq).norm_squared();
    let gamma0 = r0 * r0 / (phi0 + si0 + inst.sigma2 * norm_sq(q));
    let a0 = p.alpha;
    let (a, b, c) = zeta_minorant(gamma0, a0)?;
    let mut u = vec![];
    for j in l + 1..g.l() {
        u.push(lay.rho(i, j) * inner(q, &g.g[j]).norm());
    }
    for k in 0..g.k() {
        push_parts(&mut u, [lin_inner(&sq, &w_vars(exp, lay, i, k))]);
    }
    for col in v_cols(exp, lay, i) {
        push_parts(&mut u, [lin_inner(&sq, &col)]);
    }
    u.push(constant((inst.sigma2 * norm_sq(q)).sqrt()));
    let r = lay.rho(i, l) * gain;
    let theta = (r.clone() * 2.0 - r0) * (r0 / b);
    let s = constant(a) - lay.alpha(inst, i) * c - target;
    let mut rate = Family::new(FK::UlRate);
    rate.push(S::QuadOverAffine { u, s, theta });
    rate.push(S::Affine(r * 2.0 - r0 - DELTA_TRUST));
    let mut nonneg = Family::new(FK::UlNonneg);
    nonneg.push(S::Affine(lay.rho(i, l)));
    Ok(vec![rate, nonneg])
}

/// `a/α + b·x/α ≤ Γ` with `x` an auxiliary; `x/α` majorized by the ratio bound
/// when `α` is free.
fn capped_ratio(
    exp: &ExpansionPoint,
    lay: &mut VariableLayout,
    fam: &mut Family,
    i: usize,
    x: AffineExpr,
    x0: f64,
    gamma: AffineExpr,
) -> Result<()> {
    let inst = exp.inst;
    let (a, b) = log_majorant(x0)?;
    match inst.fixed_alpha(i) {
        Some(af) => fam.push(S::Affine(gamma - constant(a / af) - x * (b / af))),
        None => {
            let a0 = exp.point.groups[i].alpha;
            let alpha = lay.alpha(inst, i);
            let r1 = lay.epi(a / a0);
            let r2 = lay.epi(b * x0 / (2.0 * a0));
            fam.push(S::Hyperbolic { c: a, s: r1.clone(), theta: alpha.clone() });
            fam.push(S::Hyperbolic { c: b * x0 / 2.0, s: r2.clone(), theta: alpha.clone() * 2.0 - a0 });
            fam.push(S::Affine(alpha * 2.0 - a0 - DELTA_ALPHA));
            fam.push(S::QuadOverAffine { u: vec![x], s: gamma - r1 - r2, theta: constant(2.0 * x0 * a0 / b) });
        }
    }
    Ok(())
}

fn full_view<'b>(exp: &'b ExpansionPoint, i: usize, m: usize) -> Result<(&'b CMat<f64>, &'b Vec<CVec<f64>>)> {
    match &exp.inst.groups[i].eves[m].view {
        EveView::Full { h, g } => Ok((h, g)),
        EveView::Stats { .. } => Err(Error::Domain("full Eve CSI required".into())),
    }
}

fn stats_view<'b>(exp: &'b ExpansionPoint, i: usize, m: usize) -> Result<(&'b CMat<f64>, &'b Vec<f64>)> {
    match &exp.inst.groups[i].eves[m].view {
        EveView::Stats { hbar, gbar } => Ok((hbar, gbar)),
        EveView::Full { .. } => Err(Error::Domain("Eve statistics required".into())),
    }
}

/// `μ/α ≤ ψ` through the convexified `F^{(κ)} ≤ N_e σ²`, with `Q` the linearized interference.
fn mu_bound(exp: &ExpansionPoint, lay: &mut VariableLayout, fam: &mut Family, i: usize, mu: AffineExpr, mu0: f64, noise: f64, q: AffineExpr) {
    let inst = exp.inst;
    fam.push(S::Affine(mu.clone() - DELTA_MU));
    match inst.fixed_alpha(i) {
        Some(af) => fam.push(S::Affine(q + noise - mu * (1.0 / af))),
        None => {
            let a0 = exp.point.groups[i].alpha;
            let alpha = lay.alpha(inst, i);
            let r = lay.epi(mu0 / (2.0 * a0));
            fam.push(S::Hyperbolic { c: mu0 / 2.0, s: r.clone(), theta: alpha.clone() * 2.0 - a0 });
            fam.push(S::Affine(alpha * 2.0 - a0 - DELTA_ALPHA));
            fam.push(S::QuadOverAffine { u: vec![mu], s: q + noise - r, theta: constant(2.0 * mu0 * a0) });
        }
    }
}

/// EWCI Eve caps for DL user `k`: per Eve, the rate bound and the `μ` bound.
pub fn eve_dl_majorant_constraints(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, k: usize) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let p = &exp.point.groups[i];
    let gamma = lay.real(Slot::GammaDl { g: i, k });
    let mut out = vec![];
    for m in 0..g.eves.len() {
        let (h, gm) = full_view(exp, i, m)?;
        let ne = g.eves[m].ne as f64;
        let mu = lay.real(Slot::MuDl { g: i, k, m });
        let mu0 = exp.point.aux.mu_dl[i][k][m];
        if !(mu0 > 0.0) {
            return Err(Error::Domain(format!("μ at expansion must be positive, got {mu0:e}")));
        }
        let hh = h * h.adjoint();
        let own0 = norm_sq(&(h.adjoint() * &p.w[k]));
        let others0: f64 = (0..g.k()).filter(|&j| j != k).map(|j| norm_sq(&(h.adjoint() * &p.w[j]))).sum::<f64>()
            + fro_sq(&(h.adjoint() * &p.v))
            + gm.iter().zip(&p.rho).map(|(gv, r)| r * r * norm_sq(gv)).sum::<f64>();
        let psi0 = others0 + ne * inst.sigma2;
        let (a, b) = log_majorant(own0 / psi0)?;

        let mut cap = Family::new(FK::EveDlCap);
        let mut u = vec![];
        push_parts(&mut u, lin_adjoint(h, &w_vars(exp, lay, i, k)));
        let q = lay.epi(own0 / mu0);
        cap.push(S::QuadOverAffine { u, s: q.clone(), theta: mu.clone() });
        match inst.fixed_alpha(i) {
            Some(af) => cap.push(S::Affine(gamma.clone() - q * b - a / af)),
            None => cap.push(S::Hyperbolic { c: a, s: gamma.clone() - q * b, theta: lay.alpha(inst, i) }),
        }

        let gpow: Vec<f64> = gm.iter().map(norm_sq).collect();
        let qlin = quad_lin(&hh, &interferers(exp, lay, i, Some(k))) + ul_power_lin(exp, lay, i, None, &gpow);
        let mut aux = Family::new(FK::EveDlAux);
        mu_bound(exp, lay, &mut aux, i, mu, mu0, ne * inst.sigma2, qlin);
        out.push(cap);
        out.push(aux);
    }
    Ok(out)
}

/// EWCI Eve caps for UL user `l`.
pub fn eve_ul_majorant_constraints(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, l: usize) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let p = &exp.point.groups[i];
    let gamma = lay.real(Slot::GammaUl { g: i, l });
    let mut out = vec![];
    for m in 0..g.eves.len() {
        let (h, gm) = full_view(exp, i, m)?;
        let ne = g.eves[m].ne as f64;
        let mu = lay.real(Slot::MuUl { g: i, l, m });
        let mu0 = exp.point.aux.mu_ul[i][l][m];
        if !(mu0 > 0.0) {
            return Err(Error::Domain(format!("μ̃ at expansion must be positive, got {mu0:e}")));
        }
        let hh = h * h.adjoint();
        let gpow: Vec<f64> = gm.iter().map(norm_sq).collect();
        let own0 = p.rho[l] * p.rho[l] * gpow[l];
        let others0: f64 = p.w.iter().map(|w| norm_sq(&(h.adjoint() * w))).sum::<f64>()
            + fro_sq(&(h.adjoint() * &p.v))
            + (0..g.l()).filter(|&j| j != l).map(|j| p.rho[j] * p.rho[j] * gpow[j]).sum::<f64>();
        let chi0 = others0 + ne * inst.sigma2;
        let (a, b) = log_majorant(own0 / chi0)?;

        let mut cap = Family::new(FK::EveUlCap);
        let q = lay.epi(own0 / mu0);
        cap.push(S::QuadOverAffine { u: vec![lay.rho(i, l) * gpow[l].sqrt()], s: q.clone(), theta: mu.clone() });
        match inst.fixed_alpha(i) {
            Some(af) => cap.push(S::Affine(gamma.clone() - q * b - a / af)),
            None => cap.push(S::Hyperbolic { c: a, s: gamma.clone() - q * b, theta: lay.alpha(inst, i) }),
        }

        let qlin = quad_lin(&hh, &interferers(exp, lay, i, None)) + ul_power_lin(exp, lay, i, Some(l), &gpow);
        let mut aux = Family::new(FK::EveUlAux);
        mu_bound(exp, lay, &mut aux, i, mu, mu0, ne * inst.sigma2, qlin);
        out.push(cap);
        out.push(aux);
    }
    Ok(out)
}

/// Reals of all beams and AN of group `i`, each scaled by `c`.
fn tx_parts(exp: &ExpansionPoint, lay: &VariableLayout, i: usize, c: f64) -> Vec<AffineExpr> {
    let mut u = vec![];
    for k in 0..exp.inst.groups[i].k() {
        push_parts(&mut u, w_vars(exp, lay, i, k));
    }
    for col in v_cols(exp, lay, i) {
        push_parts(&mut u, col);
    }
    u.into_iter().map(|e| e * c).collect()
}

/// BS and UL power budgets and the time-sharing constraint.
pub fn power_constraints(exp: &ExpansionPoint, lay: &mut VariableLayout) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let mut bs = Family::new(FK::BsPower);
    let mut out = vec![];
    match &inst.timing {
        Timing::Fixed(tau) => {
            if tau.len() != inst.groups.len() {
                return Err(Error::Dimension("one time fraction per group expected".into()));
            }
            let u: Vec<AffineExpr> = (0..inst.groups.len()).flat_map(|i| tx_parts(exp, lay, i, tau[i].sqrt())).collect();
            bs.push(S::QuadOverAffine { u, s: constant(inst.pbs), theta: constant(1.0) });
            out.push(bs);
            for (i, g) in inst.groups.iter().enumerate() {
                for l in 0..g.l() {
                    let mut f = Family::new(FK::UlPower);
                    f.push(S::QuadOverAffine { u: vec![lay.rho(i, l) * tau[i].sqrt()], s: constant(inst.pu), theta: constant(1.0) });
                    out.push(f);
                }
            }
        }
        Timing::Fractional => {
            if inst.groups.len() != 2 {
                return Err(Error::Dimension("fractional timing needs exactly two groups".into()));
            }
            let p = &exp.point.groups;
            let a20 = p[1].alpha;
            let alpha1 = lay.alpha(inst, 0);
            let alpha2 = lay.alpha(inst, 1);
            let tx1: f64 = p[0].w.iter().map(norm_sq).sum::<f64>() + fro_sq(&p[0].v);
            let tx2: f64 = p[1].w.iter().map(norm_sq).sum::<f64>() + fro_sq(&p[1].v);
            let p2 = lay.epi(tx2 / a20);
            bs.push(S::QuadOverAffine { u: tx_parts(exp, lay, 1, 1.0), s: p2.clone(), theta: alpha2.clone() });
            let mut cross = alpha2.clone() * (tx1 / (a20 * a20));
            let mut pairs: Vec<(CVec<f64>, Vec<CAffine>)> = (0..p[0].w.len()).map(|k| (p[0].w[k].clone(), w_vars(exp, lay, 0, k))).collect();
            if lay.has_v() {
                pairs.extend(v0_cols(exp, 0).into_iter().zip(v_cols(exp, lay, 0)));
            }
            for (x0, x) in &pairs {
                cross -= lin_inner(x0, x).re * (2.0 / a20);
            }
            bs.push(S::QuadOverAffine { u: tx_parts(exp, lay, 0, 1.0), s: constant(inst.pbs) - p2 - cross, theta: constant(1.0) });
            out.push(bs);
            for l in 0..inst.groups[0].l() {
                let r0 = p[0].rho[l];
                let mut f = Family::new(FK::UlPower);
                let s = constant(inst.pu) + lay.rho(0, l) * (2.0 * r0 / a20) - alpha2.clone() * (r0 * r0 / (a20 * a20));
                f.push(S::QuadOverAffine { u: vec![lay.rho(0, l)], s, theta: constant(1.0) });
                out.push(f);
            }
            for l in 0..inst.groups[1].l() {
                let mut f = Family::new(FK::UlPower);
                f.push(S::QuadOverAffine { u: vec![lay.rho(1, l)], s: constant(inst.pu), theta: alpha2.clone() });
                out.push(f);
            }
            let mut ts = Family::new(FK::TimeShare);
            let u1 = lay.epi(1.0 / p[0].alpha);
            let u2 = lay.epi(1.0 / a20);
            ts.push(S::Hyperbolic { c: 1.0, s: u1.clone(), theta: alpha1 });
            ts.push(S::Hyperbolic { c: 1.0, s: u2.clone(), theta: alpha2 });
            ts.push(S::Affine(constant(1.0) - u1 - u2));
            out.push(ts);
        }
    }
    Ok(out)
}

/// Statistical-CSI Eve caps for one user: per Eve the Markov-bound ratio
/// constraint, then the rate cap through `β`.
pub fn scsi_constraints(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, user: User) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let slack = outage_slack(inst.eps_outage, g.eves.len());
    let (beta, beta0, gamma, aux_kind, cap_kind) = match user {
        User::Dl(k) => (lay.real(Slot::BetaDl { g: i, k }), exp.point.aux.beta_dl[i][k], lay.real(Slot::GammaDl { g: i, k }), FK::EveDlAux, FK::EveDlCap),
        User::Ul(l) => (lay.real(Slot::BetaUl { g: i, l }), exp.point.aux.beta_ul[i][l], lay.real(Slot::GammaUl { g: i, l }), FK::EveUlAux, FK::EveUlCap),
    };
    if !(beta0 > 0.0) {
        return Err(Error::Domain(format!("β at expansion must be positive, got {beta0:e}")));
    }
    let mut out = vec![];
    for m in 0..g.eves.len() {
        let (hbar, gbar) = stats_view(exp, i, m)?;
        let noise = slack * g.eves[m].ne as f64 * inst.sigma2;
        let (u, lin) = match user {
            User::Dl(k) => {
                let mut u = vec![];
                push_parts(&mut u, lin_apply(&exp.hbar_root[i][m], &w_vars(exp, lay, i, k)));
                (u, quad_lin(hbar, &interferers(exp, lay, i, Some(k))) + ul_power_lin(exp, lay, i, None, gbar))
            }
            User::Ul(l) => (
                vec![lay.rho(i, l) * gbar[l].max(0.0).sqrt()],
                quad_lin(hbar, &interferers(exp, lay, i, None)) + ul_power_lin(exp, lay, i, Some(l), gbar),
            ),
        };
        let mut f = Family::new(aux_kind);
        f.push(S::QuadOverAffine { u, s: beta.clone(), theta: lin + noise });
        out.push(f);
    }
    let mut cap = Family::new(cap_kind);
    cap.push(S::Affine(beta.clone() - DELTA_MU));
    capped_ratio(exp, lay, &mut cap, i, beta, beta0, gamma)?;
    out.push(cap);
    Ok(out)
}

/// Affine `Σ^{(κ)} = H^H (V V0^H + V0 V^H − V0 V0^H) H`, Ne x Ne column-major.
fn sigma_affine(exp: &ExpansionPoint, lay: &VariableLayout, i: usize, h: &CMat<f64>) -> Vec<CAffine> {
    let ne = h.ncols();
    let mut out = vec![CAffine::zero(); ne * ne];
    if !lay.has_v() {
        return out;
    }
    let a0 = h.adjoint() * &exp.point.groups[i].v;
    let av: Vec<Vec<CAffine>> = v_cols(exp, lay, i).iter().map(|col| lin_adjoint(h, col)).collect();
    let c0 = &a0 * a0.adjoint();
    for q in 0..ne {
        for pr in 0..ne {
            let mut e = CAffine::constant(-c0[(pr, q)]);
            for (n, avn) in av.iter().enumerate() {
                e += avn[pr].clone().scale(a0[(q, n)].conj());
                e += avn[q].clone().conj().scale(a0[(pr, n)]);
            }
            out[q * ne + pr] = e.compact();
        }
    }
    out
}

fn lmi(t: AffineExpr, b: Vec<CAffine>, sigma: &[CAffine], noise: f64) -> S {
    let ne = b.len();
    let n = ne + 1;
    let mut entries = vec![CAffine::zero(); n * n];
    entries[0] = CAffine::real(t);
    for j in 0..ne {
        entries[j + 1] = b[j].clone();
        entries[(j + 1) * n] = b[j].clone().conj();
        for q in 0..ne {
            let mut e = sigma[q * ne + j].clone();
            if j == q {
                e.re = e.re + noise;
            }
            entries[(q + 1) * n + j + 1] = e;
        }
    }
    S::PsdLmi { n, entries }
}

/// Worst-case Eve caps for one user: per Eve, the rate cap through `t` and the
/// Schur-complement LMI.
pub fn wcs_constraints(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, user: User) -> Result<Vec<Family>> {
    let inst = exp.inst;
    let g = &inst.groups[i];
    let mut out = vec![];
    for m in 0..g.eves.len() {
        let (h, gm) = full_view(exp, i, m)?;
        let (t, t0, gamma, cap_kind, aux_kind, b) = match user {
            User::Dl(k) => (
                lay.real(Slot::TDl { g: i, k, m }),
                exp.point.aux.t_dl[i][k][m],
                lay.real(Slot::GammaDl { g: i, k }),
                FK::EveDlCap,
                FK::EveDlAux,
                lin_adjoint(h, &w_vars(exp, lay, i, k)),
            ),
            User::Ul(l) => (
                lay.real(Slot::TUl { g: i, l, m }),
                exp.point.aux.t_ul[i][l][m],
                lay.real(Slot::GammaUl { g: i, l }),
                FK::EveUlCap,
                FK::EveUlAux,
                gm[l].iter().map(|z| CAffine::real(lay.rho(i, l)).scale(*z)).collect(),
            ),
        };
        if !(t0 > 0.0) {
            return Err(Error::Domain(format!("t at expansion must be positive, got {t0:e}")));
        }
        let mut cap = Family::new(cap_kind);
        cap.push(S::Affine(t.clone() - DELTA_MU));
        capped_ratio(exp, lay, &mut cap, i, t.clone(), t0, gamma)?;
        let mut aux = Family::new(aux_kind);
        aux.push(lmi(t, b, &sigma_affine(exp, lay, i, h), inst.sigma2));
        out.push(cap);
        out.push(aux);
    }
    Ok(out)
}

/// `Σ^{(κ)} ⪰ 0` for Eve `m` in group `i`.
pub fn wcs_trust(exp: &ExpansionPoint, lay: &mut VariableLayout, i: usize, m: usize) -> Result<Family> {
    let (h, _) = full_view(exp, i, m)?;
    let mut f = Family::new(FK::WcsTrust);
    if lay.has_v() {
        f.push(S::PsdLmi { n: h.ncols(), entries: sigma_affine(exp, lay, i, h) });
    }
    Ok(f)
}

/// Affine `Σ^{(κ)}` evaluated at a concrete `V`, for tests and diagnostics.
pub fn sigma_at(h: &CMat<f64>, v0: &CMat<f64>, v: &CMat<f64>) -> CMat<f64> {
    let a = h.adjoint() * v;
    let a0 = h.adjoint() * v0;
    &a * a0.adjoint() + &a0 * a.adjoint() - &a0 * a0.adjoint()
}
