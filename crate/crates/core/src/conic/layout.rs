use super::expr::{AffineExpr, CAffine};
use crate::rates::{DesignPoint, Instance};
use crate::scalar::{CMat, CVec};
use crate::error::{Error, Result};
use num_complex::Complex;
use std::collections::HashMap;

/// One real coordinate of the decision vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    W { g: usize, k: usize, n: usize, im: bool },
    V { g: usize, r: usize, c: usize, im: bool },
    Rho { g: usize, l: usize },
    Alpha { g: usize },
    Eta,
    GammaDl { g: usize, k: usize },
    GammaUl { g: usize, l: usize },
    MuDl { g: usize, k: usize, m: usize },
    MuUl { g: usize, l: usize, m: usize },
    BetaDl { g: usize, k: usize },
    BetaUl { g: usize, l: usize },
    TDl { g: usize, k: usize, m: usize },
    TUl { g: usize, l: usize, m: usize },
    /// UL rate shortfall used while chasing the UL targets.
    Slack,
    /// Epigraph variable introduced by a sketch builder.
    Epi(usize),
}

impl Slot {
    pub fn is_design(&self) -> bool {
        !matches!(self, Slot::Epi(_))
    }
}

/// Which auxiliary families a program carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuxSet {
    pub gamma: bool,
    pub mu: bool,
    pub beta: bool,
    pub t: bool,
    pub slack: bool,
}

/// Bijection between named slots and real indices. Auxiliary slots may carry
/// a power-of-two scale, so the modeled value is `scale * x[index]`.
#[derive(Clone, Debug)]
pub struct VariableLayout {
    slots: Vec<Slot>,
    scale: Vec<f64>,
    index: HashMap<Slot, usize>,
    aux: AuxSet,
    an: bool,
    fractional: bool,
    /// Value of each epigraph variable at the expansion point.
    epi_init: Vec<f64>,
}

/// Nearest power of two, or 1 for nonpositive input.
pub fn pow2_scale(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        2f64.powi(v.log2().round() as i32)
    } else {
        1.0
    }
}

impl VariableLayout {
    /// Deterministic order: per group `w` (user, entry, Re/Im), `V` (column-major,
    /// Re/Im), `ρ`, `α`, `Γ`, then mode auxiliaries; `η` and the slack last.
    pub fn new(inst: &Instance<f64>, aux: AuxSet) -> Self {
        let mut lay = VariableLayout {
            slots: vec![],
            scale: vec![],
            index: HashMap::new(),
            aux,
            an: inst.an,
            fractional: inst.is_fractional(),
            epi_init: vec![],
        };
        let m = inst.m();
        for (g, grp) in inst.groups.iter().enumerate() {
            for k in 0..grp.k() {
                for n in 0..inst.nt {
                    lay.push(Slot::W { g, k, n, im: false });
                    lay.push(Slot::W { g, k, n, im: true });
                }
            }
            if inst.an {
                for c in 0..inst.nt {
                    for r in 0..inst.nt {
                        lay.push(Slot::V { g, r, c, im: false });
                        lay.push(Slot::V { g, r, c, im: true });
                    }
                }
            }
            for l in 0..grp.l() {
                lay.push(Slot::Rho { g, l });
            }
            if lay.fractional {
                lay.push(Slot::Alpha { g });
            }
            if aux.gamma {
                (0..grp.k()).for_each(|k| lay.add(Slot::GammaDl { g, k }));
                (0..grp.l()).for_each(|l| lay.add(Slot::GammaUl { g, l }));
            }
            if aux.mu {
                for k in 0..grp.k() {
                    (0..m).for_each(|mm| lay.add(Slot::MuDl { g, k, m: mm }));
                }
                for l in 0..grp.l() {
                    (0..m).for_each(|mm| lay.add(Slot::MuUl { g, l, m: mm }));
                }
            }
            if aux.beta {
                (0..grp.k()).for_each(|k| lay.add(Slot::BetaDl { g, k }));
                (0..grp.l()).for_each(|l| lay.add(Slot::BetaUl { g, l }));
            }
            if aux.t {
                for k in 0..grp.k() {
                    (0..m).for_each(|mm| lay.add(Slot::TDl { g, k, m: mm }));
                }
                for l in 0..grp.l() {
                    (0..m).for_each(|mm| lay.add(Slot::TUl { g, l, m: mm }));
                }
            }
        }
        lay.push(Slot::Eta);
        if aux.slack {
            lay.push(Slot::Slack);
        }
        lay
    }

    fn add(&mut self, s: Slot) {
        self.push(s);
    }

    fn push(&mut self, s: Slot) -> usize {
        let i = self.slots.len();
        self.slots.push(s);
        self.scale.push(1.0);
        self.index.insert(s, i);
        i
    }

    /// Allocates a fresh epigraph variable whose value at the expansion point is `v0`.
    pub fn epi(&mut self, v0: f64) -> AffineExpr {
        let i = self.push(Slot::Epi(self.epi_init.len()));
        self.epi_init.push(v0);
        self.scale[i] = pow2_scale(v0.abs());
        AffineExpr::var(i, self.scale[i])
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn n_epi(&self) -> usize {
        self.epi_init.len()
    }

    pub fn aux(&self) -> AuxSet {
        self.aux
    }

    pub fn slot(&self, i: usize) -> Slot {
        self.slots[i]
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn index_of(&self, s: Slot) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scale[i]
    }

    pub fn set_scale(&mut self, s: Slot, v: f64) {
        if let Some(i) = self.index_of(s) {
            self.scale[i] = v;
        }
    }

    /// Modeled value of a real slot as an affine expression.
    pub fn real(&self, s: Slot) -> AffineExpr {
        let i = self.index[&s];
        AffineExpr::var(i, self.scale[i])
    }

    pub fn w(&self, g: usize, k: usize, nt: usize) -> Vec<CAffine> {
        (0..nt).map(|n| CAffine::var(self.index[&Slot::W { g, k, n, im: false }])).collect()
    }

    pub fn has_v(&self) -> bool {
        self.an
    }

    /// Column `c` of `V_g`; all zeros when AN is disabled.
    pub fn v_col(&self, g: usize, c: usize, nt: usize) -> Vec<CAffine> {
        if !self.an {
            return vec![CAffine::zero(); nt];
        }
        (0..nt).map(|r| CAffine::var(self.index[&Slot::V { g, r, c, im: false }])).collect()
    }

    pub fn rho(&self, g: usize, l: usize) -> AffineExpr {
        self.real(Slot::Rho { g, l })
    }

    /// `α_g`, a constant when the timing is fixed.
    pub fn alpha(&self, inst: &Instance<f64>, g: usize) -> AffineExpr {
        match inst.fixed_alpha(g) {
            Some(a) => AffineExpr::constant(a),
            None => self.real(Slot::Alpha { g }),
        }
    }

    pub fn eta(&self) -> AffineExpr {
        self.real(Slot::Eta)
    }

    /// Writes `pt` into a fresh vector; epigraph slots get their expansion values.
    pub fn encode(&self, inst: &Instance<f64>, pt: &DesignPoint<f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for (i, s) in self.slots.iter().enumerate() {
            let v = match *s {
                Slot::W { g, k, n, im } => part(pt.groups[g].w[k][n], im),
                Slot::V { g, r, c, im } => part(pt.groups[g].v[(r, c)], im),
                Slot::Rho { g, l } => pt.groups[g].rho[l],
                Slot::Alpha { g } => pt.groups[g].alpha,
                Slot::Eta => pt.aux.eta,
                Slot::GammaDl { g, k } => pt.aux.gamma_dl[g][k],
                Slot::GammaUl { g, l } => pt.aux.gamma_ul[g][l],
                Slot::MuDl { g, k, m } => pt.aux.mu_dl[g][k][m],
                Slot::MuUl { g, l, m } => pt.aux.mu_ul[g][l][m],
                Slot::BetaDl { g, k } => pt.aux.beta_dl[g][k],
                Slot::BetaUl { g, l } => pt.aux.beta_ul[g][l],
                Slot::TDl { g, k, m } => pt.aux.t_dl[g][k][m],
                Slot::TUl { g, l, m } => pt.aux.t_ul[g][l][m],
                Slot::Slack => pt.aux.slack,
                Slot::Epi(e) => self.epi_init[e],
            };
            x[i] = v / self.scale[i];
        }
        let _ = inst;
        x
    }

    /// Reads a design point back from a real vector.
    pub fn decode(&self, inst: &Instance<f64>, x: &[f64]) -> Result<DesignPoint<f64>> {
        if x.len() != self.len() {
            return Err(Error::Dimension(format!("vector has {} entries, layout {}", x.len(), self.len())));
        }
        let alpha: Vec<f64> = (0..inst.groups.len()).map(|g| inst.fixed_alpha(g).unwrap_or(0.0)).collect();
        let mut pt = DesignPoint::zeros(inst, &alpha);
        for (i, s) in self.slots.iter().enumerate() {
            let v = x[i] * self.scale[i];
            match *s {
                Slot::W { g, k, n, im } => set_part(&mut pt.groups[g].w[k][n], im, v),
                Slot::V { g, r, c, im } => set_part(&mut pt.groups[g].v[(r, c)], im, v),
                Slot::Rho { g, l } => pt.groups[g].rho[l] = v,
                Slot::Alpha { g } => pt.groups[g].alpha = v,
                Slot::Eta => pt.aux.eta = v,
                Slot::GammaDl { g, k } => pt.aux.gamma_dl[g][k] = v,
                Slot::GammaUl { g, l } => pt.aux.gamma_ul[g][l] = v,
                Slot::MuDl { g, k, m } => pt.aux.mu_dl[g][k][m] = v,
                Slot::MuUl { g, l, m } => pt.aux.mu_ul[g][l][m] = v,
                Slot::BetaDl { g, k } => pt.aux.beta_dl[g][k] = v,
                Slot::BetaUl { g, l } => pt.aux.beta_ul[g][l] = v,
                Slot::TDl { g, k, m } => pt.aux.t_dl[g][k][m] = v,
                Slot::TUl { g, l, m } => pt.aux.t_ul[g][l][m] = v,
                Slot::Slack => pt.aux.slack = v,
                Slot::Epi(_) => {}
            }
        }
        Ok(pt)
    }

    /// Picks power-of-two scales for the auxiliaries from their values in `pt`.
    pub fn scale_aux_from(&mut self, pt: &DesignPoint<f64>) {
        for i in 0..self.slots.len() {
            let v = match self.slots[i] {
                Slot::MuDl { g, k, m } => pt.aux.mu_dl[g][k][m],
                Slot::MuUl { g, l, m } => pt.aux.mu_ul[g][l][m],
                Slot::BetaDl { g, k } => pt.aux.beta_dl[g][k],
                Slot::BetaUl { g, l } => pt.aux.beta_ul[g][l],
                Slot::TDl { g, k, m } => pt.aux.t_dl[g][k][m],
                Slot::TUl { g, l, m } => pt.aux.t_ul[g][l][m],
                _ => continue,
            };
            self.scale[i] = pow2_scale(v);
        }
    }
}

fn part(z: Complex<f64>, im: bool) -> f64 {
    if im {
        z.im
    } else {
        z.re
    }
}

fn set_part(z: &mut Complex<f64>, im: bool, v: f64) {
    if im {
        z.im = v
    } else {
        z.re = v
    }
}

/// `a^H x` for a constant vector `a`.
pub fn lin_inner(a: &CVec<f64>, x: &[CAffine]) -> CAffine {
    let mut out = CAffine::zero();
    for (ai, xi) in a.iter().zip(x) {
        out += xi.clone().scale(ai.conj());
    }
    out.compact()
}

/// `A^H x` for a constant matrix `A`.
pub fn lin_adjoint(a: &CMat<f64>, x: &[CAffine]) -> Vec<CAffine> {
    (0..a.ncols()).map(|j| lin_inner(&a.column(j).into_owned(), x)).collect()
}

/// `A x` for a constant matrix `A`.
pub fn lin_apply(a: &CMat<f64>, x: &[CAffine]) -> Vec<CAffine> {
    (0..a.nrows())
        .map(|r| {
            let mut out = CAffine::zero();
            for (c, xc) in x.iter().enumerate() {
                out += xc.clone().scale(a[(r, c)]);
            }
            out.compact()
        })
        .collect()
}

/// Appends Re and Im parts of each entry.
pub fn push_parts(u: &mut Vec<AffineExpr>, z: impl IntoIterator<Item = CAffine>) {
    for c in z {
        u.push(c.re);
        u.push(c.im);
    }
}
