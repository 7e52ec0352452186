//! Per-scheme grouping of the cell channels.
//!
//! An [`Instance`] is what every optimizer and rate oracle consumes: a list of
//! time-multiplexed groups, each holding the DL users served and the UL users
//! decoded while that group is active.

use crate::scalar::{norm_sq, CMat, CVec, Scalar};
use crate::scenario::{ChannelSet, EveCsi, SystemConfig};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Timing {
    /// Two groups with free time fractions, `1/α1 + 1/α2 ≤ 1`.
    Fractional,
    /// Fixed time fraction per group.
    Fixed(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum EveView<T: Scalar> {
    Full {
        /// Nt x Ne.
        h: CMat<T>,
        /// Ne entries per UL user of the group.
        g: Vec<CVec<T>>,
    },
    Stats {
        hbar: CMat<T>,
        gbar: Vec<T>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupEve<T: Scalar> {
    pub ne: usize,
    pub view: EveView<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group<T: Scalar> {
    /// Indices into the cell-wide DL user list.
    pub dl_ids: Vec<usize>,
    /// Indices into the cell-wide UL user list, in decoding order.
    pub ul_ids: Vec<usize>,
    pub h: Vec<CVec<T>>,
    pub g: Vec<CVec<T>>,
    /// CCI `[k][l]`.
    pub f: Vec<Vec<Complex<T>>>,
    pub eves: Vec<GroupEve<T>>,
}

impl<T: Scalar> Group<T> {
    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn l(&self) -> usize {
        self.g.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T: Scalar> {
    pub nt: usize,
    pub nr: usize,
    pub groups: Vec<Group<T>>,
    /// Loop channel already scaled by the residual SI degree, Nt x Nr.
    pub g_si: CMat<T>,
    pub sigma2: T,
    pub pbs: T,
    pub pu: T,
    pub timing: Timing,
    /// Whether the BS may transmit AN.
    pub an: bool,
    pub eps_outage: T,
}

fn sorted_ul<T: Scalar>(ch: &ChannelSet<T>, mut ids: Vec<usize>) -> Vec<usize> {
    ids.sort_by(|&a, &b| {
        norm_sq(&ch.g[b])
            .partial_cmp(&norm_sq(&ch.g[a]))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    ids
}

fn group_from<T: Scalar>(ch: &ChannelSet<T>, dl: Vec<usize>, ul: Vec<usize>) -> Group<T> {
    let ul = sorted_ul(ch, ul);
    let eves = ch
        .eves
        .iter()
        .map(|e| GroupEve {
            ne: e.ne,
            view: match &e.csi {
                EveCsi::Full { h, g, .. } => EveView::Full {
                    h: h.clone(),
                    g: ul.iter().map(|&u| g[u].clone()).collect(),
                },
                EveCsi::Stats { hbar, gbar, .. } => EveView::Stats {
                    hbar: hbar.clone(),
                    gbar: ul.iter().map(|&u| gbar[u]).collect(),
                },
            },
        })
        .collect();
    Group {
        h: dl.iter().map(|&k| ch.h[k].clone()).collect(),
        g: ul.iter().map(|&u| ch.g[u].clone()).collect(),
        f: dl.iter().map(|&k| ul.iter().map(|&u| ch.f[(k, u)]).collect()).collect(),
        dl_ids: dl,
        ul_ids: ul,
        eves,
    }
}

fn base<T: Scalar>(ch: &ChannelSet<T>, cfg: &SystemConfig, groups: Vec<Group<T>>, timing: Timing) -> Instance<T> {
    Instance {
        nt: ch.nt,
        nr: ch.nr,
        groups,
        g_si: &ch.g_si * Complex::new(T::lit(cfg.sigma_si.sqrt()), T::zero()),
        sigma2: T::lit(cfg.sigma2),
        pbs: T::lit(cfg.pbs_max),
        pu: T::lit(cfg.pu_max),
        timing,
        an: true,
        eps_outage: T::lit(cfg.eps_outage),
    }
}

fn ids_in_zone(zones: &[usize], zone: usize) -> Vec<usize> {
    zones.iter().enumerate().filter(|(_, &z)| z == zone).map(|(i, _)| i).collect()
}

impl<T: Scalar> Instance<T> {
    /// Near DL users share a group with far UL users and vice versa.
    pub fn proposed(ch: &ChannelSet<T>, cfg: &SystemConfig) -> Self {
        Self::proposed_with(ch, cfg, Timing::Fractional)
    }

    /// Like [`Instance::proposed`] with a caller-chosen timing; empty groups are dropped.
    pub fn proposed_with(ch: &ChannelSet<T>, cfg: &SystemConfig, timing: Timing) -> Self {
        let groups: Vec<Group<T>> = (0..2)
            .map(|i| group_from(ch, ids_in_zone(&ch.dl_zone, i), ids_in_zone(&ch.ul_zone, 1 - i)))
            .filter(|g| g.k() + g.l() > 0)
            .collect();
        base(ch, cfg, groups, timing)
    }

    /// Every user in one group, served all the time.
    pub fn conventional(ch: &ChannelSet<T>, cfg: &SystemConfig) -> Self {
        let g = group_from(ch, (0..ch.n_dl()).collect(), (0..ch.n_ul()).collect());
        base(ch, cfg, vec![g], Timing::Fixed(vec![1.0]))
    }

    /// HD downlink block: all DL users on the full Nt+Nr array, no UL traffic.
    pub fn hd_downlink(ch: &ChannelSet<T>, cfg: &SystemConfig) -> Self {
        let n = ch.nt + ch.nr;
        let stack = |a: &CVec<T>, b: &CVec<T>| CVec::from_iterator(n, a.iter().chain(b.iter()).cloned());
        let eves = ch
            .eves
            .iter()
            .map(|e| GroupEve {
                ne: e.ne,
                view: match &e.csi {
                    EveCsi::Full { h, h_rx, .. } => {
                        let mut hh = CMat::zeros(n, e.ne);
                        hh.rows_mut(0, ch.nt).copy_from(h);
                        hh.rows_mut(ch.nt, ch.nr).copy_from(h_rx);
                        EveView::Full { h: hh, g: vec![] }
                    }
                    EveCsi::Stats { hbar, hbar_rx, .. } => {
                        let mut hb = CMat::zeros(n, n);
                        hb.view_mut((0, 0), (ch.nt, ch.nt)).copy_from(hbar);
                        hb.view_mut((ch.nt, ch.nt), (ch.nr, ch.nr)).copy_from(hbar_rx);
                        EveView::Stats { hbar: hb, gbar: vec![] }
                    }
                },
            })
            .collect();
        let dl: Vec<usize> = (0..ch.n_dl()).collect();
        let group = Group {
            h: dl.iter().map(|&k| stack(&ch.h[k], &ch.h_rx[k])).collect(),
            g: vec![],
            f: vec![vec![]; dl.len()],
            dl_ids: dl,
            ul_ids: vec![],
            eves,
        };
        let mut inst = base(ch, cfg, vec![group], Timing::Fixed(vec![1.0]));
        inst.nt = n;
        inst.nr = n;
        inst.g_si = CMat::zeros(n, n);
        inst
    }

    /// HD uplink block: all UL users received on the full array, BS silent.
    pub fn hd_uplink(ch: &ChannelSet<T>, cfg: &SystemConfig) -> Self {
        let n = ch.nt + ch.nr;
        let mut inst_ch = ch.clone();
        inst_ch.g = (0..ch.n_ul())
            .map(|u| CVec::from_iterator(n, ch.g[u].iter().chain(ch.g_tx[u].iter()).cloned()))
            .collect();
        let mut group = group_from(&inst_ch, vec![], (0..ch.n_ul()).collect());
        for e in group.eves.iter_mut() {
            match &mut e.view {
                EveView::Full { h, .. } => *h = CMat::zeros(n, e.ne),
                EveView::Stats { hbar, .. } => *hbar = CMat::zeros(n, n),
            }
        }
        let mut inst = base(ch, cfg, vec![group], Timing::Fixed(vec![1.0]));
        inst.nt = n;
        inst.nr = n;
        inst.g_si = CMat::zeros(n, n);
        inst.an = false;
        inst
    }

    pub fn m(&self) -> usize {
        self.groups.first().map_or(0, |g| g.eves.len())
    }

    pub fn is_fractional(&self) -> bool {
        matches!(self.timing, Timing::Fractional)
    }

    /// Fixed `α` of group `i`, if the timing pins it.
    pub fn fixed_alpha(&self, i: usize) -> Option<f64> {
        match &self.timing {
            Timing::Fractional => None,
            Timing::Fixed(t) => Some(1.0 / t[i]),
        }
    }

    pub fn n_dl(&self) -> usize {
        self.groups.iter().map(|g| g.k()).sum()
    }

    pub fn n_ul(&self) -> usize {
        self.groups.iter().map(|g| g.l()).sum()
    }

    /// Normalized copy: noise 1, BS budget 1, UL budget 1. Rates are unchanged
    /// when the design point is mapped with the returned [`Units`].
    pub fn normalized(&self) -> (Instance<T>, Units<T>) {
        let u = Units { sigma2: self.sigma2, pbs: self.pbs, pu: self.pu };
        let sig = self.sigma2.sqrt();
        let cb = Complex::new(self.pbs.sqrt() / sig, T::zero());
        let cu = Complex::new(self.pu.sqrt() / sig, T::zero());
        let rb = self.pbs / self.sigma2;
        let ru = self.pu / self.sigma2;
        let mut out = self.clone();
        for g in out.groups.iter_mut() {
            g.h.iter_mut().for_each(|h| *h *= cb);
            g.g.iter_mut().for_each(|x| *x *= cu);
            g.f.iter_mut().for_each(|row| row.iter_mut().for_each(|z| *z *= cu));
            for e in g.eves.iter_mut() {
                match &mut e.view {
                    EveView::Full { h, g } => {
                        *h *= cb;
                        g.iter_mut().for_each(|x| *x *= cu);
                    }
                    EveView::Stats { hbar, gbar } => {
                        *hbar *= Complex::new(rb, T::zero());
                        gbar.iter_mut().for_each(|x| *x *= ru);
                    }
                }
            }
        }
        out.g_si *= cb;
        out.sigma2 = T::one();
        out.pbs = T::one();
        out.pu = T::one();
        (out, u)
    }
}

/// Physical scales removed by [`Instance::normalized`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Units<T: Scalar> {
    pub sigma2: T,
    pub pbs: T,
    pub pu: T,
}
