use super::instance::{Instance, Units};
use crate::scalar::{CMat, CVec, Scalar};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint<T: Scalar> {
    pub w: Vec<CVec<T>>,
    pub v: CMat<T>,
    pub rho: Vec<T>,
    /// Inverse time fraction.
    pub alpha: T,
}

impl<T: Scalar> GroupPoint<T> {
    pub fn tau(&self) -> T {
        T::one() / self.alpha
    }
}

/// Auxiliary variables, all indexed `[group][user]` or `[group][user][eve]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aux<T: Scalar> {
    pub eta: T,
    pub gamma_dl: Vec<Vec<T>>,
    pub gamma_ul: Vec<Vec<T>>,
    pub mu_dl: Vec<Vec<Vec<T>>>,
    pub mu_ul: Vec<Vec<Vec<T>>>,
    pub beta_dl: Vec<Vec<T>>,
    pub beta_ul: Vec<Vec<T>>,
    pub t_dl: Vec<Vec<Vec<T>>>,
    pub t_ul: Vec<Vec<Vec<T>>>,
    /// UL rate shortfall while the UL targets are being chased.
    #[serde(default)]
    pub slack: T,
}

impl<T: Scalar> Aux<T> {
    pub fn zeros(inst: &Instance<T>) -> Self {
        let m = inst.m();
        let per_user = |n: &dyn Fn(usize) -> usize| -> Vec<Vec<T>> {
            (0..inst.groups.len()).map(|i| vec![T::zero(); n(i)]).collect()
        };
        let per_eve = |n: &dyn Fn(usize) -> usize| -> Vec<Vec<Vec<T>>> {
            (0..inst.groups.len()).map(|i| vec![vec![T::zero(); m]; n(i)]).collect()
        };
        let k = |i: usize| inst.groups[i].k();
        let l = |i: usize| inst.groups[i].l();
        Aux {
            eta: T::zero(),
            gamma_dl: per_user(&k),
            gamma_ul: per_user(&l),
            mu_dl: per_eve(&k),
            mu_ul: per_eve(&l),
            beta_dl: per_user(&k),
            beta_ul: per_user(&l),
            t_dl: per_eve(&k),
            t_ul: per_eve(&l),
            slack: T::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint<T: Scalar> {
    pub groups: Vec<GroupPoint<T>>,
    pub aux: Aux<T>,
}

impl<T: Scalar> DesignPoint<T> {
    /// All-zero transmit variables with `α = 1/τ` per group.
    pub fn zeros(inst: &Instance<T>, alpha: &[T]) -> Self {
        let groups = inst
            .groups
            .iter()
            .zip(alpha)
            .map(|(g, &a)| GroupPoint {
                w: vec![CVec::zeros(inst.nt); g.k()],
                v: CMat::zeros(inst.nt, inst.nt),
                rho: vec![T::zero(); g.l()],
                alpha: a,
            })
            .collect();
        DesignPoint { groups, aux: Aux::zeros(inst) }
    }

    /// Maps between physical and normalized units. `forward = true` goes to normalized.
    pub fn rescaled(&self, u: &Units<T>, forward: bool) -> Self {
        let (sb, su, sn) = if forward {
            (T::one() / u.pbs.sqrt(), T::one() / u.pu.sqrt(), T::one() / u.sigma2)
        } else {
            (u.pbs.sqrt(), u.pu.sqrt(), u.sigma2)
        };
        let cb = Complex::new(sb, T::zero());
        let mut out = self.clone();
        for g in out.groups.iter_mut() {
            g.w.iter_mut().for_each(|w| *w *= cb);
            g.v *= cb;
            g.rho.iter_mut().for_each(|r| *r *= su);
        }
        for x in out.aux.mu_dl.iter_mut().chain(out.aux.mu_ul.iter_mut()).flatten().flatten() {
            *x *= sn;
        }
        out
    }

    /// Rotates every beamformer so that `h^H w` is real and nonnegative.
    pub fn phase_align(&mut self, inst: &Instance<T>) {
        for (g, gp) in inst.groups.iter().zip(self.groups.iter_mut()) {
            for (h, w) in g.h.iter().zip(gp.w.iter_mut()) {
                let z = crate::scalar::inner(h, w);
                let r = z.norm_sqr().sqrt();
                if r > T::zero() {
                    *w *= z.conj() / r;
                }
            }
        }
    }

    pub fn tau(&self) -> Vec<T> {
        self.groups.iter().map(|g| g.tau()).collect()
    }
}
