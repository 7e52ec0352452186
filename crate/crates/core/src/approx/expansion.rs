use crate::error::{Error, Result};
use crate::rates::{self, DesignPoint, EveView, Instance};
use crate::scalar::{inner, norm_sq, CMat, CVec};
use nalgebra::{Cholesky, SymmetricEigen};
use num_complex::Complex;

/// Tolerance on the smallest eigenvalue of `Ω`, relative to its largest.
pub const OMEGA_EIG_TOL: f64 = 1e-9;

/// The current iterate plus everything the sketch builders reuse.
#[derive(Clone, Debug)]
pub struct ExpansionPoint<'a> {
    pub inst: &'a Instance<f64>,
    pub point: DesignPoint<f64>,
    /// `[group][user]`.
    pub dl_sinr: Vec<Vec<f64>>,
    /// `Re{h^H w}` at the point, `[group][user]`.
    pub dl_gain: Vec<Vec<f64>>,
    pub ul_sinr: Vec<Vec<f64>>,
    /// `Φ_ℓ^{-1} − Φ_{ℓ-1}^{-1}`, `[group][user]`.
    pub omega: Vec<Vec<CMat<f64>>>,
    /// `R` with `R^H R = Ω`.
    pub omega_root: Vec<Vec<CMat<f64>>>,
    /// Unit-norm MMSE filter `Φ_ℓ^{-1} g_ℓ`, `[group][user]`.
    pub ul_filter: Vec<Vec<CVec<f64>>>,
    /// `F` with `F^H F = H̄_m`, `[group][eve]`; empty for full CSI.
    pub hbar_root: Vec<Vec<CMat<f64>>>,
}

fn inverse(a: &CMat<f64>) -> Result<CMat<f64>> {
    Cholesky::new(a.clone())
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))
}

fn hermitian(a: &CMat<f64>) -> CMat<f64> {
    (a + a.adjoint()) * Complex::new(0.5, 0.0)
}

/// `(eigenvalues, factor)` of a Hermitian PSD matrix with negative eigenvalues clamped.
pub fn psd_root(a: &CMat<f64>, what: &str) -> Result<(Vec<f64>, CMat<f64>)> {
    let eig = SymmetricEigen::new(hermitian(a));
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lmin < -OMEGA_EIG_TOL * lmax.max(1.0) {
        return Err(Error::Domain(format!("{what} is not PSD (min eigenvalue {lmin:e})")));
    }
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&j| eig.eigenvalues[j] > 0.0).collect();
    let mut root = CMat::zeros(keep.len(), a.nrows());
    for (r, &j) in keep.iter().enumerate() {
        let s = eig.eigenvalues[j].sqrt();
        let v = eig.eigenvectors.column(j);
        for c in 0..a.nrows() {
            root[(r, c)] = v[c].conj() * s;
        }
    }
    Ok((eig.eigenvalues.iter().copied().collect(), root))
}

impl<'a> ExpansionPoint<'a> {
    /// Phase-aligns the beams of `point` and caches the expansion data.
    pub fn new(inst: &'a Instance<f64>, mut point: DesignPoint<f64>) -> Result<Self> {
        point.phase_align(inst);
        let mut dl_sinr = vec![];
        let mut dl_gain = vec![];
        let mut ul_sinr = vec![];
        let mut omega = vec![];
        let mut omega_root = vec![];
        let mut ul_filter = vec![];
        let mut hbar_root = vec![];
        for (i, g) in inst.groups.iter().enumerate() {
            dl_sinr.push((0..g.k()).map(|k| rates::dl_sinr(inst, &point, i, k)).collect());
            dl_gain.push(g.h.iter().zip(&point.groups[i].w).map(|(h, w)| inner(h, w).re).collect());
            ul_sinr.push(rates::ul_sinrs(inst, &point, i));
            let mut om = vec![];
            let mut roots = vec![];
            let mut filters = vec![];
            for l in 0..g.l() {
                let after = inverse(&rates::ul_covariance(inst, &point, i, l + 1))?;
                let q = &after * &g.g[l];
                // Φ_ℓ = Φ_{ℓ+1} + ρ² g g^H, so the difference of inverses is the
                // rank-one Sherman-Morrison term.
                let rho2 = point.groups[i].rho[l].powi(2);
                let o = hermitian(&(&q * q.adjoint() * Complex::new(rho2 / (1.0 + rho2 * inner(&g.g[l], &q).re), 0.0)));
                let n = norm_sq(&q).sqrt();
                filters.push(if n > 0.0 { q * Complex::new(1.0 / n, 0.0) } else { q });
                let (_, r) = psd_root(&o, "Ω")?;
                om.push(o);
                roots.push(r);
            }
            omega.push(om);
            omega_root.push(roots);
            ul_filter.push(filters);
            let mut hr = vec![];
            for e in &g.eves {
                if let EveView::Stats { hbar, .. } = &e.view {
                    hr.push(psd_root(hbar, "H̄")?.1);
                }
            }
            hbar_root.push(hr);
        }
        Ok(ExpansionPoint { inst, point, dl_sinr, dl_gain, ul_sinr, omega, omega_root, ul_filter, hbar_root })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{instance, point, Shape};

    #[test]
    fn omega_is_psd_and_factored() {
        for seed in 0..20 {
            let inst = instance(seed, Shape { l: 3, ..Shape::default() });
            let pt = point(seed, &inst, &[2.0, 2.0]);
            let exp = ExpansionPoint::new(&inst, pt).unwrap();
            for (om, roots) in exp.omega.iter().zip(&exp.omega_root) {
                for (o, r) in om.iter().zip(roots) {
                    let back = r.adjoint() * r;
                    assert!((back - o).norm() <= 1e-12 * o.norm().max(1e-300) + 1e-15);
                    let lmin = SymmetricEigen::new(o.clone()).eigenvalues.min();
                    assert!(lmin >= -OMEGA_EIG_TOL * o.norm());
                }
            }
        }
    }

    #[test]
    fn omega_matches_difference_of_inverses() {
        for seed in 0..20 {
            let inst = instance(seed, Shape { l: 3, ..Shape::default() });
            let pt = point(seed, &inst, &[2.0, 2.0]);
            let exp = ExpansionPoint::new(&inst, pt).unwrap();
            for (i, om) in exp.omega.iter().enumerate() {
                for (l, o) in om.iter().enumerate() {
                    let after = inverse(&rates::ul_covariance(&inst, &exp.point, i, l + 1)).unwrap();
                    let before = inverse(&rates::ul_covariance(&inst, &exp.point, i, l)).unwrap();
                    let d = after - before;
                    assert!((o - &d).norm() <= 1e-9 * d.norm().max(1e-12), "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn phase_alignment_makes_gain_real() {
        let inst = instance(3, Shape::default());
        let pt = point(3, &inst, &[2.0, 2.0]);
        let exp = ExpansionPoint::new(&inst, pt).unwrap();
        for (i, g) in inst.groups.iter().enumerate() {
            for (k, h) in g.h.iter().enumerate() {
                let z = inner(h, &exp.point.groups[i].w[k]);
                assert!(z.im.abs() <= 1e-12 * z.norm());
                assert!((z.re - exp.dl_gain[i][k]).abs() <= 1e-12 * z.norm());
                assert!(z.re >= 0.0);
            }
        }
    }

    #[test]
    fn non_psd_is_rejected() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(-0.1, 0.0)]));
        assert!(psd_root(&a, "test").is_err());
    }
}
