//! Real conic intermediate representation and the subproblem builders.

pub mod expr;
pub mod layout;
mod build;

pub use build::{build_feasibility_program, build_subproblem, model_variable_count, Built, ProgramSpec, Stage};
pub use expr::{AffineExpr, CAffine};
pub use layout::{AuxSet, Slot, VariableLayout};

use crate::approx::{ConstraintSketch, FamilyKind};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// Each row `≥ 0`.
    Nonneg,
    /// `rows[0] ≥ ‖rows[1..]‖`.
    Soc,
    /// `2 rows[0] rows[1] ≥ ‖rows[2..]‖²`, `rows[0], rows[1] ≥ 0`.
    Rsoc,
    /// Real symmetric `n × n`, rows column-major over the full matrix.
    Psd(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeBlock {
    pub cone: Cone,
    pub rows: Vec<AffineExpr>,
    pub family: FamilyKind,
}

/// `maximize objective` subject to every block lying in its cone.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    pub n_vars: usize,
    pub objective: AffineExpr,
    pub blocks: Vec<ConeBlock>,
}

/// Lowers one sketch to cone blocks.
pub fn realify(sketch: &ConstraintSketch, family: FamilyKind) -> Vec<ConeBlock> {
    let r2 = std::f64::consts::SQRT_2;
    let block = |cone, rows| ConeBlock { cone, rows, family };
    match sketch {
        ConstraintSketch::Affine(e) => vec![block(Cone::Nonneg, vec![e.clone().compact()])],
        ConstraintSketch::QuadOverAffine { u, s, theta } => {
            let mut rows = vec![s.clone().compact(), theta.clone().compact()];
            rows.extend(u.iter().map(|e| (e.clone() * r2).compact()));
            vec![block(Cone::Rsoc, rows)]
        }
        ConstraintSketch::Hyperbolic { c, s, theta } => {
            let rows = vec![s.clone().compact(), theta.clone().compact(), AffineExpr::constant((2.0 * c).sqrt())];
            vec![block(Cone::Rsoc, rows)]
        }
        ConstraintSketch::PsdLmi { n, entries } => {
            let n = *n;
            let m = 2 * n;
            let mut rows = Vec::with_capacity(m * m);
            for c in 0..m {
                for r in 0..m {
                    let e = match (r < n, c < n) {
                        (true, true) => entries[c * n + r].re.clone(),
                        (false, true) => entries[c * n + r - n].im.clone(),
                        (true, false) => -entries[(c - n) * n + r].im.clone(),
                        (false, false) => entries[(c - n) * n + r - n].re.clone(),
                    };
                    rows.push(e.compact());
                }
            }
            vec![block(Cone::Psd(m), rows)]
        }
    }
}

impl ConicProgram {
    pub fn count(&self, cone: fn(&Cone) -> bool) -> usize {
        self.blocks.iter().filter(|b| cone(&b.cone)).count()
    }

    /// Largest cone violation at `x`, each scaled by `1 + max |row|`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| block_violation(b, x)).fold(0.0, f64::max)
    }

    /// Plain-text listing of cones and sparse rows.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.n_vars);
        let _ = writeln!(out, "maximize {}", fmt_expr(&self.objective));
        for (i, b) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "block {i} {:?} {:?} rows {}", b.cone, b.family, b.rows.len());
            for r in &b.rows {
                let _ = writeln!(out, "  {}", fmt_expr(r));
            }
        }
        out
    }
}

fn fmt_expr(e: &AffineExpr) -> String {
    let mut s = format!("{:.17e}", e.constant);
    for (i, c) in &e.terms {
        let _ = write!(s, " {:+.17e}*x{}", c, i);
    }
    s
}

/// Distance of one block from its cone, relative to the largest row
/// magnitude `|c| + Σ|a_j x_j|`. Rows whose terms nearly cancel are judged
/// against the size of the terms, not of the sum.
pub fn block_violation(b: &ConeBlock, x: &[f64]) -> f64 {
    let v: Vec<f64> = b.rows.iter().map(|r| r.eval(x)).collect();
    let size = |r: &AffineExpr| r.constant.abs() + r.terms.iter().map(|&(j, c)| (c * x[j]).abs()).sum::<f64>();
    let scale = 1.0 + b.rows.iter().map(size).fold(0.0f64, f64::max);
    let raw = match b.cone {
        Cone::Nonneg => v.iter().fold(0.0f64, |m, &y| m.max(-y)),
        Cone::Soc => {
            let n = v[1..].iter().map(|y| y * y).sum::<f64>().sqrt();
            (n - v[0]).max(0.0)
        }
        Cone::Rsoc => {
            let (s, t) = (v[0], v[1]);
            let a = (s + t) / std::f64::consts::SQRT_2;
            let d = (s - t) / std::f64::consts::SQRT_2;
            let n = (d * d + v[2..].iter().map(|y| y * y).sum::<f64>()).sqrt();
            (n - a).max(0.0)
        }
        Cone::Psd(n) => {
            let m = nalgebra::DMatrix::from_fn(n, n, |r, c| 0.5 * (v[c * n + r] + v[r * n + c]));
            let lmin = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            (-lmin).max(0.0)
        }
    };
    raw / scale
}

#[cfg(test)]
mod tests;
