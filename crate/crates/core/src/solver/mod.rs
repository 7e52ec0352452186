//! Conic backend: an adapter to Clarabel plus an independent residual check.

use crate::conic::{AffineExpr, Cone, ConicProgram};
use crate::error::{Error, Result};
use crate::scenario::SolverSettings;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
    SupportedConeT::{NonnegativeConeT, PSDTriangleConeT, SecondOrderConeT},
};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub dual: Vec<f64>,
    /// Objective of the program as posed (maximized, constant included).
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Largest scaled cone violation of `x`, from [`verify`].
    pub violation: f64,
    pub solve_time: f64,
    pub iterations: u32,
}

/// Largest scaled cone violation of `x`; computed from the program alone.
pub fn verify(program: &ConicProgram, x: &[f64]) -> f64 {
    program.max_violation(x)
}

struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    /// Appends `k e` as one cone row.
    fn push(&mut self, e: &AffineExpr, k: f64) {
        let r = self.b.len();
        for &(j, c) in &e.terms {
            if c != 0.0 {
                self.i.push(r);
                self.j.push(j);
                self.v.push(-c * k);
            }
        }
        self.b.push(e.constant * k);
    }
}

fn magnitude(e: &AffineExpr) -> f64 {
    e.terms.iter().fold(e.constant.abs(), |m, &(_, c)| m.max(c.abs()))
}

fn block_scale(rows: &[AffineExpr]) -> f64 {
    let m = rows.iter().map(magnitude).fold(0.0, f64::max);
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

/// Lowers to Clarabel form. Each block is multiplied by a positive factor
/// (and each rotated cone has its two leading rows rebalanced), which leaves
/// cone membership unchanged but evens out the coefficient magnitudes.
fn lower(program: &ConicProgram) -> Result<(Rows, Vec<SupportedConeT<f64>>)> {
    let mut rows = Rows { i: vec![], j: vec![], v: vec![], b: vec![] };
    let mut cones: Vec<SupportedConeT<f64>> = vec![];
    for blk in &program.blocks {
        let r = &blk.rows;
        match blk.cone {
            Cone::Nonneg => {
                for e in r {
                    rows.push(e, block_scale(std::slice::from_ref(e)));
                }
                match cones.last_mut() {
                    Some(NonnegativeConeT(n)) => *n += r.len(),
                    _ => cones.push(NonnegativeConeT(r.len())),
                }
            }
            Cone::Soc => {
                let k = block_scale(r);
                for e in r {
                    rows.push(e, k);
                }
                cones.push(SecondOrderConeT(r.len()));
            }
            Cone::Rsoc => {
                if r.len() < 2 {
                    return Err(Error::Dimension("rotated cone needs two leading rows".into()));
                }
                let (ms, mt) = (magnitude(&r[0]), magnitude(&r[1]));
                let c = if ms > 0.0 && mt > 0.0 { (mt / ms).sqrt() } else { 1.0 };
                let s = r[0].clone() * c;
                let t = r[1].clone() * (1.0 / c);
                let mut scaled = vec![
                    ((s.clone() + t.clone()) * FRAC_1_SQRT_2).compact(),
                    ((s - t) * FRAC_1_SQRT_2).compact(),
                ];
                scaled.extend(r[2..].iter().cloned());
                let k = block_scale(&scaled);
                for e in &scaled {
                    rows.push(e, k);
                }
                cones.push(SecondOrderConeT(r.len()));
            }
            Cone::Psd(n) => {
                if r.len() != n * n {
                    return Err(Error::Dimension(format!("PSD block of order {n} has {} rows", r.len())));
                }
                let mut tri = Vec::with_capacity(n * (n + 1) / 2);
                for c in 0..n {
                    for rr in 0..=c {
                        if rr == c {
                            tri.push(r[c * n + c].clone());
                        } else {
                            // √2 times the symmetrized off-diagonal entry.
                            tri.push(((r[c * n + rr].clone() + r[rr * n + c].clone()) * (SQRT_2 / 2.0)).compact());
                        }
                    }
                }
                let k = block_scale(&tri);
                for e in &tri {
                    rows.push(e, k);
                }
                cones.push(PSDTriangleConeT(n));
            }
        }
    }
    Ok((rows, cones))
}

fn status_of(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalFailure,
    }
}

/// Solves `program`. Solver failures are reported in the status; only a
/// malformed program is an error. A reduced-accuracy solution counts as
/// optimal only if the independent check passes at `feas_tol`.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<SolveReport> {
    let n = program.n_vars;
    for blk in &program.blocks {
        if blk.rows.iter().any(|e| e.max_index().is_some_and(|i| i >= n)) {
            return Err(Error::Dimension("cone row references a variable outside the program".into()));
        }
    }
    let (rows, cones) = lower(program)?;
    let m = rows.b.len();
    let a = CscMatrix::new_from_triplets(m, n, rows.i, rows.j, rows.v);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for &(j, c) in &program.objective.terms {
        q[j] -= c;
    }
    let mut opts = DefaultSettings::default();
    opts.verbose = false;
    opts.tol_feas = settings.feas_tol;
    opts.tol_gap_abs = settings.gap_tol;
    opts.tol_gap_rel = settings.gap_tol;
    opts.max_iter = settings.max_ipm_iters;
    opts.max_threads = 1;
    let mut solver = DefaultSolver::new(&p, &q, &a, &rows.b, &cones, opts).map_err(|e| Error::Solver { status: "setup".into(), context: format!("{e:?}") })?;
    solver.solve();
    let sol = &solver.solution;
    let violation = verify(program, &sol.x);
    let mut status = status_of(sol.status);
    if sol.status == SolverStatus::AlmostSolved && violation > settings.feas_tol {
        status = SolveStatus::NumericalFailure;
    }
    Ok(SolveReport {
        status,
        x: sol.x.clone(),
        dual: sol.z.clone(),
        objective: program.objective.eval(&sol.x),
        primal_residual: sol.r_prim,
        dual_residual: sol.r_dual,
        violation,
        solve_time: sol.solve_time,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::FamilyKind;
    use crate::conic::{AffineExpr, ConeBlock};

    fn block(cone: Cone, rows: Vec<AffineExpr>) -> ConeBlock {
        ConeBlock { cone, rows, family: FamilyKind::Objective }
    }

    fn x(i: usize) -> AffineExpr {
        AffineExpr::var(i, 1.0)
    }

    fn c(v: f64) -> AffineExpr {
        AffineExpr::constant(v)
    }

    #[test]
    fn lp_example() {
        let prog = ConicProgram { n_vars: 1, objective: x(0), blocks: vec![block(Cone::Nonneg, vec![c(3.0) - x(0), x(0)])] };
        let r = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() <= 1e-7);
        assert!(r.violation <= 1e-8);
    }

    #[test]
    fn socp_example() {
        let prog = ConicProgram { n_vars: 2, objective: x(0) + x(1), blocks: vec![block(Cone::Soc, vec![c(1.0), x(0), x(1)])] };
        let r = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2f64.sqrt()).abs() <= 1e-7);
        assert!((r.x[0] - FRAC_1_SQRT_2).abs() <= 1e-7 && (r.x[1] - FRAC_1_SQRT_2).abs() <= 1e-7);
    }

    #[test]
    fn sdp_example() {
        // Symmetric X parameterized by its upper triangle, X − I ⪰ 0, minimize tr X.
        let n = 3;
        let idx = |r: usize, cc: usize| {
            let (r, cc) = if r <= cc { (r, cc) } else { (cc, r) };
            cc * (cc + 1) / 2 + r
        };
        let mut rows = vec![];
        for cc in 0..n {
            for r in 0..n {
                let e = x(idx(r, cc)) - if r == cc { 1.0 } else { 0.0 };
                rows.push(e);
            }
        }
        let obj = -(x(idx(0, 0)) + x(idx(1, 1)) + x(idx(2, 2)));
        let prog = ConicProgram { n_vars: 6, objective: obj, blocks: vec![block(Cone::Psd(n), rows)] };
        let r = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((-r.objective - 3.0).abs() <= 1e-7);
    }

    #[test]
    fn rotated_cone_example() {
        // max u s.t. u² ≤ 2·s·θ with s = 1, θ = 2 → u = 2.
        let prog = ConicProgram { n_vars: 1, objective: x(0), blocks: vec![block(Cone::Rsoc, vec![c(1.0), c(2.0), x(0)])] };
        let r = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2.0).abs() <= 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let infeas = ConicProgram { n_vars: 1, objective: x(0), blocks: vec![block(Cone::Nonneg, vec![x(0) - 2.0, c(1.0) - x(0)])] };
        assert_eq!(solve(&infeas, &SolverSettings::default()).unwrap().status, SolveStatus::Infeasible);
        let unb = ConicProgram { n_vars: 1, objective: x(0), blocks: vec![block(Cone::Nonneg, vec![x(0)])] };
        assert_eq!(solve(&unb, &SolverSettings::default()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn malformed_program_is_an_error() {
        let bad = ConicProgram { n_vars: 1, objective: x(0), blocks: vec![block(Cone::Nonneg, vec![x(3)])] };
        assert!(solve(&bad, &SolverSettings::default()).is_err());
    }

    #[test]
    fn verifier_flags_violations() {
        let prog = ConicProgram { n_vars: 2, objective: x(0), blocks: vec![block(Cone::Soc, vec![c(1.0), x(0), x(1)])] };
        assert_eq!(verify(&prog, &[0.6, 0.8]), 0.0);
        assert!(verify(&prog, &[1.0, 1.0]) > 0.1);
    }

    #[test]
    fn verifier_scales_by_term_size() {
        let row = x(0) * 1e6 - x(1) * 1e6;
        let prog = ConicProgram { n_vars: 2, objective: x(0), blocks: vec![block(Cone::Nonneg, vec![row])] };
        assert!(verify(&prog, &[1.0, 1.0 + 1e-9]) < 1e-9);
        assert!(verify(&prog, &[1.0, 2.0]) > 0.1);
    }

    #[test]
    fn deterministic() {
        let prog = ConicProgram { n_vars: 2, objective: x(0) + x(1) * 0.5, blocks: vec![block(Cone::Soc, vec![c(1.0), x(0), x(1)])] };
        let a = solve(&prog, &SolverSettings::default()).unwrap();
        let b = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}
