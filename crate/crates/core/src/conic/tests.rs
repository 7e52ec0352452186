use super::*;
use crate::algorithms::{close_aux, Target};
use crate::approx::ExpansionPoint;
use crate::rates::{Instance, Timing};
use crate::scalar::CMat;
use crate::scenario::{EveModel, Objective, UlBound};
use crate::testkit::{cmat, feasible_point, instance, rng, with_stats, Shape};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;

const ALL: Target = Target { objective: Objective::MaxminAll, rbar_ul: 0.0 };

fn mode_instance(seed: u64, eve: EveModel, shape: Shape) -> Instance<f64> {
    let inst = instance(seed, shape);
    if eve == EveModel::Scsi {
        with_stats(&inst)
    } else {
        inst
    }
}

fn expansion(inst: &Instance<f64>, seed: u64, eve: Option<EveModel>, target: Target) -> ExpansionPoint<'_> {
    let alpha = vec![inst.groups.len() as f64; inst.groups.len()];
    let pt = feasible_point(seed, inst, &alpha);
    let mut pt = close_aux(inst, &pt, eve, target).unwrap();
    pt.phase_align(inst);
    ExpansionPoint::new(inst, pt).unwrap()
}

fn random_x(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
}

#[test]
fn layout_round_trip() {
    for eve in [EveModel::Ewci, EveModel::Scsi, EveModel::Wcs] {
        let inst = mode_instance(1, eve, Shape::default());
        let exp = expansion(&inst, 1, Some(eve), ALL);
        let built = build_subproblem(&ProgramSpec::main(eve, Objective::MaxminAll, 0.0), &exp).unwrap();
        let lay = &built.layout;
        let x = lay.encode(&inst, &exp.point);
        let back = lay.decode(&inst, &x).unwrap();
        assert_eq!(lay.encode(&inst, &back), x);

        let y = random_x(2, lay.len());
        let pt = lay.decode(&inst, &y).unwrap();
        let z = lay.encode(&inst, &pt);
        for i in (0..lay.len()).filter(|&i| lay.slot(i).is_design()) {
            assert_eq!(z[i], y[i], "slot {:?}", lay.slot(i));
        }
    }
}

/// Residual of a sketch in the form the lowered cone measures it.
fn sketch_residual(s: &ConstraintSketch, x: &[f64]) -> f64 {
    match s {
        ConstraintSketch::Affine(e) => e.eval(x),
        ConstraintSketch::QuadOverAffine { u, s, theta } => {
            2.0 * (s.eval(x) * theta.eval(x) - u.iter().map(|e| e.eval(x).powi(2)).sum::<f64>())
        }
        ConstraintSketch::Hyperbolic { c, s, theta } => 2.0 * (s.eval(x) * theta.eval(x) - c),
        ConstraintSketch::PsdLmi { .. } => s.slack(x),
    }
}

fn block_residual(b: &ConeBlock, x: &[f64]) -> f64 {
    let v: Vec<f64> = b.rows.iter().map(|r| r.eval(x)).collect();
    match b.cone {
        Cone::Nonneg => v[0],
        Cone::Soc => v[0] - v[1..].iter().map(|y| y * y).sum::<f64>().sqrt(),
        Cone::Rsoc => 2.0 * v[0] * v[1] - v[2..].iter().map(|y| y * y).sum::<f64>(),
        Cone::Psd(n) => {
            let m = DMatrix::from_fn(n, n, |r, c| v[c * n + r]);
            SymmetricEigen::new(m).eigenvalues.min()
        }
    }
}

#[test]
fn realification_preserves_residuals() {
    for eve in [EveModel::Ewci, EveModel::Scsi, EveModel::Wcs] {
        let inst = mode_instance(3, eve, Shape::default());
        let exp = expansion(&inst, 3, Some(eve), ALL);
        let built = build_subproblem(&ProgramSpec::main(eve, Objective::MaxminAll, 0.0), &exp).unwrap();
        for trial in 0..20 {
            let x = random_x(100 + trial, built.layout.len());
            for f in &built.families {
                for s in &f.sketches {
                    let blocks = realify(s, f.kind);
                    assert_eq!(blocks.len(), 1);
                    let a = sketch_residual(s, &x);
                    let b = block_residual(&blocks[0], &x);
                    assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} {a} vs {b}", s.kind());
                }
            }
        }
    }
}

#[test]
fn hermitian_embedding_keeps_spectrum() {
    let mut r = rng(9);
    for _ in 0..200 {
        let a = cmat(&mut r, 3, 3, 1.0);
        let shift = r.random::<f64>() * 4.0 - 2.0;
        let herm: CMat<f64> = &a * a.adjoint() * Complex::new(0.5, 0.0) - CMat::identity(3, 3) * Complex::new(shift, 0.0);
        let entries: Vec<CAffine> = (0..9).map(|i| CAffine::constant(herm[(i % 3, i / 3)])).collect();
        let blocks = realify(&ConstraintSketch::PsdLmi { n: 3, entries }, crate::approx::FamilyKind::WcsTrust);
        let real = block_residual(&blocks[0], &[]);
        let lmin = SymmetricEigen::new(herm.clone()).eigenvalues.min();
        assert!((real - lmin).abs() <= 1e-10 * (1.0 + lmin.abs()));
        assert_eq!(real >= 0.0, lmin >= 0.0);
    }
}

fn check_plug_in(built: &Built, inst: &Instance<f64>, exp: &ExpansionPoint) {
    let x = built.layout.encode(inst, &exp.point);
    let worst = built
        .program
        .blocks
        .iter()
        .map(|b| (block_violation(b, &x), b.family))
        .fold((0.0, None), |acc, (v, f)| if v > acc.0 { (v, Some(f)) } else { acc });
    assert!(worst.0 <= 1e-8, "violation {:e} in {:?}", worst.0, worst.1);
}

#[test]
fn expansion_point_is_feasible() {
    for eve in [EveModel::Ewci, EveModel::Scsi, EveModel::Wcs] {
        for seed in 0..6 {
            for groups in [1, 2] {
                let shape = Shape { groups, ..Shape::default() };
                let inst = mode_instance(seed, eve, shape);
                let exp = expansion(&inst, seed, Some(eve), ALL);
                for ul_bound in [UlBound::Filter, UlBound::Mmse] {
                    let spec = ProgramSpec { ul_bound, ..ProgramSpec::main(eve, Objective::MaxminAll, 0.0) };
                    check_plug_in(&build_subproblem(&spec, &exp).unwrap(), &inst, &exp);
                }

                let feas = build_feasibility_program(&exp, Objective::MaxminAll, 0.0, 0.05, UlBound::Filter).unwrap();
                assert_eq!(feas.eve_family_count(), 0);
                let exp0 = expansion(&inst, seed, None, ALL);
                let feas = build_feasibility_program(&exp0, Objective::MaxminAll, 0.0, 0.05, UlBound::Filter).unwrap();
                check_plug_in(&feas, &inst, &exp0);

                let target = Target { objective: Objective::MaxminDl, rbar_ul: 1.0 };
                let exp = expansion(&inst, seed, Some(eve), target);
                let spec = ProgramSpec {
                    stage: Stage::UlQos { eta_floor: exp.point.aux.eta - 0.1 },
                    ..ProgramSpec::main(eve, Objective::MaxminDl, 1.0)
                };
                check_plug_in(&build_subproblem(&spec, &exp).unwrap(), &inst, &exp);
            }
        }
    }
}

#[test]
fn fixed_timing_expansion_is_feasible() {
    let shape = Shape { groups: 2, ..Shape::default() };
    for eve in [EveModel::Ewci, EveModel::Scsi, EveModel::Wcs] {
        let mut inst = mode_instance(5, eve, shape);
        inst.timing = Timing::Fixed(vec![0.5, 0.5]);
        let exp = expansion(&inst, 5, Some(eve), ALL);
        for ul_bound in [UlBound::Filter, UlBound::Mmse] {
            let spec = ProgramSpec { ul_bound, ..ProgramSpec::main(eve, Objective::MaxminAll, 0.0) };
            check_plug_in(&build_subproblem(&spec, &exp).unwrap(), &inst, &exp);
        }
    }
}

#[test]
fn default_size_counts() {
    let shape = Shape { nt: 5, nr: 5, ..Shape::default() };
    let inst = instance(4, shape);
    let (k, l, m, nt) = (2, 2, 2, 5);
    let exp = expansion(&inst, 4, Some(EveModel::Ewci), ALL);
    let built = build_subproblem(&ProgramSpec::main(EveModel::Ewci, Objective::MaxminAll, 0.0), &exp).unwrap();
    let aux = built.layout.aux();
    assert_eq!(model_variable_count(&inst, aux), 2 * nt * nt + 2 * (nt + m + 1) * k + 2 * (m + 2) * l + 3);
    assert_eq!(model_variable_count(&inst, aux), 101);
    assert_eq!(built.family_count(), (4 * m + 6) * (k + l) + 2);
    assert_eq!(built.family_count(), 58);
    let design = built.layout.slots().iter().filter(|s| s.is_design()).count();
    assert_eq!(design, 2 * (k * nt * 2 + nt * nt * 2 + l + 1 + (k + l) * (1 + m)) + 1);
}

#[test]
fn feasibility_objective_is_a_shift() {
    let inst = instance(6, Shape::default());
    let exp = expansion(&inst, 6, None, ALL);
    let a = build_feasibility_program(&exp, Objective::MaxminAll, 0.0, 0.05, UlBound::Filter).unwrap();
    let b = build_feasibility_program(&exp, Objective::MaxminAll, 0.0, 0.0, UlBound::Filter).unwrap();
    assert_eq!(a.program.blocks, b.program.blocks);
    assert_eq!(a.program.objective.terms, b.program.objective.terms);
    assert!((a.program.objective.constant - b.program.objective.constant + 0.05).abs() < 1e-15);
}

#[test]
fn dump_lists_every_block() {
    let inst = instance(7, Shape { groups: 1, m: 1, ..Shape::default() });
    let exp = expansion(&inst, 7, Some(EveModel::Wcs), ALL);
    let built = build_subproblem(&ProgramSpec::main(EveModel::Wcs, Objective::MaxminAll, 0.0), &exp).unwrap();
    let text = built.program.dump();
    assert_eq!(text.lines().filter(|l| l.starts_with("block ")).count(), built.program.blocks.len());
    assert_eq!(text, built.program.dump());
    assert!(built.program.count(|c| matches!(c, Cone::Psd(6))) >= 1);
}
