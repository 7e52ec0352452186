use super::expr::AffineExpr;
use super::layout::{AuxSet, Slot, VariableLayout};
use super::{realify, ConicProgram};
use crate::approx::builders::{
    dl_minorant_constraint, eve_dl_majorant_constraints, eve_ul_majorant_constraints, power_constraints, scsi_constraints,
    ul_filter_constraint, ul_minorant_constraint, wcs_constraints, wcs_trust, User,
};
use crate::approx::{ConstraintSketch, ExpansionPoint, Family, FamilyKind};
use crate::error::{Error, Result};
use crate::rates::Instance;
use crate::scenario::{EveModel, Objective, UlBound};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage {
    /// Maximize `η − eta_offset`.
    Main,
    /// Minimize the UL shortfall `s` with `η ≥ eta_floor`.
    UlQos { eta_floor: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgramSpec {
    /// `None` drops every Eve constraint and the `Γ` variables.
    pub eve: Option<EveModel>,
    pub objective: Objective,
    pub stage: Stage,
    /// UL secrecy target in nats, used when only DL users enter `η`.
    pub rbar_ul: f64,
    pub eta_offset: f64,
    pub ul_bound: UlBound,
}

impl ProgramSpec {
    pub fn main(eve: EveModel, objective: Objective, rbar_ul: f64) -> Self {
        ProgramSpec { eve: Some(eve), objective, stage: Stage::Main, rbar_ul, eta_offset: 0.0, ul_bound: UlBound::default() }
    }
}

/// A program together with the layout and sketch families it was lowered from.
#[derive(Clone, Debug)]
pub struct Built {
    pub program: ConicProgram,
    pub layout: VariableLayout,
    pub families: Vec<Family>,
}

impl Built {
    /// Constraint families of the convex model, objective bookkeeping excluded.
    pub fn family_count(&self) -> usize {
        self.families.iter().filter(|f| f.kind != FamilyKind::Objective).count()
    }

    pub fn eve_family_count(&self) -> usize {
        self.families.iter().filter(|f| f.is_eve()).count()
    }
}

/// Design variables with complex entries counted once, as in the usual
/// complexity tally.
pub fn model_variable_count(inst: &Instance<f64>, aux: AuxSet) -> usize {
    let m = inst.m();
    let mut n = 1;
    for g in &inst.groups {
        let users = g.k() + g.l();
        n += g.k() * inst.nt + g.l();
        if inst.an {
            n += inst.nt * inst.nt;
        }
        if inst.is_fractional() {
            n += 1;
        }
        if aux.gamma {
            n += users;
        }
        if aux.mu || aux.t {
            n += users * m;
        }
        if aux.beta {
            n += users;
        }
    }
    n + usize::from(aux.slack)
}

fn aux_for(spec: &ProgramSpec, inst: &Instance<f64>) -> AuxSet {
    let eve = if inst.m() > 0 { spec.eve } else { None };
    AuxSet {
        gamma: eve.is_some(),
        mu: eve == Some(EveModel::Ewci),
        beta: eve == Some(EveModel::Scsi),
        t: eve == Some(EveModel::Wcs),
        slack: matches!(spec.stage, Stage::UlQos { .. }),
    }
}

/// Convex subproblem at `exp` for the given mode and stage.
pub fn build_subproblem(spec: &ProgramSpec, exp: &ExpansionPoint) -> Result<Built> {
    let inst = exp.inst;
    let aux = aux_for(spec, inst);
    let eve = if aux.gamma { spec.eve } else { None };
    let mut lay = VariableLayout::new(inst, aux);
    lay.scale_aux_from(&exp.point);
    let eta = lay.eta();
    let slack = if aux.slack { lay.real(Slot::Slack) } else { AffineExpr::zero() };
    let mut fams = vec![];

    for (i, g) in inst.groups.iter().enumerate() {
        for k in 0..g.k() {
            let mut target = eta.clone();
            if eve.is_some() {
                target += lay.real(Slot::GammaDl { g: i, k });
            }
            fams.extend(dl_minorant_constraint(exp, &mut lay, i, k, target)?);
            match eve {
                Some(EveModel::Ewci) => fams.extend(eve_dl_majorant_constraints(exp, &mut lay, i, k)?),
                Some(EveModel::Scsi) => fams.extend(scsi_constraints(exp, &mut lay, i, User::Dl(k))?),
                Some(EveModel::Wcs) => fams.extend(wcs_constraints(exp, &mut lay, i, User::Dl(k))?),
                None => {}
            }
        }
        for l in 0..g.l() {
            let mut target = match spec.objective {
                Objective::MaxminAll => eta.clone(),
                Objective::MaxminDl => AffineExpr::constant(spec.rbar_ul) - slack.clone(),
            };
            if eve.is_some() {
                target += lay.real(Slot::GammaUl { g: i, l });
            }
            fams.extend(match spec.ul_bound {
                UlBound::Filter => ul_filter_constraint(exp, &mut lay, i, l, target)?,
                UlBound::Mmse => ul_minorant_constraint(exp, &mut lay, i, l, target)?,
            });
            match eve {
                Some(EveModel::Ewci) => fams.extend(eve_ul_majorant_constraints(exp, &mut lay, i, l)?),
                Some(EveModel::Scsi) => fams.extend(scsi_constraints(exp, &mut lay, i, User::Ul(l))?),
                Some(EveModel::Wcs) => fams.extend(wcs_constraints(exp, &mut lay, i, User::Ul(l))?),
                None => {}
            }
        }
        if eve == Some(EveModel::Wcs) && lay.has_v() {
            for m in 0..g.eves.len() {
                fams.push(wcs_trust(exp, &mut lay, i, m)?);
            }
        }
    }
    fams.extend(power_constraints(exp, &mut lay)?);

    let objective = match spec.stage {
        Stage::Main => eta.clone() - spec.eta_offset,
        Stage::UlQos { eta_floor } => {
            let mut f = Family::new(FamilyKind::Objective);
            f.push(ConstraintSketch::Affine(eta.clone() - eta_floor));
            f.push(ConstraintSketch::Affine(slack.clone()));
            fams.push(f);
            -slack
        }
    };
    assemble(lay, fams, objective)
}

/// Initialization program: legitimate-user and power constraints only,
/// objective `η − eta_bar_min`.
pub fn build_feasibility_program(exp: &ExpansionPoint, objective: Objective, rbar_ul: f64, eta_bar_min: f64, ul_bound: UlBound) -> Result<Built> {
    let spec = ProgramSpec { eve: None, objective, stage: Stage::Main, rbar_ul, eta_offset: eta_bar_min, ul_bound };
    build_subproblem(&spec, exp)
}

fn assemble(layout: VariableLayout, families: Vec<Family>, objective: AffineExpr) -> Result<Built> {
    let n_vars = layout.len();
    let mut blocks = vec![];
    for f in &families {
        for s in &f.sketches {
            if s.max_index().is_some_and(|i| i >= n_vars) {
                return Err(Error::Dimension(format!("{} sketch references a variable outside the layout", s.kind())));
            }
            blocks.extend(realify(s, f.kind));
        }
    }
    let program = ConicProgram { n_vars, objective: objective.compact(), blocks };
    Ok(Built { program, layout, families })
}
