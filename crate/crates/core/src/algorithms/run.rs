use super::closure::{close_aux, Target};
use crate::approx::ExpansionPoint;
use crate::conic::{build_feasibility_program, build_subproblem, ProgramSpec, Stage};
use crate::error::{Error, Result};
use crate::rates::{self, DesignPoint, Instance};
use crate::scalar::{fro_sq, norm_sq};
use crate::scenario::{EveModel, Objective, SolverSettings, SystemConfig, UlBound};
use crate::solver::{solve, SolveReport, SolveStatus};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Allowed decrease of `η` between iterations.
pub const MONOTONE_SLACK: f64 = 1e-7;
/// Largest cone violation accepted from a reduced-accuracy solve.
pub const ACCEPT_VIOLATION: f64 = 1e-6;
/// Extra UL margin aimed for while chasing the UL targets.
const QOS_HEADROOM: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub eve: EveModel,
    pub objective: Objective,
    /// nats/s/Hz
    pub rbar_ul: f64,
    pub sca_tol: f64,
    pub max_iters: usize,
    pub eta_bar_min: f64,
    pub init_an_fraction: f64,
    pub max_init_passes: usize,
    pub ul_bound: UlBound,
    pub solver: SolverSettings,
}

impl RunSettings {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        RunSettings {
            eve: cfg.mode.eve,
            objective: cfg.mode.objective,
            rbar_ul: cfg.rbar_ul_nats(),
            sca_tol: cfg.sca_tol,
            max_iters: cfg.max_iters,
            eta_bar_min: cfg.eta_bar_min,
            init_an_fraction: cfg.init_an_fraction,
            max_init_passes: cfg.max_init_passes,
            ul_bound: cfg.ul_bound,
            solver: cfg.solver.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// The solver stopped making progress; the last accepted point is kept.
    Stalled(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// Exact `η` at the accepted point, nats/s/Hz.
    pub eta: f64,
    /// Optimal value reported for the convex subproblem.
    pub solver_eta: f64,
    pub solve_time: f64,
    pub ipm_iters: u32,
    pub status: SolveStatus,
    pub violation: f64,
}

/// Exact-model check of a final point, in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    /// nats/s/Hz over the users that enter the objective.
    pub min_sr: f64,
    /// Smallest UL secrecy rate, nats/s/Hz (infinite without UL users).
    pub min_ul_sr: f64,
    /// Per-user secrecy rates, group-major.
    pub dl_sr: Vec<f64>,
    pub ul_sr: Vec<f64>,
    /// Users whose Eve rate exceeds their own rate.
    pub clamped: usize,
    /// Worst relative excess over the BS, UL and time budgets.
    pub power_excess: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub iters: Vec<IterRecord>,
    pub init_passes: usize,
    /// Final point in physical units with closed auxiliaries.
    pub point: DesignPoint<f64>,
    pub eta: f64,
    pub audit: Audit,
    pub tau: Vec<f64>,
    /// Time-averaged AN power over the BS budget.
    pub an_fraction: f64,
    pub termination: Termination,
}

impl RunTrace {
    pub fn solve_time(&self) -> f64 {
        self.iters.iter().map(|r| r.solve_time).sum()
    }

    /// `η` per iteration, starting from the initial point.
    pub fn etas(&self) -> Vec<f64> {
        self.iters.iter().map(|r| r.eta).collect()
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.iters.windows(2).all(|w| w[1].eta >= w[0].eta - slack)
    }
}

/// Matched beams splitting `(1 − ν) Pbs`, isotropic AN with `ν Pbs / 2` per
/// group, and UL amplitudes at 99% of their budget.
pub fn seed_point(inst: &Instance<f64>, nu: f64) -> DesignPoint<f64> {
    let alpha: Vec<f64> = (0..inst.groups.len()).map(|i| inst.fixed_alpha(i).unwrap_or(2.0)).collect();
    let mut pt = DesignPoint::zeros(inst, &alpha);
    for (g, gp) in inst.groups.iter().zip(pt.groups.iter_mut()) {
        let per_beam = if g.k() > 0 { (1.0 - nu) * inst.pbs / g.k() as f64 } else { 0.0 };
        for (w, h) in gp.w.iter_mut().zip(&g.h) {
            let n = norm_sq(h).sqrt();
            if n > 0.0 {
                *w = h * Complex::new(per_beam.sqrt() / n, 0.0);
            }
        }
        if inst.an {
            let v = (nu * inst.pbs / (2.0 * inst.nt as f64)).sqrt();
            gp.v = crate::scalar::CMat::identity(inst.nt, inst.nt) * Complex::new(v, 0.0);
        }
        // τρ² ≤ Pu with a 1% margin.
        let cap = 0.99 * inst.pu * gp.alpha;
        gp.rho.iter_mut().for_each(|r| *r = cap.sqrt());
    }
    pt.phase_align(inst);
    pt
}

/// Raises `τ1` to `1 − τ2` so the time budget is met with equality.
pub fn complete_tau(inst: &Instance<f64>, pt: &mut DesignPoint<f64>) {
    if inst.is_fractional() && pt.groups.len() == 2 {
        let a2 = pt.groups[1].alpha;
        if a2 > 1.0 {
            pt.groups[0].alpha = a2 / (a2 - 1.0);
        }
    }
}

/// Pulls `pt` back onto the BS and UL power budgets. Interior-point
/// solutions can overshoot them by a few ulps of the solver tolerance.
pub fn fit_budgets(inst: &Instance<f64>, pt: &mut DesignPoint<f64>) {
    let bs = rates::power_use(inst, pt).bs;
    if bs > inst.pbs {
        let s = Complex::new((inst.pbs / bs).sqrt(), 0.0);
        for g in pt.groups.iter_mut() {
            g.w.iter_mut().for_each(|w| *w *= s);
            g.v *= s;
        }
    }
    for g in pt.groups.iter_mut() {
        let cap = (inst.pu / g.tau()).sqrt();
        g.rho.iter_mut().for_each(|r| *r = r.min(cap));
    }
}

enum Step {
    Moved(DesignPoint<f64>, SolveReport),
    Failed(SolveReport),
}

/// Solver for one normalized instance.
struct Engine<'a> {
    inst: &'a Instance<f64>,
    set: &'a RunSettings,
}

impl Engine<'_> {
    fn close(&self, mut pt: DesignPoint<f64>, eve: Option<EveModel>, target: Target) -> Result<DesignPoint<f64>> {
        complete_tau(self.inst, &mut pt);
        fit_budgets(self.inst, &mut pt);
        pt.phase_align(self.inst);
        close_aux(self.inst, &pt, eve, target)
    }

    fn step(&self, pt: &DesignPoint<f64>, spec: Option<&ProgramSpec>) -> Result<Step> {
        let exp = ExpansionPoint::new(self.inst, pt.clone())?;
        let built = match spec {
            Some(s) => build_subproblem(s, &exp)?,
            None => build_feasibility_program(&exp, Objective::MaxminAll, 0.0, self.set.eta_bar_min, self.set.ul_bound)?,
        };
        let rep = solve(&built.program, &self.set.solver)?;
        match rep.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible | SolveStatus::Unbounded => {
                return Err(Error::Solver { status: format!("{:?}", rep.status), context: "subproblem".into() });
            }
            SolveStatus::NumericalFailure | SolveStatus::IterationLimit => {
                if !(rep.violation <= ACCEPT_VIOLATION) {
                    return Ok(Step::Failed(rep));
                }
            }
        }
        let mut next = built.layout.decode(self.inst, &rep.x)?;
        for gp in next.groups.iter_mut() {
            gp.rho.iter_mut().for_each(|r| *r = r.max(0.0));
        }
        Ok(Step::Moved(next, rep))
    }

    fn record(eta: f64, rep: &SolveReport) -> IterRecord {
        IterRecord {
            eta,
            solver_eta: rep.objective,
            solve_time: rep.solve_time,
            ipm_iters: rep.iterations,
            status: rep.status,
            violation: rep.violation,
        }
    }

    /// Feasibility passes until the Eve-free `η` reaches `η̄_min`.
    fn initialize(&self) -> Result<(DesignPoint<f64>, usize)> {
        let all = Target { objective: Objective::MaxminAll, rbar_ul: 0.0 };
        let mut pt = self.close(seed_point(self.inst, self.set.init_an_fraction), None, all)?;
        for pass in 0..=self.set.max_init_passes {
            if pt.aux.eta >= self.set.eta_bar_min {
                return Ok((pt, pass));
            }
            if pass == self.set.max_init_passes {
                break;
            }
            match self.step(&pt, None)? {
                Step::Moved(next, _) => pt = self.close(next, None, all)?,
                Step::Failed(rep) => return Err(Error::Init(format!("feasibility solve ended with {:?}", rep.status))),
            }
        }
        Err(Error::Init(format!("η = {:.3e} after {} passes", pt.aux.eta, self.set.max_init_passes)))
    }

    /// Pushes the UL secrecy margins above the target, keeping the DL `η`.
    fn chase_ul_targets(&self, mut pt: DesignPoint<f64>, iters: &mut Vec<IterRecord>) -> Result<DesignPoint<f64>> {
        let eve = Some(self.set.eve);
        let aim = Target { objective: Objective::MaxminDl, rbar_ul: self.set.rbar_ul + QOS_HEADROOM };
        pt = self.close(pt, eve, aim)?;
        for _ in 0..self.set.max_iters {
            if pt.aux.slack <= 0.0 {
                return Ok(pt);
            }
            let spec = ProgramSpec {
                eve,
                objective: Objective::MaxminDl,
                stage: Stage::UlQos { eta_floor: pt.aux.eta },
                rbar_ul: aim.rbar_ul,
                eta_offset: 0.0,
                ul_bound: self.set.ul_bound,
            };
            let before = pt.aux.slack;
            match self.step(&pt, Some(&spec))? {
                Step::Moved(next, rep) => {
                    let next = self.close(next, eve, aim)?;
                    iters.push(Self::record(next.aux.eta, &rep));
                    let gain = before - next.aux.slack;
                    pt = next;
                    if pt.aux.slack > 0.0 && gain < 1e-3 * self.set.sca_tol {
                        break;
                    }
                }
                Step::Failed(_) => break,
            }
        }
        if pt.aux.slack <= 0.0 {
            return Ok(pt);
        }
        Err(Error::UplinkQos(format!("UL shortfall {:.3e} nats", pt.aux.slack)))
    }

    fn path_follow(&self, mut pt: DesignPoint<f64>, objective: Objective, iters: &mut Vec<IterRecord>) -> Result<(DesignPoint<f64>, Termination)> {
        let eve = Some(self.set.eve);
        let target = Target { objective, rbar_ul: self.set.rbar_ul };
        pt = self.close(pt, eve, target)?;
        let spec = ProgramSpec { ul_bound: self.set.ul_bound, ..ProgramSpec::main(self.set.eve, objective, self.set.rbar_ul) };
        for _ in 0..self.set.max_iters {
            match self.step(&pt, Some(&spec))? {
                Step::Moved(next, rep) => {
                    let next = self.close(next, eve, target)?;
                    if next.aux.eta < pt.aux.eta - MONOTONE_SLACK {
                        let why = format!("η fell from {:.9e} to {:.9e} ({:?})", pt.aux.eta, next.aux.eta, rep.status);
                        return Ok((pt, Termination::Stalled(why)));
                    }
                    iters.push(Self::record(next.aux.eta, &rep));
                    let delta = next.aux.eta - pt.aux.eta;
                    pt = next;
                    if delta.abs() < self.set.sca_tol {
                        return Ok((pt, Termination::Converged));
                    }
                }
                Step::Failed(rep) => {
                    return Ok((pt, Termination::Stalled(format!("solver {:?}, violation {:.1e}", rep.status, rep.violation))));
                }
            }
        }
        Ok((pt, Termination::MaxIters))
    }
}

/// Slack allowed between the exact audit and the certified value, nats.
pub const AUDIT_SLACK: f64 = 1e-5;
/// Relative slack on the power and time budgets.
pub const POWER_SLACK: f64 = 1e-8;

/// Exact audit of `pt` (physical units) against the nonconvex model. Under
/// `MaxminDl` the UL users must also reach `target.rbar_ul`.
pub fn audit(inst: &Instance<f64>, pt: &DesignPoint<f64>, eve: EveModel, target: Target, eta: f64) -> Result<Audit> {
    let objective = target.objective;
    let sr = rates::secrecy_rates(inst, pt, eve)?;
    let dl_sr: Vec<f64> = sr.dl.iter().flatten().copied().collect();
    let ul_sr: Vec<f64> = sr.ul.iter().flatten().copied().collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let min_sr = match objective {
        Objective::MaxminAll => sr.min_all(),
        Objective::MaxminDl if !dl_sr.is_empty() => min(&dl_sr),
        Objective::MaxminDl => min(&ul_sr),
    };
    let pw = rates::power_use(inst, pt);
    let mut excess = (pw.bs - inst.pbs) / inst.pbs;
    for u in pw.ul.iter().flatten() {
        excess = excess.max((u - inst.pu) / inst.pu);
    }
    excess = excess.max(pt.tau().iter().sum::<f64>() - 1.0);
    let min_ul_sr = min(&ul_sr);
    let qos = objective == Objective::MaxminAll || dl_sr.is_empty() || min_ul_sr >= target.rbar_ul - AUDIT_SLACK;
    Ok(Audit {
        min_sr,
        min_ul_sr,
        dl_sr,
        ul_sr,
        clamped: sr.clamped(),
        power_excess: excess,
        passed: min_sr >= eta - AUDIT_SLACK && excess <= POWER_SLACK && qos,
    })
}

fn an_fraction(inst: &Instance<f64>, pt: &DesignPoint<f64>) -> f64 {
    pt.groups.iter().map(|g| g.tau() * fro_sq(&g.v)).sum::<f64>() / inst.pbs
}

fn finish(
    inst: &Instance<f64>,
    units: &rates::Units<f64>,
    set: &RunSettings,
    objective: Objective,
    pt: &DesignPoint<f64>,
    iters: Vec<IterRecord>,
    init_passes: usize,
    termination: Termination,
) -> Result<RunTrace> {
    let phys = pt.rescaled(units, false);
    let target = Target { objective, rbar_ul: set.rbar_ul };
    let phys = close_aux(inst, &phys, Some(set.eve), target)?;
    let eta = pt.aux.eta;
    let audit = audit(inst, &phys, set.eve, target, eta)?;
    Ok(RunTrace {
        iters,
        init_passes,
        tau: phys.tau(),
        an_fraction: an_fraction(inst, &phys),
        eta,
        audit,
        point: phys,
        termination,
    })
}

/// Starting point for `inst` (physical units): the seed point refined by
/// Eve-free feasibility passes. Returns the point and the number of passes.
pub fn find_initial_point(inst: &Instance<f64>, set: &RunSettings) -> Result<(DesignPoint<f64>, usize)> {
    let (norm, units) = inst.normalized();
    let eng = Engine { inst: &norm, set };
    let (pt, passes) = eng.initialize()?;
    Ok((pt.rescaled(&units, false), passes))
}

fn effective_objective(inst: &Instance<f64>, objective: Objective) -> Objective {
    if inst.n_dl() == 0 {
        Objective::MaxminAll
    } else {
        objective
    }
}

fn run(inst: &Instance<f64>, set: &RunSettings, init: Option<&DesignPoint<f64>>, objective: Objective) -> Result<RunTrace> {
    let (norm, units) = inst.normalized();
    let eng = Engine { inst: &norm, set };
    let (start, passes) = match init {
        Some(p) => (p.rescaled(&units, true), 0),
        None => eng.initialize()?,
    };
    let mut iters = vec![];
    let start = if objective == Objective::MaxminDl && norm.n_ul() > 0 {
        eng.chase_ul_targets(start, &mut iters)?
    } else {
        start
    };
    let (pt, term) = eng.path_follow(start, objective, &mut iters)?;
    finish(inst, &units, set, objective, &pt, iters, passes, term)
}

/// Max-min secrecy rate over every user (physical-unit instance).
pub fn run_path_following(inst: &Instance<f64>, set: &RunSettings, init: Option<&DesignPoint<f64>>) -> Result<RunTrace> {
    run(inst, set, init, effective_objective(inst, Objective::MaxminAll))
}

/// Max-min DL secrecy rate with every UL user held at `rbar_ul`.
pub fn run_maxmin_dl(inst: &Instance<f64>, set: &RunSettings, init: Option<&DesignPoint<f64>>) -> Result<RunTrace> {
    run(inst, set, init, effective_objective(inst, Objective::MaxminDl))
}

/// Dispatches on `set.objective`.
pub fn run_mode(inst: &Instance<f64>, set: &RunSettings, init: Option<&DesignPoint<f64>>) -> Result<RunTrace> {
    match set.objective {
        Objective::MaxminAll => run_path_following(inst, set, init),
        Objective::MaxminDl => run_maxmin_dl(inst, set, init),
    }
}
