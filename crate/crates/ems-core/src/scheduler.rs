//! Mission drivers: fixed-horizon (one solve, open loop) and
//! receding-horizon (re-solve every step, apply the first step with plant
//! feedback), plus the resilience metrics computed from the resulting plans.

use std::fmt;
use std::time::Instant;

use crate::domain::{
    step_plant, validate_controls, Controls, PlantState, ScenarioTrace, SystemSpec, Violation,
};
use crate::formulation::{
    build_horizon, decode, objective_terms, FormulationError, ObjectiveWeights,
};
use crate::milp::{solve_milp_with, MilpError, MilpOptions, MilpStatus};

/// Outcome of one optimization solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub wall_time: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// True window objective, constant offset included.
    pub objective: f64,
    pub status: MilpStatus,
    /// Relative disagreement between the solver objective and the value
    /// recomputed from the decoded window plan; a self-check that the
    /// decode path and the model agree.
    pub recompute_rel_err: f64,
}

/// A complete mission dispatch: per-step controls, the resulting SoC
/// trajectory, served power, and one report per solve.
#[derive(Debug, Clone)]
pub struct DispatchPlan {
    pub controls: Vec<Controls>,
    /// Post-step SoC per ESS, `soc[t][e]`.
    pub soc: Vec<Vec<f64>>,
    /// Served power per step, watts.
    pub served: Vec<f64>,
    pub reports: Vec<SolveReport>,
    pub initial_soc: Vec<f64>,
    /// Violations observed while replaying against the *disturbed* system
    /// (empty when the plan respects the plant it actually ran on).
    pub replay_violations: Vec<(usize, Violation)>,
}

impl DispatchPlan {
    pub fn total_wall_time(&self) -> f64 {
        self.reports.iter().map(|r| r.wall_time).sum()
    }

    pub fn total_nodes(&self) -> usize {
        self.reports.iter().map(|r| r.nodes).sum()
    }

    pub fn max_step_wall_time(&self) -> f64 {
        self.reports.iter().map(|r| r.wall_time).fold(0.0, f64::max)
    }
}

/// A scheduled disturbance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// Generator `g` trips (drops to zero and stays offline) before the
    /// controls for `at_step` are chosen.
    GeneratorTrip { at_step: usize, generator: usize },
}

/// Run configuration shared by both drivers.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub milp: MilpOptions,
    pub events: Vec<Event>,
    /// Steps between receding-horizon re-solves; the default of 1 re-plans
    /// every step, larger strides apply that many window steps open loop.
    pub stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { milp: MilpOptions::default(), events: Vec::new(), stride: 1 }
    }
}

#[derive(Debug)]
pub enum ScheduleError {
    Formulation(FormulationError),
    Solver { step: usize, source: MilpError, partial: Option<Box<DispatchPlan>> },
    InfeasibleStep { step: usize, violations: Vec<Violation> },
    WindowInfeasible { step: usize },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::Formulation(e) => write!(f, "{e}"),
            ScheduleError::Solver { step, source, .. } => {
                write!(f, "solver failed at step {step}: {source}")
            }
            ScheduleError::InfeasibleStep { step, violations } => {
                write!(f, "decoded controls infeasible at step {step} ({} violations)", violations.len())
            }
            ScheduleError::WindowInfeasible { step } => {
                write!(f, "window problem infeasible at step {step}")
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

impl From<FormulationError> for ScheduleError {
    fn from(e: FormulationError) -> Self {
        ScheduleError::Formulation(e)
    }
}

/// Apply every event scheduled at or before `step` to a copy of the system.
/// A tripped generator is pinned to zero power and free of ramp anchoring
/// (the outage itself is a physical step change).
fn effective_system(sys: &SystemSpec, events: &[Event], step: usize) -> SystemSpec {
    let mut eff = sys.clone();
    for ev in events {
        match *ev {
            Event::GeneratorTrip { at_step, generator } if at_step <= step => {
                if let Some(g) = eff.generators.get_mut(generator) {
                    g.p_min = 0.0;
                    g.p_max = 0.0;
                }
            }
            _ => {}
        }
    }
    eff
}

/// Zero the previous-power anchor of generators that tripped exactly at
/// `step`, so the next window does not try to ramp down from the lost output.
fn apply_trip_to_state(state: &mut PlantState, events: &[Event], step: usize) {
    for ev in events {
        let Event::GeneratorTrip { at_step, generator } = *ev;
        if at_step == step {
            if let Some(p) = state.prev_gen_power.get_mut(generator) {
                *p = 0.0;
            }
        }
    }
}

fn solve_window(
    sys: &SystemSpec,
    window: &[Vec<f64>],
    w: &ObjectiveWeights,
    state: &PlantState,
    horizon: usize,
    opts: &RunOptions,
    step: usize,
) -> Result<(Vec<Controls>, SolveReport, Vec<Vec<f64>>), ScheduleError> {
    let hp = build_horizon(sys, window, w, state, horizon)?;
    let t0 = Instant::now();
    let sol = solve_milp_with(&hp.model, &opts.milp).map_err(|source| ScheduleError::Solver {
        step,
        source,
        partial: None,
    })?;
    let wall_time = t0.elapsed().as_secs_f64();
    if sol.status != MilpStatus::Optimal {
        return Err(ScheduleError::WindowInfeasible { step });
    }
    let controls = decode(&sol, &hp);

    // Replay the decoded window to get its SoC trajectory, then cross-check
    // the solver objective against the recomputed terms.
    let mut soc_traj = Vec::with_capacity(horizon);
    let mut soc = state.soc.clone();
    for ctrl in &controls {
        for (e, s) in soc.iter_mut().enumerate() {
            let ess = &sys.ess[e];
            *s = (*s - sys.dt * ctrl.p_ess[e] / ess.energy_capacity).clamp(ess.soc_min, ess.soc_max);
        }
        soc_traj.push(soc.clone());
    }
    let window_plan = DispatchPlan {
        controls: controls.clone(),
        soc: soc_traj.clone(),
        served: Vec::new(),
        reports: Vec::new(),
        initial_soc: state.soc.clone(),
        replay_violations: Vec::new(),
    };
    let objective = hp.full_objective(sol.objective_value);
    let recomputed = objective_terms(&window_plan, sys).combine(w);
    let recompute_rel_err = (objective - recomputed).abs() / objective.abs().max(1.0);

    Ok((
        controls,
        SolveReport {
            wall_time,
            nodes: sol.nodes_explored,
            lp_iterations: 0,
            objective,
            status: sol.status,
            recompute_rel_err,
        },
        soc_traj,
    ))
}

fn served_power(sys: &SystemSpec, ctrl: &Controls, step: usize) -> f64 {
    sys.loads
        .iter()
        .enumerate()
        .map(|(i, l)| l.power_at(step) * ctrl.o[i])
        .sum()
}

/// Fixed-horizon baseline: one MILP over the whole mission, applied open
/// loop through the plant integrator. When disturbances are scheduled the
/// plan is still built against the undisturbed system (the point of the
/// baseline is that it cannot react); violations against the disturbed
/// system are recorded in `replay_violations`.
pub fn run_fho(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    w: &ObjectiveWeights,
) -> Result<DispatchPlan, ScheduleError> {
    run_fho_with(sys, trace, w, &RunOptions::default())
}

pub fn run_fho_with(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    w: &ObjectiveWeights,
    opts: &RunOptions,
) -> Result<DispatchPlan, ScheduleError> {
    let steps = sys.mission_steps;
    let plan_sys = effective_system(sys, &opts.events, 0);
    let state0 = PlantState::initial(&plan_sys);
    let window = trace.window(0, steps);
    let (controls, report, _) = solve_window(&plan_sys, &window, w, &state0, steps, opts, 0)?;

    let mut plan = DispatchPlan {
        controls: Vec::with_capacity(steps),
        soc: Vec::with_capacity(steps),
        served: Vec::with_capacity(steps),
        reports: vec![report],
        initial_soc: state0.soc.clone(),
        replay_violations: Vec::new(),
    };
    let mut state = state0;
    for (t, ctrl) in controls.into_iter().enumerate() {
        // Check against the system as disturbed at this step; the plan was
        // built blind to future events, so this is where open loop shows.
        let eff = effective_system(sys, &opts.events, t);
        for v in validate_controls(&state, &ctrl, &eff) {
            plan.replay_violations.push((t, v));
        }
        state = step_plant(&state, &ctrl, &plan_sys)
            .map_err(|e| ScheduleError::InfeasibleStep { step: t, violations: e.violations })?;
        plan.served.push(served_power(sys, &ctrl, t));
        plan.soc.push(state.soc.clone());
        plan.controls.push(ctrl);
    }
    Ok(plan)
}

/// Receding-horizon driver: at every mission step, solve a `horizon`-step
/// window anchored at the measured plant state, apply only the first step's
/// controls, and move on. Events take effect on the system the windows are
/// built against, so the controller reacts from the step they occur.
pub fn run_rho(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    w: &ObjectiveWeights,
    horizon: usize,
) -> Result<DispatchPlan, ScheduleError> {
    run_rho_with(sys, trace, w, horizon, &RunOptions::default())
}

pub fn run_rho_with(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    w: &ObjectiveWeights,
    horizon: usize,
    opts: &RunOptions,
) -> Result<DispatchPlan, ScheduleError> {
    assert!(horizon >= 1, "horizon must be at least one step");
    let stride = opts.stride.max(1).min(horizon);
    let steps = sys.mission_steps;
    let mut state = PlantState::initial(sys);
    let mut plan = DispatchPlan {
        controls: Vec::with_capacity(steps),
        soc: Vec::with_capacity(steps),
        served: Vec::with_capacity(steps),
        reports: Vec::with_capacity(steps),
        initial_soc: state.soc.clone(),
        replay_violations: Vec::new(),
    };
    let mut pending: Vec<Controls> = Vec::new();

    for t in 0..steps {
        apply_trip_to_state(&mut state, &opts.events, t);
        let eff = effective_system(sys, &opts.events, t);
        if pending.is_empty() {
            let window = trace.window(t, horizon);
            let result = solve_window(&eff, &window, w, &state, horizon, opts, t);
            let (controls, report, _) = match result {
                Ok(ok) => ok,
                Err(ScheduleError::Solver { step, source, .. }) => {
                    // Hand back what was dispatched so far with the error.
                    return Err(ScheduleError::Solver {
                        step,
                        source,
                        partial: Some(Box::new(plan)),
                    });
                }
                Err(e) => return Err(e),
            };
            plan.reports.push(report);
            pending = controls.into_iter().take(stride).rev().collect();
        }
        let ctrl = pending.pop().expect("stride >= 1");
        state = step_plant(&state, &ctrl, &eff)
            .map_err(|e| ScheduleError::InfeasibleStep { step: t, violations: e.violations })?;
        plan.served.push(served_power(sys, &ctrl, t));
        plan.soc.push(state.soc.clone());
        plan.controls.push(ctrl);
    }
    Ok(plan)
}

/// Weighted fraction of commanded load actually served over the mission,
/// in [0, 1] (the commanded status is identically 1).
pub fn operability(plan: &DispatchPlan, sys: &SystemSpec) -> f64 {
    let steps = plan.controls.len();
    let denom: f64 = sys.total_w_hat() * steps as f64;
    if denom == 0.0 {
        return 1.0;
    }
    let num: f64 = plan
        .controls
        .iter()
        .map(|c| {
            sys.loads
                .iter()
                .enumerate()
                .map(|(i, l)| l.w_hat() * c.o[i])
                .sum::<f64>()
        })
        .sum();
    (num / denom).clamp(0.0, 1.0)
}

/// Relative weighted-service loss of the receding-horizon plan against the
/// fixed-horizon baseline: `(f1_fho - f1_rho) / f1_fho`. Positive means the
/// baseline served more.
pub fn compare_f1(plan_fho: &DispatchPlan, plan_rho: &DispatchPlan, sys: &SystemSpec) -> f64 {
    let f1_fho = objective_terms(plan_fho, sys).f1;
    let f1_rho = objective_terms(plan_rho, sys).f1;
    if f1_fho == 0.0 {
        return 0.0;
    }
    (f1_fho - f1_rho) / f1_fho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{EssKind, EssSpec, GeneratorSpec, LoadSpec};
    use crate::formulation::objective_terms;

    fn load(i: usize, w: f64, rated_mw: f64, profile_mw: Vec<f64>) -> LoadSpec {
        LoadSpec {
            id: i,
            weight_w: w,
            rated_power: rated_mw * 1e6,
            discrete: false,
            granularity_n: 1,
            profile: profile_mw.into_iter().map(|p| p * 1e6).collect(),
        }
    }

    fn gen(g: usize, p_max_mw: f64, ramp_mw_s: f64) -> GeneratorSpec {
        GeneratorSpec {
            id: g,
            p_min: 0.0,
            p_max: p_max_mw * 1e6,
            ramp_min: -ramp_mw_s * 1e6,
            ramp_max: ramp_mw_s * 1e6,
            p_init: 0.0,
        }
    }

    fn bess(e: usize, soc_init: f64) -> EssSpec {
        EssSpec {
            id: e,
            kind: EssKind::Bess,
            p_min: -10.0e6,
            p_max: 10.0e6,
            ramp_min: -5.0e6,
            ramp_max: 5.0e6,
            energy_capacity: 1000.0e6,
            soc_min: 0.1,
            soc_max: 0.8,
            alpha: 1.0,
            soc_init,
            p_init: 0.0,
        }
    }

    fn surplus_system(steps: usize) -> SystemSpec {
        SystemSpec {
            loads: vec![
                load(0, 1.0, 5.0, vec![3.0; steps]),
                load(1, 2.0, 5.0, vec![2.0; steps]),
            ],
            generators: vec![gen(0, 20.0, 2.0)],
            ess: vec![bess(0, 0.5), bess(1, 0.6)],
            beta: 0.95,
            dt: 0.5,
            mission_steps: steps,
        }
    }

    #[test]
    fn surplus_serves_everything() {
        let sys = surplus_system(6);
        let trace = ScenarioTrace::from_system(&sys);
        let plan = run_fho(&sys, &trace, &ObjectiveWeights::ZERO).unwrap();
        for ctrl in &plan.controls {
            for &o in &ctrl.o {
                assert!((o - 1.0).abs() < 1e-7, "o = {o}");
            }
        }
        assert!((operability(&plan, &sys) - 1.0).abs() < 1e-7);
        assert!(plan.replay_violations.is_empty());
    }

    #[test]
    fn one_step_mission_equals_single_solve() {
        let sys = SystemSpec { mission_steps: 1, ..surplus_system(1) };
        let trace = ScenarioTrace::from_system(&sys);
        let fho = run_fho(&sys, &trace, &ObjectiveWeights::ZERO).unwrap();
        let rho = run_rho(&sys, &trace, &ObjectiveWeights::ZERO, 1).unwrap();
        assert_eq!(fho.controls, rho.controls);
        assert_eq!(fho.reports.len(), 1);
        assert_eq!(rho.reports.len(), 1);
    }

    #[test]
    fn rho_reports_one_solve_per_step() {
        let sys = surplus_system(5);
        let trace = ScenarioTrace::from_system(&sys);
        let plan = run_rho(&sys, &trace, &ObjectiveWeights::ZERO, 3).unwrap();
        assert_eq!(plan.reports.len(), 5);
        assert_eq!(plan.controls.len(), 5);
    }

    #[test]
    fn stride_merges_solves_and_stays_feasible() {
        let sys = surplus_system(6);
        let trace = ScenarioTrace::from_system(&sys);
        let opts = RunOptions { stride: 3, ..RunOptions::default() };
        let plan = run_rho_with(&sys, &trace, &ObjectiveWeights::ZERO, 3, &opts).unwrap();
        assert_eq!(plan.reports.len(), 2);
        assert_eq!(plan.controls.len(), 6);
        let mut state = PlantState::initial(&sys);
        for ctrl in &plan.controls {
            state = step_plant(&state, ctrl, &sys).unwrap();
        }
    }

    #[test]
    fn objective_recompute_agrees() {
        let sys = surplus_system(6);
        let trace = ScenarioTrace::from_system(&sys);
        let w = ObjectiveWeights::new(0.01, 0.02, 0.03);
        for plan in [
            run_fho(&sys, &trace, &w).unwrap(),
            run_rho(&sys, &trace, &w, 4).unwrap(),
        ] {
            for r in &plan.reports {
                assert!(r.recompute_rel_err < 1e-6, "rel err {}", r.recompute_rel_err);
            }
        }
    }

    #[test]
    fn identical_plans_compare_to_zero() {
        let sys = surplus_system(4);
        let trace = ScenarioTrace::from_system(&sys);
        let plan = run_fho(&sys, &trace, &ObjectiveWeights::ZERO).unwrap();
        assert_eq!(compare_f1(&plan, &plan, &sys), 0.0);
    }

    #[test]
    fn compare_f1_arithmetic() {
        // f1_fho = 100, f1_rho = 99 -> +0.01, built from two tiny plans.
        let sys = SystemSpec {
            loads: vec![load(0, 1.0, 100.0, vec![100.0])],
            generators: vec![gen(0, 200.0, 1000.0)],
            ess: vec![],
            beta: 1.0,
            dt: 0.5,
            mission_steps: 1,
        };
        let mk = |o: f64| DispatchPlan {
            controls: vec![Controls { o: vec![o], p_ess: vec![], p_gen: vec![100.0e6] }],
            soc: vec![vec![]],
            served: vec![o * 100.0e6],
            reports: vec![],
            initial_soc: vec![],
            replay_violations: Vec::new(),
        };
        let delta = compare_f1(&mk(1.0), &mk(0.99), &sys);
        assert!((delta - 0.01).abs() < 1e-12);
    }

    #[test]
    fn generator_trip_is_seen_by_rho_not_fho() {
        // Two generators; one trips mid-mission. The load needs both, so
        // the open-loop baseline's plan must lean on the tripped unit; the
        // receding controller replans cleanly (shedding instead).
        let steps = 6;
        let sys = SystemSpec {
            loads: vec![load(0, 1.0, 20.0, vec![15.0; steps])],
            generators: vec![gen(0, 10.0, 40.0), gen(1, 10.0, 40.0)],
            ess: vec![],
            beta: 1.0,
            dt: 0.5,
            mission_steps: steps,
        };
        let trace = ScenarioTrace::from_system(&sys);
        let opts = RunOptions {
            events: vec![Event::GeneratorTrip { at_step: 3, generator: 1 }],
            ..RunOptions::default()
        };
        let rho = run_rho_with(&sys, &trace, &ObjectiveWeights::ZERO, 2, &opts).unwrap();
        assert!(rho.replay_violations.is_empty());
        for (t, ctrl) in rho.controls.iter().enumerate() {
            if t >= 3 {
                assert_eq!(ctrl.p_gen[1], 0.0, "tripped generator must stay offline");
            }
        }
        let fho = run_fho_with(&sys, &trace, &ObjectiveWeights::ZERO, &opts).unwrap();
        assert!(
            !fho.replay_violations.is_empty(),
            "open-loop plan should violate the disturbed system"
        );
    }

    #[test]
    fn soc_trajectory_replays_through_step_plant() {
        let sys = surplus_system(6);
        let trace = ScenarioTrace::from_system(&sys);
        let w = ObjectiveWeights::new(0.0, 0.0, 0.1);
        let plan = run_rho(&sys, &trace, &w, 3).unwrap();
        let mut state = PlantState::initial(&sys);
        for (t, ctrl) in plan.controls.iter().enumerate() {
            state = step_plant(&state, ctrl, &sys).unwrap();
            for (e, &s) in state.soc.iter().enumerate() {
                assert!((s - plan.soc[t][e]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn terms_trivial_values() {
        // All o=1 with unit effective weight (1.0 x 1 MW) over 10 steps and
        // 3 loads -> f1 = 30.
        let sys = SystemSpec {
            loads: (0..3).map(|i| load(i, 1.0, 1.0, vec![0.0; 10])).collect(),
            generators: vec![gen(0, 10.0, 10.0)],
            ess: vec![bess(0, 0.5), bess(1, 0.5)],
            beta: 0.95,
            dt: 0.5,
            mission_steps: 10,
        };
        // w_hat = 1.0 * 1e-6 * 1e6 = 1.0 per load.
        let plan = DispatchPlan {
            controls: (0..10)
                .map(|_| Controls { o: vec![1.0; 3], p_ess: vec![0.0; 2], p_gen: vec![0.0] })
                .collect(),
            soc: (0..10).map(|_| vec![0.5, 0.5]).collect(),
            served: vec![0.0; 10],
            reports: vec![],
            initial_soc: vec![0.5, 0.5],
            replay_violations: Vec::new(),
        };
        let terms = objective_terms(&plan, &sys);
        assert!((terms.f1 - 30.0).abs() < 1e-9);
        assert_eq!(terms.f2, 0.0);
        assert_eq!(terms.f3, 0.0);
    }

    #[test]
    fn f4_weighted_final_soc() {
        // Final SoC (0.8, 0.6) with alpha (2, 1) -> 2.2.
        let mut sys = surplus_system(2);
        sys.ess[0].alpha = 2.0;
        sys.ess[1].alpha = 1.0;
        let plan = DispatchPlan {
            controls: vec![
                Controls { o: vec![0.0; 2], p_ess: vec![0.0; 2], p_gen: vec![0.0] };
                2
            ],
            soc: vec![vec![0.7, 0.65], vec![0.8, 0.6]],
            served: vec![0.0; 2],
            reports: vec![],
            initial_soc: vec![0.5, 0.6],
            replay_violations: Vec::new(),
        };
        let terms = objective_terms(&plan, &sys);
        assert!((terms.f4 - 2.2).abs() < 1e-12);
    }
}
