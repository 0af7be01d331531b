//! Physical system model and plant integrator.
//!
//! Everything here is immutable value data and pure functions; callers may
//! evaluate from any number of threads. Powers are in watts, energies in
//! joules, times in seconds; ESS power is positive when discharging
//! (supplying the bus) and negative when charging.

use std::fmt;

/// One shipboard load.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub id: usize,
    /// Dimensionless priority; effective weight is `weight_w * rated_power`.
    pub weight_w: f64,
    /// Rated power in watts.
    pub rated_power: f64,
    /// Whether the operational status moves in discrete steps.
    pub discrete: bool,
    /// Number of command steps for a discrete load (`delta_o = 1/n`).
    pub granularity_n: u32,
    /// Commanded power per mission step, watts.
    pub profile: Vec<f64>,
}

impl LoadSpec {
    /// Effective (rating-scaled) weight.
    pub fn w_hat(&self) -> f64 {
        self.weight_w * self.rated_power
    }

    /// Status step size for discrete loads, 1.0 otherwise.
    pub fn delta_o(&self) -> f64 {
        if self.discrete {
            1.0 / self.granularity_n as f64
        } else {
            1.0
        }
    }

    /// Commanded power at a step, holding the final value past the end.
    pub fn power_at(&self, step: usize) -> f64 {
        match self.profile.get(step) {
            Some(&p) => p,
            None => *self.profile.last().unwrap_or(&0.0),
        }
    }
}

/// One synchronous generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub id: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Ramp limits in watts/second, `ramp_min < 0 < ramp_max`.
    pub ramp_min: f64,
    pub ramp_max: f64,
    /// Output before the first mission step (anchors the first ramp row).
    pub p_init: f64,
}

/// Energy-storage technology class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EssKind {
    /// Battery: high energy, slow ramp.
    Bess,
    /// Super-capacitor: low energy, fast ramp.
    Scess,
}

impl fmt::Display for EssKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EssKind::Bess => write!(f, "BESS"),
            EssKind::Scess => write!(f, "SCESS"),
        }
    }
}

/// One energy-storage unit.
#[derive(Debug, Clone, PartialEq)]
pub struct EssSpec {
    pub id: usize,
    pub kind: EssKind,
    /// Power bounds in watts; `p_min <= 0 <= p_max`.
    pub p_min: f64,
    pub p_max: f64,
    /// Ramp limits in watts/second.
    pub ramp_min: f64,
    pub ramp_max: f64,
    /// Usable energy capacity in joules.
    pub energy_capacity: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Priority of this unit's final state of charge in the objective.
    pub alpha: f64,
    /// State of charge before the first mission step.
    pub soc_init: f64,
    /// Power before the first mission step.
    pub p_init: f64,
}

/// The whole plant: loads, generation, storage and mission timing.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub loads: Vec<LoadSpec>,
    pub generators: Vec<GeneratorSpec>,
    pub ess: Vec<EssSpec>,
    /// Spinning-reserve factor: only `beta * P_g` counts toward balance.
    pub beta: f64,
    /// Control sampling interval, seconds.
    pub dt: f64,
    pub mission_steps: usize,
}

/// A named invariant violation found while checking a spec.
#[derive(Debug, Clone)]
pub struct SpecError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for SpecError {}

impl SystemSpec {
    /// Check every structural invariant; the error names the offending field.
    pub fn validate(&self) -> Result<(), SpecError> {
        let err = |field: &str, message: String| Err(SpecError { field: field.into(), message });
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return err("system.beta", format!("must be in (0, 1], got {}", self.beta));
        }
        if !(self.dt > 0.0) {
            return err("system.dt", format!("must be > 0, got {}", self.dt));
        }
        if self.mission_steps < 1 {
            return err("system.mission_steps", "must be >= 1".into());
        }
        for (i, l) in self.loads.iter().enumerate() {
            let field = |name: &str| format!("loads[{i}].{name}");
            if !(l.weight_w > 0.0) {
                return err(&field("weight"), format!("must be > 0, got {}", l.weight_w));
            }
            if !(l.rated_power > 0.0) {
                return err(&field("rated"), format!("must be > 0, got {}", l.rated_power));
            }
            if l.discrete && l.granularity_n < 1 {
                return err(&field("granularity"), "must be >= 1 for a discrete load".into());
            }
            for (t, &p) in l.profile.iter().enumerate() {
                if !(0.0..=l.rated_power * (1.0 + 1e-12)).contains(&p) {
                    return err(
                        &field("profile"),
                        format!("step {t}: {p} outside [0, rated {}]", l.rated_power),
                    );
                }
            }
        }
        for (g, gen) in self.generators.iter().enumerate() {
            let field = |name: &str| format!("generators[{g}].{name}");
            if gen.p_min > gen.p_max {
                return err(&field("p_min"), format!("{} > p_max {}", gen.p_min, gen.p_max));
            }
            if !(gen.ramp_min < 0.0 && gen.ramp_max > 0.0) {
                return err(
                    &field("ramp"),
                    format!("need ramp_min < 0 < ramp_max, got [{}, {}]", gen.ramp_min, gen.ramp_max),
                );
            }
        }
        for (e, ess) in self.ess.iter().enumerate() {
            let field = |name: &str| format!("ess[{e}].{name}");
            if !(ess.p_min <= 0.0 && ess.p_max >= 0.0) {
                return err(
                    &field("p_min"),
                    format!("need p_min <= 0 <= p_max, got [{}, {}]", ess.p_min, ess.p_max),
                );
            }
            if !(ess.ramp_min < 0.0 && ess.ramp_max > 0.0) {
                return err(
                    &field("ramp"),
                    format!("need ramp_min < 0 < ramp_max, got [{}, {}]", ess.ramp_min, ess.ramp_max),
                );
            }
            if !(0.0 <= ess.soc_min && ess.soc_min < ess.soc_max && ess.soc_max <= 1.0) {
                return err(
                    &field("soc_min"),
                    format!("need 0 <= soc_min < soc_max <= 1, got [{}, {}]", ess.soc_min, ess.soc_max),
                );
            }
            if !(ess.energy_capacity > 0.0) {
                return err(&field("energy"), format!("must be > 0, got {}", ess.energy_capacity));
            }
            if !(ess.alpha >= 0.0) {
                return err(&field("alpha"), format!("must be >= 0, got {}", ess.alpha));
            }
            if !(ess.soc_min - 1e-9..=ess.soc_max + 1e-9).contains(&ess.soc_init) {
                return err(
                    &field("soc_init"),
                    format!("{} outside [{}, {}]", ess.soc_init, ess.soc_min, ess.soc_max),
                );
            }
        }
        Ok(())
    }

    pub fn n_loads(&self) -> usize {
        self.loads.len()
    }
    pub fn n_gens(&self) -> usize {
        self.generators.len()
    }
    pub fn n_ess(&self) -> usize {
        self.ess.len()
    }

    /// Sum of rating-scaled weights, the denominator of the operability metric.
    pub fn total_w_hat(&self) -> f64 {
        self.loads.iter().map(|l| l.w_hat()).sum()
    }
}

/// Per-step commanded load powers over the mission, step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    /// `powers[t][i]`: commanded power of load `i` at step `t`, watts.
    pub powers: Vec<Vec<f64>>,
}

impl ScenarioTrace {
    /// Materialize the trace from the load profiles.
    pub fn from_system(sys: &SystemSpec) -> ScenarioTrace {
        let powers = (0..sys.mission_steps)
            .map(|t| sys.loads.iter().map(|l| l.power_at(t)).collect())
            .collect();
        ScenarioTrace { powers }
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// A window of `horizon` steps starting at `start`, padded past the end
    /// by repeating the final commanded values.
    pub fn window(&self, start: usize, horizon: usize) -> Vec<Vec<f64>> {
        let last = self.powers.len().saturating_sub(1);
        (start..start + horizon)
            .map(|t| self.powers[t.min(last)].clone())
            .collect()
    }
}

/// Plant state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub step: usize,
    pub soc: Vec<f64>,
    pub prev_ess_power: Vec<f64>,
    pub prev_gen_power: Vec<f64>,
}

impl PlantState {
    /// The state before the first mission step.
    pub fn initial(sys: &SystemSpec) -> PlantState {
        PlantState {
            step: 0,
            soc: sys.ess.iter().map(|e| e.soc_init).collect(),
            prev_ess_power: sys.ess.iter().map(|e| e.p_init).collect(),
            prev_gen_power: sys.generators.iter().map(|g| g.p_init).collect(),
        }
    }
}

/// First-step controls to apply to the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct Controls {
    /// Operational status per load, in [0, 1].
    pub o: Vec<f64>,
    /// ESS power per unit, watts (positive = discharge).
    pub p_ess: Vec<f64>,
    /// Generator power per unit, watts.
    pub p_gen: Vec<f64>,
}

impl Controls {
    pub fn zero(sys: &SystemSpec) -> Controls {
        Controls {
            o: vec![0.0; sys.n_loads()],
            p_ess: vec![0.0; sys.n_ess()],
            p_gen: vec![0.0; sys.n_gens()],
        }
    }
}

/// One constraint violation found by [`validate_controls`]. Violations are
/// data, not errors: an empty list means the controls are feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Violation magnitude in the constraint's native units.
    pub amount: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    PowerBalance,
    LoadBound,
    Discreteness,
    EssBound,
    GenBound,
    EssRamp,
    GenRamp,
    SocBound,
    Shape,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {} (by {:.6e})", self.kind, self.detail, self.amount)
    }
}

/// Relative feasibility tolerance for control validation.
pub const CONTROL_TOL: f64 = 1e-6;
/// Absolute tolerance for the state-of-charge clamp in [`step_plant`].
pub const SOC_CLAMP_TOL: f64 = 1e-9;

fn rel_tol(values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    CONTROL_TOL * scale
}

/// Check controls against the plant state: power balance with spinning
/// reserve, status/power bounds, discreteness of stepped loads, ramp limits
/// against the previous applied powers, and the one-step state-of-charge
/// projection. Returns every violation found, in constraint order.
pub fn validate_controls(state: &PlantState, ctrl: &Controls, sys: &SystemSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<Violation>, kind, amount: f64, detail: String| {
        out.push(Violation { kind, amount, detail });
    };

    if ctrl.o.len() != sys.n_loads()
        || ctrl.p_ess.len() != sys.n_ess()
        || ctrl.p_gen.len() != sys.n_gens()
        || state.soc.len() != sys.n_ess()
        || state.prev_ess_power.len() != sys.n_ess()
        || state.prev_gen_power.len() != sys.n_gens()
    {
        push(
            &mut out,
            ViolationKind::Shape,
            0.0,
            "control/state vector lengths do not match the system".into(),
        );
        return out;
    }

    // Power balance: sum P_L*o <= sum P_E + beta * sum P_G.
    let served: f64 = sys
        .loads
        .iter()
        .enumerate()
        .map(|(i, l)| l.power_at(state.step) * ctrl.o[i])
        .sum();
    let supply: f64 =
        ctrl.p_ess.iter().sum::<f64>() + sys.beta * ctrl.p_gen.iter().sum::<f64>();
    let tol = rel_tol(&[served, supply]);
    if served > supply + tol {
        push(
            &mut out,
            ViolationKind::PowerBalance,
            served - supply,
            format!("served {served:.3} W exceeds available {supply:.3} W"),
        );
    }

    for (i, l) in sys.loads.iter().enumerate() {
        let o = ctrl.o[i];
        if !(-CONTROL_TOL..=1.0 + CONTROL_TOL).contains(&o) {
            push(
                &mut out,
                ViolationKind::LoadBound,
                (o - o.clamp(0.0, 1.0)).abs(),
                format!("load {i}: status {o} outside [0, 1]"),
            );
        }
        if l.discrete {
            let steps = o * l.granularity_n as f64;
            if (steps - steps.round()).abs() > CONTROL_TOL * l.granularity_n as f64 {
                push(
                    &mut out,
                    ViolationKind::Discreteness,
                    (steps - steps.round()).abs(),
                    format!("load {i}: status {o} not a multiple of 1/{}", l.granularity_n),
                );
            }
        }
    }

    for (e, ess) in sys.ess.iter().enumerate() {
        let p = ctrl.p_ess[e];
        let tol = rel_tol(&[p, ess.p_min, ess.p_max]);
        if p < ess.p_min - tol || p > ess.p_max + tol {
            push(
                &mut out,
                ViolationKind::EssBound,
                (p - p.clamp(ess.p_min, ess.p_max)).abs(),
                format!("ESS {e}: power {p:.3} outside [{}, {}]", ess.p_min, ess.p_max),
            );
        }
        let rate = (p - state.prev_ess_power[e]) / sys.dt;
        let rtol = rel_tol(&[rate, ess.ramp_min, ess.ramp_max]);
        if rate < ess.ramp_min - rtol || rate > ess.ramp_max + rtol {
            push(
                &mut out,
                ViolationKind::EssRamp,
                (rate - rate.clamp(ess.ramp_min, ess.ramp_max)).abs(),
                format!(
                    "ESS {e}: ramp {rate:.3} W/s outside [{}, {}]",
                    ess.ramp_min, ess.ramp_max
                ),
            );
        }
        // One-step SoC projection (saturation is physical, but a command
        // that runs past a bound is infeasible for the optimizer).
        let soc_next = state.soc[e] - sys.dt * p / ess.energy_capacity;
        if soc_next < ess.soc_min - CONTROL_TOL || soc_next > ess.soc_max + CONTROL_TOL {
            push(
                &mut out,
                ViolationKind::SocBound,
                (soc_next - soc_next.clamp(ess.soc_min, ess.soc_max)).abs(),
                format!(
                    "ESS {e}: SoC would reach {soc_next:.6} outside [{}, {}]",
                    ess.soc_min, ess.soc_max
                ),
            );
        }
    }

    for (g, gen) in sys.generators.iter().enumerate() {
        let p = ctrl.p_gen[g];
        let tol = rel_tol(&[p, gen.p_min, gen.p_max]);
        if p < gen.p_min - tol || p > gen.p_max + tol {
            push(
                &mut out,
                ViolationKind::GenBound,
                (p - p.clamp(gen.p_min, gen.p_max)).abs(),
                format!("generator {g}: power {p:.3} outside [{}, {}]", gen.p_min, gen.p_max),
            );
        }
        let rate = (p - state.prev_gen_power[g]) / sys.dt;
        let rtol = rel_tol(&[rate, gen.ramp_min, gen.ramp_max]);
        if rate < gen.ramp_min - rtol || rate > gen.ramp_max + rtol {
            push(
                &mut out,
                ViolationKind::GenRamp,
                (rate - rate.clamp(gen.ramp_min, gen.ramp_max)).abs(),
                format!(
                    "generator {g}: ramp {rate:.3} W/s outside [{}, {}]",
                    gen.ramp_min, gen.ramp_max
                ),
            );
        }
    }

    out
}

/// Error from [`step_plant`]: the controls violate a power or ramp
/// constraint beyond tolerance, which signals a solver or formulation bug.
#[derive(Debug, Clone)]
pub struct InfeasibleControl {
    pub step: usize,
    pub violations: Vec<Violation>,
}

impl fmt::Display for InfeasibleControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "infeasible controls at step {}:", self.step)?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for InfeasibleControl {}

/// Advance the plant one step under the given controls.
///
/// The state of charge integrates as `soc - dt * p / energy_capacity` and
/// saturates at the unit's SoC bounds (the storage physically stops
/// accepting or delivering charge there), so a trajectory can never leave
/// `[soc_min, soc_max]`. Power-balance, bound, discreteness and ramp
/// violations beyond tolerance are reported as [`InfeasibleControl`].
pub fn step_plant(
    state: &PlantState,
    ctrl: &Controls,
    sys: &SystemSpec,
) -> Result<PlantState, InfeasibleControl> {
    let violations: Vec<Violation> = validate_controls(state, ctrl, sys)
        .into_iter()
        .filter(|v| v.kind != ViolationKind::SocBound)
        .collect();
    if !violations.is_empty() {
        return Err(InfeasibleControl { step: state.step, violations });
    }
    let soc = state
        .soc
        .iter()
        .zip(sys.ess.iter().zip(&ctrl.p_ess))
        .map(|(&soc, (ess, &p))| {
            let next = soc - sys.dt * p / ess.energy_capacity;
            next.clamp(ess.soc_min, ess.soc_max)
        })
        .collect();
    Ok(PlantState {
        step: state.step + 1,
        soc,
        prev_ess_power: ctrl.p_ess.clone(),
        prev_gen_power: ctrl.p_gen.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_system() -> SystemSpec {
        SystemSpec {
            loads: vec![LoadSpec {
                id: 0,
                weight_w: 1.0,
                rated_power: 10.0e6,
                discrete: false,
                granularity_n: 1,
                profile: vec![10.0e6; 4],
            }],
            generators: vec![GeneratorSpec {
                id: 0,
                p_min: 0.0,
                p_max: 15.0e6,
                ramp_min: -1.0e6,
                ramp_max: 1.0e6,
                p_init: 0.0,
            }],
            ess: vec![EssSpec {
                id: 0,
                kind: EssKind::Bess,
                p_min: -10.0e6,
                p_max: 10.0e6,
                ramp_min: -5.0e6,
                ramp_max: 5.0e6,
                energy_capacity: 1000.0e6,
                soc_min: 0.1,
                soc_max: 0.8,
                alpha: 1.0,
                soc_init: 0.5,
                p_init: 0.0,
            }],
            beta: 0.95,
            dt: 0.5,
            mission_steps: 4,
        }
    }

    #[test]
    fn zero_power_is_identity_on_soc() {
        let sys = small_system();
        let state = PlantState::initial(&sys);
        let mut ctrl = Controls::zero(&sys);
        ctrl.o[0] = 0.0;
        let next = step_plant(&state, &ctrl, &sys).unwrap();
        assert_eq!(next.soc[0], 0.5);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn discharge_arithmetic() {
        // soc=0.5, E=1000 MJ, p=+10 MW discharge, dt=0.5 -> 0.495
        let mut sys = small_system();
        sys.ess[0].ramp_max = 100.0e6;
        sys.ess[0].ramp_min = -100.0e6;
        let state = PlantState::initial(&sys);
        let mut ctrl = Controls::zero(&sys);
        ctrl.p_ess[0] = 10.0e6;
        let next = step_plant(&state, &ctrl, &sys).unwrap();
        assert!((next.soc[0] - 0.495).abs() < 1e-15, "soc = {}", next.soc[0]);
    }

    #[test]
    fn charge_saturates_exactly_at_soc_max() {
        // soc=0.795, E=200 MJ, p=-10 MW charge, dt=0.5, soc_max=0.8:
        // the raw update overshoots to 0.82 and the plant pins 0.8 exactly.
        // Oracle: exact rational arithmetic.
        use num::rational::Ratio;
        use num::BigInt;
        let raw = Ratio::new(BigInt::from(795), BigInt::from(1000))
            + Ratio::new(BigInt::from(10_000_000i64), BigInt::from(1))
                * Ratio::new(BigInt::from(1), BigInt::from(2))
                / Ratio::new(BigInt::from(200_000_000i64), BigInt::from(1));
        let bound = Ratio::new(BigInt::from(8), BigInt::from(10));
        let exact = raw.min(bound.clone());
        assert_eq!(exact, bound, "oracle: saturation binds");

        let mut sys = small_system();
        sys.ess[0].energy_capacity = 200.0e6;
        sys.ess[0].ramp_min = -100.0e6;
        sys.ess[0].soc_init = 0.795;
        sys.generators[0].ramp_max = 100.0e6;
        let state = PlantState::initial(&sys);
        let mut ctrl = Controls::zero(&sys);
        ctrl.p_ess[0] = -10.0e6;
        // The charge power has to come from somewhere on the balance row.
        ctrl.p_gen[0] = 11.0e6;
        let next = step_plant(&state, &ctrl, &sys).unwrap();
        assert_eq!(next.soc[0], 0.8);
    }

    #[test]
    fn zero_controls_zero_profile_validate_clean() {
        let mut sys = small_system();
        sys.loads[0].profile = vec![0.0; 4];
        let state = PlantState::initial(&sys);
        let ctrl = Controls::zero(&sys);
        assert!(validate_controls(&state, &ctrl, &sys).is_empty());
    }

    #[test]
    fn spinning_reserve_shortfall_is_flagged() {
        // o=1 on a 10 MW load, gen at exactly 10 MW, beta=0.95: only 9.5 MW
        // counts, so the balance row is violated by 0.5 MW.
        let mut sys = small_system();
        sys.generators[0].ramp_max = 100.0e6; // isolate the balance row
        let state = PlantState::initial(&sys);
        let ctrl = Controls {
            o: vec![1.0],
            p_ess: vec![0.0],
            p_gen: vec![10.0e6],
        };
        let violations = validate_controls(&state, &ctrl, &sys);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert_eq!(violations[0].kind, ViolationKind::PowerBalance);
        assert!((violations[0].amount - 0.5e6).abs() < 1.0);
    }

    #[test]
    fn generator_ramp_violation() {
        // 0 -> 1 MW in dt=0.5 is 2 MW/s against a 1 MW/s limit.
        let mut sys = small_system();
        sys.loads[0].profile = vec![0.0; 4];
        let state = PlantState::initial(&sys);
        let ctrl = Controls {
            o: vec![0.0],
            p_ess: vec![0.0],
            p_gen: vec![1.0e6],
        };
        let violations = validate_controls(&state, &ctrl, &sys);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert_eq!(violations[0].kind, ViolationKind::GenRamp);
        // rate 2e6, limit 1e6 -> excess 1e6 W/s
        assert!((violations[0].amount - 1.0e6).abs() < 1.0);
    }

    #[test]
    fn step_plant_rejects_infeasible_controls() {
        let sys = small_system();
        let state = PlantState::initial(&sys);
        let ctrl = Controls {
            o: vec![1.0],
            p_ess: vec![0.0],
            p_gen: vec![0.0],
        };
        let err = step_plant(&state, &ctrl, &sys).unwrap_err();
        assert!(err.violations.iter().any(|v| v.kind == ViolationKind::PowerBalance));
    }

    #[test]
    fn step_plant_is_deterministic() {
        let sys = small_system();
        let state = PlantState::initial(&sys);
        let mut ctrl = Controls::zero(&sys);
        ctrl.p_ess[0] = 2.5e6;
        let a = step_plant(&state, &ctrl, &sys).unwrap();
        let b = step_plant(&state, &ctrl, &sys).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.soc[0].to_bits(), b.soc[0].to_bits());
    }

    #[test]
    fn trace_window_pads_by_repeating_last() {
        let sys = small_system();
        let trace = ScenarioTrace::from_system(&sys);
        let w = trace.window(2, 5);
        assert_eq!(w.len(), 5);
        assert_eq!(w[4], trace.powers[3]);
    }
}
