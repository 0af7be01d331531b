//! Horizon MILP construction and solution decoding.
//!
//! [`build_horizon`] turns a system, a window of commanded load powers, the
//! objective weights and an initial plant state into a [`MilpModel`]:
//!
//! - maximize `sum w_hat*o - omega1*sum u_P - omega2*sum u_SoC
//!   + omega3*sum alpha*SoC_end`
//! - subject to, per step: the power balance with spinning reserve, status
//!   and power bounds, ramp rows chained across steps (anchored to the
//!   plant state at the first step), state-of-charge bounds, and epigraph
//!   rows `u_P >= ±P` and `u_SoC >= ±(SoC_l - SoC_m)` that linearize the
//!   absolute values.
//!
//! State of charge is not a decision variable: it is eliminated by
//! substitution, `SoC_e(t) = soc_init_e - (dt/E_e) * sum_{tau<=t} P_e(tau)`,
//! so SoC bounds and difference rows become linear in the power variables
//! and the variable vector stays exactly
//! `[o, P_ess, P_gen, u_P, u_SoC]` per step.
//!
//! Discrete loads are rescaled per the step-size trick: a load with `n`
//! command steps gets an integer status variable in `[0, n]` and its weight
//! and commanded power are multiplied by `1/n`; [`decode`] maps the integer
//! back to a fraction of service.
//!
//! The model is assembled in megawatts (domain data is SI watts): dispatch
//! coefficients then live in a few decades around 1, which keeps the
//! simplex well conditioned, and it makes the absolute-power objective term
//! commensurate with the state-of-charge terms, which is what the usual
//! magnitudes of the tuned weights (`~0.005..0.05`) assume. [`decode`]
//! converts powers back to watts; [`objective_terms`] uses the same
//! megawatt convention so solver objectives and recomputed values compare
//! directly.

use crate::domain::{Controls, PlantState, SystemSpec};
use crate::lp::{Constraint, LinearProgram, Relation};
use crate::milp::{MilpModel, MilpSolution, MilpStatus, INT_TOL};
use crate::scheduler::DispatchPlan;

use std::fmt;

/// Power unit of the assembled model: watts per megawatt.
pub const MODEL_POWER_UNIT: f64 = 1e6;

/// Weights of the secondary objective terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    /// Penalty on total absolute ESS power.
    pub omega1: f64,
    /// Penalty on pairwise SoC divergence.
    pub omega2: f64,
    /// Reward on final SoC levels (scaled per-unit by `alpha`).
    pub omega3: f64,
}

impl ObjectiveWeights {
    pub const ZERO: ObjectiveWeights = ObjectiveWeights { omega1: 0.0, omega2: 0.0, omega3: 0.0 };

    pub fn new(omega1: f64, omega2: f64, omega3: f64) -> Self {
        ObjectiveWeights { omega1, omega2, omega3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.omega1, self.omega2, self.omega3]
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// Bijection from (kind, step, unit) to a column index. Layout is step-major
/// with fixed intra-step order `[o_0.., P_ess_0.., P_gen_0.., u_P_0..,
/// u_SoC_(0,1), u_SoC_(0,2), ..]` (SoC pairs in lexicographic order), which
/// keeps the per-step block contiguous and stable.
#[derive(Debug, Clone)]
pub struct VariableMap {
    pub n_loads: usize,
    pub n_ess: usize,
    pub n_gens: usize,
    pub horizon: usize,
    /// Unordered ESS index pairs (l < m), lexicographic.
    pub pairs: Vec<(usize, usize)>,
}

impl VariableMap {
    pub fn new(sys: &SystemSpec, horizon: usize) -> VariableMap {
        let n_ess = sys.n_ess();
        let mut pairs = Vec::with_capacity(n_ess * (n_ess.saturating_sub(1)) / 2);
        for l in 0..n_ess {
            for m in (l + 1)..n_ess {
                pairs.push((l, m));
            }
        }
        VariableMap {
            n_loads: sys.n_loads(),
            n_ess,
            n_gens: sys.n_gens(),
            horizon,
            pairs,
        }
    }

    /// Variables per step: `n_L + n_E + n_G + n_E + C(n_E, 2)`.
    pub fn per_step(&self) -> usize {
        self.n_loads + self.n_ess + self.n_gens + self.n_ess + self.pairs.len()
    }

    pub fn num_vars(&self) -> usize {
        self.horizon * self.per_step()
    }

    pub fn o(&self, t: usize, i: usize) -> usize {
        debug_assert!(t < self.horizon && i < self.n_loads);
        t * self.per_step() + i
    }

    pub fn p_ess(&self, t: usize, e: usize) -> usize {
        debug_assert!(t < self.horizon && e < self.n_ess);
        t * self.per_step() + self.n_loads + e
    }

    pub fn p_gen(&self, t: usize, g: usize) -> usize {
        debug_assert!(t < self.horizon && g < self.n_gens);
        t * self.per_step() + self.n_loads + self.n_ess + g
    }

    pub fn u_p(&self, t: usize, e: usize) -> usize {
        debug_assert!(t < self.horizon && e < self.n_ess);
        t * self.per_step() + self.n_loads + self.n_ess + self.n_gens + e
    }

    pub fn u_soc(&self, t: usize, pair: usize) -> usize {
        debug_assert!(t < self.horizon && pair < self.pairs.len());
        t * self.per_step() + self.n_loads + 2 * self.n_ess + self.n_gens + pair
    }
}

/// A built horizon problem, ready for the MILP solver.
#[derive(Debug, Clone)]
pub struct HorizonProblem {
    pub model: MilpModel,
    pub map: VariableMap,
    pub horizon: usize,
    /// Rating-scaled weights actually used in the objective (discrete loads
    /// carry the extra `delta_o` factor).
    pub scaled_weights: Vec<f64>,
    /// Commanded powers as they appear in the balance rows, `[t][i]`
    /// (discrete loads carry the extra `delta_o` factor).
    pub scaled_powers: Vec<Vec<f64>>,
    /// Constant part of the objective (`omega3 * sum alpha_e * soc_init_e`),
    /// not representable inside the linear model.
    pub objective_offset: f64,
}

impl HorizonProblem {
    /// The true objective value of a solve, constant offset included.
    pub fn full_objective(&self, solver_objective: f64) -> f64 {
        solver_objective + self.objective_offset
    }
}

#[derive(Debug, Clone)]
pub enum FormulationError {
    /// The trace window is shorter than the horizon.
    BadWindow { window: usize, horizon: usize },
    BadWeights(String),
}

impl fmt::Display for FormulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulationError::BadWindow { window, horizon } => {
                write!(f, "window of {window} steps is shorter than the {horizon}-step horizon")
            }
            FormulationError::BadWeights(m) => write!(f, "bad objective weights: {m}"),
        }
    }
}

impl std::error::Error for FormulationError {}

/// Build the horizon MILP.
///
/// `window[t][i]` is the commanded power of load `i` at window step `t`
/// (absolute mission step `state.step + t`); it must cover at least
/// `horizon` steps. Ramp rows at `t = 0` anchor to the state's previous
/// applied powers.
pub fn build_horizon(
    sys: &SystemSpec,
    window: &[Vec<f64>],
    w: &ObjectiveWeights,
    state: &PlantState,
    horizon: usize,
) -> Result<HorizonProblem, FormulationError> {
    if window.len() < horizon {
        return Err(FormulationError::BadWindow { window: window.len(), horizon });
    }
    if !w.is_valid() {
        return Err(FormulationError::BadWeights(format!("{w:?}")));
    }
    let map = VariableMap::new(sys, horizon);
    let n = map.num_vars();
    let (n_l, n_e, n_g) = (map.n_loads, map.n_ess, map.n_gens);

    let mut objective = vec![0.0f64; n];
    let mut lower = vec![0.0f64; n];
    let mut upper = vec![0.0f64; n];
    let mut integer_vars = std::collections::BTreeSet::new();

    let scaled_weights: Vec<f64> = sys.loads.iter().map(|l| l.w_hat() * l.delta_o()).collect();
    let scaled_powers: Vec<Vec<f64>> = (0..horizon)
        .map(|t| {
            (0..n_l)
                .map(|i| window[t][i] * sys.loads[i].delta_o())
                .collect()
        })
        .collect();
    // SoC change per megawatt of discharge over one step.
    let soc_per_mw: Vec<f64> =
        sys.ess.iter().map(|e| sys.dt * MODEL_POWER_UNIT / e.energy_capacity).collect();

    for t in 0..horizon {
        for (i, l) in sys.loads.iter().enumerate() {
            let j = map.o(t, i);
            objective[j] = scaled_weights[i] / MODEL_POWER_UNIT;
            lower[j] = 0.0;
            if l.discrete {
                upper[j] = l.granularity_n as f64;
                integer_vars.insert(j);
            } else {
                upper[j] = 1.0;
            }
        }
        for (e, ess) in sys.ess.iter().enumerate() {
            let j = map.p_ess(t, e);
            lower[j] = ess.p_min / MODEL_POWER_UNIT;
            upper[j] = ess.p_max / MODEL_POWER_UNIT;
            // f4 contribution: SoC_end = soc_init - k*sum P, so every P
            // picks up -omega3 * alpha * k.
            objective[j] = -w.omega3 * ess.alpha * soc_per_mw[e];
            let ju = map.u_p(t, e);
            lower[ju] = 0.0;
            upper[ju] = ess.p_max / MODEL_POWER_UNIT;
            objective[ju] = -w.omega1;
        }
        for (g, gen) in sys.generators.iter().enumerate() {
            let j = map.p_gen(t, g);
            lower[j] = gen.p_min / MODEL_POWER_UNIT;
            upper[j] = gen.p_max / MODEL_POWER_UNIT;
        }
        for (k, &(l, m)) in map.pairs.iter().enumerate() {
            let j = map.u_soc(t, k);
            lower[j] = 0.0;
            upper[j] = sys.ess[l].soc_max.max(sys.ess[m].soc_max);
            objective[j] = -w.omega2;
        }
    }

    let mut constraints = Vec::new();
    let mut row = |coeffs: Vec<f64>, relation: Relation, rhs: f64| {
        constraints.push(Constraint { coeffs, relation, rhs });
    };

    for t in 0..horizon {
        // Power balance: sum P_hat*o - sum P_E - beta*sum P_G <= 0.
        let mut c = vec![0.0; n];
        for i in 0..n_l {
            c[map.o(t, i)] = scaled_powers[t][i] / MODEL_POWER_UNIT;
        }
        for e in 0..n_e {
            c[map.p_ess(t, e)] = -1.0;
        }
        for g in 0..n_g {
            c[map.p_gen(t, g)] = -sys.beta;
        }
        row(c, Relation::Le, 0.0);

        // Generator ramps: ramp_min*dt <= P(t) - P(t-1) <= ramp_max*dt.
        for (g, gen) in sys.generators.iter().enumerate() {
            let (mut hi, mut lo) = (vec![0.0; n], vec![0.0; n]);
            hi[map.p_gen(t, g)] = 1.0;
            lo[map.p_gen(t, g)] = 1.0;
            let anchor = if t == 0 {
                state.prev_gen_power[g]
            } else {
                hi[map.p_gen(t - 1, g)] = -1.0;
                lo[map.p_gen(t - 1, g)] = -1.0;
                0.0
            };
            row(hi, Relation::Le, (anchor + gen.ramp_max * sys.dt) / MODEL_POWER_UNIT);
            row(lo, Relation::Ge, (anchor + gen.ramp_min * sys.dt) / MODEL_POWER_UNIT);
        }

        // ESS ramps, same shape.
        for (e, ess) in sys.ess.iter().enumerate() {
            let (mut hi, mut lo) = (vec![0.0; n], vec![0.0; n]);
            hi[map.p_ess(t, e)] = 1.0;
            lo[map.p_ess(t, e)] = 1.0;
            let anchor = if t == 0 {
                state.prev_ess_power[e]
            } else {
                hi[map.p_ess(t - 1, e)] = -1.0;
                lo[map.p_ess(t - 1, e)] = -1.0;
                0.0
            };
            row(hi, Relation::Le, (anchor + ess.ramp_max * sys.dt) / MODEL_POWER_UNIT);
            row(lo, Relation::Ge, (anchor + ess.ramp_min * sys.dt) / MODEL_POWER_UNIT);
        }

        // SoC bounds via substitution:
        //   soc_min <= soc_state - k * sum_{tau<=t} P(tau) <= soc_max
        // as rows over the cumulative power.
        for (e, ess) in sys.ess.iter().enumerate() {
            let (mut hi, mut lo) = (vec![0.0; n], vec![0.0; n]);
            for tau in 0..=t {
                hi[map.p_ess(tau, e)] = soc_per_mw[e];
                lo[map.p_ess(tau, e)] = soc_per_mw[e];
            }
            // k*sum P <= soc_state - soc_min  (discharge headroom)
            row(hi, Relation::Le, state.soc[e] - ess.soc_min);
            // k*sum P >= soc_state - soc_max  (charge headroom)
            row(lo, Relation::Ge, state.soc[e] - ess.soc_max);
        }

        // |P| epigraph: u_P >= P and u_P >= -P.
        for e in 0..n_e {
            let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
            a[map.u_p(t, e)] = 1.0;
            a[map.p_ess(t, e)] = -1.0;
            row(a, Relation::Ge, 0.0);
            b[map.u_p(t, e)] = 1.0;
            b[map.p_ess(t, e)] = 1.0;
            row(b, Relation::Ge, 0.0);
        }

        // |SoC_l - SoC_m| epigraph on the substituted SoC expressions:
        //   u >= ±[(soc_l - k_l*sum P_l) - (soc_m - k_m*sum P_m)]
        for (k, &(l, m)) in map.pairs.iter().enumerate() {
            let diff0 = state.soc[l] - state.soc[m];
            let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
            a[map.u_soc(t, k)] = 1.0;
            b[map.u_soc(t, k)] = 1.0;
            for tau in 0..=t {
                a[map.p_ess(tau, l)] = soc_per_mw[l];
                a[map.p_ess(tau, m)] = -soc_per_mw[m];
                b[map.p_ess(tau, l)] = -soc_per_mw[l];
                b[map.p_ess(tau, m)] = soc_per_mw[m];
            }
            // u + k_l*sumP_l - k_m*sumP_m >= soc_l - soc_m
            row(a, Relation::Ge, diff0);
            row(b, Relation::Ge, -diff0);
        }
    }

    let objective_offset: f64 =
        w.omega3 * sys.ess.iter().map(|e| e.alpha).zip(&state.soc).map(|(a, s)| a * s).sum::<f64>();

    Ok(HorizonProblem {
        model: MilpModel {
            lp: LinearProgram {
                num_vars: n,
                objective,
                var_lower: lower,
                var_upper: upper,
                constraints,
            },
            integer_vars,
        },
        map,
        horizon,
        scaled_weights,
        scaled_powers,
        objective_offset,
    })
}

/// Decode an optimal solution into per-step controls. Discrete-load integer
/// statuses are rescaled back to fractions of service (`o * delta_o`);
/// continuous statuses pass through with floating dust clamped off.
pub fn decode(sol: &MilpSolution, hp: &HorizonProblem) -> Vec<Controls> {
    assert_eq!(sol.status, MilpStatus::Optimal, "decode requires an optimal solution");
    let map = &hp.map;
    (0..hp.horizon)
        .map(|t| Controls {
            o: (0..map.n_loads)
                .map(|i| {
                    let v = sol.x[map.o(t, i)];
                    let j = map.o(t, i);
                    if hp.model.integer_vars.contains(&j) {
                        let n = hp.model.lp.var_upper[j];
                        debug_assert!((v - v.round()).abs() <= INT_TOL * n.max(1.0));
                        (v.round() / n).clamp(0.0, 1.0)
                    } else {
                        v.clamp(0.0, 1.0)
                    }
                })
                .collect(),
            p_ess: (0..map.n_ess)
                .map(|e| sol.x[map.p_ess(t, e)] * MODEL_POWER_UNIT)
                .collect(),
            p_gen: (0..map.n_gens)
                .map(|g| sol.x[map.p_gen(t, g)] * MODEL_POWER_UNIT)
                .collect(),
        })
        .collect()
}

/// The four objective terms recomputed directly from a dispatch plan,
/// independent of any solver-reported value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// Total weighted service.
    pub f1: f64,
    /// Total absolute ESS power.
    pub f2: f64,
    /// Total pairwise SoC divergence.
    pub f3: f64,
    /// Weighted final SoC.
    pub f4: f64,
}

impl ObjectiveTerms {
    /// Scalarize with the objective weights: `f1 - w1*f2 - w2*f3 + w3*f4`.
    pub fn combine(&self, w: &ObjectiveWeights) -> f64 {
        self.f1 - w.omega1 * self.f2 - w.omega2 * self.f3 + w.omega3 * self.f4
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.f4]
    }
}

/// Recompute `(f1, f2, f3, f4)` from a plan, powers in megawatts (the
/// model's convention, so the values compare directly with solver
/// objectives). SoC sums run over the post-step trajectory, matching the
/// in-model substitution; `f4` uses the final step.
pub fn objective_terms(plan: &DispatchPlan, sys: &SystemSpec) -> ObjectiveTerms {
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    let mut f3 = 0.0;
    for (t, ctrl) in plan.controls.iter().enumerate() {
        for (i, l) in sys.loads.iter().enumerate() {
            f1 += l.w_hat() / MODEL_POWER_UNIT * ctrl.o[i];
        }
        for p in &ctrl.p_ess {
            f2 += p.abs() / MODEL_POWER_UNIT;
        }
        let soc = &plan.soc[t];
        for l in 0..sys.n_ess() {
            for m in (l + 1)..sys.n_ess() {
                f3 += (soc[l] - soc[m]).abs();
            }
        }
    }
    let f4 = match plan.soc.last() {
        Some(soc) => sys.ess.iter().zip(soc).map(|(e, s)| e.alpha * s).sum(),
        None => sys.ess.iter().zip(&plan.initial_soc).map(|(e, s)| e.alpha * s).sum(),
    };
    ObjectiveTerms { f1, f2, f3, f4 }
}
