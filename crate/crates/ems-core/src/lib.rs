//! Resilience-oriented energy management for shipboard power systems.
//!
//! The engine schedules generators, battery storage (BESS) and
//! super-capacitor storage (SCESS) while shedding the least important loads,
//! formulated as a mixed-integer linear program and driven either over the
//! whole mission at once (fixed horizon, [`scheduler::run_fho`]) or in a
//! receding-horizon loop with plant feedback ([`scheduler::run_rho`]).
//!
//! Crate layout mirrors the pipeline:
//!
//! - [`domain`]: physical system description, plant integrator, control
//!   validation.
//! - [`lp`] / [`milp`]: self-contained bounded-variable simplex and
//!   branch-and-bound on top of it.
//! - [`formulation`]: builds the horizon MILP and decodes solutions back
//!   into per-step controls.
//! - [`scheduler`]: fixed-horizon and receding-horizon drivers plus the
//!   resilience metrics.
//! - [`tuner`]: secant-gradient descent over the objective weights.

pub mod domain;
pub mod formulation;
pub mod lp;
pub mod milp;
pub mod oracle;
pub mod scheduler;
pub mod tuner;

pub use domain::{
    step_plant, validate_controls, Controls, EssKind, EssSpec, GeneratorSpec, LoadSpec,
    PlantState, ScenarioTrace, SystemSpec,
};
pub use formulation::{build_horizon, decode, objective_terms, HorizonProblem, ObjectiveWeights};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use milp::{solve_milp, MilpModel, MilpSolution, MilpStatus};
pub use scheduler::{compare_f1, operability, run_fho, run_rho, DispatchPlan, SolveReport};
pub use tuner::{tune, TunerConfig};
