//! Secant gradient descent over the objective weights.
//!
//! The tuner minimizes the normalized composite
//! `f_bar = -f1_bar + f2_bar + f3_bar - f4_bar`, where each term is the
//! mission value of the corresponding objective term divided by its value
//! under the initial reference weights (zero references fall back to 1, so
//! the normalization is always defined and `f_bar = 0` at the reference
//! point by construction). Each evaluation is a full receding-horizon
//! mission run.
//!
//! The iteration is a scalar-secant update applied element-wise:
//! `g = (f_bar(i) - f_bar(i-1)) / (w(i) - w(i-1))`, zero where a
//! coordinate did not move, then `w(i+1) = max(0, w(i) - gamma * g)`.

use std::fmt;

use crate::domain::{ScenarioTrace, SystemSpec};
use crate::formulation::{objective_terms, ObjectiveTerms, ObjectiveWeights};
use crate::scheduler::{run_rho_with, RunOptions, ScheduleError};

/// Gradient-descent configuration.
#[derive(Debug, Clone)]
pub struct TunerConfig {
    /// Step size.
    pub gamma: f64,
    /// Stop once `|f_bar(i+1) - f_bar(i)| < epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub initial_omega: ObjectiveWeights,
    /// Offset of the second seed point, per coordinate (must be nonzero).
    pub perturbation: [f64; 3],
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            gamma: 0.01,
            epsilon: 1e-4,
            max_iters: 100,
            initial_omega: ObjectiveWeights::new(0.01, 0.01, 0.01),
            perturbation: [1e-3; 3],
        }
    }
}

/// One evaluated iterate.
#[derive(Debug, Clone)]
pub struct TuneLogEntry {
    pub iteration: usize,
    pub omega: [f64; 3],
    pub f_bar: f64,
    /// Normalized per-term values `[f1_bar, f2_bar, f3_bar, f4_bar]`.
    pub terms: [f64; 4],
}

/// Tuning result: best-seen weights plus the full evaluation log.
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub omega: ObjectiveWeights,
    pub f_bar: f64,
    /// Whether the epsilon rule (rather than the iteration cap) stopped it.
    pub converged: bool,
    pub log: Vec<TuneLogEntry>,
}

#[derive(Debug)]
pub enum TunerError {
    /// The composite increased for ten consecutive iterations.
    DivergenceDetected { at_iteration: usize },
    BadConfig(String),
    Run(ScheduleError),
}

impl fmt::Display for TunerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TunerError::DivergenceDetected { at_iteration } => {
                write!(f, "objective diverged (10 consecutive increases, iteration {at_iteration})")
            }
            TunerError::BadConfig(m) => write!(f, "bad tuner config: {m}"),
            TunerError::Run(e) => write!(f, "mission run failed: {e}"),
        }
    }
}

impl std::error::Error for TunerError {}

impl From<ScheduleError> for TunerError {
    fn from(e: ScheduleError) -> Self {
        TunerError::Run(e)
    }
}

const DIVERGENCE_LIMIT: usize = 10;

fn check_config(cfg: &TunerConfig) -> Result<(), TunerError> {
    if !(cfg.gamma > 0.0) {
        return Err(TunerError::BadConfig(format!("gamma must be > 0, got {}", cfg.gamma)));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(TunerError::BadConfig(format!("epsilon must be > 0, got {}", cfg.epsilon)));
    }
    if cfg.perturbation.iter().any(|p| *p == 0.0 || !p.is_finite()) {
        return Err(TunerError::BadConfig("perturbation must be nonzero per coordinate".into()));
    }
    Ok(())
}

/// Generic driver over any objective `f(omega) -> (f_bar, per-term values)`;
/// the unit-test seam. The mission tuner plugs the normalized composite in
/// here.
pub fn tune_with<F>(cfg: &TunerConfig, mut eval: F) -> Result<TuneOutcome, TunerError>
where
    F: FnMut(&ObjectiveWeights) -> Result<(f64, [f64; 4]), TunerError>,
{
    check_config(cfg)?;
    let clamp0 = |w: [f64; 3]| [w[0].max(0.0), w[1].max(0.0), w[2].max(0.0)];

    let mut log = Vec::new();
    let mut record = |iteration: usize, omega: [f64; 3], f_bar: f64, terms: [f64; 4]| {
        log.push(TuneLogEntry { iteration, omega, f_bar, terms });
    };

    let w0 = clamp0(cfg.initial_omega.as_array());
    let (f0, t0) = eval(&ObjectiveWeights::new(w0[0], w0[1], w0[2]))?;
    record(0, w0, f0, t0);
    let mut w_prev = w0;
    let mut f_prev = f0;

    let mut w_cur = clamp0([
        w0[0] + cfg.perturbation[0],
        w0[1] + cfg.perturbation[1],
        w0[2] + cfg.perturbation[2],
    ]);
    let (mut f_cur, t1) = eval(&ObjectiveWeights::new(w_cur[0], w_cur[1], w_cur[2]))?;
    record(1, w_cur, f_cur, t1);

    let mut best_w = if f0 <= f_cur { w0 } else { w_cur };
    let mut best_f = f0.min(f_cur);
    let mut rising_streak = if f_cur > f0 { 1 } else { 0 };
    let mut converged = false;

    for iteration in 2..cfg.max_iters.max(2) {
        // Element-wise secant gradient; flat where the coordinate is pinned.
        let mut g = [0.0f64; 3];
        for k in 0..3 {
            let dw = w_cur[k] - w_prev[k];
            if dw != 0.0 {
                g[k] = (f_cur - f_prev) / dw;
            }
        }
        let w_next = clamp0([
            w_cur[0] - cfg.gamma * g[0],
            w_cur[1] - cfg.gamma * g[1],
            w_cur[2] - cfg.gamma * g[2],
        ]);
        let (f_next, terms) = eval(&ObjectiveWeights::new(w_next[0], w_next[1], w_next[2]))?;
        record(iteration, w_next, f_next, terms);

        if f_next < best_f {
            best_f = f_next;
            best_w = w_next;
        }
        if f_next > f_cur {
            rising_streak += 1;
            if rising_streak >= DIVERGENCE_LIMIT {
                return Err(TunerError::DivergenceDetected { at_iteration: iteration });
            }
        } else {
            rising_streak = 0;
        }

        let done = (f_next - f_cur).abs() < cfg.epsilon;
        w_prev = w_cur;
        f_prev = f_cur;
        w_cur = w_next;
        f_cur = f_next;
        if done {
            converged = true;
            break;
        }
    }

    Ok(TuneOutcome {
        omega: ObjectiveWeights::new(best_w[0], best_w[1], best_w[2]),
        f_bar: best_f,
        converged,
        log,
    })
}

/// Raw mission objective terms under the given weights (one full
/// receding-horizon run).
pub fn mission_terms(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    w: &ObjectiveWeights,
    horizon: usize,
    opts: &RunOptions,
) -> Result<ObjectiveTerms, ScheduleError> {
    let plan = run_rho_with(sys, trace, w, horizon, opts)?;
    Ok(objective_terms(&plan, sys))
}

/// Per-term normalization reference (term values at the initial weights,
/// zeros replaced by 1 so the division is always defined).
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    pub reference: [f64; 4],
}

impl Normalization {
    pub fn from_reference(terms: &ObjectiveTerms) -> Normalization {
        let mut reference = terms.as_array();
        for r in &mut reference {
            if *r == 0.0 {
                *r = 1.0;
            }
        }
        Normalization { reference }
    }

    pub fn normalize(&self, terms: &ObjectiveTerms) -> [f64; 4] {
        let t = terms.as_array();
        [
            t[0] / self.reference[0],
            t[1] / self.reference[1],
            t[2] / self.reference[2],
            t[3] / self.reference[3],
        ]
    }
}

/// The normalized composite `-f1_bar + f2_bar + f3_bar - f4_bar`
/// (lower is better).
pub fn composite_of(normalized: [f64; 4]) -> f64 {
    -normalized[0] + normalized[1] + normalized[2] - normalized[3]
}

/// Normalized composite objective of a full mission run under `w`.
pub fn composite_objective(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    w: &ObjectiveWeights,
    horizon: usize,
    norm: &Normalization,
    opts: &RunOptions,
) -> Result<f64, ScheduleError> {
    let terms = mission_terms(sys, trace, w, horizon, opts)?;
    Ok(composite_of(norm.normalize(&terms)))
}

/// Tune the weights on a mission: gradient descent per the config, each
/// evaluation a receding-horizon run, normalization anchored at the first
/// evaluation.
pub fn tune(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    cfg: &TunerConfig,
    horizon: usize,
) -> Result<TuneOutcome, TunerError> {
    tune_mission_with(sys, trace, cfg, horizon, &RunOptions::default())
}

pub fn tune_mission_with(
    sys: &SystemSpec,
    trace: &ScenarioTrace,
    cfg: &TunerConfig,
    horizon: usize,
    opts: &RunOptions,
) -> Result<TuneOutcome, TunerError> {
    let mut norm: Option<Normalization> = None;
    tune_with(cfg, |w| {
        let terms = mission_terms(sys, trace, w, horizon, opts)?;
        let norm = norm.get_or_insert_with(|| Normalization::from_reference(&terms));
        let normalized = norm.normalize(&terms);
        Ok((composite_of(normalized), normalized))
    })
}
