//! Dense bounded-variable primal simplex.
//!
//! This is the only numerical kernel in the workspace: a two-phase primal
//! simplex over an explicit dense tableau, with native variable bounds
//! (no big-M rows for `l <= x <= u`). The branch-and-bound layer in
//! [`crate::milp`] calls it for every node relaxation.
//!
//! Design notes:
//! - Nonbasic variables may rest at an interior value (`clamp(0, lo, up)`),
//!   not only at a bound. Dispatch instances have storage-power bounds
//!   straddling zero, and starting those variables at -10 MW instead of
//!   0 MW makes phase 1 excruciating. A consequence is that the returned
//!   optimum may not be a vertex when the objective is indifferent to a
//!   variable; feasibility and the optimal value are unaffected.
//! - Entering variable: largest reduced-cost magnitude, ties broken by
//!   lowest index. After [`DEGENERATE_PIVOT_LIMIT`] consecutive degenerate
//!   pivots the rule switches to Bland's (lowest eligible index) until
//!   progress resumes, which rules out cycling.
//! - The tableau is stored column-major and the pivot update is an
//!   independent axpy per column, so the `parallel` feature can fan columns
//!   out over rayon without changing a single bit of the result.
//! - Rows and columns are equilibrated with power-of-two factors before
//!   solving (lossless in binary floating point); the tolerances below are
//!   relative to the equilibrated system.

use std::fmt;

/// Constraint sense for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One linear constraint `coeffs . x  (relation)  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program in the form `maximize c.x` subject to row constraints
/// and elementwise bounds `var_lower <= x <= var_upper` (upper may be
/// `f64::INFINITY`, lower may be `f64::NEG_INFINITY`).
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub var_lower: Vec<f64>,
    pub var_upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only when `status == Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum LpError {
    /// Pivoting stalled beyond the iteration cap; the instance is
    /// ill-conditioned for this solver.
    NumericalFailure { iterations: usize },
    /// The program violates a structural invariant (mismatched row length,
    /// crossed bounds, non-finite rhs).
    BadProgram(String),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::NumericalFailure { iterations } => {
                write!(f, "simplex stalled after {iterations} iterations")
            }
            LpError::BadProgram(msg) => write!(f, "malformed linear program: {msg}"),
        }
    }
}

impl std::error::Error for LpError {}

/// Runtime knobs; `Default` matches the crate features.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Fan the pivot update out over rayon. Ignored (always sequential)
    /// when the `parallel` feature is off.
    pub parallel: bool,
    /// Minimum tableau size (entries) before the parallel path engages.
    pub parallel_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            parallel: cfg!(feature = "parallel"),
            // Per-pivot fork-join costs tens of microseconds; beneath this
            // tableau size the bandwidth-bound axpy is cheaper single
            // threaded (measured on 2 cores; see benches/solver.rs).
            parallel_threshold: 1 << 24,
        }
    }
}

const RC_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
/// Entries smaller than this never pivot: on the equilibrated tableau a
/// smaller pivot multiplies rounding noise by > 1e7 and wrecks the
/// dictionary long before the iteration cap notices.
const PIVOT_TOL: f64 = 1e-7;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_PIVOT_LIMIT: usize = 1000;
/// Pivots between reduced-cost refreshes (bounds incremental drift).
const REPRICE_INTERVAL: usize = 1000;

/// Solve with default options.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &SolverOptions::default())
}

/// Solve with explicit options.
pub fn solve_lp_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    validate_program(lp)?;
    let mut tab = Tableau::build(lp, opts);
    tab.solve()
}

fn validate_program(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.num_vars;
    if lp.objective.len() != n || lp.var_lower.len() != n || lp.var_upper.len() != n {
        return Err(LpError::BadProgram(format!(
            "objective/bounds length != num_vars ({n})"
        )));
    }
    for j in 0..n {
        if !(lp.var_lower[j] <= lp.var_upper[j]) {
            return Err(LpError::BadProgram(format!(
                "variable {j}: lower {} > upper {}",
                lp.var_lower[j], lp.var_upper[j]
            )));
        }
        if !lp.objective[j].is_finite() {
            return Err(LpError::BadProgram(format!("objective[{j}] not finite")));
        }
    }
    for (i, row) in lp.constraints.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(LpError::BadProgram(format!(
                "constraint {i}: {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
        if !row.rhs.is_finite() {
            return Err(LpError::BadProgram(format!("constraint {i}: rhs not finite")));
        }
    }
    Ok(())
}

/// Round a positive scale to the nearest power of two so scaling is
/// lossless in binary floating point.
fn pow2_scale(v: f64) -> f64 {
    if v <= 0.0 || !v.is_finite() {
        1.0
    } else {
        let e = v.log2().round() as i32;
        (e.clamp(-200, 200) as f64).exp2()
    }
}

const SENTINEL: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationCap,
}

struct Tableau {
    m: usize,
    /// Structural variable count (before slacks/artificials).
    n_struct: usize,
    /// Total columns currently in play (structurals + slacks + artificials).
    n_total: usize,
    /// Column-major tableau, stride `m + 1`; entry `m` of each column is
    /// the reduced cost under the active phase objective.
    cols: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Current value of every nonbasic variable (basic values live in `xb`).
    value: Vec<f64>,
    /// Phase-2 objective per variable (zero for slacks/artificials).
    cost: Vec<f64>,
    /// row -> basic variable
    basis: Vec<usize>,
    /// var -> row when basic, else SENTINEL
    in_row: Vec<usize>,
    /// Basic variable values per row.
    xb: Vec<f64>,
    /// Indices of artificial columns (phase 1 only), ascending.
    artificials: Vec<usize>,
    /// Column scale factors for the structural variables (x = scale * x').
    col_scale: Vec<f64>,
    /// Devex reference weights (approximate squared edge norms per column).
    devex: Vec<f64>,
    iterations: usize,
    iteration_cap: usize,
    degenerate_streak: usize,
    parallel: bool,
}

impl Tableau {
    fn build(lp: &LinearProgram, opts: &SolverOptions) -> Tableau {
        let m = lp.constraints.len();
        let n = lp.num_vars;
        let stride = m + 1;

        // Equilibrate: column scale from max |A_ij| and |c_j|, then row
        // scale from the column-scaled row maxima. Powers of two only.
        let mut col_scale = vec![1.0f64; n];
        for j in 0..n {
            let mut mx = lp.objective[j].abs();
            for row in &lp.constraints {
                mx = mx.max(row.coeffs[j].abs());
            }
            if mx > 0.0 {
                col_scale[j] = 1.0 / pow2_scale(mx);
            }
        }
        let mut row_scale = vec![1.0f64; m];
        for (i, row) in lp.constraints.iter().enumerate() {
            let mut mx = 0.0f64;
            for j in 0..n {
                mx = mx.max((row.coeffs[j] * col_scale[j]).abs());
            }
            if mx > 0.0 {
                row_scale[i] = 1.0 / pow2_scale(mx);
            }
        }

        let n_total = n + m;
        let mut cols = vec![0.0f64; n_total * stride];
        for j in 0..n {
            let col = &mut cols[j * stride..(j + 1) * stride];
            for (i, row) in lp.constraints.iter().enumerate() {
                col[i] = row.coeffs[j] * col_scale[j] * row_scale[i];
            }
        }
        // Slack columns: one +1 per row; bounds encode the relation.
        let mut lower = Vec::with_capacity(n_total);
        let mut upper = Vec::with_capacity(n_total);
        for j in 0..n {
            // x = col_scale * x'  =>  bounds divide by the scale.
            lower.push(lp.var_lower[j] / col_scale[j]);
            upper.push(lp.var_upper[j] / col_scale[j]);
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let s = n + i;
            cols[s * stride + i] = 1.0;
            match row.relation {
                Relation::Le => {
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                }
                Relation::Ge => {
                    lower.push(f64::NEG_INFINITY);
                    upper.push(0.0);
                }
                Relation::Eq => {
                    lower.push(0.0);
                    upper.push(0.0);
                }
            }
        }

        let mut cost = vec![0.0f64; n_total];
        for j in 0..n {
            // Objective in scaled space: c'.x' = c.x since x = s*x'.
            cost[j] = lp.objective[j] * col_scale[j];
        }

        // Initial nonbasic values: rest at the point of the box closest to
        // zero. Slacks start basic; their value slot is unused until they
        // leave the basis.
        let mut value = vec![0.0f64; n_total];
        for j in 0..n_total {
            value[j] = 0.0f64.max(lower[j]).min(upper[j]);
            if !value[j].is_finite() {
                value[j] = 0.0;
            }
        }

        let rhs: Vec<f64> = lp
            .constraints
            .iter()
            .enumerate()
            .map(|(i, row)| row.rhs * row_scale[i])
            .collect();

        let size = m.saturating_mul(n_total);
        let parallel =
            cfg!(feature = "parallel") && opts.parallel && size >= opts.parallel_threshold;

        let mut tab = Tableau {
            m,
            n_struct: n,
            n_total,
            cols,
            lower,
            upper,
            value,
            cost,
            basis: vec![SENTINEL; m],
            in_row: vec![SENTINEL; n_total],
            xb: vec![0.0; m],
            artificials: Vec::new(),
            col_scale,
            devex: vec![1.0; n_total],
            iterations: 0,
            iteration_cap: 50 * (n + m).max(20),
            degenerate_streak: 0,
            parallel,
        };
        tab.install_start_basis(&rhs);
        tab
    }

    fn stride(&self) -> usize {
        self.m + 1
    }

    fn col(&self, j: usize) -> &[f64] {
        let s = self.stride();
        &self.cols[j * s..(j + 1) * s]
    }

    /// Start from the all-slack basis; rows whose slack bounds cannot absorb
    /// the residual get an artificial column carrying the excess.
    fn install_start_basis(&mut self, rhs: &[f64]) {
        let stride = self.stride();
        // Row activity of the structural columns at their initial values.
        let mut act = vec![0.0f64; self.m];
        for j in 0..self.n_struct {
            let v = self.value[j];
            if v != 0.0 {
                let col = &self.cols[j * stride..j * stride + self.m];
                for (ai, ci) in act.iter_mut().zip(col) {
                    *ai += ci * v;
                }
            }
        }
        let mut art_rows: Vec<(usize, f64)> = Vec::new(); // (row, sign)
        for i in 0..self.m {
            let s = self.n_struct + i;
            let needed = rhs[i] - act[i];
            let (lo, up) = (self.lower[s], self.upper[s]);
            if needed >= lo - FEAS_TOL && needed <= up + FEAS_TOL {
                self.basis[i] = s;
                self.in_row[s] = i;
                self.xb[i] = needed;
            } else {
                // Slack parks at the nearer bound; an artificial absorbs
                // the rest so the start point satisfies every row.
                let parked = needed.clamp(lo, up);
                self.value[s] = parked;
                let resid = needed - parked;
                art_rows.push((i, resid.signum()));
                self.xb[i] = resid.abs();
            }
        }
        if art_rows.is_empty() {
            return;
        }
        // Append artificial columns and make them basic.
        let new_total = self.n_total + art_rows.len();
        let mut cols = vec![0.0f64; new_total * stride];
        cols[..self.n_total * stride].copy_from_slice(&self.cols);
        self.cols = cols;
        for (k, (row, sign)) in art_rows.iter().enumerate() {
            let j = self.n_total + k;
            self.cols[j * stride + row] = *sign;
            self.lower.push(0.0);
            self.upper.push(f64::INFINITY);
            self.value.push(0.0);
            self.cost.push(0.0);
            self.in_row.push(*row);
            self.devex.push(1.0);
            self.basis[*row] = j;
            self.artificials.push(j);
        }
        self.n_total = new_total;
        // Normalize rows so every basic column is +1 in its row: rows whose
        // artificial carries a negative sign flip wholesale.
        for (row, sign) in &art_rows {
            if *sign < 0.0 {
                for j in 0..self.n_total {
                    self.cols[j * stride + row] = -self.cols[j * stride + row];
                }
            }
        }
    }

    /// Install reduced costs for the given phase into tableau row `m`.
    fn price(&mut self, phase: Phase) {
        let stride = self.stride();
        let obj = |tab: &Tableau, j: usize| -> f64 {
            match phase {
                Phase::One => {
                    if tab.artificials.binary_search(&j).is_ok() {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Phase::Two => tab.cost[j],
            }
        };
        let basic_cost: Vec<f64> = (0..self.m).map(|i| obj(self, self.basis[i])).collect();
        let hot_rows: Vec<usize> = (0..self.m).filter(|&i| basic_cost[i] != 0.0).collect();
        for j in 0..self.n_total {
            let rc = if self.in_row[j] != SENTINEL {
                0.0
            } else {
                let col = &self.cols[j * stride..j * stride + self.m];
                let mut rc = obj(self, j);
                for &i in &hot_rows {
                    rc -= basic_cost[i] * col[i];
                }
                rc
            };
            self.cols[j * stride + self.m] = rc;
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        self.cols[j * self.stride() + self.m]
    }

    /// Entering-variable choice: Devex-priced reduced costs (`rc^2 /
    /// weight`), ties broken by lowest index; plain lowest-index under
    /// Bland's rule. Returns (var, direction).
    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (var, dir, score)
        for j in 0..self.n_total {
            if self.in_row[j] != SENTINEL {
                continue;
            }
            let rc = self.reduced_cost(j);
            let v = self.value[j];
            let dir = if rc > RC_TOL && v < self.upper[j] - FEAS_TOL {
                1.0
            } else if rc < -RC_TOL && v > self.lower[j] + FEAS_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            let score = rc * rc / self.devex[j];
            if best.as_ref().map_or(true, |&(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, d, _)| (j, d))
    }

    /// Ratio test for entering variable `q` moving in direction `d` with
    /// pivot column `pc`. Returns `(theta, blocking row)` where the row is
    /// SENTINEL for a bound flip, or `None` for an unbounded ray.
    fn ratio_test(&self, q: usize, d: f64, pc: &[f64], bland: bool) -> Option<(f64, usize)> {
        let own = if d > 0.0 {
            self.upper[q] - self.value[q]
        } else {
            self.value[q] - self.lower[q]
        };
        // Pass 1: the tightest step over all blocking rows.
        let mut tmin = own;
        for i in 0..self.m {
            let a = d * pc[i];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let t = if a > 0.0 {
                if self.lower[b].is_finite() {
                    ((self.xb[i] - self.lower[b]) / a).max(0.0)
                } else {
                    continue;
                }
            } else if self.upper[b].is_finite() {
                ((self.upper[b] - self.xb[i]) / -a).max(0.0)
            } else {
                continue;
            };
            if t < tmin {
                tmin = t;
            }
        }
        if tmin.is_infinite() {
            return None;
        }
        // A bound flip wins ties: no pivot, no fill.
        if own <= tmin + FEAS_TOL {
            return Some((own, SENTINEL));
        }
        // Pass 2: among rows within tolerance of tmin pick the stablest
        // pivot (largest |pc|), lowest row index on ties; under Bland's
        // rule, the lowest basic variable index.
        let mut chosen = SENTINEL;
        let mut chosen_piv = -1.0f64;
        for i in 0..self.m {
            let a = d * pc[i];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let t = if a > 0.0 {
                if self.lower[b].is_finite() {
                    ((self.xb[i] - self.lower[b]) / a).max(0.0)
                } else {
                    continue;
                }
            } else if self.upper[b].is_finite() {
                ((self.upper[b] - self.xb[i]) / -a).max(0.0)
            } else {
                continue;
            };
            if t > tmin + FEAS_TOL {
                continue;
            }
            if bland {
                if chosen == SENTINEL || b < self.basis[chosen] {
                    chosen = i;
                }
            } else if pc[i].abs() > chosen_piv {
                chosen = i;
                chosen_piv = pc[i].abs();
            }
        }
        debug_assert!(chosen != SENTINEL);
        Some((tmin, chosen))
    }

    /// Apply a move of `theta` along variable `q` in direction `d`;
    /// `block == SENTINEL` means a bound flip (no basis change).
    fn apply_move(&mut self, q: usize, d: f64, theta: f64, block: usize, pc: &[f64]) {
        if block == SENTINEL {
            if theta > 0.0 {
                for i in 0..self.m {
                    self.xb[i] -= d * theta * pc[i];
                }
                self.value[q] += d * theta;
            }
            return;
        }

        let leaving = self.basis[block];
        // The leaving variable lands on whichever of its bounds blocked.
        let leave_at = if d * pc[block] > 0.0 {
            self.lower[leaving]
        } else {
            self.upper[leaving]
        };

        if theta > 0.0 {
            for i in 0..self.m {
                self.xb[i] -= d * theta * pc[i];
            }
        }
        self.xb[block] = self.value[q] + d * theta;
        self.value[leaving] = leave_at;
        self.in_row[leaving] = SENTINEL;
        self.basis[block] = q;
        self.in_row[q] = block;

        let piv = pc[block];
        let inv = 1.0 / piv;
        let m1 = self.m + 1;

        // Devex reference update: the pre-pivot row entry `alpha_j` is
        // exactly chunk[block], so the weight refresh rides the same pass.
        let w_q = self.devex[q];
        let w_over_piv2 = w_q * inv * inv;

        let update_col = |(chunk, w): (&mut [f64], &mut f64)| {
            let a = chunk[block];
            if a != 0.0 {
                let ratio = a * inv;
                let cand = ratio * ratio * w_q;
                if cand > *w {
                    *w = cand;
                }
                for (i, x) in chunk.iter_mut().enumerate() {
                    *x -= ratio * pc[i];
                }
                chunk[block] = ratio;
            }
        };

        #[cfg(feature = "parallel")]
        {
            if self.parallel {
                use rayon::prelude::*;
                self.cols
                    .par_chunks_mut(m1)
                    .zip(self.devex.par_iter_mut())
                    .for_each(update_col);
            } else {
                self.cols
                    .chunks_mut(m1)
                    .zip(self.devex.iter_mut())
                    .for_each(update_col);
            }
        }
        #[cfg(not(feature = "parallel"))]
        self.cols
            .chunks_mut(m1)
            .zip(self.devex.iter_mut())
            .for_each(update_col);

        // The entering column becomes a unit column; the leaving variable
        // re-enters the reference framework with the transformed weight.
        let stride = self.stride();
        let colq = &mut self.cols[q * stride..(q + 1) * stride];
        for x in colq.iter_mut() {
            *x = 0.0;
        }
        colq[block] = 1.0;
        self.devex[leaving] = w_over_piv2.max(1.0);
    }

    /// One pricing round: install fresh reduced costs, then pivot until no
    /// improving direction remains under the current (incrementally
    /// maintained) costs. The caller loops until a round does no work,
    /// which catches reduced-cost drift on long solves.
    fn run_phase_round(&mut self, phase: Phase, pc_buf: &mut Vec<f64>) -> PhaseEnd {
        self.price(phase);
        self.degenerate_streak = 0;
        // Fresh Devex reference framework per round.
        for w in &mut self.devex {
            *w = 1.0;
        }
        let debug = std::env::var_os("EMS_LP_DEBUG").is_some();
        let mut degenerate = 0usize;
        let mut flips = 0usize;
        let start_iters = self.iterations;
        let mut since_reprice = 0usize;
        loop {
            if since_reprice >= REPRICE_INTERVAL {
                self.price(phase);
                since_reprice = 0;
            }
            let bland = self.degenerate_streak >= DEGENERATE_PIVOT_LIMIT;
            let Some((q, d)) = self.choose_entering(bland) else {
                if debug {
                    eprintln!(
                        "phase{} round done: iters={} degenerate={} flips={}",
                        if matches!(phase, Phase::One) { 1 } else { 2 },
                        self.iterations - start_iters,
                        degenerate,
                        flips
                    );
                }
                return PhaseEnd::Optimal;
            };
            pc_buf.clear();
            pc_buf.extend_from_slice(self.col(q));
            let Some((theta, block)) = self.ratio_test(q, d, pc_buf, bland) else {
                return PhaseEnd::Unbounded;
            };
            self.iterations += 1;
            since_reprice += 1;
            if self.iterations > self.iteration_cap {
                return PhaseEnd::IterationCap;
            }
            if theta > FEAS_TOL {
                self.degenerate_streak = 0;
            } else {
                self.degenerate_streak += 1;
                degenerate += 1;
            }
            if block == SENTINEL {
                flips += 1;
            }
            self.apply_move(q, d, theta, block, pc_buf);
        }
    }

    /// Run a phase to verified optimality: keep re-pricing and resuming
    /// until a full round makes no move.
    fn run_phase(&mut self, phase: Phase, pc_buf: &mut Vec<f64>) -> PhaseEnd {
        loop {
            let before = self.iterations;
            match self.run_phase_round(phase, pc_buf) {
                PhaseEnd::Optimal => {
                    if self.iterations == before {
                        return PhaseEnd::Optimal;
                    }
                }
                other => return other,
            }
        }
    }

    fn phase1_residual(&self) -> f64 {
        self.artificials
            .iter()
            .map(|&j| {
                if self.in_row[j] != SENTINEL {
                    self.xb[self.in_row[j]].abs()
                } else {
                    self.value[j].abs()
                }
            })
            .sum()
    }

    fn solve(&mut self) -> Result<LpSolution, LpError> {
        let mut pc_buf: Vec<f64> = Vec::with_capacity(self.stride());
        if !self.artificials.is_empty() {
            match self.run_phase(Phase::One, &mut pc_buf) {
                PhaseEnd::Optimal => {}
                // The phase-1 objective is bounded above by zero; an
                // unbounded ray or a stall both mean numerical trouble.
                PhaseEnd::Unbounded | PhaseEnd::IterationCap => {
                    return Err(LpError::NumericalFailure { iterations: self.iterations });
                }
            }
            if self.phase1_residual() > 1e-7 {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    objective_value: f64::NAN,
                    iterations: self.iterations,
                });
            }
            // Freeze artificials at zero for phase 2.
            for k in 0..self.artificials.len() {
                let j = self.artificials[k];
                self.lower[j] = 0.0;
                self.upper[j] = 0.0;
                if self.in_row[j] == SENTINEL {
                    self.value[j] = 0.0;
                }
            }
        }

        match self.run_phase(Phase::Two, &mut pc_buf) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    x: Vec::new(),
                    objective_value: f64::INFINITY,
                    iterations: self.iterations,
                });
            }
            PhaseEnd::IterationCap => {
                return Err(LpError::NumericalFailure { iterations: self.iterations });
            }
        }

        // Extract the structural solution in original units.
        let mut x = vec![0.0f64; self.n_struct];
        for (j, xj) in x.iter_mut().enumerate() {
            let v = if self.in_row[j] != SENTINEL {
                self.xb[self.in_row[j]]
            } else {
                self.value[j]
            };
            *xj = v * self.col_scale[j];
        }
        let objective_value: f64 = x
            .iter()
            .zip(self.cost.iter().zip(self.col_scale.iter()))
            .map(|(xj, (cj, sj))| xj * (cj / sj))
            .sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective_value,
            iterations: self.iterations,
        })
    }
}

/// Independent feasibility check of a candidate point against the program,
/// used by tests and by callers that want to re-verify a solution.
pub fn check_feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    if x.len() != lp.num_vars {
        out.push(format!("x has length {}, expected {}", x.len(), lp.num_vars));
        return out;
    }
    for j in 0..lp.num_vars {
        if x[j] < lp.var_lower[j] - tol || x[j] > lp.var_upper[j] + tol {
            out.push(format!(
                "x[{j}] = {} outside [{}, {}]",
                x[j], lp.var_lower[j], lp.var_upper[j]
            ));
        }
    }
    for (i, row) in lp.constraints.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        let scale = 1.0f64.max(lhs.abs()).max(row.rhs.abs());
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs + tol * scale,
            Relation::Ge => lhs >= row.rhs - tol * scale,
            Relation::Eq => (lhs - row.rhs).abs() <= tol * scale,
        };
        if !ok {
            out.push(format!(
                "row {i}: lhs {} {} rhs {}",
                lhs,
                match row.relation {
                    Relation::Le => "<=",
                    Relation::Ge => ">=",
                    Relation::Eq => "==",
                },
                row.rhs
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn lp(
        objective: Vec<f64>,
        bounds: Vec<(f64, f64)>,
        rows: Vec<(Vec<f64>, Relation, f64)>,
    ) -> LinearProgram {
        LinearProgram {
            num_vars: objective.len(),
            objective,
            var_lower: bounds.iter().map(|b| b.0).collect(),
            var_upper: bounds.iter().map(|b| b.1).collect(),
            constraints: rows
                .into_iter()
                .map(|(coeffs, relation, rhs)| Constraint { coeffs, relation, rhs })
                .collect(),
        }
    }

    #[test]
    fn single_bounded_variable() {
        let p = lp(vec![1.0], vec![(0.0, 1.0)], vec![]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_vertex() {
        // maximize 3x+2y, x+y<=4, x<=2, y<=3, x,y>=0 -> 10 at (2,2)
        let p = lp(
            vec![3.0, 2.0],
            vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
            vec![
                (vec![1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, 0.0], Relation::Le, 2.0),
                (vec![0.0, 1.0], Relation::Le, 3.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 10.0).abs() < 1e-8);
        assert!((s.x[0] - 2.0).abs() < 1e-8);
        assert!((s.x[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let p = lp(
            vec![1.0],
            vec![(f64::NEG_INFINITY, f64::INFINITY)],
            vec![
                (vec![1.0], Relation::Ge, 2.0),
                (vec![1.0], Relation::Le, 1.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let p = lp(vec![1.0], vec![(0.0, f64::INFINITY)], vec![]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_row() {
        // maximize x+y s.t. x+y = 3, x<=2, y<=2
        let p = lp(
            vec![1.0, 1.0],
            vec![(0.0, 2.0), (0.0, 2.0)],
            vec![(vec![1.0, 1.0], Relation::Eq, 3.0)],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn negative_bounds_and_ge_rows() {
        // maximize -x s.t. x >= -2, x in [-5, 5] -> x = -2
        let p = lp(
            vec![-1.0],
            vec![(-5.0, 5.0)],
            vec![(vec![1.0], Relation::Ge, -2.0)],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 2.0).abs() < 1e-8, "x = {}", s.x[0]);
        assert!((s.objective_value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn feasibility_recheck_of_solution() {
        let p = lp(
            vec![5.0, 4.0, 3.0],
            vec![(0.0, f64::INFINITY); 3],
            vec![
                (vec![2.0, 3.0, 1.0], Relation::Le, 5.0),
                (vec![4.0, 1.0, 2.0], Relation::Le, 11.0),
                (vec![3.0, 4.0, 2.0], Relation::Le, 8.0),
            ],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 13.0).abs() < 1e-8);
        assert!(check_feasible(&p, &s.x, 1e-8).is_empty());
    }

    #[test]
    fn determinism_bit_identical() {
        let p = lp(
            vec![1.0, 2.0, -1.0, 0.5],
            vec![(-1.0, 3.0), (0.0, 2.0), (-2.0, 2.0), (0.0, 1.0)],
            vec![
                (vec![1.0, 1.0, 1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, -1.0, 2.0, 0.0], Relation::Ge, -1.0),
                (vec![0.5, 1.0, 0.0, 2.0], Relation::Le, 3.0),
            ],
        );
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_pivots_are_bit_identical() {
        // The fan-out writes each column independently with the same
        // arithmetic, so forcing it on cannot change a single bit.
        let p = lp(
            vec![2.0, -1.0, 0.5, 1.5, -0.25],
            vec![(-2.0, 3.0), (0.0, 4.0), (-1.0, 1.0), (0.0, 2.0), (-3.0, 0.0)],
            vec![
                (vec![1.0, 1.0, 0.0, 2.0, 1.0], Relation::Le, 5.0),
                (vec![0.5, -1.0, 1.0, 0.0, 0.0], Relation::Ge, -2.0),
                (vec![1.0, 0.0, -1.0, 1.0, 2.0], Relation::Eq, 1.0),
                (vec![0.0, 2.0, 1.0, -1.0, 0.5], Relation::Le, 3.0),
            ],
        );
        let seq = solve_lp_with(&p, &SolverOptions { parallel: false, parallel_threshold: 0 })
            .unwrap();
        let par = solve_lp_with(&p, &SolverOptions { parallel: true, parallel_threshold: 0 })
            .unwrap();
        assert_eq!(seq.status, par.status);
        assert_eq!(seq.iterations, par.iterations);
        for (a, b) in seq.x.iter().zip(&par.x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(seq.objective_value.to_bits(), par.objective_value.to_bits());
    }

    #[test]
    fn objective_scaling_keeps_tight_set() {
        let base = lp(
            vec![3.0, 2.0],
            vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
            vec![
                (vec![1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, 0.0], Relation::Le, 2.0),
                (vec![0.0, 1.0], Relation::Le, 3.0),
            ],
        );
        let tight = |p: &LinearProgram, x: &[f64]| -> Vec<usize> {
            p.constraints
                .iter()
                .enumerate()
                .filter(|(_, r)| {
                    let lhs: f64 = r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
                    (lhs - r.rhs).abs() < 1e-7
                })
                .map(|(i, _)| i)
                .collect()
        };
        let s0 = solve_lp(&base).unwrap();
        for scale in [0.125, 0.5, 4.0, 64.0] {
            let mut p = base.clone();
            for c in &mut p.objective {
                *c *= scale;
            }
            let s = solve_lp(&p).unwrap();
            assert_eq!(tight(&base, &s0.x), tight(&base, &s.x), "scale {scale}");
        }
    }
}
