//! Branch-and-bound over integer-flagged variables, layered on [`crate::lp`].
//!
//! Best-bound-first node selection, branching on the most fractional
//! variable (ties to the lowest index), every node relaxation solved cold by
//! the dense simplex. Deterministic: the heap orders by (bound, insertion
//! sequence) and the LP underneath is deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use crate::lp::{solve_lp_with, LinearProgram, LpError, LpStatus, SolverOptions};

/// Integrality tolerance: an LP value this close to an integer counts.
pub const INT_TOL: f64 = 1e-6;

/// A mixed-integer linear program: an LP plus the set of integer variables.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub lp: LinearProgram,
    pub integer_vars: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Variable values; integer entries are snapped to exact integers.
    pub x: Vec<f64>,
    /// `c . x` recomputed on the snapped point.
    pub objective_value: f64,
    pub nodes_explored: usize,
    /// Seconds spent in the search.
    pub wall_time: f64,
}

#[derive(Debug)]
pub enum MilpError {
    /// The search hit the node cap; the instance is too hard at this scale.
    NodeLimitExceeded { nodes: usize },
    /// The relaxation is unbounded, so integrality cannot bound it either.
    Unbounded,
    /// A structural defect in the model (bad index, unbounded integer).
    BadModel(String),
    Lp(LpError),
}

impl fmt::Display for MilpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MilpError::NodeLimitExceeded { nodes } => {
                write!(f, "branch-and-bound node limit exceeded after {nodes} nodes")
            }
            MilpError::Unbounded => write!(f, "relaxation is unbounded"),
            MilpError::BadModel(m) => write!(f, "malformed MILP: {m}"),
            MilpError::Lp(e) => write!(f, "node relaxation failed: {e}"),
        }
    }
}

impl std::error::Error for MilpError {}

impl From<LpError> for MilpError {
    fn from(e: LpError) -> Self {
        MilpError::Lp(e)
    }
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    /// Relative optimality gap at which the search may stop (0 = prove).
    pub gap_tol: f64,
    /// Node cap before giving up.
    pub node_limit: usize,
    pub lp: SolverOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            gap_tol: 0.0,
            node_limit: 1_000_000,
            lp: SolverOptions::default(),
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    /// Tightened bounds for the integer variables, aligned with the
    /// model's `integer_vars` iteration order.
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on bound; older nodes first on ties for determinism.
        self.bound
            .partial_cmp(&other.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solve with default options (prove optimality, 10^6 node cap).
pub fn solve_milp(model: &MilpModel, gap_tol: f64) -> Result<MilpSolution, MilpError> {
    solve_milp_with(
        model,
        &MilpOptions { gap_tol, ..MilpOptions::default() },
    )
}

/// Solve with explicit options.
pub fn solve_milp_with(model: &MilpModel, opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let n = model.lp.num_vars;
    let int_vars: Vec<usize> = model.integer_vars.iter().copied().collect();
    for &j in &int_vars {
        if j >= n {
            return Err(MilpError::BadModel(format!("integer variable {j} out of range")));
        }
        if !model.lp.var_lower[j].is_finite() || !model.lp.var_upper[j].is_finite() {
            return Err(MilpError::BadModel(format!("integer variable {j} has unbounded range")));
        }
    }

    let mut lp = model.lp.clone();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        seq: 0,
        lower: int_vars.iter().map(|&j| model.lp.var_lower[j]).collect(),
        upper: int_vars.iter().map(|&j| model.lp.var_upper[j]).collect(),
    });
    let mut next_seq = 1usize;
    let mut nodes = 0usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;

    while let Some(node) = heap.pop() {
        // Global bound = max over open nodes; best-bound order makes the
        // popped node carry it. Stop once the incumbent is within the gap.
        if let Some((_, inc_obj)) = &incumbent {
            if node.bound <= inc_obj + opts.gap_tol * node.bound.abs().max(1e-12) + 1e-9 {
                break;
            }
        }
        if nodes >= opts.node_limit {
            return Err(MilpError::NodeLimitExceeded { nodes });
        }

        for (k, &j) in int_vars.iter().enumerate() {
            lp.var_lower[j] = node.lower[k];
            lp.var_upper[j] = node.upper[k];
        }
        nodes += 1;
        let relax = solve_lp_with(&lp, &opts.lp)?;
        match relax.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(MilpError::Unbounded),
            LpStatus::Optimal => {}
        }
        if let Some((_, inc_obj)) = &incumbent {
            if relax.objective_value <= inc_obj + opts.gap_tol * relax.objective_value.abs() + 1e-9 {
                continue; // dominated subtree
            }
        }

        // Most fractional integer variable, ties to the lowest index.
        let mut branch: Option<(usize, f64, f64)> = None; // (k, value, frac distance)
        for (k, &j) in int_vars.iter().enumerate() {
            let v = relax.x[j];
            let dist = (v - v.round()).abs();
            if dist > INT_TOL && branch.as_ref().map_or(true, |&(_, _, s)| dist > s) {
                branch = Some((k, v, dist));
            }
        }

        match branch {
            None => {
                // Integer feasible: snap and keep if it beats the incumbent.
                let mut x = relax.x.clone();
                for &j in &int_vars {
                    x[j] = x[j].round();
                }
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                if incumbent.as_ref().map_or(true, |(_, best)| obj > *best) {
                    incumbent = Some((x, obj));
                }
            }
            Some((k, v, _)) => {
                let mut down = Node {
                    bound: relax.objective_value,
                    seq: next_seq,
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                };
                down.upper[k] = v.floor();
                next_seq += 1;
                let mut up = Node {
                    bound: relax.objective_value,
                    seq: next_seq,
                    lower: node.lower,
                    upper: node.upper,
                };
                up.lower[k] = v.ceil();
                next_seq += 1;
                if down.lower[k] <= down.upper[k] {
                    heap.push(down);
                }
                if up.lower[k] <= up.upper[k] {
                    heap.push(up);
                }
            }
        }
    }

    let wall_time = start.elapsed().as_secs_f64();
    Ok(match incumbent {
        Some((x, objective_value)) => MilpSolution {
            status: MilpStatus::Optimal,
            x,
            objective_value,
            nodes_explored: nodes,
            wall_time,
        },
        None => MilpSolution {
            status: MilpStatus::Infeasible,
            x: Vec::new(),
            objective_value: f64::NAN,
            nodes_explored: nodes,
            wall_time,
        },
    })
}
