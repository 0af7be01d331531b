//! Brute-force oracles and seeded instance generators for the test suites.
//!
//! Everything here is deliberately independent of the simplex and
//! branch-and-bound implementations it is used to check: the LP oracle
//! enumerates candidate vertices with its own Gaussian elimination, and the
//! MILP oracle walks the full integer lattice. Both are exponential and
//! only meant for desk-size instances.

use crate::lp::{LinearProgram, Relation};
use crate::milp::MilpModel;

/// Minimal xorshift64* generator so the oracles stay dependency-free and
/// the instance streams are reproducible across platforms.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> TestRng {
        TestRng(seed | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when the system is (near-)singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (piv_row, piv_val) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if piv_val < 1e-9 {
            return None;
        }
        a.swap(col, piv_row);
        b.swap(col, piv_row);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = b[row];
        for c in (row + 1)..n {
            v -= a[row][c] * x[c];
        }
        x[row] = v / a[row][row];
    }
    Some(x)
}

fn point_feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    for j in 0..lp.num_vars {
        if x[j] < lp.var_lower[j] - tol || x[j] > lp.var_upper[j] + tol {
            return false;
        }
    }
    for row in &lp.constraints {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs + tol,
            Relation::Ge => lhs >= row.rhs - tol,
            Relation::Eq => (lhs - row.rhs).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Optimal objective of a box-bounded LP by candidate-vertex enumeration:
/// every choice of `num_vars` hyperplanes (constraint rows as equalities
/// plus the finite bound planes) yields a candidate point; the best feasible
/// one is the optimum. `None` means infeasible. Panics if any variable
/// bound is infinite (the method requires a bounded box).
pub fn vertex_enumeration_opt(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars;
    assert!(
        (0..n).all(|j| lp.var_lower[j].is_finite() && lp.var_upper[j].is_finite()),
        "vertex enumeration needs finite variable bounds"
    );
    // Hyperplanes as (normal, offset).
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.constraints {
        planes.push((row.coeffs.clone(), row.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.var_lower[j]));
        planes.push((e, lp.var_upper[j]));
    }

    let mut best: Option<f64> = None;
    let mut choice: Vec<usize> = (0..n).collect();
    if planes.len() < n {
        return None;
    }
    loop {
        let a: Vec<Vec<f64>> = choice.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = choice.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if point_feasible(lp, &x, 1e-8) {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.map_or(true, |b| obj > b) {
                    best = Some(obj);
                }
            }
        }
        // Next n-combination of plane indices, lexicographic.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if choice[i] != i + planes.len() - n {
                break;
            }
        }
        choice[i] += 1;
        for k in (i + 1)..n {
            choice[k] = choice[k - 1] + 1;
        }
    }
}

/// Exhaustive lattice enumeration of an all-integer MILP: best feasible
/// objective and the point attaining it, or `None` when no lattice point is
/// feasible. Panics unless every variable is integer with finite bounds.
pub fn milp_enumeration_opt(model: &MilpModel) -> Option<(f64, Vec<f64>)> {
    let lp = &model.lp;
    let n = lp.num_vars;
    assert!(
        (0..n).all(|j| model.integer_vars.contains(&j)),
        "lattice enumeration needs an all-integer model"
    );
    let los: Vec<i64> = (0..n).map(|j| lp.var_lower[j].ceil() as i64).collect();
    let his: Vec<i64> = (0..n).map(|j| lp.var_upper[j].floor() as i64).collect();
    if (0..n).any(|j| los[j] > his[j]) {
        return None;
    }
    let mut point = los.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let x: Vec<f64> = point.iter().map(|&v| v as f64).collect();
        if point_feasible(lp, &x, 1e-9) {
            let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            if best.as_ref().map_or(true, |(b, _)| obj > *b) {
                best = Some((obj, x));
            }
        }
        // Odometer increment.
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if point[j] < his[j] {
                point[j] += 1;
                break;
            }
            point[j] = los[j];
            j += 1;
        }
    }
}

/// A seeded random box-bounded LP: up to 6 variables, up to 8 rows,
/// integer-ish data so vertices are well conditioned.
pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = TestRng::new(seed);
    let n = 1 + rng.below(6) as usize;
    let m = rng.below(9) as usize;
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        lower.push(-(rng.below(4) as f64));
        upper.push(rng.below(4) as f64);
    }
    let objective: Vec<f64> = (0..n).map(|_| rng.int_in(-3, 3) as f64).collect();
    let constraints = (0..m)
        .map(|_| crate::lp::Constraint {
            coeffs: (0..n).map(|_| rng.int_in(-3, 3) as f64).collect(),
            relation: match rng.below(3) {
                0 => Relation::Le,
                1 => Relation::Ge,
                _ => Relation::Eq,
            },
            rhs: rng.int_in(-12, 12) as f64 * 0.5,
        })
        .collect();
    LinearProgram { num_vars: n, objective, var_lower: lower, var_upper: upper, constraints }
}

/// A seeded random all-integer MILP: up to 6 integer variables with at most
/// 5 feasible values each.
pub fn random_milp(seed: u64) -> MilpModel {
    let mut rng = TestRng::new(seed ^ 0x9E37_79B9_7F4A_7C15);
    let n = 1 + rng.below(6) as usize;
    let m = rng.below(6) as usize;
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = rng.int_in(-2, 2);
        lower.push(lo as f64);
        upper.push((lo + rng.below(5) as i64) as f64);
    }
    let objective: Vec<f64> = (0..n).map(|_| rng.int_in(-4, 4) as f64).collect();
    let constraints = (0..m)
        .map(|_| crate::lp::Constraint {
            coeffs: (0..n).map(|_| rng.int_in(-3, 3) as f64).collect(),
            relation: if rng.below(2) == 0 { Relation::Le } else { Relation::Ge },
            rhs: rng.int_in(-10, 10) as f64 * 0.5,
        })
        .collect();
    MilpModel {
        lp: LinearProgram { num_vars: n, objective, var_lower: lower, var_upper: upper, constraints },
        integer_vars: (0..n).collect(),
    }
}
