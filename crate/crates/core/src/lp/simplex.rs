//! Two-phase bounded-variable primal simplex on a dense tableau.
//!
//! Nonbasic variables sit at one of their bounds. Entering and leaving
//! variables follow Bland's rule (lowest index among candidates), which
//! rules out cycling on degenerate vertices.

use super::{LinearProgram, LpSolution, LpStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Reduced-cost tolerance, relative to the largest objective coefficient.
    pub optimality_tol: f64,
    /// Phase-one residual below which the program counts as feasible,
    /// relative to `max(1, max |rhs|)`.
    pub feasibility_tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            optimality_tol: 1e-9,
            feasibility_tol: 1e-9,
            pivot_tol: 1e-11,
            max_iterations: 50_000,
        }
    }
}

/// Solves `lp` with default tolerances.
pub fn solve_max(lp: &LinearProgram) -> Result<LpSolution> {
    solve_max_with(lp, &SimplexOptions::default())
}

pub fn solve_max_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    if lp.bounds.iter().any(|b| b.lower > b.upper) {
        return Ok(LpSolution::without_optimum(LpStatus::Infeasible, n, 0));
    }

    let mut tab = Tableau::new(lp);
    let mut iterations = 0;

    // Phase one: drive the artificials to zero.
    let mut cost = vec![0.0; tab.cols];
    for c in &mut cost[tab.first_artificial..] {
        *c = 1.0;
    }
    match tab.optimize(
        &cost,
        tab.first_artificial + tab.rows,
        opts,
        &mut iterations,
    )? {
        Outcome::Optimal => {}
        // The phase-one objective is bounded below by zero.
        Outcome::Unbounded => unreachable!("phase one cannot be unbounded"),
    }
    let residual: f64 = tab.x[tab.first_artificial..].iter().sum();
    let rhs_scale = lp
        .equalities
        .iter()
        .chain(&lp.inequalities)
        .map(|r| r.rhs.abs())
        .fold(1.0, f64::max);
    if residual > opts.feasibility_tol * rhs_scale {
        return Ok(LpSolution::without_optimum(
            LpStatus::Infeasible,
            n,
            iterations,
        ));
    }
    for a in tab.first_artificial..tab.cols {
        tab.upper[a] = 0.0;
        tab.x[a] = 0.0;
        tab.at_upper[a] = false;
    }

    // Phase two: minimize −c·x over structural and slack columns.
    let mut cost = vec![0.0; tab.cols];
    for (c, obj) in cost.iter_mut().zip(&lp.objective) {
        *c = -obj;
    }
    match tab.optimize(&cost, tab.first_artificial, opts, &mut iterations)? {
        Outcome::Unbounded => {
            return Ok(LpSolution::without_optimum(
                LpStatus::Unbounded,
                n,
                iterations,
            ))
        }
        Outcome::Optimal => {}
    }

    let values = tab.x[..n].to_vec();
    let row_duals = tab.row_duals(&lp.objective);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: lp.objective_at(&values),
        values,
        iterations,
        row_duals,
    })
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Columns are `[structural | slack (one per ≤ row) | artificial (one per row)]`.
struct Tableau {
    rows: usize,
    cols: usize,
    first_artificial: usize,
    /// `B⁻¹A`, row-major.
    t: Vec<f64>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    /// Column that was basic in each row at the start, and its sign.
    initial: Vec<(usize, f64)>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let n_eq = lp.equalities.len();
        let n_le = lp.inequalities.len();
        let rows = n_eq + n_le;
        let first_artificial = n + n_le;
        let cols = first_artificial + rows;

        let mut lower = vec![0.0; cols];
        let mut upper = vec![f64::INFINITY; cols];
        let mut x = vec![0.0; cols];
        for (j, b) in lp.bounds.iter().enumerate() {
            lower[j] = b.lower;
            upper[j] = b.upper;
            x[j] = b.lower;
        }

        let mut t = vec![0.0; rows * cols];
        let mut basis = vec![0; rows];
        let mut is_basic = vec![false; cols];
        let mut initial = Vec::with_capacity(rows);

        let all_rows = lp.equalities.iter().map(|r| (r, None)).chain(
            lp.inequalities
                .iter()
                .enumerate()
                .map(|(k, r)| (r, Some(n + k))),
        );
        for (i, (row, slack)) in all_rows.enumerate() {
            let resid = row.rhs - row.activity(&x[..n]);
            let art = first_artificial + i;
            let (basic, sign) = match slack {
                Some(s) if resid >= 0.0 => (s, 1.0),
                _ => (art, if resid >= 0.0 { 1.0 } else { -1.0 }),
            };
            // Row i scaled by 1/sign so the basic column becomes +e_i.
            let r = &mut t[i * cols..(i + 1) * cols];
            for (dst, a) in r.iter_mut().zip(&row.coeffs) {
                *dst = a * sign;
            }
            if let Some(s) = slack {
                r[s] = sign;
            }
            r[art] = 1.0;
            if basic != art {
                // Artificial never needed for this row.
                upper[art] = 0.0;
                r[art] = 1.0;
            }
            x[basic] = resid * sign;
            basis[i] = basic;
            is_basic[basic] = true;
            initial.push((basic, sign));
        }

        Tableau {
            rows,
            cols,
            first_artificial,
            t,
            x,
            lower,
            upper,
            basis,
            is_basic,
            at_upper: vec![false; cols],
            initial,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                d -= cb * self.at(i, j);
            }
        }
        d
    }

    /// Minimizes `cost · x`; only columns below `enter_limit` may enter.
    fn optimize(
        &mut self,
        cost: &[f64],
        enter_limit: usize,
        opts: &SimplexOptions,
        iterations: &mut usize,
    ) -> Result<Outcome> {
        let cmax = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let dtol = opts.optimality_tol * cmax;
        loop {
            // Bland: first eligible column.
            let entering = (0..enter_limit).find_map(|j| {
                if self.is_basic[j] || self.upper[j] <= self.lower[j] {
                    return None;
                }
                let d = self.reduced_cost(cost, j);
                match (self.at_upper[j], d) {
                    (false, d) if d < -dtol => Some((j, 1.0)),
                    (true, d) if d > dtol => Some((j, -1.0)),
                    _ => None,
                }
            });
            let Some((j, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };
            *iterations += 1;
            if *iterations > opts.max_iterations {
                return Err(Error::IterationLimit(opts.max_iterations));
            }

            // Ratio test; ties go to the lowest variable index.
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let alpha = dir * self.at(i, j);
                let b = self.basis[i];
                let limit = if alpha > opts.pivot_tol {
                    (self.x[b] - self.lower[b]).max(0.0) / alpha
                } else if alpha < -opts.pivot_tol && self.upper[b].is_finite() {
                    (self.upper[b] - self.x[b]).max(0.0) / -alpha
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((r, _)) => {
                        let tie = 1e-12 * step.abs().max(1e-300);
                        limit < step - tie || (limit <= step + tie && b < self.basis[r])
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, alpha));
                }
            }

            let span = self.upper[j] - self.lower[j];
            if leave.is_none() && span.is_infinite() {
                return Ok(Outcome::Unbounded);
            }

            if span <= step {
                // Entering variable reaches its opposite bound first.
                self.shift_basics(j, dir * span);
                self.at_upper[j] = !self.at_upper[j];
                self.x[j] = if self.at_upper[j] {
                    self.upper[j]
                } else {
                    self.lower[j]
                };
                continue;
            }

            let (r, alpha) = leave.expect("finite step has a leaving row");
            self.shift_basics(j, dir * step);
            self.x[j] += dir * step;
            let out = self.basis[r];
            if alpha > 0.0 {
                self.x[out] = self.lower[out];
                self.at_upper[out] = false;
            } else {
                self.x[out] = self.upper[out];
                self.at_upper[out] = true;
            }
            self.pivot(r, j);
        }
    }

    /// Moves nonbasic `j` by `delta`, updating the basic values.
    fn shift_basics(&mut self, j: usize, delta: f64) {
        for i in 0..self.rows {
            let a = self.at(i, j);
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= a * delta;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.at(r, j);
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        self.t[r * cols + j] = 1.0;
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[j] = 0.0;
        }
        let out = self.basis[r];
        self.is_basic[out] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Multipliers `λ = c_B B⁻¹` for the maximization problem, in original
    /// row order.
    fn row_duals(&self, objective: &[f64]) -> Vec<f64> {
        let n = objective.len();
        (0..self.rows)
            .map(|i| {
                let (col, sign) = self.initial[i];
                (0..self.rows)
                    .map(|k| {
                        let b = self.basis[k];
                        let c = if b < n { objective[b] } else { 0.0 };
                        c * self.at(k, col) * sign
                    })
                    .sum()
            })
            .collect()
    }
}
