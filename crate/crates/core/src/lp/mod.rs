//! Small dense linear programs: problem type, a bounded-variable simplex,
//! a vertex-enumeration oracle and a plain-text dump format.

mod brute;
mod dump;
mod simplex;

use serde::Serialize;

use crate::error::{Error, Result};

pub use brute::{brute_force_solve, BRUTE_FORCE_MAX_VARS};
pub use dump::{parse_dump, write_dump};
pub use simplex::{solve_max, solve_max_with, SimplexOptions};

/// A linear row `coeffs · x (= or ≤) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

/// Box `[lower, upper]` on one variable. `upper` may be `+∞`; `lower` must
/// be finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarBounds {
    pub lower: f64,
    pub upper: f64,
}

impl VarBounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        VarBounds { lower, upper }
    }

    pub fn nonnegative() -> Self {
        VarBounds::new(0.0, f64::INFINITY)
    }
}

/// `maximize objective · x` subject to equalities, `≤` inequalities and
/// per-variable boxes.
///
/// `scale` records the unit of the variables: multiplying a solution by it
/// gives the quantity the program was built for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
    pub scale: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            bounds: vec![VarBounds::nonnegative(); n],
            scale: 1.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::MalformedLp("no variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::MalformedLp(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(Error::MalformedLp(
                "non-finite objective coefficient".into(),
            ));
        }
        let rows = self.equalities.iter().chain(&self.inequalities);
        for (i, row) in rows.enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::MalformedLp(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || !row.coeffs.iter().all(|a| a.is_finite()) {
                return Err(Error::MalformedLp(format!(
                    "row {i} has a non-finite entry"
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if !b.lower.is_finite() || b.upper.is_nan() || b.upper == f64::NEG_INFINITY {
                return Err(Error::MalformedLp(format!(
                    "variable {j} needs a finite lower bound and an upper bound above -inf"
                )));
            }
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::MalformedLp("scale must be positive".into()));
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint or bound violation at `x`, each measured relative
    /// to `max(1, |rhs|)`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rel = |v: f64, rhs: f64| v / rhs.abs().max(1.0);
        let eq = self
            .equalities
            .iter()
            .map(|r| rel((r.activity(x) - r.rhs).abs(), r.rhs));
        let le = self
            .inequalities
            .iter()
            .map(|r| rel((r.activity(x) - r.rhs).max(0.0), r.rhs));
        let bx = self.bounds.iter().zip(x).map(|(b, &v)| {
            rel((b.lower - v).max(0.0), b.lower).max(rel((v - b.upper).max(0.0), b.upper))
        });
        eq.chain(le).chain(bx).fold(0.0, f64::max)
    }

    /// Upper bound on the optimum certified by row multipliers `duals`
    /// (equalities first, then inequalities). Negative inequality
    /// multipliers are treated as zero, so any input yields a valid bound
    /// (up to rounding: reduced costs within 1e-12 relative of zero are
    /// ignored); `+∞` if a variable with infinite upper bound has a positive
    /// reduced cost.
    pub fn dual_bound(&self, duals: &[f64]) -> f64 {
        let n = self.num_vars();
        let neq = self.equalities.len();
        let rows: Vec<(&Constraint, f64)> = self
            .equalities
            .iter()
            .zip(duals)
            .map(|(r, &y)| (r, y))
            .chain(
                self.inequalities
                    .iter()
                    .zip(&duals[neq.min(duals.len())..])
                    .map(|(r, &y)| (r, y.max(0.0))),
            )
            .collect();
        let mut bound: f64 = rows.iter().map(|(r, y)| y * r.rhs).sum();
        for j in 0..n {
            let mut reduced = self.objective[j];
            let mut magnitude = self.objective[j].abs();
            for (r, y) in &rows {
                reduced -= y * r.coeffs[j];
                magnitude += (y * r.coeffs[j]).abs();
            }
            // Rounding residue, not a direction of growth.
            if reduced.abs() <= 1e-12 * magnitude.max(1.0) {
                continue;
            }
            let b = self.bounds[j];
            bound += if reduced > 0.0 {
                if b.upper.is_infinite() {
                    return f64::INFINITY;
                }
                reduced * b.upper
            } else {
                reduced * b.lower
            };
        }
        bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve. `objective_value` and `values` are meaningful only
/// when `status` is [`LpStatus::Optimal`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Row multipliers (equalities, then inequalities) read off the final
    /// basis. Empty for solvers that do not produce them.
    pub row_duals: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn without_optimum(status: LpStatus, n: usize, iterations: usize) -> Self {
        LpSolution {
            status,
            objective_value: f64::NAN,
            values: vec![f64::NAN; n],
            iterations,
            row_duals: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_catches_dimension_errors() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.equalities.push(Constraint::new(vec![1.0], 1.0));
        assert!(matches!(lp.validate(), Err(Error::MalformedLp(_))));

        let mut lp = LinearProgram::new(vec![1.0]);
        lp.bounds[0].lower = f64::NEG_INFINITY;
        assert!(lp.validate().is_err());

        assert!(LinearProgram::new(vec![]).validate().is_err());
    }

    #[test]
    fn violation_measure() {
        let lp = test_support::one_var(5.0);
        assert_eq!(lp.max_violation(&[5.0]), 0.0);
        assert!((lp.max_violation(&[6.0]) - 0.2).abs() < 1e-15);
        assert_eq!(lp.max_violation(&[-2.0]), 2.0);
    }

    #[test]
    fn dual_bound_of_trivial_program() {
        let lp = test_support::one_var(5.0);
        assert_eq!(lp.dual_bound(&[1.0]), 5.0);
        // Any multiplier is still an upper bound.
        assert_eq!(lp.dual_bound(&[0.0]), f64::INFINITY);
        assert_eq!(lp.dual_bound(&[3.0]), 15.0);
    }
}
