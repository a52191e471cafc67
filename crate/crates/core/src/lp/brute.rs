//! Exhaustive vertex enumeration, used as an independent check on the
//! simplex for small programs.

use super::{LinearProgram, LpSolution, LpStatus};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_MAX_VARS: usize = 10;

const SINGULAR_TOL: f64 = 1e-12;
const FEASIBLE_TOL: f64 = 1e-9;

/// A hyperplane `coeffs · x = rhs` that may be active at a vertex.
struct Plane {
    coeffs: Vec<f64>,
    rhs: f64,
}

/// Solves `lp` by enumerating every basic solution. `iterations` in the
/// result counts the candidate systems examined.
pub fn brute_force_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(Error::TooLarge {
            vars: n,
            limit: BRUTE_FORCE_MAX_VARS,
        });
    }

    let eq = independent_equalities(lp);
    let mut planes: Vec<Plane> = lp
        .inequalities
        .iter()
        .map(|r| Plane {
            coeffs: r.coeffs.clone(),
            rhs: r.rhs,
        })
        .collect();
    for (j, b) in lp.bounds.iter().enumerate() {
        planes.push(Plane {
            coeffs: unit(n, j),
            rhs: b.lower,
        });
        if b.upper.is_finite() {
            planes.push(Plane {
                coeffs: unit(n, j),
                rhs: b.upper,
            });
        }
    }

    let mut examined = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    if eq.len() <= n {
        for_each_combination(planes.len(), n - eq.len(), |pick| {
            examined += 1;
            let rows: Vec<&Plane> = eq.iter().chain(pick.iter().map(|&k| &planes[k])).collect();
            let a: Vec<Vec<f64>> = rows.iter().map(|p| p.coeffs.clone()).collect();
            let b: Vec<f64> = rows.iter().map(|p| p.rhs).collect();
            let Some(x) = solve_square(a, b) else { return };
            if lp.max_violation(&x) > FEASIBLE_TOL {
                return;
            }
            let z = lp.objective_at(&x);
            if best
                .as_ref()
                .is_none_or(|(bz, _)| z > *bz + 1e-12 * bz.abs().max(1.0))
            {
                best = Some((z, x));
            }
        });
    }

    let Some((z, x)) = best else {
        return Ok(LpSolution::without_optimum(
            LpStatus::Infeasible,
            n,
            examined,
        ));
    };
    if has_improving_ray(lp, &eq, &mut examined) {
        return Ok(LpSolution::without_optimum(
            LpStatus::Unbounded,
            n,
            examined,
        ));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: z,
        values: x,
        iterations: examined,
        row_duals: Vec::new(),
    })
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[j] = 1.0;
    v
}

/// Keeps each equality row that raises the rank of those kept so far.
fn independent_equalities(lp: &LinearProgram) -> Vec<Plane> {
    let mut kept: Vec<Plane> = Vec::new();
    for row in &lp.equalities {
        let mut trial: Vec<Vec<f64>> = kept.iter().map(|p| p.coeffs.clone()).collect();
        trial.push(row.coeffs.clone());
        if rank(trial) > kept.len() {
            kept.push(Plane {
                coeffs: row.coeffs.clone(),
                rhs: row.rhs,
            });
        }
    }
    kept
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

fn row_scale(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE)
}

/// Reduces `a` in place to row echelon form; returns the pivot columns.
fn echelon(a: &mut [Vec<f64>], mut rhs: Option<&mut [f64]>) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let tol = SINGULAR_TOL * row_scale(a);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, pv) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .fold((r, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pv <= tol {
            continue;
        }
        a.swap(r, p);
        if let Some(b) = rhs.as_deref_mut() {
            b.swap(r, p);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = a[i][c] / a[r][c];
            if f == 0.0 {
                continue;
            }
            let pivot_row = a[r].clone();
            for (x, p) in a[i][c..cols].iter_mut().zip(&pivot_row[c..cols]) {
                *x -= f * p;
            }
            if let Some(b) = rhs.as_deref_mut() {
                b[i] -= f * b[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn rank(mut a: Vec<Vec<f64>>) -> usize {
    echelon(&mut a, None).len()
}

/// Gauss–Jordan with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    let pivots = echelon(&mut a, Some(&mut b));
    if pivots.len() < n {
        return None;
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Direction spanning the null space of `a` when it is one-dimensional.
fn null_vector(mut a: Vec<Vec<f64>>, n: usize) -> Option<Vec<f64>> {
    let pivots = echelon(&mut a, None);
    if pivots.len() + 1 != n {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut d = vec![0.0; n];
    d[free] = 1.0;
    for (r, &c) in pivots.iter().enumerate() {
        d[c] = -a[r][free] / a[r][c];
    }
    let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Some(d.into_iter().map(|v| v / norm).collect())
}

/// Searches the extreme rays of the recession cone for one along which the
/// objective grows. Only meaningful once a feasible point is known.
fn has_improving_ray(lp: &LinearProgram, eq: &[Plane], examined: &mut usize) -> bool {
    let n = lp.num_vars();
    // Homogeneous versions of the inequality and bound rows, written as
    // `g · d ≤ 0`.
    let mut cone: Vec<Vec<f64>> = lp.inequalities.iter().map(|r| r.coeffs.clone()).collect();
    for (j, b) in lp.bounds.iter().enumerate() {
        cone.push(unit(n, j).into_iter().map(|v| -v).collect());
        if b.upper.is_finite() {
            cone.push(unit(n, j));
        }
    }
    let in_cone = |d: &[f64]| {
        let dot = |g: &[f64]| g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
        eq.iter().all(|p| dot(&p.coeffs).abs() <= FEASIBLE_TOL)
            && cone.iter().all(|g| dot(g) <= FEASIBLE_TOL)
    };
    let cscale = lp.objective.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let improving = |d: &[f64]| lp.objective_at(d) > FEASIBLE_TOL * cscale && in_cone(d);

    if n < eq.len() + 1 {
        return false;
    }
    let mut found = false;
    for_each_combination(cone.len(), n - 1 - eq.len(), |pick| {
        if found {
            return;
        }
        *examined += 1;
        let a: Vec<Vec<f64>> = eq
            .iter()
            .map(|p| p.coeffs.clone())
            .chain(pick.iter().map(|&k| cone[k].clone()))
            .collect();
        let Some(d) = null_vector(a, n) else { return };
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        found = improving(&d) || improving(&neg);
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::test_support::one_var;
    use crate::lp::{Constraint, VarBounds};

    #[test]
    fn combinations_in_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn trivial_cases() {
        let s = brute_force_solve(&one_var(5.0)).unwrap();
        assert_eq!(s.objective_value, 5.0);
        assert_eq!(
            brute_force_solve(&one_var(-1.0)).unwrap().status,
            LpStatus::Infeasible
        );
        let lp = LinearProgram::new(vec![1.0, -1.0]);
        assert_eq!(brute_force_solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn unbounded_along_a_mixed_direction() {
        // max x - y s.t. x - 2y ≤ 1: ray (2, 1) grows the objective.
        let mut lp = LinearProgram::new(vec![1.0, -1.0]);
        lp.inequalities.push(Constraint::new(vec![1.0, -2.0], 1.0));
        assert_eq!(brute_force_solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equality() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.equalities = vec![
            Constraint::new(vec![1.0, 1.0], 2.0),
            Constraint::new(vec![2.0, 2.0], 4.0),
        ];
        lp.bounds = vec![VarBounds::new(0.0, 1.5); 2];
        let s = brute_force_solve(&lp).unwrap();
        assert!((s.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_programs() {
        let lp = LinearProgram::new(vec![1.0; 11]);
        assert_eq!(
            brute_force_solve(&lp),
            Err(Error::TooLarge {
                vars: 11,
                limit: 10
            })
        );
    }
}
