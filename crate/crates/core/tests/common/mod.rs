//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use tfkey::channel::{expected_observations, ChannelParams, DetectorPlacement};
use tfkey::constraints::{build_lp, SecurityBudget};
use tfkey::lp::{Constraint, LinearProgram, LpSolution, LpStatus, VarBounds};
use tfkey::ProtocolParams;

pub fn reference_budget(m: usize) -> SecurityBudget {
    SecurityBudget::from_total(4e-20, m, 1e-10, 1.6566e-10).unwrap()
}

fn coeff<R: Rng>(rng: &mut R) -> f64 {
    // Round to a coarse grid so that degenerate vertices show up.
    if rng.random_bool(0.2) {
        0.0
    } else {
        (rng.random_range(-4.0f64..4.0) * 4.0).round() / 4.0
    }
}

/// A random dense program with `n` variables. About one in eight is
/// infeasible by construction and some are unbounded.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize) -> LinearProgram {
    let mut lp = LinearProgram::new((0..n).map(|_| coeff(rng)).collect());
    for b in &mut lp.bounds {
        let lower = if rng.random_bool(0.7) {
            0.0
        } else {
            rng.random_range(-2.0..1.0)
        };
        let upper = if rng.random_bool(0.6) {
            lower + rng.random_range(0.5..5.0)
        } else {
            f64::INFINITY
        };
        *b = VarBounds::new(lower, upper);
    }
    // A point inside the boxes keeps the constraints consistent.
    let x0: Vec<f64> = lp
        .bounds
        .iter()
        .map(|b| {
            let hi = if b.upper.is_finite() {
                b.upper
            } else {
                b.lower + 3.0
            };
            rng.random_range(b.lower..=hi)
        })
        .collect();
    let n_eq = rng.random_range(0..=n.min(2));
    let n_le = rng.random_range(1..=n + 2);
    for _ in 0..n_eq {
        let c: Vec<f64> = (0..n).map(|_| coeff(rng)).collect();
        let rhs = c.iter().zip(&x0).map(|(a, x)| a * x).sum();
        lp.equalities.push(Constraint::new(c, rhs));
    }
    for _ in 0..n_le {
        let c: Vec<f64> = (0..n).map(|_| coeff(rng)).collect();
        let act: f64 = c.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let slack = if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(0.0..2.0)
        };
        lp.inequalities.push(Constraint::new(c, act + slack));
    }
    if rng.random_bool(0.125) {
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        lp.inequalities.push(Constraint::new(c, 1.0));
        lp.inequalities.push(Constraint::new(neg, -2.0));
    }
    lp
}

/// Random protocol parameters with `M = 2` at a random distance, and the
/// resulting phase-error program.
pub fn random_phase_error_lp<R: Rng>(rng: &mut R) -> (ProtocolParams, LinearProgram) {
    loop {
        let mu = rng.random_range(0.005..0.3);
        let nu = rng.random_range(0.005..0.3);
        let p_mu = rng.random_range(0.1..0.9);
        let p_nu = rng.random_range(0.02..(0.98 - p_mu));
        let n = [1e10, 1e12, 1e14][rng.random_range(0..3)] as u64;
        let l = rng.random_range(0.0..300.0);
        let p = ProtocolParams::new(mu, nu, p_mu, p_nu, 2, n).unwrap();
        let Ok(c) = expected_observations(
            &p,
            &ChannelParams::default(),
            l,
            DetectorPlacement::Excluded,
        ) else {
            continue;
        };
        let build = build_lp(&p, &c, &reference_budget(2)).unwrap();
        return (p, build.lp);
    }
}

/// Same status, and objectives within `rel` of each other when optimal.
pub fn agree(a: &LpSolution, b: &LpSolution, rel: f64) -> Result<(), String> {
    if a.status != b.status {
        return Err(format!("status {:?} vs {:?}", a.status, b.status));
    }
    if a.status == LpStatus::Optimal {
        let scale = 1f64
            .max(a.objective_value.abs())
            .max(b.objective_value.abs());
        let diff = (a.objective_value - b.objective_value).abs();
        if diff > rel * scale {
            return Err(format!(
                "objective {:e} vs {:e}",
                a.objective_value, b.objective_value
            ));
        }
    }
    Ok(())
}
