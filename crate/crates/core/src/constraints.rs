//! Assembly of the phase-error linear program: count equalities, pairwise
//! gap bounds between nearly indistinguishable folded states, vacuum
//! anchors and per-variable boxes.

use serde::{Deserialize, Serialize};

use crate::channel::{ObservedCounts, ProtocolParams};
use crate::error::{check_range, Error, Result};
use crate::lp::{Constraint, LinearProgram, VarBounds};
use crate::math::{
    chernoff_delta, folded_infidelity, folded_poisson, trace_distance_bound, vacuum_infidelity,
    DeviationSpec,
};

/// Failure probabilities of the estimation and of the final key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityBudget {
    /// Failure probability charged per deviation bound.
    pub eps_a: f64,
    /// Total failure probability of the phase-error estimate, `(8M+12)·eps_a`.
    pub eps_total_pe: f64,
    pub eps_cor: f64,
    pub eps_pa: f64,
    pub eps_sec: f64,
    pub eps_tol: f64,
}

/// Number of `eps_a` units charged by one LP build with `m` phase slices.
pub fn failure_multiplier(m: usize) -> u64 {
    8 * m as u64 + 12
}

fn check_probability(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::Domain {
            name,
            value: v,
            expected: "(0, 1)",
        })
    }
}

fn check_even_slices(m: usize) -> Result<()> {
    if m >= 2 && m.is_multiple_of(2) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "M",
            value: m as f64,
            expected: "even integer >= 2",
        })
    }
}

/// Budget from the per-bound failure probability.
pub fn make_budget(eps_a: f64, m: usize, eps_cor: f64, eps_pa: f64) -> Result<SecurityBudget> {
    check_even_slices(m)?;
    check_probability("eps_a", eps_a)?;
    let total = failure_multiplier(m) as f64 * eps_a;
    SecurityBudget::assemble(eps_a, total, eps_cor, eps_pa)
}

impl SecurityBudget {
    /// Budget from the total estimation failure probability; `eps_a` is
    /// derived by dividing by `8M+12`.
    pub fn from_total(eps_total_pe: f64, m: usize, eps_cor: f64, eps_pa: f64) -> Result<Self> {
        check_even_slices(m)?;
        check_probability("eps_total_pe", eps_total_pe)?;
        let eps_a = eps_total_pe / failure_multiplier(m) as f64;
        Self::assemble(eps_a, eps_total_pe, eps_cor, eps_pa)
    }

    fn assemble(eps_a: f64, eps_total_pe: f64, eps_cor: f64, eps_pa: f64) -> Result<Self> {
        check_probability("eps_total_pe", eps_total_pe)?;
        check_probability("eps_cor", eps_cor)?;
        check_probability("eps_pa", eps_pa)?;
        let eps_sec = eps_total_pe.sqrt() + eps_pa;
        Ok(SecurityBudget {
            eps_a,
            eps_total_pe,
            eps_cor,
            eps_pa,
            eps_sec,
            eps_tol: eps_cor + eps_sec,
        })
    }
}

/// Which pair of yields a gap bound relates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "j", rename_all = "snake_case")]
pub enum GapKind {
    /// `n_{j|2μ}` against `n_{j|2ν}`.
    DecoyPair(usize),
    /// `n_0` against `n_{0|2μ}`.
    VacuumMu,
    /// `n_0` against `n_{0|2ν}`.
    VacuumNu,
}

/// `|coeff_left · left − coeff_right · right| ≤ delta`.
///
/// For a decoy pair `left` is the signal-intensity yield; for a vacuum
/// anchor it is the observed `n_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    pub kind: GapKind,
    pub coeff_left: f64,
    pub coeff_right: f64,
    pub delta: f64,
    /// `delta` came out negative and was raised to zero.
    pub clamped: bool,
    /// A deviation term saw a negative trial count.
    pub deviation_clamped: bool,
    /// `eps_a` units charged for this bound.
    pub charges: u32,
}

/// Inputs shared by every gap bound: preparation probabilities of the two
/// states, `√(1−F²)`, and the observed counts on either side.
struct PairInputs {
    p_left: f64,
    p_right: f64,
    distinguishability: f64,
    n_left: f64,
    n_right: f64,
}

/// Failure-probability slots of one gap bound; each is charged twice.
#[derive(Default)]
struct ChargeLog {
    slots: [bool; 3],
    deviation_clamped: bool,
}

impl ChargeLog {
    fn delta(&mut self, slot: usize, x: f64, y: f64, eps: f64) -> Result<f64> {
        self.slots[slot] = true;
        let d = chernoff_delta(DeviationSpec::new(x, y, eps))?;
        self.deviation_clamped |= d.clamped;
        Ok(d.value)
    }

    fn charges(&self) -> u32 {
        2 * self.slots.iter().filter(|s| **s).count() as u32
    }
}

// Slots: preparation-count fluctuation, guessing-game fluctuation, and the
// linearized per-class fluctuation.
const SLOT_PREP: usize = 0;
const SLOT_GUESS: usize = 1;
const SLOT_CLASS: usize = 2;

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).min(1.0)
    } else {
        0.0
    }
}

fn pair_gap(kind: GapKind, inp: PairInputs, n_tot: f64, eps_a: f64) -> Result<GapBound> {
    let PairInputs {
        p_left,
        p_right,
        distinguishability: s,
        n_left,
        n_right,
    } = inp;
    let mut log = ChargeLog::default();
    // The branch is chosen by which state is prepared more often; ties go to
    // the second branch.
    let left_dominant = p_left > p_right;
    let p_small = if left_dominant { p_right } else { p_left };
    let (coeff_left, coeff_right) = if left_dominant {
        (ratio(p_right, p_left), 1.0)
    } else {
        (1.0, ratio(p_left, p_right))
    };

    let prep = log.delta(SLOT_PREP, n_tot, 2.0 * p_small, eps_a)?;
    let n1 = 2.0 * n_tot * p_small + prep;
    let n2 = 2.0 * n_tot * p_small - prep;

    let guess_upper = log.delta(SLOT_GUESS, n1, 0.5 * (1.0 + s), eps_a)?;
    let guess_lower = log.delta(SLOT_GUESS, n2 - n_left - n_right, 0.5, eps_a)?;
    let class = if left_dominant {
        log.delta(SLOT_CLASS, n_left, coeff_left, eps_a)?
    } else {
        log.delta(SLOT_CLASS, n_right, coeff_right, eps_a)?
    };

    let raw = n1 * s + 2.0 * guess_upper - 2.0 * guess_lower + class;
    Ok(GapBound {
        kind,
        coeff_left,
        coeff_right,
        delta: raw.max(0.0),
        clamped: raw < 0.0,
        deviation_clamped: log.deviation_clamped,
        charges: log.charges(),
    })
}

/// Probability that both parties pick `label` and the two-pulse state lands
/// in folded class `j`: `(2P_β²/M)·P̃_{j|2β}`.
fn class_probability(protocol: &ProtocolParams, signal: bool, j: usize) -> Result<f64> {
    let (p, beta) = protocol.label(signal);
    let m = protocol.slices;
    Ok(2.0 * p * p / m as f64 * folded_poisson(j, beta.doubled(), m)?)
}

/// Gap bound between the signal and decoy yields of folded class `j`.
pub fn gap_bound_decoy(
    j: usize,
    protocol: &ProtocolParams,
    counts: &ObservedCounts,
    eps_a: f64,
) -> Result<GapBound> {
    protocol.validate()?;
    check_probability("eps_a", eps_a)?;
    let m = protocol.slices;
    let infidelity = folded_infidelity(j, protocol.mu.value(), protocol.nu.value(), m)?;
    pair_gap(
        GapKind::DecoyPair(j),
        PairInputs {
            p_left: class_probability(protocol, true, j)?,
            p_right: class_probability(protocol, false, j)?,
            distinguishability: trace_distance_bound(infidelity),
            n_left: counts.n_2mu,
            n_right: counts.n_2nu,
        },
        protocol.n_tot_f64(),
        eps_a,
    )
}

/// Gap bound anchoring `n_{0|2β}` to the vacuum count `n_0`, for the signal
/// (`signal = true`) or decoy intensity.
pub fn gap_bound_vacuum(
    signal: bool,
    protocol: &ProtocolParams,
    counts: &ObservedCounts,
    eps_a: f64,
) -> Result<GapBound> {
    protocol.validate()?;
    check_probability("eps_a", eps_a)?;
    let (_, beta) = protocol.label(signal);
    let infidelity = vacuum_infidelity(beta.value(), protocol.slices)?;
    pair_gap(
        if signal {
            GapKind::VacuumMu
        } else {
            GapKind::VacuumNu
        },
        PairInputs {
            p_left: protocol.p_o * protocol.p_o,
            p_right: class_probability(protocol, signal, 0)?,
            distinguishability: trace_distance_bound(infidelity),
            n_left: counts.n_0,
            n_right: counts.label(signal),
        },
        protocol.n_tot_f64(),
        eps_a,
    )
}

/// Upper bound on `n_{j|2β}`: expected preparations of the class plus a
/// one-sided deviation.
pub fn variable_upper_bound(
    j: usize,
    signal: bool,
    protocol: &ProtocolParams,
    eps_a: f64,
) -> Result<f64> {
    protocol.validate()?;
    check_probability("eps_a", eps_a)?;
    let mean = protocol.n_tot_f64() * class_probability(protocol, signal, j)?;
    Ok(mean + (3.0 * (1.0 / eps_a).ln() * mean).sqrt())
}

/// Knobs for [`build_lp_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Every gap bound's `delta` is multiplied by this factor. `1` is the
    /// secure setting; other values are for sensitivity studies only.
    pub delta_scale: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { delta_scale: 1.0 }
    }
}

/// An assembled program together with the pieces it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpBuild {
    /// Variables are in units of `lp.scale` counts.
    pub lp: LinearProgram,
    /// Decoy pairs `j = 0..M`, then the signal and decoy vacuum anchors.
    pub gaps: Vec<GapBound>,
    /// Unscaled box upper bounds, in variable order.
    pub upper_bounds: Vec<f64>,
    /// Total `eps_a` units charged.
    pub failure_charges: u64,
}

impl LpBuild {
    pub fn clamped_gaps(&self) -> usize {
        self.gaps.iter().filter(|g| g.clamped).count()
    }

    pub fn deviation_clamps(&self) -> usize {
        self.gaps.iter().filter(|g| g.deviation_clamped).count()
    }
}

/// Builds the phase-error program with default options.
pub fn build_lp(
    protocol: &ProtocolParams,
    counts: &ObservedCounts,
    budget: &SecurityBudget,
) -> Result<LpBuild> {
    build_lp_with(protocol, counts, budget, &BuildOptions::default())
}

/// Builds the phase-error program.
///
/// Variables are `[n_{0|2μ} … n_{M−1|2μ}, n_{0|2ν} … n_{M−1|2ν}]`, measured
/// in units of `max(n_2mu, n_2nu)` so that the equality right-hand sides
/// are of order one.
pub fn build_lp_with(
    protocol: &ProtocolParams,
    counts: &ObservedCounts,
    budget: &SecurityBudget,
    options: &BuildOptions,
) -> Result<LpBuild> {
    protocol.validate()?;
    check_range(
        "delta_scale",
        options.delta_scale,
        0.0,
        f64::MAX,
        "finite and >= 0",
    )?;
    let m = protocol.slices;
    let eps_a = budget.eps_a;
    let scale = counts.n_2mu.max(counts.n_2nu).max(1.0);

    let mut objective = vec![0.0; 2 * m];
    for j in (0..m - 1).step_by(2) {
        objective[j] = 1.0;
    }
    let mut lp = LinearProgram::new(objective);
    lp.scale = scale;

    let sum_row = |offset: usize, rhs: f64| {
        let mut coeffs = vec![0.0; 2 * m];
        coeffs[offset..offset + m].fill(1.0);
        Constraint::new(coeffs, rhs / scale)
    };
    lp.equalities = vec![sum_row(0, counts.n_2mu), sum_row(m, counts.n_2nu)];

    let mut gaps = Vec::with_capacity(m + 2);
    for j in 0..m {
        let g = gap_bound_decoy(j, protocol, counts, eps_a)?;
        let delta = g.delta * options.delta_scale / scale;
        let mut coeffs = vec![0.0; 2 * m];
        coeffs[j] = g.coeff_left;
        coeffs[m + j] = -g.coeff_right;
        let neg: Vec<f64> = coeffs.iter().map(|c| -c).collect();
        lp.inequalities.push(Constraint::new(coeffs, delta));
        lp.inequalities.push(Constraint::new(neg, delta));
        gaps.push(g);
    }
    for (signal, var) in [(true, 0), (false, m)] {
        let g = gap_bound_vacuum(signal, protocol, counts, eps_a)?;
        let delta = g.delta * options.delta_scale / scale;
        let anchor = g.coeff_left * counts.n_0 / scale;
        // coeff_left·n_0 − coeff_right·x ∈ [−Δ, Δ]
        let mut lower = vec![0.0; 2 * m];
        lower[var] = -g.coeff_right;
        let mut upper = vec![0.0; 2 * m];
        upper[var] = g.coeff_right;
        lp.inequalities.push(Constraint::new(lower, delta - anchor));
        lp.inequalities.push(Constraint::new(upper, delta + anchor));
        gaps.push(g);
    }

    let mut upper_bounds = Vec::with_capacity(2 * m);
    for signal in [true, false] {
        for j in 0..m {
            upper_bounds.push(variable_upper_bound(j, signal, protocol, eps_a)?);
        }
    }
    lp.bounds = upper_bounds
        .iter()
        .map(|&u| VarBounds::new(0.0, u / scale))
        .collect();

    let failure_charges =
        gaps.iter().map(|g| u64::from(g.charges)).sum::<u64>() + upper_bounds.len() as u64;
    Ok(LpBuild {
        lp,
        gaps,
        upper_bounds,
        failure_charges,
    })
}
