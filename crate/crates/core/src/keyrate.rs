//! Phase-error estimation, key length and the per-distance report.

use serde::{Deserialize, Serialize};

use crate::channel::{
    expected_observations, sample_observations, ChannelParams, DetectorPlacement, ObservedCounts,
    ProtocolParams,
};
use crate::constraints::{build_lp_with, BuildOptions, LpBuild, SecurityBudget};
use crate::error::{check_range, Error, Result};
use crate::lp::{solve_max, LpStatus};
use crate::math::{binary_entropy, plob_bound};

/// Outcome of the phase-error program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseErrorEstimate {
    pub n_ph_upper: f64,
    /// `n_ph_upper / n_bit`, clamped to `[0, 1]`.
    pub e_ph_upper: f64,
    pub lp_iterations: usize,
    pub build: LpBuild,
}

/// Upper bounds `(n_ph, e_ph)` on the phase errors of the sifted key.
pub fn phase_error_upper_bound(
    protocol: &ProtocolParams,
    counts: &ObservedCounts,
    budget: &SecurityBudget,
) -> Result<(f64, f64)> {
    phase_error_estimate(protocol, counts, budget, &BuildOptions::default())
        .map(|e| (e.n_ph_upper, e.e_ph_upper))
}

/// Like [`phase_error_upper_bound`], keeping the program and solver details.
pub fn phase_error_estimate(
    protocol: &ProtocolParams,
    counts: &ObservedCounts,
    budget: &SecurityBudget,
    options: &BuildOptions,
) -> Result<PhaseErrorEstimate> {
    if counts.n_bit <= 0.0 {
        return Err(Error::NoDetections);
    }
    let build = build_lp_with(protocol, counts, budget, options)?;
    let sol = solve_max(&build.lp)?;
    match sol.status {
        LpStatus::Infeasible => return Err(Error::PhaseErrorInfeasible),
        LpStatus::Unbounded => return Err(Error::PhaseErrorUnbounded),
        LpStatus::Optimal => {}
    }
    let n_ph_upper = (sol.objective_value * build.lp.scale).max(0.0);
    Ok(PhaseErrorEstimate {
        n_ph_upper,
        e_ph_upper: (n_ph_upper / counts.n_bit).clamp(0.0, 1.0),
        lp_iterations: sol.iterations,
        build,
    })
}

/// Secret key length in bits, zero when the formula goes negative.
///
/// The phase-error rate is capped at 0.5 before the entropy is taken.
pub fn key_length(
    n_bit: f64,
    e_bit: f64,
    e_ph_upper: f64,
    channel: &ChannelParams,
    budget: &SecurityBudget,
) -> Result<f64> {
    check_range("n_bit", n_bit, 0.0, f64::MAX, "finite and >= 0")?;
    check_range("e_bit", e_bit, 0.0, 1.0, "[0, 1]")?;
    check_range("e_ph_upper", e_ph_upper, 0.0, 1.0, "[0, 1]")?;
    let privacy = n_bit * (1.0 - binary_entropy(e_ph_upper.min(0.5))?);
    let leaked = n_bit * channel.f_ec * binary_entropy(e_bit)?;
    let l = privacy
        - leaked
        - (2.0 / budget.eps_cor).log2()
        - (1.0 / (4.0 * budget.eps_pa * budget.eps_pa)).log2();
    Ok(l.max(0.0))
}

/// Where the observed counts come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    /// Counts equal their expectations.
    #[default]
    Expected,
    /// Counts drawn around their expectations with this seed.
    Sampled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisOptions {
    pub mode: AnalysisMode,
    pub placement: DetectorPlacement,
    /// Apply the detector efficiency to the transmittance used for the
    /// repeaterless comparison.
    pub plob_includes_detector: bool,
    pub build: BuildOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    ZeroKey,
    Infeasible,
    NoDetections,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::ZeroKey => "zero_key",
            RunStatus::Infeasible => "infeasible",
            RunStatus::NoDetections => "no_detections",
        }
    }
}

/// Details kept alongside a report for debugging.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub counts: Option<ObservedCounts>,
    pub lp_status: Option<LpStatus>,
    pub lp_iterations: usize,
    /// Gap bounds whose `delta` was raised to zero.
    pub clamped_gaps: usize,
    /// Gap bounds in which a deviation term saw a negative trial count.
    pub deviation_clamps: usize,
    pub failure_charges: u64,
    pub message: Option<String>,
}

/// Everything computed for one distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub distance_km: f64,
    pub protocol: ProtocolParams,
    pub n_bit: f64,
    pub e_bit: f64,
    pub n_ph_upper: f64,
    pub e_ph_upper: f64,
    pub key_length: f64,
    /// `key_length / n_tot`.
    pub key_rate: f64,
    /// Repeaterless bound at this distance; `+∞` at zero distance.
    pub plob_rate: f64,
    pub budget: SecurityBudget,
    pub status: RunStatus,
    pub diagnostics: Diagnostics,
}

/// Repeaterless bound for the whole Alice–Bob link.
pub fn plob_rate(distance_km: f64, channel: &ChannelParams, include_detector: bool) -> Result<f64> {
    check_range("L_km", distance_km, 0.0, f64::MAX, ">= 0")?;
    let mut eta = 10f64.powf(-channel.xi * distance_km / 10.0);
    if include_detector {
        eta *= channel.eta_d;
    }
    if eta >= 1.0 {
        return Ok(f64::INFINITY);
    }
    if eta <= 0.0 {
        return Ok(0.0);
    }
    plob_bound(eta)
}

/// Runs observation, phase-error estimation and key length for one
/// distance.
///
/// Only invalid inputs are returned as errors. A run without detections or
/// with an infeasible phase-error program yields a zero-key report whose
/// status and diagnostics say why.
pub fn analyze(
    protocol: &ProtocolParams,
    channel: &ChannelParams,
    distance_km: f64,
    budget: &SecurityBudget,
    options: &AnalysisOptions,
) -> Result<KeyRateReport> {
    protocol.validate()?;
    channel.validate()?;
    let plob = plob_rate(distance_km, channel, options.plob_includes_detector)?;
    let mut report = KeyRateReport {
        distance_km,
        protocol: *protocol,
        n_bit: 0.0,
        e_bit: 0.0,
        n_ph_upper: 0.0,
        e_ph_upper: 0.0,
        key_length: 0.0,
        key_rate: 0.0,
        plob_rate: plob,
        budget: *budget,
        status: RunStatus::NoDetections,
        diagnostics: Diagnostics::default(),
    };

    let counts = match options.mode {
        AnalysisMode::Expected => {
            expected_observations(protocol, channel, distance_km, options.placement)
        }
        AnalysisMode::Sampled(seed) => {
            sample_observations(protocol, channel, distance_km, options.placement, seed)
        }
    };
    let counts = match counts {
        Ok(c) if c.n_bit > 0.0 => c,
        Ok(_) | Err(Error::NoDetections) => {
            report.diagnostics.message = Some(Error::NoDetections.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.n_bit = counts.n_bit;
    report.e_bit = counts.e_bit;
    report.diagnostics.counts = Some(counts);

    match phase_error_estimate(protocol, &counts, budget, &options.build) {
        Ok(est) => {
            report.n_ph_upper = est.n_ph_upper;
            report.e_ph_upper = est.e_ph_upper;
            report.diagnostics.lp_status = Some(LpStatus::Optimal);
            report.diagnostics.lp_iterations = est.lp_iterations;
            report.diagnostics.clamped_gaps = est.build.clamped_gaps();
            report.diagnostics.deviation_clamps = est.build.deviation_clamps();
            report.diagnostics.failure_charges = est.build.failure_charges;
            report.key_length =
                key_length(counts.n_bit, counts.e_bit, est.e_ph_upper, channel, budget)?;
            report.key_rate = report.key_length / protocol.n_tot_f64();
            report.status = if report.key_length > 0.0 {
                RunStatus::Ok
            } else {
                RunStatus::ZeroKey
            };
        }
        Err(e @ (Error::PhaseErrorInfeasible | Error::PhaseErrorUnbounded)) => {
            report.diagnostics.lp_status = Some(if e == Error::PhaseErrorInfeasible {
                LpStatus::Infeasible
            } else {
                LpStatus::Unbounded
            });
            report.diagnostics.message = Some(e.to_string());
            report.status = RunStatus::Infeasible;
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::make_budget;

    fn budget() -> SecurityBudget {
        SecurityBudget::from_total(4e-20, 8, 1e-10, 1.6566e-10).unwrap()
    }

    #[test]
    fn half_phase_error_gives_no_key() {
        let ch = ChannelParams::default();
        assert_eq!(key_length(1e6, 0.03, 0.5, &ch, &budget()).unwrap(), 0.0);
    }

    #[test]
    fn entropy_free_key() {
        let ch = ChannelParams::default();
        let b = budget();
        let l = key_length(1e6, 0.0, 0.0, &ch, &b).unwrap();
        let expect = 1e6 - (2.0 / b.eps_cor).log2() - (1.0 / (4.0 * b.eps_pa * b.eps_pa)).log2();
        assert!((l - expect).abs() < 1e-6);
    }

    #[test]
    fn no_detections_is_an_error_for_the_estimator() {
        let p = ProtocolParams::new(0.05, 0.1, 0.8, 0.1, 8, 1_000_000).unwrap();
        let c = ObservedCounts::new(0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            phase_error_upper_bound(&p, &c, &budget()),
            Err(Error::NoDetections)
        );
    }

    #[test]
    fn report_is_self_consistent() {
        let p = ProtocolParams::new(0.03, 0.12, 0.88, 0.07, 8, 100_000_000_000_000).unwrap();
        let ch = ChannelParams::default();
        let r = analyze(&p, &ch, 100.0, &budget(), &AnalysisOptions::default()).unwrap();
        assert_eq!(r.status, RunStatus::Ok);
        assert_eq!(r.key_rate * 1e14, r.key_length);
        assert!((r.e_ph_upper - r.n_ph_upper / r.n_bit).abs() < 1e-15);
        assert_eq!(r.diagnostics.failure_charges, 76);
    }

    #[test]
    fn dark_count_limited_distance_has_no_key() {
        let p = ProtocolParams::new(0.03, 0.12, 0.88, 0.07, 8, 1_000_000_000_000).unwrap();
        let ch = ChannelParams::default();
        let b = make_budget(4e-20 / 76.0, 8, 1e-10, 1.6566e-10).unwrap();
        let r = analyze(&p, &ch, 1000.0, &b, &AnalysisOptions::default()).unwrap();
        assert_eq!(r.key_length, 0.0);
        assert_ne!(r.status, RunStatus::Ok);
    }

    #[test]
    fn plob_at_zero_distance_is_infinite() {
        let ch = ChannelParams::default();
        assert_eq!(plob_rate(0.0, &ch, false).unwrap(), f64::INFINITY);
        let r = plob_rate(250.0, &ch, false).unwrap();
        assert!((r - plob_bound(1e-5).unwrap()).abs() < 1e-18);
    }
}
