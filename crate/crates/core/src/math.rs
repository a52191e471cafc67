//! Numerical primitives: entropy, Poisson statistics, folded (mod-M)
//! photon-number distributions, state fidelities, Chernoff-type deviation
//! terms and the repeaterless linear bound.
//!
//! Everything here is pure; callers may use it from any thread.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Tail terms below this probability are dropped once the photon number is
/// past the mean.
pub const TRUNCATION_THRESHOLD: f64 = 1e-30;

/// Above this photon number the pmf goes through `ln Γ` instead of a
/// running product.
const LOG_SPACE_CUTOFF: u64 = 20;

/// Mean photon number per pulse.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Intensity(f64);

impl Intensity {
    pub fn new(value: f64) -> Result<Self> {
        check_range("intensity", value, 0.0, f64::MAX, "finite and >= 0").map(Intensity)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Mean photon number of the two-pulse state `2β` seen by the middle node.
    pub fn doubled(self) -> f64 {
        2.0 * self.0
    }
}

impl TryFrom<f64> for Intensity {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Intensity::new(value)
    }
}

impl From<Intensity> for f64 {
    fn from(i: Intensity) -> f64 {
        i.0
    }
}

/// One entry of a folded photon-number distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedWeight {
    pub j: usize,
    pub weight: f64,
}

/// Arguments of the deviation term `δ(x, y, z) = √(3·x·y·ln(1/z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSpec {
    /// Number of trials. May arrive negative from differences of sampled
    /// counts; it is then clamped to zero.
    pub trials: f64,
    /// Per-trial rate.
    pub rate: f64,
    /// Failure probability.
    pub failure: f64,
}

impl DeviationSpec {
    pub fn new(trials: f64, rate: f64, failure: f64) -> Self {
        DeviationSpec {
            trials,
            rate,
            failure,
        }
    }
}

/// Value of a deviation term, with a flag set when the trial count had to be
/// clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub value: f64,
    pub clamped: bool,
}

/// Binary Shannon entropy in bits, with `0·log2(0) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Poisson probability of `k` photons at mean `mean`.
pub fn poisson_pmf(k: u64, mean: f64) -> Result<f64> {
    check_range("mean", mean, 0.0, f64::MAX, "finite and >= 0")?;
    Ok(pmf(k, mean))
}

fn pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k > LOG_SPACE_CUTOFF {
        let kf = k as f64;
        return (kf * mean.ln() - mean - ln_gamma(kf + 1.0)).exp();
    }
    let mut term = (-mean).exp();
    for i in 1..=k {
        term *= mean / i as f64;
    }
    term
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9), accurate to ~1e-15.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn check_slices(m: usize) -> Result<()> {
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

fn check_class(j: usize, m: usize) -> Result<()> {
    if j < m {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "j",
            value: j as f64,
            expected: "0 <= j < M",
        })
    }
}

/// Photon numbers `j, j+M, j+2M, …` of the folded class, stopping once the
/// pmf is below `threshold` and the index is past `mean`. The leading term
/// `k = j` is always kept.
fn class_terms(j: usize, mean: f64, m: usize, threshold: f64) -> impl Iterator<Item = (u64, f64)> {
    let (j, m) = (j as u64, m as u64);
    let mut n = 0u64;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let k = j + m * n;
        let p = pmf(k, mean);
        if n > 0 && p < threshold && k as f64 > mean {
            done = true;
            return None;
        }
        n += 1;
        Some((k, p))
    })
}

/// `P̃_{j}` at the given mean: the total probability of photon numbers
/// congruent to `j` modulo `M`.
pub fn folded_poisson(j: usize, mean: f64, m: usize) -> Result<f64> {
    folded_poisson_with_threshold(j, mean, m, TRUNCATION_THRESHOLD)
}

/// [`folded_poisson`] with an explicit truncation threshold.
pub fn folded_poisson_with_threshold(j: usize, mean: f64, m: usize, threshold: f64) -> Result<f64> {
    check_slices(m)?;
    check_class(j, m)?;
    check_range("mean", mean, 0.0, f64::MAX, "finite and >= 0")?;
    Ok(class_terms(j, mean, m, threshold).map(|(_, p)| p).sum())
}

/// The whole folded distribution `[P̃_0, …, P̃_{M-1}]`.
pub fn folded_distribution(mean: f64, m: usize) -> Result<Vec<FoldedWeight>> {
    (0..m)
        .map(|j| folded_poisson(j, mean, m).map(|weight| FoldedWeight { j, weight }))
        .collect()
}

/// `1 − F` between the folded classes `τ_{j|2a}` and `τ_{j|2b}`, where `a`
/// and `b` are single-pulse intensities.
///
/// Computed as `½ Σ_n (√q_a(n) − √q_b(n))²` over the normalized class
/// weights, which stays accurate when `F` is within 1e-12 of one.
pub fn folded_infidelity(j: usize, intensity_a: f64, intensity_b: f64, m: usize) -> Result<f64> {
    check_slices(m)?;
    check_class(j, m)?;
    check_range("intensity_a", intensity_a, 0.0, f64::MAX, "finite and >= 0")?;
    check_range("intensity_b", intensity_b, 0.0, f64::MAX, "finite and >= 0")?;
    let (ma, mb) = (2.0 * intensity_a, 2.0 * intensity_b);
    let wa = folded_poisson(j, ma, m)?;
    let wb = folded_poisson(j, mb, m)?;
    match (wa > 0.0, wb > 0.0) {
        (false, false) => {
            return Err(Error::Degenerate(
                "fidelity undefined: both folded weights are zero",
            ))
        }
        (true, false) | (false, true) => return Ok(1.0),
        _ => {}
    }
    if ma == mb {
        return Ok(0.0);
    }
    // Walk far enough for both tails.
    let reach = ma.max(mb);
    let mut sum = 0.0;
    for (k, _) in class_terms(j, reach, m, TRUNCATION_THRESHOLD * 1e-10) {
        let qa = pmf(k, ma) / wa;
        let qb = pmf(k, mb) / wb;
        let d = qa.sqrt() - qb.sqrt();
        sum += d * d;
    }
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

/// Fidelity `F^j` between the folded classes of two intensities.
pub fn folded_fidelity(j: usize, intensity_a: f64, intensity_b: f64, m: usize) -> Result<f64> {
    folded_infidelity(j, intensity_a, intensity_b, m).map(|d| 1.0 - d)
}

/// `1 − F^0_{β0}` for the vacuum-anchor fidelity (see [`vacuum_fidelity`]).
pub fn vacuum_infidelity(intensity: f64, m: usize) -> Result<f64> {
    check_slices(m)?;
    check_range("intensity", intensity, 0.0, f64::MAX, "finite and >= 0")?;
    let mean = 2.0 * intensity;
    let folded = folded_poisson(0, mean, m)?;
    let tail: f64 = class_terms(0, mean, m, TRUNCATION_THRESHOLD)
        .skip(1)
        .map(|(_, p)| p)
        .sum();
    Ok((tail / folded).clamp(0.0, 1.0))
}

/// Fidelity between the vacuum and the folded class `τ_{0|2β}`, as the
/// ratio `P_{0|2β} / P̃_{0|2β}` (no square root).
pub fn vacuum_fidelity(intensity: f64, m: usize) -> Result<f64> {
    vacuum_infidelity(intensity, m).map(|d| 1.0 - d)
}

/// Variant of [`vacuum_fidelity`] using the pure-state overlap
/// `√(P_{0|2β} / P̃_{0|2β})`, for sensitivity studies.
pub fn vacuum_fidelity_sqrt(intensity: f64, m: usize) -> Result<f64> {
    vacuum_fidelity(intensity, m).map(f64::sqrt)
}

/// `√(1 − F²)` from an infidelity `d = 1 − F`.
pub fn trace_distance_bound(infidelity: f64) -> f64 {
    let d = infidelity.clamp(0.0, 1.0);
    (d * (2.0 - d)).sqrt()
}

/// `δ(x, y, z) = √(3·x·y·ln(1/z))`.
pub fn chernoff_delta(spec: DeviationSpec) -> Result<Deviation> {
    let DeviationSpec {
        trials,
        rate,
        failure,
    } = spec;
    if !(failure.is_finite() && failure > 0.0 && failure < 1.0) {
        return Err(Error::Domain {
            name: "z",
            value: failure,
            expected: "(0, 1)",
        });
    }
    // Rates are probabilities; allow float noise just above one.
    check_range("y", rate, 0.0, 1.0 + 1e-12, "[0, 1]")?;
    if !trials.is_finite() {
        return Err(Error::Domain {
            name: "x",
            value: trials,
            expected: "finite",
        });
    }
    let clamped = trials < 0.0;
    let x = trials.max(0.0);
    Ok(Deviation {
        value: (3.0 * x * rate * (1.0 / failure).ln()).sqrt(),
        clamped,
    })
}

/// Repeaterless linear bound `−log2(1 − η)` in bits per pulse.
pub fn plob_bound(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            expected: "(0, 1)",
        });
    }
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}
