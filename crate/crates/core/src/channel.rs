//! Expected (and sampled) experimental observations for a symmetric fiber
//! link with an honest middle node.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::math::Intensity;

/// Physical link and device parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Misalignment error rate.
    pub e_m: f64,
    /// Dark-count probability per detector per gate.
    pub p_d: f64,
    /// Fiber loss in dB/km.
    pub xi: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
}

impl Default for ChannelParams {
    /// 3% misalignment, 1e-8 dark counts, 0.2 dB/km, η_d = 0.3, f = 1.1.
    fn default() -> Self {
        ChannelParams {
            e_m: 0.03,
            p_d: 1e-8,
            xi: 0.2,
            eta_d: 0.3,
            f_ec: 1.1,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        check_range("e_m", self.e_m, 0.0, 0.5, "[0, 0.5]")?;
        check_range("p_d", self.p_d, 0.0, 1.0 - f64::EPSILON, "[0, 1)")?;
        check_range("xi", self.xi, 0.0, f64::MAX, ">= 0")?;
        if !(self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return Err(Error::Domain {
                name: "eta_d",
                value: self.eta_d,
                expected: "(0, 1]",
            });
        }
        check_range("f_ec", self.f_ec, 1.0, f64::MAX, ">= 1")?;
        Ok(())
    }
}

/// Protocol settings chosen by Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Signal (code-mode) intensity.
    pub mu: Intensity,
    /// Decoy intensity.
    pub nu: Intensity,
    pub p_mu: f64,
    pub p_nu: f64,
    /// Probability of sending vacuum.
    pub p_o: f64,
    /// Number of discrete phase slices `M`.
    pub slices: usize,
    /// Total number of rounds.
    pub n_tot: u64,
}

const PROB_SUM_TOL: f64 = 1e-12;

impl ProtocolParams {
    /// Builds the parameters with `p_o = 1 − p_mu − p_nu`.
    pub fn new(mu: f64, nu: f64, p_mu: f64, p_nu: f64, slices: usize, n_tot: u64) -> Result<Self> {
        let p_o = 1.0 - p_mu - p_nu;
        let p = ProtocolParams {
            mu: Intensity::new(mu)?,
            nu: Intensity::new(nu)?,
            p_mu,
            p_nu,
            p_o: if p_o < 0.0 && p_o > -PROB_SUM_TOL {
                0.0
            } else {
                p_o
            },
            slices,
            n_tot,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("p_mu", self.p_mu, 0.0, 1.0, "[0, 1]")?;
        check_range("p_nu", self.p_nu, 0.0, 1.0, "[0, 1]")?;
        check_range("p_o", self.p_o, 0.0, 1.0, "[0, 1]")?;
        let sum = self.p_mu + self.p_nu + self.p_o;
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Domain {
                name: "p_mu + p_nu + p_o",
                value: sum,
                expected: "1 within 1e-12",
            });
        }
        if self.slices < 2 || !self.slices.is_multiple_of(2) {
            return Err(Error::Domain {
                name: "M",
                value: self.slices as f64,
                expected: "even integer >= 2",
            });
        }
        if self.n_tot == 0 {
            return Err(Error::Domain {
                name: "n_tot",
                value: 0.0,
                expected: "positive integer",
            });
        }
        Ok(())
    }

    pub fn n_tot_f64(&self) -> f64 {
        self.n_tot as f64
    }

    /// Sending probability and intensity for the signal (`true`) or decoy.
    pub(crate) fn label(&self, signal: bool) -> (f64, Intensity) {
        if signal {
            (self.p_mu, self.mu)
        } else {
            (self.p_nu, self.nu)
        }
    }
}

/// Where the detector efficiency enters the single-arm transmittance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorPlacement {
    /// `η = 10^{−ξL/20}`; detector efficiency is not applied.
    #[default]
    Excluded,
    /// `η = η_d · 10^{−ξL/20}`.
    InTransmittance,
}

/// Counts observed (or expected) after sifting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedCounts {
    pub n_2mu: f64,
    pub n_2nu: f64,
    pub n_0: f64,
    /// Sifted key length; always equal to `n_2mu`.
    pub n_bit: f64,
    pub e_bit: f64,
}

impl ObservedCounts {
    pub fn new(n_2mu: f64, n_2nu: f64, n_0: f64, e_bit: f64) -> Result<Self> {
        for (name, v) in [("n_2mu", n_2mu), ("n_2nu", n_2nu), ("n_0", n_0)] {
            check_range(name, v, 0.0, f64::MAX, "finite and >= 0")?;
        }
        check_range("e_bit", e_bit, 0.0, 1.0, "[0, 1]")?;
        Ok(ObservedCounts {
            n_2mu,
            n_2nu,
            n_0,
            n_bit: n_2mu,
            e_bit,
        })
    }

    /// Count of successful rounds for the signal (`true`) or decoy label.
    pub(crate) fn label(&self, signal: bool) -> f64 {
        if signal {
            self.n_2mu
        } else {
            self.n_2nu
        }
    }
}

/// Single-click probabilities for the correct and wrong detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbabilities {
    pub corr: f64,
    pub err: f64,
}

impl ClickProbabilities {
    pub fn total(&self) -> f64 {
        self.corr + self.err
    }
}

/// Transmittance of one arm (sender to middle node, half the fiber) for a
/// total Alice–Bob distance `distance_km`.
pub fn half_channel_transmittance(
    distance_km: f64,
    channel: &ChannelParams,
    placement: DetectorPlacement,
) -> Result<f64> {
    check_range("L_km", distance_km, 0.0, f64::MAX, ">= 0")?;
    let fiber = 10f64.powf(-channel.xi * distance_km / 20.0);
    Ok(match placement {
        DetectorPlacement::Excluded => fiber,
        DetectorPlacement::InTransmittance => fiber * channel.eta_d,
    })
}

/// Click probabilities when both senders emit intensity `beta` through a
/// single-arm transmittance `eta`.
pub fn click_probabilities(
    beta: Intensity,
    eta: f64,
    channel: &ChannelParams,
) -> Result<ClickProbabilities> {
    check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    let b = beta.value();
    let (em, pd) = (channel.e_m, channel.p_d);
    let x_right = 2.0 * eta * (1.0 - em) * b;
    let x_wrong = 2.0 * eta * em * b;
    // 1 − (1 − p_d)·e^{−x}, accurate when both p_d and x are tiny.
    let ln_no_dark = (-pd).ln_1p();
    let click = |x: f64| -(ln_no_dark - x).exp_m1();
    Ok(ClickProbabilities {
        corr: click(x_right) * (-x_wrong).exp() * (1.0 - pd),
        err: click(x_wrong) * (-x_right).exp() * (1.0 - pd),
    })
}

/// Mean counts for the given link. Counts are real-valued expectations.
pub fn expected_observations(
    protocol: &ProtocolParams,
    channel: &ChannelParams,
    distance_km: f64,
    placement: DetectorPlacement,
) -> Result<ObservedCounts> {
    protocol.validate()?;
    channel.validate()?;
    let eta = half_channel_transmittance(distance_km, channel, placement)?;
    let n = protocol.n_tot_f64();
    let m = protocol.slices as f64;

    let signal = click_probabilities(protocol.mu, eta, channel)?;
    let decoy = click_probabilities(protocol.nu, eta, channel)?;
    let vacuum = click_probabilities(Intensity::new(0.0)?, eta, channel)?;

    if signal.total() <= 0.0 {
        return Err(Error::NoDetections);
    }
    let n_2mu = n * protocol.p_mu.powi(2) * 2.0 * signal.total() / m;
    let n_2nu = n * protocol.p_nu.powi(2) * 2.0 * decoy.total() / m;
    let n_0 = n * protocol.p_o.powi(2) * vacuum.total();
    ObservedCounts::new(n_2mu, n_2nu, n_0, signal.err / signal.total())
}

/// Poisson-fluctuated counts around [`expected_observations`], deterministic
/// in `seed`. The error count is a binomial split of the sampled `n_2mu`.
pub fn sample_observations(
    protocol: &ProtocolParams,
    channel: &ChannelParams,
    distance_km: f64,
    placement: DetectorPlacement,
    seed: u64,
) -> Result<ObservedCounts> {
    let mean = expected_observations(protocol, channel, distance_km, placement)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lambda: f64| -> Result<f64> {
        if lambda <= 0.0 {
            return Ok(0.0);
        }
        let dist = Poisson::new(lambda).map_err(|_| Error::Domain {
            name: "poisson mean",
            value: lambda,
            expected: "finite and > 0",
        })?;
        Ok(dist.sample(&mut rng))
    };
    let n_2mu = draw(mean.n_2mu)?;
    let n_2nu = draw(mean.n_2nu)?;
    let n_0 = draw(mean.n_0)?;
    if n_2mu == 0.0 {
        return Err(Error::NoDetections);
    }
    let errors = Binomial::new(n_2mu as u64, mean.e_bit)
        .map_err(|_| Error::Domain {
            name: "e_bit",
            value: mean.e_bit,
            expected: "[0, 1]",
        })?
        .sample(&mut rng);
    ObservedCounts::new(n_2mu, n_2nu, n_0, errors as f64 / n_2mu)
}
