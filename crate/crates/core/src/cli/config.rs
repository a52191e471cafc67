//! JSON run configuration.

use serde::{Deserialize, Deserializer, Serialize};

use crate::channel::{ChannelParams, DetectorPlacement, ProtocolParams};
use crate::constraints::{make_budget, SecurityBudget};
use crate::error::Error;
use crate::keyrate::{AnalysisMode, AnalysisOptions};
use crate::optimize::SearchSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_total_pe: Option<f64>,
    pub eps_cor: f64,
    pub eps_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Distances {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Distances {
    /// Expanded list; a range includes `stop` when it lands on the grid.
    pub fn expand(&self) -> Result<Vec<f64>, String> {
        let list = match *self {
            Distances::List(ref v) => v.clone(),
            Distances::Range { start, stop, step } => {
                if !(step > 0.0 && start.is_finite() && stop.is_finite()) || stop < start {
                    return Err("distances: range needs start <= stop and step > 0".into());
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return Err("distances: range has too many points".into());
                }
                (0..=n).map(|i| start + step * i as f64).collect()
            }
        };
        if list.is_empty() {
            return Err("distances: at least one distance is required".into());
        }
        if let Some(d) = list.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(format!("distances: {d} is not a finite distance >= 0"));
        }
        if list.windows(2).any(|w| w[1] <= w[0]) {
            return Err("distances: must be strictly increasing".into());
        }
        Ok(list)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedProtocol {
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_nu: f64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub channel: ChannelParams,
    pub phase_slices: usize,
    #[serde(deserialize_with = "integral_count")]
    pub n_tot: u64,
    pub budget: BudgetConfig,
    pub distances: Distances,
    #[serde(default)]
    pub mode: AnalysisMode,
    #[serde(default)]
    pub optimize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<FixedProtocol>,
    #[serde(default)]
    pub search: SearchSpace,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default)]
    pub detector_in_transmittance: bool,
    #[serde(default)]
    pub plob_includes_detector: bool,
}

/// Accepts `1000000` as well as `1e6`, provided the value is a positive
/// integer.
fn integral_count<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        Int(u64),
        Float(f64),
    }
    match Num::deserialize(d)? {
        Num::Int(v) => Ok(v),
        Num::Float(f) if f.fract() == 0.0 && (1.0..1.8e19).contains(&f) => Ok(f as u64),
        Num::Float(f) => Err(serde::de::Error::custom(format!(
            "expected a positive integer, found {f}"
        ))),
    }
}

/// Parses a configuration, reporting the JSON path of any field that fails.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        format!("{path}: {}", e.into_inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        let field = |name: &str, e: Error| format!("{name}: {e}");
        self.channel.validate().map_err(|e| field("channel", e))?;
        self.budget().map_err(|e| format!("budget: {e}"))?;
        self.distances.expand()?;
        if self.n_tot == 0 {
            return Err("n_tot: must be positive".into());
        }
        if self.optimize {
            self.search.validate().map_err(|e| field("search", e))?;
        } else if self.protocol.is_none() {
            return Err("protocol: required when optimize is false".into());
        }
        if let Some(p) = self.protocol {
            self.protocol_params(p).map_err(|e| field("protocol", e))?;
        }
        Ok(())
    }

    pub fn budget(&self) -> Result<SecurityBudget, String> {
        let b = &self.budget;
        let m = self.phase_slices;
        match (b.eps_a, b.eps_total_pe) {
            (Some(a), None) => make_budget(a, m, b.eps_cor, b.eps_pa).map_err(|e| e.to_string()),
            (None, Some(t)) => {
                SecurityBudget::from_total(t, m, b.eps_cor, b.eps_pa).map_err(|e| e.to_string())
            }
            _ => Err("exactly one of eps_a and eps_total_pe must be given".into()),
        }
    }

    pub fn protocol_params(&self, p: FixedProtocol) -> Result<ProtocolParams, Error> {
        ProtocolParams::new(p.mu, p.nu, p.p_mu, p.p_nu, self.phase_slices, self.n_tot)
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            mode: self.mode,
            placement: if self.detector_in_transmittance {
                DetectorPlacement::InTransmittance
            } else {
                DetectorPlacement::Excluded
            },
            plob_includes_detector: self.plob_includes_detector,
            ..AnalysisOptions::default()
        }
    }
}
