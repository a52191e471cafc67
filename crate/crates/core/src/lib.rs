//! Finite-key analysis of twin-field quantum key distribution with discrete
//! phase randomization.
//!
//! The pipeline runs from channel model to observed counts
//! ([`channel`]), through the phase-error linear program
//! ([`constraints`], [`lp`]) to the key length ([`keyrate`]), with a grid
//! optimizer over the protocol parameters ([`optimize`]).

pub mod channel;
pub mod cli;
pub mod constraints;
pub mod error;
pub mod keyrate;
pub mod lp;
pub mod math;
pub mod optimize;

pub use channel::{ChannelParams, DetectorPlacement, ObservedCounts, ProtocolParams};
pub use constraints::{make_budget, SecurityBudget};
pub use error::{Error, Result};
pub use keyrate::{analyze, AnalysisMode, AnalysisOptions, KeyRateReport, RunStatus};
pub use math::Intensity;
