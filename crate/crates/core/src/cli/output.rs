//! CSV rows and the JSON sidecar.

use serde::Serialize;

use super::config::RunConfig;
use crate::constraints::SecurityBudget;
use crate::keyrate::KeyRateReport;

pub const CSV_HEADER: [&str; 13] = [
    "L_km",
    "mu",
    "nu",
    "p_mu",
    "p_nu",
    "p_o",
    "n_bit",
    "e_bit",
    "e_ph_upper",
    "key_length",
    "key_rate",
    "plob_rate",
    "status",
];

pub fn csv_header() -> String {
    CSV_HEADER.join(",")
}

/// One analyzed distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    #[serde(flatten)]
    pub report: KeyRateReport,
    /// Grid points analyzed when the parameters were optimized.
    pub evaluations: Option<usize>,
}

impl PointRecord {
    pub fn new(report: KeyRateReport, evaluations: Option<usize>) -> Self {
        PointRecord {
            report,
            evaluations,
        }
    }

    fn csv_fields(&self) -> Vec<String> {
        let r = &self.report;
        let p = &r.protocol;
        let mut out: Vec<String> = [
            r.distance_km,
            p.mu.value(),
            p.nu.value(),
            p.p_mu,
            p.p_nu,
            p.p_o,
            r.n_bit,
            r.e_bit,
            r.e_ph_upper,
            r.key_length,
            r.key_rate,
            r.plob_rate,
        ]
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect();
        out.push(r.status.as_str().to_string());
        out
    }
}

pub fn write_csv(records: &[PointRecord]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub budget: SecurityBudget,
    pub points: Vec<PointRecord>,
}

impl Sidecar {
    pub fn new(
        command: &'static str,
        config: RunConfig,
        budget: SecurityBudget,
        points: Vec<PointRecord>,
    ) -> Self {
        Sidecar {
            tool: "tfkey",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            budget,
            points,
        }
    }
}
