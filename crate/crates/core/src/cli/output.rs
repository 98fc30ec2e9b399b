//! CSV and JSON serialization of sweep results and efficiency tables.

use std::fmt::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::baselines::EfficiencyReport;
use crate::engine::SweepResult;
use crate::system::SystemConfig;

pub const CSV_HEADER: &str =
    "scheme,M,K,snr_db,trials,nmse_mean,nmse_median,leakage_mean,aligned_rank,analytic_nmse,dof_slope";
pub const COMPARE_HEADER: &str = "scheme,M,K,streams,efficiency_num,efficiency_den";
pub const JSON_SCHEMA_VERSION: u32 = 1;

/// Provenance embedded in every result file. Lines starting with `#` in CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
    pub config: SystemConfig,
}

impl RunManifest {
    pub fn new(config: &SystemConfig, out: Option<&Path>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: out
                .map(|p| vec![p.display().to_string()])
                .unwrap_or_else(|| vec!["<stdout>".to_string()]),
            config: config.clone(),
        }
    }

    fn csv_preamble(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {} {}", self.tool, self.version);
        let _ = writeln!(s, "# timestamp: {}", self.timestamp);
        let _ = writeln!(s, "# outputs: {}", self.outputs.join(";"));
        for line in self.config.to_kv_string().lines() {
            let _ = writeln!(s, "# config: {line}");
        }
        s
    }
}

/// Twelve significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        "nan".to_string()
    }
}

pub fn sweep_csv(manifest: &RunManifest, result: &SweepResult) -> String {
    let cfg = &result.config;
    let slope = fmt_float(result.dof_slope.unwrap_or(f64::NAN));
    let mut s = manifest.csv_preamble();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for p in &result.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            cfg.scheme,
            cfg.antennas,
            cfg.devices,
            fmt_float(p.snr_db),
            p.trials,
            fmt_float(p.nmse_mean),
            fmt_float(p.nmse_median),
            fmt_float(p.leakage_mean),
            p.aligned_rank,
            fmt_float(p.analytic_nmse),
            slope,
        );
    }
    s
}

pub fn sweep_json(manifest: &RunManifest, result: &SweepResult) -> String {
    let cfg = &result.config;
    let points: Vec<_> = result
        .points
        .iter()
        .map(|p| {
            json!({
                "scheme": cfg.scheme,
                "M": cfg.antennas,
                "K": cfg.devices,
                "snr_db": p.snr_db,
                "trials": p.trials,
                "nmse_mean": p.nmse_mean,
                "nmse_se": p.nmse_se,
                "nmse_median": p.nmse_median,
                "leakage_mean": p.leakage_mean,
                "aligned_rank": p.aligned_rank,
                "analytic_nmse": p.analytic_nmse,
                "function_error_mean": p.function_error_mean,
                "tx_power_mean": p.tx_power_mean,
            })
        })
        .collect();
    let doc = json!({
        "schema_version": JSON_SCHEMA_VERSION,
        "manifest": manifest,
        "dof_slope": result.dof_slope,
        "points": points,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("sweep results serialize");
    s.push('\n');
    s
}

pub fn compare_csv(rows: &[EfficiencyReport]) -> String {
    let mut s = String::new();
    s.push_str(COMPARE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.scheme,
            r.antennas,
            r.devices,
            r.streams,
            r.efficiency.numer(),
            r.efficiency.denom()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_twelve_digits() {
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }
}
