//! JSON run reports and CSV tables.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use brusselator_net::{HopfCurvePoint, Trajectory};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub const TOOL: &str = "brusselator-net";

/// Tolerances in effect for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub newton: f64,
    pub eigenvector_residual: f64,
    pub marginal: f64,
    pub hopf_bracket: f64,
    pub hopf_epsilon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; absent in reproducible outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub subcommand: String,
    pub scenario: ScenarioConfig,
    pub tolerances: Tolerances,
    pub results: serde_json::Value,
}

impl RunReport {
    pub fn new(subcommand: &str, scenario: &ScenarioConfig, tolerances: Tolerances, results: serde_json::Value) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: None,
            subcommand: subcommand.into(),
            scenario: scenario.clone(),
            tolerances,
            results,
        }
    }

    pub fn stamped(mut self) -> Self {
        self.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
        self
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Seventeen significant digits.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn eigenvalues_csv(ev: &[Complex64]) -> String {
    let mut s = String::from("index,re,im\n");
    for (k, z) in ev.iter().enumerate() {
        let _ = writeln!(s, "{k},{},{}", num(z.re), num(z.im));
    }
    s
}

pub fn perron_csv(xi: &[f64], eta: &[f64]) -> String {
    let mut s = String::from("index,xi,eta\n");
    for (k, (a, b)) in xi.iter().zip(eta).enumerate() {
        let _ = writeln!(s, "{k},{},{}", num(*a), num(*b));
    }
    s
}

/// Failed grid points keep their row with empty fields.
pub fn hopf_curve_csv(points: &[HopfCurvePoint]) -> String {
    let mut s = String::from("lambda,beta_hopf,nu,re_dmu_dbeta\n");
    for c in points {
        match &c.point {
            Some(p) => {
                let _ = writeln!(s, "{},{},{},{}", num(c.lambda), num(p.beta_hopf), num(p.nu), num(p.dmu_dbeta.re));
            }
            None => {
                let _ = writeln!(s, "{},,,", num(c.lambda));
            }
        }
    }
    s
}

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let n = tr.n;
    let mut s = String::from("t");
    for j in 1..=n {
        let _ = write!(s, ",x_{j}");
    }
    for j in 1..=n {
        let _ = write!(s, ",y_{j}");
    }
    s.push('\n');
    for (t, st) in tr.times.iter().zip(&tr.states) {
        s.push_str(&num(*t));
        for v in st {
            s.push(',');
            s.push_str(&num(*v));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin;

    #[test]
    fn csv_numbers_round_trip() {
        let v = 0.1 + 0.2;
        let s = num(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(num(f64::NAN), "");
    }

    #[test]
    fn report_round_trips() {
        let cfg = builtin("paper-5patch").unwrap();
        let tol = Tolerances {
            newton: 1e-12,
            eigenvector_residual: 1e-8,
            marginal: 1e-9,
            hopf_bracket: 1e-8,
            hopf_epsilon: 1e-3,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
        };
        let r = RunReport::new("perron", &cfg, tol, serde_json::json!({"xi": [1.0 / 3.0, 0.1 + 0.2]})).stamped();
        let back: RunReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn eigenvalue_table_layout() {
        let s = eigenvalues_csv(&[Complex64::new(1.0, -2.0)]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "index,re,im");
        assert!(lines[1].starts_with("0,1.0000000000000000e0,-2"));
    }
}
