//! Experiment drivers, log-log fits, records and report writers.

mod experiments;
mod identity;

pub use experiments::*;
pub use identity::*;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Fits with an RMS residual above this (natural-log units) are inconclusive.
pub const RESIDUAL_GATE: f64 = 0.2;

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub points: Vec<[f64; 2]>,
    pub slope: f64,
    pub intercept: f64,
    /// root mean square of the log residuals
    pub residual: f64,
}

pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            min: 4,
            got: points.len(),
        });
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(x, y) in points {
        for v in [x, y] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive(v));
            }
        }
        logs.push([x.ln(), y.ln()]);
    }
    fit_line(&logs)
}

/// Least-squares line through the points as given (no logarithms).
pub fn fit_line(points: &[[f64; 2]]) -> Result<SlopeFit> {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / k;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p[0] - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameters("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points.iter().map(|p| (p[1] - intercept - slope * p[0]).powi(2)).sum::<f64>() / k).sqrt();
    Ok(SlopeFit {
        points: points.to_vec(),
        slope,
        intercept,
        residual,
    })
}

impl SlopeFit {
    pub fn conclusive(&self) -> bool {
        self.residual <= RESIDUAL_GATE
    }

    fn gated(&self, name: &str, ok: bool, bound: String) -> Check {
        let outcome = if !self.conclusive() {
            Outcome::Inconclusive
        } else if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        Check {
            name: name.into(),
            observed: self.slope,
            bound,
            outcome,
        }
    }

    /// `|slope - target| <= tol`.
    pub fn check_within(&self, name: &str, target: f64, tol: f64) -> Check {
        self.gated(name, (self.slope - target).abs() <= tol, format!("{target} ± {tol}"))
    }

    pub fn check_at_most(&self, name: &str, bound: f64) -> Check {
        self.gated(name, self.slope <= bound, format!("<= {bound}"))
    }

    pub fn check_at_least(&self, name: &str, bound: f64) -> Check {
        self.gated(name, self.slope >= bound, format!(">= {bound}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Inconclusive,
    Fail,
}

/// One asserted quantity with its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub bound: String,
    pub outcome: Outcome,
}

impl Check {
    pub fn at_most(name: &str, observed: f64, bound: f64) -> Self {
        Self::plain(name, observed, observed <= bound, format!("<= {bound}"))
    }

    pub fn at_least(name: &str, observed: f64, bound: f64) -> Self {
        Self::plain(name, observed, observed >= bound, format!(">= {bound}"))
    }

    fn plain(name: &str, observed: f64, ok: bool, bound: String) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

/// One sweep point: inputs, measured and predicted values, diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub inputs: BTreeMap<String, Value>,
    pub measured: BTreeMap<String, f64>,
    #[serde(default)]
    pub predicted: BTreeMap<String, f64>,
    pub tail: f64,
    /// wall clock; dropped from canonical output
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            ..Self::default()
        }
    }

    pub fn input(mut self, key: &str, value: impl Serialize) -> Self {
        self.inputs
            .insert(key.into(), serde_json::to_value(value).expect("serializable input"));
        self
    }

    pub fn measure(&mut self, key: &str, value: f64) {
        self.measured.insert(key.into(), value);
    }

    pub fn predict(&mut self, key: &str, value: f64) {
        self.predicted.insert(key.into(), value);
    }

    pub fn note_tail(&mut self, tail: f64) {
        self.tail = self.tail.max(tail);
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.duration_s = Some(start.elapsed().as_secs_f64());
        self
    }
}

/// Everything a sweep produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub experiment: String,
    pub settings: Value,
    pub records: Vec<ExperimentRecord>,
    pub fits: BTreeMap<String, SlopeFit>,
    pub checks: Vec<Check>,
    pub outcome: Outcome,
}

impl SweepReport {
    pub fn new(experiment: &str, settings: impl Serialize) -> Self {
        Self {
            experiment: experiment.into(),
            settings: serde_json::to_value(settings).expect("serializable settings"),
            records: Vec::new(),
            fits: BTreeMap::new(),
            checks: Vec::new(),
            outcome: Outcome::Pass,
        }
    }

    pub fn push_check(&mut self, check: Check) {
        self.outcome = self.outcome.max(check.outcome);
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Same report without wall-clock fields, for bit-identical reruns.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.records {
            r.duration_s = None;
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite report")
    }
}

/// RFC-4180 CSV, one row per record, columns the union of all keys.
pub fn records_to_csv(records: &[ExperimentRecord]) -> Result<String> {
    let mut inputs = std::collections::BTreeSet::new();
    let mut measured = std::collections::BTreeSet::new();
    let mut predicted = std::collections::BTreeSet::new();
    for r in records {
        inputs.extend(r.inputs.keys().cloned());
        measured.extend(r.measured.keys().cloned());
        predicted.extend(r.predicted.keys().cloned());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(inputs.iter().cloned());
    header.extend(measured.iter().map(|k| format!("measured.{k}")));
    header.extend(predicted.iter().map(|k| format!("predicted.{k}")));
    header.push("tail".into());
    let csv_err = |e: csv::Error| Error::InvalidParameters(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.experiment.clone()];
        for k in &inputs {
            row.push(match r.inputs.get(k) {
                None => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            });
        }
        for k in &measured {
            row.push(r.measured.get(k).map(|v| v.to_string()).unwrap_or_default());
        }
        for k in &predicted {
            row.push(r.predicted.get(k).map(|v| v.to_string()).unwrap_or_default());
        }
        row.push(r.tail.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameters(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = (1..=6).map(|i| (i as f64, (i * i) as f64)).collect();
        let fit = fit_log_slope(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        let flat: Vec<_> = (1..=5).map(|i| (i as f64, 3.0)).collect();
        assert!(fit_log_slope(&flat).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_sqrt() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..20)
            .map(|i| {
                let x = 2f64.powf(i as f64 / 2.0);
                (x, x.sqrt() * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            })
            .collect();
        let fit = fit_log_slope(&pts).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.02);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(fit_log_slope(&[(1.0, 1.0); 3]), Err(Error::TooFewPoints { .. })));
        let pts = [(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)];
        assert!(matches!(fit_log_slope(&pts), Err(Error::NonPositive(_))));
    }

    #[test]
    fn residual_gate_marks_inconclusive() {
        let pts = [(1.0, 1.0), (2.0, 10.0), (3.0, 0.1), (4.0, 5.0)];
        let fit = fit_log_slope(&pts).unwrap();
        assert!(!fit.conclusive());
        assert_eq!(fit.check_at_most("x", 100.0).outcome, Outcome::Inconclusive);
    }

    #[test]
    fn csv_has_union_columns() {
        let mut a = ExperimentRecord::new("e").input("N", 4);
        a.measure("norm", 1.5);
        let mut b = ExperimentRecord::new("e").input("family", "power, q=2");
        b.predict("slope", 0.5);
        let text = records_to_csv(&[a, b]).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers().unwrap().clone();
        assert_eq!(
            header.iter().collect::<Vec<_>>(),
            ["experiment", "N", "family", "measured.norm", "predicted.slope", "tail"]
        );
        let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(&rows[1][2], "power, q=2");
        assert!(text.contains("\"power, q=2\""));
    }
}
