use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagnostics of one completed iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based iteration count.
    pub iter: usize,
    /// `‖Mᵀx^k‖`, the fixed-point residual with the relaxation divided out.
    pub residual: f64,
    /// `max_i ‖x_i^k − x̄^k‖`.
    pub consensus: f64,
    /// Norm of the running average of `(Id − T)z^s / γ̄` over `s ≤ k`.
    pub ergodic: f64,
    pub metric: Option<f64>,
    /// Distance of the governor state to a supplied fixed point.
    pub fejer: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{:e}", x)).unwrap_or_default()
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// CSV with header `iter,residual,consensus,metric,fejer`; absent values
    /// are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,residual,consensus,metric,fejer\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{}",
                r.iter,
                r.residual,
                r.consensus,
                opt(r.metric),
                opt(r.fejer)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("traces always serialize")
    }
}

/// Least-squares slope of `log y` against `log k`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, y)| *k > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(k, y)| (k.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(Error::InsufficientTrace(format!(
            "{} usable points, need at least 2",
            logs.len()
        )));
    }
    let len = logs.len() as f64;
    let (mx, my) = logs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / len, b + y / len));
    let (sxy, sxx) = logs.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    Ok(sxy / sxx)
}

/// Fitted exponent of the ergodic residual over the second half of the trace.
pub fn ergodic_residual_rate(trace: &RunTrace) -> Result<f64> {
    if trace.len() < 100 {
        return Err(Error::InsufficientTrace(format!(
            "{} records, need at least 100",
            trace.len()
        )));
    }
    let half = trace.len() / 2;
    let points: Vec<(f64, f64)> = trace.records[half..]
        .iter()
        .map(|r| (r.iter as f64, r.ergodic))
        .collect();
    log_log_slope(&points)
}

/// Run outcome as a flat JSON-friendly record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations: usize,
    pub final_residual: f64,
    pub final_consensus: f64,
    pub wall_time_secs: f64,
    pub converged: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> RunTrace {
        RunTrace {
            records: (1..=400)
                .map(|k| TraceRecord {
                    iter: k,
                    residual: 0.0,
                    consensus: 0.0,
                    ergodic: f(k as f64),
                    metric: None,
                    fejer: None,
                })
                .collect(),
        }
    }

    #[test]
    fn rate_of_inverse_square_root() {
        let slope = ergodic_residual_rate(&synthetic(|k| 3.0 / k.sqrt())).unwrap();
        assert!((slope + 0.5).abs() < 1e-6);
    }

    #[test]
    fn rate_of_constant() {
        assert!(ergodic_residual_rate(&synthetic(|_| 2.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn short_trace_is_rejected() {
        let mut t = synthetic(|_| 1.0);
        t.records.truncate(99);
        assert!(matches!(ergodic_residual_rate(&t), Err(Error::InsufficientTrace(_))));
    }

    #[test]
    fn csv_leaves_absent_fields_empty() {
        let mut t = synthetic(|_| 1.0);
        t.records.truncate(2);
        t.records[1].metric = Some(0.5);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iter,residual,consensus,metric,fejer");
        assert_eq!(lines[1], "1,0e0,0e0,,");
        assert_eq!(lines[2], "2,0e0,0e0,5e-1,");
    }
}
