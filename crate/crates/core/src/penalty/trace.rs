//! Per-iteration solver traces.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One row of a solve trace. Row 0 of every stage records the state the
/// stage started from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub stage: usize,
    pub mu: f64,
    pub objective: f64,
    pub violation: f64,
    pub residual: f64,
    pub seconds: f64,
    /// The step came from an accepted extrapolation.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

impl SolveTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Largest objective increase between consecutive records of the same
    /// stage, relative to `max(1, |previous|)`. Zero for a monotone trace.
    pub fn worst_stage_increase(&self) -> f64 {
        self.records
            .windows(2)
            .filter(|w| w[0].stage == w[1].stage)
            .map(|w| (w[1].objective - w[0].objective) / w[0].objective.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// Objective non-increasing within every stage up to `tol` (relative).
    pub fn is_stage_monotone(&self, tol: f64) -> bool {
        self.worst_stage_increase() <= tol
    }

    /// CSV with columns `iter,mu,objective,violation,residual,seconds`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["iter", "mu", "objective", "violation", "residual", "seconds"])?;
        for r in &self.records {
            out.write_record([
                r.iter.to_string(),
                r.mu.to_string(),
                r.objective.to_string(),
                r.violation.to_string(),
                r.residual.to_string(),
                r.seconds.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
