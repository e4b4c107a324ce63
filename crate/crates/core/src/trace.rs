//! Per-iteration solver records shared by the Newton solver and the baseline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::FaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    Newton,
    GradientFallback,
    /// One block-coordinate sweep of the first-order baseline.
    BlockCoordinate,
    /// No step was taken from this iterate (final row of a solve).
    None,
}

impl DirectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionKind::Newton => "newton",
            DirectionKind::GradientFallback => "gradient-fallback",
            DirectionKind::BlockCoordinate => "bcd",
            DirectionKind::None => "none",
        }
    }
}

impl fmt::Display for DirectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DirectionKind {
    type Err = FaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newton" => Ok(DirectionKind::Newton),
            "gradient-fallback" => Ok(DirectionKind::GradientFallback),
            "bcd" => Ok(DirectionKind::BlockCoordinate),
            "none" => Ok(DirectionKind::None),
            other => Err(FaError::InvalidInput(format!("unknown direction kind `{other}`"))),
        }
    }
}

/// State at the start of one inner iteration and the step taken from it.
///
/// `step_alpha` is 0 and `direction_kind` is [`DirectionKind::None`] on the
/// last row of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub outer_iter: usize,
    pub tau: f64,
    pub inner_iter: usize,
    pub objective_h_tau: f64,
    pub objective_f: f64,
    pub residual_normalized: f64,
    pub support_size: usize,
    pub step_alpha: f64,
    pub direction_kind: DirectionKind,
    pub wall_time_ns: u128,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
}

impl SolveTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows that took a step, i.e. inner iterations performed.
    pub fn steps(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.direction_kind != DirectionKind::None)
            .count()
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.rows.last().map(|r| r.residual_normalized)
    }

    /// Number of steps taken before the residual first dropped to `tol`,
    /// or `None` if it never did.
    pub fn steps_to_residual(&self, tol: f64) -> Option<usize> {
        let mut steps = 0;
        for r in &self.rows {
            if r.residual_normalized <= tol {
                return Some(steps);
            }
            if r.direction_kind != DirectionKind::None {
                steps += 1;
            }
        }
        None
    }

    /// Distinct barrier values in order of appearance.
    pub fn distinct_taus(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.tau) {
                out.push(r.tau);
            }
        }
        out
    }

    pub fn extend(&mut self, other: SolveTrace) {
        self.rows.extend(other.rows);
    }
}

/// Monotone nanosecond clock for trace stamps.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
        }
    }

    pub fn elapsed_ns(&self) -> u128 {
        self.start.elapsed().as_nanos()
    }
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::start()
    }
}
