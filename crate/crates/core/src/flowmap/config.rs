use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FlowMapError;

/// How particle end positions are sampled along the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMapStrategy {
    /// Seeds advected once from t = 0, recorded at every file cycle.
    Long,
    /// Seeds reset to their original positions at the start of every interval.
    Short,
}

impl fmt::Display for FlowMapStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowMapStrategy::Long => "long",
            FlowMapStrategy::Short => "short",
        })
    }
}

impl FromStr for FlowMapStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long" => Ok(Self::Long),
            "short" => Ok(Self::Short),
            other => Err(format!("unknown flow-map strategy `{other}` (expected long|short)")),
        }
    }
}

/// Step size `delta`, file-cycle interval `interval` (cycles between file
/// cycles) and total duration. The number of file cycles is
/// `n = floor(duration / (delta * interval))`; trailing cycles past `n·C` are
/// never advected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub delta: f64,
    pub interval: u32,
    pub duration: f64,
    pub strategy: FlowMapStrategy,
}

impl ExtractionConfig {
    pub fn new(
        delta: f64,
        interval: u32,
        duration: f64,
        strategy: FlowMapStrategy,
    ) -> Result<Self, FlowMapError> {
        let cfg = Self { delta, interval, duration, strategy };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FlowMapError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(FlowMapError::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.interval == 0 {
            return Err(FlowMapError::Config("interval must be at least 1".into()));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(FlowMapError::Config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.file_cycles() == 0 {
            return Err(FlowMapError::Config(format!(
                "duration {} is shorter than one file cycle ({} x {}), so n = 0",
                self.duration, self.interval, self.delta
            )));
        }
        Ok(())
    }

    /// `n`, the number of recorded file cycles.
    pub fn file_cycles(&self) -> usize {
        let ratio = self.duration / (self.delta * self.interval as f64);
        // absorb representation error such as 10 / (0.01 * 50) = 19.999…
        (ratio + 1e-9).floor().max(0.0) as usize
    }

    /// Total advected cycles, `n·C`.
    pub fn total_cycles(&self) -> u32 {
        self.file_cycles() as u32 * self.interval
    }

    /// The recorded file cycles `C, 2C, ..., nC`.
    pub fn cycle_list(&self) -> Vec<u32> {
        (1..=self.file_cycles() as u32).map(|j| j * self.interval).collect()
    }

    /// Simulation time at the start of `cycle`.
    pub fn time_at(&self, cycle: u32) -> f64 {
        cycle as f64 * self.delta
    }

    pub fn is_file_cycle(&self, cycle: u32) -> bool {
        cycle >= self.interval && cycle.is_multiple_of(self.interval) && cycle <= self.total_cycles()
    }
}
