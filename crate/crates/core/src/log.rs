//! Step records and newline-delimited trajectory logs.
//!
//! A trajectory file is one JSON header line followed by one JSON
//! [`LogRecord`] line per control step. `serde_json` round-trips `f64`
//! exactly, so a log replays bit-for-bit on the build that wrote it.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::env::EnvState;
use crate::obs::{Observation, PrivilegedObservation};
use crate::reward::RewardTerms;
use crate::{SimError, SimResult};

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    None,
    Timeout,
    LowZ,
    AlignFail,
}

/// One control-step record. The observation pair is the post-step one (the
/// terminal observation on episode end); `action` is the commanded action
/// before exploration noise or lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Observation,
    pub priv_obs: PrivilegedObservation,
    pub action: Vec<f64>,
    pub reward_total: f64,
    pub reward_terms: RewardTerms,
    pub done: bool,
    pub done_reason: DoneReason,
}

/// First line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// Full environment state at episode start, sufficient to re-simulate.
    pub initial_state: EnvState,
}

pub const LOG_VERSION: u32 = 1;

/// One step line: the transition plus the state trace evaluators need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: usize,
    /// Lid angle after the step, rad.
    pub lid_angle: f64,
    /// Bottle root height after the step, m.
    pub root_z: f64,
    pub transition: Transition,
}

/// Incremental trajectory writer.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W, header: &TrajectoryHeader) -> SimResult<Self> {
        let line = serde_json::to_string(header).map_err(|e| SimError::Config(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| SimError::Config(e.to_string()))?;
        Ok(Self { out })
    }

    pub fn record(&mut self, rec: &LogRecord) -> SimResult<()> {
        let line = serde_json::to_string(rec).map_err(|e| SimError::Config(e.to_string()))?;
        writeln!(self.out, "{line}").map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn finish(mut self) -> SimResult<()> {
        self.out.flush().map_err(|e| SimError::Config(e.to_string()))
    }
}

/// Parse a whole trajectory file.
pub fn read_trajectory<R: BufRead>(reader: R) -> SimResult<(TrajectoryHeader, Vec<LogRecord>)> {
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| SimError::Config("empty trajectory file".into()))?
        .map_err(|e| SimError::Config(e.to_string()))?;
    let header: TrajectoryHeader =
        serde_json::from_str(&header_line).map_err(|e| SimError::Config(format!("bad header: {e}")))?;
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(|e| SimError::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord =
            serde_json::from_str(&line).map_err(|e| SimError::Config(format!("bad record: {e}")))?;
        records.push(rec);
    }
    Ok((header, records))
}
