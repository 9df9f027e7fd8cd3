use std::io;

use thiserror::Error;

use crate::time::{DurationNs, SignedDurationNs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid duration `{0}` (expected an integer with ns, us, ms or s suffix)")]
pub struct ParseDurationError(pub String);

/// Violations of record-level invariants and reconstruction preconditions.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("final DATA frame duration unavailable for a failed copy")]
    MissingDuration,
    #[error("latency is undefined for a lost copy")]
    LostCopy,
    #[error("timestamps inconsistent with frame durations")]
    InconsistentTimestamps,
    #[error("packet {index}: {reason}")]
    InvalidPacket { index: u64, reason: String },
    #[error("invalid run metadata: {0}")]
    InvalidMeta(String),
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: TraceError,
    },
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error(transparent)]
    Duration(#[from] ParseDurationError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DaError {
    #[error("timed duplicate deferral requires a duplex log, got {0} channels")]
    NotDuplex(usize),
    #[error("packet {0}: full attempt trace required for the exact oracle")]
    MissingTrace(u64),
    #[error("deferral {td} exceeds the stationarity limit {limit} (use force to override)")]
    DeferralOutOfRange { td: SignedDurationNs, limit: DurationNs },
    #[error("log was recorded with real deferral {recorded}, cannot analyze it at {requested}")]
    DeferralMismatch { recorded: SignedDurationNs, requested: SignedDurationNs },
    #[error("virtual deferral needs a log recorded without real deferral")]
    AlreadyDeferred,
    #[error("packet {index}, channel {channel}: {source}")]
    Copy {
        index: u64,
        channel: crate::trace::ChannelId,
        #[source]
        source: TraceError,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("grid point {index}: {source}")]
    Point {
        index: usize,
        #[source]
        source: DaError,
    },
    #[error(transparent)]
    Da(#[from] DaError),
}
