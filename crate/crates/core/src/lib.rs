//! Simulation and post-analysis of PRP-style seamless redundancy over Wi-Fi.
//!
//! * [`trace`] holds the per-copy records an adapter can report, timestamp
//!   reconstruction and PRP duplicate discard.
//! * [`codec`] reads and writes JSON-lines run logs.
//! * [`sim`] generates duplex runs with a DCF-like MAC, bursty interference
//!   and optional transmission deferral.
//! * [`da`] evaluates reactive and deferral-based duplication avoidance on a
//!   log, both as adapter-view bounds and as an exact full-trace oracle.
//! * [`metrics`] aggregates spectrum-consumption and latency statistics and
//!   runs parameter sweeps.

pub mod codec;
pub mod config;
pub mod da;
pub mod error;
pub mod metrics;
pub mod sim;
pub mod time;
pub mod trace;

pub use error::{CodecError, ConfigError, DaError, MetricsError, TraceError};
pub use time::{DurationNs, SignedDurationNs, TimePoint};
pub use trace::{ChannelId, CopyRecord, PacketRecord, PhyParams, RunLog, RunMeta};
