//! DCF-like transmission of one packet copy.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::interference::BusyTimeline;
use crate::time::{DurationNs, TimePoint};
use crate::trace::{AttemptTrace, CopyRecord, PhyParams};

/// Piecewise-constant change of the per-attempt loss probability, effective
/// from `from` onwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPhase {
    pub from: TimePoint,
    pub loss_prob: f64,
}

/// Whole-attempt error process: an attempt either fails as a unit (DATA
/// and ACK together) or succeeds; an ACK is never lost on its own.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub loss_prob: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<LossPhase>,
}

impl ErrorModel {
    pub fn iid(loss_prob: f64) -> Self {
        ErrorModel { loss_prob, schedule: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.loss_prob) || self.schedule.iter().any(|ph| !ok(ph.loss_prob)) {
            return Err("loss probabilities must lie in [0, 1]".into());
        }
        if self.schedule.windows(2).any(|w| w[0].from >= w[1].from) {
            return Err("loss schedule must be strictly increasing in time".into());
        }
        Ok(())
    }

    pub fn prob_at(&self, t: TimePoint) -> f64 {
        self.schedule.iter().take_while(|ph| ph.from <= t).last().map_or(self.loss_prob, |ph| ph.loss_prob)
    }
}

/// Mutable per-channel simulation state.
pub struct ChannelState {
    pub timeline: BusyTimeline,
    pub backoff_rng: ChaCha8Rng,
    pub error_rng: ChaCha8Rng,
    /// The MAC is busy with earlier copies until this instant.
    pub free_at: TimePoint,
}

/// Carrier sense: waits for DIFS of idle medium, then counts down `slots`
/// backoff slots, freezing while the medium is busy. The attempt starts
/// only when its whole `reserve` span fits before the next busy interval,
/// so no attempt overlaps interference.
fn access(
    timeline: &mut BusyTimeline,
    mut t: TimePoint,
    mut slots: u64,
    phy: &PhyParams,
    reserve: DurationNs,
) -> TimePoint {
    let slot = phy.slot_time.0;
    loop {
        let Some(busy) = timeline.next_busy(t) else {
            return TimePoint(t.0 + phy.difs.0 + slots * slot);
        };
        if busy.start <= t {
            t = busy.end;
            continue;
        }
        let idle = busy.start.0 - t.0;
        if idle < phy.difs.0 {
            t = busy.end;
            continue;
        }
        let after_difs = idle - phy.difs.0;
        if slots * slot + reserve.0 <= after_difs {
            return TimePoint(t.0 + phy.difs.0 + slots * slot);
        }
        slots -= slots.min(after_difs / slot);
        t = busy.end;
    }
}

/// Transmits one copy requested at `request_time`: up to `retry_limit`
/// attempts, each preceded by DIFS and a uniform backoff in `[0, CW]` with CW
/// doubling per failure. A successful attempt spans DATA + SIFS + ACK, a
/// failed one DATA + ACKtimeout.
pub fn simulate_copy(
    state: &mut ChannelState,
    request_time: TimePoint,
    phy: &PhyParams,
    errors: &ErrorModel,
    keep_trace: bool,
) -> CopyRecord {
    let mut t = request_time.max(state.free_at);
    let mut trace = Vec::new();
    let tail = (phy.sifs + phy.ack_frame_duration).max(phy.ack_timeout);
    let mut outcome = None;
    let mut last_data = phy.data_duration(1);

    for ordinal in 1..=phy.retry_limit {
        let cw = phy.contention_window(ordinal);
        let slots = state.backoff_rng.random_range(0..=cw) as u64;
        let data = phy.data_duration(ordinal);
        last_data = data;
        let start = access(&mut state.timeline, t, slots, phy, data + tail);
        let failed = state.error_rng.random::<f64>() < errors.prob_at(start);
        trace.push(AttemptTrace {
            ordinal,
            start_on_air: start,
            data_duration: data,
            ack_duration: (!failed).then_some(phy.ack_frame_duration),
            succeeded: !failed,
        });
        if failed {
            t = start + data + phy.ack_timeout;
        } else {
            outcome = Some(start + data + phy.sifs + phy.ack_frame_duration);
            break;
        }
    }

    let t_x = outcome.unwrap_or(t);
    state.free_at = t_x;
    CopyRecord {
        loss: outcome.is_none(),
        t_t: request_time,
        t_x,
        attempts: trace.len() as u32,
        final_data_duration: Some(last_data),
        final_ack_duration: outcome.map(|_| phy.ack_frame_duration),
        full_trace: keep_trace.then_some(trace),
    }
}
