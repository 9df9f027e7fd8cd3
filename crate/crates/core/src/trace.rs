//! Per-copy transmission records, timestamp reconstruction and PRP pairing.
//!
//! A copy of packet `i` on channel `C` is described by the tuple the driver
//! can observe: loss flag, request time `t_T`, end-of-transmission time
//! `t_X`, attempt count `w`, and the DATA/ACK frame durations of the final
//! attempt. Logs produced by the simulator may additionally carry the full
//! per-attempt trace, which the analysis layer uses as an exact oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TraceError;
use crate::time::{DurationNs, SignedDurationNs, TimePoint};

/// Physical channel of a redundant link. Index 0 is `A`, 1 is `B`, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(pub u8);

impl ChannelId {
    pub const A: ChannelId = ChannelId(0);
    pub const B: ChannelId = ChannelId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> char {
        (b'A' + self.0) as char
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for ChannelId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c @ 'A'..='Z'), None) => Ok(ChannelId(c as u8 - b'A')),
            _ => Err(format!("invalid channel label `{s}`")),
        }
    }
}

impl Serialize for ChannelId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ChannelId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// MAC/PHY timing of one channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhyParams {
    pub sifs: DurationNs,
    pub ack_timeout: DurationNs,
    pub slot_time: DurationNs,
    pub difs: DurationNs,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    pub data_frame_duration: DurationNs,
    pub ack_frame_duration: DurationNs,
    /// Per-attempt DATA durations (attempt 1 first); attempts past the end
    /// reuse the last entry. Empty means `data_frame_duration` throughout.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data_duration_schedule: Vec<DurationNs>,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            sifs: DurationNs::from_us(16),
            ack_timeout: DurationNs::from_us(50),
            slot_time: DurationNs::from_us(9),
            difs: DurationNs::from_us(34),
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 21,
            data_frame_duration: DurationNs::from_us(80),
            ack_frame_duration: DurationNs::from_us(28),
            data_duration_schedule: Vec::new(),
        }
    }
}

impl PhyParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.retry_limit < 1 {
            return Err("retry_limit must be at least 1".into());
        }
        if self.cw_min > self.cw_max {
            return Err(format!("cw_min {} exceeds cw_max {}", self.cw_min, self.cw_max));
        }
        let durations = [
            ("sifs", self.sifs),
            ("ack_timeout", self.ack_timeout),
            ("slot_time", self.slot_time),
            ("difs", self.difs),
            ("data_frame_duration", self.data_frame_duration),
            ("ack_frame_duration", self.ack_frame_duration),
        ];
        for (name, d) in durations {
            if d == DurationNs::ZERO {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.data_duration_schedule.contains(&DurationNs::ZERO) {
            return Err("data_duration_schedule entries must be positive".into());
        }
        Ok(())
    }

    /// DATA frame duration of attempt `ordinal` (1-based).
    pub fn data_duration(&self, ordinal: u32) -> DurationNs {
        match self.data_duration_schedule.len() {
            0 => self.data_frame_duration,
            n => self.data_duration_schedule[(ordinal as usize - 1).min(n - 1)],
        }
    }

    /// Contention window before attempt `ordinal`: doubles per failure from
    /// `cw_min`, saturating at `cw_max`.
    pub fn contention_window(&self, ordinal: u32) -> u32 {
        let shift = (ordinal - 1).min(16);
        let cw = ((self.cw_min as u64 + 1) << shift) - 1;
        cw.min(self.cw_max as u64) as u32
    }
}

/// Ground-truth record of one transmission attempt. Simulator only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptTrace {
    pub ordinal: u32,
    pub start_on_air: TimePoint,
    pub data_duration: DurationNs,
    /// Present iff the attempt succeeded.
    pub ack_duration: Option<DurationNs>,
    pub succeeded: bool,
}

/// What the adapter reports for one copy of one packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyRecord {
    pub loss: bool,
    pub t_t: TimePoint,
    pub t_x: TimePoint,
    pub attempts: u32,
    pub final_data_duration: Option<DurationNs>,
    pub final_ack_duration: Option<DurationNs>,
    pub full_trace: Option<Vec<AttemptTrace>>,
}

impl CopyRecord {
    pub fn delivered(&self) -> bool {
        !self.loss
    }

    /// Checks record invariants against the channel's PHY timing.
    pub fn validate(&self, phy: &PhyParams) -> Result<(), String> {
        if self.attempts < 1 {
            return Err("attempt count must be at least 1".into());
        }
        if self.t_x <= self.t_t {
            return Err("t_X must be later than t_T".into());
        }
        if !self.loss {
            let (Some(td), Some(ta)) = (self.final_data_duration, self.final_ack_duration) else {
                return Err("delivered copy needs both final frame durations".into());
            };
            if self.t_x.checked_sub(td + phy.sifs + ta).is_none_or(|tw| tw < self.t_t) {
                return Err("final attempt would start before the transmission request".into());
            }
        } else if let Some(td) = self.final_data_duration {
            if self.t_x.checked_sub(td + phy.ack_timeout).is_none_or(|tw| tw < self.t_t) {
                return Err("final attempt would start before the transmission request".into());
            }
        }
        if let Some(trace) = &self.full_trace {
            if trace.len() != self.attempts as usize {
                return Err(format!("trace holds {} attempts, record says {}", trace.len(), self.attempts));
            }
            for (k, a) in trace.iter().enumerate() {
                if a.ordinal as usize != k + 1 {
                    return Err("trace ordinals must run 1..w".into());
                }
                if a.succeeded != a.ack_duration.is_some() {
                    return Err("ACK duration must be present iff the attempt succeeded".into());
                }
                let last = k + 1 == trace.len();
                if a.succeeded && !last {
                    return Err("only the final attempt may succeed".into());
                }
                if last && a.succeeded == self.loss {
                    return Err("final attempt outcome disagrees with the loss flag".into());
                }
                if a.start_on_air < self.t_t {
                    return Err("attempt starts before the transmission request".into());
                }
            }
            if trace.windows(2).any(|p| p[0].start_on_air >= p[1].start_on_air) {
                return Err("attempt starts must strictly increase".into());
            }
        }
        Ok(())
    }

    pub(crate) fn shifted(&self, by: DurationNs) -> CopyRecord {
        let mut out = self.clone();
        out.t_t = out.t_t + by;
        out.t_x = out.t_x + by;
        if let Some(trace) = &mut out.full_trace {
            for a in trace {
                a.start_on_air = a.start_on_air + by;
            }
        }
        out
    }

    /// Inverse of [`CopyRecord::shifted`]; `None` on underflow.
    pub(crate) fn unshifted(&self, by: DurationNs) -> Option<CopyRecord> {
        let mut out = self.clone();
        out.t_t = out.t_t.checked_sub(by)?;
        out.t_x = out.t_x.checked_sub(by)?;
        if let Some(trace) = &mut out.full_trace {
            for a in trace {
                a.start_on_air = a.start_on_air.checked_sub(by)?;
            }
        }
        Some(out)
    }
}

/// Start-on-air time of the final attempt of a copy.
///
/// Success: `t_W = t_X - (T_D + SIFS + T_A)`. Failure:
/// `t_W = t_X - (T_D + ACKtimeout)`, which needs the final DATA duration;
/// adapter-view logs do not carry it for failed copies.
pub fn derive_final_attempt_start(copy: &CopyRecord, phy: &PhyParams) -> Result<TimePoint, TraceError> {
    let span = if copy.delivered() {
        let td = copy.final_data_duration.ok_or(TraceError::MissingDuration)?;
        let ta = copy.final_ack_duration.ok_or(TraceError::MissingDuration)?;
        td + phy.sifs + ta
    } else {
        let td = copy.final_data_duration.ok_or(TraceError::MissingDuration)?;
        td + phy.ack_timeout
    };
    copy.t_x.checked_sub(span).ok_or(TraceError::InconsistentTimestamps)
}

/// Receive time of a delivered copy: `t_R = t_X - (SIFS + T_A)`.
pub fn derive_receive_time(copy: &CopyRecord, phy: &PhyParams) -> Result<TimePoint, TraceError> {
    if copy.loss {
        return Err(TraceError::LostCopy);
    }
    let ta = copy.final_ack_duration.ok_or(TraceError::MissingDuration)?;
    copy.t_x.checked_sub(phy.sifs + ta).ok_or(TraceError::InconsistentTimestamps)
}

/// Per-copy latency `d = t_R - t_T`.
pub fn copy_latency(copy: &CopyRecord, phy: &PhyParams) -> Result<DurationNs, TraceError> {
    derive_receive_time(copy, phy)?.since(copy.t_t).ok_or(TraceError::InconsistentTimestamps)
}

/// One packet with one copy per channel of the run, indexed by channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacketRecord {
    pub index: u64,
    pub copies: Vec<CopyRecord>,
}

impl PacketRecord {
    pub fn copy(&self, ch: ChannelId) -> &CopyRecord {
        &self.copies[ch.index()]
    }

    pub fn channels(&self) -> impl Iterator<Item = (ChannelId, &CopyRecord)> {
        self.copies.iter().enumerate().map(|(k, c)| (ChannelId(k as u8), c))
    }

    /// Packet generation time: the earliest request among its copies.
    pub fn generation_time(&self) -> TimePoint {
        self.copies.iter().map(|c| c.t_t).min().unwrap_or_default()
    }
}

/// Outcome of a packet on the redundant link after PRP duplicate discard.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkOutcome {
    pub lost: bool,
    pub latency: Option<DurationNs>,
    pub quickest: Option<ChannelId>,
}

/// Applies PRP pairing: the packet is lost only if every copy is lost; the
/// link receive time is the earliest copy receive time, measured from the
/// packet generation time (so deferred copies pay their offset).
///
/// The quickest channel is the one whose ACK arrived first (earliest
/// `t_X`), ties going to the lowest channel index.
pub fn link_outcome(packet: &PacketRecord, phys: &[PhyParams]) -> LinkOutcome {
    let generated = packet.generation_time();
    let mut quickest: Option<(ChannelId, TimePoint)> = None;
    let mut receive: Option<TimePoint> = None;
    for (ch, copy) in packet.channels() {
        if copy.loss {
            continue;
        }
        if quickest.is_none_or(|(_, tx)| copy.t_x < tx) {
            quickest = Some((ch, copy.t_x));
        }
        if let Ok(tr) = derive_receive_time(copy, &phys[ch.index()]) {
            receive = Some(receive.map_or(tr, |r| r.min(tr)));
        }
    }
    LinkOutcome {
        lost: quickest.is_none(),
        latency: receive.map(|r| r.since(generated).unwrap_or_default()),
        quickest: quickest.map(|(ch, _)| ch),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogView {
    AdapterOnly,
    FullTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeferralKind {
    Real,
    Virtual,
}

/// Transmission deferral applied to a run. A positive `td` delays the
/// channel other than `primary`; a negative one delays `primary` itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deferral {
    pub primary: ChannelId,
    pub td: SignedDurationNs,
    pub kind: DeferralKind,
}

impl Deferral {
    /// Deferral expressed with channel `A` as primary.
    pub fn td_from_a(&self) -> SignedDurationNs {
        if self.primary == ChannelId::A {
            self.td
        } else {
            SignedDurationNs(-self.td.0)
        }
    }

    /// Request-time offset of each duplex channel.
    pub fn offsets(&self) -> [DurationNs; 2] {
        offsets_from_a(self.td_from_a())
    }
}

/// Duplex request offsets `[A, B]` for a deferral expressed with `A` primary.
pub fn offsets_from_a(td: SignedDurationNs) -> [DurationNs; 2] {
    if td.0 >= 0 {
        [DurationNs::ZERO, td.abs()]
    } else {
        [td.abs(), DurationNs::ZERO]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub id: ChannelId,
    pub phy: PhyParams,
    #[serde(default)]
    pub interferers: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub packets: u64,
    pub period: DurationNs,
    pub channels: Vec<ChannelMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deferral: Option<Deferral>,
    pub view: LogView,
}

impl RunMeta {
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: String| Err(TraceError::InvalidMeta(m));
        if self.packets == 0 {
            return bad("a run needs at least one packet".into());
        }
        if self.period == DurationNs::ZERO {
            return bad("generation period must be positive".into());
        }
        if self.channels.is_empty() {
            return bad("a run needs at least one channel".into());
        }
        for (k, ch) in self.channels.iter().enumerate() {
            if ch.id.index() != k {
                return bad(format!("channel {} listed at position {k}", ch.id));
            }
            ch.phy.validate().map_err(|e| TraceError::InvalidMeta(format!("channel {}: {e}", ch.id)))?;
        }
        if self.deferral.is_some() && self.channels.len() != 2 {
            return bad("deferral requires exactly two channels".into());
        }
        Ok(())
    }

    pub fn phys(&self) -> Vec<PhyParams> {
        self.channels.iter().map(|c| c.phy.clone()).collect()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }
}

/// An ordered sequence of packet records with run metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLog {
    pub meta: RunMeta,
    pub packets: Vec<PacketRecord>,
}

impl RunLog {
    pub fn phys(&self) -> Vec<PhyParams> {
        self.meta.phys()
    }

    pub fn has_full_trace(&self) -> bool {
        self.meta.view == LogView::FullTrace
    }

    /// Checks every invariant, with request times of non-deferred copies
    /// required to coincide within `epsilon`.
    pub fn validate_with_epsilon(&self, epsilon: DurationNs) -> Result<(), TraceError> {
        self.meta.validate()?;
        if self.packets.len() as u64 != self.meta.packets {
            return Err(TraceError::InvalidMeta(format!(
                "header announces {} packets, log holds {}",
                self.meta.packets,
                self.packets.len()
            )));
        }
        let mut prev = 0;
        for p in &self.packets {
            self.validate_packet(p, prev, epsilon)?;
            prev = p.index;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        self.validate_with_epsilon(DurationNs::ZERO)
    }

    pub(crate) fn validate_packet(
        &self,
        p: &PacketRecord,
        prev_index: u64,
        epsilon: DurationNs,
    ) -> Result<(), TraceError> {
        let bad = |reason: String| Err(TraceError::InvalidPacket { index: p.index, reason });
        if p.index <= prev_index {
            return bad(format!("index must exceed previous index {prev_index}"));
        }
        if p.copies.len() != self.meta.channels.len() {
            return bad(format!("expected {} copies, found {}", self.meta.channels.len(), p.copies.len()));
        }
        let full = self.meta.view == LogView::FullTrace;
        for (ch, copy) in p.channels() {
            copy.validate(&self.meta.channels[ch.index()].phy).or_else(|e| bad(format!("channel {ch}: {e}")))?;
            if copy.full_trace.is_some() != full {
                return bad(format!("channel {ch}: trace presence does not match the log view"));
            }
        }
        let offsets = match (self.meta.deferral, p.copies.len()) {
            (Some(d), 2) => d.offsets().to_vec(),
            _ => vec![DurationNs::ZERO; p.copies.len()],
        };
        let base: Vec<TimePoint> =
            p.copies.iter().zip(&offsets).map(|(c, off)| c.t_t.checked_sub(*off).unwrap_or_default()).collect();
        let (lo, hi) = (base.iter().min(), base.iter().max());
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if hi.0 - lo.0 > epsilon.0 {
                return bad(format!("request times differ by {} beyond tolerance {epsilon}", DurationNs(hi.0 - lo.0)));
            }
        }
        Ok(())
    }
}
