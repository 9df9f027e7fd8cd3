//! Duplication-avoidance analysis of redundant-link logs.
//!
//! Reactive avoidance cancels the pending attempts of a packet on every
//! channel other than the quickest once the cross-ACK raised by the first
//! ACK has been processed, i.e. attempt `l` on channel `C` is prevented when
//! `t_X + T_LRE < t_W(C, l)` (strict: an attempt that already started is
//! never aborted midway).
//!
//! Adapter-view logs only expose the start of the final attempt, so the
//! per-copy flag `e` computed from them is a lower bound: `e = 1` means at
//! least one attempt was saved. Full-trace logs admit the exact count
//! through [`oracle_saved_attempts`].
//!
//! Timed duplicate deferral delays the secondary channel's request by
//! `T_D`. On a log recorded without deferral it is evaluated virtually by
//! shifting the secondary channel's timestamps; a negative `T_D` makes `B`
//! the primary and delays `A` instead.

use serde::{Deserialize, Serialize};

use crate::error::{DaError, TraceError};
use crate::time::{DurationNs, SignedDurationNs, TimePoint};
use crate::trace::{
    copy_latency, derive_final_attempt_start, link_outcome, offsets_from_a, ChannelId, CopyRecord, Deferral,
    DeferralKind, PacketRecord, PhyParams, RunLog,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DaMode {
    Pow,
    Rda,
    Tdd,
}

/// How the final attempt start of a failed copy is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailedCopyPolicy {
    /// Failed copies never count as terminated early.
    #[default]
    PessimisticZero,
    /// Use the recorded trace, or the failure-path reconstruction when the
    /// final DATA duration is known.
    Oracle,
}

/// Attempt count charged to a lost copy in the averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LostCopyAttempts {
    /// Largest attempt count recorded anywhere in the log.
    #[default]
    MeasuredMax,
    Fixed(u32),
}

/// Stationarity limit for virtual deferral.
pub const DEFAULT_MAX_VIRTUAL_DEFERRAL: DurationNs = DurationNs::from_ms(1);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaParams {
    pub mode: DaMode,
    pub t_lre: DurationNs,
    /// Deferral of `B` relative to `A`; TDD only.
    pub td: SignedDurationNs,
    pub failed_copy_policy: FailedCopyPolicy,
    pub lost_copy_attempts: LostCopyAttempts,
    pub max_virtual_deferral: DurationNs,
    pub force: bool,
}

impl DaParams {
    pub fn pow() -> Self {
        DaParams {
            mode: DaMode::Pow,
            t_lre: DurationNs::ZERO,
            td: SignedDurationNs::ZERO,
            failed_copy_policy: FailedCopyPolicy::default(),
            lost_copy_attempts: LostCopyAttempts::default(),
            max_virtual_deferral: DEFAULT_MAX_VIRTUAL_DEFERRAL,
            force: false,
        }
    }

    pub fn rda(t_lre: DurationNs) -> Self {
        DaParams { mode: DaMode::Rda, t_lre, ..Self::pow() }
    }

    pub fn tdd(t_lre: DurationNs, td: SignedDurationNs) -> Self {
        DaParams { mode: DaMode::Tdd, t_lre, td, ..Self::pow() }
    }
}

/// Per-packet early-termination (`e`) and simplex (`z`) flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaFlags {
    pub e: Vec<bool>,
    pub z: Vec<bool>,
    pub z_link: bool,
    pub quickest: Option<ChannelId>,
}

impl DaFlags {
    pub fn none(channels: usize, quickest: Option<ChannelId>) -> Self {
        DaFlags { e: vec![false; channels], z: vec![false; channels], z_link: false, quickest }
    }

    /// Number of copies terminated early (`e^L` as a count).
    pub fn e_count(&self) -> u32 {
        self.e.iter().filter(|&&e| e).count() as u32
    }

    pub fn e_link(&self) -> bool {
        self.e_count() > 0
    }
}

/// Final attempt start used by the early-termination test, `None` when the
/// policy declares the copy not terminable.
fn final_start(
    index: u64,
    ch: ChannelId,
    copy: &CopyRecord,
    phy: &PhyParams,
    policy: FailedCopyPolicy,
) -> Result<Option<TimePoint>, DaError> {
    let wrap = |source: TraceError| DaError::Copy { index, channel: ch, source };
    if copy.loss {
        match policy {
            FailedCopyPolicy::PessimisticZero => return Ok(None),
            FailedCopyPolicy::Oracle => {
                if let Some(last) = copy.full_trace.as_ref().and_then(|t| t.last()) {
                    return Ok(Some(last.start_on_air));
                }
            }
        }
    }
    derive_final_attempt_start(copy, phy).map(Some).map_err(wrap)
}

/// Early-termination flags for reactive avoidance on any number of
/// channels. Packets lost on every channel raise no cross-ACK and get
/// all-false flags.
pub fn rda_flags(
    packet: &PacketRecord,
    t_lre: DurationNs,
    phys: &[PhyParams],
    policy: FailedCopyPolicy,
) -> Result<DaFlags, DaError> {
    let outcome = link_outcome(packet, phys);
    let n = packet.copies.len();
    let Some(q) = outcome.quickest else {
        return Ok(DaFlags::none(n, None));
    };
    let deadline = packet.copy(q).t_x + t_lre;
    let mut flags = DaFlags::none(n, Some(q));
    for (ch, copy) in packet.channels() {
        if ch == q {
            continue;
        }
        let start = final_start(packet.index, ch, copy, &phys[ch.index()], policy)?;
        flags.e[ch.index()] = start.is_some_and(|tw| deadline < tw);
    }
    Ok(simplex_flags(flags, &attempt_counts(packet)))
}

fn attempt_counts(packet: &PacketRecord) -> Vec<u32> {
    packet.copies.iter().map(|c| c.attempts).collect()
}

/// Adds simplex flags: `z[C] = e[C] and w[C] = 1`, and `z^L` holds when
/// every non-quickest channel is simplex-prevented.
pub fn simplex_flags(mut flags: DaFlags, attempts: &[u32]) -> DaFlags {
    for (k, z) in flags.z.iter_mut().enumerate() {
        *z = flags.e[k] && attempts[k] == 1;
    }
    flags.z_link = match flags.quickest {
        Some(q) if flags.e.len() > 1 => (0..flags.e.len()).filter(|&k| k != q.index()).all(|k| flags.z[k]),
        _ => false,
    };
    flags
}

fn require_duplex(channels: usize) -> Result<(), DaError> {
    if channels == 2 {
        Ok(())
    } else {
        Err(DaError::NotDuplex(channels))
    }
}

/// Shifts a log recorded without real deferral as if the secondary channel
/// had been requested `td` later. Only `t_T`, `t_X` and trace start times
/// move. Shifts accumulate: deferring by 50 us twice equals 100 us once.
///
/// `limit` bounds the accumulated `|T_D|`; pass `None` to force.
pub fn virtual_defer(run: &RunLog, td: SignedDurationNs, limit: Option<DurationNs>) -> Result<RunLog, DaError> {
    require_duplex(run.meta.channel_count())?;
    let previous = match run.meta.deferral {
        Some(d) if d.kind == DeferralKind::Real => return Err(DaError::AlreadyDeferred),
        Some(d) => d.td_from_a(),
        None => SignedDurationNs::ZERO,
    };
    let total = previous + td;
    if let Some(limit) = limit {
        if total.abs() > limit {
            return Err(DaError::DeferralOutOfRange { td: total, limit });
        }
    }
    if td.is_zero() {
        return Ok(run.clone());
    }
    let (old, new) = (offsets_from_a(previous), offsets_from_a(total));
    let mut out = run.clone();
    for p in &mut out.packets {
        for (k, copy) in p.copies.iter_mut().enumerate() {
            if new[k] > old[k] {
                *copy = copy.shifted(new[k] - old[k]);
            } else if new[k] < old[k] {
                *copy = copy.unshifted(old[k] - new[k]).expect("a shift applied earlier can be undone");
            }
        }
    }
    out.meta.deferral =
        (!total.is_zero()).then_some(Deferral { primary: ChannelId::A, td: total, kind: DeferralKind::Virtual });
    Ok(out)
}

/// Early-termination flags under a virtual deferral `td` of `B` behind `A`,
/// evaluated on the undeferred timestamps:
///
/// * `e^B = [l^A = 0 and t^A_X + T_LRE < t^B_W + T_D]`
/// * `e^A = [l^B = 0 and t^B_X + T_D + T_LRE < t^A_W]`
///
/// With `td = 0` this is exactly [`rda_flags`].
pub fn tdd_flags(
    packet: &PacketRecord,
    td: SignedDurationNs,
    t_lre: DurationNs,
    phys: &[PhyParams],
    policy: FailedCopyPolicy,
) -> Result<DaFlags, DaError> {
    require_duplex(packet.copies.len())?;
    let (a, b) = (packet.copy(ChannelId::A), packet.copy(ChannelId::B));
    let (td, lre) = (td.0 as i128, t_lre.0 as i128);

    let quickest = match (a.loss, b.loss) {
        (true, true) => None,
        (false, true) => Some(ChannelId::A),
        (true, false) => Some(ChannelId::B),
        (false, false) if a.t_x.as_i128() <= b.t_x.as_i128() + td => Some(ChannelId::A),
        (false, false) => Some(ChannelId::B),
    };
    let mut flags = DaFlags::none(2, quickest);
    if quickest.is_none() {
        return Ok(flags);
    }
    if !a.loss {
        let tw_b = final_start(packet.index, ChannelId::B, b, &phys[1], policy)?;
        flags.e[1] = tw_b.is_some_and(|tw| a.t_x.as_i128() + lre < tw.as_i128() + td);
    }
    if !b.loss {
        let tw_a = final_start(packet.index, ChannelId::A, a, &phys[0], policy)?;
        flags.e[0] = tw_a.is_some_and(|tw| b.t_x.as_i128() + td + lre < tw.as_i128());
    }
    Ok(simplex_flags(flags, &attempt_counts(packet)))
}

/// Link latency under deferral `td`, measured from the primary request:
/// `min(d^A, d^B + T_D)` for positive `T_D`, `min(d^A + |T_D|, d^B)` for
/// negative. `None` when the packet was lost on both channels.
pub fn tdd_latency(packet: &PacketRecord, td: SignedDurationNs, phys: &[PhyParams]) -> Option<DurationNs> {
    let offsets = offsets_from_a(td);
    packet
        .channels()
        .take(2)
        .filter_map(|(ch, c)| copy_latency(c, &phys[ch.index()]).ok().map(|d| d + offsets[ch.index()]))
        .min()
}

/// Exact attempts per channel that would still go on air (`w'`), from the
/// full per-attempt traces. `td` applies a virtual deferral of `B` behind
/// `A` and must be zero on non-duplex packets.
pub fn oracle_saved_attempts(
    packet: &PacketRecord,
    t_lre: DurationNs,
    td: SignedDurationNs,
) -> Result<Vec<u32>, DaError> {
    let n = packet.copies.len();
    if !td.is_zero() {
        require_duplex(n)?;
    }
    let offsets: Vec<DurationNs> = if td.is_zero() { vec![DurationNs::ZERO; n] } else { offsets_from_a(td).to_vec() };
    let traces = packet
        .copies
        .iter()
        .map(|c| c.full_trace.as_deref())
        .collect::<Option<Vec<_>>>()
        .ok_or(DaError::MissingTrace(packet.index))?;

    let quickest = packet.channels().filter(|(_, c)| !c.loss).map(|(ch, c)| (c.t_x + offsets[ch.index()], ch)).min();
    let mut out: Vec<u32> = packet.copies.iter().map(|c| c.attempts).collect();
    let Some((xack, q)) = quickest else {
        return Ok(out);
    };
    let deadline = xack + t_lre;
    for (k, trace) in traces.iter().enumerate() {
        if k == q.index() {
            continue;
        }
        if let Some(pos) = trace.iter().position(|a| deadline < a.start_on_air + offsets[k]) {
            out[k] = pos as u32;
        }
    }
    Ok(out)
}

/// Evaluates one packet under `params` for a log whose recorded deferral is
/// `recorded`. Logs that already embed a deferral are analyzed directly on
/// their timestamps; TDD on such a log must ask for the same `T_D`.
pub fn packet_flags(
    packet: &PacketRecord,
    params: &DaParams,
    phys: &[PhyParams],
    recorded: Option<Deferral>,
) -> Result<DaFlags, DaError> {
    match params.mode {
        DaMode::Pow => Ok(DaFlags::none(packet.copies.len(), link_outcome(packet, phys).quickest)),
        DaMode::Rda => rda_flags(packet, params.t_lre, phys, params.failed_copy_policy),
        DaMode::Tdd => match recorded {
            Some(_) => rda_flags(packet, params.t_lre, phys, params.failed_copy_policy),
            None => tdd_flags(packet, params.td, params.t_lre, phys, params.failed_copy_policy),
        },
    }
}

/// Link latency of one packet under `params` (see [`packet_flags`]).
pub fn packet_latency(
    packet: &PacketRecord,
    params: &DaParams,
    phys: &[PhyParams],
    recorded: Option<Deferral>,
) -> Option<DurationNs> {
    match (params.mode, recorded) {
        (DaMode::Tdd, None) => tdd_latency(packet, params.td, phys),
        _ => link_outcome(packet, phys).latency,
    }
}

/// Checks that `params` can be applied to `run`.
pub fn check_params(run: &RunLog, params: &DaParams) -> Result<(), DaError> {
    if params.mode != DaMode::Tdd {
        return Ok(());
    }
    require_duplex(run.meta.channel_count())?;
    match run.meta.deferral {
        Some(d) => {
            if d.td_from_a() != params.td {
                return Err(DaError::DeferralMismatch { recorded: d.td_from_a(), requested: params.td });
            }
        }
        None => {
            if !params.force && params.td.abs() > params.max_virtual_deferral {
                return Err(DaError::DeferralOutOfRange { td: params.td, limit: params.max_virtual_deferral });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::AttemptTrace;

    const US: u64 = 1_000;

    fn phy() -> PhyParams {
        PhyParams { sifs: DurationNs::from_us(10), ack_timeout: DurationNs::from_us(60), ..PhyParams::default() }
    }

    /// Delivered copy whose final attempt starts at `t_w` with Td = 300 us,
    /// Ta = 24 us, so `t_X = t_W + 334 us`.
    fn ok_copy(t_w_us: u64, attempts: u32) -> CopyRecord {
        CopyRecord {
            loss: false,
            t_t: TimePoint(0),
            t_x: TimePoint((t_w_us + 334) * US),
            attempts,
            final_data_duration: Some(DurationNs::from_us(300)),
            final_ack_duration: Some(DurationNs::from_us(24)),
            full_trace: None,
        }
    }

    fn with_tx(t_x_us: u64) -> CopyRecord {
        ok_copy(t_x_us - 334, 1)
    }

    fn lost_copy() -> CopyRecord {
        CopyRecord {
            loss: true,
            t_t: TimePoint(0),
            t_x: TimePoint(5_000 * US),
            attempts: 21,
            final_data_duration: None,
            final_ack_duration: None,
            full_trace: None,
        }
    }

    fn pkt(a: CopyRecord, b: CopyRecord) -> PacketRecord {
        PacketRecord { index: 1, copies: vec![a, b] }
    }

    fn phys() -> Vec<PhyParams> {
        vec![phy(), phy()]
    }

    #[test]
    fn rda_early_termination_example() {
        // A quickest with t_X = 500 us; B final attempt starts at 566 us.
        let p = pkt(with_tx(500), with_tx(900));
        let f = rda_flags(&p, DurationNs::from_us(50), &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.quickest, Some(ChannelId::A));
        assert_eq!(f.e, vec![false, true]);
        let f = rda_flags(&p, DurationNs::from_us(100), &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.e, vec![false, false]);
    }

    #[test]
    fn rda_equality_is_not_early() {
        let p = pkt(with_tx(500), with_tx(900));
        let f = rda_flags(&p, DurationNs::from_us(66), &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.e, vec![false, false]);
        let f = rda_flags(&p, DurationNs(65_999), &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.e, vec![false, true]);
    }

    #[test]
    fn rda_all_lost_gives_no_flags() {
        let p = pkt(lost_copy(), lost_copy());
        let f = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f, DaFlags::none(2, None));
    }

    #[test]
    fn failed_copy_policies() {
        let mut b = lost_copy();
        let p = pkt(with_tx(500), b.clone());
        let f = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.e, vec![false, false]);
        let err = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::Oracle).unwrap_err();
        assert!(matches!(err, DaError::Copy { channel: ChannelId::B, source: TraceError::MissingDuration, .. }));
        // t_W = 5000 - (300 + 60) = 4640 us > 500 us.
        b.final_data_duration = Some(DurationNs::from_us(300));
        let p = pkt(with_tx(500), b);
        let f = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::Oracle).unwrap();
        assert_eq!(f.e, vec![false, true]);
        assert_eq!(f.z, vec![false, false], "w = 21 is never simplex");
    }

    #[test]
    fn simplex_definition() {
        let p = pkt(ok_copy(100, 1), ok_copy(600, 1));
        let f = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!((f.z.clone(), f.z_link), (vec![false, true], true));
        let p = pkt(ok_copy(100, 1), ok_copy(600, 3));
        let f = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!((f.e.clone(), f.z.clone(), f.z_link), (vec![false, true], vec![false, false], false));
        // The quickest channel is never simplex even with w = 1.
        assert!(!f.z[0]);
    }

    #[test]
    fn triplex_flags() {
        let p = PacketRecord { index: 1, copies: vec![ok_copy(600, 1), ok_copy(100, 1), ok_copy(700, 2)] };
        let phys = vec![phy(); 3];
        let f = rda_flags(&p, DurationNs::ZERO, &phys, FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.quickest, Some(ChannelId::B));
        assert_eq!(f.e, vec![true, false, true]);
        assert_eq!(f.z, vec![true, false, false]);
        assert!(!f.z_link);
        assert_eq!(f.e_count(), 2);
    }

    #[test]
    fn tdd_examples() {
        // t^A_X = 500 us, t^B_W = 566 us (t^B_X = 900 us), T_LRE = 50 us, T_D = 200 us.
        let p = pkt(with_tx(500), with_tx(900));
        let td = SignedDurationNs::from_us(200);
        let f = tdd_flags(&p, td, DurationNs::from_us(50), &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert!(f.e[1]);
        // e^A: 900 + 200 + 50 = 1150 us against t^A_W = 166 us.
        assert!(!f.e[0]);
    }

    #[test]
    fn tdd_zero_equals_rda() {
        for (a, b) in [(with_tx(500), with_tx(900)), (with_tx(900), with_tx(500)), (with_tx(700), with_tx(700))] {
            let p = pkt(a, b);
            for lre in [0, 50, 200, 500] {
                let lre = DurationNs::from_us(lre);
                assert_eq!(
                    tdd_flags(&p, SignedDurationNs::ZERO, lre, &phys(), FailedCopyPolicy::PessimisticZero).unwrap(),
                    rda_flags(&p, lre, &phys(), FailedCopyPolicy::PessimisticZero).unwrap()
                );
            }
        }
    }

    #[test]
    fn tdd_rejects_non_duplex() {
        let p = PacketRecord { index: 1, copies: vec![with_tx(500)] };
        let err = tdd_flags(&p, SignedDurationNs::ZERO, DurationNs::ZERO, &[phy()], FailedCopyPolicy::PessimisticZero);
        assert_eq!(err, Err(DaError::NotDuplex(1)));
    }

    fn latency_copy(d_ms: u64) -> CopyRecord {
        // d = t_X - (SIFS + Ta) - t_T with SIFS = 10 us and Ta = 24 us.
        ok_copy(d_ms * 1_000 + 34 - 334, 1)
    }

    #[test]
    fn tdd_latency_examples() {
        let td = SignedDurationNs::from_us(500);
        let p = pkt(latency_copy(3), latency_copy(2));
        assert_eq!(tdd_latency(&p, td, &phys()), Some(DurationNs::from_us(2_500)));
        assert_eq!(tdd_latency(&p, SignedDurationNs::ZERO, &phys()), link_outcome(&p, &phys()).latency);
        let p = pkt(lost_copy(), latency_copy(2));
        assert_eq!(tdd_latency(&p, td, &phys()), Some(DurationNs::from_us(2_500)));
        let p = pkt(latency_copy(3), latency_copy(2));
        assert_eq!(tdd_latency(&p, SignedDurationNs::from_us(-500), &phys()), Some(DurationNs::from_ms(2)));
        assert_eq!(tdd_latency(&pkt(lost_copy(), lost_copy()), td, &phys()), None);
    }

    fn traced(starts_us: &[u64], ok: bool) -> CopyRecord {
        let n = starts_us.len();
        let trace: Vec<AttemptTrace> = starts_us
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let last_ok = ok && k + 1 == n;
                AttemptTrace {
                    ordinal: k as u32 + 1,
                    start_on_air: TimePoint(s * US),
                    data_duration: DurationNs::from_us(300),
                    ack_duration: last_ok.then_some(DurationNs::from_us(24)),
                    succeeded: last_ok,
                }
            })
            .collect();
        let last = *starts_us.last().unwrap();
        CopyRecord {
            loss: !ok,
            t_t: TimePoint(0),
            t_x: TimePoint((last + if ok { 334 } else { 360 }) * US),
            attempts: n as u32,
            final_data_duration: Some(DurationNs::from_us(300)),
            final_ack_duration: ok.then_some(DurationNs::from_us(24)),
            full_trace: Some(trace),
        }
    }

    #[test]
    fn oracle_cancels_trailing_attempts() {
        // A acknowledged at 434 us; B attempts 3 and 4 start afterwards.
        let p = pkt(traced(&[100], true), traced(&[50, 420, 800, 1200], true));
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::ZERO).unwrap(), vec![1, 2]);
        // The adapter view only proves that at least one attempt is saved.
        let f = rda_flags(&p, DurationNs::ZERO, &phys(), FailedCopyPolicy::PessimisticZero).unwrap();
        assert_eq!(f.e, vec![false, true]);
    }

    #[test]
    fn oracle_no_and_full_prevention() {
        let p = pkt(traced(&[100], true), traced(&[50, 300], true));
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::ZERO).unwrap(), vec![1, 2]);
        let p = pkt(traced(&[100], true), traced(&[900], true));
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::ZERO).unwrap(), vec![1, 0]);
        let p = pkt(traced(&[100], false), traced(&[900], false));
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::ZERO).unwrap(), vec![1, 1]);
        let p = pkt(with_tx(500), with_tx(900));
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::ZERO), Err(DaError::MissingTrace(1)));
    }

    #[test]
    fn oracle_with_deferral() {
        // B's only attempt at 300 us would start at 500 us when deferred by 200 us,
        // after A's ACK at 434 us.
        let p = pkt(traced(&[100], true), traced(&[300], true));
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::ZERO).unwrap(), vec![1, 1]);
        assert_eq!(oracle_saved_attempts(&p, DurationNs::ZERO, SignedDurationNs::from_us(200)).unwrap(), vec![1, 0]);
    }
}
