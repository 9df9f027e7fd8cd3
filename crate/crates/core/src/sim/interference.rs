//! Bursty interfering traffic that occupies the medium.
//!
//! Each interferer emits bursts of back-to-back packets: the burst size is
//! an exponential draw rounded up and clamped to `[1, burst_len_cap]`,
//! packets inside a burst start every `intra_burst_spacing` and occupy the
//! medium for `payload_airtime`, and bursts are separated by an exponential
//! gap clamped to `gap_cap`. Truncation is draw-then-clamp; resampling above
//! the cap would be the alternative reading.
//!
//! Busy intervals are produced lazily so that day-long runs never
//! materialize millions of intervals.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::time::{DurationNs, TimePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceParams {
    pub interferer_count: u32,
    pub payload_airtime: DurationNs,
    pub intra_burst_spacing: DurationNs,
    pub burst_len_mean: f64,
    pub burst_len_cap: u32,
    pub gap_mean: DurationNs,
    pub gap_cap: DurationNs,
}

impl Default for InterferenceParams {
    /// 1500-byte payloads, bursts of mean 300 packets capped at 1500,
    /// 400 us spacing, gaps of mean 200 ms capped at 20 s.
    fn default() -> Self {
        InterferenceParams {
            interferer_count: 0,
            payload_airtime: DurationNs::from_us(250),
            intra_burst_spacing: DurationNs::from_us(400),
            burst_len_mean: 300.0,
            burst_len_cap: 1500,
            gap_mean: DurationNs::from_ms(200),
            gap_cap: DurationNs::from_secs(20),
        }
    }
}

impl InterferenceParams {
    pub fn with_count(interferer_count: u32) -> Self {
        InterferenceParams { interferer_count, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.intra_burst_spacing == DurationNs::ZERO {
            return Err("intra_burst_spacing must be positive".into());
        }
        if self.payload_airtime == DurationNs::ZERO || self.payload_airtime > self.intra_burst_spacing {
            return Err("payload_airtime must be positive and not exceed intra_burst_spacing".into());
        }
        if !(self.burst_len_mean.is_finite() && self.burst_len_mean > 0.0) {
            return Err("burst_len_mean must be a positive number".into());
        }
        if (self.burst_len_cap as f64) < self.burst_len_mean {
            return Err("burst_len_cap must not be below burst_len_mean".into());
        }
        if self.gap_mean == DurationNs::ZERO || self.gap_cap < self.gap_mean {
            return Err("gap_mean must be positive and gap_cap not below it".into());
        }
        Ok(())
    }
}

/// Half-open busy interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BusyInterval {
    pub start: TimePoint,
    pub end: TimePoint,
}

struct Burst {
    start: u64,
    count: u64,
}

/// One interferer's packet stream, advanced monotonically.
struct InterfererStream {
    rng: ChaCha8Rng,
    burst_len: Exp<f64>,
    gap: Exp<f64>,
    airtime: u64,
    spacing: u64,
    len_cap: u64,
    gap_cap: u64,
    burst: Burst,
}

impl InterfererStream {
    fn new(params: &InterferenceParams, rng: ChaCha8Rng) -> Self {
        let burst_len = Exp::new(1.0 / params.burst_len_mean).expect("validated burst mean");
        let gap = Exp::new(1.0 / params.gap_mean.0 as f64).expect("validated gap mean");
        let mut s = InterfererStream {
            rng,
            burst_len,
            gap,
            airtime: params.payload_airtime.0,
            spacing: params.intra_burst_spacing.0,
            len_cap: params.burst_len_cap as u64,
            gap_cap: params.gap_cap.0,
            burst: Burst { start: 0, count: 0 },
        };
        let first = s.draw_gap();
        s.burst = Burst { start: first, count: s.draw_count() };
        s
    }

    fn draw_gap(&mut self) -> u64 {
        let g = self.gap.sample(&mut self.rng).round();
        (g as u64).min(self.gap_cap)
    }

    fn draw_count(&mut self) -> u64 {
        let n = self.burst_len.sample(&mut self.rng).ceil() as u64;
        n.clamp(1, self.len_cap)
    }

    fn burst_end(&self) -> u64 {
        self.burst.start + (self.burst.count - 1) * self.spacing + self.airtime
    }

    /// First packet interval of this interferer with `end > t`. Calls must
    /// use non-decreasing `t`.
    fn first_ending_after(&mut self, t: u64) -> (u64, u64) {
        while self.burst_end() <= t {
            let next = self.burst_end() + self.draw_gap();
            let count = self.draw_count();
            self.burst = Burst { start: next, count };
        }
        let b = &self.burst;
        let j = if t < b.start + self.airtime { 0 } else { (t - b.start - self.airtime) / self.spacing + 1 };
        let s = b.start + j * self.spacing;
        (s, s + self.airtime)
    }
}

/// Union of all interferers' busy intervals on one channel, queried with
/// non-decreasing times.
pub struct BusyTimeline {
    streams: Vec<InterfererStream>,
    current: Option<(u64, u64)>,
}

impl BusyTimeline {
    pub fn new(params: &InterferenceParams, rngs: impl IntoIterator<Item = ChaCha8Rng>) -> Self {
        let streams = rngs
            .into_iter()
            .take(params.interferer_count as usize)
            .map(|rng| InterfererStream::new(params, rng))
            .collect();
        BusyTimeline { streams, current: None }
    }

    pub fn idle() -> Self {
        BusyTimeline { streams: Vec::new(), current: None }
    }

    /// First merged busy interval whose end lies after `t`; it may already
    /// have started. `None` when the channel has no interferers.
    pub fn next_busy(&mut self, t: TimePoint) -> Option<BusyInterval> {
        let t = t.0;
        if let Some((s, e)) = self.current {
            if t < e {
                return Some(BusyInterval { start: TimePoint(s), end: TimePoint(e) });
            }
        }
        let (mut s, mut e) = self.streams.iter_mut().map(|st| st.first_ending_after(t)).min()?;
        // Extend across overlapping or touching intervals of any interferer.
        loop {
            let mut grown = false;
            for st in &mut self.streams {
                let (ns, ne) = st.first_ending_after(e);
                if ns <= e {
                    e = ne;
                    grown = true;
                }
            }
            if !grown {
                break;
            }
        }
        s = s.max(self.current.map_or(0, |c| c.1));
        self.current = Some((s, e));
        Some(BusyInterval { start: TimePoint(s), end: TimePoint(e) })
    }
}

/// Materializes the merged busy intervals that start before `horizon`.
pub fn generate_interference(
    params: &InterferenceParams,
    horizon: DurationNs,
    rngs: impl IntoIterator<Item = ChaCha8Rng>,
) -> Vec<BusyInterval> {
    let mut timeline = BusyTimeline::new(params, rngs);
    let mut out = Vec::new();
    let mut t = TimePoint::ZERO;
    while let Some(iv) = timeline.next_busy(t) {
        if iv.start.0 >= horizon.0 {
            break;
        }
        out.push(iv);
        t = iv.end;
    }
    out
}

/// Fraction of `[0, horizon)` covered by `intervals`.
pub fn busy_fraction(intervals: &[BusyInterval], horizon: DurationNs) -> f64 {
    let covered: u64 = intervals.iter().map(|iv| iv.end.0.min(horizon.0).saturating_sub(iv.start.0)).sum();
    covered as f64 / horizon.0 as f64
}
