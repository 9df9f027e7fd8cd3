//! Integer-nanosecond time base.
//!
//! Every timestamp and duration in a run is an integer number of nanoseconds
//! on a single time base, so reconstruction formulas that only add and
//! subtract are exact.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseDurationError;

/// Instant in nanoseconds since the run epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimePoint(pub u64);

/// Non-negative span of time in nanoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DurationNs(pub u64);

/// Signed span, used for deferral offsets where a negative value swaps the
/// primary and secondary channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedDurationNs(pub i64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0);

    pub fn ns(self) -> u64 {
        self.0
    }

    pub fn checked_sub(self, d: DurationNs) -> Option<TimePoint> {
        self.0.checked_sub(d.0).map(TimePoint)
    }

    /// Elapsed time since `earlier`, `None` if `earlier` is later than `self`.
    pub fn since(self, earlier: TimePoint) -> Option<DurationNs> {
        self.0.checked_sub(earlier.0).map(DurationNs)
    }

    /// Shift by a signed offset; `None` on underflow.
    pub fn offset(self, d: SignedDurationNs) -> Option<TimePoint> {
        self.0.checked_add_signed(d.0).map(TimePoint)
    }

    pub(crate) fn as_i128(self) -> i128 {
        self.0 as i128
    }
}

impl Add<DurationNs> for TimePoint {
    type Output = TimePoint;
    fn add(self, rhs: DurationNs) -> TimePoint {
        TimePoint(self.0 + rhs.0)
    }
}

impl DurationNs {
    pub const ZERO: DurationNs = DurationNs(0);

    pub const fn from_ns(ns: u64) -> Self {
        DurationNs(ns)
    }

    pub const fn from_us(us: u64) -> Self {
        DurationNs(us * 1_000)
    }

    pub const fn from_ms(ms: u64) -> Self {
        DurationNs(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        DurationNs(s * 1_000_000_000)
    }

    pub fn ns(self) -> u64 {
        self.0
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / 1e3
    }

    pub fn signed(self) -> SignedDurationNs {
        SignedDurationNs(self.0 as i64)
    }
}

impl Add for DurationNs {
    type Output = DurationNs;
    fn add(self, rhs: DurationNs) -> DurationNs {
        DurationNs(self.0 + rhs.0)
    }
}

impl Sub for DurationNs {
    type Output = DurationNs;
    fn sub(self, rhs: DurationNs) -> DurationNs {
        DurationNs(self.0 - rhs.0)
    }
}

impl SignedDurationNs {
    pub const ZERO: SignedDurationNs = SignedDurationNs(0);

    pub const fn from_ns(ns: i64) -> Self {
        SignedDurationNs(ns)
    }

    pub const fn from_us(us: i64) -> Self {
        SignedDurationNs(us * 1_000)
    }

    pub fn ns(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> DurationNs {
        DurationNs(self.0.unsigned_abs())
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / 1e3
    }
}

impl Add for SignedDurationNs {
    type Output = SignedDurationNs;
    fn add(self, rhs: SignedDurationNs) -> SignedDurationNs {
        SignedDurationNs(self.0 + rhs.0)
    }
}

impl Sub for SignedDurationNs {
    type Output = SignedDurationNs;
    fn sub(self, rhs: SignedDurationNs) -> SignedDurationNs {
        SignedDurationNs(self.0 - rhs.0)
    }
}

fn fmt_ns(f: &mut fmt::Formatter<'_>, ns: i128) -> fmt::Result {
    let abs = ns.unsigned_abs();
    let sign = if ns < 0 { "-" } else { "" };
    if abs == 0 {
        write!(f, "0ns")
    } else if abs.is_multiple_of(1_000_000_000) {
        write!(f, "{sign}{}s", abs / 1_000_000_000)
    } else if abs.is_multiple_of(1_000_000) {
        write!(f, "{sign}{}ms", abs / 1_000_000)
    } else if abs.is_multiple_of(1_000) {
        write!(f, "{sign}{}us", abs / 1_000)
    } else {
        write!(f, "{sign}{abs}ns")
    }
}

impl fmt::Display for DurationNs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ns(f, self.0 as i128)
    }
}

impl fmt::Display for SignedDurationNs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ns(f, self.0 as i128)
    }
}

/// Parses `"<integer><unit>"` with unit one of `ns`, `us`, `ms`, `s`.
/// A bare integer is taken as nanoseconds.
fn parse_signed_ns(s: &str) -> Result<i64, ParseDurationError> {
    let t = s.trim();
    let bad = || ParseDurationError(s.to_string());
    let (digits, mult) = if let Some(v) = t.strip_suffix("ns") {
        (v, 1)
    } else if let Some(v) = t.strip_suffix("us") {
        (v, 1_000)
    } else if let Some(v) = t.strip_suffix("µs") {
        (v, 1_000)
    } else if let Some(v) = t.strip_suffix("ms") {
        (v, 1_000_000)
    } else if let Some(v) = t.strip_suffix('s') {
        (v, 1_000_000_000)
    } else {
        (t, 1)
    };
    let value: i64 = digits.trim().parse().map_err(|_| bad())?;
    value.checked_mul(mult).ok_or_else(bad)
}

impl FromStr for DurationNs {
    type Err = ParseDurationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = parse_signed_ns(s)?;
        u64::try_from(v).map(DurationNs).map_err(|_| ParseDurationError(s.to_string()))
    }
}

impl FromStr for SignedDurationNs {
    type Err = ParseDurationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_signed_ns(s).map(SignedDurationNs)
    }
}
