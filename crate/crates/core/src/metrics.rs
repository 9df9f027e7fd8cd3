//! Spectrum-consumption and latency metrics of a run under a DA mode.
//!
//! All ratios are exact rationals over packet counts:
//!
//! * `ē^C = Σe^C / N`, `ē^L = Σ_C ē^C`, and `z̄` likewise;
//! * `w̄^C = Σw^C / N` with lost copies charged per [`LostCopyAttempts`],
//!   `w̄^PoW = Σ_C w̄^C` and `η = 1 / w̄`;
//! * `η̌ = 1 / (w̄^PoW − ē^L)`, `ϑ̂ = 1 − ē^L / w̄^PoW`, `Θ̂ = |C|·ϑ̂`.
//!
//! `η̌` and `ϑ̂` come from the adapter-view flags and are therefore bounds.
//! On full-trace logs the report also carries the exact `w̄` under DA.

use std::fmt::{self, Write as _};
use std::io::Write;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::da::{
    check_params, oracle_saved_attempts, packet_flags, packet_latency, DaMode, DaParams, FailedCopyPolicy,
    LostCopyAttempts,
};
use crate::error::{DaError, MetricsError};
use crate::time::{DurationNs, SignedDurationNs};
use crate::trace::{copy_latency, ChannelId, RunLog};

/// Deadlines of the deadline-miss ratios.
pub const DEADLINES: [DurationNs; 2] = [DurationNs::from_ms(10), DurationNs::from_ms(100)];

/// Exact ratio, serialized with its 4-significant-digit value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub Ratio<u64>);

impl Exact {
    fn new(num: u64, den: u64) -> Self {
        Exact(Ratio::new(num, den))
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&sig4(self.to_f64()))
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            exact: String,
            value: f64,
        }
        let value = sig4(self.to_f64()).parse().unwrap_or(f64::NAN);
        Repr { exact: self.0.to_string(), value }.serialize(s)
    }
}

/// Renders `x` with 4 significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into a new digit (9.9996 -> 10.000).
    let carried = s.trim_start_matches('-').split('.').next().map_or(0, |i| i.trim_start_matches('0').len());
    if decimals > 0 && carried as i32 > magnitude + 1 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Percentage of an exact fraction, 4 significant digits.
pub fn percent(x: Exact) -> String {
    sig4(x.to_f64() * 100.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LatencyStats {
    pub mean: DurationNs,
    pub std_dev: DurationNs,
    pub median: DurationNs,
    pub p99_99: DurationNs,
    pub max: DurationNs,
    pub population: u64,
}

/// Nearest-rank quantile: the sample of rank `ceil(q·n)`, `q = num/den`.
fn nearest_rank(sorted: &[DurationNs], num: u64, den: u64) -> DurationNs {
    let n = sorted.len() as u64;
    let rank = (num * n).div_ceil(den).max(1);
    sorted[rank as usize - 1]
}

/// Mean and population standard deviation (rounded to the nanosecond),
/// nearest-rank median and 99.99th percentile, and exact maximum. `None`
/// for an empty population.
pub fn latency_stats(samples: &[DurationNs]) -> Option<LatencyStats> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as u128;
    let sum: u128 = sorted.iter().map(|d| d.0 as u128).sum();
    let sum_sq: u128 = sorted.iter().map(|d| (d.0 as u128).pow(2)).sum();
    let mean = (2 * sum + n) / (2 * n);
    let variance = (n * sum_sq - sum * sum) as f64 / (n * n) as f64;
    Some(LatencyStats {
        mean: DurationNs(mean as u64),
        std_dev: DurationNs(variance.sqrt().round() as u64),
        median: nearest_rank(&sorted, 1, 2),
        p99_99: nearest_rank(&sorted, 9_999, 10_000),
        max: *sorted.last().expect("non-empty"),
        population: sorted.len() as u64,
    })
}

/// Deadline-miss ratios over the delivered population and the loss ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityRatios {
    pub miss_10ms: Option<Exact>,
    pub miss_100ms: Option<Exact>,
    pub loss: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelMetrics {
    pub channel: ChannelId,
    pub e_bar: Exact,
    pub z_bar: Exact,
    pub w_bar: Exact,
    pub eta: Exact,
    /// Latency of this channel's copies from their own request time.
    pub latency: Option<LatencyStats>,
    pub quality: QualityRatios,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkMetrics {
    pub e_bar: Exact,
    pub z_bar: Exact,
    pub w_bar_pow: Exact,
    pub eta_pow: Exact,
    pub eta_check: Exact,
    pub theta_hat: Exact,
    #[serde(rename = "Theta_hat")]
    pub theta_hat_link: Exact,
    /// Exact attempts per packet under DA from the full-trace oracle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_bar_exact: Option<Exact>,
    pub latency: Option<LatencyStats>,
    pub quality: QualityRatios,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub mode: DaMode,
    pub t_lre: DurationNs,
    pub td: SignedDurationNs,
    pub failed_copy_policy: FailedCopyPolicy,
    pub lost_copy_attempts: LostCopyAttempts,
    /// Attempts actually charged per lost copy.
    pub lost_copy_charge: u32,
    pub packets: u64,
    pub channels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub params: ParamsEcho,
    pub channels: Vec<ChannelMetrics>,
    pub link: LinkMetrics,
}

#[derive(Default)]
struct ChannelAcc {
    e: u64,
    z: u64,
    delivered_w: u64,
    lost: u64,
    exact_w: u64,
    exact_lost_uncut: u64,
    latencies: Vec<DurationNs>,
}

fn quality(latencies: &[DurationNs], lost: u64, total: u64) -> QualityRatios {
    let delivered = latencies.len() as u64;
    let miss = |h: DurationNs| {
        (delivered > 0).then(|| Exact::new(latencies.iter().filter(|&&d| d > h).count() as u64, delivered))
    };
    QualityRatios { miss_10ms: miss(DEADLINES[0]), miss_100ms: miss(DEADLINES[1]), loss: Exact::new(lost, total) }
}

/// Evaluates `run` under `da`.
pub fn compute_report(run: &RunLog, da: &DaParams) -> Result<MetricsReport, MetricsError> {
    check_params(run, da)?;
    let phys = run.phys();
    let n_ch = run.meta.channel_count();
    let n = run.packets.len() as u64;
    let recorded = run.meta.deferral;
    let oracle_td = match (da.mode, recorded) {
        (DaMode::Tdd, None) => da.td,
        _ => SignedDurationNs::ZERO,
    };
    let use_oracle = da.mode != DaMode::Pow && run.has_full_trace();

    let mut acc: Vec<ChannelAcc> = (0..n_ch).map(|_| ChannelAcc::default()).collect();
    let mut link_latencies = Vec::with_capacity(run.packets.len());
    let (mut link_lost, mut e_link, mut z_link, mut max_w) = (0u64, 0u64, 0u64, 0u32);

    for p in &run.packets {
        let flags = packet_flags(p, da, &phys, recorded)?;
        let exact = if use_oracle { Some(oracle_saved_attempts(p, da.t_lre, oracle_td)?) } else { None };
        for (ch, copy) in p.channels() {
            let k = ch.index();
            let a = &mut acc[k];
            max_w = max_w.max(copy.attempts);
            a.e += flags.e[k] as u64;
            a.z += flags.z[k] as u64;
            if copy.loss {
                a.lost += 1;
            } else {
                a.delivered_w += copy.attempts as u64;
                let d = copy_latency(copy, &phys[k]).map_err(|source| DaError::Copy {
                    index: p.index,
                    channel: ch,
                    source,
                })?;
                a.latencies.push(d);
            }
            if let Some(w) = &exact {
                if copy.loss && w[k] == copy.attempts {
                    a.exact_lost_uncut += 1;
                } else {
                    a.exact_w += w[k] as u64;
                }
            }
        }
        e_link += flags.e_count() as u64;
        z_link += flags.z_link as u64;
        match packet_latency(p, da, &phys, recorded) {
            Some(d) => link_latencies.push(d),
            None => link_lost += 1,
        }
    }

    let charge = match da.lost_copy_attempts {
        LostCopyAttempts::MeasuredMax => max_w,
        LostCopyAttempts::Fixed(r) => r,
    } as u64;
    let pow_mode = da.mode == DaMode::Pow;
    let zero = Exact::new(0, 1);
    let mut w_sum = 0u64;
    let mut exact_sum = 0u64;
    let channels = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let w = a.delivered_w + a.lost * charge;
            w_sum += w;
            exact_sum += a.exact_w + a.exact_lost_uncut * charge;
            ChannelMetrics {
                channel: ChannelId(k as u8),
                e_bar: if pow_mode { zero } else { Exact::new(a.e, n) },
                z_bar: if pow_mode { zero } else { Exact::new(a.z, n) },
                w_bar: Exact::new(w, n),
                eta: Exact::new(n, w),
                latency: latency_stats(&a.latencies),
                quality: quality(&a.latencies, a.lost, n),
            }
        })
        .collect();
    let (e_link, z_link) = if pow_mode { (0, 0) } else { (e_link, z_link) };
    let theta = Exact::new(w_sum - e_link, w_sum);
    let link = LinkMetrics {
        e_bar: Exact::new(e_link, n),
        z_bar: Exact::new(z_link, n),
        w_bar_pow: Exact::new(w_sum, n),
        eta_pow: Exact::new(n, w_sum),
        eta_check: Exact::new(n, w_sum - e_link),
        theta_hat: theta,
        theta_hat_link: Exact(theta.0 * Ratio::from_integer(n_ch as u64)),
        w_bar_exact: use_oracle.then(|| Exact::new(exact_sum, n)),
        latency: latency_stats(&link_latencies),
        quality: quality(&link_latencies, link_lost, n),
    };
    Ok(MetricsReport {
        params: ParamsEcho {
            mode: da.mode,
            t_lre: da.t_lre,
            td: da.td,
            failed_copy_policy: da.failed_copy_policy,
            lost_copy_attempts: da.lost_copy_attempts,
            lost_copy_charge: charge as u32,
            packets: n,
            channels: n_ch,
        },
        channels,
        link,
    })
}

/// Evaluates every grid point on the same base log.
pub fn sweep(run: &RunLog, grid: &[DaParams]) -> Result<Vec<MetricsReport>, MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    grid.iter()
        .enumerate()
        .map(|(index, da)| {
            compute_report(run, da).map_err(|e| match e {
                MetricsError::Da(source) => MetricsError::Point { index, source },
                other => other,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 13] = [
    "mode",
    "T_LRE_us",
    "T_D_us",
    "e_bar",
    "z_bar",
    "theta_hat",
    "Theta_hat",
    "eta_check",
    "d_mean_us",
    "d_p9999_us",
    "loss_pct",
    "miss10ms_pct",
    "miss100ms_pct",
];

fn mode_name(mode: DaMode) -> &'static str {
    match mode {
        DaMode::Pow => "pow",
        DaMode::Rda => "rda",
        DaMode::Tdd => "tdd",
    }
}

fn sweep_row(r: &MetricsReport) -> Vec<String> {
    let l = &r.link;
    let us = |d: Option<DurationNs>| d.map_or(String::new(), |d| format!("{}", d.as_us_f64()));
    let pct = |x: Option<Exact>| x.map_or(String::new(), percent);
    vec![
        mode_name(r.params.mode).to_string(),
        format!("{}", r.params.t_lre.as_us_f64()),
        format!("{}", r.params.td.as_us_f64()),
        l.e_bar.to_string(),
        l.z_bar.to_string(),
        l.theta_hat.to_string(),
        l.theta_hat_link.to_string(),
        l.eta_check.to_string(),
        us(l.latency.map(|s| s.mean)),
        us(l.latency.map(|s| s.p99_99)),
        percent(l.quality.loss),
        pct(l.quality.miss_10ms),
        pct(l.quality.miss_100ms),
    ]
}

/// Writes one CSV row per report.
pub fn write_sweep_csv<W: Write>(reports: &[MetricsReport], sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in reports {
        w.write_record(sweep_row(r))?;
    }
    w.flush()?;
    Ok(())
}

fn ms(d: DurationNs) -> String {
    sig4(d.0 as f64 / 1e6)
}

fn stats_cells(s: &Option<LatencyStats>) -> [String; 5] {
    match s {
        Some(s) => [ms(s.mean), ms(s.std_dev), ms(s.median), ms(s.p99_99), ms(s.max)],
        None => std::array::from_fn(|_| "-".to_string()),
    }
}

/// Human-readable table of a report (latencies in ms, ratios in %).
pub fn render_summary(r: &MetricsReport) -> String {
    let p = &r.params;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mode {}  T_LRE {}  T_D {}  N {}  lost copies charged {}",
        mode_name(p.mode),
        p.t_lre,
        p.td,
        p.packets,
        p.lost_copy_charge
    );
    let _ = writeln!(
        out,
        "{:<5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "", "mean", "std", "median", "p99.99", "max", "d>10ms%", "d>100ms%", "loss%", "e_bar", "z_bar", "w_bar"
    );
    let pct = |x: Option<Exact>| x.map_or("-".to_string(), percent);
    let mut row = |label: String, s: &Option<LatencyStats>, q: &QualityRatios, e: Exact, z: Exact, w: Exact| {
        let [a, b, c, d, m] = stats_cells(s);
        let _ = writeln!(
            out,
            "{label:<5} {a:>9} {b:>9} {c:>9} {d:>9} {m:>9} {:>9} {:>9} {:>9} {e:>9} {z:>9} {w:>9}",
            pct(q.miss_10ms),
            pct(q.miss_100ms),
            percent(q.loss),
        );
    };
    for c in &r.channels {
        row(c.channel.to_string(), &c.latency, &c.quality, c.e_bar, c.z_bar, c.w_bar);
    }
    let l = &r.link;
    row("link".into(), &l.latency, &l.quality, l.e_bar, l.z_bar, l.w_bar_pow);
    let _ = write!(
        out,
        "eta_pow {}  eta_check {}  theta_hat {}  Theta_hat {}",
        l.eta_pow, l.eta_check, l.theta_hat, l.theta_hat_link
    );
    if let Some(w) = l.w_bar_exact {
        let _ = write!(out, "  w_bar_exact {w}");
    }
    out.push('\n');
    out
}
