//! TOML simulation configuration.
//!
//! ```toml
//! packets = 100000
//! period = "100ms"
//! seed = 7
//! full_trace = true
//!
//! [deferral]
//! td = "100us"
//!
//! [channels.A]
//! loss_prob = 0.05
//!
//! [channels.B]
//! loss_prob = 0.05
//! interferers = 2
//! loss_schedule = [{ from = "60s", loss_prob = 0.3 }]
//! phy = { sifs = "16us", retry_limit = 21 }
//! interference = { burst_len_mean = 300.0, gap_mean = "200ms" }
//! ```
//!
//! Durations are strings with a unit suffix (`ns`, `us`, `ms`, `s`) or bare
//! integers in nanoseconds. Omitted keys take the defaults of
//! [`SimConfig::duplex`]; omitting `[channels]` altogether yields a default
//! duplex link.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::ConfigError;
use crate::sim::{ChannelSpec, DeferralSpec, LossPhase, SimConfig};
use crate::time::{DurationNs, SignedDurationNs, TimePoint};
use crate::trace::ChannelId;

#[derive(Deserialize)]
#[serde(untagged)]
enum Dur {
    Ns(i64),
    Text(String),
}

impl Dur {
    fn signed(&self) -> Result<SignedDurationNs, ConfigError> {
        match self {
            Dur::Ns(n) => Ok(SignedDurationNs(*n)),
            Dur::Text(s) => Ok(SignedDurationNs::from_str(s)?),
        }
    }

    fn unsigned(&self) -> Result<DurationNs, ConfigError> {
        match self {
            Dur::Ns(n) => u64::try_from(*n)
                .map(DurationNs)
                .map_err(|_| ConfigError::Invalid(format!("duration {n} must not be negative"))),
            Dur::Text(s) => Ok(DurationNs::from_str(s)?),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    packets: Option<u64>,
    period: Option<Dur>,
    seed: Option<u64>,
    full_trace: Option<bool>,
    deferral: Option<RawDeferral>,
    channels: Option<BTreeMap<ChannelId, RawChannel>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeferral {
    td: Dur,
    #[serde(default = "primary_a")]
    primary: ChannelId,
}

fn primary_a() -> ChannelId {
    ChannelId::A
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    loss_prob: Option<f64>,
    #[serde(default)]
    loss_schedule: Vec<RawPhase>,
    interferers: Option<u32>,
    salt: Option<u64>,
    #[serde(default)]
    phy: RawPhy,
    #[serde(default)]
    interference: RawInterference,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    from: Dur,
    loss_prob: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPhy {
    sifs: Option<Dur>,
    ack_timeout: Option<Dur>,
    slot_time: Option<Dur>,
    difs: Option<Dur>,
    cw_min: Option<u32>,
    cw_max: Option<u32>,
    retry_limit: Option<u32>,
    data_frame_duration: Option<Dur>,
    ack_frame_duration: Option<Dur>,
    #[serde(default)]
    data_duration_schedule: Vec<Dur>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInterference {
    payload_airtime: Option<Dur>,
    intra_burst_spacing: Option<Dur>,
    burst_len_mean: Option<f64>,
    burst_len_cap: Option<u32>,
    gap_mean: Option<Dur>,
    gap_cap: Option<Dur>,
}

fn set(slot: &mut DurationNs, value: &Option<Dur>) -> Result<(), ConfigError> {
    if let Some(v) = value {
        *slot = v.unsigned()?;
    }
    Ok(())
}

impl RawChannel {
    fn into_spec(self, base: ChannelSpec) -> Result<ChannelSpec, ConfigError> {
        let mut spec = base;
        let p = &mut spec.phy;
        set(&mut p.sifs, &self.phy.sifs)?;
        set(&mut p.ack_timeout, &self.phy.ack_timeout)?;
        set(&mut p.slot_time, &self.phy.slot_time)?;
        set(&mut p.difs, &self.phy.difs)?;
        set(&mut p.data_frame_duration, &self.phy.data_frame_duration)?;
        set(&mut p.ack_frame_duration, &self.phy.ack_frame_duration)?;
        p.cw_min = self.phy.cw_min.unwrap_or(p.cw_min);
        p.cw_max = self.phy.cw_max.unwrap_or(p.cw_max);
        p.retry_limit = self.phy.retry_limit.unwrap_or(p.retry_limit);
        if !self.phy.data_duration_schedule.is_empty() {
            p.data_duration_schedule =
                self.phy.data_duration_schedule.iter().map(Dur::unsigned).collect::<Result<_, _>>()?;
        }

        let i = &mut spec.interference;
        i.interferer_count = self.interferers.unwrap_or(i.interferer_count);
        set(&mut i.payload_airtime, &self.interference.payload_airtime)?;
        set(&mut i.intra_burst_spacing, &self.interference.intra_burst_spacing)?;
        set(&mut i.gap_mean, &self.interference.gap_mean)?;
        set(&mut i.gap_cap, &self.interference.gap_cap)?;
        i.burst_len_mean = self.interference.burst_len_mean.unwrap_or(i.burst_len_mean);
        i.burst_len_cap = self.interference.burst_len_cap.unwrap_or(i.burst_len_cap);

        spec.errors.loss_prob = self.loss_prob.unwrap_or(spec.errors.loss_prob);
        if !self.loss_schedule.is_empty() {
            spec.errors.schedule = self
                .loss_schedule
                .iter()
                .map(|ph| Ok(LossPhase { from: TimePoint(ph.from.unsigned()?.0), loss_prob: ph.loss_prob }))
                .collect::<Result<_, ConfigError>>()?;
        }
        spec.salt = self.salt.unwrap_or(spec.salt);
        Ok(spec)
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut config = SimConfig::duplex(raw.packets.unwrap_or(10_000), raw.seed.unwrap_or(0), 0);
    if let Some(p) = &raw.period {
        config.period = p.unsigned()?;
    }
    config.emit_full_trace = raw.full_trace.unwrap_or(config.emit_full_trace);
    if let Some(d) = &raw.deferral {
        config.deferral = Some(DeferralSpec { primary: d.primary, td: d.td.signed()? });
    }
    if let Some(channels) = raw.channels {
        let n = channels.len();
        if let Some((_, ch)) = channels.keys().enumerate().find(|(k, ch)| ch.index() != *k) {
            return Err(ConfigError::Invalid(format!(
                "channel labels must be contiguous from A; found {ch} among {n} channels"
            )));
        }
        config.channels =
            channels.into_values().map(|raw| raw.into_spec(ChannelSpec::default())).collect::<Result<_, _>>()?;
    }
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
