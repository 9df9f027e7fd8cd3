//! Deterministic generator of redundant-link run logs.
//!
//! Every channel runs its own MAC against its own interference timeline and
//! error process; channels never share random draws. Packet `i` (1-based) is
//! requested at `i * T_M`, plus the deferral offset on a deferred channel.

pub mod interference;
pub mod mac;
pub mod rng;

use crate::error::ConfigError;
use crate::time::{DurationNs, SignedDurationNs, TimePoint};
use crate::trace::{
    ChannelId, ChannelMeta, CopyRecord, Deferral, DeferralKind, LogView, PacketRecord, PhyParams, RunLog, RunMeta,
};

pub use interference::{generate_interference, BusyInterval, BusyTimeline, InterferenceParams};
pub use mac::{simulate_copy, ChannelState, ErrorModel, LossPhase};
use rng::{substream, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub phy: PhyParams,
    pub interference: InterferenceParams,
    pub errors: ErrorModel,
    /// Mixed into this channel's substream seeds only.
    pub salt: u64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            phy: PhyParams::default(),
            interference: InterferenceParams::default(),
            errors: ErrorModel::iid(0.05),
            salt: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeferralSpec {
    pub primary: ChannelId,
    pub td: SignedDurationNs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub channels: Vec<ChannelSpec>,
    pub packets: u64,
    pub period: DurationNs,
    pub seed: u64,
    pub deferral: Option<DeferralSpec>,
    pub emit_full_trace: bool,
}

impl SimConfig {
    /// Duplex link with default channels, `interferers_b` interferers on B.
    pub fn duplex(packets: u64, seed: u64, interferers_b: u32) -> Self {
        let b = ChannelSpec { interference: InterferenceParams::with_count(interferers_b), ..ChannelSpec::default() };
        SimConfig {
            channels: vec![ChannelSpec::default(), b],
            packets,
            period: DurationNs::from_ms(100),
            seed,
            deferral: None,
            emit_full_trace: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.packets == 0 {
            return bad("packet count must be at least 1".into());
        }
        if self.period == DurationNs::ZERO {
            return bad("generation period must be positive".into());
        }
        if self.channels.is_empty() || self.channels.len() > 26 {
            return bad("between 1 and 26 channels are supported".into());
        }
        for (k, ch) in self.channels.iter().enumerate() {
            let label = ChannelId(k as u8);
            ch.phy.validate().or_else(|e| bad(format!("channel {label}: {e}")))?;
            ch.interference.validate().or_else(|e| bad(format!("channel {label}: {e}")))?;
            ch.errors.validate().or_else(|e| bad(format!("channel {label}: {e}")))?;
        }
        if let Some(d) = self.deferral {
            if self.channels.len() != 2 {
                return bad("deferral requires a duplex link".into());
            }
            if d.primary.index() >= 2 {
                return bad(format!("primary channel {} is not part of the link", d.primary));
            }
            if d.td.abs() >= self.period {
                return bad(format!("|T_D| = {} must stay below the generation period {}", d.td.abs(), self.period));
            }
        }
        Ok(())
    }

    fn effective_deferral(&self) -> Option<Deferral> {
        self.deferral.filter(|d| !d.td.is_zero()).map(|d| Deferral {
            primary: d.primary,
            td: d.td,
            kind: DeferralKind::Real,
        })
    }

    fn request_offsets(&self) -> Vec<DurationNs> {
        match self.effective_deferral() {
            Some(d) => d.offsets().to_vec(),
            None => vec![DurationNs::ZERO; self.channels.len()],
        }
    }

    fn channel_state(&self, ch: ChannelId) -> ChannelState {
        let spec = &self.channels[ch.index()];
        let rngs = (0..spec.interference.interferer_count)
            .map(|k| substream(self.seed, ch, spec.salt, Purpose::Interferer(k)));
        ChannelState {
            timeline: BusyTimeline::new(&spec.interference, rngs),
            backoff_rng: substream(self.seed, ch, spec.salt, Purpose::Backoff),
            error_rng: substream(self.seed, ch, spec.salt, Purpose::Error),
            free_at: TimePoint::ZERO,
        }
    }
}

fn simulate_channel(config: &SimConfig, ch: ChannelId, offset: DurationNs) -> Vec<CopyRecord> {
    let spec = &config.channels[ch.index()];
    let mut state = config.channel_state(ch);
    (1..=config.packets)
        .map(|i| {
            let request = TimePoint(i * config.period.0) + offset;
            let mut copy = simulate_copy(&mut state, request, &spec.phy, &spec.errors, config.emit_full_trace);
            if !config.emit_full_trace && copy.loss {
                // The adapter reports no frame durations for a failed copy.
                copy.final_data_duration = None;
            }
            copy
        })
        .collect()
}

/// Generates a run. Identical configurations yield identical logs.
pub fn generate_run(config: &SimConfig) -> Result<RunLog, ConfigError> {
    config.validate()?;
    let offsets = config.request_offsets();
    let mut per_channel: Vec<std::vec::IntoIter<CopyRecord>> = (0..config.channels.len())
        .map(|k| simulate_channel(config, ChannelId(k as u8), offsets[k]).into_iter())
        .collect();
    let packets = (1..=config.packets)
        .map(|index| PacketRecord {
            index,
            copies: per_channel.iter_mut().map(|it| it.next().expect("one copy per packet")).collect(),
        })
        .collect();
    let meta = RunMeta {
        packets: config.packets,
        period: config.period,
        channels: config
            .channels
            .iter()
            .enumerate()
            .map(|(k, c)| ChannelMeta {
                id: ChannelId(k as u8),
                phy: c.phy.clone(),
                interferers: c.interference.interferer_count,
            })
            .collect(),
        seed: Some(config.seed),
        deferral: config.effective_deferral(),
        view: if config.emit_full_trace { LogView::FullTrace } else { LogView::AdapterOnly },
    };
    Ok(RunLog { meta, packets })
}

/// Generates a run whose secondary channel requests are actually delayed.
pub fn apply_real_deferral(config: &SimConfig) -> Result<RunLog, ConfigError> {
    if config.deferral.is_none() {
        return Err(ConfigError::Invalid("real deferral needs a deferral setting".into()));
    }
    generate_run(config)
}
