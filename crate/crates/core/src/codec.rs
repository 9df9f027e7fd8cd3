//! JSON-lines run log codec and flat CSV export.
//!
//! Line 1 is `{"meta": {...}}`. Every following line is one packet:
//!
//! ```text
//! {"i":1,"ch":{"A":{"l":0,"t_T":..,"t_X":..,"w":1,"Td":..,"Ta":..},"B":{..}}}
//! ```
//!
//! `Td`/`Ta` are omitted when unknown and `trace` only appears in full-trace
//! logs, as a list of `{"n","t_W","Td","Ta","ok"}` entries.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CodecError, TraceError};
use crate::time::{DurationNs, TimePoint};
use crate::trace::{AttemptTrace, ChannelId, CopyRecord, PacketRecord, RunLog, RunMeta};

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    meta: RunMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketLine {
    i: u64,
    ch: BTreeMap<ChannelId, CopyLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CopyLine {
    l: u8,
    #[serde(rename = "t_T")]
    t_t: TimePoint,
    #[serde(rename = "t_X")]
    t_x: TimePoint,
    w: u32,
    #[serde(rename = "Td", default, skip_serializing_if = "Option::is_none")]
    td: Option<DurationNs>,
    #[serde(rename = "Ta", default, skip_serializing_if = "Option::is_none")]
    ta: Option<DurationNs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<AttemptLine>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttemptLine {
    n: u32,
    #[serde(rename = "t_W")]
    t_w: TimePoint,
    #[serde(rename = "Td")]
    td: DurationNs,
    #[serde(rename = "Ta", default, skip_serializing_if = "Option::is_none")]
    ta: Option<DurationNs>,
    ok: bool,
}

impl From<&CopyRecord> for CopyLine {
    fn from(c: &CopyRecord) -> Self {
        CopyLine {
            l: c.loss as u8,
            t_t: c.t_t,
            t_x: c.t_x,
            w: c.attempts,
            td: c.final_data_duration,
            ta: c.final_ack_duration,
            trace: c.full_trace.as_ref().map(|t| {
                t.iter()
                    .map(|a| AttemptLine {
                        n: a.ordinal,
                        t_w: a.start_on_air,
                        td: a.data_duration,
                        ta: a.ack_duration,
                        ok: a.succeeded,
                    })
                    .collect()
            }),
        }
    }
}

impl CopyLine {
    fn into_record(self) -> Result<CopyRecord, String> {
        let loss = match self.l {
            0 => false,
            1 => true,
            v => return Err(format!("loss flag must be 0 or 1, got {v}")),
        };
        Ok(CopyRecord {
            loss,
            t_t: self.t_t,
            t_x: self.t_x,
            attempts: self.w,
            final_data_duration: self.td,
            final_ack_duration: self.ta,
            full_trace: self.trace.map(|t| {
                t.into_iter()
                    .map(|a| AttemptTrace {
                        ordinal: a.n,
                        start_on_air: a.t_w,
                        data_duration: a.td,
                        ack_duration: a.ta,
                        succeeded: a.ok,
                    })
                    .collect()
            }),
        })
    }
}

pub fn encode_log<W: Write>(run: &RunLog, mut sink: W) -> Result<(), CodecError> {
    serde_json::to_writer(&mut sink, &HeaderLine { meta: run.meta.clone() }).map_err(|e| CodecError::Io(e.into()))?;
    sink.write_all(b"\n")?;
    for p in &run.packets {
        let line = PacketLine { i: p.index, ch: p.channels().map(|(ch, c)| (ch, CopyLine::from(c))).collect() };
        serde_json::to_writer(&mut sink, &line).map_err(|e| CodecError::Io(e.into()))?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn encode_to_vec(run: &RunLog) -> Vec<u8> {
    let mut buf = Vec::new();
    encode_log(run, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Decodes and validates a log. Line numbers in errors are 1-based.
pub fn decode_log<R: BufRead>(source: R) -> Result<RunLog, CodecError> {
    let mut lines = source.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut next_line = || -> Result<Option<(usize, String)>, CodecError> {
        for (n, l) in lines.by_ref() {
            let l = l?;
            if !l.trim().is_empty() {
                return Ok(Some((n, l)));
            }
        }
        Ok(None)
    };

    let Some((hn, header)) = next_line()? else {
        return Err(CodecError::Parse { line: 1, message: "missing meta header".into() });
    };
    let header: HeaderLine = serde_json::from_str(&header)
        .map_err(|e| CodecError::Parse { line: hn, message: format!("bad meta header: {e}") })?;
    header.meta.validate().map_err(|source| CodecError::Invalid { line: hn, source })?;

    let mut run = RunLog { meta: header.meta, packets: Vec::new() };
    let n_channels = run.meta.channels.len();
    while let Some((n, line)) = next_line()? {
        let parsed: PacketLine =
            serde_json::from_str(&line).map_err(|e| CodecError::Parse { line: n, message: e.to_string() })?;
        let index = parsed.i;
        if parsed.ch.len() != n_channels || parsed.ch.keys().enumerate().any(|(k, ch)| ch.index() != k) {
            return Err(CodecError::Parse {
                line: n,
                message: format!("packet {index}: expected channels A..{}", ChannelId(n_channels as u8 - 1)),
            });
        }
        let copies = parsed
            .ch
            .into_values()
            .map(CopyLine::into_record)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|message| CodecError::Parse { line: n, message })?;
        let packet = PacketRecord { index, copies };
        let prev = run.packets.last().map_or(0, |p| p.index);
        run.validate_packet(&packet, prev, DurationNs::ZERO)
            .map_err(|source| CodecError::Invalid { line: n, source })?;
        run.packets.push(packet);
    }
    if run.packets.len() as u64 != run.meta.packets {
        return Err(CodecError::Invalid {
            line: hn,
            source: TraceError::InvalidMeta(format!(
                "header announces {} packets, log holds {}",
                run.meta.packets,
                run.packets.len()
            )),
        });
    }
    Ok(run)
}

/// One CSV row per copy: `i,ch,l,t_T,t_X,w,Td,Ta`.
pub fn export_csv<W: Write>(run: &RunLog, sink: W) -> Result<(), CodecError> {
    let mut wtr = csv::Writer::from_writer(sink);
    wtr.write_record(["i", "ch", "l", "t_T", "t_X", "w", "Td", "Ta"])?;
    let opt = |d: Option<DurationNs>| d.map(|d| d.0.to_string()).unwrap_or_default();
    for p in &run.packets {
        for (ch, c) in p.channels() {
            wtr.write_record([
                p.index.to_string(),
                ch.to_string(),
                (c.loss as u8).to_string(),
                c.t_t.0.to_string(),
                c.t_x.0.to_string(),
                c.attempts.to_string(),
                opt(c.final_data_duration),
                opt(c.final_ack_duration),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{ChannelMeta, LogView, PhyParams};

    fn meta(n: u64, view: LogView) -> RunMeta {
        RunMeta {
            packets: n,
            period: DurationNs::from_ms(100),
            channels: (0..2)
                .map(|k| ChannelMeta { id: ChannelId(k), phy: PhyParams::default(), interferers: k as u32 })
                .collect(),
            seed: Some(7),
            deferral: None,
            view,
        }
    }

    fn copy(t_t: u64, lost: bool) -> CopyRecord {
        CopyRecord {
            loss: lost,
            t_t: TimePoint(t_t),
            t_x: TimePoint(t_t + 400_000),
            attempts: if lost { 21 } else { 2 },
            final_data_duration: (!lost).then_some(DurationNs::from_us(80)),
            final_ack_duration: (!lost).then_some(DurationNs::from_us(28)),
            full_trace: None,
        }
    }

    fn three_packets() -> RunLog {
        RunLog {
            meta: meta(3, LogView::AdapterOnly),
            packets: (1..=3)
                .map(|i| PacketRecord {
                    index: i,
                    copies: vec![copy(i * 100_000_000, false), copy(i * 100_000_000, i == 2)],
                })
                .collect(),
        }
    }

    #[test]
    fn adapter_view_round_trip() {
        let run = three_packets();
        let bytes = encode_to_vec(&run);
        let back = decode_log(bytes.as_slice()).unwrap();
        assert_eq!(back, run);
        assert!(back.packets.iter().all(|p| p.copies.iter().all(|c| c.full_trace.is_none())));
        let text = String::from_utf8(bytes).unwrap();
        let line = text.lines().nth(2).unwrap();
        assert!(line.starts_with(r#"{"i":2,"ch":{"A":{"l":0,"t_T":200000000"#), "{line}");
        assert!(line.contains(r#""B":{"l":1,"t_T":200000000,"t_X":200400000,"w":21}"#), "{line}");
    }

    #[test]
    fn zero_packet_header_rejected() {
        let run = RunLog { meta: meta(0, LogView::AdapterOnly), packets: vec![] };
        let err = decode_log(encode_to_vec(&run).as_slice()).unwrap_err();
        assert!(matches!(err, CodecError::Invalid { line: 1, .. }), "{err}");
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let mut text = String::from_utf8(encode_to_vec(&three_packets())).unwrap();
        text = text.replacen(r#""w":2"#, r#""w":"two""#, 2);
        // The first replacement lands on packet 1 (line 2).
        let err = decode_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, CodecError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_order_indices_rejected() {
        let mut run = three_packets();
        run.packets.swap(1, 2);
        let err = decode_log(encode_to_vec(&run).as_slice()).unwrap_err();
        assert!(matches!(err, CodecError::Invalid { line: 4, .. }), "{err}");
    }

    #[test]
    fn truncated_log_rejected() {
        let text = String::from_utf8(encode_to_vec(&three_packets())).unwrap();
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(decode_log(truncated.as_bytes()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_copy() {
        let mut out = Vec::new();
        export_csv(&three_packets(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 1 + 6);
        assert_eq!(rows[0], "i,ch,l,t_T,t_X,w,Td,Ta");
        assert_eq!(rows[4], "2,B,1,200000000,200400000,21,,");
    }
}
