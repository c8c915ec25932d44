//! On-disk artifacts: model JSON documents, CSV plot data and the binary
//! trace dump.
//!
//! Every float is rounded to nine significant digits before it is written,
//! so regenerated artifacts diff cleanly. Each artifact carries a config
//! echo: a `config` member in JSON documents, `# config: {...}` comment
//! lines at the top of CSV files and the header block of the binary dump.

use std::io::{self, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fading::LargeScaleSeries;
use crate::stats::round_sig;
use crate::trace::{ChannelTrace, ReceiverTrace, TraceMode};
use crate::types::ReceiverId;
use crate::validation::HistogramBin;

pub const SIGNIFICANT_DIGITS: usize = 9;

pub fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x, SIGNIFICANT_DIGITS))
}

/// Rounds every float in a JSON tree to nine significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .and_then(|f| serde_json::Number::from_f64(round_sig(f, SIGNIFICANT_DIGITS)))
            {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.iter_mut().for_each(|(_, v)| round_json(v)),
        _ => {}
    }
}

/// A model or report plus the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<T> {
    #[serde(flatten)]
    pub body: T,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub config: Value,
}

pub fn to_json_document<T: Serialize>(body: &T, config: &Value) -> Result<String> {
    let mut v = serde_json::to_value(Document {
        body,
        config: config.clone(),
    })?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_document<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let doc: Document<T> = serde_json::from_slice(bytes)?;
    Ok(doc.body)
}

fn write_echo(w: &mut impl Write, config: &Value) -> io::Result<()> {
    if !config.is_null() {
        let mut c = config.clone();
        round_json(&mut c);
        writeln!(w, "# config: {}", c)?;
    }
    Ok(())
}

/// `receiver_id,distance,snr,y`, receivers numbered from zero.
pub fn write_trace_csv(w: &mut impl Write, trace: &ChannelTrace, config: &Value) -> io::Result<()> {
    write_echo(w, config)?;
    writeln!(w, "# seed: {}", trace.seed)?;
    writeln!(w, "receiver_id,distance,snr,y")?;
    for (r, rt) in trace.receivers.iter().enumerate() {
        for i in 0..rt.distances.len() {
            writeln!(
                w,
                "{r},{},{},{}",
                fmt_num(rt.distances[i]),
                fmt_num(rt.snr[i]),
                fmt_num(rt.y_component[i])
            )?;
        }
    }
    Ok(())
}

pub const TRACE_MAGIC: &[u8; 8] = b"LCHTRACE";
pub const TRACE_VERSION: u32 = 1;

/// Binary columnar dump.
///
/// Layout, all little-endian: magic `LCHTRACE`, `u32` version, `u32` header
/// length, header JSON (config echo, seed, mode), `u64` receiver count,
/// `u64` points per receiver, then for each receiver the `distance`, `snr`
/// and `y` columns as `f64`.
pub fn write_trace_binary(w: &mut impl Write, trace: &ChannelTrace, config: &Value) -> Result<()> {
    let header = serde_json::json!({
        "config": config,
        "seed": trace.seed,
        "mode": trace.mode,
    });
    let header = serde_json::to_vec(&header)?;
    let n_points = trace.receivers.first().map_or(0, |r| r.distances.len());
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(trace.receivers.len() as u64).to_le_bytes())?;
    w.write_all(&(n_points as u64).to_le_bytes())?;
    for r in &trace.receivers {
        for col in [&r.distances, &r.snr, &r.y_component] {
            for v in col.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Parse {
                offset: self.pos,
                message: "truncated trace dump".into(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Reads a dump written by [`write_trace_binary`]; returns the header JSON
/// and the trace.
pub fn read_trace_binary(bytes: &[u8]) -> Result<(Value, ChannelTrace)> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(8)? != TRACE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "not a trace dump".into(),
        });
    }
    let version = c.u32()?;
    if version != TRACE_VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "trace dump version {version}"
        )));
    }
    let hlen = c.u32()? as usize;
    let header: Value = serde_json::from_slice(c.take(hlen)?)?;
    let n_receivers = c.u64()? as usize;
    let n_points = c.u64()? as usize;
    let mut receivers = Vec::with_capacity(n_receivers);
    for _ in 0..n_receivers {
        receivers.push(ReceiverTrace {
            distances: c.f64s(n_points)?,
            snr: c.f64s(n_points)?,
            y_component: c.f64s(n_points)?,
        });
    }
    let seed = header["seed"].as_u64().unwrap_or_default();
    let mode: TraceMode = serde_json::from_value(header["mode"].clone())?;
    Ok((
        header,
        ChannelTrace {
            seed,
            mode,
            receivers,
        },
    ))
}

/// `receiver_id,distance,z`
pub fn write_residuals_csv(
    w: &mut impl Write,
    residuals: &[(ReceiverId, Vec<(f64, f64)>)],
    config: &Value,
) -> io::Result<()> {
    write_echo(w, config)?;
    writeln!(w, "receiver_id,distance,z")?;
    for (id, pts) in residuals {
        for (d, z) in pts {
            writeln!(w, "{id},{},{}", fmt_num(*d), fmt_num(*z))?;
        }
    }
    Ok(())
}

/// `receiver_id,bin_center,y,count`
pub fn write_bins_csv(
    w: &mut impl Write,
    bins: &[LargeScaleSeries],
    config: &Value,
) -> io::Result<()> {
    write_echo(w, config)?;
    writeln!(w, "receiver_id,bin_center,y,count")?;
    for s in bins {
        for i in 0..s.len() {
            writeln!(
                w,
                "{},{},{},{}",
                s.receiver_id,
                fmt_num(s.bin_centers[i]),
                fmt_num(s.y_values[i]),
                s.bin_counts[i]
            )?;
        }
    }
    Ok(())
}

/// `lag,correlation,conf_bound`
pub fn write_acf_csv(
    w: &mut impl Write,
    acf: &[(usize, f64)],
    conf_bound: f64,
    config: &Value,
) -> io::Result<()> {
    write_echo(w, config)?;
    writeln!(w, "lag,correlation,conf_bound")?;
    for (k, c) in acf {
        writeln!(w, "{k},{},{}", fmt_num(*c), fmt_num(conf_bound))?;
    }
    Ok(())
}

/// `lo,hi,count`
pub fn write_histogram_csv(
    w: &mut impl Write,
    bins: &[HistogramBin],
    config: &Value,
) -> io::Result<()> {
    write_echo(w, config)?;
    writeln!(w, "lo,hi,count")?;
    for b in bins {
        writeln!(w, "{},{},{}", fmt_num(b.lo), fmt_num(b.hi), b.count)?;
    }
    Ok(())
}
