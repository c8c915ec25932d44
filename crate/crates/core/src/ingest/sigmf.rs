//! SigMF metadata (`.sigmf-meta`) reading and writing.
//!
//! Each annotation of a recording describes one received frame. Which
//! annotation key carries which frame field is configurable through a
//! [`FieldMap`]; by default every field lives under the `lora:` namespace
//! with its snake_case name (`lora:snr`, `lora:tx_position`, ...).

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ingest::geo::GeoFix;
use crate::types::ReceiverId;

pub type Timestamp = DateTime<Utc>;

pub const GLOBAL_DATATYPE: &str = "core:datatype";
pub const GLOBAL_SAMPLE_RATE: &str = "core:sample_rate";
pub const GLOBAL_VERSION: &str = "core:version";
pub const SAMPLE_START: &str = "core:sample_start";

/// LoRa bandwidths in Hz.
pub const BANDWIDTHS_HZ: [f64; 3] = [125e3, 250e3, 500e3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodeRate {
    #[serde(rename = "4/5")]
    Cr45,
    #[serde(rename = "4/6")]
    Cr46,
    #[serde(rename = "4/7")]
    Cr47,
    #[serde(rename = "4/8")]
    Cr48,
}

impl CodeRate {
    pub fn as_str(self) -> &'static str {
        match self {
            CodeRate::Cr45 => "4/5",
            CodeRate::Cr46 => "4/6",
            CodeRate::Cr47 => "4/7",
            CodeRate::Cr48 => "4/8",
        }
    }

    /// Accepts "4/5".."4/8" or the radio register index 1..4.
    fn from_json(v: &Value) -> Option<Self> {
        let idx = match v {
            Value::String(s) => match s.trim() {
                "4/5" => 1,
                "4/6" => 2,
                "4/7" => 3,
                "4/8" => 4,
                _ => return None,
            },
            Value::Number(n) => n.as_u64()?,
            _ => return None,
        };
        match idx {
            1 => Some(CodeRate::Cr45),
            2 => Some(CodeRate::Cr46),
            3 => Some(CodeRate::Cr47),
            4 => Some(CodeRate::Cr48),
            _ => None,
        }
    }
}

/// Transmitter settings used during a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmitterConfig {
    pub carrier_frequency: f64,
    pub spreading_factor: u8,
    pub code_rate: CodeRate,
    pub bandwidth: f64,
    pub tx_power_dbm: f64,
    pub payload_len: usize,
}

impl TransmitterConfig {
    pub const PEDESTRIAN: TransmitterConfig = TransmitterConfig {
        carrier_frequency: 862.5e6,
        spreading_factor: 7,
        code_rate: CodeRate::Cr45,
        bandwidth: 125e3,
        tx_power_dbm: 14.0,
        payload_len: 7,
    };

    pub const UAV: TransmitterConfig = TransmitterConfig {
        carrier_frequency: 862.5e6,
        spreading_factor: 10,
        code_rate: CodeRate::Cr45,
        bandwidth: 250e3,
        tx_power_dbm: 14.0,
        payload_len: 19,
    };
}

/// The per-frame fields carried by a dataset entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    SpreadingFactor,
    CodeRate,
    CarrierFrequency,
    Bandwidth,
    ReceiverId,
    SamplingRate,
    ReceptionTime,
    Snr,
    TxPosition,
    Velocity,
    Cfo,
    FrameId,
    Payload,
    IqFileId,
    FrameStart,
    IqFileTime,
}

impl Field {
    pub const ALL: [Field; 16] = [
        Field::SpreadingFactor,
        Field::CodeRate,
        Field::CarrierFrequency,
        Field::Bandwidth,
        Field::ReceiverId,
        Field::SamplingRate,
        Field::ReceptionTime,
        Field::Snr,
        Field::TxPosition,
        Field::Velocity,
        Field::Cfo,
        Field::FrameId,
        Field::Payload,
        Field::IqFileId,
        Field::FrameStart,
        Field::IqFileTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::SpreadingFactor => "spreading_factor",
            Field::CodeRate => "code_rate",
            Field::CarrierFrequency => "carrier_frequency",
            Field::Bandwidth => "bandwidth",
            Field::ReceiverId => "receiver_id",
            Field::SamplingRate => "sampling_rate",
            Field::ReceptionTime => "reception_time",
            Field::Snr => "snr",
            Field::TxPosition => "tx_position",
            Field::Velocity => "velocity",
            Field::Cfo => "cfo",
            Field::FrameId => "frame_id",
            Field::Payload => "payload",
            Field::IqFileId => "iq_file_id",
            Field::FrameStart => "frame_start",
            Field::IqFileTime => "iq_file_time",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Field name to annotation key mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMap {
    keys: BTreeMap<Field, String>,
}

impl Default for FieldMap {
    fn default() -> Self {
        let keys = Field::ALL
            .into_iter()
            .map(|f| (f, format!("lora:{}", f.name())))
            .collect();
        FieldMap { keys }
    }
}

impl FieldMap {
    /// Defaults overridden by `(field name, annotation key)` pairs.
    pub fn with_overrides<'a, I>(overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut map = FieldMap::default();
        for (name, key) in overrides {
            let field = Field::from_name(name).ok_or_else(|| {
                Error::InvalidConfig(format!("unknown field `{name}` in field_map"))
            })?;
            map.keys.insert(field, key.to_owned());
        }
        Ok(map)
    }

    pub fn key(&self, field: Field) -> &str {
        &self.keys[&field]
    }
}

impl Serialize for FieldMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<&str, &str> = self
            .keys
            .iter()
            .map(|(f, k)| (f.name(), k.as_str()))
            .collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<String, String>::deserialize(d)?;
        FieldMap::with_overrides(m.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(serde::de::Error::custom)
    }
}

/// One received frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub spreading_factor: u8,
    pub code_rate: CodeRate,
    /// Hz
    pub carrier_frequency: f64,
    /// Hz
    pub bandwidth: f64,
    pub receiver_id: ReceiverId,
    /// Hz
    pub sampling_rate: f64,
    pub reception_time: Timestamp,
    /// dB
    pub snr: f64,
    pub tx_position: GeoFix,
    /// m/s
    pub velocity: f64,
    /// Carrier frequency offset, Hz.
    pub cfo: f64,
    pub frame_id: u64,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    pub iq_file_id: String,
    /// Sample index of the frame start inside the IQ file.
    pub frame_start: u64,
    pub iq_file_time: Timestamp,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

impl FrameRecord {
    /// Checks the value-range invariants that do not need the IQ file.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !(7..=12).contains(&self.spreading_factor) {
            return Err(format!(
                "spreading factor {} outside 7..=12",
                self.spreading_factor
            ));
        }
        if !BANDWIDTHS_HZ.contains(&self.bandwidth) {
            return Err(format!(
                "bandwidth {} Hz is not 125, 250 or 500 kHz",
                self.bandwidth
            ));
        }
        if !self.snr.is_finite() {
            return Err(format!("snr {} is not finite", self.snr));
        }
        self.tx_position.validate().map_err(|e| e.to_string())
    }
}

/// Why one annotation did not yield a record.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordIssue {
    MissingField {
        field: Field,
        key: String,
    },
    InvalidField {
        field: Field,
        key: String,
        reason: String,
    },
    Invariant(String),
}

impl fmt::Display for RecordIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordIssue::MissingField { field, key } => {
                write!(f, "missing key `{key}` (field {field})")
            }
            RecordIssue::InvalidField { field, key, reason } => {
                write!(f, "invalid value for key `{key}` (field {field}): {reason}")
            }
            RecordIssue::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedAnnotation {
    /// Position in the `annotations` array.
    pub index: usize,
    pub issue: RecordIssue,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedFrames {
    pub records: Vec<FrameRecord>,
    /// Annotation index each record came from.
    pub sources: Vec<usize>,
    pub rejected: Vec<RejectedAnnotation>,
}

/// A SigMF metadata document, kept close to its JSON shape.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SigmfMeta {
    pub global: Map<String, Value>,
    pub captures: Vec<Value>,
    pub annotations: Vec<Value>,
}

impl SigmfMeta {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            offset: byte_offset(bytes, e.line(), e.column()),
            message: e.to_string(),
        })?;
        let Value::Object(mut top) = doc else {
            return Err(structural("top level is not an object"));
        };
        let global = match top.remove("global") {
            Some(Value::Object(m)) => m,
            Some(_) => return Err(structural("`global` is not an object")),
            None => return Err(structural("missing `global` section")),
        };
        let captures = take_array(&mut top, "captures")?;
        let annotations = take_array(&mut top, "annotations")?;
        Ok(SigmfMeta {
            global,
            captures,
            annotations,
        })
    }

    pub fn datatype(&self) -> Option<&str> {
        self.global.get(GLOBAL_DATATYPE).and_then(Value::as_str)
    }

    pub fn to_value(&self) -> Value {
        let mut top = Map::new();
        top.insert("global".into(), Value::Object(self.global.clone()));
        top.insert("captures".into(), Value::Array(self.captures.clone()));
        top.insert("annotations".into(), Value::Array(self.annotations.clone()));
        Value::Object(top)
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("JSON values always serialize")
    }

    /// Decodes every annotation into a frame record.
    pub fn frames(&self, map: &FieldMap) -> ParsedFrames {
        let mut out = ParsedFrames::default();
        for (index, ann) in self.annotations.iter().enumerate() {
            match record_from_annotation(ann, map) {
                Ok(rec) => {
                    out.records.push(rec);
                    out.sources.push(index);
                }
                Err(issue) => out.rejected.push(RejectedAnnotation { index, issue }),
            }
        }
        out
    }

    /// Builds a document holding `records` as annotations.
    pub fn from_frames(
        global: Map<String, Value>,
        records: &[FrameRecord],
        map: &FieldMap,
    ) -> Self {
        let annotations = records
            .iter()
            .map(|r| annotation_from_record(r, map))
            .collect();
        SigmfMeta {
            global,
            captures: vec![serde_json::json!({ SAMPLE_START: 0 })],
            annotations,
        }
    }
}

/// Parses a metadata document into frame records.
///
/// Annotations that cannot be decoded or violate a record invariant are
/// returned in [`ParsedFrames::rejected`]; only a malformed document fails
/// as a whole.
pub fn parse_sigmf(meta_bytes: &[u8], field_map: &FieldMap) -> Result<ParsedFrames> {
    Ok(SigmfMeta::from_slice(meta_bytes)?.frames(field_map))
}

/// Minimal `global` section for a cf32 recording.
pub fn default_global(sample_rate: f64) -> Map<String, Value> {
    let mut g = Map::new();
    g.insert(GLOBAL_DATATYPE.into(), Value::from("cf32_le"));
    g.insert(GLOBAL_SAMPLE_RATE.into(), Value::from(sample_rate));
    g.insert(GLOBAL_VERSION.into(), Value::from("1.0.0"));
    g
}

fn structural(msg: &str) -> Error {
    Error::Parse {
        offset: 0,
        message: msg.to_owned(),
    }
}

fn take_array(top: &mut Map<String, Value>, name: &str) -> Result<Vec<Value>> {
    match top.remove(name) {
        Some(Value::Array(v)) => Ok(v),
        Some(_) => Err(structural(&format!("`{name}` is not an array"))),
        None => Err(structural(&format!("missing `{name}` section"))),
    }
}

/// serde_json reports 1-based line and column; convert to a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .nth(line.saturating_sub(2))
        .map(|(i, _)| i + 1);
    let line_start = if line == 1 {
        0
    } else {
        line_start.unwrap_or(bytes.len())
    };
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

struct Fields<'a> {
    ann: &'a Map<String, Value>,
    map: &'a FieldMap,
}

impl Fields<'_> {
    fn get(&self, field: Field) -> std::result::Result<&Value, RecordIssue> {
        let key = self.map.key(field);
        self.ann.get(key).ok_or_else(|| RecordIssue::MissingField {
            field,
            key: key.to_owned(),
        })
    }

    fn invalid(&self, field: Field, reason: impl Into<String>) -> RecordIssue {
        RecordIssue::InvalidField {
            field,
            key: self.map.key(field).to_owned(),
            reason: reason.into(),
        }
    }

    fn f64(&self, field: Field) -> std::result::Result<f64, RecordIssue> {
        self.get(field)?
            .as_f64()
            .ok_or_else(|| self.invalid(field, "expected a number"))
    }

    fn u64(&self, field: Field) -> std::result::Result<u64, RecordIssue> {
        self.get(field)?
            .as_u64()
            .ok_or_else(|| self.invalid(field, "expected a non-negative integer"))
    }

    fn ident(&self, field: Field) -> std::result::Result<String, RecordIssue> {
        match self.get(field)? {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) if n.is_u64() || n.is_i64() => Ok(n.to_string()),
            _ => Err(self.invalid(field, "expected a string or integer identifier")),
        }
    }

    fn time(&self, field: Field) -> std::result::Result<DateTime<Utc>, RecordIssue> {
        let s = self
            .get(field)?
            .as_str()
            .ok_or_else(|| self.invalid(field, "expected an RFC 3339 timestamp string"))?;
        DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| self.invalid(field, e.to_string()))
    }

    fn position(&self) -> std::result::Result<GeoFix, RecordIssue> {
        let field = Field::TxPosition;
        let v = self.get(field)?;
        match v {
            Value::Array(a) if a.len() == 3 => {
                let c: Option<Vec<f64>> = a.iter().map(Value::as_f64).collect();
                let c = c.ok_or_else(|| self.invalid(field, "expected [lat, lon, alt] numbers"))?;
                Ok(GeoFix {
                    lat: c[0],
                    lon: c[1],
                    alt: c[2],
                })
            }
            Value::Object(_) => {
                serde_json::from_value(v.clone()).map_err(|e| self.invalid(field, e.to_string()))
            }
            _ => Err(self.invalid(field, "expected {lat, lon, alt} or [lat, lon, alt]")),
        }
    }
}

fn record_from_annotation(
    ann: &Value,
    map: &FieldMap,
) -> std::result::Result<FrameRecord, RecordIssue> {
    let Value::Object(ann) = ann else {
        return Err(RecordIssue::Invariant("annotation is not an object".into()));
    };
    let f = Fields { ann, map };

    let sf = f.u64(Field::SpreadingFactor)?;
    let spreading_factor =
        u8::try_from(sf).map_err(|_| f.invalid(Field::SpreadingFactor, "out of range"))?;
    let code_rate = CodeRate::from_json(f.get(Field::CodeRate)?)
        .ok_or_else(|| f.invalid(Field::CodeRate, "expected 4/5, 4/6, 4/7 or 4/8"))?;
    let payload = match f.get(Field::Payload)? {
        Value::String(s) => hex::decode(s).map_err(|e| f.invalid(Field::Payload, e.to_string()))?,
        _ => return Err(f.invalid(Field::Payload, "expected a hex string")),
    };

    let rec = FrameRecord {
        spreading_factor,
        code_rate,
        carrier_frequency: f.f64(Field::CarrierFrequency)?,
        bandwidth: f.f64(Field::Bandwidth)?,
        receiver_id: ReceiverId(f.ident(Field::ReceiverId)?),
        sampling_rate: f.f64(Field::SamplingRate)?,
        reception_time: f.time(Field::ReceptionTime)?,
        snr: f.f64(Field::Snr)?,
        tx_position: f.position()?,
        velocity: f.f64(Field::Velocity)?,
        cfo: f.f64(Field::Cfo)?,
        frame_id: f.u64(Field::FrameId)?,
        payload,
        iq_file_id: f.ident(Field::IqFileId)?,
        frame_start: f.u64(Field::FrameStart)?,
        iq_file_time: f.time(Field::IqFileTime)?,
    };
    rec.check_invariants().map_err(RecordIssue::Invariant)?;
    Ok(rec)
}

fn timestamp(t: &DateTime<Utc>) -> Value {
    Value::from(t.to_rfc3339_opts(SecondsFormat::Nanos, true))
}

fn annotation_from_record(r: &FrameRecord, map: &FieldMap) -> Value {
    let mut ann = Map::new();
    ann.insert(SAMPLE_START.into(), Value::from(r.frame_start));
    let mut put = |field: Field, v: Value| {
        ann.insert(map.key(field).to_owned(), v);
    };
    put(Field::SpreadingFactor, Value::from(r.spreading_factor));
    put(Field::CodeRate, Value::from(r.code_rate.as_str()));
    put(Field::CarrierFrequency, Value::from(r.carrier_frequency));
    put(Field::Bandwidth, Value::from(r.bandwidth));
    put(Field::ReceiverId, Value::from(r.receiver_id.as_str()));
    put(Field::SamplingRate, Value::from(r.sampling_rate));
    put(Field::ReceptionTime, timestamp(&r.reception_time));
    put(Field::Snr, Value::from(r.snr));
    put(
        Field::TxPosition,
        serde_json::to_value(r.tx_position).expect("GeoFix serializes"),
    );
    put(Field::Velocity, Value::from(r.velocity));
    put(Field::Cfo, Value::from(r.cfo));
    put(Field::FrameId, Value::from(r.frame_id));
    put(Field::Payload, Value::from(hex::encode(&r.payload)));
    put(Field::IqFileId, Value::from(r.iq_file_id.as_str()));
    put(Field::FrameStart, Value::from(r.frame_start));
    put(Field::IqFileTime, timestamp(&r.iq_file_time));
    Value::Object(ann)
}
