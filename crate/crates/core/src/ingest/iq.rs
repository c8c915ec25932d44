//! Raw IQ sample files (`.sigmf-data`) and a window-based SNR estimate.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Interleaved complex sample formats understood by [`load_iq_window`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    Cf64Le,
    Cf64Be,
    Cf32Le,
    Cf32Be,
    Ci16Le,
    Ci16Be,
    Ci8,
}

impl Datatype {
    /// Bytes per complex sample.
    pub fn sample_size(self) -> usize {
        match self {
            Datatype::Cf64Le | Datatype::Cf64Be => 16,
            Datatype::Cf32Le | Datatype::Cf32Be => 8,
            Datatype::Ci16Le | Datatype::Ci16Be => 4,
            Datatype::Ci8 => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Datatype::Cf64Le => "cf64_le",
            Datatype::Cf64Be => "cf64_be",
            Datatype::Cf32Le => "cf32_le",
            Datatype::Cf32Be => "cf32_be",
            Datatype::Ci16Le => "ci16_le",
            Datatype::Ci16Be => "ci16_be",
            Datatype::Ci8 => "ci8",
        }
    }

    fn component(self, b: &[u8]) -> f64 {
        match self {
            Datatype::Cf64Le => f64::from_le_bytes(b.try_into().unwrap()),
            Datatype::Cf64Be => f64::from_be_bytes(b.try_into().unwrap()),
            Datatype::Cf32Le => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            Datatype::Cf32Be => f32::from_be_bytes(b.try_into().unwrap()) as f64,
            Datatype::Ci16Le => i16::from_le_bytes(b.try_into().unwrap()) as f64,
            Datatype::Ci16Be => i16::from_be_bytes(b.try_into().unwrap()) as f64,
            Datatype::Ci8 => b[0] as i8 as f64,
        }
    }
}

impl FromStr for Datatype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cf64_le" => Datatype::Cf64Le,
            "cf64_be" => Datatype::Cf64Be,
            "cf32_le" => Datatype::Cf32Le,
            "cf32_be" => Datatype::Cf32Be,
            "ci16_le" => Datatype::Ci16Le,
            "ci16_be" => Datatype::Ci16Be,
            "ci8" | "ci8_le" | "ci8_be" => Datatype::Ci8,
            other => return Err(Error::UnsupportedFormat(other.to_owned())),
        })
    }
}

/// Number of whole complex samples in a data file.
pub fn sample_count(data_len: usize, datatype: Datatype) -> usize {
    data_len / datatype.sample_size()
}

/// Decodes `count` complex samples starting at sample index `start`.
///
/// Integer formats are returned unscaled, so every stored value is
/// reproduced exactly.
pub fn load_iq_window(
    data: &[u8],
    datatype: &str,
    start: usize,
    count: usize,
) -> Result<Vec<Complex64>> {
    let dt: Datatype = datatype.parse()?;
    let len = sample_count(data.len(), dt);
    if start.checked_add(count).is_none_or(|end| end > len) {
        return Err(Error::Range { start, count, len });
    }
    let size = dt.sample_size();
    let half = size / 2;
    let bytes = &data[start * size..(start + count) * size];
    Ok(bytes
        .chunks_exact(size)
        .map(|s| Complex64::new(dt.component(&s[..half]), dt.component(&s[half..])))
        .collect())
}

/// Encodes samples as interleaved little-endian 32-bit floats.
pub fn encode_cf32_le(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub const MIN_NOISE_LEN: usize = 64;

/// Result of the window-based SNR estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrEstimate {
    Db(f64),
    /// Frame window carries no more power than the noise window.
    Invalid {
        frame_power: f64,
        noise_power: f64,
    },
}

impl SnrEstimate {
    pub fn db(self) -> Option<f64> {
        match self {
            SnrEstimate::Db(v) => Some(v),
            SnrEstimate::Invalid { .. } => None,
        }
    }
}

fn mean_power(s: &[Complex64]) -> f64 {
    s.iter().map(|c| c.norm_sqr()).sum::<f64>() / s.len() as f64
}

/// SNR of a frame from the power in the frame window against the power in
/// the `noise_len` samples just before it.
pub fn estimate_snr_from_iq(
    samples: &[Complex64],
    frame_start: usize,
    frame_len: usize,
    noise_len: usize,
) -> Result<SnrEstimate> {
    if noise_len < MIN_NOISE_LEN {
        return Err(Error::InsufficientData {
            what: "noise window",
            needed: MIN_NOISE_LEN,
            got: noise_len,
        });
    }
    if frame_len == 0 {
        return Err(Error::InsufficientData {
            what: "frame window",
            needed: 1,
            got: 0,
        });
    }
    let len = samples.len();
    let Some(noise_start) = frame_start.checked_sub(noise_len) else {
        return Err(Error::Range {
            start: frame_start,
            count: noise_len,
            len,
        });
    };
    if frame_start + frame_len > len {
        return Err(Error::Range {
            start: frame_start,
            count: frame_len,
            len,
        });
    }
    let noise_power = mean_power(&samples[noise_start..frame_start]);
    let frame_power = mean_power(&samples[frame_start..frame_start + frame_len]);
    if frame_power <= noise_power || noise_power <= 0.0 {
        return Ok(SnrEstimate::Invalid {
            frame_power,
            noise_power,
        });
    }
    Ok(SnrEstimate::Db(
        10.0 * ((frame_power - noise_power) / noise_power).log10(),
    ))
}
