use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::geo::{compute_distance, GeoFix};
use crate::ingest::sigmf::FrameRecord;
use crate::types::{ReceiverId, Scenario};

/// Frames closer than this to their receiver are dropped.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSample {
    /// m
    pub distance: f64,
    /// dB
    pub snr: f64,
}

/// SNR against distance for one receiver, sorted by distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSeries {
    pub receiver_id: ReceiverId,
    pub scenario: Scenario,
    pub samples: Vec<SnrSample>,
}

impl SnrSeries {
    /// Sorts `samples` and checks the series invariants.
    pub fn new(
        receiver_id: ReceiverId,
        scenario: Scenario,
        mut samples: Vec<SnrSample>,
    ) -> Result<Self> {
        for s in &samples {
            if !(s.distance > 0.0 && s.distance.is_finite()) {
                return Err(Error::Domain(format!(
                    "distance {} must be positive",
                    s.distance
                )));
            }
            if !s.snr.is_finite() {
                return Err(Error::Domain(format!("snr {} is not finite", s.snr)));
            }
        }
        samples.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        Ok(SnrSeries {
            receiver_id,
            scenario,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBuild {
    /// One series per receiver, ordered by receiver id.
    pub series: Vec<SnrSeries>,
    /// Records dropped for being within [`MIN_DISTANCE_M`] of their receiver.
    pub excluded: usize,
}

pub fn build_snr_series(
    records: &[FrameRecord],
    receiver_positions: &HashMap<ReceiverId, GeoFix>,
    scenario: Scenario,
) -> Result<SeriesBuild> {
    let mut grouped: BTreeMap<&ReceiverId, Vec<SnrSample>> = BTreeMap::new();
    let mut excluded = 0;
    for rec in records {
        let rx = receiver_positions
            .get(&rec.receiver_id)
            .ok_or_else(|| Error::UnknownReceiver(rec.receiver_id.to_string()))?;
        let distance = compute_distance(&rec.tx_position, rx);
        if distance < MIN_DISTANCE_M {
            excluded += 1;
            continue;
        }
        grouped
            .entry(&rec.receiver_id)
            .or_default()
            .push(SnrSample {
                distance,
                snr: rec.snr,
            });
    }
    let series = grouped
        .into_iter()
        .map(|(id, samples)| SnrSeries::new(id.clone(), scenario, samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeriesBuild { series, excluded })
}
