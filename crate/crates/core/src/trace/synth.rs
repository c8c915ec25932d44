//! Synthetic measurement campaigns drawn from a scenario model.
//!
//! Unlike the grid traces, a campaign has many frames per distance bin: the
//! large-scale value `Y` is drawn once per bin by the AR recursion, and each
//! frame adds its own white small-scale term at a uniformly drawn distance
//! inside the bin. Fitting such a campaign exercises the whole estimation
//! pipeline against known parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use rayon::prelude::*;

use super::{normal, receiver_rng, ScenarioModel};
use crate::error::{Error, Result};
use crate::ingest::dataset::META_EXT;
use crate::ingest::geo::GeoFix;
use crate::ingest::sigmf::{default_global, FieldMap, FrameRecord, SigmfMeta, TransmitterConfig};
use crate::ingest::{SnrSample, SnrSeries};
use crate::types::{ReceiverId, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignConfig {
    pub model: ScenarioModel,
    pub n_receivers: usize,
    pub n_bins: usize,
    pub frames_per_bin: usize,
    /// Index of the first distance bin; bins have the fading model's step.
    pub first_bin: u64,
    pub seed: u64,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_bins == 0 || self.frames_per_bin == 0 || self.n_receivers == 0 {
            return Err(Error::InvalidConfig(
                "campaign needs at least one receiver, bin and frame".into(),
            ));
        }
        if self.first_bin == 0 {
            return Err(Error::InvalidConfig("first_bin must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn receiver_name(index: usize) -> ReceiverId {
    ReceiverId(format!("rx{index}"))
}

/// One SNR series per receiver, named `rx0`, `rx1`, ...
pub fn synthesize_series(cfg: &CampaignConfig) -> Result<Vec<SnrSeries>> {
    cfg.validate()?;
    let pl = cfg.model.pathloss;
    let f = cfg.model.fading;
    let step = f.delta_d;
    (0..cfg.n_receivers)
        .into_par_iter()
        .map(|r| {
            let mut rng = receiver_rng(cfg.seed, r);
            let mut samples = Vec::with_capacity(cfg.n_bins * cfg.frames_per_bin);
            let mut y = f.sigma_y * normal(&mut rng);
            for k in 0..cfg.n_bins {
                if k > 0 {
                    y = f.phi * y + f.sigma_eps * normal(&mut rng);
                }
                let lo = (cfg.first_bin + k as u64) as f64 * step;
                for _ in 0..cfg.frames_per_bin {
                    let distance = lo + step * rng.random::<f64>();
                    let mean = pl.rho0 - 10.0 * pl.gamma * (distance / pl.d0).log10();
                    let snr = mean + f.sigma_x * normal(&mut rng) + y;
                    samples.push(SnrSample { distance, snr });
                }
            }
            SnrSeries::new(receiver_name(r), pl.scenario, samples)
        })
        .collect()
}

fn transmitter(scenario: Scenario) -> TransmitterConfig {
    match scenario {
        Scenario::PedestrianNlos => TransmitterConfig::PEDESTRIAN,
        _ => TransmitterConfig::UAV,
    }
}

/// Frame records reproducing `series`: each transmitter fix is placed due
/// north of its receiver, at the receiver's altitude, at the sample's range.
pub fn records_from_series(
    series: &[SnrSeries],
    receivers: &BTreeMap<ReceiverId, GeoFix>,
    start_time: DateTime<Utc>,
) -> Result<Vec<FrameRecord>> {
    let mut out = Vec::new();
    let mut frame_id = 0u64;
    for s in series {
        let rx = receivers
            .get(&s.receiver_id)
            .ok_or_else(|| Error::UnknownReceiver(s.receiver_id.to_string()))?;
        let tx_cfg = transmitter(s.scenario);
        for (i, smp) in s.samples.iter().enumerate() {
            let t = start_time + Duration::milliseconds(250 * frame_id as i64);
            out.push(FrameRecord {
                spreading_factor: tx_cfg.spreading_factor,
                code_rate: tx_cfg.code_rate,
                carrier_frequency: tx_cfg.carrier_frequency,
                bandwidth: tx_cfg.bandwidth,
                receiver_id: s.receiver_id.clone(),
                sampling_rate: 4.0 * tx_cfg.bandwidth,
                reception_time: t,
                snr: smp.snr,
                tx_position: rx.destination(0.0, smp.distance, rx.alt),
                velocity: 0.0,
                cfo: 0.0,
                frame_id,
                payload: frame_id.to_be_bytes()[8 - tx_cfg.payload_len.min(8)..].to_vec(),
                iq_file_id: format!("{}-synthetic", s.receiver_id),
                frame_start: i as u64 * 100_000,
                iq_file_time: start_time,
            });
            frame_id += 1;
        }
    }
    Ok(out)
}

/// Writes one `<receiver>.sigmf-meta` per receiver into `dir`.
pub fn write_sigmf_dataset(
    dir: &Path,
    records: &[FrameRecord],
    field_map: &FieldMap,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut by_rx: BTreeMap<&ReceiverId, Vec<FrameRecord>> = BTreeMap::new();
    for r in records {
        by_rx.entry(&r.receiver_id).or_default().push(r.clone());
    }
    for (rx, recs) in by_rx {
        let global = default_global(recs[0].sampling_rate);
        let meta = SigmfMeta::from_frames(global, &recs, field_map);
        fs::write(
            dir.join(format!("{rx}.{META_EXT}")),
            meta.to_string_pretty(),
        )?;
    }
    Ok(())
}
