//! Synthetic SNR traces over a distance grid.
//!
//! Two equivalent generators are provided: the AR recursion on the
//! large-scale component plus white small-scale fading, and a direct draw
//! of each receiver's SNR vector from the multivariate normal with the
//! model's mean and covariance. Receivers are independent; each one uses
//! its own stream of a seeded ChaCha generator so results do not depend on
//! evaluation order.

pub mod synth;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{rescale_step, FadingModel};
use crate::pathloss::PathlossModel;
use crate::types::Scenario;

/// Largest grid the dense multivariate-normal generator accepts.
pub const MAX_MVN_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub scenario: Scenario,
    pub pathloss: PathlossModel,
    pub fading: FadingModel,
}

impl ScenarioModel {
    pub fn new(pathloss: PathlossModel, fading: FadingModel) -> Result<Self> {
        let m = ScenarioModel {
            scenario: pathloss.scenario,
            pathloss,
            fading,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pathloss.scenario != self.scenario || self.fading.scenario != self.scenario {
            return Err(Error::InvalidModel(format!(
                "pathloss ({}) and fading ({}) models belong to different scenarios",
                self.pathloss.scenario, self.fading.scenario
            )));
        }
        self.pathloss.validate()?;
        self.fading.check_ranges()
    }

    /// Fading parameters expressed for grid step `delta_d`.
    pub fn fading_at(&self, delta_d: f64) -> Result<FadingModel> {
        rescale_step(&self.fading, delta_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    Ar,
    Mvn,
}

impl std::fmt::Display for TraceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TraceMode::Ar => "ar",
            TraceMode::Mvn => "mvn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub model: ScenarioModel,
    /// First grid distance, meters.
    pub start_distance: f64,
    pub n_points: usize,
    /// Grid step, meters.
    pub delta_d: f64,
    pub n_receivers: usize,
    pub seed: u64,
    pub mode: TraceMode,
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_points < 1 {
            return Err(Error::InvalidConfig("n_points must be at least 1".into()));
        }
        if !(self.start_distance > 0.0 && self.start_distance.is_finite()) {
            return Err(Error::InvalidConfig(
                "start_distance must be positive".into(),
            ));
        }
        if !(self.delta_d > 0.0 && self.delta_d.is_finite()) {
            return Err(Error::InvalidConfig("delta_d must be positive".into()));
        }
        if self.mode == TraceMode::Mvn && self.n_points > MAX_MVN_POINTS {
            return Err(Error::InvalidConfig(format!(
                "multivariate-normal mode supports at most {MAX_MVN_POINTS} points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|n| self.start_distance + n as f64 * self.delta_d)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverTrace {
    pub distances: Vec<f64>,
    pub snr: Vec<f64>,
    /// Large-scale component in AR mode; the full deviation from the mean
    /// in multivariate-normal mode, where the components are not separable.
    pub y_component: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub seed: u64,
    pub mode: TraceMode,
    pub receivers: Vec<ReceiverTrace>,
}

fn receiver_rng(seed: u64, receiver: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(receiver as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Model mean SNR at each grid distance.
pub fn build_mean(model: &PathlossModel, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&d| crate::pathloss::predict_mean_snr(model, d))
        .collect()
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}

/// Covariance of one receiver's SNR vector on a grid with step `delta_d`:
/// `sigma_z^2` on the diagonal, `sigma_eps^2 / (1 - phi^2) phi^|m-n|` off it.
pub fn build_covariance(model: &ScenarioModel, n_points: usize, delta_d: f64) -> Result<Matrix> {
    let fading = model.fading_at(delta_d)?;
    if !(fading.phi < 1.0) {
        return Err(Error::InvalidModel(format!(
            "phi = {} must be < 1",
            fading.phi
        )));
    }
    let var_z = model.pathloss.sigma_z * model.pathloss.sigma_z;
    let scale = fading.ar_variance();
    let mut lag = Vec::with_capacity(n_points);
    let mut p = 1.0;
    for _ in 0..n_points {
        lag.push(scale * p);
        p *= fading.phi;
    }
    let mut cov = Matrix::zeros(n_points);
    for i in 0..n_points {
        for j in 0..n_points {
            cov.set(i, j, if i == j { var_z } else { lag[i.abs_diff(j)] });
        }
    }
    Ok(cov)
}

/// Lower Cholesky factor. An all-zero matrix factors to zero.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.n;
    let mut l = Matrix::zeros(n);
    if a.data.iter().all(|&v| v == 0.0) {
        return Ok(l);
    }
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) {
            return Err(Error::Factorization { minor: j + 1 });
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// AR recursion with white small-scale fading.
pub fn generate_ar(config: &TraceConfig) -> Result<ChannelTrace> {
    config.validate()?;
    let fading = config.model.fading_at(config.delta_d)?;
    let grid = config.grid();
    let mean = build_mean(&config.model.pathloss, &grid)?;

    let receivers = (0..config.n_receivers)
        .into_par_iter()
        .map(|r| {
            let mut rng = receiver_rng(config.seed, r);
            let mut y = Vec::with_capacity(grid.len());
            let mut snr = Vec::with_capacity(grid.len());
            let mut prev = fading.sigma_y * normal(&mut rng);
            for (n, mu) in mean.iter().enumerate() {
                if n > 0 {
                    prev = fading.phi * prev + fading.sigma_eps * normal(&mut rng);
                }
                let x = fading.sigma_x * normal(&mut rng);
                y.push(prev);
                snr.push(mu + x + prev);
            }
            ReceiverTrace {
                distances: grid.clone(),
                snr,
                y_component: y,
            }
        })
        .collect();
    Ok(ChannelTrace {
        seed: config.seed,
        mode: TraceMode::Ar,
        receivers,
    })
}

/// Direct multivariate-normal draw of each receiver's SNR vector.
pub fn generate_mvn(config: &TraceConfig) -> Result<ChannelTrace> {
    config.validate()?;
    let grid = config.grid();
    let mean = build_mean(&config.model.pathloss, &grid)?;
    let cov = build_covariance(&config.model, config.n_points, config.delta_d)?;
    let chol = cholesky(&cov)?;
    let n = config.n_points;

    let receivers = (0..config.n_receivers)
        .into_par_iter()
        .map(|r| {
            let mut rng = receiver_rng(config.seed, r);
            let w: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let dev: Vec<f64> = (0..n)
                .map(|i| {
                    let row = &chol.data[i * n..i * n + i + 1];
                    row.iter().zip(&w).map(|(l, w)| l * w).sum()
                })
                .collect();
            let snr = mean.iter().zip(&dev).map(|(m, d)| m + d).collect();
            ReceiverTrace {
                distances: grid.clone(),
                snr,
                y_component: dev,
            }
        })
        .collect();
    Ok(ChannelTrace {
        seed: config.seed,
        mode: TraceMode::Mvn,
        receivers,
    })
}

pub fn generate(config: &TraceConfig) -> Result<ChannelTrace> {
    match config.mode {
        TraceMode::Ar => generate_ar(config),
        TraceMode::Mvn => generate_mvn(config),
    }
}

/// Whether a frame at `snr` is received, given per-SF demodulation floors.
pub fn packet_success(snr: f64, sf: u8, thresholds: &BTreeMap<u8, f64>) -> Result<bool> {
    if !(7..=12).contains(&sf) {
        return Err(Error::Domain(format!(
            "spreading factor {sf} outside 7..=12"
        )));
    }
    let floor = thresholds.get(&sf).ok_or(Error::MissingThreshold(sf))?;
    Ok(snr >= *floor)
}
