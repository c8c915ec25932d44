//! Log-distance pathloss fit.
//!
//! The mean SNR falls off as `rho0 - 10 * gamma * log10(d / d0)`; the
//! deviation `z` around that line is treated as zero-mean Gaussian fading.
//! The fit pools every receiver of a scenario into one ordinary
//! least-squares problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SnrSeries;
use crate::stats;
use crate::types::Scenario;

/// Reference distance, meters.
pub const DEFAULT_D0: f64 = 10.0;

/// Urban Hata-Okumura pathloss exponent extrapolated to a 20 m receiver
/// height. Only echoed next to fitted NLoS exponents in reports.
pub const HATA_OKUMURA_URBAN_GAMMA: f64 = 3.64;

pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossModel {
    pub scenario: Scenario,
    /// SNR at the reference distance, dB.
    pub rho0: f64,
    /// Pathloss exponent.
    pub gamma: f64,
    /// Reference distance, meters.
    pub d0: f64,
    /// Standard deviation of the deviation around the mean line, dB.
    pub sigma_z: f64,
    pub n_samples: usize,
}

impl PathlossModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "d0 = {} must be positive",
                self.d0
            )));
        }
        if !(self.sigma_z >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "sigma_z = {} must be >= 0",
                self.sigma_z
            )));
        }
        if !self.gamma.is_finite() || !self.rho0.is_finite() {
            return Err(Error::InvalidModel("rho0 and gamma must be finite".into()));
        }
        Ok(())
    }

    /// Same line expressed against another reference distance.
    pub fn with_reference(&self, d0: f64) -> PathlossModel {
        PathlossModel {
            rho0: self.rho0 - 10.0 * self.gamma * (d0 / self.d0).log10(),
            d0,
            ..*self
        }
    }
}

pub fn predict_mean_snr(model: &PathlossModel, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance {d} must be positive")));
    }
    Ok(model.rho0 - 10.0 * model.gamma * (d / model.d0).log10())
}

/// Pooled least-squares fit over all series.
pub fn fit_log_distance(series: &[SnrSeries], d0: f64) -> Result<PathlossModel> {
    if !(d0 > 0.0) {
        return Err(Error::Domain(format!(
            "reference distance {d0} must be positive"
        )));
    }
    let n: usize = series.iter().map(SnrSeries::len).sum();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            what: "log-distance fit",
            needed: MIN_FIT_SAMPLES,
            got: n,
        });
    }
    let scenario = series[0].scenario;
    let samples = || series.iter().flat_map(|s| s.samples.iter());
    if samples().any(|s| !(s.distance > 0.0)) {
        return Err(Error::Domain("all distances must be positive".into()));
    }

    // snr = rho0 + gamma * x with x = -10 log10(d / d0)
    let x: Vec<f64> = samples()
        .map(|s| -10.0 * (s.distance / d0).log10())
        .collect();
    let y: Vec<f64> = samples().map(|s| s.snr).collect();
    let x_mean = stats::mean(&x);
    let y_mean = stats::mean(&y);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(&y) {
        sxx += (xi - x_mean) * (xi - x_mean);
        sxy += (xi - x_mean) * (yi - y_mean);
    }
    let spread = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= (spread * 1e-12).powi(2) * n as f64 {
        return Err(Error::SingularDesign);
    }
    let gamma = sxy / sxx;
    let rho0 = y_mean - gamma * x_mean;

    let ssr: f64 = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - rho0 - gamma * xi).powi(2))
        .sum();
    let sigma_z = (ssr / (n - 2) as f64).sqrt();

    Ok(PathlossModel {
        scenario,
        rho0,
        gamma,
        d0,
        sigma_z,
        n_samples: n,
    })
}

/// Deviation of each sample from the model mean, as `(distance, z)`.
pub fn residuals_z(model: &PathlossModel, series: &SnrSeries) -> Vec<(f64, f64)> {
    series
        .samples
        .iter()
        .map(|s| {
            let mean = model.rho0 - 10.0 * model.gamma * (s.distance / model.d0).log10();
            (s.distance, s.snr - mean)
        })
        .collect()
}

/// Sample mean and standard deviation (N - 1).
pub fn fit_gaussian(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            what: "Gaussian fit",
            needed: 2,
            got: values.len(),
        });
    }
    Ok((stats::mean(values), stats::std_dev(values, 1)))
}
