//! Small-scale / large-scale fading decomposition.
//!
//! The deviation `z` of each receiver is split into a large-scale part `Y`
//! (the local average of `z` over non-overlapping distance bins) and a
//! small-scale part `X` (what remains inside each bin). `Y` is modeled as a
//! first-order autoregressive process over the bin grid, with its
//! coefficient estimated by the lag-one Yule-Walker ratio pooled over all
//! receivers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SnrSeries;
use crate::pathloss::{residuals_z, PathlossModel};
use crate::stats;
use crate::types::{ReceiverId, Scenario};

pub const DEFAULT_DELTA_D: f64 = 10.0;
pub const DEFAULT_MIN_BIN_COUNT: usize = 3;
/// Upper clamp for the AR coefficient; keeps the process stationary.
pub const PHI_MAX: f64 = 0.9999;
pub const MIN_PHI_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingModel {
    pub scenario: Scenario,
    /// Small-scale standard deviation, dB.
    pub sigma_x: f64,
    /// Large-scale standard deviation, dB.
    pub sigma_y: f64,
    /// AR(1) coefficient per `delta_d` step.
    pub phi: f64,
    /// Innovation standard deviation, dB.
    pub sigma_eps: f64,
    /// Distance step the AR parameters refer to, meters.
    pub delta_d: f64,
}

impl FadingModel {
    /// Builds a model whose innovation variance keeps the large-scale
    /// variance at `sigma_y^2`.
    pub fn new(
        scenario: Scenario,
        sigma_x: f64,
        sigma_y: f64,
        phi: f64,
        delta_d: f64,
    ) -> Result<Self> {
        let m = FadingModel {
            scenario,
            sigma_x,
            sigma_y,
            phi,
            sigma_eps: ((1.0 - phi * phi) * sigma_y * sigma_y).max(0.0).sqrt(),
            delta_d,
        };
        m.check_ranges()?;
        Ok(m)
    }

    /// Parameter ranges, without the innovation-variance closure.
    pub fn check_ranges(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.phi) {
            return Err(Error::InvalidModel(format!(
                "phi = {} outside [0, 1)",
                self.phi
            )));
        }
        if !(self.sigma_x >= 0.0 && self.sigma_y >= 0.0 && self.sigma_eps >= 0.0) {
            return Err(Error::InvalidModel(
                "standard deviations must be >= 0".into(),
            ));
        }
        if !(self.delta_d > 0.0 && self.delta_d.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "delta_d = {} must be positive",
                self.delta_d
            )));
        }
        Ok(())
    }

    /// Full invariant check, including `sigma_eps^2 = (1 - phi^2) sigma_y^2`
    /// to `rel_tol` relative.
    pub fn validate(&self, rel_tol: f64) -> Result<()> {
        self.check_ranges()?;
        let want = (1.0 - self.phi * self.phi) * self.sigma_y * self.sigma_y;
        let got = self.sigma_eps * self.sigma_eps;
        if (got - want).abs() > rel_tol * want.max(f64::MIN_POSITIVE) && (got - want).abs() > 1e-12
        {
            return Err(Error::InvalidModel(format!(
                "sigma_eps^2 = {got} but (1 - phi^2) sigma_y^2 = {want}"
            )));
        }
        Ok(())
    }

    /// Stationary large-scale variance implied by the AR parameters.
    pub fn ar_variance(&self) -> f64 {
        self.sigma_eps * self.sigma_eps / (1.0 - self.phi * self.phi)
    }
}

/// Large-scale fading estimates of one receiver on the distance-bin grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleSeries {
    pub receiver_id: ReceiverId,
    pub delta_d: f64,
    /// Bin number `k` of `[k delta_d, (k + 1) delta_d)`.
    pub bin_index: Vec<u64>,
    pub bin_centers: Vec<f64>,
    pub y_values: Vec<f64>,
    pub bin_counts: Vec<usize>,
}

impl LargeScaleSeries {
    pub fn len(&self) -> usize {
        self.y_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_values.is_empty()
    }

    /// Maximal runs of adjacent bins, as ranges into the value vectors.
    pub fn runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=self.bin_index.len() {
            if i == self.bin_index.len() || self.bin_index[i] != self.bin_index[i - 1] + 1 {
                if i > start {
                    runs.push(start..i);
                }
                start = i;
            }
        }
        runs
    }

    pub fn run_values(&self) -> Vec<&[f64]> {
        self.runs().into_iter().map(|r| &self.y_values[r]).collect()
    }
}

fn bin_of(distance: f64, delta_d: f64) -> u64 {
    (distance / delta_d).floor() as u64
}

/// Averages `z` over distance bins of width `delta_d`, dropping bins with
/// fewer than `min_bin_count` samples.
pub fn local_average_bins(
    receiver_id: &ReceiverId,
    residuals: &[(f64, f64)],
    delta_d: f64,
    min_bin_count: usize,
) -> Result<LargeScaleSeries> {
    if !(delta_d > 0.0) {
        return Err(Error::Domain(format!(
            "delta_d = {delta_d} must be positive"
        )));
    }
    if min_bin_count < 2 {
        return Err(Error::Domain("min_bin_count must be at least 2".into()));
    }
    // (first value, sum of offsets from it, count); the shift keeps the
    // mean of a constant bin exact.
    let mut bins: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for &(d, z) in residuals {
        let e = bins.entry(bin_of(d, delta_d)).or_insert((z, 0.0, 0));
        e.1 += z - e.0;
        e.2 += 1;
    }
    let mut out = LargeScaleSeries {
        receiver_id: receiver_id.clone(),
        delta_d,
        bin_index: Vec::new(),
        bin_centers: Vec::new(),
        y_values: Vec::new(),
        bin_counts: Vec::new(),
    };
    for (k, (first, offsets, count)) in bins {
        if count < min_bin_count {
            continue;
        }
        out.bin_index.push(k);
        out.bin_centers.push((k as f64 + 0.5) * delta_d);
        out.y_values.push(first + offsets / count as f64);
        out.bin_counts.push(count);
    }
    if out.is_empty() {
        return Err(Error::InsufficientData {
            what: "distance bins",
            needed: min_bin_count,
            got: 0,
        });
    }
    Ok(out)
}

/// `z` minus its bin mean, for samples whose bin survived. Order is kept.
pub fn small_scale_residuals(residuals: &[(f64, f64)], bins: &LargeScaleSeries) -> Vec<f64> {
    let means: BTreeMap<u64, f64> = bins
        .bin_index
        .iter()
        .copied()
        .zip(bins.y_values.iter().copied())
        .collect();
    residuals
        .iter()
        .filter_map(|&(d, z)| means.get(&bin_of(d, bins.delta_d)).map(|m| z - m))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledSigmaX {
    pub sigma_x: f64,
    /// Per-receiver sample std (N - 1); `None` below two values.
    pub per_receiver: Vec<Option<f64>>,
}

/// Common small-scale deviation over every receiver's values.
pub fn pool_sigma_x(per_receiver_xhat: &[Vec<f64>]) -> Result<PooledSigmaX> {
    let all: Vec<f64> = per_receiver_xhat.iter().flatten().copied().collect();
    if all.len() < 2 {
        return Err(Error::InsufficientData {
            what: "small-scale deviation",
            needed: 2,
            got: all.len(),
        });
    }
    Ok(PooledSigmaX {
        sigma_x: stats::std_dev(&all, 1),
        per_receiver: per_receiver_xhat
            .iter()
            .map(|v| (v.len() >= 2).then(|| stats::std_dev(v, 1)))
            .collect(),
    })
}

/// `sqrt(sigma_z^2 - sigma_x^2)`.
pub fn derive_sigma_y(sigma_z: f64, sigma_x: f64) -> Result<f64> {
    if sigma_x > sigma_z {
        return Err(Error::DecompositionInvalid { sigma_z, sigma_x });
    }
    Ok((sigma_z * sigma_z - sigma_x * sigma_x).sqrt())
}

/// Biased sample autocovariance at `lag`, mean removed.
pub fn autocovariance(values: &[f64], lag: usize) -> Result<f64> {
    let n = values.len();
    if lag >= n {
        return Err(Error::LagOutOfRange { lag, len: n });
    }
    let m = stats::mean(values);
    let s: f64 = values[..n - lag]
        .iter()
        .zip(&values[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    Ok(s / n as f64)
}

/// Unclamped pooled lag-one Yule-Walker ratio over contiguous runs.
///
/// Each run's autocovariances are weighted by its length, so the pooled
/// ratio is `sum(N_r R_r(1)) / sum(N_r R_r(0))`. Runs shorter than two
/// values carry no lag-one information and are skipped.
pub fn yule_walker_ratio(runs: &[&[f64]]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for run in runs.iter().filter(|r| r.len() >= 2) {
        let n = run.len() as f64;
        num += autocovariance(run, 1)? * n;
        den += autocovariance(run, 0)? * n;
    }
    if den <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEstimate {
    pub phi: f64,
    /// Ratio before clamping to `[0, PHI_MAX]`.
    pub raw: f64,
    pub clamped: bool,
    /// Values in runs of length >= 2.
    pub n_pooled: usize,
    pub n_runs: usize,
}

/// AR(1) coefficient pooled over all receivers' contiguous runs.
pub fn estimate_phi(series: &[LargeScaleSeries]) -> Result<PhiEstimate> {
    let runs: Vec<&[f64]> = series
        .iter()
        .flat_map(|s| s.run_values())
        .filter(|r| r.len() >= 2)
        .collect();
    let n_pooled: usize = runs.iter().map(|r| r.len()).sum();
    if n_pooled < MIN_PHI_SAMPLES {
        return Err(Error::InsufficientData {
            what: "Yule-Walker estimate",
            needed: MIN_PHI_SAMPLES,
            got: n_pooled,
        });
    }
    let raw = yule_walker_ratio(&runs)?;
    let phi = raw.clamp(0.0, PHI_MAX);
    Ok(PhiEstimate {
        phi,
        raw,
        clamped: phi != raw,
        n_pooled,
        n_runs: runs.len(),
    })
}

/// `(1 - phi^2)(sigma_z^2 - sigma_x^2)`.
pub fn innovation_variance(phi: f64, sigma_z: f64, sigma_x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&phi) {
        return Err(Error::Domain(format!("phi = {phi} outside [0, 1)")));
    }
    let sigma_y = derive_sigma_y(sigma_z, sigma_x)?;
    Ok((1.0 - phi * phi) * sigma_y * sigma_y)
}

/// Re-expresses the AR parameters for a distance step `delta_d_new`.
pub fn rescale_step(model: &FadingModel, delta_d_new: f64) -> Result<FadingModel> {
    if !(delta_d_new > 0.0) {
        return Err(Error::Domain(format!(
            "delta_d = {delta_d_new} must be positive"
        )));
    }
    if delta_d_new == model.delta_d {
        return Ok(*model);
    }
    let phi = model.phi.powf(delta_d_new / model.delta_d);
    Ok(FadingModel {
        phi,
        sigma_eps: ((1.0 - phi * phi) * model.sigma_y * model.sigma_y).sqrt(),
        delta_d: delta_d_new,
        ..*model
    })
}

/// Intermediate products of [`fit_fading`], kept for export and validation.
#[derive(Debug, Clone)]
pub struct FadingFit {
    pub model: FadingModel,
    pub bins: Vec<LargeScaleSeries>,
    pub residuals: Vec<(ReceiverId, Vec<(f64, f64)>)>,
    pub sigma_x: PooledSigmaX,
    pub phi: PhiEstimate,
}

/// Runs the decomposition on every receiver of a scenario.
///
/// Receivers whose residuals leave no surviving bin are skipped.
pub fn fit_fading(
    pathloss: &PathlossModel,
    series: &[SnrSeries],
    delta_d: f64,
    min_bin_count: usize,
) -> Result<FadingFit> {
    let mut ordered: Vec<&SnrSeries> = series.iter().collect();
    ordered.sort_by(|a, b| a.receiver_id.cmp(&b.receiver_id));

    let mut bins = Vec::new();
    let mut residuals = Vec::new();
    let mut xhat = Vec::new();
    for s in ordered {
        let z = residuals_z(pathloss, s);
        match local_average_bins(&s.receiver_id, &z, delta_d, min_bin_count) {
            Ok(b) => {
                xhat.push(small_scale_residuals(&z, &b));
                bins.push(b);
            }
            Err(e) if e.is_insufficient_data() => {}
            Err(e) => return Err(e),
        }
        residuals.push((s.receiver_id.clone(), z));
    }
    if bins.is_empty() {
        return Err(Error::InsufficientData {
            what: "distance bins",
            needed: min_bin_count,
            got: 0,
        });
    }

    let sigma_x = pool_sigma_x(&xhat)?;
    let sigma_y = derive_sigma_y(pathloss.sigma_z, sigma_x.sigma_x)?;
    let phi = estimate_phi(&bins)?;
    let model = FadingModel::new(
        pathloss.scenario,
        sigma_x.sigma_x,
        sigma_y,
        phi.phi,
        delta_d,
    )?;
    Ok(FadingFit {
        model,
        bins,
        residuals,
        sigma_x,
        phi,
    })
}
