//! Diagnostics for a fitted model: AR residual whiteness, normality of
//! residuals, and consistency between the pathloss and fading parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{autocovariance, FadingModel, LargeScaleSeries};
use crate::pathloss::{PathlossModel, HATA_OKUMURA_URBAN_GAMMA};
use crate::stats;

/// Two-sided 95 % quantile of the standard normal.
pub const Z_95: f64 = 1.96;
pub const DEFAULT_MAX_LAG: usize = 50;
/// Share of lags that must stay inside the 95 % bounds.
pub const WHITENESS_MIN_FRACTION: f64 = 0.90;
pub const HISTOGRAM_BINS: usize = 41;
pub const HISTOGRAM_SPAN_STDS: f64 = 4.0;
pub const MIN_NORMALITY_SAMPLES: usize = 20;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArResiduals {
    pub values: Vec<f64>,
    /// Runs with a single bin, which yield no residual.
    pub short_runs: usize,
}

/// One-step prediction errors `Y[n+1] - phi Y[n]` inside each contiguous run.
pub fn ar_residuals(series: &LargeScaleSeries, phi: f64) -> ArResiduals {
    let mut out = ArResiduals::default();
    for run in series.run_values() {
        if run.len() < 2 {
            out.short_runs += 1;
            continue;
        }
        out.values.extend(run.windows(2).map(|w| w[1] - phi * w[0]));
    }
    out
}

/// Residuals of every receiver, concatenated in ascending receiver order.
pub fn pooled_ar_residuals(series: &[LargeScaleSeries], phi: f64) -> ArResiduals {
    let mut ordered: Vec<&LargeScaleSeries> = series.iter().collect();
    ordered.sort_by(|a, b| a.receiver_id.cmp(&b.receiver_id));
    let mut out = ArResiduals::default();
    for s in ordered {
        let r = ar_residuals(s, phi);
        out.values.extend(r.values);
        out.short_runs += r.short_runs;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acf {
    /// `(lag, correlation)` for lags `0..=max_lag`.
    pub values: Vec<(usize, f64)>,
    pub conf_bound: f64,
}

impl Acf {
    /// Share of lags `1..` whose correlation lies within `±conf_bound`.
    pub fn fraction_within_bounds(&self) -> f64 {
        let lags = &self.values[1..];
        if lags.is_empty() {
            return 1.0;
        }
        let inside = lags
            .iter()
            .filter(|(_, c)| c.abs() <= self.conf_bound)
            .count();
        inside as f64 / lags.len() as f64
    }
}

/// Sample autocorrelation with the 95 % bound of a white Gaussian process.
pub fn acf_with_bounds(values: &[f64], max_lag: usize) -> Result<Acf> {
    let n = values.len();
    if max_lag < 1 || n <= max_lag {
        return Err(Error::InsufficientData {
            what: "autocorrelation",
            needed: max_lag.max(1) + 1,
            got: n,
        });
    }
    let r0 = autocovariance(values, 0)?;
    if r0 <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    acf.push((0, 1.0));
    for k in 1..=max_lag {
        acf.push((k, autocovariance(values, k)? / r0));
    }
    Ok(Acf {
        values: acf,
        conf_bound: Z_95 / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normality {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `N (g1^2 / 6 + g2^2 / 24)`; chi-squared with two degrees of freedom
    /// under normality.
    pub statistic: f64,
}

/// Moment-based normality summary.
pub fn normality_stat(values: &[f64]) -> Result<Normality> {
    let n = values.len();
    if n < MIN_NORMALITY_SAMPLES {
        return Err(Error::InsufficientData {
            what: "normality statistic",
            needed: MIN_NORMALITY_SAMPLES,
            got: n,
        });
    }
    let m = stats::mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if m2 <= 0.0 || m2 <= f64::EPSILON * m * m {
        return Err(Error::DegenerateSeries);
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let statistic = nf * (skewness * skewness / 6.0 + excess_kurtosis * excess_kurtosis / 24.0);
    Ok(Normality {
        skewness,
        excess_kurtosis,
        statistic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over mean ± 4 sample standard deviations.
/// Values outside the span are not counted.
pub fn histogram(values: &[f64]) -> Result<Vec<HistogramBin>> {
    let (mu, sigma) = crate::pathloss::fit_gaussian(values)?;
    if sigma <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let lo = mu - HISTOGRAM_SPAN_STDS * sigma;
    let width = 2.0 * HISTOGRAM_SPAN_STDS * sigma / HISTOGRAM_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|i| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for v in values {
        let pos = (v - lo) / width;
        if pos >= 0.0 && pos < HISTOGRAM_BINS as f64 {
            bins[pos as usize].count += 1;
        }
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub acf: Vec<(usize, f64)>,
    pub conf_bound: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub normality_stat: f64,
    pub fraction_within_bounds: f64,
}

impl ResidualReport {
    pub fn build(residuals: Vec<f64>, max_lag: usize) -> Result<Self> {
        let acf = acf_with_bounds(&residuals, max_lag)?;
        let norm = normality_stat(&residuals)?;
        Ok(ResidualReport {
            fraction_within_bounds: acf.fraction_within_bounds(),
            conf_bound: acf.conf_bound,
            acf: acf.values,
            skewness: norm.skewness,
            excess_kurtosis: norm.excess_kurtosis,
            normality_stat: norm.statistic,
            residuals,
        })
    }

    pub fn is_white(&self) -> bool {
        self.fraction_within_bounds >= WHITENESS_MIN_FRACTION
    }
}

/// A named numeric check with its gap to the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn within(name: &str, gap: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_owned(),
            gap,
            tolerance,
            pass: gap.abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub checks: Vec<Check>,
    pub gamma: f64,
    /// Urban reference exponent, present for NLoS scenarios.
    pub hata_okumura_gamma: Option<f64>,
}

impl ClosureReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{:<28} gap {:>12.6}  tol {:<8} {}\n",
                c.name,
                c.gap,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        match self.hata_okumura_gamma {
            Some(h) => s.push_str(&format!(
                "gamma {:.2} (Hata-Okumura urban reference {h:.2})\n",
                self.gamma
            )),
            None => s.push_str(&format!("gamma {:.2}\n", self.gamma)),
        }
        s
    }
}

/// Consistency of the variance decomposition and innovation variance.
pub fn closure_report(
    pathloss: &PathlossModel,
    fading: &FadingModel,
    tolerance: f64,
) -> ClosureReport {
    let (sz, sx, sy) = (pathloss.sigma_z, fading.sigma_x, fading.sigma_y);
    let phi = fading.phi;
    let sigma_y_gap = if sx <= sz {
        sy - (sz * sz - sx * sx).sqrt()
    } else {
        f64::INFINITY
    };
    let eps_gap = fading.sigma_eps * fading.sigma_eps - (1.0 - phi * phi) * sy * sy;
    let checks = vec![
        Check::within("sigma_y difference of variances", sigma_y_gap, tolerance),
        Check::within("innovation variance", eps_gap, tolerance),
        Check {
            name: "sigma_x <= sigma_z".into(),
            gap: (sx - sz).max(0.0),
            tolerance: 0.0,
            pass: sx <= sz,
        },
    ];
    ClosureReport {
        checks,
        gamma: pathloss.gamma,
        hata_okumura_gamma: pathloss
            .scenario
            .is_nlos()
            .then_some(HATA_OKUMURA_URBAN_GAMMA),
    }
}

/// Observed deviations compared with the model's standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedSpread {
    pub sigma_z: f64,
    pub sigma_x: f64,
    pub sigma_eps: f64,
}

/// Absolute tolerance on observed standard deviations, dB.
pub const SPREAD_TOLERANCE_DB: f64 = 0.5;

pub fn spread_checks(
    pathloss: &PathlossModel,
    fading: &FadingModel,
    observed: &ObservedSpread,
) -> Vec<Check> {
    vec![
        Check::within(
            "observed sigma_z",
            observed.sigma_z - pathloss.sigma_z,
            SPREAD_TOLERANCE_DB,
        ),
        Check::within(
            "observed sigma_x",
            observed.sigma_x - fading.sigma_x,
            SPREAD_TOLERANCE_DB,
        ),
        Check::within(
            "observed sigma_eps",
            observed.sigma_eps - fading.sigma_eps,
            SPREAD_TOLERANCE_DB,
        ),
    ]
}
