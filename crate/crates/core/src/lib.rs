//! Empirical channel models for LoRa links in the sub-GHz ISM band.
//!
//! The crate turns SigMF-annotated frame datasets into per-receiver SNR
//! series, fits a log-distance pathloss model, splits the deviation around
//! it into white small-scale fading and spatially correlated AR(1)
//! large-scale fading, validates the fit, and generates synthetic SNR
//! traces from the fitted model.
//!
//! ```
//! use lorachan_core::{predict_mean_snr, PathlossModel, Scenario};
//!
//! let model = PathlossModel {
//!     scenario: Scenario::UavLos,
//!     rho0: 64.20,
//!     gamma: 2.79,
//!     d0: 10.0,
//!     sigma_z: 5.36,
//!     n_samples: 0,
//! };
//! let snr = predict_mean_snr(&model, 1000.0).unwrap();
//! assert!((snr - 8.40).abs() < 1e-9);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod fading;
pub mod ingest;
pub mod pathloss;
pub mod reference;
pub mod stats;
pub mod trace;
pub mod types;
pub mod validation;

pub use error::{Error, Result};
pub use fading::{
    autocovariance, derive_sigma_y, estimate_phi, fit_fading, innovation_variance,
    local_average_bins, pool_sigma_x, rescale_step, small_scale_residuals, FadingFit, FadingModel,
    LargeScaleSeries, PhiEstimate,
};
pub use ingest::{
    build_snr_series, compute_distance, estimate_snr_from_iq, load_iq_window, parse_sigmf,
    FieldMap, FrameRecord, GeoFix, SnrSample, SnrSeries,
};
pub use pathloss::{fit_gaussian, fit_log_distance, predict_mean_snr, residuals_z, PathlossModel};
pub use trace::{
    build_covariance, build_mean, generate_ar, generate_mvn, packet_success, ChannelTrace,
    ScenarioModel, TraceConfig, TraceMode,
};
pub use types::{ReceiverId, Scenario};
pub use validation::{
    acf_with_bounds, ar_residuals, closure_report, normality_stat, ClosureReport, ResidualReport,
};
