//! Dataset ingestion: SigMF metadata, IQ windows, geometry and SNR series.

pub mod dataset;
pub mod geo;
pub mod iq;
pub mod series;
pub mod sigmf;

pub use geo::{compute_distance, GeoFix};
pub use iq::{estimate_snr_from_iq, load_iq_window, Datatype, SnrEstimate};
pub use series::{build_snr_series, SeriesBuild, SnrSample, SnrSeries};
pub use sigmf::{parse_sigmf, CodeRate, Field, FieldMap, FrameRecord, ParsedFrames, SigmfMeta};
