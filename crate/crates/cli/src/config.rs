use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use lorachan_core::ingest::dataset::DatasetConfig;
use lorachan_core::{Scenario, TraceMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run parameters. Every field may come from the config file; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, rename_all = "snake_case")]
pub struct RunConfig {
    /// SigMF recording or directory of `.sigmf-meta` files
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Receiver positions and field map (JSON or TOML)
    #[arg(long)]
    pub receivers: Option<PathBuf>,
    /// Measurement scenario: uav-los, uav-nlos or ped-nlos
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Option<Scenario>,
    /// Reference distance, meters [default: 10]
    #[arg(long)]
    pub d0: Option<f64>,
    /// Distance step of the large-scale grid, meters [default: 10]
    #[arg(long = "delta-d")]
    pub delta_d: Option<f64>,
    /// Frames needed for a distance bin to count [default: 3]
    #[arg(long = "min-bin-count")]
    pub min_bin_count: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory holding pathloss.json and fading.json
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Random seed for trace and campaign generation [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace sampler: ar (recursive) or mvn (joint Gaussian) [default: ar]
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<TraceMode>,
    /// Grid points per receiver [default: 100]
    #[arg(long = "n-points")]
    pub n_points: Option<usize>,
    /// Receivers to generate [default: 4]
    #[arg(long = "n-receivers")]
    pub n_receivers: Option<usize>,
    /// First grid distance, meters [default: 20]
    #[arg(long = "start-distance")]
    pub start_distance: Option<f64>,
    /// Largest ACF lag checked by `validate` [default: 50]
    #[arg(long = "max-lag")]
    pub max_lag: Option<usize>,
    /// Tolerance of the parameter closure checks [default: 0.02]
    #[arg(long = "closure-tol")]
    pub closure_tol: Option<f64>,
    /// Distance bins per receiver for `synth-dataset` [default: 400]
    #[arg(long = "n-bins")]
    pub n_bins: Option<usize>,
    /// Frames per distance bin for `synth-dataset` [default: 60]
    #[arg(long = "frames-per-bin")]
    pub frames_per_bin: Option<usize>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: lorachan_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<TraceMode, String> {
    match s {
        "ar" => Ok(TraceMode::Ar),
        "mvn" => Ok(TraceMode::Mvn),
        other => Err(format!("unknown mode `{other}` (expected ar or mvn)")),
    }
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: &RunConfig) -> RunConfig {
        overlay!(
            self,
            flags,
            dataset,
            receivers,
            scenario,
            d0,
            delta_d,
            min_bin_count,
            out,
            models,
            seed,
            mode,
            n_points,
            n_receivers,
            start_distance,
            max_lag,
            closure_tol,
            n_bins,
            frames_per_bin
        );
        self
    }

    pub fn d0(&self) -> f64 {
        self.d0.unwrap_or(lorachan_core::pathloss::DEFAULT_D0)
    }

    pub fn delta_d(&self) -> f64 {
        self.delta_d
            .unwrap_or(lorachan_core::fading::DEFAULT_DELTA_D)
    }

    pub fn min_bin_count(&self) -> usize {
        self.min_bin_count
            .unwrap_or(lorachan_core::fading::DEFAULT_MIN_BIN_COUNT)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn require<'a, T>(&self, v: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
        v.as_ref()
            .ok_or_else(|| CliError::Invalid(format!("--{flag} is required")))
    }

    pub fn check_positive(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("d0", self.d0),
            ("delta-d", self.delta_d),
            ("start-distance", self.start_distance),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Invalid(format!(
                        "--{name} must be positive, got {v}"
                    )));
                }
            }
        }
        if self.min_bin_count.is_some_and(|n| n < 2) {
            return Err(CliError::Invalid(
                "--min-bin-count must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Config echo embedded in every artifact.
    pub fn echo(&self, command: &str) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(m) = &mut v {
            m.retain(|_, v| !v.is_null());
            m.insert("command".into(), command.into());
        }
        v
    }
}

/// Reads a JSON or TOML document, chosen by file extension.
pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| CliError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

pub fn load_dataset_config(path: &Path) -> Result<DatasetConfig, CliError> {
    read_document(path)
}
