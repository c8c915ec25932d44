use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lorachan_core::export::{self, from_json_document, to_json_document};
use lorachan_core::fading::{self, FadingFit};
use lorachan_core::ingest::dataset::{load_dataset, DatasetConfig, ReceiverEntry};
use lorachan_core::trace::synth::{self, CampaignConfig};
use lorachan_core::trace::{self, TraceConfig};
use lorachan_core::validation::{self, Check, ObservedSpread};
use lorachan_core::{
    build_snr_series, closure_report, fit_fading, fit_log_distance, reference, residuals_z,
    FadingModel, GeoFix, PathlossModel, ReceiverId, ResidualReport, Scenario, ScenarioModel,
    SnrSeries, TraceMode,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{load_dataset_config, RunConfig};
use crate::error::{CliError, Context};

pub const PATHLOSS_FILE: &str = "pathloss.json";
pub const FADING_FILE: &str = "fading.json";

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.require(&cfg.out, "out")?.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, body: &T, echo: &Value) -> Result<(), CliError> {
    let s = to_json_document(body, echo).context(|| path.display().to_string())?;
    write_file(path, s.as_bytes())
}

/// Reads the dataset and builds one SNR series per receiver.
fn load_series(cfg: &RunConfig) -> Result<Vec<SnrSeries>, CliError> {
    let dataset = cfg.require(&cfg.dataset, "dataset")?;
    let scenario = *cfg.require(&cfg.scenario, "scenario")?;
    let receivers_path = cfg.require(&cfg.receivers, "receivers")?;
    let ds_cfg = load_dataset_config(receivers_path)?;
    let positions = ds_cfg
        .positions()
        .context(|| receivers_path.display().to_string())?;

    if !dataset.exists() {
        return Err(CliError::io(
            dataset,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset not found"),
        ));
    }
    let ds = load_dataset(dataset, &ds_cfg.field_map).context(|| dataset.display().to_string())?;
    for issue in &ds.rejected {
        eprintln!(
            "warning: {} annotation {}: {}",
            issue.file.display(),
            issue.rejected.index,
            issue.rejected.issue
        );
    }
    let built = build_snr_series(&ds.records, &positions, scenario)
        .context(|| dataset.display().to_string())?;
    if built.excluded > 0 {
        eprintln!(
            "note: {} frames within 1 m of their receiver excluded",
            built.excluded
        );
    }
    if built.series.is_empty() {
        return Err(CliError::InsufficientData(format!(
            "{}: no usable frames in {} file(s)",
            dataset.display(),
            ds.files.len()
        )));
    }
    Ok(built.series)
}

fn summary_table(pl: &PathlossModel, f: &FadingModel) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "Scenario {} (d0 = {} m, delta_d = {} m, {} frames)\n",
        pl.scenario.label(),
        pl.d0,
        f.delta_d,
        pl.n_samples
    ));
    s.push_str(&format!(
        "{:<18}{:>9}{:>9}{:>9}\n",
        "", "rho0", "gamma", "sigma_z"
    ));
    s.push_str(&format!(
        "{:<18}{:>9.2}{:>9.2}{:>9.2}\n",
        pl.scenario.label(),
        pl.rho0,
        pl.gamma,
        pl.sigma_z
    ));
    s.push_str(&format!(
        "{:<18}{:>9}{:>9}{:>9}{:>11}\n",
        "", "sigma_x", "sigma_y", "phi", "sigma_eps"
    ));
    s.push_str(&format!(
        "{:<18}{:>9.2}{:>9.2}{:>9.3}{:>11.2}\n",
        pl.scenario.label(),
        f.sigma_x,
        f.sigma_y,
        f.phi,
        f.sigma_eps
    ));
    s
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_positive()?;
    let out = out_dir(cfg)?;
    let series = load_series(cfg)?;
    let label = |s: &str| format!("{} ({s})", cfg.dataset.as_ref().unwrap().display());

    let pathloss = fit_log_distance(&series, cfg.d0()).context(|| label("log-distance fit"))?;
    let FadingFit {
        model: fading,
        bins,
        residuals,
        sigma_x,
        phi,
    } = fit_fading(&pathloss, &series, cfg.delta_d(), cfg.min_bin_count())
        .context(|| label("fading decomposition"))?;
    if phi.clamped {
        eprintln!(
            "note: Yule-Walker ratio {:.4} clamped to {}",
            phi.raw, phi.phi
        );
    }

    let echo = cfg.echo("fit");
    write_json(&out.join(PATHLOSS_FILE), &pathloss, &echo)?;
    write_json(&out.join(FADING_FILE), &fading, &echo)?;
    write_with(&out.join("residuals.csv"), |w| {
        export::write_residuals_csv(w, &residuals, &echo)
    })?;
    write_with(&out.join("bins.csv"), |w| {
        export::write_bins_csv(w, &bins, &echo)
    })?;

    print!("{}", summary_table(&pathloss, &fading));
    let per_rx: Vec<String> = bins
        .iter()
        .zip(&sigma_x.per_receiver)
        .map(|(b, s)| match s {
            Some(s) => format!("{} {:.2}", b.receiver_id, s),
            None => format!("{} -", b.receiver_id),
        })
        .collect();
    println!("per-receiver sigma_x: {}", per_rx.join(", "));
    Ok(())
}

fn read_model<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    from_json_document(&bytes).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_models(cfg: &RunConfig) -> Result<ScenarioModel, CliError> {
    let dir = cfg.require(&cfg.models, "models")?;
    let pathloss: PathlossModel = read_model(&dir.join(PATHLOSS_FILE))?;
    let fading: FadingModel = read_model(&dir.join(FADING_FILE))?;
    ScenarioModel::new(pathloss, fading).map_err(|e| CliError::Parse {
        path: dir.clone(),
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct ValidationDocument<'a> {
    scenario: Scenario,
    passed: bool,
    whiteness_pass: bool,
    residuals: &'a ResidualReport,
    closure: &'a validation::ClosureReport,
    spread: &'a [Check],
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_positive()?;
    let model = load_models(cfg)?;
    let out = out_dir(cfg)?;
    let series = load_series(cfg)?;
    let delta_d = cfg.delta_d();
    let fading = model
        .fading_at(delta_d)
        .context(|| "rescaling fading model".into())?;
    let pl = model.pathloss;

    let mut ordered: Vec<&SnrSeries> = series.iter().collect();
    ordered.sort_by(|a, b| a.receiver_id.cmp(&b.receiver_id));
    let mut z_all = Vec::new();
    let mut xhat = Vec::new();
    let mut bins = Vec::new();
    for s in ordered {
        let z = residuals_z(&pl, s);
        z_all.extend(z.iter().map(|p| p.1));
        if let Ok(b) = fading::local_average_bins(&s.receiver_id, &z, delta_d, cfg.min_bin_count())
        {
            xhat.push(fading::small_scale_residuals(&z, &b));
            bins.push(b);
        }
    }
    let eps = validation::pooled_ar_residuals(&bins, fading.phi);
    let report = ResidualReport::build(
        eps.values,
        cfg.max_lag.unwrap_or(validation::DEFAULT_MAX_LAG),
    )
    .context(|| "AR residual diagnostics".into())?;
    let observed = ObservedSpread {
        sigma_z: lorachan_core::fit_gaussian(&z_all)
            .context(|| "SNR deviation".into())?
            .1,
        sigma_x: fading::pool_sigma_x(&xhat)
            .context(|| "small-scale deviation".into())?
            .sigma_x,
        sigma_eps: lorachan_core::fit_gaussian(&report.residuals)
            .context(|| "AR residuals".into())?
            .1,
    };
    let spread = validation::spread_checks(&pl, &fading, &observed);
    let closure = closure_report(&pl, &fading, cfg.closure_tol.unwrap_or(0.02));
    let whiteness_pass = report.is_white();
    let passed = whiteness_pass && closure.all_pass() && spread.iter().all(|c| c.pass);

    let echo = cfg.echo("validate");
    let hist = validation::histogram(&report.residuals).context(|| "residual histogram".into())?;
    write_json(
        &out.join("report.json"),
        &ValidationDocument {
            scenario: pl.scenario,
            passed,
            whiteness_pass,
            residuals: &report,
            closure: &closure,
            spread: &spread,
        },
        &echo,
    )?;
    write_with(&out.join("acf.csv"), |w| {
        export::write_acf_csv(w, &report.acf, report.conf_bound, &echo)
    })?;
    write_with(&out.join("hist.csv"), |w| {
        export::write_histogram_csv(w, &hist, &echo)
    })?;

    println!(
        "whiteness: {:.1}% of lags 1..{} within ±{:.4} ({})",
        100.0 * report.fraction_within_bounds,
        report.acf.len() - 1,
        report.conf_bound,
        if whiteness_pass { "pass" } else { "FAIL" }
    );
    println!(
        "normality: skewness {:.4}, excess kurtosis {:.4}, statistic {:.2}",
        report.skewness, report.excess_kurtosis, report.normality_stat
    );
    for c in &spread {
        println!(
            "{:<28} gap {:>12.6}  tol {:<8} {}",
            c.name,
            c.gap,
            c.tolerance,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    print!("{}", closure.render());
    if passed {
        Ok(())
    } else {
        Err(CliError::ValidationFailed(format!(
            "model for {} does not fit {}",
            pl.scenario,
            cfg.dataset.as_ref().unwrap().display()
        )))
    }
}

pub fn generate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_positive()?;
    let model = load_models(cfg)?;
    let out = out_dir(cfg)?;
    let tc = TraceConfig {
        model,
        start_distance: cfg.start_distance.unwrap_or(20.0),
        n_points: cfg.n_points.unwrap_or(100),
        delta_d: cfg.delta_d(),
        n_receivers: cfg.n_receivers.unwrap_or(4),
        seed: cfg.seed(),
        mode: cfg.mode.unwrap_or(TraceMode::Ar),
    };
    tc.validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let trace = trace::generate(&tc).map_err(|e| CliError::Invalid(e.to_string()))?;

    let echo = cfg.echo("generate");
    write_with(&out.join("trace.csv"), |w| {
        export::write_trace_csv(w, &trace, &echo)
    })?;
    let bin_path = out.join("trace.bin");
    write_with(&bin_path, |w| {
        export::write_trace_binary(w, &trace, &echo).map_err(|e| match e {
            lorachan_core::Error::Io(e) => e,
            other => std::io::Error::other(other.to_string()),
        })
    })?;
    println!(
        "generated {} receivers x {} points ({} mode), seed {}",
        tc.n_receivers, tc.n_points, tc.mode, trace.seed
    );
    Ok(())
}

pub fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let model = load_models(cfg)?;
    let pl = model.pathloss;
    let f = model.fading;
    print!("{}", summary_table(&pl, &f));
    let closure = closure_report(&pl, &f, cfg.closure_tol.unwrap_or(0.02));
    print!("{}", closure.render());

    let (r0, g, sz) = reference::pathloss_row(pl.scenario);
    let (sx, sy, phi, se) = reference::fading_row(pl.scenario);
    println!("campus reference for {}:", pl.scenario.label());
    println!("  rho0 {r0:.2}  gamma {g:.2}  sigma_z {sz:.2}");
    println!("  sigma_x {sx:.2}  sigma_y {sy:.2}  phi {phi:.3}  sigma_eps {se:.2}");
    Ok(())
}

/// Gateway layout used for synthetic campaigns.
fn synthetic_receivers(n: usize) -> BTreeMap<ReceiverId, GeoFix> {
    let site = GeoFix {
        lat: 46.5191,
        lon: 6.5668,
        alt: 420.0,
    };
    (0..n)
        .map(|i| {
            let rx = site.destination(360.0 * i as f64 / n as f64, 300.0, site.alt + 20.0);
            (synth::receiver_name(i), rx)
        })
        .collect()
}

pub fn synth_dataset(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.check_positive()?;
    let out = out_dir(cfg)?;
    let scenario = cfg.scenario.unwrap_or(Scenario::UavLos);
    let model = match &cfg.models {
        Some(_) => load_models(cfg)?,
        None => {
            // published rows are rounded; rebuild sigma_eps so the model closes
            let mut m = reference::scenario_model(scenario);
            m.fading = FadingModel::new(
                scenario,
                m.fading.sigma_x,
                m.fading.sigma_y,
                m.fading.phi,
                m.fading.delta_d,
            )
            .context(|| "reference model".into())?;
            m
        }
    };
    let n_receivers = cfg.n_receivers.unwrap_or(4);
    let campaign = CampaignConfig {
        model,
        n_receivers,
        n_bins: cfg.n_bins.unwrap_or(400),
        frames_per_bin: cfg.frames_per_bin.unwrap_or(60),
        first_bin: 2,
        seed: cfg.seed(),
    };
    let series =
        synth::synthesize_series(&campaign).map_err(|e| CliError::Invalid(e.to_string()))?;
    let receivers = synthetic_receivers(n_receivers);
    let start = chrono_epoch();
    let records = synth::records_from_series(&series, &receivers, start)
        .context(|| "synthetic records".into())?;

    let ds_cfg = DatasetConfig {
        receivers: receivers
            .iter()
            .map(|(id, p)| ReceiverEntry {
                id: id.clone(),
                lat: p.lat,
                lon: p.lon,
                alt: p.alt,
            })
            .collect(),
        field_map: Default::default(),
    };
    let data_dir = out.join("dataset");
    synth::write_sigmf_dataset(&data_dir, &records, &ds_cfg.field_map)
        .context(|| data_dir.display().to_string())?;
    let rx_path = out.join("receivers.json");
    let rx_json = serde_json::to_string_pretty(&ds_cfg).expect("config serializes");
    write_file(&rx_path, rx_json.as_bytes())?;
    println!(
        "wrote {} frames for {} receivers to {} (positions in {})",
        records.len(),
        n_receivers,
        data_dir.display(),
        rx_path.display()
    );
    Ok(())
}

fn chrono_epoch() -> lorachan_core::ingest::sigmf::Timestamp {
    "2025-06-01T08:00:00Z".parse().expect("valid timestamp")
}
