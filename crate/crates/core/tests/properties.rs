use std::collections::HashMap;

use lorachan_core::fading::{
    local_average_bins, rescale_step, small_scale_residuals, yule_walker_ratio,
};
use lorachan_core::ingest::sigmf::{FieldMap, SigmfMeta};
use lorachan_core::stats::mean;
use lorachan_core::validation::{acf_with_bounds, ar_residuals, normality_stat};
use lorachan_core::{
    build_snr_series, compute_distance, fit_log_distance, parse_sigmf, residuals_z, FadingModel,
    GeoFix, ReceiverId, Scenario, SnrSample, SnrSeries,
};
use proptest::prelude::*;

fn series_from(points: &[(f64, f64)]) -> Vec<SnrSeries> {
    let samples = points
        .iter()
        .map(|&(distance, snr)| SnrSample { distance, snr })
        .collect();
    vec![SnrSeries::new(ReceiverId::new("rx"), Scenario::UavNlos, samples).unwrap()]
}

/// At least a decade of distances so the design is never singular.
fn point_cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((20.0f64..5000.0, -30.0f64..60.0), 10..120).prop_map(|mut v| {
        v[0].0 = 15.0;
        v[1].0 = 4000.0;
        v
    })
}

fn ssr(points: &[(f64, f64)], rho0: f64, gamma: f64, d0: f64) -> f64 {
    points
        .iter()
        .map(|&(d, s)| (s - rho0 + 10.0 * gamma * (d / d0).log10()).powi(2))
        .sum()
}

fn fix() -> impl Strategy<Value = GeoFix> {
    (-80.0f64..80.0, -179.0f64..179.0, -100.0f64..3000.0).prop_map(|(lat, lon, alt)| GeoFix {
        lat,
        lon,
        alt,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn least_squares_is_a_minimum(points in point_cloud()) {
        let m = fit_log_distance(&series_from(&points), 10.0).unwrap();
        let best = ssr(&points, m.rho0, m.gamma, 10.0);
        for (dr, dg) in [(0.01, 0.0), (-0.01, 0.0), (0.0, 0.01), (0.0, -0.01)] {
            let other = ssr(&points, m.rho0 + dr, m.gamma + dg, 10.0);
            prop_assert!(other >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn shifting_snr_moves_only_the_intercept(points in point_cloud(), c in -20.0f64..20.0) {
        let a = fit_log_distance(&series_from(&points), 10.0).unwrap();
        let shifted: Vec<_> = points.iter().map(|&(d, s)| (d, s + c)).collect();
        let b = fit_log_distance(&series_from(&shifted), 10.0).unwrap();
        prop_assert!((b.rho0 - a.rho0 - c).abs() < 1e-9);
        prop_assert!((b.gamma - a.gamma).abs() < 1e-9);
        prop_assert!((b.sigma_z - a.sigma_z).abs() < 1e-9);
    }

    #[test]
    fn reference_distance_only_moves_the_intercept(points in point_cloud(), d0 in 1.0f64..500.0) {
        let a = fit_log_distance(&series_from(&points), 10.0).unwrap();
        let b = fit_log_distance(&series_from(&points), d0).unwrap();
        let want = a.rho0 - 10.0 * a.gamma * (d0 / 10.0).log10();
        prop_assert!((b.rho0 - want).abs() < 1e-9);
        prop_assert!((b.gamma - a.gamma).abs() < 1e-9);
        prop_assert!((b.sigma_z - a.sigma_z).abs() < 1e-9);
    }

    #[test]
    fn fitted_residuals_have_zero_mean(points in point_cloud()) {
        let series = series_from(&points);
        let m = fit_log_distance(&series, 10.0).unwrap();
        let z: Vec<f64> = residuals_z(&m, &series[0]).into_iter().map(|p| p.1).collect();
        let (lo, hi) = points.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
        prop_assert!(mean(&z).abs() <= 1e-9 * (hi - lo).max(1.0));
    }

    #[test]
    fn distance_is_a_metric_on_fixes(a in fix(), b in fix()) {
        let ab = compute_distance(&a, &b);
        let ba = compute_distance(&b, &a);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-6);
        prop_assert!(compute_distance(&a, &a) < 1e-6);
    }

    #[test]
    fn series_sizes_account_for_every_record(
        offsets in prop::collection::vec((0usize..3, 0.0f64..5000.0), 0..60)
    ) {
        let sites = [
            GeoFix { lat: 46.52, lon: 6.56, alt: 400.0 },
            GeoFix { lat: 46.51, lon: 6.58, alt: 410.0 },
            GeoFix { lat: 46.53, lon: 6.57, alt: 390.0 },
        ];
        let positions: HashMap<_, _> = sites
            .iter()
            .enumerate()
            .map(|(i, p)| (ReceiverId(format!("rx{i}")), *p))
            .collect();
        let template = parse_sigmf(
            include_bytes!("fixtures/two_frames.sigmf-meta"),
            &FieldMap::default(),
        )
        .unwrap()
        .records
        .remove(0);
        let records: Vec<_> = offsets
            .iter()
            .map(|&(rx, range)| {
                let mut r = template.clone();
                r.receiver_id = ReceiverId(format!("rx{rx}"));
                // ranges under 1 m are placed on the receiver itself
                let range = if range < 100.0 { 0.0 } else { range };
                r.tx_position = sites[rx].destination(45.0, range, sites[rx].alt);
                r
            })
            .collect();
        let built = build_snr_series(&records, &positions, Scenario::UavLos).unwrap();
        let total: usize = built.series.iter().map(|s| s.len()).sum();
        prop_assert_eq!(total + built.excluded, records.len());
        for s in &built.series {
            prop_assert!(s.samples.windows(2).all(|w| w[0].distance <= w[1].distance));
        }
    }

    #[test]
    fn metadata_round_trip_holds_for_edited_records(snr in -30.0f64..30.0, frame_id in 0u64..1_000_000, sf in 7u8..=12) {
        let map = FieldMap::default();
        let meta = SigmfMeta::from_slice(include_bytes!("fixtures/two_frames.sigmf-meta")).unwrap();
        let mut records = meta.frames(&map).records;
        records[0].snr = snr;
        records[0].frame_id = frame_id;
        records[1].spreading_factor = sf;
        let text = SigmfMeta::from_frames(meta.global.clone(), &records, &map).to_string_pretty();
        let again = SigmfMeta::from_slice(text.as_bytes()).unwrap().frames(&map).records;
        prop_assert_eq!(again, records);
    }

    #[test]
    fn rescaling_composes(phi in 0.0f64..0.999, sy in 0.1f64..10.0, a in 1.0f64..50.0, b in 1.0f64..50.0) {
        let m = FadingModel::new(Scenario::UavLos, 2.0, sy, phi, 10.0).unwrap();
        let two_step = rescale_step(&rescale_step(&m, a).unwrap(), b).unwrap();
        let direct = rescale_step(&m, b).unwrap();
        prop_assert!((two_step.phi - direct.phi).abs() < 1e-12);
        for r in [two_step, direct] {
            let want = (1.0 - r.phi * r.phi) * r.sigma_y * r.sigma_y;
            prop_assert!((r.sigma_eps.powi(2) - want).abs() <= 1e-9 * want.max(1e-300));
            prop_assert_eq!(r.sigma_x, m.sigma_x);
            prop_assert_eq!(r.sigma_y, m.sigma_y);
        }
    }

    #[test]
    fn bin_centering_is_exact(points in prop::collection::vec((10.0f64..200.0, -20.0f64..20.0), 3..200)) {
        let mut residuals = points.clone();
        residuals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Ok(bins) = local_average_bins(&ReceiverId::new("rx"), &residuals, 10.0, 2) else {
            return Ok(());
        };
        let xhat = small_scale_residuals(&residuals, &bins);
        let mut offset = 0;
        for &count in &bins.bin_counts {
            let chunk = &xhat[offset..offset + count];
            prop_assert!(chunk.iter().sum::<f64>().abs() < 1e-9 * count as f64);
            offset += count;
        }
        prop_assert_eq!(offset, xhat.len());
    }

    #[test]
    fn yule_walker_residuals_are_orthogonal_at_lag_one(values in prop::collection::vec(-10.0f64..10.0, 20..300)) {
        let phi = yule_walker_ratio(&[&values]).unwrap();
        let m = mean(&values);
        let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
        let eps = ar_residuals(&local_series(&centered), phi).values;
        // the biased lag-0 sum includes the last value, which has no
        // successor, so the normal equation leaves exactly phi * y_last^2
        let dot: f64 = eps.iter().zip(&centered).map(|(e, y)| e * y).sum();
        let last = centered[centered.len() - 1];
        let scale: f64 = centered.iter().map(|v| v * v).sum();
        prop_assert!((dot - phi * last * last).abs() <= 1e-9 * scale.max(1e-12), "{} {}", dot, scale);
    }

    #[test]
    fn acf_values_are_correlations(values in prop::collection::vec(-100.0f64..100.0, 60..400)) {
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-6));
        let acf = acf_with_bounds(&values, 50).unwrap();
        prop_assert_eq!(acf.values[0].1, 1.0);
        for &(_, r) in &acf.values {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn normality_is_affine_invariant(
        values in prop::collection::vec(-5.0f64..5.0, 20..300),
        a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        b in -100.0f64..100.0,
    ) {
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-3));
        let n0 = normality_stat(&values).unwrap();
        let moved: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let n1 = normality_stat(&moved).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
        prop_assert!(close(n0.skewness.abs(), n1.skewness.abs()));
        prop_assert!(close(n0.excess_kurtosis, n1.excess_kurtosis));
        prop_assert!(close(n0.statistic, n1.statistic));
    }
}

fn local_series(values: &[f64]) -> lorachan_core::LargeScaleSeries {
    lorachan_core::LargeScaleSeries {
        receiver_id: ReceiverId::new("rx"),
        delta_d: 10.0,
        bin_index: (1..=values.len() as u64).collect(),
        bin_centers: (1..=values.len()).map(|k| 10.0 * k as f64 + 5.0).collect(),
        y_values: values.to_vec(),
        bin_counts: vec![3; values.len()],
    }
}

#[test]
fn long_ar_residuals_are_uncorrelated_at_lag_one() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let n = 100_000;
    let mut y = vec![0.0f64; n];
    for i in 1..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        y[i] = 0.9 * y[i - 1] + e;
    }
    let phi = yule_walker_ratio(&[&y]).unwrap();
    let eps = ar_residuals(&local_series(&y), phi).values;
    let acf = acf_with_bounds(&eps, 1).unwrap();
    assert!(
        acf.values[1].1.abs() < 3.0 / (n as f64).sqrt(),
        "{:?}",
        acf.values[1]
    );
}
