use rayon::prelude::*;

use mitigability::harness::{
    build_program_suite, noise_factor, run_benchmark, run_suite, BenchConfig, BlockStatus,
    CalibrationSource, MitigabilityReport, Observable, ResultEntry, ResultsFile, ScheduleFile,
    DEFAULT_CYCLES, DEFAULT_STRETCHES, RESULTS_VERSION,
};
use mitigability::sim::IntegratorOptions;
use mitigability::DeviceModel;

fn config(device: DeviceModel, seed: u64) -> BenchConfig {
    let mut c = BenchConfig {
        device,
        ..BenchConfig::default()
    };
    c.suite.seed = seed;
    c
}

#[test]
fn default_grid_report_tables() {
    let run = run_benchmark(&config(DeviceModel::default(), 11)).unwrap();
    let r = &run.report;
    assert_eq!(r.blocks.len(), DEFAULT_CYCLES.len());
    assert_eq!(r.measurements_csv().unwrap().lines().count(), 1 + 40);
    assert_eq!(r.convergence_csv().unwrap().lines().count(), 1 + 35);
    for b in &r.blocks {
        assert_eq!(b.status, BlockStatus::Extrapolated);
        assert!(b
            .convergence
            .iter()
            .all(|c| c.delta >= 0.0 && c.delta_normalized >= 0.0));
        assert!(b.mitigability.unwrap().delta >= 0.0);
    }
    assert_eq!(MitigabilityReport::from_json(&r.to_json()).unwrap(), *r);
    assert!(r.provenance.calibration.is_some());
}

#[test]
fn schedule_file_for_default_grid() {
    let model = DeviceModel::default();
    let suite =
        build_program_suite(&DEFAULT_CYCLES, &DEFAULT_STRETCHES, 10.0, &model, 1024, 1).unwrap();
    let file = ScheduleFile::from_suite(&suite, model.dt_seconds);
    assert_eq!(file.programs.len(), 40);
    for p in &file.programs {
        let expected = f64::from(p.cycles) * p.stretch * 10.0;
        assert!((p.duration_dt - expected).abs() < 1e-9 * expected);
    }
    let empty = ScheduleFile::from_suite(&[], model.dt_seconds);
    let text = serde_json::to_string(&empty).unwrap();
    let back: ScheduleFile = serde_json::from_str(&text).unwrap();
    assert!(back.to_suite().unwrap().is_empty());
    assert!(text.contains("\"version\":1"));
}

#[test]
fn leaky_device_is_flagged_nonlinear_at_long_programs() {
    // seeded baseline for the default reduced chi-square cut
    let flagged: Vec<bool> = (0..8u64)
        .into_par_iter()
        .map(|seed| {
            let run = run_benchmark(&config(DeviceModel::leaky(), seed)).unwrap();
            let long = run.report.block(160).unwrap();
            assert_eq!(long.status, BlockStatus::Extrapolated);
            long.nonlinear
        })
        .collect();
    let count = flagged.iter().filter(|f| **f).count();
    assert!(count >= 6, "flagged in {count} of 8 seeds");

    let short = run_benchmark(&config(DeviceModel::leaky(), 0)).unwrap();
    assert!(!short.report.block(5).unwrap().nonlinear);
}

#[test]
fn default_device_stays_linear_at_short_programs() {
    let runs: Vec<bool> = (0..8u64)
        .into_par_iter()
        .map(|seed| {
            run_benchmark(&config(DeviceModel::default(), seed))
                .unwrap()
                .report
                .block(20)
                .unwrap()
                .nonlinear
        })
        .collect();
    assert!(runs.iter().filter(|f| **f).count() <= 1, "{runs:?}");
}

#[test]
fn stronger_drive_noise_ranks_worse() {
    let better = DeviceModel {
        kappa0: 4.5e-4,
        kappa1: 8e-5,
        ..DeviceModel::default()
    };
    let worse = DeviceModel {
        kappa1: 8e-4,
        ..better
    };
    let seeds = 20u64;
    let mean_delta = |device: DeviceModel| -> Vec<(u32, f64)> {
        let runs: Vec<_> = (0..seeds)
            .into_par_iter()
            .map(|seed| run_benchmark(&config(device, seed)).unwrap().report)
            .collect();
        DEFAULT_CYCLES
            .iter()
            .map(|&m| {
                let deltas: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| r.block(m).and_then(|b| b.mitigability).map(|s| s.delta))
                    .collect();
                assert_eq!(deltas.len(), seeds as usize, "M={m} failed to converge");
                (m, deltas.iter().sum::<f64>() / deltas.len() as f64)
            })
            .collect()
    };
    let good = mean_delta(better);
    let bad = mean_delta(worse);
    for ((m, g), (_, b)) in good.iter().zip(&bad) {
        assert!(g <= b, "M={m}: better model Δ {g} > worse model Δ {b}");
    }
}

#[test]
fn measured_peak_decreases_with_noise_factor() {
    let device = DeviceModel::default();
    let suite =
        build_program_suite(&[20, 80], &DEFAULT_STRETCHES, 10.0, &device, 1024, 21).unwrap();
    let records = run_suite(&device, &suite, &IntegratorOptions::default()).unwrap();
    for m in [20, 80] {
        let mut rows: Vec<(f64, f64, f64)> = suite
            .iter()
            .zip(&records)
            .filter(|(s, _)| s.cycles == m)
            .map(|(s, r)| {
                (
                    noise_factor(s.cycles, s.period, &device).unwrap(),
                    r.mean_theta,
                    r.theta_variance_of_mean(&device),
                )
            })
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in rows.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let tol = 2.0 * (lo.2 + hi.2).sqrt();
            assert!(
                hi.1 <= lo.1 + tol,
                "M={m}: θ rose from {} to {} between ε {} and {}",
                lo.1,
                hi.1,
                lo.0,
                hi.0
            );
        }
    }
}

#[test]
fn noiseless_device_scores_zero_through_calibration() {
    let mut c = config(DeviceModel::noiseless(), 3);
    c.suite.cycles = vec![5, 40];
    let run = run_benchmark(&c).unwrap();
    for b in &run.report.blocks {
        let m = b.mitigability.expect("scored");
        assert!(m.normalized < 1e-6, "M={}: {m:?}", b.cycles);
    }
    c.calibration.source = CalibrationSource::GroundTruth;
    let run = run_benchmark(&c).unwrap();
    assert!(run
        .report
        .blocks
        .iter()
        .all(|b| b.status == BlockStatus::Direct));
}

#[test]
fn unknown_label_is_skipped_and_reported() {
    let mut c = config(DeviceModel::default(), 4);
    c.calibration.source = CalibrationSource::GroundTruth;
    c.suite.cycles = vec![5];
    let run = run_benchmark(&c).unwrap();
    let mut file = ResultsFile::from_records(&run.records, Observable::Theta, &c.device);
    file.records.push(ResultEntry {
        label: "not-a-program".into(),
        mean: 1.0,
        variance_of_mean: 0.1,
        shots: 10,
    });
    let got = file.ingest(&run.suite, &c.device).unwrap();
    assert_eq!(got.unknown_labels, vec!["not-a-program".to_string()]);
    assert!(got.records.iter().all(Option::is_some));
    // phase units round trip through the population scale
    for (a, b) in got.records.iter().flatten().zip(&run.records) {
        assert!((a.mean_p1 - b.mean_p1).abs() < 1e-15);
        assert!(
            (a.variance_of_mean - b.variance_of_mean).abs()
                <= 1e-15 * b.variance_of_mean.max(1e-300)
        );
    }

    file.records[0].variance_of_mean = -1.0;
    let err = file.ingest(&run.suite, &c.device).unwrap_err().to_string();
    assert!(err.contains("records[0].variance_of_mean"), "{err}");
    file.version = RESULTS_VERSION + 1;
    assert!(file.ingest(&run.suite, &c.device).is_err());
}

#[test]
fn ground_truth_noise_factors_switch() {
    let mut c = config(DeviceModel::default(), 6);
    c.suite.cycles = vec![20];
    let calibrated = run_benchmark(&c).unwrap();
    c.calibration.noise_factors = mitigability::harness::NoiseFactorSource::GroundTruth;
    let truth = run_benchmark(&c).unwrap();
    let eps_cal: Vec<f64> = calibrated.report.blocks[0]
        .points
        .iter()
        .map(|p| p.noise_factor)
        .collect();
    let eps_true: Vec<f64> = truth.report.blocks[0]
        .points
        .iter()
        .map(|p| p.noise_factor)
        .collect();
    assert_ne!(eps_cal, eps_true);
    for (a, b) in eps_cal.iter().zip(&eps_true) {
        assert!((a / b - 1.0).abs() < 0.1);
    }
}
