use std::path::Path;

use rayon::prelude::*;

use super::config::{BenchConfig, CalibrationSource, NoiseFactorSource};
use super::files::read_json;
use super::report::{
    BlockStatus, ConvergenceEntry, CycleBlock, DataSource, Mitigability, MitigabilityReport,
    Provenance, ReportPoint, REPORT_VERSION,
};
use super::suite::{build_program_suite, noise_factor, ExperimentSpec};
use super::HarnessError;
use crate::calibration::{calibrate, calibrate_simulated, Calibration, CalibrationData};
use crate::device::DeviceModel;
use crate::extrapolation::{convergence_series, richardson_estimate, LinearWeighting, NoisePoint};
use crate::seed::derive_seed;
use crate::sim::{peak_population, run_experiment, IntegratorOptions, MeasurementRecord};

/// Seed streams of a benchmark run, kept apart from per-program indices.
const CALIBRATION_STREAM: u64 = 1 << 40;
const SUITE_STREAM: u64 = (1 << 40) + 1;

/// Output of the calibration stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated {
    pub model: DeviceModel,
    pub data: Option<CalibrationData>,
    pub calibration: Option<Calibration>,
}

pub fn calibrate_stage(config: &BenchConfig) -> Result<Calibrated, HarnessError> {
    let settings = &config.calibration.settings;
    match config.calibration.source {
        CalibrationSource::GroundTruth => Ok(Calibrated {
            model: config.device,
            data: None,
            calibration: None,
        }),
        CalibrationSource::Simulate => {
            let seed = derive_seed(config.suite.seed, CALIBRATION_STREAM);
            let (data, calibration) = calibrate_simulated(&config.device, settings, seed)?;
            Ok(Calibrated {
                model: calibration.model,
                data: Some(data),
                calibration: Some(calibration),
            })
        }
        CalibrationSource::Data => {
            let path = config.calibration.data_path.as_deref().ok_or_else(|| {
                HarnessError::Config("calibration source `data` needs data_path".into())
            })?;
            let data: CalibrationData = read_json(Path::new(path))?;
            let calibration = calibrate(&data, settings)?;
            Ok(Calibrated {
                model: calibration.model,
                data: Some(data),
                calibration: Some(calibration),
            })
        }
    }
}

/// Simulates every program on `device` in parallel; results keep suite
/// order.
pub fn run_suite(
    device: &DeviceModel,
    suite: &[ExperimentSpec],
    options: &IntegratorOptions,
) -> Result<Vec<MeasurementRecord>, HarnessError> {
    suite
        .par_iter()
        .map(|spec| {
            run_experiment(device, spec, options).map_err(|source| HarnessError::Simulation {
                label: spec.label.clone(),
                source,
            })
        })
        .collect()
}

/// Noiseless phase of each logical program, keyed by cycle count, from
/// the least stretched program of each block run on `model` with all
/// rates off.
pub fn ideal_values(
    model: &DeviceModel,
    suite: &[ExperimentSpec],
    options: &IntegratorOptions,
) -> Result<Vec<(u32, f64)>, HarnessError> {
    let reference = model.without_noise();
    let mut ideals = Vec::new();
    for m in cycle_order(suite) {
        let spec = suite
            .iter()
            .filter(|s| s.cycles == m)
            .min_by(|a, b| a.stretch.total_cmp(&b.stretch))
            .expect("cycle count taken from the suite");
        let p1 = peak_population(&reference, spec, options).map_err(|source| {
            HarnessError::Simulation {
                label: spec.label.clone(),
                source,
            }
        })?;
        ideals.push((m, reference.population_to_theta(p1)));
    }
    Ok(ideals)
}

fn cycle_order(suite: &[ExperimentSpec]) -> Vec<u32> {
    let mut order = Vec::new();
    for s in suite {
        if !order.contains(&s.cycles) {
            order.push(s.cycles);
        }
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub weighting: LinearWeighting,
    pub linearity_threshold: f64,
    pub richardson: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            weighting: LinearWeighting::Auto,
            linearity_threshold: 3.0,
            richardson: true,
        }
    }
}

/// Extrapolates each cycle-count block of `suite` to zero noise.
///
/// `records[i]` is the measurement of `suite[i]`; missing records are
/// noted and skipped. Noise factors come from `noise_model` and phase
/// variances use the readout references of `readout_model`. Failures are
/// confined to their block.
pub fn analyze(
    suite: &[ExperimentSpec],
    records: &[Option<MeasurementRecord>],
    noise_model: &DeviceModel,
    readout_model: &DeviceModel,
    ideals: &[(u32, f64)],
    options: &AnalysisOptions,
) -> Vec<CycleBlock> {
    let scale = readout_model.theta_scale();
    cycle_order(suite)
        .into_iter()
        .map(|m| {
            let ideal = ideals.iter().find(|(c, _)| *c == m).map(|(_, v)| *v);
            let members: Vec<(&ExperimentSpec, Option<&MeasurementRecord>)> = suite
                .iter()
                .zip(records)
                .filter(|(s, _)| s.cycles == m)
                .map(|(s, r)| (s, r.as_ref()))
                .collect();
            analyze_block(
                m,
                ideal,
                &members,
                noise_model,
                readout_model,
                scale,
                options,
            )
        })
        .collect()
}

fn analyze_block(
    cycles: u32,
    ideal: Option<f64>,
    members: &[(&ExperimentSpec, Option<&MeasurementRecord>)],
    noise_model: &DeviceModel,
    readout_model: &DeviceModel,
    scale: f64,
    options: &AnalysisOptions,
) -> CycleBlock {
    let ideal = ideal.filter(|v| v.is_finite());
    let mut block = CycleBlock {
        cycles,
        status: BlockStatus::Failed,
        ideal,
        points: Vec::new(),
        convergence: Vec::new(),
        reduced_chi2: None,
        nonlinear: false,
        richardson: None,
        mitigability: None,
        diagnostics: Vec::new(),
    };
    let Some(ideal) = ideal else {
        block
            .diagnostics
            .push("no ideal value for this cycle count".into());
        return block;
    };
    let score = |estimate: f64| {
        let delta = (ideal - estimate).abs();
        Mitigability {
            delta,
            normalized: delta / scale,
        }
    };

    let mut noise_points = Vec::new();
    for (spec, record) in members {
        let Some(record) = record else {
            block
                .diagnostics
                .push(format!("no result for `{}`", spec.label));
            continue;
        };
        let eps = match noise_factor(spec.cycles, spec.period, noise_model) {
            Ok(eps) => eps,
            Err(e) => {
                block
                    .diagnostics
                    .push(format!("noise factor of `{}`: {e}", spec.label));
                return block;
            }
        };
        let variance = record.theta_variance_of_mean(readout_model);
        block.points.push(ReportPoint {
            label: spec.label.clone(),
            stretch: spec.stretch,
            period: spec.period,
            amplitude: spec.amplitude,
            noise_factor: eps,
            mean: record.mean_theta,
            std_error: variance.sqrt(),
            shots: record.shots,
        });
        noise_points.push(NoisePoint::new(eps, record.mean_theta, Some(variance)));
    }
    if block.points.is_empty() {
        block.diagnostics.push("no measurements".into());
        return block;
    }

    let direct = |block: &mut CycleBlock, why: &str| {
        let least = block
            .points
            .iter()
            .min_by(|a, b| a.stretch.total_cmp(&b.stretch))
            .expect("non-empty");
        block.mitigability = Some(score(least.mean));
        block.status = BlockStatus::Direct;
        block.diagnostics.push(why.into());
    };
    if noise_points.iter().all(|p| p.noise_factor == 0.0) {
        direct(
            &mut block,
            "all noise factors are zero; scored by direct measurement",
        );
        return block;
    }
    if noise_points.len() == 1 {
        direct(
            &mut block,
            "single stretch factor; scored by direct measurement",
        );
        return block;
    }

    match convergence_series(&noise_points, options.weighting) {
        Ok(series) => {
            block.convergence = series
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let s = score(r.estimate);
                    ConvergenceEntry {
                        dataset_size: k + 2,
                        estimate: r.estimate,
                        std_error: r.std_error,
                        variance_amplification: r.variance_amplification,
                        reduced_chi2: r.reduced_chi2,
                        delta: s.delta,
                        delta_normalized: s.normalized,
                    }
                })
                .collect();
            let full = series.last().expect("at least one dataset size");
            block.reduced_chi2 = full.reduced_chi2;
            block.nonlinear = full
                .reduced_chi2
                .is_some_and(|chi2| chi2 > options.linearity_threshold);
            block.mitigability = Some(score(full.estimate));
            block.status = BlockStatus::Extrapolated;
        }
        Err(e) => {
            block
                .diagnostics
                .push(format!("linear extrapolation failed: {e}"));
            return block;
        }
    }

    if options.richardson {
        let mut sorted = noise_points.clone();
        sorted.sort_by(|p, q| p.noise_factor.total_cmp(&q.noise_factor));
        match richardson_estimate(&sorted) {
            Ok(r) => {
                let r = r.with_estimator_error(ideal);
                if r.high_order {
                    block.diagnostics.push(format!(
                        "order-{} elimination amplifies variance by {:.3e}",
                        sorted.len(),
                        r.variance_amplification
                    ));
                }
                block.richardson = Some(r);
            }
            Err(e) => block
                .diagnostics
                .push(format!("richardson elimination failed: {e}")),
        }
    }
    block
}

/// Everything a benchmark run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub calibrated: Calibrated,
    pub suite: Vec<ExperimentSpec>,
    pub records: Vec<MeasurementRecord>,
    pub report: MitigabilityReport,
}

/// Calibrate, program the suite with the calibrated model, simulate it on
/// the ground-truth device and extrapolate every cycle-count block.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchRun, HarnessError> {
    config.validate()?;
    let calibrated = calibrate_stage(config)?;
    let s = &config.suite;
    let suite = build_program_suite(
        &s.cycles,
        &s.stretch_factors,
        s.base_period,
        &calibrated.model,
        s.shots,
        derive_seed(s.seed, SUITE_STREAM),
    )?;
    let options = &config.calibration.settings.integrator;
    let records = run_suite(&config.device, &suite, options)?;
    let ideals = ideal_values(&config.device, &suite, options)?;
    let noise_model = match config.calibration.noise_factors {
        NoiseFactorSource::Calibrated => calibrated.model,
        NoiseFactorSource::GroundTruth => config.device,
    };
    let analysis = AnalysisOptions {
        weighting: config.extrapolation.weighting,
        linearity_threshold: config.extrapolation.linearity_threshold,
        richardson: config.extrapolation.richardson,
    };
    let wrapped: Vec<Option<MeasurementRecord>> = records.iter().cloned().map(Some).collect();
    let blocks = analyze(
        &suite,
        &wrapped,
        &noise_model,
        &calibrated.model,
        &ideals,
        &analysis,
    );
    let report = MitigabilityReport {
        version: REPORT_VERSION,
        provenance: Provenance {
            source: DataSource::Simulated,
            seed: Some(s.seed),
            device: Some(config.device),
            calibrated: calibrated.model,
            calibration: calibrated.calibration.clone(),
            noise_factors: config.calibration.noise_factors,
            weighting: analysis.weighting,
            linearity_threshold: analysis.linearity_threshold,
        },
        theta_scale: calibrated.model.theta_scale(),
        blocks,
        diagnostics: Vec::new(),
    };
    Ok(BenchRun {
        calibrated,
        suite,
        records,
        report,
    })
}
