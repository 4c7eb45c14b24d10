//! Device calibration from Rabi, relaxation and driven-decay data.
//!
//! The pipeline mirrors what is done on hardware: fit the Rabi period at a
//! handful of drive amplitudes and regress a power law on them, measure the
//! undriven relaxation time, follow the oscillation envelope under
//! continuous driving to get `γ̃(Γ)`, and fit the excess rate
//! `γ̃(Γ) − 1/T1` linearly in `Γ`.

mod fits;
pub mod lsq;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fits::{
    extract_amplitude_noise, fit_exponential_decay, fit_power_law, fit_sinusoid, measure_t1,
    FitParam, FitResult,
};

use crate::device::{DeviceError, DeviceModel};
use crate::seed::derive_seed;
use crate::sim::{evolve, sample_shots, BlochState, DriveSpec, IntegratorOptions, SimError};

/// Ratio of the Rabi-envelope decay rate to the amplitude-damping rate
/// `γ̃` under strong resonant driving: the envelope decays at
/// `(γ̃ + γ̃/2)/2`.
pub const ENVELOPE_DECAY_RATIO: f64 = 0.75;

pub const CALIBRATION_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("{0}")]
    Domain(String),
    #[error("rank deficient: {0}")]
    RankDeficient(&'static str),
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("{stage}: {source}")]
    Fit {
        stage: String,
        #[source]
        source: FitError,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("calibrated model is invalid: {0}")]
    Model(#[from] DeviceError),
    #[error("{0}")]
    Data(String),
}

fn at(stage: impl Into<String>) -> impl FnOnce(FitError) -> CalibrationError {
    let stage = stage.into();
    move |source| CalibrationError::Fit { stage, source }
}

/// Acquisition and analysis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    /// Drive amplitudes used for period and decay measurements.
    pub amplitudes: Vec<f64>,
    /// Length of each continuous Rabi series, in dt.
    pub rabi_window: f64,
    pub rabi_points: usize,
    /// Delays of the undriven relaxation measurement.
    pub relaxation_times: Vec<f64>,
    /// Longest delay of the driven-decay measurement.
    pub envelope_window: f64,
    /// Target number of peaks sampled per envelope (log-spaced).
    pub envelope_points: usize,
    /// Envelope samples are used up to the first contrast below this value.
    pub envelope_floor: f64,
    pub shots: u32,
    /// Convert the envelope decay rate to the damping rate with
    /// [`ENVELOPE_DECAY_RATIO`]. Off means the raw envelope rate is `γ̃`.
    pub envelope_correction: bool,
    pub integrator: IntegratorOptions,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            amplitudes: (0..8).map(|k| 0.12 + 0.08 * f64::from(k)).collect(),
            rabi_window: 1000.0,
            rabi_points: 500,
            relaxation_times: (0..9).map(|k| 5000.0 * f64::from(k)).collect(),
            envelope_window: 20_000.0,
            envelope_points: 32,
            envelope_floor: 0.1,
            shots: 4096,
            envelope_correction: true,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// A series of shot-averaged excited-state populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub p1: Vec<f64>,
    pub shots: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenSeries {
    pub amplitude: f64,
    #[serde(flatten)]
    pub series: Series,
}

/// Raw calibration measurements, simulated or recorded on hardware.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationData {
    pub version: u32,
    /// Readout phases of the `|0⟩` and `|1⟩` references.
    pub theta0: f64,
    pub theta1: f64,
    pub dt_seconds: f64,
    /// Continuous Rabi flopping, densely sampled from `t = 0`.
    pub rabi: Vec<DrivenSeries>,
    /// Undriven decay from `|1⟩`.
    pub relaxation: Series,
    /// Continuous driving sampled at population peaks.
    pub envelopes: Vec<DrivenSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRate {
    pub amplitude: f64,
    /// Fit of `2P₁ − 1` at the peaks.
    pub envelope: FitResult,
    /// Generalized relaxation rate `γ̃(Γ)` derived from the envelope.
    pub total_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFit {
    pub amplitude: f64,
    pub fit: FitResult,
}

/// Calibrated model plus every fit that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: u32,
    pub model: DeviceModel,
    pub periods: Vec<PeriodFit>,
    pub power_law: FitResult,
    pub t1: FitResult,
    pub decay_rates: Vec<DecayRate>,
    pub amplitude_noise: FitResult,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Evolves `initial` under `drive` and shot-samples the population at every
/// time, with an independent seed per point.
pub fn simulate_series(
    model: &DeviceModel,
    drive: &DriveSpec,
    initial: BlochState,
    times: &[f64],
    shots: u32,
    seed: u64,
    options: &IntegratorOptions,
) -> Result<Series, SimError> {
    let traj = evolve(model, drive, initial, times, options)?;
    let p1 = traj
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            sample_shots(
                s.p1().clamp(0.0, 1.0),
                shots,
                derive_seed(seed, k as u64),
                model,
            )
            .map(|r| r.mean_p1)
        })
        .collect::<Result<_, _>>()?;
    Ok(Series {
        times: times.to_vec(),
        p1,
        shots,
    })
}

/// Peak times `(2k+1)·τ/4` closest to a log-spaced grid up to `window`.
pub fn envelope_times(period: f64, window: f64, points: usize) -> Vec<f64> {
    let first = 0.25 * period;
    let half = 0.5 * period;
    if window <= first || points == 0 {
        return vec![first];
    }
    let start = first.max(2.0 * period);
    let mut ks: Vec<u64> = vec![0];
    for i in 0..points {
        let frac = i as f64 / (points.max(2) - 1) as f64;
        let target = start * (window / start).powf(frac);
        let k = ((target - first) / half).floor().max(0.0) as u64;
        ks.push(k);
    }
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| first + half * k as f64)
        .filter(|t| *t <= window)
        .collect()
}

/// Runs the calibration experiments on a simulated device.
///
/// Acquisition is staged like a hardware session: the envelope experiment
/// samples the peaks predicted by the period fitted at the same amplitude.
pub fn acquire(
    model: &DeviceModel,
    settings: &CalibrationSettings,
    seed: u64,
) -> Result<CalibrationData, CalibrationError> {
    model.validate()?;
    let opts = &settings.integrator;
    let rabi_times: Vec<f64> = (0..settings.rabi_points)
        .map(|k| settings.rabi_window * k as f64 / settings.rabi_points as f64)
        .collect();

    let rabi = settings
        .amplitudes
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let drive = DriveSpec::new(model, g, settings.rabi_window);
            let series = simulate_series(
                model,
                &drive,
                BlochState::ground(),
                &rabi_times,
                settings.shots,
                derive_seed(seed, 1000 + i as u64),
                opts,
            )?;
            Ok(DrivenSeries {
                amplitude: g,
                series,
            })
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;

    let relaxation_window = settings
        .relaxation_times
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let relaxation = simulate_series(
        model,
        &DriveSpec::idle(relaxation_window),
        BlochState::excited(),
        &settings.relaxation_times,
        settings.shots,
        derive_seed(seed, 2000),
        opts,
    )?;

    let envelopes = rabi
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let fit = fit_sinusoid(&r.series.times, &r.series.p1)
                .map_err(at(format!("rabi period at amplitude {}", r.amplitude)))?;
            let times = envelope_times(
                fit.value("period"),
                settings.envelope_window,
                settings.envelope_points,
            );
            let duration = times.last().copied().unwrap_or(0.0);
            let drive = DriveSpec::new(model, r.amplitude, duration);
            let series = simulate_series(
                model,
                &drive,
                BlochState::ground(),
                &times,
                settings.shots,
                derive_seed(seed, 3000 + i as u64),
                opts,
            )?;
            Ok(DrivenSeries {
                amplitude: r.amplitude,
                series,
            })
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;

    Ok(CalibrationData {
        version: CALIBRATION_VERSION,
        theta0: model.theta0,
        theta1: model.theta1,
        dt_seconds: model.dt_seconds,
        rabi,
        relaxation,
        envelopes,
    })
}

/// Fits a device model to calibration data.
pub fn calibrate(
    data: &CalibrationData,
    settings: &CalibrationSettings,
) -> Result<Calibration, CalibrationError> {
    let mut notes = Vec::new();

    let periods = data
        .rabi
        .iter()
        .map(|r| {
            let fit = fit_sinusoid(&r.series.times, &r.series.p1)
                .map_err(at(format!("rabi period at amplitude {}", r.amplitude)))?;
            Ok(PeriodFit {
                amplitude: r.amplitude,
                fit,
            })
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;
    for p in periods.iter().filter(|p| !p.fit.converged) {
        notes.push(format!(
            "period fit at amplitude {} flagged: {}",
            p.amplitude,
            p.fit.diagnostics.join("; ")
        ));
    }
    let law_points: Vec<(f64, f64)> = periods
        .iter()
        .filter(|p| p.fit.converged)
        .map(|p| (p.amplitude, p.fit.value("period")))
        .collect();
    let power_law = fit_power_law(&law_points).map_err(at("power law"))?;

    // the log-linear fit needs counts: stop at the first empty point
    let relax = &data.relaxation;
    let usable = relax
        .p1
        .iter()
        .position(|p| !(*p > 0.0))
        .unwrap_or(relax.p1.len());
    if usable < relax.p1.len() {
        notes.push(format!(
            "relaxation fit uses the first {usable} of {} points; population reached zero",
            relax.p1.len()
        ));
    }
    let t1 = measure_t1(&relax.times[..usable], &relax.p1[..usable]).map_err(at("relaxation"))?;
    let t1_value = t1.value("t1");

    let factor = if settings.envelope_correction {
        1.0 / ENVELOPE_DECAY_RATIO
    } else {
        1.0
    };
    let decay_rates = data
        .envelopes
        .iter()
        .map(|e| {
            let stage = format!("driven decay at amplitude {}", e.amplitude);
            let (times, contrast): (Vec<f64>, Vec<f64>) = e
                .series
                .times
                .iter()
                .zip(&e.series.p1)
                .map(|(&t, &p)| (t, 2.0 * p - 1.0))
                .take_while(|&(_, c)| c >= settings.envelope_floor)
                .unzip();
            let envelope = fit_exponential_decay(&times, &contrast, true).map_err(at(stage))?;
            Ok(DecayRate {
                amplitude: e.amplitude,
                total_rate: envelope.value("rate") * factor,
                envelope,
            })
        })
        .collect::<Result<Vec<_>, CalibrationError>>()?;

    let rates: Vec<(f64, f64)> = decay_rates
        .iter()
        .map(|d| (d.amplitude, d.total_rate))
        .collect();
    let amplitude_noise =
        extract_amplitude_noise(&rates, t1_value).map_err(at("amplitude noise"))?;

    let mut kappa0 = amplitude_noise.value("kappa0");
    let mut kappa1 = amplitude_noise.value("kappa1");
    if kappa0 < 0.0 {
        notes.push(format!("fitted kappa0 = {kappa0:.3e} clamped to 0"));
        kappa0 = 0.0;
    }
    if kappa1 < 0.0 {
        notes.push(format!("fitted kappa1 = {kappa1:.3e} clamped to 0"));
        kappa1 = 0.0;
    }

    let model = DeviceModel {
        t1: t1_value,
        kappa0,
        kappa1,
        power_a: power_law.value("a"),
        power_b: power_law.value("b"),
        detuning: 0.0,
        theta0: data.theta0,
        theta1: data.theta1,
        dt_seconds: data.dt_seconds,
    };
    model.validate()?;

    Ok(Calibration {
        version: CALIBRATION_VERSION,
        model,
        periods,
        power_law,
        t1,
        decay_rates,
        amplitude_noise,
        notes,
    })
}

/// Acquires simulated data and calibrates from it.
pub fn calibrate_simulated(
    model: &DeviceModel,
    settings: &CalibrationSettings,
    seed: u64,
) -> Result<(CalibrationData, Calibration), CalibrationError> {
    let data = acquire(model, settings, seed)?;
    let calibration = calibrate(&data, settings)?;
    Ok((data, calibration))
}
