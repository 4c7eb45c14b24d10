//! Driven-qubit simulator: Bloch-equation dynamics with amplitude-dependent
//! relaxation, shot-sampled readout, and the analytic Rabi oracle.

mod bloch;
mod readout;

use thiserror::Error;

pub use bloch::{evolve, BlochState, DriveSpec, IntegratorOptions, Trajectory, NORM_TOLERANCE};
pub use readout::{sample_shots, MeasurementRecord, ProgramRef};

use crate::device::{DeviceError, DeviceModel};
use crate::harness::ExperimentSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("integration produced a non-finite state")]
    NonFinite,
    #[error("Bloch vector norm {0} exceeds 1")]
    OutsideBlochBall(f64),
    #[error("invalid drive: {0}")]
    InvalidDrive(&'static str),
    #[error("sample time {0} is out of order or outside the pulse")]
    SampleTime(f64),
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("at least one shot is required")]
    NoShots,
}

/// Rabi formula `Γ²/(Γ²+Δ²)·sin²(ωt)` with `ω = √(Γ²+Δ²)`.
///
/// Returns 0 when both the drive and the detuning vanish.
pub fn rabi_population(amplitude: f64, detuning: f64, t: f64) -> f64 {
    let omega_sq = amplitude * amplitude + detuning * detuning;
    if omega_sq == 0.0 {
        return 0.0;
    }
    let s = (omega_sq.sqrt() * t).sin();
    amplitude * amplitude / omega_sq * s * s
}

/// Time of the population peak at which an `M`-cycle program is read out,
/// `M·τ − τ/4`.
pub fn readout_time(cycles: u32, period: f64) -> f64 {
    (f64::from(cycles) - 0.25) * period
}

/// Excited-state population at the readout peak of `spec`, before shot
/// sampling.
pub fn peak_population(
    model: &DeviceModel,
    spec: &ExperimentSpec,
    options: &IntegratorOptions,
) -> Result<f64, SimError> {
    let drive = DriveSpec::new(model, spec.amplitude, f64::from(spec.cycles) * spec.period);
    let t = readout_time(spec.cycles, spec.period);
    let traj = evolve(model, &drive, BlochState::ground(), &[t], options)?;
    Ok(traj.states[0].p1().clamp(0.0, 1.0))
}

/// Simulates one stretched Rabi program and samples its readout.
pub fn run_experiment(
    model: &DeviceModel,
    spec: &ExperimentSpec,
    options: &IntegratorOptions,
) -> Result<MeasurementRecord, SimError> {
    let p1 = peak_population(model, spec, options)?;
    Ok(sample_shots(p1, spec.shots, spec.seed, model)?.with_program(spec.program_ref()))
}
