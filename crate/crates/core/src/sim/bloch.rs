//! Bloch-vector integration of a resonantly driven qubit with amplitude
//! damping.
//!
//! The rotating-frame Hamiltonian is `H = Γσˣ + Δσᶻ`, which reproduces the
//! Rabi formula `P₁ = Γ²/(Γ²+Δ²)·sin²(ωt)` with `ω = √(Γ²+Δ²)`. Relaxation
//! toward `|0⟩` acts at rate `γ̃` on the longitudinal component and `γ̃/2`
//! on the transverse ones, which is the Bloch form of a single-jump
//! amplitude-damping Lindblad channel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::device::DeviceModel;

/// Slack allowed on the Bloch-ball constraint.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, SimError> {
        let state = Self { x, y, z };
        state.check()?;
        Ok(state)
    }

    /// `|0⟩`, the north pole (`z = +1`).
    pub fn ground() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        }
    }

    /// `|1⟩`, the south pole.
    pub fn excited() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: -1.0,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Excited-state population `(1 − z)/2`.
    pub fn p1(&self) -> f64 {
        0.5 * (1.0 - self.z)
    }

    fn check(&self) -> Result<(), SimError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(SimError::NonFinite);
        }
        let norm = self.norm();
        if norm > 1.0 + NORM_TOLERANCE {
            return Err(SimError::OutsideBlochBall(norm));
        }
        Ok(())
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn from_array(v: [f64; 3]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }
}

/// A square drive pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub amplitude: f64,
    /// Detuning in rad/dt.
    pub detuning: f64,
    /// Pulse length in dt.
    pub duration: f64,
    /// Multiplier applied to every dissipative rate.
    pub noise_scale: f64,
}

impl DriveSpec {
    /// Drive with the model's detuning and unit noise scale.
    pub fn new(model: &DeviceModel, amplitude: f64, duration: f64) -> Self {
        Self {
            amplitude,
            detuning: model.detuning,
            duration,
            noise_scale: 1.0,
        }
    }

    /// Relaxation with the drive switched off.
    pub fn idle(duration: f64) -> Self {
        Self {
            amplitude: 0.0,
            detuning: 0.0,
            duration,
            noise_scale: 1.0,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }

    pub fn rabi_frequency(&self) -> f64 {
        self.amplitude.hypot(self.detuning)
    }
}

/// Step-size control for the fixed-step integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// RK4 steps per Rabi period `2π/ω`.
    pub steps_per_period: u32,
    /// Upper bound on the step, in dt.
    pub max_step: f64,
    /// Upper bound on `γ̃·h`.
    pub max_decay_per_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 800,
            max_step: 1.0,
            max_decay_per_step: 1e-2,
        }
    }
}

impl IntegratorOptions {
    pub fn halved(self) -> Self {
        Self {
            steps_per_period: self.steps_per_period * 2,
            max_step: self.max_step / 2.0,
            max_decay_per_step: self.max_decay_per_step / 2.0,
        }
    }

    fn step_bound(&self, omega: f64, rate: f64) -> f64 {
        let mut h = self.max_step;
        if omega > 0.0 {
            h = h.min(2.0 * PI / omega / f64::from(self.steps_per_period.max(1)));
        }
        if rate > 0.0 {
            h = h.min(self.max_decay_per_step / rate);
        }
        h
    }
}

/// States sampled at the requested times plus the state at the end of the
/// pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub final_state: BlochState,
}

impl Trajectory {
    pub fn populations(&self) -> Vec<f64> {
        self.states.iter().map(BlochState::p1).collect()
    }
}

struct BlochRhs {
    hx: f64,
    hz: f64,
    gamma: f64,
}

impl BlochRhs {
    fn eval(&self, r: &[f64; 3]) -> [f64; 3] {
        let [x, y, z] = *r;
        let half = 0.5 * self.gamma;
        // 2 h × r with h = (Γ, 0, Δ)
        [
            -2.0 * self.hz * y - half * x,
            2.0 * (self.hz * x - self.hx * z) - half * y,
            2.0 * self.hx * y + self.gamma * (1.0 - z),
        ]
    }

    fn rk4_step(&self, r: &mut [f64; 3], h: f64) {
        let k1 = self.eval(r);
        let k2 = self.eval(&axpy(r, 0.5 * h, &k1));
        let k3 = self.eval(&axpy(r, 0.5 * h, &k2));
        let k4 = self.eval(&axpy(r, h, &k3));
        for i in 0..3 {
            r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn axpy(r: &[f64; 3], a: f64, k: &[f64; 3]) -> [f64; 3] {
    [r[0] + a * k[0], r[1] + a * k[1], r[2] + a * k[2]]
}

/// Integrates the driven, damped Bloch equations with classical RK4.
///
/// `sample_times` must be sorted and lie in `[0, drive.duration]`. Every
/// interval between consecutive sample times is split into equal steps no
/// longer than the bound from `options`, so samples land exactly on grid
/// points.
pub fn evolve(
    model: &DeviceModel,
    drive: &DriveSpec,
    initial: BlochState,
    sample_times: &[f64],
    options: &IntegratorOptions,
) -> Result<Trajectory, SimError> {
    initial.check()?;
    if !(drive.duration >= 0.0 && drive.duration.is_finite()) {
        return Err(SimError::InvalidDrive(
            "duration must be finite and non-negative",
        ));
    }
    if !(drive.noise_scale >= 0.0 && drive.noise_scale.is_finite()) {
        return Err(SimError::InvalidDrive(
            "noise_scale must be finite and non-negative",
        ));
    }
    if !(drive.amplitude.is_finite() && drive.detuning.is_finite()) {
        return Err(SimError::InvalidDrive(
            "amplitude and detuning must be finite",
        ));
    }
    let mut previous = 0.0;
    for &t in sample_times {
        if !(t >= previous && t <= drive.duration) {
            return Err(SimError::SampleTime(t));
        }
        previous = t;
    }

    let gamma = if drive.noise_scale == 0.0 {
        0.0
    } else {
        drive.noise_scale * model.total_rate(drive.amplitude.abs())?
    };
    let rhs = BlochRhs {
        hx: drive.amplitude,
        hz: drive.detuning,
        gamma,
    };
    let h_max = options.step_bound(drive.rabi_frequency(), gamma);
    if !(h_max > 0.0) {
        return Err(SimError::InvalidDrive("integration step must be positive"));
    }

    let mut r = initial.to_array();
    let mut now = 0.0;
    let mut advance = |r: &mut [f64; 3], to: f64| -> Result<(), SimError> {
        let span = to - now;
        if span > 0.0 {
            let steps = (span / h_max).ceil().max(1.0);
            let h = span / steps;
            for _ in 0..steps as u64 {
                rhs.rk4_step(r, h);
            }
            now = to;
        }
        BlochState::from_array(*r).check()
    };

    let mut states = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        advance(&mut r, t)?;
        states.push(BlochState::from_array(r));
    }
    advance(&mut r, drive.duration)?;

    Ok(Trajectory {
        times: sample_times.to_vec(),
        states,
        final_state: BlochState::from_array(r),
    })
}
