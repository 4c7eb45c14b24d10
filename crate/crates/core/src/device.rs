//! Physical parameters of the model qubit and the closed-form maps between
//! drive amplitude, Rabi period and relaxation rate.
//!
//! All times are in units of the hardware sample tick `dt`; `dt_seconds`
//! exists only for export.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relaxation time in `dt` (about 71 µs at 3.55 ns per tick).
pub const DEFAULT_T1: f64 = 20_000.0;
/// Sample tick of the reference pulse backend.
pub const DEFAULT_DT_SECONDS: f64 = 3.55e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("{what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("readout phases must differ (theta0 = theta1 = {0})")]
    IndistinguishableReadout(f64),
}

fn domain(what: &'static str, requirement: &'static str, value: f64) -> DeviceError {
    DeviceError::Domain {
        what,
        requirement,
        value,
    }
}

/// Ground-truth or calibrated single-qubit parameters.
///
/// The drive amplitude `Γ` is the coefficient of `σˣ` in the rotating-frame
/// Hamiltonian, so the resonant Rabi angular frequency equals `Γ` and the
/// physically consistent power law is `τ = 2π·Γ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    /// Bare relaxation time. `f64::INFINITY` (serialized as `null`) means no
    /// undriven decay.
    #[serde(with = "infinite_as_null")]
    pub t1: f64,
    /// Intercept of the amplitude-dependent rate `γ(Γ) = κ0 + κ1·Γ`.
    pub kappa0: f64,
    /// Slope of the amplitude-dependent rate.
    pub kappa1: f64,
    /// Prefactor `a` of `τ(Γ) = a·Γ^b`.
    pub power_a: f64,
    /// Exponent `b` of `τ(Γ) = a·Γ^b`.
    pub power_b: f64,
    /// Drive detuning `Δ = ω₁₂ − ω_D` in rad/dt.
    pub detuning: f64,
    /// Readout phase of `|0⟩`.
    pub theta0: f64,
    /// Readout phase of `|1⟩`.
    pub theta1: f64,
    pub dt_seconds: f64,
}

impl Default for DeviceModel {
    fn default() -> Self {
        // drive-induced rate at the 10 dt base period roughly equals 1/T1
        Self {
            t1: DEFAULT_T1,
            kappa0: 0.0,
            kappa1: 8.0e-5,
            power_a: 2.0 * PI,
            power_b: -1.0,
            detuning: 0.0,
            theta0: 0.0,
            theta1: 40.0,
            dt_seconds: DEFAULT_DT_SECONDS,
        }
    }
}

impl DeviceModel {
    /// A qubit with a strong amplitude-independent loss channel on top of the
    /// default parameters. Long programs on it leave the linear regime.
    pub fn leaky() -> Self {
        Self {
            kappa0: 6.0e-4,
            ..Self::default()
        }
    }

    /// Default parameters with every dissipative rate switched off.
    pub fn noiseless() -> Self {
        Self {
            t1: f64::INFINITY,
            kappa0: 0.0,
            kappa1: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        // NaN fails every comparison below, so it is rejected as well
        if !(self.t1 > 0.0) {
            return Err(domain("t1", "positive", self.t1));
        }
        if !(self.power_a > 0.0 && self.power_a.is_finite()) {
            return Err(domain("power_a", "positive and finite", self.power_a));
        }
        if !(self.power_b < 0.0 && self.power_b.is_finite()) {
            return Err(domain("power_b", "negative and finite", self.power_b));
        }
        if !(self.kappa0 >= 0.0 && self.kappa0.is_finite()) {
            return Err(domain("kappa0", "non-negative", self.kappa0));
        }
        if !(self.kappa1 >= 0.0 && self.kappa1.is_finite()) {
            return Err(domain("kappa1", "non-negative", self.kappa1));
        }
        if !self.detuning.is_finite() {
            return Err(domain("detuning", "finite", self.detuning));
        }
        if !(self.dt_seconds > 0.0) {
            return Err(domain("dt_seconds", "positive", self.dt_seconds));
        }
        if !(self.theta0.is_finite() && self.theta1.is_finite()) {
            return Err(domain("theta", "finite", self.theta0 + self.theta1));
        }
        if self.theta0 == self.theta1 {
            return Err(DeviceError::IndistinguishableReadout(self.theta0));
        }
        Ok(())
    }

    /// Rabi period `τ = a·Γ^b` for drive amplitude `Γ`.
    pub fn amplitude_to_period(&self, amplitude: f64) -> Result<f64, DeviceError> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(domain("drive amplitude", "positive", amplitude));
        }
        Ok(self.power_a * amplitude.powf(self.power_b))
    }

    /// Inverse power law `Γ = (τ/a)^{1/b}`.
    pub fn period_to_amplitude(&self, period: f64) -> Result<f64, DeviceError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(domain("period", "positive", period));
        }
        Ok((period / self.power_a).powf(1.0 / self.power_b))
    }

    /// Bare relaxation rate `1/T1` (zero when `T1` is infinite).
    pub fn bare_rate(&self) -> f64 {
        1.0 / self.t1
    }

    /// Amplitude-dependent excess rate `γ(Γ) = κ0 + κ1·Γ`.
    pub fn drive_rate(&self, amplitude: f64) -> f64 {
        self.kappa0 + self.kappa1 * amplitude
    }

    /// Generalized relaxation rate `γ̃(Γ) = 1/T1 + κ0 + κ1·Γ`.
    pub fn total_rate(&self, amplitude: f64) -> Result<f64, DeviceError> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(domain("drive amplitude", "non-negative", amplitude));
        }
        Ok(self.bare_rate() + self.drive_rate(amplitude))
    }

    /// Full-scale readout contrast `θ₁ − θ₀`.
    pub fn theta_scale(&self) -> f64 {
        self.theta1 - self.theta0
    }

    /// Affine readout map from excited-state population to phase units.
    pub fn population_to_theta(&self, p1: f64) -> f64 {
        self.theta0 + p1 * self.theta_scale()
    }

    pub fn theta_to_population(&self, theta: f64) -> f64 {
        (theta - self.theta0) / self.theta_scale()
    }

    /// Same parameters with all dissipation removed.
    pub fn without_noise(&self) -> Self {
        Self {
            t1: f64::INFINITY,
            kappa0: 0.0,
            kappa1: 0.0,
            ..*self
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.bare_rate() == 0.0 && self.kappa0 == 0.0 && self.kappa1 == 0.0
    }
}

/// JSON has no infinity; an unbounded relaxation time is written as `null`.
pub(crate) mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() && *value > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
