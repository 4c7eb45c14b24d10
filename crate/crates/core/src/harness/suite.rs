//! Stretched Rabi program suites and their noise factors.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::device::{DeviceError, DeviceModel};
use crate::seed::derive_seed;
use crate::sim::ProgramRef;

/// Cycle counts of the reference program suite.
pub const DEFAULT_CYCLES: [u32; 5] = [5, 20, 40, 80, 160];
/// Stretch factors `1, 1.5, …, 4.5`.
pub const DEFAULT_STRETCHES: [f64; 8] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];
/// Unstretched Rabi period, in dt.
pub const BASE_PERIOD: f64 = 10.0;
pub const DEFAULT_SHOTS: u32 = 1024;

/// One stretched Rabi program: `cycles` full periods of length
/// `period = stretch · base_period` at the amplitude that the programming
/// model assigns to that period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub label: String,
    pub cycles: u32,
    pub stretch: f64,
    pub base_period: f64,
    pub period: f64,
    pub amplitude: f64,
    pub shots: u32,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(
        label: impl Into<String>,
        cycles: u32,
        stretch: f64,
        base_period: f64,
        model: &DeviceModel,
        shots: u32,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if cycles == 0 {
            return Err(HarnessError::Suite("cycle count must be at least 1".into()));
        }
        if !(stretch >= 1.0 && stretch.is_finite()) {
            return Err(HarnessError::Suite(format!(
                "stretch factor {stretch} must be >= 1"
            )));
        }
        if !(base_period > 0.0 && base_period.is_finite()) {
            return Err(HarnessError::Suite(format!(
                "base period {base_period} must be positive"
            )));
        }
        if shots == 0 {
            return Err(HarnessError::Suite("shots must be at least 1".into()));
        }
        let period = stretch * base_period;
        Ok(Self {
            label: label.into(),
            cycles,
            stretch,
            base_period,
            period,
            amplitude: model.period_to_amplitude(period)?,
            shots,
            seed,
        })
    }

    /// Total pulse length `M·τ`.
    pub fn duration(&self) -> f64 {
        f64::from(self.cycles) * self.period
    }

    pub fn program_ref(&self) -> ProgramRef {
        ProgramRef {
            label: self.label.clone(),
            cycles: self.cycles,
            stretch: self.stretch,
            period: self.period,
            amplitude: self.amplitude,
        }
    }
}

pub fn default_label(cycles: u32, stretch: f64) -> String {
    format!("M{cycles}-c{stretch}")
}

/// All `cycles × stretches` programs, ordered by cycle count then stretch
/// as given. Each program gets its own derived seed.
pub fn build_program_suite(
    cycles: &[u32],
    stretches: &[f64],
    base_period: f64,
    model: &DeviceModel,
    shots: u32,
    seed: u64,
) -> Result<Vec<ExperimentSpec>, HarnessError> {
    for (i, c) in stretches.iter().enumerate() {
        if stretches[..i].contains(c) {
            return Err(HarnessError::Suite(format!(
                "duplicate stretch factor {c} would collapse extrapolation points"
            )));
        }
    }
    for (i, m) in cycles.iter().enumerate() {
        if cycles[..i].contains(m) {
            return Err(HarnessError::Suite(format!("duplicate cycle count {m}")));
        }
    }
    let mut suite = Vec::with_capacity(cycles.len() * stretches.len());
    for &m in cycles {
        for &c in stretches {
            let index = suite.len() as u64;
            suite.push(ExperimentSpec::new(
                default_label(m, c),
                m,
                c,
                base_period,
                model,
                shots,
                derive_seed(seed, index),
            )?);
        }
    }
    Ok(suite)
}

/// Integrated error `ε = M·τ·(1/T1 + κ0 + κ1·Γ(τ))` of an `M`-cycle
/// program at period `τ`.
pub fn noise_factor(cycles: u32, period: f64, model: &DeviceModel) -> Result<f64, DeviceError> {
    if cycles == 0 {
        return Err(DeviceError::Domain {
            what: "cycle count",
            requirement: "at least 1",
            value: 0.0,
        });
    }
    let amplitude = model.period_to_amplitude(period)?;
    Ok(f64::from(cycles) * period * model.total_rate(amplitude)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_law() -> DeviceModel {
        DeviceModel {
            power_a: 1.0,
            power_b: -1.0,
            t1: 1000.0,
            kappa0: 0.0,
            kappa1: 0.0,
            ..DeviceModel::default()
        }
    }

    #[test]
    fn default_grid_has_forty_programs() {
        let suite = build_program_suite(
            &DEFAULT_CYCLES,
            &DEFAULT_STRETCHES,
            BASE_PERIOD,
            &DeviceModel::default(),
            1024,
            1,
        )
        .unwrap();
        assert_eq!(suite.len(), 40);
        for m in DEFAULT_CYCLES {
            let block: Vec<_> = suite.iter().filter(|s| s.cycles == m).collect();
            assert_eq!(block.len(), 8);
            for (s, c) in block.iter().zip(DEFAULT_STRETCHES) {
                assert_relative_eq!(s.period, c * BASE_PERIOD);
            }
        }
        let mut seeds: Vec<u64> = suite.iter().map(|s| s.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 40);
    }

    #[test]
    fn singleton_suite_is_unstretched() {
        let suite =
            build_program_suite(&[5], &[1.0], 10.0, &DeviceModel::default(), 1024, 1).unwrap();
        assert_eq!(suite.len(), 1);
        assert_eq!(suite[0].period, 10.0);
    }

    #[test]
    fn amplitude_from_inverse_law() {
        let suite = build_program_suite(&[5], &[2.0], 10.0, &unit_law(), 1024, 1).unwrap();
        assert_relative_eq!(suite[0].amplitude, 0.05, max_relative = 1e-14);
    }

    #[test]
    fn duplicate_stretch_is_rejected() {
        let err =
            build_program_suite(&[5], &[1.0, 2.0, 1.0], 10.0, &unit_law(), 1024, 1).unwrap_err();
        assert!(matches!(err, HarnessError::Suite(_)));
        assert!(build_program_suite(&[5], &[0.5], 10.0, &unit_law(), 1024, 1).is_err());
        assert!(build_program_suite(&[0], &[1.0], 10.0, &unit_law(), 1024, 1).is_err());
    }

    #[test]
    fn noise_factor_examples() {
        assert_relative_eq!(
            noise_factor(5, 10.0, &unit_law()).unwrap(),
            0.05,
            max_relative = 1e-14
        );
        let driven = DeviceModel {
            kappa1: 0.01,
            ..unit_law()
        };
        assert_relative_eq!(
            noise_factor(5, 10.0, &driven).unwrap(),
            0.10,
            max_relative = 1e-14
        );
        for c in DEFAULT_STRETCHES {
            let ratio = noise_factor(20, c * 10.0, &unit_law()).unwrap()
                / noise_factor(20, 10.0, &unit_law()).unwrap();
            assert_relative_eq!(ratio, c, max_relative = 1e-14);
        }
        assert!(noise_factor(0, 10.0, &unit_law()).is_err());
        assert!(noise_factor(1, -10.0, &unit_law()).is_err());
    }

    #[test]
    fn noise_factor_grows_with_cycles_and_period() {
        let m = DeviceModel::default();
        let base = noise_factor(20, 10.0, &m).unwrap();
        assert!(noise_factor(40, 10.0, &m).unwrap() > base);
        assert!(noise_factor(20, 15.0, &m).unwrap() > base);
    }
}
