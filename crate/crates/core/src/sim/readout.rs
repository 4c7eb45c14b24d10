//! Shot sampling and the affine population-to-phase readout map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::device::DeviceModel;

/// Identifies the program a measurement belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramRef {
    pub label: String,
    pub cycles: u32,
    pub stretch: f64,
    pub period: f64,
    pub amplitude: f64,
}

/// A shot-averaged measurement of one program.
///
/// `variance_of_mean` is in population units; use
/// [`MeasurementRecord::theta_variance_of_mean`] for phase units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<ProgramRef>,
    pub mean_p1: f64,
    pub mean_theta: f64,
    pub variance_of_mean: f64,
    pub shots: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MeasurementRecord {
    pub fn theta_variance_of_mean(&self, model: &DeviceModel) -> f64 {
        self.variance_of_mean * model.theta_scale().powi(2)
    }

    pub fn with_program(mut self, program: ProgramRef) -> Self {
        self.program = Some(program);
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.program.as_ref().map(|p| p.label.as_str())
    }
}

/// Draws `shots` Bernoulli(`p1`) outcomes and summarizes them.
///
/// The variance of the mean uses the unbiased sample variance; a single
/// shot carries no spread information and reports zero.
pub fn sample_shots(
    p1: f64,
    shots: u32,
    seed: u64,
    model: &DeviceModel,
) -> Result<MeasurementRecord, SimError> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(SimError::Probability(p1));
    }
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ones = (0..shots).filter(|_| rng.gen_bool(p1)).count() as f64;
    let n = f64::from(shots);
    let mean = ones / n;
    let sample_variance = if shots > 1 {
        ones * (n - ones) / (n * (n - 1.0))
    } else {
        0.0
    };
    Ok(MeasurementRecord {
        program: None,
        mean_p1: mean,
        mean_theta: model.population_to_theta(mean),
        variance_of_mean: sample_variance / n,
        shots,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_outcomes_have_no_variance() {
        let m = DeviceModel::default();
        let r = sample_shots(0.0, 1024, 3, &m).unwrap();
        assert_eq!(r.mean_p1, 0.0);
        assert_eq!(r.variance_of_mean, 0.0);
        assert_eq!(r.mean_theta, m.theta0);
        let r = sample_shots(1.0, 1024, 3, &m).unwrap();
        assert_eq!(r.mean_p1, 1.0);
        assert_eq!(r.variance_of_mean, 0.0);
        assert_eq!(r.mean_theta, m.theta1);
    }

    #[test]
    fn fair_coin_statistics() {
        let m = DeviceModel::default();
        let r = sample_shots(0.5, 1_000_000, 11, &m).unwrap();
        assert!((r.mean_p1 - 0.5).abs() < 0.002);
        let expected = 0.25 / 1e6;
        assert!((r.variance_of_mean - expected).abs() < 0.05 * expected);
    }

    #[test]
    fn theta_is_affine_in_population() {
        let m = DeviceModel {
            theta0: 0.0,
            theta1: 40.0,
            ..DeviceModel::default()
        };
        assert_eq!(m.population_to_theta(0.5), 20.0);
        let r = sample_shots(0.3, 4096, 5, &m).unwrap();
        assert!((r.mean_theta - 40.0 * r.mean_p1).abs() < 1e-12);
        assert!((r.theta_variance_of_mean(&m) - 1600.0 * r.variance_of_mean).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_record() {
        let m = DeviceModel::default();
        let a = sample_shots(0.37, 1024, 99, &m).unwrap();
        let b = sample_shots(0.37, 1024, 99, &m).unwrap();
        assert_eq!(a, b);
        let c = sample_shots(0.37, 1024, 100, &m).unwrap();
        assert_ne!(a.mean_p1.to_bits(), c.mean_p1.to_bits());
    }

    #[test]
    fn rejects_invalid_arguments() {
        let m = DeviceModel::default();
        assert!(matches!(
            sample_shots(1.2, 10, 0, &m),
            Err(SimError::Probability(_))
        ));
        assert!(matches!(
            sample_shots(0.2, 0, 0, &m),
            Err(SimError::NoShots)
        ));
    }
}
