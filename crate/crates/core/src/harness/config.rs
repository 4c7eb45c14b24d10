use serde::{Deserialize, Serialize};

use super::suite::{BASE_PERIOD, DEFAULT_CYCLES, DEFAULT_SHOTS, DEFAULT_STRETCHES};
use super::{HarnessError, OutputFormat};
use crate::calibration::CalibrationSettings;
use crate::device::DeviceModel;
use crate::extrapolation::LinearWeighting;

pub const CONFIG_VERSION: u32 = 1;

/// Full benchmark configuration. Every section has defaults, so `{}` is a
/// valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    /// Ground-truth device that the simulator runs.
    pub device: DeviceModel,
    pub calibration: CalibrationConfig,
    pub suite: SuiteConfig,
    pub extrapolation: ExtrapolationConfig,
    pub output: OutputConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            device: DeviceModel::default(),
            calibration: CalibrationConfig::default(),
            suite: SuiteConfig::default(),
            extrapolation: ExtrapolationConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationSource {
    /// Acquire simulated calibration data from the device and fit it.
    #[default]
    Simulate,
    /// Fit calibration data read from `data_path`.
    Data,
    /// Skip calibration and program the suite with the device itself.
    GroundTruth,
}

/// Model that supplies the noise factors of the extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFactorSource {
    #[default]
    Calibrated,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub source: CalibrationSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<String>,
    pub noise_factors: NoiseFactorSource,
    pub settings: CalibrationSettings,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            source: CalibrationSource::Simulate,
            data_path: None,
            noise_factors: NoiseFactorSource::Calibrated,
            settings: CalibrationSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub cycles: Vec<u32>,
    pub stretch_factors: Vec<f64>,
    /// Unstretched period `τ₀`, in dt.
    pub base_period: f64,
    pub shots: u32,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            cycles: DEFAULT_CYCLES.to_vec(),
            stretch_factors: DEFAULT_STRETCHES.to_vec(),
            base_period: BASE_PERIOD,
            shots: DEFAULT_SHOTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtrapolationConfig {
    pub weighting: LinearWeighting,
    /// Blocks whose full-set reduced chi-square exceeds this are flagged
    /// non-linear.
    pub linearity_threshold: f64,
    /// Also report the exact eliminator through every point.
    pub richardson: bool,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            weighting: LinearWeighting::Auto,
            linearity_threshold: 3.0,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec![OutputFormat::Json, OutputFormat::Csv],
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.device.validate()?;
        let s = &self.suite;
        if s.cycles.is_empty() || s.stretch_factors.is_empty() {
            return Err(HarnessError::Config(
                "suite needs at least one cycle count and one stretch factor".into(),
            ));
        }
        if !(self.extrapolation.linearity_threshold > 0.0) {
            return Err(HarnessError::Config(
                "linearity_threshold must be positive".into(),
            ));
        }
        if self.calibration.source == CalibrationSource::Data
            && self.calibration.data_path.is_none()
        {
            return Err(HarnessError::Config(
                "calibration source `data` needs data_path".into(),
            ));
        }
        Ok(())
    }
}
