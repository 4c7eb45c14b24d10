use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::NoiseFactorSource;
use super::files::write_json;
use super::HarnessError;
use crate::calibration::Calibration;
use crate::device::DeviceModel;
use crate::extrapolation::{ExtrapolationResult, LinearWeighting};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Simulated,
    Ingested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Ground-truth device, when the data were simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceModel>,
    /// Model used to program the suite and to compute the ideal values.
    pub calibrated: DeviceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    pub noise_factors: NoiseFactorSource,
    pub weighting: LinearWeighting,
    pub linearity_threshold: f64,
}

/// One measured program, in phase units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub label: String,
    pub stretch: f64,
    pub period: f64,
    pub amplitude: f64,
    pub noise_factor: f64,
    pub mean: f64,
    pub std_error: f64,
    pub shots: u32,
}

/// Linear extrapolation on the `dataset_size` least noisy points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub dataset_size: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub variance_amplification: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_chi2: Option<f64>,
    pub delta: f64,
    pub delta_normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mitigability {
    /// `|⟨A⟩_I − ⟨A⟩₀|` in phase units.
    pub delta: f64,
    /// `delta / |θ₁ − θ₀|`.
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockStatus {
    Extrapolated,
    /// No extrapolation possible (all noise factors zero, or a single
    /// stretch factor); the least stretched program is the estimate.
    Direct,
    Failed,
}

/// Analysis of all programs sharing one cycle count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBlock {
    pub cycles: u32,
    pub status: BlockStatus,
    /// Noiseless value of the logical program, in phase units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<f64>,
    pub points: Vec<ReportPoint>,
    pub convergence: Vec<ConvergenceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_chi2: Option<f64>,
    pub nonlinear: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub richardson: Option<ExtrapolationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigability: Option<Mitigability>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigabilityReport {
    pub version: u32,
    pub provenance: Provenance,
    pub theta_scale: f64,
    pub blocks: Vec<CycleBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl MitigabilityReport {
    pub fn block(&self, cycles: u32) -> Option<&CycleBlock> {
        self.blocks.iter().find(|b| b.cycles == cycles)
    }

    pub fn to_json(&self) -> String {
        // only finite numbers and plain maps: serialization cannot fail
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per measured program.
    pub fn measurements_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "cycles",
            "label",
            "stretch",
            "period",
            "amplitude",
            "noise_factor",
            "mean",
            "std_error",
            "shots",
        ])?;
        for b in &self.blocks {
            for p in &b.points {
                w.write_record([
                    b.cycles.to_string(),
                    p.label.clone(),
                    p.stretch.to_string(),
                    p.period.to_string(),
                    p.amplitude.to_string(),
                    p.noise_factor.to_string(),
                    p.mean.to_string(),
                    p.std_error.to_string(),
                    p.shots.to_string(),
                ])?;
            }
        }
        finish(w)
    }

    /// One row per cycle count and dataset size.
    pub fn convergence_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "cycles",
            "dataset_size",
            "estimate",
            "std_error",
            "variance_amplification",
            "reduced_chi2",
            "delta",
            "delta_normalized",
        ])?;
        for b in &self.blocks {
            for c in &b.convergence {
                w.write_record([
                    b.cycles.to_string(),
                    c.dataset_size.to_string(),
                    c.estimate.to_string(),
                    c.std_error.to_string(),
                    c.variance_amplification.to_string(),
                    c.reduced_chi2.map(|v| v.to_string()).unwrap_or_default(),
                    c.delta.to_string(),
                    c.delta_normalized.to_string(),
                ])?;
            }
        }
        finish(w)
    }

    /// Writes `report.json`, `measurements.csv` and `convergence.csv` as
    /// selected, returning the paths written.
    pub fn write(
        &self,
        dir: &Path,
        formats: &[OutputFormat],
    ) -> Result<Vec<PathBuf>, HarnessError> {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let mut written = Vec::new();
        if formats.contains(&OutputFormat::Json) {
            let path = dir.join("report.json");
            write_json(&path, self)?;
            written.push(path);
        }
        if formats.contains(&OutputFormat::Csv) {
            for (name, text) in [
                ("measurements.csv", self.measurements_csv()?),
                ("convergence.csv", self.convergence_csv()?),
            ] {
                let path = dir.join(name);
                fs::write(&path, text).map_err(|source| HarnessError::Io {
                    path: path.clone(),
                    source,
                })?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv fields are utf-8"))
}
