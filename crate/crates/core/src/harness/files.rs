//! Exchange files for running a suite outside the simulator: the schedule
//! handed to a pulse backend and the results it returns.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::suite::ExperimentSpec;
use super::HarnessError;
use crate::device::DeviceModel;
use crate::sim::MeasurementRecord;

pub const SCHEDULE_VERSION: u32 = 1;
pub const RESULTS_VERSION: u32 = 1;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub label: String,
    #[serde(rename = "M")]
    pub cycles: u32,
    #[serde(rename = "c")]
    pub stretch: f64,
    pub period_dt: f64,
    pub amplitude: f64,
    pub duration_dt: f64,
    pub shots: u32,
    pub base_period_dt: f64,
    pub seed: u64,
}

/// Pulse schedule of a program suite, in dt units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub version: u32,
    pub dt_seconds: f64,
    pub programs: Vec<ScheduleEntry>,
}

impl ScheduleFile {
    pub fn from_suite(suite: &[ExperimentSpec], dt_seconds: f64) -> Self {
        Self {
            version: SCHEDULE_VERSION,
            dt_seconds,
            programs: suite
                .iter()
                .map(|s| ScheduleEntry {
                    label: s.label.clone(),
                    cycles: s.cycles,
                    stretch: s.stretch,
                    period_dt: s.period,
                    amplitude: s.amplitude,
                    duration_dt: s.duration(),
                    shots: s.shots,
                    base_period_dt: s.base_period,
                    seed: s.seed,
                })
                .collect(),
        }
    }

    /// Rebuilds the suite, checking every entry for internal consistency.
    pub fn to_suite(&self) -> Result<Vec<ExperimentSpec>, HarnessError> {
        if self.version != SCHEDULE_VERSION {
            return Err(HarnessError::Ingest(format!(
                "unsupported schedule version {}",
                self.version
            )));
        }
        let mut seen = HashMap::new();
        let mut suite = Vec::with_capacity(self.programs.len());
        for (i, p) in self.programs.iter().enumerate() {
            let field = |name: &str, why: &str| {
                HarnessError::Ingest(format!("programs[{i}].{name}: {why}"))
            };
            if seen.insert(p.label.as_str(), i).is_some() {
                return Err(field("label", "duplicate label"));
            }
            if p.cycles == 0 {
                return Err(field("M", "must be at least 1"));
            }
            if !(p.stretch >= 1.0 && p.stretch.is_finite()) {
                return Err(field("c", "must be >= 1"));
            }
            if !(p.base_period_dt > 0.0 && p.base_period_dt.is_finite()) {
                return Err(field("base_period_dt", "must be positive"));
            }
            if (p.period_dt - p.stretch * p.base_period_dt).abs() > 1e-9 * p.period_dt.abs() {
                return Err(field("period_dt", "must equal c * base_period_dt"));
            }
            if !(p.amplitude > 0.0 && p.amplitude.is_finite()) {
                return Err(field("amplitude", "must be positive"));
            }
            if p.shots == 0 {
                return Err(field("shots", "must be at least 1"));
            }
            suite.push(ExperimentSpec {
                label: p.label.clone(),
                cycles: p.cycles,
                stretch: p.stretch,
                base_period: p.base_period_dt,
                period: p.period_dt,
                amplitude: p.amplitude,
                shots: p.shots,
                seed: p.seed,
            });
        }
        Ok(suite)
    }
}

/// Quantity reported in a results file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Readout phase.
    Theta,
    /// Excited-state population.
    P1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultEntry {
    pub label: String,
    pub mean: f64,
    pub variance_of_mean: f64,
    pub shots: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub version: u32,
    pub observable: Observable,
    pub records: Vec<ResultEntry>,
}

/// Results matched against a suite. `records[i]` belongs to `suite[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedResults {
    pub records: Vec<Option<MeasurementRecord>>,
    /// Labels with no program in the suite; their records were skipped.
    pub unknown_labels: Vec<String>,
}

impl ResultsFile {
    /// Results of programs that carry a [`crate::sim::ProgramRef`].
    pub fn from_records(
        records: &[MeasurementRecord],
        observable: Observable,
        model: &DeviceModel,
    ) -> Self {
        Self {
            version: RESULTS_VERSION,
            observable,
            records: records
                .iter()
                .filter_map(|r| {
                    let label = r.label()?.to_owned();
                    let (mean, variance_of_mean) = match observable {
                        Observable::P1 => (r.mean_p1, r.variance_of_mean),
                        Observable::Theta => (r.mean_theta, r.theta_variance_of_mean(model)),
                    };
                    Some(ResultEntry {
                        label,
                        mean,
                        variance_of_mean,
                        shots: r.shots,
                    })
                })
                .collect(),
        }
    }

    /// Validates every record and attaches it to its program.
    ///
    /// Phase results are mapped to populations with the readout references
    /// of `model`. Means are not clipped to `[0, 1]`.
    pub fn ingest(
        &self,
        suite: &[ExperimentSpec],
        model: &DeviceModel,
    ) -> Result<IngestedResults, HarnessError> {
        if self.version != RESULTS_VERSION {
            return Err(HarnessError::Ingest(format!(
                "unsupported results version {}",
                self.version
            )));
        }
        let index: HashMap<&str, usize> = suite
            .iter()
            .enumerate()
            .map(|(i, s)| (s.label.as_str(), i))
            .collect();
        let mut records = vec![None; suite.len()];
        let mut unknown_labels = Vec::new();
        let scale = model.theta_scale();
        for (i, r) in self.records.iter().enumerate() {
            let field =
                |name: &str, why: &str| HarnessError::Ingest(format!("records[{i}].{name}: {why}"));
            if !r.mean.is_finite() {
                return Err(field("mean", "must be finite"));
            }
            if !(r.variance_of_mean >= 0.0 && r.variance_of_mean.is_finite()) {
                return Err(field(
                    "variance_of_mean",
                    &format!("must be finite and >= 0, got {}", r.variance_of_mean),
                ));
            }
            if r.shots == 0 {
                return Err(field("shots", "must be at least 1"));
            }
            let Some(&k) = index.get(r.label.as_str()) else {
                unknown_labels.push(r.label.clone());
                continue;
            };
            if records[k].is_some() {
                return Err(field("label", "duplicate result for this program"));
            }
            let (mean_p1, mean_theta, variance_of_mean) = match self.observable {
                Observable::P1 => (
                    r.mean,
                    model.population_to_theta(r.mean),
                    r.variance_of_mean,
                ),
                Observable::Theta => (
                    model.theta_to_population(r.mean),
                    r.mean,
                    r.variance_of_mean / (scale * scale),
                ),
            };
            records[k] = Some(MeasurementRecord {
                program: Some(suite[k].program_ref()),
                mean_p1,
                mean_theta,
                variance_of_mean,
                shots: r.shots,
                seed: None,
            });
        }
        Ok(IngestedResults {
            records,
            unknown_labels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::build_program_suite;

    fn suite() -> Vec<ExperimentSpec> {
        build_program_suite(
            &[5, 20],
            &[1.0, 1.5, 2.0],
            10.0,
            &DeviceModel::default(),
            256,
            3,
        )
        .unwrap()
    }

    #[test]
    fn schedule_round_trip() {
        let s = suite();
        let file = ScheduleFile::from_suite(&s, 3.55e-9);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"M\":5") && text.contains("\"c\":1.5"));
        let back: ScheduleFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_suite().unwrap(), s);
    }

    #[test]
    fn schedule_rejects_inconsistent_period() {
        let mut file = ScheduleFile::from_suite(&suite(), 3.55e-9);
        file.programs[2].period_dt *= 1.01;
        let err = file.to_suite().unwrap_err().to_string();
        assert!(err.contains("programs[2].period_dt"), "{err}");
    }

    fn record(label: &str, mean: f64, var: f64) -> ResultEntry {
        ResultEntry {
            label: label.into(),
            mean,
            variance_of_mean: var,
            shots: 1024,
        }
    }

    #[test]
    fn ingest_maps_phase_to_population() {
        let model = DeviceModel::default();
        let s = suite();
        let file = ResultsFile {
            version: RESULTS_VERSION,
            observable: Observable::Theta,
            records: vec![record("M5-c1", 30.0, 0.16), record("M99-c1", 1.0, 0.1)],
        };
        let got = file.ingest(&s, &model).unwrap();
        assert_eq!(got.unknown_labels, vec!["M99-c1".to_string()]);
        let r = got.records[0].as_ref().unwrap();
        assert!((r.mean_p1 - 0.75).abs() < 1e-15);
        assert!((r.variance_of_mean - 1e-4).abs() < 1e-18);
        assert!(got.records[1..].iter().all(Option::is_none));
    }

    #[test]
    fn ingest_rejects_negative_variance() {
        let file = ResultsFile {
            version: RESULTS_VERSION,
            observable: Observable::P1,
            records: vec![record("M5-c1", 0.9, 1e-4), record("M5-c1.5", 0.9, -1.0)],
        };
        let err = file
            .ingest(&suite(), &DeviceModel::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("records[1].variance_of_mean"), "{err}");
    }

    #[test]
    fn ingest_rejects_bad_schema() {
        let text = r#"{"version": 1, "observable": "phase", "records": []}"#;
        assert!(serde_json::from_str::<ResultsFile>(text).is_err());
        let text =
            r#"{"version": 1, "observable": "p1", "records": [{"label": "x", "mean": 0.5}]}"#;
        assert!(serde_json::from_str::<ResultsFile>(text).is_err());
    }
}
