use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mitigability::calibration::{acquire, calibrate, Calibration, CalibrationData};
use mitigability::harness::{
    analyze, build_program_suite, calibrate_stage, ideal_values, read_json, run_benchmark,
    run_suite, write_json, AnalysisOptions, BenchConfig, DataSource, MitigabilityReport,
    NoiseFactorSource, Observable, OutputFormat, Provenance, ResultsFile, ScheduleFile,
    REPORT_VERSION,
};
use mitigability::seed::derive_seed;
use mitigability::DeviceModel;

#[derive(Parser)]
#[command(
    name = "mitigability",
    version,
    about = "Benchmark zero-noise extrapolation on stretched Rabi programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Benchmark config (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `suite.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict report output to one format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    Theta,
    P1,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a device model from calibration data (simulated when --data is absent).
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Calibration data file to fit instead of simulating one.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Write the schedule of the program suite.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Calibration or device-model file used to program the amplitudes.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Simulate a schedule on the configured device and write a results file.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, value_enum, default_value = "p1")]
        observable: ObservableArg,
    },
    /// Build a report from an external results file.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        results: PathBuf,
        /// Calibration or device-model file supplying noise factors and readout.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Calibrate, simulate and extrapolate end to end.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Re-render an existing report.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Calibrate { common, data } => cmd_calibrate(&common, data.as_deref()),
        Command::Suite { common, model } => cmd_suite(&common, model.as_deref()),
        Command::Run {
            common,
            schedule,
            observable,
        } => cmd_run(&common, &schedule, observable),
        Command::Ingest {
            common,
            schedule,
            results,
            model,
        } => cmd_ingest(&common, &schedule, &results, model.as_deref()),
        Command::Bench { common } => cmd_bench(&common),
        Command::Report { common, report } => cmd_report(&common, &report),
    }
}

fn load_config(common: &Common) -> Result<BenchConfig> {
    let mut config = match &common.config {
        Some(path) => read_json::<BenchConfig>(path)?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.suite.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &Common, config: &BenchConfig) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn formats(common: &Common, config: &BenchConfig) -> Vec<OutputFormat> {
    match common.format {
        Some(Format::Json) => vec![OutputFormat::Json],
        Some(Format::Csv) => vec![OutputFormat::Csv],
        None => config.output.formats.clone(),
    }
}

/// Reads either a calibration file or a bare device model.
fn load_model(path: &Path) -> Result<DeviceModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(calibration) = serde_json::from_str::<Calibration>(&text) {
        return Ok(calibration.model);
    }
    let model: DeviceModel = serde_json::from_str(&text).with_context(|| {
        format!(
            "{} is neither a calibration nor a device model",
            path.display()
        )
    })?;
    model.validate()?;
    Ok(model)
}

fn cmd_calibrate(common: &Common, data: Option<&Path>) -> Result<()> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    let settings = &config.calibration.settings;
    let data: CalibrationData = match data {
        Some(path) => read_json(path)?,
        None => {
            let data = acquire(
                &config.device,
                settings,
                derive_seed(config.suite.seed, 1 << 40),
            )?;
            write_json(&dir.join("calibration_data.json"), &data)?;
            data
        }
    };
    let calibration = calibrate(&data, settings).context("calibration stage")?;
    let path = dir.join("calibration.json");
    write_json(&path, &calibration)?;
    for note in &calibration.notes {
        eprintln!("note: {note}");
    }
    println!("{}", path.display());
    Ok(())
}

fn cmd_suite(common: &Common, model: Option<&Path>) -> Result<()> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    let model = match model {
        Some(path) => load_model(path)?,
        None => calibrate_stage(&config)?.model,
    };
    let s = &config.suite;
    let suite = build_program_suite(
        &s.cycles,
        &s.stretch_factors,
        s.base_period,
        &model,
        s.shots,
        s.seed,
    )?;
    let path = dir.join("schedule.json");
    write_json(&path, &ScheduleFile::from_suite(&suite, model.dt_seconds))?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_run(common: &Common, schedule: &Path, observable: ObservableArg) -> Result<()> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    let suite = read_json::<ScheduleFile>(schedule)?.to_suite()?;
    let records = run_suite(
        &config.device,
        &suite,
        &config.calibration.settings.integrator,
    )?;
    let observable = match observable {
        ObservableArg::Theta => Observable::Theta,
        ObservableArg::P1 => Observable::P1,
    };
    let path = dir.join("results.json");
    write_json(
        &path,
        &ResultsFile::from_records(&records, observable, &config.device),
    )?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_ingest(
    common: &Common,
    schedule: &Path,
    results: &Path,
    model: Option<&Path>,
) -> Result<()> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    let model = match model {
        Some(path) => load_model(path)?,
        None => config.device,
    };
    let suite = read_json::<ScheduleFile>(schedule)?.to_suite()?;
    let ingested = read_json::<ResultsFile>(results)?.ingest(&suite, &model)?;
    let options = &config.calibration.settings.integrator;
    let ideals = ideal_values(&model, &suite, options)?;
    let analysis = AnalysisOptions {
        weighting: config.extrapolation.weighting,
        linearity_threshold: config.extrapolation.linearity_threshold,
        richardson: config.extrapolation.richardson,
    };
    let blocks = analyze(
        &suite,
        &ingested.records,
        &model,
        &model,
        &ideals,
        &analysis,
    );
    let report = MitigabilityReport {
        version: REPORT_VERSION,
        provenance: Provenance {
            source: DataSource::Ingested,
            seed: None,
            device: None,
            calibrated: model,
            calibration: None,
            noise_factors: NoiseFactorSource::Calibrated,
            weighting: analysis.weighting,
            linearity_threshold: analysis.linearity_threshold,
        },
        theta_scale: model.theta_scale(),
        blocks,
        diagnostics: ingested
            .unknown_labels
            .iter()
            .map(|l| format!("skipped result with unknown label `{l}`"))
            .collect(),
    };
    emit(&report, &dir, &formats(common, &config))
}

fn cmd_bench(common: &Common) -> Result<()> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    let run = run_benchmark(&config)?;
    if let Some(calibration) = &run.calibrated.calibration {
        write_json(&dir.join("calibration.json"), calibration)?;
    }
    emit(&run.report, &dir, &formats(common, &config))
}

fn cmd_report(common: &Common, report: &Path) -> Result<()> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    let report: MitigabilityReport = read_json(report)?;
    if report.version != REPORT_VERSION {
        bail!("unsupported report version {}", report.version);
    }
    emit(&report, &dir, &formats(common, &config))
}

fn emit(report: &MitigabilityReport, dir: &Path, formats: &[OutputFormat]) -> Result<()> {
    for path in report.write(dir, formats)? {
        println!("{}", path.display());
    }
    for b in &report.blocks {
        match b.mitigability {
            Some(m) => eprintln!(
                "M={:<4} delta={:.4} ({:.2}% of scale){}",
                b.cycles,
                m.delta,
                100.0 * m.normalized,
                if b.nonlinear { " non-linear" } else { "" }
            ),
            None => eprintln!("M={:<4} failed: {}", b.cycles, b.diagnostics.join("; ")),
        }
    }
    Ok(())
}
