//! Library side of the `ncc` command-line tool: config parsing, CSV output,
//! and the command implementations used by `main.rs` and the tests.

pub mod config;
pub mod csv;

use std::path::Path;

use thiserror::Error;

use ncc_core::detectors::{detect, ncc_threshold, DetectError, Verdict};
use ncc_core::estimation::{sample_covariances, EstimationError};
use ncc_core::harness::{Harness, HarnessError, NullSummary};
use ncc_core::sigmodel::{generate_block, read_iq_file, write_iq_file, Hypothesis, IqError, ModelError, SampleBlock, Scenario};
use ncc_core::DetectorKind;

pub use config::{ConfigError, ExperimentKind, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

impl CliError {
    /// 0 success, 1 degenerate data, 2 usage/IO, 3 config validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Degenerate(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl From<IqError> for CliError {
    fn from(e: IqError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DegenerateChannel => CliError::Degenerate(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Estimation(_) | DetectError::NanStatistic { .. } => CliError::Degenerate(e.to_string()),
            DetectError::Numerics(_) | DetectError::InvalidThreshold(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        DetectError::from(e).into()
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Spec(_) | HarnessError::Calibration(_) => CliError::Config(e.to_string()),
            HarnessError::Model(m) => m.into(),
            HarnessError::Detect(d) => d.into(),
            HarnessError::Pool(_) => CliError::Usage(e.to_string()),
        }
    }
}

/// Result of `generate`: the block as written plus what produced it.
#[derive(Debug)]
pub struct Generated {
    pub scenario: Scenario,
    pub block: SampleBlock,
    pub realized_snr_db: f64,
}

/// Generates one block from the config's scenario and writes it as IQ.
pub fn generate(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<Generated, CliError> {
    let hypothesis = cfg
        .hypothesis
        .ok_or_else(|| CliError::Config("key 'hypothesis': required in [scenario] for generate".into()))?;
    let mut scenario = cfg.scenario(hypothesis);
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let block = generate_block(&scenario, &mut scenario.rng())?;
    write_iq_file(&block.samples, out)?;
    let realized_snr_db = block.realized_snr_db(&scenario.gamma_linear());
    Ok(Generated {
        scenario,
        block,
        realized_snr_db,
    })
}

/// Where a baseline detector gets its threshold when none is given.
#[derive(Debug, Clone)]
pub struct CalibrationSource {
    pub alpha_db: f64,
    pub n_cal_trials: usize,
    pub seed: u64,
    pub workers: usize,
}

/// Detection on an IQ file.
///
/// Threshold precedence: explicit override, then the theoretical NCC
/// threshold, then empirical calibration under H0 at the file's (M, K).
pub fn detect_file(
    path: &Path,
    kind: DetectorKind,
    pf: f64,
    threshold: Option<f64>,
    calibration: &CalibrationSource,
) -> Result<Verdict, CliError> {
    let samples = read_iq_file(path)?;
    let cov = sample_covariances(&samples)?;
    cov.check_diagonal()?;
    let thr = match threshold {
        Some(t) => t,
        None if kind == DetectorKind::Ncc => ncc_threshold(samples.rows(), samples.cols(), pf)?,
        None => {
            let scenario = Scenario {
                antennas: samples.rows(),
                samples: samples.cols(),
                sources: 1,
                alpha_db: calibration.alpha_db,
                gamma_db: vec![0.0],
                snr_db: 0.0,
                hypothesis: Hypothesis::H0,
                seed: calibration.seed,
            };
            calibrate_threshold(&scenario, kind, pf, calibration.n_cal_trials, calibration.workers)?
        }
    };
    Ok(detect(kind, &cov, thr)?)
}

/// Empirical H0 threshold for `kind` at the scenario's (M, K, alpha).
pub fn calibrate_threshold(
    scenario: &Scenario,
    kind: DetectorKind,
    pf: f64,
    n_cal_trials: usize,
    workers: usize,
) -> Result<f64, CliError> {
    let spec = ncc_core::harness::ExperimentSpec {
        base: scenario.clone(),
        sweep: ncc_core::SweepVar::SnrDb,
        grid: vec![0.0],
        pf,
        detectors: vec![ncc_core::harness::DetectorSpec::default_for(kind)],
        n_trials: 1,
        n_cal_trials,
        master_seed: scenario.seed,
    };
    let harness = Harness::new(workers)?;
    Ok(harness.run_pf_calibration(&spec, kind, pf)?)
}

/// Output of an experiment run.
#[derive(Debug)]
pub enum ExperimentOutput {
    Curve(Vec<ncc_core::CurvePoint>),
    Null(NullSummary),
}

impl ExperimentOutput {
    pub fn to_csv(&self, alpha_db: f64) -> String {
        match self {
            ExperimentOutput::Curve(points) => csv::curve_csv(points),
            ExperimentOutput::Null(s) => csv::null_csv(s, alpha_db),
        }
    }
}

pub fn run_experiment(cfg: &RunConfig, workers: usize) -> Result<ExperimentOutput, CliError> {
    let harness = Harness::new(workers)?;
    match cfg.kind {
        ExperimentKind::PdVsSnr => Ok(ExperimentOutput::Curve(harness.run_pd_vs_snr(&cfg.experiment_spec())?)),
        ExperimentKind::Roc => Ok(ExperimentOutput::Curve(harness.run_roc(&cfg.experiment_spec())?)),
        ExperimentKind::Null => Ok(ExperimentOutput::Null(harness.run_null_distribution_check(
            cfg.antennas,
            cfg.samples,
            cfg.alpha_db,
            cfg.n_trials,
            cfg.seed,
        )?)),
    }
}

/// Experiment CSV for `cfg`, the exact bytes `ncc experiment` writes.
pub fn experiment_csv(cfg: &RunConfig, workers: usize) -> Result<String, CliError> {
    Ok(run_experiment(cfg, workers)?.to_csv(cfg.alpha_db))
}
