//! Monte-Carlo experiment engine.
//!
//! Trials run in parallel on a dedicated rayon pool. Every trial draws from
//! its own substream `(master_seed, purpose, trial)`, and per-trial results
//! are gathered in trial order, so outputs do not depend on the worker
//! count.
//!
//! Within one trial index the H0 and H1 blocks share the
//! [`Purpose::Realization`] draws (noise variances and channel); only the
//! symbols and noise samples come from separate substreams. Calibration
//! uses its own [`Purpose::Calibration`] substreams.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::detectors::{ncc_null_dof, ncc_statistic, ncc_threshold, statistic, DetectError, DetectorKind};
use crate::estimation::sample_covariances;
use crate::numerics::ChiSquare;
use crate::sigmodel::{
    draw_parts, draw_realization, substream, BlockParts, Hypothesis, ModelError, Purpose, Scenario,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Closed-form chi-square threshold (NCC only).
    Theoretical,
    /// Empirical H0 quantile from calibration trials.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    pub mode: ThresholdMode,
}

impl DetectorSpec {
    /// Theoretical threshold for NCC, empirical for everything else.
    pub fn default_for(kind: DetectorKind) -> Self {
        let mode = if kind.has_theoretical_threshold() {
            ThresholdMode::Theoretical
        } else {
            ThresholdMode::Empirical
        };
        Self { kind, mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    SnrDb,
    Pf,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::Pf => "pf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Hypothesis and seed are ignored; SNR is the fixed ROC operating point.
    pub base: Scenario,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    /// Target false-alarm rate for SNR sweeps.
    pub pf: f64,
    pub detectors: Vec<DetectorSpec>,
    pub n_trials: usize,
    pub n_cal_trials: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Spec(m));
        self.base.validate()?;
        if self.n_trials == 0 {
            return bad("n_trials must be >= 1".into());
        }
        if self.grid.is_empty() {
            return bad("sweep grid is empty".into());
        }
        if self.grid.iter().any(|g| !g.is_finite()) {
            return bad("sweep grid contains non-finite values".into());
        }
        let inc = self.grid.windows(2).all(|w| w[1] > w[0]);
        let dec = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return bad("sweep grid must be strictly monotone".into());
        }
        if self.detectors.is_empty() {
            return bad("no detectors selected".into());
        }
        for d in &self.detectors {
            if d.mode == ThresholdMode::Theoretical && !d.kind.has_theoretical_threshold() {
                return bad(format!("{} has no theoretical threshold", d.kind));
            }
        }
        let pfs: Vec<f64> = match self.sweep {
            SweepVar::SnrDb => vec![self.pf],
            SweepVar::Pf => self.grid.clone(),
        };
        if pfs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return bad("false-alarm targets must lie in (0, 1)".into());
        }
        Ok(())
    }

    fn needs_calibration(&self) -> bool {
        self.detectors.iter().any(|d| d.mode == ThresholdMode::Empirical)
    }
}

/// One (detector, sweep value) result.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub detector: DetectorKind,
    pub sweep: SweepVar,
    pub sweep_value: f64,
    pub pf_target: f64,
    pub pf_hat: f64,
    pub pd_hat: f64,
    pub stderr_pf: f64,
    pub stderr_pd: f64,
    pub threshold: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Wall time of the whole run that produced this point.
    pub wall_time: Duration,
}

/// Binomial standard error `sqrt(p(1-p)/n)`.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Order statistic at 1-based index `ceil((1 - pf) n)` of `sorted`
/// (ascending).
pub fn empirical_quantile(sorted: &[f64], pf: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "empty calibration sample");
    // The small slack absorbs rounding in (1 - pf) * n for exact products.
    let idx = (((1.0 - pf) * n as f64) - 1e-9).ceil() as usize;
    sorted[idx.clamp(1, n) - 1]
}

/// Moments and KS distance of simulated `2K·T_N` under H0.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSummary {
    pub antennas: usize,
    pub samples: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub dof: u32,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
}

pub struct Harness {
    pool: rayon::ThreadPool,
}

impl Harness {
    /// `workers == 0` lets rayon pick the thread count.
    pub fn new(workers: usize) -> Result<Self, HarnessError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn trials<T, F>(&self, n: usize, f: F) -> Result<Vec<T>, HarnessError>
    where
        T: Send,
        F: Fn(u64) -> Result<T, HarnessError> + Sync + Send,
    {
        self.pool
            .install(|| (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<T>, _>>())
    }

    /// Sorted H0 statistics of each requested detector over the calibration
    /// substreams.
    pub fn calibration_statistics(
        &self,
        base: &Scenario,
        kinds: &[DetectorKind],
        n_cal_trials: usize,
        master_seed: u64,
    ) -> Result<Vec<Vec<f64>>, HarnessError> {
        base.validate()?;
        let per_trial = self.trials(n_cal_trials, |i| {
            let mut rng = substream(master_seed, Purpose::Calibration, i);
            let real = draw_realization(base, &mut rng)?;
            let block = draw_parts(base, real, Hypothesis::H0, &mut rng)?.compose(0.0);
            let cov = sample_covariances(&block.samples).map_err(DetectError::from)?;
            kinds
                .iter()
                .map(|k| Ok(statistic(*k, &cov)?.value))
                .collect::<Result<Vec<f64>, HarnessError>>()
        })?;
        Ok((0..kinds.len())
            .map(|d| {
                let mut col: Vec<f64> = per_trial.iter().map(|t| t[d]).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect())
    }

    /// Empirical threshold achieving `target_pf` on H0 calibration trials.
    pub fn run_pf_calibration(
        &self,
        spec: &ExperimentSpec,
        detector: DetectorKind,
        target_pf: f64,
    ) -> Result<f64, HarnessError> {
        check_calibration_size(spec.n_cal_trials, target_pf)?;
        let sorted = self.calibration_statistics(&spec.base, &[detector], spec.n_cal_trials, spec.master_seed)?;
        Ok(empirical_quantile(&sorted[0], target_pf))
    }

    /// Thresholds for every detector at each false-alarm target.
    fn thresholds(&self, spec: &ExperimentSpec, pfs: &[f64]) -> Result<Vec<Vec<f64>>, HarnessError> {
        let empirical: Vec<DetectorKind> = spec
            .detectors
            .iter()
            .filter(|d| d.mode == ThresholdMode::Empirical)
            .map(|d| d.kind)
            .collect();
        let calibrated = if spec.needs_calibration() {
            for pf in pfs {
                check_calibration_size(spec.n_cal_trials, *pf)?;
            }
            self.calibration_statistics(&spec.base, &empirical, spec.n_cal_trials, spec.master_seed)?
        } else {
            Vec::new()
        };
        spec.detectors
            .iter()
            .map(|d| {
                pfs.iter()
                    .map(|pf| match d.mode {
                        ThresholdMode::Theoretical => {
                            Ok(ncc_threshold(spec.base.antennas, spec.base.samples, *pf)?)
                        }
                        ThresholdMode::Empirical => {
                            let slot = empirical.iter().position(|k| *k == d.kind).expect("calibrated");
                            Ok(empirical_quantile(&calibrated[slot], *pf))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn paired_parts(&self, base: &Scenario, seed: u64, trial: u64) -> Result<(BlockParts, BlockParts), HarnessError> {
        let real = draw_realization(base, &mut substream(seed, Purpose::Realization, trial))?;
        let h0 = draw_parts(base, real.clone(), Hypothesis::H0, &mut substream(seed, Purpose::Null, trial))?;
        let h1 = draw_parts(base, real, Hypothesis::H1, &mut substream(seed, Purpose::Alternative, trial))?;
        Ok((h0, h1))
    }

    /// Detection probability against SNR at a fixed false-alarm target.
    ///
    /// Each trial's H1 symbols and noise are reused across the SNR grid, only
    /// the signal scale changes. False alarms are counted once on the paired
    /// H0 blocks and reported on every grid point.
    pub fn run_pd_vs_snr(&self, spec: &ExperimentSpec) -> Result<Vec<CurvePoint>, HarnessError> {
        spec.validate()?;
        if spec.sweep != SweepVar::SnrDb {
            return Err(HarnessError::Spec("run_pd_vs_snr needs an snr_db sweep".into()));
        }
        let start = Instant::now();
        let thresholds: Vec<f64> = self.thresholds(spec, &[spec.pf])?.into_iter().map(|t| t[0]).collect();
        let gamma = spec.base.gamma_linear();
        let n_det = spec.detectors.len();

        // Per trial: false alarms per detector, then detections per (snr, detector).
        let tallies = self.trials(spec.n_trials, |i| {
            let (h0, h1) = self.paired_parts(&spec.base, spec.master_seed, i)?;
            let mut hits = vec![false; n_det * (1 + spec.grid.len())];
            let cov0 = sample_covariances(&h0.compose(0.0).samples).map_err(DetectError::from)?;
            for (d, det) in spec.detectors.iter().enumerate() {
                hits[d] = statistic(det.kind, &cov0)?.value >= thresholds[d];
            }
            for (g, snr) in spec.grid.iter().enumerate() {
                let block = h1.at_snr(&gamma, *snr)?;
                let cov = sample_covariances(&block.samples).map_err(DetectError::from)?;
                for (d, det) in spec.detectors.iter().enumerate() {
                    hits[(g + 1) * n_det + d] = statistic(det.kind, &cov)?.value >= thresholds[d];
                }
            }
            Ok(hits)
        })?;
        let mut counts = vec![0usize; n_det * (1 + spec.grid.len())];
        for t in &tallies {
            for (c, h) in counts.iter_mut().zip(t) {
                *c += *h as usize;
            }
        }
        let wall = start.elapsed();
        let n = spec.n_trials;
        let mut out = Vec::with_capacity(n_det * spec.grid.len());
        for (d, det) in spec.detectors.iter().enumerate() {
            let pf_hat = counts[d] as f64 / n as f64;
            for (g, snr) in spec.grid.iter().enumerate() {
                let pd_hat = counts[(g + 1) * n_det + d] as f64 / n as f64;
                out.push(CurvePoint {
                    detector: det.kind,
                    sweep: SweepVar::SnrDb,
                    sweep_value: *snr,
                    pf_target: spec.pf,
                    pf_hat,
                    pd_hat,
                    stderr_pf: binomial_stderr(pf_hat, n),
                    stderr_pd: binomial_stderr(pd_hat, n),
                    threshold: thresholds[d],
                    n_trials: n,
                    seed: spec.master_seed,
                    wall_time: wall,
                });
            }
        }
        Ok(out)
    }

    /// ROC at the base scenario's SNR: one point per false-alarm target.
    pub fn run_roc(&self, spec: &ExperimentSpec) -> Result<Vec<CurvePoint>, HarnessError> {
        spec.validate()?;
        if spec.sweep != SweepVar::Pf {
            return Err(HarnessError::Spec("run_roc needs a pf sweep".into()));
        }
        let start = Instant::now();
        let thresholds = self.thresholds(spec, &spec.grid)?;
        let gamma = spec.base.gamma_linear();
        let n_det = spec.detectors.len();

        let stats = self.trials(spec.n_trials, |i| {
            let (h0, h1) = self.paired_parts(&spec.base, spec.master_seed, i)?;
            let cov0 = sample_covariances(&h0.compose(0.0).samples).map_err(DetectError::from)?;
            let cov1 = sample_covariances(&h1.at_snr(&gamma, spec.base.snr_db)?.samples).map_err(DetectError::from)?;
            let mut s = Vec::with_capacity(2 * n_det);
            for det in &spec.detectors {
                s.push(statistic(det.kind, &cov0)?.value);
                s.push(statistic(det.kind, &cov1)?.value);
            }
            Ok(s)
        })?;
        let wall = start.elapsed();
        let n = spec.n_trials;
        let mut out = Vec::with_capacity(n_det * spec.grid.len());
        for (d, det) in spec.detectors.iter().enumerate() {
            for (g, pf) in spec.grid.iter().enumerate() {
                let thr = thresholds[d][g];
                let fa = stats.iter().filter(|s| s[2 * d] >= thr).count();
                let hit = stats.iter().filter(|s| s[2 * d + 1] >= thr).count();
                let pf_hat = fa as f64 / n as f64;
                let pd_hat = hit as f64 / n as f64;
                out.push(CurvePoint {
                    detector: det.kind,
                    sweep: SweepVar::Pf,
                    sweep_value: *pf,
                    pf_target: *pf,
                    pf_hat,
                    pd_hat,
                    stderr_pf: binomial_stderr(pf_hat, n),
                    stderr_pd: binomial_stderr(pd_hat, n),
                    threshold: thr,
                    n_trials: n,
                    seed: spec.master_seed,
                    wall_time: wall,
                });
            }
        }
        Ok(out)
    }

    /// Simulated `2K·T_N` values under H0, in trial order.
    pub fn null_statistics(
        &self,
        antennas: usize,
        samples: usize,
        alpha_db: f64,
        n_trials: usize,
        seed: u64,
    ) -> Result<Vec<f64>, HarnessError> {
        let scenario = Scenario {
            antennas,
            samples,
            sources: 1,
            alpha_db,
            gamma_db: vec![0.0],
            snr_db: 0.0,
            hypothesis: Hypothesis::H0,
            seed,
        };
        scenario.validate()?;
        self.trials(n_trials, |i| {
            let mut rng = substream(seed, Purpose::NullCheck, i);
            let real = draw_realization(&scenario, &mut rng)?;
            let block = draw_parts(&scenario, real, Hypothesis::H0, &mut rng)?.compose(0.0);
            let cov = sample_covariances(&block.samples).map_err(DetectError::from)?;
            Ok(2.0 * samples as f64 * ncc_statistic(&cov)?)
        })
    }

    /// Compares simulated `2K·T_N` under H0 with `χ²(2M²)`.
    pub fn run_null_distribution_check(
        &self,
        antennas: usize,
        samples: usize,
        alpha_db: f64,
        n_trials: usize,
        seed: u64,
    ) -> Result<NullSummary, HarnessError> {
        if n_trials < 10_000 {
            return Err(HarnessError::Spec(format!(
                "null-distribution check needs >= 10000 trials, got {n_trials}"
            )));
        }
        let mut values = self.null_statistics(antennas, samples, alpha_db, n_trials, seed)?;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let dof = ncc_null_dof(antennas);
        let chi = ChiSquare::new(dof).map_err(DetectError::from)?;
        values.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, v) in values.iter().enumerate() {
            let f = chi.cdf(*v).map_err(DetectError::from)?;
            ks = ks.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
        }
        Ok(NullSummary {
            antennas,
            samples,
            n_trials,
            seed,
            dof,
            mean,
            variance,
            ks_distance: ks,
        })
    }
}

fn check_calibration_size(n_cal: usize, pf: f64) -> Result<(), HarnessError> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(HarnessError::Calibration(format!("target Pf {pf} outside (0, 1)")));
    }
    if (n_cal as f64) * pf < 100.0 - 1e-9 {
        return Err(HarnessError::Calibration(format!(
            "{n_cal} calibration trials give fewer than 100 expected exceedances at Pf = {pf}; need at least {}",
            (100.0 / pf).ceil()
        )));
    }
    Ok(())
}
