//! Detector statistics, the NCC theoretical threshold, and decisions.
//!
//! All statistics are oriented so that larger values favour H1.
//!
//! | kind  | statistic                                                    |
//! |-------|--------------------------------------------------------------|
//! | NCC   | normalized standard + complementary covariance energy        |
//! | CAV   | `Σ_{m,n} |r̂_mn| / Σ_m r̂_mm`                                   |
//! | HDM   | `-ln(det R̂ / Π_m r̂_mm)`                                       |
//! | LMPIT | `‖D^{-1/2} R̂ D^{-1/2}‖²_F`, `D = diag(R̂)`                     |
//! | NCHDM | `-ln(det R̂_aug / Π diag R̂_aug)`, `R̂_aug = [[R̂, Ĉ], [Ĉ*, R̂*]]` |

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::estimation::{normalized_statistic, sample_covariances_counted, CovariancePair, EstimationError};
use crate::numerics::{log_determinant, ChiSquare, ComplexMatrix, MulCount, NumericsError};
use crate::sigmodel::Hypothesis;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{kind} statistic is NaN")]
    NanStatistic { kind: DetectorKind },
    #[error("threshold must be finite, got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Ncc,
    Cav,
    Hdm,
    Lmpit,
    NcHdm,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] = [
        DetectorKind::Ncc,
        DetectorKind::Cav,
        DetectorKind::Hdm,
        DetectorKind::Lmpit,
        DetectorKind::NcHdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ncc => "ncc",
            DetectorKind::Cav => "cav",
            DetectorKind::Hdm => "hdm",
            DetectorKind::Lmpit => "lmpit",
            DetectorKind::NcHdm => "nchdm",
        }
    }

    /// Whether a closed-form null distribution (and so a theoretical
    /// threshold) is available.
    pub fn has_theoretical_threshold(self) -> bool {
        self == DetectorKind::Ncc
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| format!("unknown detector '{s}' (expected one of ncc, cav, hdm, lmpit, nchdm)"))
    }
}

/// A statistic value. `rank_deficient` marks log-determinant detectors
/// that met a covariance which is not positive definite; the value is then
/// `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub rank_deficient: bool,
}

impl Score {
    fn plain(value: f64) -> Self {
        Self {
            value,
            rank_deficient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: DetectorKind,
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Hypothesis,
    pub samples: usize,
    pub antennas: usize,
    pub rank_deficient: bool,
}

/// NCC test statistic of a covariance pair.
pub fn ncc_statistic(cov: &CovariancePair) -> Result<f64, DetectError> {
    ncc_statistic_counted(cov, &mut ())
}

pub fn ncc_statistic_counted<C: MulCount>(cov: &CovariancePair, ops: &mut C) -> Result<f64, DetectError> {
    Ok(normalized_statistic(&cov.r, &cov.c, ops)?)
}

/// Covariance estimation followed by the NCC statistic, with every complex
/// multiplication reported to `ops`.
pub fn ncc_pipeline_counted<C: MulCount>(samples: &ComplexMatrix, ops: &mut C) -> Result<f64, DetectError> {
    let cov = sample_covariances_counted(samples, ops)?;
    ncc_statistic_counted(&cov, ops)
}

/// Theoretical NCC threshold `Q⁻¹_{χ²(2M²)}(pf) / (2K)`.
pub fn ncc_threshold(antennas: usize, samples: usize, pf: f64) -> Result<f64, DetectError> {
    if antennas == 0 || samples == 0 {
        return Err(NumericsError::Domain(format!("need M >= 1 and K >= 1, got M={antennas} K={samples}")).into());
    }
    let dof = u32::try_from(2 * antennas * antennas)
        .map_err(|_| NumericsError::Domain(format!("M = {antennas} too large")))?;
    let quantile = ChiSquare::new(dof)?.inverse_survival(pf)?;
    Ok(quantile / (2.0 * samples as f64))
}

/// Degrees of freedom of the asymptotic NCC null distribution of `2K·T_N`.
pub fn ncc_null_dof(antennas: usize) -> u32 {
    (2 * antennas * antennas) as u32
}

fn cav(cov: &CovariancePair) -> f64 {
    let total: f64 = cov.r.as_slice().iter().map(|z| z.norm()).sum();
    let power: f64 = cov.powers().iter().sum();
    total / power
}

fn lmpit(cov: &CovariancePair) -> f64 {
    let d = cov.powers();
    let m = d.len();
    let mut acc = 0.0;
    for a in 0..m {
        for b in 0..m {
            acc += cov.r[(a, b)].norm_sqr() / (d[a] * d[b]);
        }
    }
    acc
}

/// `-ln(det A / Π diag A)` for a Hermitian matrix.
fn neg_log_hadamard(a: &ComplexMatrix) -> Score {
    let (log_abs, phase) = log_determinant(a);
    if !log_abs.is_finite() || phase.re <= 0.0 {
        return Score {
            value: f64::INFINITY,
            rank_deficient: true,
        };
    }
    let log_diag: f64 = (0..a.rows()).map(|i| a[(i, i)].re.ln()).sum();
    Score::plain(log_diag - log_abs)
}

fn augmented(cov: &CovariancePair) -> ComplexMatrix {
    ComplexMatrix::block2x2(&cov.r, &cov.c, &cov.c.conj(), &cov.r.conj()).expect("square blocks")
}

/// Statistic of any detector, polarity-normalised (larger ⇒ H1).
pub fn statistic(kind: DetectorKind, cov: &CovariancePair) -> Result<Score, DetectError> {
    cov.check_diagonal()?;
    let score = match kind {
        DetectorKind::Ncc => Score::plain(ncc_statistic(cov)?),
        DetectorKind::Cav => Score::plain(cav(cov)),
        DetectorKind::Hdm => neg_log_hadamard(&cov.r),
        DetectorKind::Lmpit => Score::plain(lmpit(cov)),
        DetectorKind::NcHdm => neg_log_hadamard(&augmented(cov)),
    };
    if score.value.is_nan() {
        return Err(DetectError::NanStatistic { kind });
    }
    Ok(score)
}

/// Decides H1 iff the statistic reaches the threshold.
pub fn detect(kind: DetectorKind, cov: &CovariancePair, threshold: f64) -> Result<Verdict, DetectError> {
    if !threshold.is_finite() {
        return Err(DetectError::InvalidThreshold(threshold));
    }
    let score = statistic(kind, cov)?;
    Ok(Verdict {
        kind,
        statistic: score.value,
        threshold,
        decision: if score.value >= threshold { Hypothesis::H1 } else { Hypothesis::H0 },
        samples: cov.samples,
        antennas: cov.antennas(),
        rank_deficient: score.rank_deficient,
    })
}
