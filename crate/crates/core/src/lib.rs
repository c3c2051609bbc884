//! Spectrum sensing for noncircular signals on multi-antenna receivers whose
//! antennas have unequal, unknown noise powers.
//!
//! The central detector (NCC) combines the off-diagonal standard covariance
//! with the complementary covariance `E[y yᵀ]`, each entry normalised by the
//! estimated per-antenna powers, so that it is insensitive to per-antenna
//! gain and noise mismatch. Under H0, `2K·T_N` is asymptotically chi-square
//! with `2M²` degrees of freedom, which gives a closed-form threshold.
//!
//! Modules, bottom up:
//! - [`numerics`]: small complex matrices, determinants, chi-square tails
//! - [`sigmodel`]: H0/H1 block generation and the binary IQ format
//! - [`estimation`]: sample and population covariances
//! - [`detectors`]: NCC and the CAV / HDM / LMPIT / NC-HDM baselines
//! - [`harness`]: deterministic parallel Monte-Carlo experiments

pub mod detectors;
pub mod estimation;
pub mod harness;
pub mod numerics;
pub mod sigmodel;

pub use detectors::{detect, ncc_statistic, ncc_threshold, statistic, DetectError, DetectorKind, Score, Verdict};
pub use estimation::{sample_covariances, CovariancePair, EstimationError};
pub use harness::{CurvePoint, ExperimentSpec, Harness, HarnessError, SweepVar};
pub use numerics::ComplexMatrix;
pub use sigmodel::{generate_block, Hypothesis, SampleBlock, Scenario};
