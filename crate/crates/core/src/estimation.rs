//! Standard and complementary covariance estimation.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{ComplexMatrix, MulCount};
use crate::sigmodel::{Hypothesis, SampleBlock};

/// Diagonal entries at or below this are treated as a dead antenna.
pub const DEGENERATE_DIAGONAL: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("degenerate input: antenna {antenna} has zero power")]
    Degenerate { antenna: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
}

/// Sample standard covariance `R̂ = (1/K) Σ y yᴴ` and complementary
/// covariance `Ĉ = (1/K) Σ y yᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub r: ComplexMatrix,
    pub c: ComplexMatrix,
    pub samples: usize,
}

impl CovariancePair {
    pub fn antennas(&self) -> usize {
        self.r.rows()
    }

    /// First antenna whose estimated power is not strictly positive.
    pub fn degenerate_antenna(&self) -> Option<usize> {
        (0..self.antennas()).find(|&m| !(self.r[(m, m)].re > DEGENERATE_DIAGONAL))
    }

    pub fn check_diagonal(&self) -> Result<(), EstimationError> {
        match self.degenerate_antenna() {
            Some(antenna) => Err(EstimationError::Degenerate { antenna }),
            None => Ok(()),
        }
    }

    /// Real diagonal of `R̂`.
    pub fn powers(&self) -> Vec<f64> {
        (0..self.antennas()).map(|m| self.r[(m, m)].re).collect()
    }
}

/// Covariances of an M×K sample matrix (column k is `y_k`).
pub fn sample_covariances(samples: &ComplexMatrix) -> Result<CovariancePair, EstimationError> {
    sample_covariances_counted(samples, &mut ())
}

/// As [`sample_covariances`], reporting complex multiplications to `ops`.
///
/// Only the upper triangles are accumulated; each of those M(M+1)/2 entries
/// per matrix costs K products plus one `1/K` scaling. The lower triangles
/// are mirrored (conjugated for `R̂`).
pub fn sample_covariances_counted<C: MulCount>(
    samples: &ComplexMatrix,
    ops: &mut C,
) -> Result<CovariancePair, EstimationError> {
    let m = samples.rows();
    let k = samples.cols();
    if m == 0 || k == 0 {
        return Err(EstimationError::Dimension(format!("empty block {m}x{k}")));
    }
    let inv_k = 1.0 / k as f64;
    let mut r = ComplexMatrix::zeros(m, m);
    let mut c = ComplexMatrix::zeros(m, m);
    for a in 0..m {
        let ya = samples.row(a);
        for b in a..m {
            let yb = samples.row(b);
            let mut acc_r = Complex64::new(0.0, 0.0);
            let mut acc_c = Complex64::new(0.0, 0.0);
            for (x, y) in ya.iter().zip(yb) {
                acc_r += x * y.conj();
                acc_c += x * y;
            }
            ops.add(2 * (k as u64 + 1));
            let rv = acc_r * inv_k;
            let cv = acc_c * inv_k;
            if a == b {
                r[(a, a)] = Complex64::new(rv.re, 0.0);
                c[(a, a)] = cv;
            } else {
                r[(a, b)] = rv;
                r[(b, a)] = rv.conj();
                c[(a, b)] = cv;
                c[(b, a)] = cv;
            }
        }
    }
    Ok(CovariancePair { r, c, samples: k })
}

impl SampleBlock {
    pub fn covariances(&self) -> Result<CovariancePair, EstimationError> {
        sample_covariances(&self.samples)
    }
}

/// Population `(R, C)` for the realized draws. `R_s = C_s = diag(gamma)`
/// because the symbols are real.
pub fn population_covariances(
    hypothesis: Hypothesis,
    channel: &ComplexMatrix,
    gamma: &[f64],
    noise_var: &[f64],
    scale: f64,
) -> Result<(ComplexMatrix, ComplexMatrix), EstimationError> {
    let m = noise_var.len();
    if channel.rows() != m || channel.cols() != gamma.len() {
        return Err(EstimationError::Dimension(format!(
            "channel {}x{} does not match M={} q={}",
            channel.rows(),
            channel.cols(),
            m,
            gamma.len()
        )));
    }
    let noise = ComplexMatrix::from_real_diagonal(noise_var);
    match hypothesis {
        Hypothesis::H0 => Ok((noise, ComplexMatrix::zeros(m, m))),
        Hypothesis::H1 => {
            let weighted = channel
                .matmul(&ComplexMatrix::from_real_diagonal(gamma))
                .expect("shapes checked")
                .scale(scale);
            let r = weighted
                .matmul(&channel.adjoint())
                .and_then(|x| x.add(&noise))
                .expect("shapes checked");
            let c = weighted.matmul(&channel.transpose()).expect("shapes checked");
            Ok((r, c))
        }
    }
}

/// Normalized covariance statistic
/// `Σ_{m<n} |r_mn|²/(r_mm r_nn) + Σ_m |c_mm|²/(2 r_mm²) + Σ_{m<n} |c_mn|²/(r_mm r_nn)`.
///
/// Each term is evaluated as written; `ops` receives one count per
/// multiplication or division, 3M² + M in total.
pub(crate) fn normalized_statistic<C: MulCount>(
    r: &ComplexMatrix,
    c: &ComplexMatrix,
    ops: &mut C,
) -> Result<f64, EstimationError> {
    let m = r.rows();
    if !r.is_square() || c.rows() != m || c.cols() != m {
        return Err(EstimationError::Dimension("R and C must be square and equal size".into()));
    }
    let d: Vec<f64> = (0..m).map(|i| r[(i, i)].re).collect();
    if let Some(antenna) = d.iter().position(|x| !(*x > DEGENERATE_DIAGONAL)) {
        return Err(EstimationError::Degenerate { antenna });
    }
    let mut standard = 0.0;
    let mut diagonal = 0.0;
    let mut complementary = 0.0;
    for a in 0..m {
        diagonal += c[(a, a)].norm_sqr() / (2.0 * (d[a] * d[a]));
        ops.add(4);
        for b in (a + 1)..m {
            standard += r[(a, b)].norm_sqr() / (d[a] * d[b]);
            complementary += c[(a, b)].norm_sqr() / (d[a] * d[b]);
            ops.add(6);
        }
    }
    Ok(standard + diagonal + complementary)
}

/// Population statistic `T`; zero exactly when the signal is absent.
pub fn population_statistic(r: &ComplexMatrix, c: &ComplexMatrix) -> Result<f64, EstimationError> {
    normalized_statistic(r, c, &mut ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{hermitian_check, symmetric_check, MulCounter};
    use crate::sigmodel::{generate_block, Scenario};

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_outer_product_by_hand() {
        let y = ComplexMatrix::from_row_major(2, 1, vec![z(1.0, 0.0), z(0.0, 1.0)]).unwrap();
        let cov = sample_covariances(&y).unwrap();
        let r = [[z(1.0, 0.0), z(0.0, -1.0)], [z(0.0, 1.0), z(1.0, 0.0)]];
        let c = [[z(1.0, 0.0), z(0.0, 1.0)], [z(0.0, 1.0), z(-1.0, 0.0)]];
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(cov.r[(a, b)], r[a][b], "R[{a},{b}]");
                assert_eq!(cov.c[(a, b)], c[a][b], "C[{a},{b}]");
            }
        }
        assert_eq!(cov.samples, 1);
    }

    #[test]
    fn all_zero_block_is_flagged() {
        let y = ComplexMatrix::zeros(3, 10);
        let cov = sample_covariances(&y).unwrap();
        assert_eq!(cov.degenerate_antenna(), Some(0));
        assert_eq!(cov.check_diagonal(), Err(EstimationError::Degenerate { antenna: 0 }));
    }

    #[test]
    fn empty_block_rejected() {
        assert!(sample_covariances(&ComplexMatrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn structure_of_random_covariances() {
        for seed in 0..200 {
            let s = Scenario {
                antennas: 1 + (seed as usize % 6),
                samples: 1 + (seed as usize * 7 % 40),
                sources: 2,
                alpha_db: 1.0,
                gamma_db: vec![0.0, 2.0],
                snr_db: 0.0,
                hypothesis: if seed % 2 == 0 { Hypothesis::H0 } else { Hypothesis::H1 },
                seed,
            };
            let cov = generate_block(&s, &mut s.rng()).unwrap().covariances().unwrap();
            assert!(hermitian_check(&cov.r, 1e-10).unwrap());
            assert!(symmetric_check(&cov.c, 1e-10).unwrap());
            assert!(cov.powers().iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn multiplication_count_per_matrix_pair() {
        let y = ComplexMatrix::from_row_major(3, 5, vec![z(1.0, 0.5); 15]).unwrap();
        let mut ops = MulCounter::default();
        sample_covariances_counted(&y, &mut ops).unwrap();
        assert_eq!(ops.count, 3 * 4 * 6);
    }

    #[test]
    fn population_h0_is_diagonal_and_circular() {
        let h = ComplexMatrix::identity(3);
        let (r, c) = population_covariances(Hypothesis::H0, &h, &[1.0, 1.0, 1.0], &[0.9, 1.1, 1.2], 1.0).unwrap();
        assert_eq!(c, ComplexMatrix::zeros(3, 3));
        assert_eq!(r, ComplexMatrix::from_real_diagonal(&[0.9, 1.1, 1.2]));
        assert_eq!(population_statistic(&r, &c).unwrap(), 0.0);
    }

    #[test]
    fn population_rank_one_unit_column() {
        let mut h = ComplexMatrix::zeros(3, 1);
        h[(0, 0)] = z(1.0, 0.0);
        let sigma2 = [0.8, 1.0, 1.25];
        let (r, c) = population_covariances(Hypothesis::H1, &h, &[1.0], &sigma2, 1.0).unwrap();
        assert_eq!(r, ComplexMatrix::from_real_diagonal(&[1.8, 1.0, 1.25]));
        assert_eq!(c, ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]));
        let t = population_statistic(&r, &c).unwrap();
        assert!((t - 1.0 / (2.0 * 1.8 * 1.8)).abs() < 1e-15);
    }

    #[test]
    fn population_dimension_mismatch() {
        let h = ComplexMatrix::zeros(2, 1);
        assert!(population_covariances(Hypothesis::H1, &h, &[1.0, 1.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn statistic_single_diagonal_term() {
        let r = ComplexMatrix::identity(2);
        let mut c = ComplexMatrix::zeros(2, 2);
        c[(0, 0)] = z(2f64.sqrt(), 0.0);
        assert!((population_statistic(&r, &c).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn statistic_with_zero_c_counts_only_standard_sum() {
        let mut r = ComplexMatrix::from_real_diagonal(&[2.0, 3.0]);
        r[(0, 1)] = z(1.0, 1.0);
        r[(1, 0)] = z(1.0, -1.0);
        let t = population_statistic(&r, &ComplexMatrix::zeros(2, 2)).unwrap();
        assert!((t - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn statistic_rejects_zero_diagonal() {
        let r = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(
            population_statistic(&r, &ComplexMatrix::zeros(2, 2)),
            Err(EstimationError::Degenerate { antenna: 1 })
        );
    }
}
