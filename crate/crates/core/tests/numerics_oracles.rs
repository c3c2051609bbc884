//! Chi-square and determinant routines against independent oracles.

use ncc_core::numerics::{chi2_inverse_survival, chi2_survival, determinant, ChiSquare, ComplexMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

/// Even-dof survival in closed form: `Q = e^{-x/2} Σ_{j<ν/2} (x/2)^j / j!`,
/// summed in log space.
fn poisson_tail_oracle(dof: u32, x: f64) -> f64 {
    assert!(dof % 2 == 0);
    let half = x / 2.0;
    if half == 0.0 {
        return 1.0;
    }
    let mut log_fact = 0.0;
    let mut total = 0.0;
    for j in 0..dof / 2 {
        if j > 0 {
            log_fact += (j as f64).ln();
        }
        total += (j as f64 * half.ln() - half - log_fact).exp();
    }
    total
}

fn bisect_oracle(dof: u32, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 10_000.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poisson_tail_oracle(dof, mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn survival_matches_closed_form_on_grid() {
    for dof in [2u32, 4, 8, 18, 32, 50, 128, 200, 512] {
        let d = ChiSquare::new(dof).unwrap();
        for i in 0..=400 {
            let x = dof as f64 * 4.0 * i as f64 / 400.0;
            let got = chi2_survival(d, x).unwrap();
            let want = poisson_tail_oracle(dof, x);
            assert!((got - want).abs() <= 1e-12, "dof={dof} x={x}: {got} vs {want}");
        }
        for x in [1e3, 5e3, 1e4] {
            let got = chi2_survival(d, x).unwrap();
            assert!((got - poisson_tail_oracle(dof, x)).abs() <= 1e-12);
        }
    }
}

#[test]
fn survival_reference_point_dof32() {
    let d = ChiSquare::new(32).unwrap();
    let oracle = poisson_tail_oracle(32, 46.194);
    assert!((oracle - 0.05).abs() < 1e-4, "{oracle}");
    assert!((chi2_survival(d, 46.194).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn inverse_matches_bisection_oracle() {
    let d = ChiSquare::new(32).unwrap();
    let x = chi2_inverse_survival(d, 0.05).unwrap();
    let oracle = bisect_oracle(32, 0.05);
    assert!((x - oracle).abs() < 1e-8, "{x} vs {oracle}");
    assert!((x - 46.194).abs() < 1e-3);
    for dof in [2u32, 8, 32, 128, 512] {
        for p in [1e-4, 0.01, 0.05, 0.1, 0.5, 0.9, 0.99] {
            let x = chi2_inverse_survival(ChiSquare::new(dof).unwrap(), p).unwrap();
            assert!((x - bisect_oracle(dof, p)).abs() < 1e-7 * x.max(1.0), "dof={dof} p={p}");
        }
    }
}

#[test]
fn inverse_round_trip() {
    for dof in [2u32, 8, 32, 72, 128, 512] {
        let d = ChiSquare::new(dof).unwrap();
        for p in [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let x = chi2_inverse_survival(d, p).unwrap();
            assert!((chi2_survival(d, x).unwrap() - p).abs() <= 1e-10, "dof={dof} p={p}");
        }
    }
}

#[test]
fn inverse_is_decreasing_in_p() {
    let d = ChiSquare::new(128).unwrap();
    let xs: Vec<f64> = (1..100).map(|i| d.inverse_survival(i as f64 / 100.0).unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn survival_monotone_on_grid() {
    for dof in [1u32, 2, 3, 7, 32, 128, 511] {
        let d = ChiSquare::new(dof).unwrap();
        let mut prev = 1.0;
        for i in 0..2000 {
            let q = d.survival(i as f64 * 0.01 * dof as f64).unwrap();
            assert!(q <= prev, "dof={dof} step {i}");
            prev = q;
        }
    }
}

#[test]
fn survival_then_inverse_is_identity() {
    for dof in [2u32, 3, 9, 32, 128, 512] {
        let d = ChiSquare::new(dof).unwrap();
        let nu = dof as f64;
        for i in 0..=50 {
            let x = nu / 10.0 * (100.0_f64).powf(i as f64 / 50.0);
            let q = d.survival(x).unwrap();
            // Once 1 - Q drops below ~1e-9 the double nearest Q no longer
            // pins x down; below that the error is bounded by eps / pdf(x).
            if q <= 0.0 || 1.0 - q < 1e-9 {
                continue;
            }
            let back = d.inverse_survival(q).unwrap();
            let conditioning = 8.0 * f64::EPSILON / d.pdf(x);
            assert!((back - x).abs() < 1e-8 * x + conditioning, "dof={dof} x={x} back={back}");
        }
    }
}

fn cofactor_det(a: &ComplexMatrix) -> Complex64 {
    let n = a.rows();
    if n == 1 {
        return a[(0, 0)];
    }
    let mut total = Complex64::new(0.0, 0.0);
    for col in 0..n {
        let minor: Vec<Complex64> = (1..n)
            .flat_map(|r| (0..n).filter(move |c| *c != col).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)])
            .collect();
        let m = ComplexMatrix::from_row_major(n - 1, n - 1, minor).unwrap();
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        total += a[(0, col)] * cofactor_det(&m) * sign;
    }
    total
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n).prop_map(move |v| {
        ComplexMatrix::from_row_major(n, n, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap()
    })
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn determinant_of_sample_covariance_matches_cofactor() {
    use ncc_core::sigmodel::{generate_block, Hypothesis, Scenario};
    for seed in 0..50 {
        let s = Scenario {
            antennas: 4,
            samples: 30,
            sources: 2,
            alpha_db: 1.0,
            gamma_db: vec![0.0, 1.0],
            snr_db: -3.0,
            hypothesis: Hypothesis::H1,
            seed,
        };
        let cov = generate_block(&s, &mut s.rng()).unwrap().covariances().unwrap();
        assert!(rel(determinant(&cov.r), cofactor_det(&cov.r)) < 1e-10);
        assert!(rel(determinant(&cov.c), cofactor_det(&cov.c)) < 1e-10);
    }
}

proptest! {
    #[test]
    fn determinant_matches_cofactor(a in matrix(4)) {
        prop_assert!(rel(determinant(&a), cofactor_det(&a)) < 1e-9);
    }

    #[test]
    fn determinant_is_multiplicative(a in matrix(4), b in matrix(4)) {
        let ab = a.matmul(&b).unwrap();
        prop_assert!(rel(determinant(&ab), determinant(&a) * determinant(&b)) < 1e-9);
    }

    #[test]
    fn determinant_transpose_invariant(a in matrix(5)) {
        prop_assert!(rel(determinant(&a.transpose()), determinant(&a)) < 1e-10);
    }
}
