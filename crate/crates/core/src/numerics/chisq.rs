//! Central chi-square distribution: survival function and its inverse.
//!
//! The regularized incomplete gamma function uses the usual regime split:
//! power series below `a + 1`, Lentz continued fraction above it.

use super::NumericsError;

const MAX_ITER: usize = 100_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Central chi-square distribution with an integer number of degrees of
/// freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiSquare {
    dof: u32,
}

impl ChiSquare {
    pub fn new(dof: u32) -> Result<Self, NumericsError> {
        if dof == 0 {
            return Err(NumericsError::Domain("chi-square needs dof >= 1".into()));
        }
        Ok(Self { dof })
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn mean(&self) -> f64 {
        self.dof as f64
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.dof as f64
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if self.dof == 2 && x == 0.0 { 0.5 } else { 0.0 };
        }
        let a = 0.5 * self.dof as f64;
        ((a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)).exp()
    }

    pub fn cdf(&self, x: f64) -> Result<f64, NumericsError> {
        check_x(x)?;
        Ok(regularized_gamma(0.5 * self.dof as f64, 0.5 * x).0)
    }

    /// Upper tail probability `Pr{X > x}`.
    pub fn survival(&self, x: f64) -> Result<f64, NumericsError> {
        check_x(x)?;
        Ok(regularized_gamma(0.5 * self.dof as f64, 0.5 * x).1)
    }

    /// The `x` with `survival(x) == p`.
    pub fn inverse_survival(&self, p: f64) -> Result<f64, NumericsError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(NumericsError::Domain(format!(
                "tail probability must lie in (0, 1), got {p}"
            )));
        }
        let q = |x: f64| regularized_gamma(0.5 * self.dof as f64, 0.5 * x).1;

        // Bracket: q(lo) >= p >= q(hi).
        let mut lo = 0.0_f64;
        let mut hi = wilson_hilferty(self.dof as f64, p).max(1e-3);
        while q(hi) > p {
            lo = hi;
            hi *= 2.0;
        }
        let mut x = wilson_hilferty(self.dof as f64, p);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }

        for _ in 0..500 {
            let qx = q(x);
            let err = qx - p;
            if err.abs() <= 1e-15 * p {
                return Ok(x);
            }
            if err > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let density = self.pdf(x);
            let newton = if density > 0.0 { x + err / density } else { f64::NAN };
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

/// `Q_{chi2_dof}(x)`.
pub fn chi2_survival(d: ChiSquare, x: f64) -> Result<f64, NumericsError> {
    d.survival(x)
}

pub fn chi2_inverse_survival(d: ChiSquare, p: f64) -> Result<f64, NumericsError> {
    d.inverse_survival(p)
}

fn check_x(x: f64) -> Result<(), NumericsError> {
    if x.is_nan() || x < 0.0 {
        return Err(NumericsError::Domain(format!(
            "chi-square argument must be >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Initial guess for the upper quantile.
fn wilson_hilferty(dof: f64, p: f64) -> f64 {
    let z = normal_quantile(1.0 - p);
    let h = 2.0 / (9.0 * dof);
    let t = 1.0 - h + z * h.sqrt();
    (dof * t * t * t).max(0.0)
}

/// Standard normal quantile (Acklam's rational approximation, ~1e-9 relative).
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Natural log of the gamma function for `x > 0`: upward recurrence to
/// `x >= 15`, then Stirling's series.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut z = x;
    let mut prod = 1.0;
    while z < 15.0 {
        prod *= z;
        z += 1.0;
    }
    let zi = 1.0 / z;
    let zi2 = zi * zi;
    let series = zi
        * (1.0 / 12.0
            + zi2 * (-1.0 / 360.0 + zi2 * (1.0 / 1260.0 + zi2 * (-1.0 / 1680.0 + zi2 * (1.0 / 1188.0)))));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - prod.ln()
}

/// Regularized incomplete gamma `(P(a, x), Q(a, x))`.
fn regularized_gamma(a: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series for P.
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (sum * log_prefix.exp()).min(1.0);
        (p, 1.0 - p)
    } else {
        // Modified Lentz continued fraction for Q.
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (h * log_prefix.exp()).min(1.0);
        (1.0 - q, q)
    }
}
