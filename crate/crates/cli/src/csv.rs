//! CSV rows. Floats are printed with 9 significant digits, `%g` style.

use std::fmt::Write;

use ncc_core::detectors::Verdict;
use ncc_core::harness::NullSummary;
use ncc_core::CurvePoint;

pub const CURVE_HEADER: &str = "detector,sweep_var,sweep_value,pf_target,pf_hat,pd_hat,stderr_pd,threshold,n_trials,seed";
pub const VERDICT_HEADER: &str = "detector,statistic,threshold,decision,M,K";
pub const NULL_HEADER: &str = "M,K,alpha_db,n_trials,seed,dof,mean,variance,ks_distance";

/// `x` with 9 significant digits, trailing zeros trimmed; scientific
/// notation outside `1e-5 <= |x| < 1e9`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.detector,
            p.sweep.name(),
            fmt_sig(p.sweep_value),
            fmt_sig(p.pf_target),
            fmt_sig(p.pf_hat),
            fmt_sig(p.pd_hat),
            fmt_sig(p.stderr_pd),
            fmt_sig(p.threshold),
            p.n_trials,
            p.seed
        )
        .unwrap();
    }
    out
}

pub fn verdict_row(v: &Verdict) -> String {
    format!(
        "{},{},{},{},{},{}",
        v.kind,
        fmt_sig(v.statistic),
        fmt_sig(v.threshold),
        v.decision,
        v.antennas,
        v.samples
    )
}

pub fn null_csv(s: &NullSummary, alpha_db: f64) -> String {
    format!(
        "{NULL_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        s.antennas,
        s.samples,
        fmt_sig(alpha_db),
        s.n_trials,
        s.seed,
        s.dof,
        fmt_sig(s.mean),
        fmt_sig(s.variance),
        fmt_sig(s.ks_distance)
    )
}

/// One parsed row of a curve CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub detector: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub pf_target: f64,
    pub pf_hat: f64,
    pub pd_hat: f64,
    pub stderr_pd: f64,
    pub threshold: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Parses a curve CSV produced by [`curve_csv`], checking the header.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CURVE_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(format!("row {}: expected 10 fields, got {}", i + 1, f.len()));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: '{s}': {e}", i + 1));
            Ok(CurveRow {
                detector: f[0].to_string(),
                sweep_var: f[1].to_string(),
                sweep_value: num(f[2])?,
                pf_target: num(f[3])?,
                pf_hat: num(f[4])?,
                pd_hat: num(f[5])?,
                stderr_pd: num(f[6])?,
                threshold: num(f[7])?,
                n_trials: f[8].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                seed: f[9].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
            })
        })
        .collect()
}
