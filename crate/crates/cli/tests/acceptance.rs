//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncc_cli::csv::{parse_curve_csv, CurveRow};
use ncc_cli::{experiment_csv, RunConfig};
use ncc_core::detectors::{ncc_pipeline_counted, ncc_statistic, statistic};
use ncc_core::estimation::sample_covariances;
use ncc_core::harness::{DetectorSpec, Harness};
use ncc_core::numerics::{chi2_inverse_survival, ChiSquare, ComplexMatrix, MulCounter};
use ncc_core::DetectorKind;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn load(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn curve(cfg: &RunConfig) -> Vec<CurveRow> {
    parse_curve_csv(&experiment_csv(cfg, 0).expect("experiment")).expect("csv")
}

fn rows_for<'a>(rows: &'a [CurveRow], detector: &str) -> Vec<&'a CurveRow> {
    rows.iter().filter(|r| r.detector == detector).collect()
}

fn random_block(rng: &mut ChaCha8Rng, m: usize, k: usize) -> ComplexMatrix {
    let data = (0..m * k)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    ComplexMatrix::from_row_major(m, k, data).unwrap()
}

// Brute-force oracles: full double loops, no symmetry shortcuts.

fn naive_covariances(y: &ComplexMatrix) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let (m, k) = (y.rows(), y.cols());
    let mut r = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    let mut c = r.clone();
    for i in 0..m {
        for j in 0..m {
            for t in 0..k {
                r[i][j] += y[(i, t)] * y[(j, t)].conj();
                c[i][j] += y[(i, t)] * y[(j, t)];
            }
            r[i][j] /= k as f64;
            c[i][j] /= k as f64;
        }
    }
    (r, c)
}

fn naive_ncc(y: &ComplexMatrix) -> f64 {
    let (r, c) = naive_covariances(y);
    let m = r.len();
    let mut t = 0.0;
    for i in 0..m {
        t += c[i][i].norm_sqr() / (2.0 * r[i][i].re * r[i][i].re);
        for j in i + 1..m {
            t += r[i][j].norm_sqr() / (r[i][i].re * r[j][j].re);
            t += c[i][j].norm_sqr() / (r[i][i].re * r[j][j].re);
        }
    }
    t
}

fn c1_null_distribution() -> Outcome {
    let start = Instant::now();
    let s = Harness::new(0)
        .unwrap()
        .run_null_distribution_check(4, 1000, 1.0, 100_000, 11)
        .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (s.mean - 32.0).abs() <= 0.5 && (57.6..=70.4).contains(&s.variance);
    outcome(
        pass,
        format!(
            "M=4 K=1000 1e5 trials: mean={:.4} (32±0.5) variance={:.3} ([57.6,70.4]) ks={:.4} in {secs:.1}s",
            s.mean, s.variance, s.ks_distance
        ),
    )
}

fn c2_pf_accuracy() -> Outcome {
    let harness = Harness::new(0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, k, tol) in [(4, 100, 0.30), (8, 100, 0.30), (4, 1000, 0.10), (8, 1000, 0.10)] {
        let stats = harness.null_statistics(m, k, 1.0, 100_000, 20 + m as u64 + k as u64).unwrap();
        for pf in [0.01, 0.05, 0.1] {
            // stats hold 2K·T, so compare directly with the chi-square quantile.
            let thr = chi2_inverse_survival(ChiSquare::new(2 * (m * m) as u32).unwrap(), pf).unwrap();
            let hits = stats.iter().filter(|s| **s > thr).count();
            let pf_hat = hits as f64 / stats.len() as f64;
            let rel = (pf_hat - pf) / pf;
            pass &= rel.abs() <= tol;
            parts.push(format!("M{m}K{k}@{pf}:{rel:+.3}"));
        }
    }
    outcome(pass, format!("relative errors (±30% K=100, ±10% K=1000): {}", parts.join(" ")))
}

fn c3_fig1b_ordering() -> Outcome {
    let mut cfg = load("fig1b.cfg");
    cfg.grid = vec![-11.0];
    cfg.n_trials = 10_000;
    cfg.n_cal_trials = 10_000;
    let rows = curve(&cfg);
    let pd = |d: &str| rows_for(&rows, d)[0].pd_hat;
    let ncc = pd("ncc");
    let mut pass = true;
    let mut parts = vec![format!("ncc={ncc:.4}")];
    for d in ["hdm", "cav", "lmpit"] {
        pass &= ncc - pd(d) >= 0.05;
        parts.push(format!("{d}={:.4}", pd(d)));
    }
    parts.push(format!("nchdm={:.4} (reported only)", pd("nchdm")));
    outcome(pass, format!("fig1b -11 dB 1e4 trials, margin >= 0.05: {}", parts.join(" ")))
}

fn c4_monotone_pd() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fig1a.cfg", "fig1b.cfg"] {
        let mut cfg = load(name);
        cfg.n_trials = 10_000;
        cfg.detectors = vec![DetectorSpec::default_for(DetectorKind::Ncc)];
        let rows = curve(&cfg);
        let ncc = rows_for(&rows, "ncc");
        let mut worst = f64::INFINITY;
        for w in ncc.windows(2) {
            let slack = 2.0 * w[0].stderr_pd.max(w[1].stderr_pd);
            let margin = w[1].pd_hat - w[0].pd_hat + slack;
            worst = worst.min(margin);
            pass &= margin >= 0.0;
        }
        parts.push(format!(
            "{name}: {} points, pd {:.4}->{:.4}, min slack margin {worst:.4}",
            ncc.len(),
            ncc.first().unwrap().pd_hat,
            ncc.last().unwrap().pd_hat
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c5_roc() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fig2a.cfg", "fig2b.cfg"] {
        let mut cfg = load(name);
        cfg.n_trials = 10_000;
        cfg.n_cal_trials = 10_000;
        let rows = curve(&cfg);
        for d in DetectorKind::ALL {
            let pts = rows_for(&rows, d.name());
            let monotone = pts.windows(2).all(|w| w[1].pd_hat >= w[0].pd_hat);
            let top = pts.iter().find(|r| r.sweep_value == 0.99).expect("pf 0.99 on grid").pd_hat;
            pass &= monotone && top >= 0.99;
            parts.push(format!("{}/{}:{}{:.4}", &name[..5], d.name(), if monotone { "" } else { "NONMONO " }, top));
        }
    }
    outcome(pass, format!("Pd at Pf=0.99 (>= 0.99, monotone in Pf): {}", parts.join(" ")))
}

fn c6_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shapes: Vec<(usize, usize)> = [1, 2, 4, 8]
        .iter()
        .flat_map(|m| [1, 10, 100].iter().map(move |k| (*m, *k)))
        .collect();
    let (mut worst_cov, mut worst_stat) = (0.0f64, 0.0f64);
    for b in 0..1000 {
        let (m, k) = shapes[b % shapes.len()];
        let y = random_block(&mut rng, m, k);
        let cov = sample_covariances(&y).unwrap();
        let (r, c) = naive_covariances(&y);
        for i in 0..m {
            for j in 0..m {
                worst_cov = worst_cov.max((cov.r[(i, j)] - r[i][j]).norm()).max((cov.c[(i, j)] - c[i][j]).norm());
            }
        }
        worst_stat = worst_stat.max((ncc_statistic(&cov).unwrap() - naive_ncc(&y)).abs());
    }
    outcome(
        worst_cov <= 1e-12 && worst_stat <= 1e-12,
        format!("1e3 blocks, max abs error: covariances {worst_cov:.2e}, statistic {worst_stat:.2e} (<= 1e-12)"),
    )
}

fn c7_scale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kinds = [DetectorKind::Ncc, DetectorKind::Hdm, DetectorKind::Lmpit, DetectorKind::NcHdm];
    let shapes = [(2, 10), (2, 100), (4, 10), (4, 100), (8, 20), (8, 100)];
    let mut worst = [0.0f64; 4];
    for b in 0..1000 {
        let (m, k) = shapes[b % shapes.len()];
        let y = random_block(&mut rng, m, k);
        let gains: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random::<f64>() * 2.0 - 1.0)).collect();
        let mut z = y.clone();
        for i in 0..m {
            for t in 0..k {
                z[(i, t)] *= gains[i];
            }
        }
        let (cy, cz) = (sample_covariances(&y).unwrap(), sample_covariances(&z).unwrap());
        for (slot, kind) in kinds.iter().enumerate() {
            let a = statistic(*kind, &cy).unwrap().value;
            let b = statistic(*kind, &cz).unwrap().value;
            worst[slot] = worst[slot].max((a - b).abs() / a.abs().max(b.abs()));
        }
    }

    // Two correlated antennas; boosting the weak one changes CAV.
    let y = ComplexMatrix::from_row_major(
        2,
        4,
        [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.5), (0.5, -1.0), (0.2, 0.1), (0.1, 0.3), (-0.2, 0.0), (0.1, -0.2)]
            .iter()
            .map(|(re, im)| Complex64::new(*re, *im))
            .collect(),
    )
    .unwrap();
    let mut z = y.clone();
    for t in 0..4 {
        z[(1, t)] *= 10.0;
    }
    let cav_y = statistic(DetectorKind::Cav, &sample_covariances(&y).unwrap()).unwrap().value;
    let cav_z = statistic(DetectorKind::Cav, &sample_covariances(&z).unwrap()).unwrap().value;
    let cav_changes = (cav_y - cav_z).abs() > 1e-3 * cav_y.abs();

    let pass = worst.iter().all(|w| *w <= 1e-10) && cav_changes;
    outcome(
        pass,
        format!(
            "max rel change ncc={:.1e} hdm={:.1e} lmpit={:.1e} nchdm={:.1e} (<= 1e-10); crafted cav {cav_y:.4} -> {cav_z:.4}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c8_operation_count() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, k) in [(4u64, 100u64), (8, 200)] {
        let y = random_block(&mut rng, m as usize, k as usize);
        let mut ops = MulCounter::default();
        ncc_pipeline_counted(&y, &mut ops).unwrap();
        let expected = m * m * (k + 4) + m * (k + 2);
        pass &= ops.count == expected;
        parts.push(format!("(M={m},K={k}) counted {} expected {expected}", ops.count));
    }
    outcome(pass, parts.join("; "))
}

fn c9_determinism() -> Outcome {
    let mut cfg = load("fig1a.cfg");
    cfg.n_trials = 1000;
    cfg.n_cal_trials = 2000;
    let a = experiment_csv(&cfg, 1).unwrap();
    let b = experiment_csv(&cfg, 1).unwrap();
    let c = experiment_csv(&cfg, 8).unwrap();
    outcome(
        a == b && a == c,
        format!("fig1a 1e3 trials: repeat identical={}, workers 1 vs 8 identical={} ({} bytes)", a == b, a == c, a.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("null distribution of 2K·T", c1_null_distribution),
        ("Pf accuracy of theoretical threshold", c2_pf_accuracy),
        ("NCC beats HDM/CAV/LMPIT (fig1b, -11 dB)", c3_fig1b_ordering),
        ("NCC Pd monotone in SNR (fig1a, fig1b)", c4_monotone_pd),
        ("ROC monotone, Pd >= 0.99 at Pf=0.99 (fig2a, fig2b)", c5_roc),
        ("oracle equivalence", c6_oracle_equivalence),
        ("scale invariance", c7_scale_invariance),
        ("multiplication count", c8_operation_count),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += !o.pass as usize;
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
