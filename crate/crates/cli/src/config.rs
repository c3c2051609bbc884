//! Run configuration files.
//!
//! Grammar: `[section]` headers, `key = value` lines, `#` comments, lists
//! comma-separated. Unknown sections and keys are rejected.
//!
//! ```text
//! [scenario]
//! m = 4
//! k = 100
//! q = 1
//! alpha_db = 1
//! gamma_db = 0
//! snr_db = -9
//! hypothesis = h1
//!
//! [experiment]
//! kind = pd_vs_snr          # pd_vs_snr | roc | null
//! grid = -20, -19, -18
//! pf = 0.05
//! detectors = ncc, cav, hdm, lmpit, nchdm
//! ncc_threshold = theoretical   # theoretical | empirical
//! n_trials = 100000
//! n_cal_trials = 100000
//! seed = 1
//!
//! [run]
//! out = fig1a.csv
//! workers = 0
//! rng = chacha8
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncc_core::harness::{DetectorSpec, ExperimentSpec, SweepVar, ThresholdMode};
use ncc_core::sigmodel::{Hypothesis, Scenario, RNG_ALGORITHM};
use ncc_core::DetectorKind;

const SECTIONS: &[(&str, &[&str])] = &[
    ("scenario", &["m", "k", "q", "alpha_db", "gamma_db", "snr_db", "hypothesis"]),
    (
        "experiment",
        &["kind", "grid", "pf", "detectors", "ncc_threshold", "n_trials", "n_cal_trials", "seed"],
    ),
    ("run", &["out", "workers", "rng"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line, 0 when the problem is not tied to a line.
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        if let Some(key) = &self.key {
            write!(f, "key '{key}': ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PdVsSnr,
    Roc,
    Null,
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pd_vs_snr" => Ok(Self::PdVsSnr),
            "roc" => Ok(Self::Roc),
            "null" => Ok(Self::Null),
            _ => Err(format!("unknown experiment kind '{s}' (expected pd_vs_snr, roc or null)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub antennas: usize,
    pub samples: usize,
    pub sources: usize,
    pub alpha_db: f64,
    pub gamma_db: Vec<f64>,
    pub snr_db: f64,
    pub hypothesis: Option<Hypothesis>,
    pub kind: ExperimentKind,
    pub grid: Vec<f64>,
    pub pf: f64,
    pub detectors: Vec<DetectorSpec>,
    pub n_trials: usize,
    pub n_cal_trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub rng: String,
}

struct Entry {
    line: usize,
    value: String,
}

struct Raw {
    entries: HashMap<(String, String), Entry>,
}

impl Raw {
    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn parsed<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<(T, usize)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|err| ConfigError {
                    line: e.line,
                    key: Some(key.into()),
                    message: format!("invalid value '{}': {err}", e.value),
                }),
        }
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<(Vec<T>, usize)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => {
                let items = e
                    .value
                    .split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>().map_err(|err| ConfigError {
                            line: e.line,
                            key: Some(key.into()),
                            message: format!("invalid list item '{s}': {err}"),
                        })
                    })
                    .collect::<Result<Vec<T>, _>>()?;
                Ok(Some((items, e.line)))
            }
        }
    }
}

fn tokenize(text: &str) -> Result<Raw, ConfigError> {
    let mut entries = HashMap::new();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError {
                line,
                key: None,
                message: format!("malformed section header '{content}'"),
            })?;
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError {
                    line,
                    key: None,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
            line,
            key: None,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let sec = section.as_deref().ok_or_else(|| ConfigError {
            line,
            key: Some(key.into()),
            message: "key outside of any [section]".into(),
        })?;
        let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError {
                line,
                key: Some(key.into()),
                message: format!("unknown key in [{sec}]"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                line,
                key: Some(key.into()),
                message: "empty value".into(),
            });
        }
        let slot = (sec.to_string(), key.to_string());
        if entries.contains_key(&slot) {
            return Err(ConfigError {
                line,
                key: Some(key.into()),
                message: format!("duplicate key in [{sec}]"),
            });
        }
        entries.insert(
            slot,
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(Raw { entries })
}

fn required<T>(v: Option<(T, usize)>, key: &str, section: &str) -> Result<(T, usize), ConfigError> {
    v.ok_or_else(|| ConfigError {
        line: 0,
        key: Some(key.into()),
        message: format!("missing required key in [{section}]"),
    })
}

fn invalid(line: usize, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: Some(key.into()),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = tokenize(text)?;

        let (antennas, m_line) = required(raw.parsed::<usize>("scenario", "m")?, "m", "scenario")?;
        if antennas == 0 || antennas > 16 {
            return Err(invalid(m_line, "m", "antenna count must be in 1..=16"));
        }
        let (samples, k_line) = required(raw.parsed::<usize>("scenario", "k")?, "k", "scenario")?;
        if samples == 0 || samples > u32::MAX as usize {
            return Err(invalid(k_line, "k", "sample count must be >= 1"));
        }
        let (sources, q_line) = raw.parsed::<usize>("scenario", "q")?.unwrap_or((1, 0));
        if sources == 0 {
            return Err(invalid(q_line, "q", "source count must be >= 1"));
        }
        let (alpha_db, a_line) = raw.parsed::<f64>("scenario", "alpha_db")?.unwrap_or((1.0, 0));
        if !(alpha_db >= 0.0 && alpha_db.is_finite()) {
            return Err(invalid(a_line, "alpha_db", "must be finite and >= 0"));
        }
        let gamma_db = match raw.list::<f64>("scenario", "gamma_db")? {
            Some((g, line)) => {
                if g.len() != sources {
                    return Err(invalid(line, "gamma_db", format!("has {} entries but q = {sources}", g.len())));
                }
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(line, "gamma_db", "entries must be finite"));
                }
                g
            }
            None => vec![0.0; sources],
        };
        let (snr_db, s_line) = raw.parsed::<f64>("scenario", "snr_db")?.unwrap_or((0.0, 0));
        if !snr_db.is_finite() {
            return Err(invalid(s_line, "snr_db", "must be finite"));
        }
        let hypothesis = raw.parsed::<Hypothesis>("scenario", "hypothesis")?.map(|(h, _)| h);

        let (kind, _) = raw
            .parsed::<ExperimentKind>("experiment", "kind")?
            .unwrap_or((ExperimentKind::PdVsSnr, 0));
        let (pf, pf_line) = raw.parsed::<f64>("experiment", "pf")?.unwrap_or((0.05, 0));
        if !(pf > 0.0 && pf < 1.0) {
            return Err(invalid(pf_line, "pf", "must lie in (0, 1)"));
        }
        let grid = match raw.list::<f64>("experiment", "grid")? {
            Some((g, line)) => {
                if g.is_empty() {
                    return Err(invalid(line, "grid", "must not be empty"));
                }
                let inc = g.windows(2).all(|w| w[1] > w[0]);
                let dec = g.windows(2).all(|w| w[1] < w[0]);
                if !(inc || dec) || g.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(line, "grid", "must be strictly monotone and finite"));
                }
                if kind == ExperimentKind::Roc && g.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                    return Err(invalid(line, "grid", "ROC false-alarm targets must lie in (0, 1)"));
                }
                g
            }
            None if kind == ExperimentKind::Null => Vec::new(),
            None => {
                return Err(ConfigError {
                    line: 0,
                    key: Some("grid".into()),
                    message: "missing required key in [experiment]".into(),
                })
            }
        };
        let (ncc_mode, mode_line) = raw
            .take("experiment", "ncc_threshold")
            .map(|e| (e.value, e.line))
            .unwrap_or(("theoretical".into(), 0));
        let ncc_mode = match ncc_mode.as_str() {
            "theoretical" => ThresholdMode::Theoretical,
            "empirical" => ThresholdMode::Empirical,
            other => {
                return Err(invalid(
                    mode_line,
                    "ncc_threshold",
                    format!("expected theoretical or empirical, got '{other}'"),
                ))
            }
        };
        let detectors = match raw.list::<DetectorKind>("experiment", "detectors")? {
            Some((d, line)) => {
                if d.is_empty() {
                    return Err(invalid(line, "detectors", "must not be empty"));
                }
                let mut seen = Vec::new();
                for k in &d {
                    if seen.contains(k) {
                        return Err(invalid(line, "detectors", format!("'{k}' listed twice")));
                    }
                    seen.push(*k);
                }
                d
            }
            None => DetectorKind::ALL.to_vec(),
        };
        let detectors = detectors
            .into_iter()
            .map(|kind| match kind {
                DetectorKind::Ncc => DetectorSpec { kind, mode: ncc_mode },
                _ => DetectorSpec::default_for(kind),
            })
            .collect::<Vec<_>>();
        let (n_trials, n_line) = raw.parsed::<usize>("experiment", "n_trials")?.unwrap_or((100_000, 0));
        if n_trials == 0 {
            return Err(invalid(n_line, "n_trials", "must be >= 1"));
        }
        if kind == ExperimentKind::Null && n_trials < 10_000 {
            return Err(invalid(n_line, "n_trials", "null-distribution check needs >= 10000 trials"));
        }
        let min_pf = match kind {
            ExperimentKind::Roc => grid.iter().cloned().fold(f64::INFINITY, f64::min),
            _ => pf,
        };
        let min_cal = (100.0 / min_pf - 1e-9).ceil() as usize;
        let needs_cal = detectors.iter().any(|d| d.mode == ThresholdMode::Empirical) && kind != ExperimentKind::Null;
        let n_cal_trials = match raw.parsed::<usize>("experiment", "n_cal_trials")? {
            Some((n, line)) => {
                if needs_cal && n < min_cal {
                    return Err(invalid(
                        line,
                        "n_cal_trials",
                        format!("need at least {min_cal} calibration trials for Pf = {min_pf}"),
                    ));
                }
                n
            }
            None => n_trials.max(min_cal),
        };
        let (seed, _) = raw.parsed::<u64>("experiment", "seed")?.unwrap_or((0, 0));

        let out = raw.take("run", "out").map(|e| PathBuf::from(e.value));
        let (workers, _) = raw.parsed::<usize>("run", "workers")?.unwrap_or((0, 0));
        let rng = match raw.take("run", "rng") {
            Some(e) if e.value != RNG_ALGORITHM => {
                return Err(invalid(e.line, "rng", format!("only '{RNG_ALGORITHM}' is supported")))
            }
            _ => RNG_ALGORITHM.to_string(),
        };
        debug_assert!(raw.entries.is_empty());

        Ok(Self {
            antennas,
            samples,
            sources,
            alpha_db,
            gamma_db,
            snr_db,
            hypothesis,
            kind,
            grid,
            pf,
            detectors,
            n_trials,
            n_cal_trials,
            seed,
            out,
            workers,
            rng,
        })
    }

    pub fn load(path: &Path) -> Result<Self, crate::CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| crate::CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn scenario(&self, hypothesis: Hypothesis) -> Scenario {
        Scenario {
            antennas: self.antennas,
            samples: self.samples,
            sources: self.sources,
            alpha_db: self.alpha_db,
            gamma_db: self.gamma_db.clone(),
            snr_db: self.snr_db,
            hypothesis,
            seed: self.seed,
        }
    }

    pub fn experiment_spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            base: self.scenario(Hypothesis::H1),
            sweep: match self.kind {
                ExperimentKind::Roc => SweepVar::Pf,
                _ => SweepVar::SnrDb,
            },
            grid: self.grid.clone(),
            pf: self.pf,
            detectors: self.detectors.clone(),
            n_trials: self.n_trials,
            n_cal_trials: self.n_cal_trials,
            master_seed: self.seed,
        }
    }
}
