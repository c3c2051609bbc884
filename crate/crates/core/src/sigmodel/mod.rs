//! Received-signal model.
//!
//! Under H0 the receiver sees `y_k = w_k`; under H1 it sees
//! `y_k = sqrt(c) H s_k + w_k`, where `w_k ~ CN(0, diag(sigma2))`, `H` has
//! i.i.d. `CN(0, 1)` entries, the sources emit real BPSK symbols with power
//! `gamma_i`, and `c` normalises the realised average SNR exactly.
//!
//! Draw order inside one block is fixed: noise variances, channel, symbols
//! (H1 only), then noise samples with the time index outermost.

mod iq;
mod stream;

pub use iq::{read_iq, read_iq_file, write_iq, write_iq_file, IqError, IQ_HEADER_LEN, IQ_MAGIC, IQ_VERSION};
pub use stream::{substream, Purpose, SimRng, RNG_ALGORITHM};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::numerics::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("channel carries no signal power (tr(H Rs H^H) = 0)")]
    DegenerateChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

impl FromStr for Hypothesis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "h0" | "0" => Ok(Hypothesis::H0),
            "h1" | "1" => Ok(Hypothesis::H1),
            other => Err(format!("unknown hypothesis '{other}' (expected h0 or h1)")),
        }
    }
}

/// Full generative configuration for one detection period.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Receive antennas (M).
    pub antennas: usize,
    /// Samples per detection period (K).
    pub samples: usize,
    /// Primary users (q).
    pub sources: usize,
    /// Noise powers are drawn uniformly in `[-alpha_db, alpha_db]` dB.
    pub alpha_db: f64,
    /// Per-source power in dB, one entry per source.
    pub gamma_db: Vec<f64>,
    /// Target average SNR in dB.
    pub snr_db: f64,
    pub hypothesis: Hypothesis,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidScenario(msg));
        if self.antennas == 0 {
            return bad("antenna count M must be >= 1".into());
        }
        if self.antennas > u16::MAX as usize {
            return bad(format!("antenna count M = {} is too large", self.antennas));
        }
        if self.samples == 0 {
            return bad("sample count K must be >= 1".into());
        }
        if self.sources == 0 {
            return bad("source count q must be >= 1".into());
        }
        if self.gamma_db.len() != self.sources {
            return bad(format!(
                "gamma_db has {} entries but q = {}",
                self.gamma_db.len(),
                self.sources
            ));
        }
        if !(self.alpha_db >= 0.0) || !self.alpha_db.is_finite() {
            return bad(format!("alpha_db must be finite and >= 0, got {}", self.alpha_db));
        }
        if self.gamma_db.iter().any(|g| !g.is_finite()) || !self.snr_db.is_finite() {
            return bad("gamma_db and snr_db must be finite".into());
        }
        Ok(())
    }

    /// Source powers in linear scale.
    pub fn gamma_linear(&self) -> Vec<f64> {
        self.gamma_db.iter().map(|g| db_to_linear(*g)).collect()
    }

    pub fn with_hypothesis(&self, hypothesis: Hypothesis) -> Self {
        Self {
            hypothesis,
            ..self.clone()
        }
    }

    /// The stream used by stand-alone generation for this scenario's seed.
    pub fn rng(&self) -> SimRng {
        substream(self.seed, Purpose::Single, 0)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Real BPSK symbols, `sources × samples`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSymbols {
    sources: usize,
    samples: usize,
    values: Vec<f64>,
}

impl SourceSymbols {
    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    #[inline]
    pub fn get(&self, source: usize, k: usize) -> f64 {
        self.values[source * self.samples + k]
    }

    pub fn row(&self, source: usize) -> &[f64] {
        &self.values[source * self.samples..(source + 1) * self.samples]
    }
}

/// Per-trial draws that stay fixed within a detection period.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub noise_var: Vec<f64>,
    pub channel: ComplexMatrix,
}

/// One detection period of received samples plus the draws behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    /// M×K, column k is `y_k`.
    pub samples: ComplexMatrix,
    pub noise_var: Vec<f64>,
    /// M×q; populated under H0 too.
    pub channel: ComplexMatrix,
    /// Power scale `c` applied to the signal term; 0 under H0.
    pub signal_scale: f64,
}

impl SampleBlock {
    pub fn antennas(&self) -> usize {
        self.samples.rows()
    }

    pub fn len(&self) -> usize {
        self.samples.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.cols() == 0
    }

    /// Realised average SNR in dB, `-inf` under H0.
    pub fn realized_snr_db(&self, gamma: &[f64]) -> f64 {
        if self.signal_scale == 0.0 {
            return f64::NEG_INFINITY;
        }
        let signal = self.signal_scale * channel_power(&self.channel, gamma);
        10.0 * (signal / self.noise_var.iter().sum::<f64>()).log10()
    }
}

/// Noise powers `10^(u/10)` with `u ~ U[-alpha_db, alpha_db]`.
pub fn draw_noise_variances<R: Rng + ?Sized>(antennas: usize, alpha_db: f64, rng: &mut R) -> Vec<f64> {
    (0..antennas)
        .map(|_| {
            let u = alpha_db * (2.0 * rng.random::<f64>() - 1.0);
            db_to_linear(u)
        })
        .collect()
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// M×q channel with i.i.d. `CN(0, 1)` entries, drawn row-major.
pub fn draw_channel<R: Rng + ?Sized>(antennas: usize, sources: usize, rng: &mut R) -> Result<ComplexMatrix, ModelError> {
    if antennas == 0 || sources == 0 {
        return Err(ModelError::Dimension(format!(
            "channel needs M >= 1 and q >= 1, got {antennas}x{sources}"
        )));
    }
    let data = (0..antennas * sources).map(|_| cn01(rng)).collect();
    Ok(ComplexMatrix::from_row_major(antennas, sources, data).expect("gaussian draws are finite"))
}

/// Equiprobable `±sqrt(gamma_i)` symbols, independent across sources and time.
pub fn draw_bpsk<R: Rng + ?Sized>(
    sources: usize,
    samples: usize,
    gamma_db: &[f64],
    rng: &mut R,
) -> Result<SourceSymbols, ModelError> {
    if gamma_db.len() != sources {
        return Err(ModelError::Dimension(format!(
            "gamma_db has {} entries, expected {sources}",
            gamma_db.len()
        )));
    }
    let mut values = Vec::with_capacity(sources * samples);
    for g in gamma_db {
        let amp = db_to_linear(*g).sqrt();
        values.extend((0..samples).map(|_| if rng.random::<bool>() { amp } else { -amp }));
    }
    Ok(SourceSymbols {
        sources,
        samples,
        values,
    })
}

/// `tr(H diag(gamma) H^H)`.
fn channel_power(channel: &ComplexMatrix, gamma: &[f64]) -> f64 {
    (0..channel.rows())
        .map(|m| {
            channel
                .row(m)
                .iter()
                .zip(gamma)
                .map(|(h, g)| g * h.norm_sqr())
                .sum::<f64>()
        })
        .sum()
}

/// Scale `c` such that `tr(c H diag(gamma) H^H) / sum(sigma2)` equals the
/// target SNR exactly.
pub fn signal_scale(channel: &ComplexMatrix, gamma: &[f64], noise_var: &[f64], snr_db: f64) -> Result<f64, ModelError> {
    if gamma.len() != channel.cols() || noise_var.len() != channel.rows() {
        return Err(ModelError::Dimension("channel, gamma and noise sizes disagree".into()));
    }
    let power = channel_power(channel, gamma);
    if !(power > 0.0) {
        return Err(ModelError::DegenerateChannel);
    }
    Ok(db_to_linear(snr_db) * noise_var.iter().sum::<f64>() / power)
}

/// Noise variances then channel, the part of a trial shared between
/// paired H0/H1 blocks.
pub fn draw_realization<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Realization, ModelError> {
    let noise_var = draw_noise_variances(scenario.antennas, scenario.alpha_db, rng);
    let channel = draw_channel(scenario.antennas, scenario.sources, rng)?;
    Ok(Realization { noise_var, channel })
}

/// Unscaled signal `H s_k` and noise `w_k` of one block, kept separate so
/// the same draw can be recombined at several SNRs.
#[derive(Debug, Clone)]
pub struct BlockParts {
    pub realization: Realization,
    /// `H s_k` as M×K, `None` under H0.
    pub signal: Option<ComplexMatrix>,
    pub noise: ComplexMatrix,
}

impl BlockParts {
    /// `y = sqrt(scale) * signal + noise`.
    pub fn compose(&self, scale: f64) -> SampleBlock {
        let samples = match &self.signal {
            Some(sig) if scale > 0.0 => {
                let a = scale.sqrt();
                let data = sig
                    .as_slice()
                    .iter()
                    .zip(self.noise.as_slice())
                    .map(|(s, w)| s * a + w)
                    .collect();
                ComplexMatrix::from_row_major(self.noise.rows(), self.noise.cols(), data)
                    .expect("finite by construction")
            }
            _ => self.noise.clone(),
        };
        SampleBlock {
            samples,
            noise_var: self.realization.noise_var.clone(),
            channel: self.realization.channel.clone(),
            signal_scale: if self.signal.is_some() { scale } else { 0.0 },
        }
    }

    /// Composes at the scale that realises `snr_db` exactly (0 under H0).
    pub fn at_snr(&self, gamma: &[f64], snr_db: f64) -> Result<SampleBlock, ModelError> {
        let scale = match self.signal {
            Some(_) => signal_scale(&self.realization.channel, gamma, &self.realization.noise_var, snr_db)?,
            None => 0.0,
        };
        Ok(self.compose(scale))
    }
}

/// Draws symbols (H1 only) and noise for an existing realization.
pub fn draw_parts<R: Rng + ?Sized>(
    scenario: &Scenario,
    realization: Realization,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<BlockParts, ModelError> {
    let m = scenario.antennas;
    let k = scenario.samples;
    let signal = match hypothesis {
        Hypothesis::H0 => None,
        Hypothesis::H1 => {
            let symbols = draw_bpsk(scenario.sources, k, &scenario.gamma_db, rng)?;
            let h = &realization.channel;
            let mut sig = ComplexMatrix::zeros(m, k);
            for row in 0..m {
                for (i, hi) in h.row(row).iter().enumerate() {
                    let s = symbols.row(i);
                    for t in 0..k {
                        sig[(row, t)] += hi * s[t];
                    }
                }
            }
            Some(sig)
        }
    };
    let std: Vec<f64> = realization.noise_var.iter().map(|v| v.sqrt()).collect();
    let mut noise = ComplexMatrix::zeros(m, k);
    for t in 0..k {
        for (row, sd) in std.iter().enumerate() {
            noise[(row, t)] = cn01(rng) * *sd;
        }
    }
    Ok(BlockParts {
        realization,
        signal,
        noise,
    })
}

/// One received block for `scenario` drawn from `rng`.
pub fn generate_block<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<SampleBlock, ModelError> {
    scenario.validate()?;
    let realization = draw_realization(scenario, rng)?;
    let parts = draw_parts(scenario, realization, scenario.hypothesis, rng)?;
    parts.at_snr(&scenario.gamma_linear(), scenario.snr_db)
}
