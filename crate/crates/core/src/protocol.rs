//! Monte-Carlo rounds of the protocol, sifting, Shannon-limit error
//! correction accounting and Toeplitz privacy amplification.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::EffectiveLine;
use crate::encoding::{BobOutcome, EncodingConfig};
use crate::error::{Error, Result};
use crate::numerics::h2;
use crate::rate::{ConditionalProbabilities, KeyRateBreakdown};

/// Rounds handled by one parallel task.
const CHUNK_ROUNDS: u64 = 1 << 14;

/// One transmitted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSample {
    pub alice_bit: u8,
    /// Coherent amplitude of the tapped mode, `sqrt(r_E) α`.
    pub eve_amplitude: Complex64,
    /// Coherent amplitude reaching Bob's detector.
    pub bob_amplitude: Complex64,
    pub bob_outcome: BobOutcome,
    /// Photon count, or the measured quadrature for phase encoding.
    pub bob_reading: f64,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: Complex64, noise: f64) -> Complex64 {
    if noise <= 0.0 {
        return mean;
    }
    let s = (0.5 * noise).sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    mean + Complex64::new(s * x, s * y)
}

fn poisson_count<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> f64 {
    match Poisson::new(lambda) {
        Ok(p) => p.sample(rng),
        Err(_) => 0.0,
    }
}

/// Samples Alice's pulse for bit `a` through the tapped line and Bob's
/// measurement.
///
/// The amplitude after the first segment is drawn from the Glauber
/// P-function `CN(sqrt(G1 T1) γ_a, G1 - 1)`, the amplitude at Bob from
/// `CN(sqrt(G2 T2 (1 - r_E)) α, G2 - 1)`. Photon-number pulses carry a
/// uniformly random phase.
pub fn sample_round<R: Rng + ?Sized>(
    a: u8,
    enc: &EncodingConfig,
    line: &EffectiveLine,
    rng: &mut R,
) -> RoundSample {
    let amp = enc.amplitude(a);
    let gamma = match enc {
        EncodingConfig::PhotonNumber(_) => {
            Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU))
        }
        EncodingConfig::Phase(_) => Complex64::new(amp, 0.0),
    };
    let r = line.leak_fraction;
    let alpha = complex_gaussian(rng, gamma * line.pre_eve.eta().sqrt(), line.g1());
    let beta = complex_gaussian(
        rng,
        alpha * (line.post_eve.eta() * (1.0 - r)).sqrt(),
        line.g2(),
    );
    let bob_reading = match enc {
        EncodingConfig::PhotonNumber(_) => poisson_count(rng, beta.norm_sqr()),
        EncodingConfig::Phase(_) => {
            let z: f64 = rng.sample(StandardNormal);
            beta.re + 0.5 * z
        }
    };
    RoundSample {
        alice_bit: a,
        eve_amplitude: alpha * r.sqrt(),
        bob_amplitude: beta,
        bob_outcome: enc.decide(bob_reading),
        bob_reading,
    }
}

/// Generator for round `index`: the seed's key with the round as stream id.
pub fn round_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Aggregated outcome of `rounds` simulated pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub rounds: u64,
    pub sent: [u64; 2],
    /// `counts[a][b]` with `b = 2` for inconclusive.
    pub counts: [[u64; 3]; 2],
    pub conclusive: u64,
    pub qber: f64,
    pub reading_mean: [f64; 2],
    pub reading_variance: [f64; 2],
    /// Mean `|β|²` per bit.
    pub bob_intensity_mean: [f64; 2],
    /// Mean `r_E |α|²` per bit.
    pub eve_intensity_mean: [f64; 2],
    pub sifted_alice: Vec<bool>,
    pub sifted_bob: Vec<bool>,
}

impl MonteCarloReport {
    /// Empirical `p(b|a)`.
    pub fn empirical_probabilities(&self) -> ConditionalProbabilities {
        let mut p = [[0.0; 2]; 2];
        for a in 0..2 {
            if self.sent[a] > 0 {
                for b in 0..2 {
                    p[a][b] = self.counts[a][b] as f64 / self.sent[a] as f64;
                }
            }
        }
        ConditionalProbabilities::from_table(p)
    }

    /// Fraction of rounds kept after post-selection.
    pub fn p_conclusive(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.conclusive as f64 / self.rounds as f64
        }
    }
}

#[derive(Default)]
struct Tally {
    counts: [[u64; 3]; 2],
    reading: [f64; 2],
    reading_sq: [f64; 2],
    bob: [f64; 2],
    eve: [f64; 2],
    alice_bits: Vec<bool>,
    bob_bits: Vec<bool>,
}

impl Tally {
    fn push(&mut self, s: &RoundSample) {
        let a = s.alice_bit as usize;
        self.counts[a][s.bob_outcome.index()] += 1;
        self.reading[a] += s.bob_reading;
        self.reading_sq[a] += s.bob_reading * s.bob_reading;
        self.bob[a] += s.bob_amplitude.norm_sqr();
        self.eve[a] += s.eve_amplitude.norm_sqr();
        if let Some(b) = s.bob_outcome.bit() {
            self.alice_bits.push(a == 1);
            self.bob_bits.push(b == 1);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for a in 0..2 {
            for b in 0..3 {
                self.counts[a][b] += other.counts[a][b];
            }
            self.reading[a] += other.reading[a];
            self.reading_sq[a] += other.reading_sq[a];
            self.bob[a] += other.bob[a];
            self.eve[a] += other.eve[a];
        }
        self.alice_bits.extend(other.alice_bits);
        self.bob_bits.extend(other.bob_bits);
        self
    }
}

/// Runs `rounds` independent rounds with uniformly random bits.
///
/// Round `i` draws from [`round_rng`]`(seed, i)`, so the report does not
/// depend on the number of worker threads.
pub fn run_protocol(
    rounds: u64,
    enc: &EncodingConfig,
    line: &EffectiveLine,
    seed: u64,
) -> Result<MonteCarloReport> {
    if rounds == 0 {
        return Err(Error::Domain {
            what: "round count",
            value: 0.0,
        });
    }
    enc.validate()?;
    let chunks = rounds.div_ceil(CHUNK_ROUNDS);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            let end = ((c + 1) * CHUNK_ROUNDS).min(rounds);
            for i in c * CHUNK_ROUNDS..end {
                let mut rng = round_rng(seed, i);
                let a = rng.random_range(0..2u8);
                t.push(&sample_round(a, enc, line, &mut rng));
            }
            t
        })
        .collect();
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);

    let sent = [0, 1].map(|a| t.counts[a].iter().sum::<u64>());
    let per = |x: [f64; 2]| [0, 1].map(|a| if sent[a] > 0 { x[a] / sent[a] as f64 } else { 0.0 });
    let reading_mean = per(t.reading);
    let second = per(t.reading_sq);
    let reading_variance = [0, 1].map(|a| {
        let n = sent[a] as f64;
        if n > 1.0 {
            (second[a] - reading_mean[a] * reading_mean[a]) * n / (n - 1.0)
        } else {
            0.0
        }
    });
    let conclusive = t.alice_bits.len() as u64;
    let errors = t.counts[0][1] + t.counts[1][0];
    Ok(MonteCarloReport {
        rounds,
        sent,
        counts: t.counts,
        conclusive,
        qber: if conclusive > 0 {
            errors as f64 / conclusive as f64
        } else {
            0.0
        },
        reading_mean,
        reading_variance,
        bob_intensity_mean: per(t.bob),
        eve_intensity_mean: per(t.eve),
        sifted_alice: t.alice_bits,
        sifted_bob: t.bob_bits,
    })
}

/// Syndrome bits disclosed at the Shannon limit, `conclusive · h2(qber)`.
pub fn shannon_syndrome_length(report: &MonteCarloReport) -> f64 {
    report.conclusive as f64 * h2(report.qber)
}

/// Public seed of a Toeplitz hash with `raw_len` rows and `out_len` columns.
///
/// Entry `(i, j)` is `first_column[i - j]` below the diagonal and
/// `first_row[j - i]` above it; output bit `j` is column `j` dotted with the
/// raw key over GF(2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzSeed {
    pub first_column: Vec<bool>,
    pub first_row: Vec<bool>,
}

impl ToeplitzSeed {
    pub fn new(first_column: Vec<bool>, first_row: Vec<bool>) -> Result<Self> {
        if let (Some(c), Some(r)) = (first_column.first(), first_row.first()) {
            if c != r {
                return Err(Error::DimensionMismatch(
                    "first column and first row disagree on the corner entry".into(),
                ));
            }
        }
        Ok(Self {
            first_column,
            first_row,
        })
    }

    /// Uniformly random seed.
    pub fn random<R: Rng + ?Sized>(raw_len: usize, out_len: usize, rng: &mut R) -> Self {
        let first_column: Vec<bool> = (0..raw_len).map(|_| rng.random()).collect();
        let mut first_row: Vec<bool> = (0..out_len).map(|_| rng.random()).collect();
        if let (Some(c), Some(r)) = (first_column.first(), first_row.first_mut()) {
            *r = *c;
        }
        Self {
            first_column,
            first_row,
        }
    }

    pub fn raw_len(&self) -> usize {
        self.first_column.len()
    }

    pub fn out_len(&self) -> usize {
        self.first_row.len()
    }

    /// Diagonal values `t[i - j + out_len - 1]`, bit-packed.
    fn diagonals(&self) -> Vec<u64> {
        let n = self.raw_len();
        let m = self.out_len();
        let len = n + m - 1;
        let mut words = vec![0u64; len.div_ceil(64) + 1];
        let mut set = |k: usize| words[k / 64] |= 1 << (k % 64);
        for (d, &b) in self.first_column.iter().enumerate() {
            if b {
                set(m - 1 + d);
            }
        }
        for (d, &b) in self.first_row.iter().enumerate().skip(1) {
            if b {
                set(m - 1 - d);
            }
        }
        words
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

fn window64(words: &[u64], offset: usize) -> u64 {
    let (q, r) = (offset / 64, offset % 64);
    let lo = words.get(q).copied().unwrap_or(0);
    if r == 0 {
        lo
    } else {
        (lo >> r) | (words.get(q + 1).copied().unwrap_or(0) << (64 - r))
    }
}

/// Compresses `raw_key` to `out_len` bits with the Toeplitz matrix of `seed`.
pub fn toeplitz_privacy_amplification(
    raw_key: &[bool],
    seed: &ToeplitzSeed,
    out_len: usize,
) -> Result<Vec<bool>> {
    if seed.raw_len() != raw_key.len() || seed.out_len() != out_len {
        return Err(Error::DimensionMismatch(format!(
            "seed is {}x{}, key has {} bits and {out_len} are requested",
            seed.raw_len(),
            seed.out_len(),
            raw_key.len()
        )));
    }
    if out_len > raw_key.len() {
        return Err(Error::DimensionMismatch(format!(
            "output length {out_len} exceeds raw key length {}",
            raw_key.len()
        )));
    }
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let v = pack(raw_key);
    let t = seed.diagonals();
    Ok((0..out_len)
        .into_par_iter()
        .map(|j| {
            let shift = out_len - 1 - j;
            let acc = v
                .iter()
                .enumerate()
                .fold(0u64, |acc, (w, &vw)| acc ^ (vw & window64(&t, shift + 64 * w)));
            acc.count_ones() % 2 == 1
        })
        .collect())
}

/// Length of the distilled key and whether the protocol aborts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalKeyLength {
    pub bits: u64,
    pub terminated: bool,
}

/// `floor(L · L_f/L)`, zero with `terminated` set when the rate is not positive.
pub fn final_key_length(rounds: u64, rate: &KeyRateBreakdown) -> FinalKeyLength {
    if rate.terminated() {
        return FinalKeyLength {
            bits: 0,
            terminated: true,
        };
    }
    FinalKeyLength {
        bits: (rounds as f64 * rate.normalized_rate).floor() as u64,
        terminated: false,
    }
}

/// On-disk key encodings. Bits are packed most-significant first and the
/// last byte is zero-padded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyFormat {
    Raw,
    Hex,
}

pub fn key_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect()
}

pub fn bytes_to_key(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&byte| (0..8).map(move |i| byte >> (7 - i) & 1 == 1))
        .collect()
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_key(path: &Path, bits: &[bool], format: KeyFormat) -> Result<()> {
    let bytes = key_to_bytes(bits);
    let data = match format {
        KeyFormat::Raw => bytes,
        KeyFormat::Hex => format!("{}\n", hex::encode(bytes)).into_bytes(),
    };
    std::fs::write(path, data).map_err(|e| io_error(path, e))
}

/// Reads a key file; the result always holds a whole number of bytes.
pub fn read_key(path: &Path, format: KeyFormat) -> Result<Vec<bool>> {
    let data = std::fs::read(path).map_err(|e| io_error(path, e))?;
    let bytes = match format {
        KeyFormat::Raw => data,
        KeyFormat::Hex => {
            let text = String::from_utf8(data).map_err(|e| io_error(path, e))?;
            hex::decode(text.trim()).map_err(|e| io_error(path, e))?
        }
    };
    Ok(bytes_to_key(&bytes))
}
