//! What an eavesdropper can learn from natural scattering losses, and how
//! strongly a tap correlates with Bob's photon counts.

use serde::{Deserialize, Serialize};

use crate::channels::{EffectiveLine, DEFAULT_ATTENUATION_PER_KM};
use crate::error::{domain, Error, Result};
use crate::numerics::{h2, shannon_entropy_of};

/// Mass allowed outside a truncated binomial or Poisson sum.
pub const TAIL_TOL: f64 = 1e-12;

/// Largest detector count accepted by [`info_individual_detectors`].
pub const MAX_DETECTORS: u64 = 1_000_000;

/// Eve listening to `detector_count` fibre segments of length `l` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalLossScenario {
    pub mu0: f64,
    pub mu1: f64,
    pub segment_length_m: f64,
    pub attenuation_per_km: f64,
    pub detector_count: u64,
    /// Fraction of the scattered light that actually reaches a detector.
    pub efficiency: f64,
}

impl NaturalLossScenario {
    /// Scenario at the default attenuation with perfect collection.
    pub fn new(mu0: f64, mu1: f64, segment_length_m: f64, detector_count: u64) -> Self {
        Self {
            mu0,
            mu1,
            segment_length_m,
            attenuation_per_km: DEFAULT_ATTENUATION_PER_KM,
            detector_count,
            efficiency: 1.0,
        }
    }

    pub fn with_detectors(self, detector_count: u64) -> Self {
        Self {
            detector_count,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (v, what) in [(self.mu0, "mu0"), (self.mu1, "mu1")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(what, v));
            }
        }
        if !(self.segment_length_m > 0.0) {
            return Err(domain("segment length", self.segment_length_m));
        }
        if !(self.attenuation_per_km > 0.0 && self.attenuation_per_km.is_finite()) {
            return Err(domain("attenuation", self.attenuation_per_km));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(domain("collection efficiency", self.efficiency));
        }
        Ok(())
    }

    /// `r_l = 1 - 10^(-xi l)` for one segment.
    pub fn segment_leak(&self) -> f64 {
        let x = -self.attenuation_per_km * self.segment_length_m * 1e-3 * std::f64::consts::LN_10;
        -x.exp_m1()
    }

    /// Mean photons reaching one of Eve's detectors for each bit.
    pub fn eve_means(&self) -> [f64; 2] {
        let k = self.efficiency * self.segment_leak();
        [self.mu0 * k, self.mu1 * k]
    }
}

/// Per-detector statistics `mu_E^(a)` and click probabilities `q_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickStatistics {
    pub mean_photons: [f64; 2],
    pub q: [f64; 2],
}

pub fn click_statistics(scenario: &NaturalLossScenario) -> Result<ClickStatistics> {
    scenario.validate()?;
    let mean_photons = scenario.eve_means();
    Ok(ClickStatistics {
        mean_photons,
        q: mean_photons.map(|m| -(-m).exp_m1()),
    })
}

/// Detectors needed before the two click distributions separate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorRequirement {
    pub count: f64,
    pub ceiling: u64,
    pub total_length_m: f64,
}

/// `N = (sqrt(q0(1-q0)) + sqrt(q1(1-q1)))^2 / (mu_E1 - mu_E0)^2`; the
/// scenario's own detector count is ignored.
pub fn required_detector_count(scenario: &NaturalLossScenario) -> Result<DetectorRequirement> {
    let c = click_statistics(scenario)?;
    let gap = (c.mean_photons[1] - c.mean_photons[0]).abs();
    if scenario.mu0 == scenario.mu1 || gap == 0.0 {
        return Err(Error::DegenerateEncoding(
            "mu0 = mu1 cannot be told apart by any number of detectors".into(),
        ));
    }
    let spread: f64 = c.q.iter().map(|q| (q * (1.0 - q)).sqrt()).sum();
    let count = (spread / gap).powi(2);
    let ceiling = count.ceil() as u64;
    Ok(DetectorRequirement {
        count,
        ceiling,
        total_length_m: count * scenario.segment_length_m,
    })
}

/// Mass function of a log-concave distribution on `0..=upper`, built
/// outwards from `mode` with `ratio(k) = p(k+1) / p(k)` until the geometric
/// bound on each tail drops below `TAIL_TOL`. Returns the first index and
/// the normalized masses.
fn unimodal_pmf<F: Fn(u64) -> f64>(mode: u64, upper: u64, ratio: F) -> (u64, Vec<f64>) {
    let mut up = vec![1.0];
    let mut sum = 1.0;
    let mut k = mode;
    while k < upper {
        let w = up[up.len() - 1] * ratio(k);
        if w == 0.0 {
            break;
        }
        up.push(w);
        sum += w;
        k += 1;
        let next = if k < upper { ratio(k) } else { 0.0 };
        if next < 1.0 && w * next / (1.0 - next) < TAIL_TOL * sum {
            break;
        }
    }
    let mut down = Vec::new();
    let mut w = 1.0;
    let mut k = mode;
    while k > 0 {
        w /= ratio(k - 1);
        if w == 0.0 || !w.is_finite() {
            break;
        }
        down.push(w);
        sum += w;
        k -= 1;
        let next = if k > 0 { 1.0 / ratio(k - 1) } else { 0.0 };
        if next < 1.0 && w * next / (1.0 - next) < TAIL_TOL * sum {
            break;
        }
    }
    let lo = mode - down.len() as u64;
    let masses = down.into_iter().rev().chain(up).map(|w| w / sum).collect();
    (lo, masses)
}

fn binomial_pmf(n: u64, q: f64) -> (u64, Vec<f64>) {
    if q <= 0.0 {
        return (0, vec![1.0]);
    }
    let odds = q / (1.0 - q);
    let mode = (((n + 1) as f64 * q).floor() as u64).min(n);
    unimodal_pmf(mode, n, |k| (n - k) as f64 / (k + 1) as f64 * odds)
}

fn poisson_pmf(lambda: f64) -> (u64, Vec<f64>) {
    if lambda <= 0.0 {
        return (0, vec![1.0]);
    }
    unimodal_pmf(lambda.floor() as u64, u64::MAX, |k| lambda / (k + 1) as f64)
}

/// Places two truncated mass functions on their common support.
fn align(a: (u64, Vec<f64>), b: (u64, Vec<f64>)) -> [Vec<f64>; 2] {
    let lo = a.0.min(b.0);
    let hi = (a.0 + a.1.len() as u64).max(b.0 + b.1.len() as u64);
    [a, b].map(|(start, p)| {
        let mut out = vec![0.0; (hi - lo) as usize];
        let off = (start - lo) as usize;
        out[off..off + p.len()].copy_from_slice(&p);
        out
    })
}

/// `1 - 1/2 sum_n (p0 + p1) h2(p0 / (p0 + p1))` for equiprobable bits.
fn bit_information(p: &[Vec<f64>; 2]) -> f64 {
    let lost: f64 = p[0]
        .iter()
        .zip(&p[1])
        .map(|(&a, &b)| {
            let s = a + b;
            if s > 0.0 {
                s * h2(a / s)
            } else {
                0.0
            }
        })
        .sum();
    (1.0 - 0.5 * lost).clamp(0.0, 1.0)
}

fn poisson_totals(scenario: &NaturalLossScenario) -> Result<[Vec<f64>; 2]> {
    scenario.validate()?;
    let n = scenario.detector_count as f64;
    let [l0, l1] = scenario.eve_means().map(|m| n * m);
    Ok(align(poisson_pmf(l0), poisson_pmf(l1)))
}

/// Mutual information between the bit and the number of clicking detectors.
pub fn info_individual_detectors(scenario: &NaturalLossScenario) -> Result<f64> {
    let c = click_statistics(scenario)?;
    let n = scenario.detector_count;
    if n == 0 {
        return Ok(0.0);
    }
    if n > MAX_DETECTORS {
        return Err(Error::BudgetExceeded(format!(
            "{n} detectors exceeds the limit of {MAX_DETECTORS}"
        )));
    }
    let p = align(binomial_pmf(n, c.q[0]), binomial_pmf(n, c.q[1]));
    Ok(bit_information(&p))
}

/// Mutual information from counting every scattered photon at once.
pub fn info_collective_photon_number(scenario: &NaturalLossScenario) -> Result<f64> {
    Ok(bit_information(&poisson_totals(scenario)?))
}

/// Holevo quantity of the phase-randomized (Fock-diagonal) ensemble.
pub fn holevo_phase_randomized(scenario: &NaturalLossScenario) -> Result<f64> {
    let p = poisson_totals(scenario)?;
    let mix: Vec<f64> = p[0].iter().zip(&p[1]).map(|(a, b)| 0.5 * (a + b)).collect();
    let chi = shannon_entropy_of(&mix)
        - 0.5 * (shannon_entropy_of(&p[0]) + shannon_entropy_of(&p[1]));
    Ok(chi.clamp(0.0, 1.0))
}

/// Holevo quantity of the two pure coherent states collected by Eve,
/// `h2(1/2 - 1/2 exp(-r_l N (gamma1 - gamma0)^2 / 2))`.
pub fn holevo_coherent(scenario: &NaturalLossScenario) -> Result<f64> {
    scenario.validate()?;
    let k = scenario.efficiency * scenario.segment_leak() * scenario.detector_count as f64;
    let d = scenario.mu1.sqrt() - scenario.mu0.sqrt();
    let overlap = (-0.5 * k * d * d).exp();
    Ok(h2(0.5 - 0.5 * overlap))
}

/// Pearson correlation between Bob's and Eve's photon counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub r_be: f64,
    /// `<n_B n_E> - <n_B><n_E>`.
    pub irreducible_correlator: f64,
    pub sigma_b: f64,
    pub sigma_e: f64,
}

/// Correlation under a beam-splitter tap of `r_e` with the gains of `line`
/// (its own leak fraction is not used).
pub fn pearson_correlation(
    mean_photons: f64,
    r_e: f64,
    line: &EffectiveLine,
) -> Result<CorrelationReport> {
    if !(mean_photons >= 0.0 && mean_photons.is_finite()) {
        return Err(domain("mean photon number", mean_photons));
    }
    if !(0.0..=1.0).contains(&r_e) {
        return Err(domain("leak fraction r_E", r_e));
    }
    let (g1, g2) = (line.g1(), line.g2());
    let n = mean_photons;
    let excess = g1 * (2.0 * n + g1);
    let irreducible_correlator = r_e * (1.0 - r_e) * excess;
    let var_b = (1.0 - r_e) * (n + g1) * (1.0 + 2.0 * g2)
        + (1.0 - r_e).powi(2) * excess
        + (g2 + 1.0) * g2;
    let var_e = r_e * (n + g1) + r_e * r_e * excess;
    let (sigma_b, sigma_e) = (var_b.sqrt(), var_e.sqrt());
    let denom = sigma_b * sigma_e;
    let r_be = if denom > 0.0 {
        (irreducible_correlator / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(CorrelationReport {
        r_be,
        irreducible_correlator,
        sigma_b,
        sigma_e,
    })
}
