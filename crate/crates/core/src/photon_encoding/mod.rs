//! Photon-number encoding with phase randomization: Bob's window
//! probabilities, Eve's Fock-diagonal states and the resulting key rate.

mod eve;
mod kernel;
pub(crate) mod windows;

use serde::{Deserialize, Serialize};

use crate::channels::EffectiveLine;
use crate::error::{Error, Result};
use crate::numerics::{integrate_vec, ln_i0e, shannon_entropy_of, QuadratureOptions};
use crate::rate::{ConditionalProbabilities, KeyRateBreakdown};

pub use eve::{eve_conditional_state, eve_conditional_state_with, EveMethod, FockDiagonal, FOCK_TAIL_TOL, MAX_FOCK_CUTOFF};
pub use kernel::EveIntegralKernel;
pub use windows::GAUSSIAN_WINDOW_THRESHOLD;

pub(crate) use windows::Windows;

/// Alice's two coherent-state intensities and Bob's post-selection cuts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumberEncoding {
    pub mu0: f64,
    pub mu1: f64,
    /// `[θ1, θ2, θ3, θ4]` in photons.
    pub thresholds: [f64; 4],
}

impl PhotonNumberEncoding {
    pub fn new(mu0: f64, mu1: f64, thresholds: [f64; 4]) -> Result<Self> {
        let enc = Self { mu0, mu1, thresholds };
        enc.validate()?;
        Ok(enc)
    }

    pub fn validate(&self) -> Result<()> {
        let [t1, t2, t3, t4] = self.thresholds;
        let finite = [self.mu0, self.mu1, t1, t2, t3, t4].iter().all(|v| v.is_finite());
        if !finite || !(self.mu0 > 0.0) || !(self.mu1 > 0.0) {
            return Err(Error::Encoding(format!(
                "intensities must be positive and finite (mu0 = {}, mu1 = {})",
                self.mu0, self.mu1
            )));
        }
        if self.mu0 == self.mu1 {
            return Err(Error::DegenerateEncoding(format!("mu0 = mu1 = {}", self.mu0)));
        }
        if !(0.0 <= t1 && t1 <= t3 && 0.0 <= t2 && t2 <= t4) {
            return Err(Error::Encoding(format!(
                "thresholds must satisfy 0 <= θ1 <= θ3 and 0 <= θ2 <= θ4, got {:?}",
                self.thresholds
            )));
        }
        if self.mean_photons() - t3 < 0.0 {
            return Err(Error::Encoding(format!(
                "lower window starts below zero (μ - θ3 = {})",
                self.mean_photons() - t3
            )));
        }
        Ok(())
    }

    /// `μ = (μ0 + μ1) / 2`.
    pub fn mean_photons(&self) -> f64 {
        0.5 * (self.mu0 + self.mu1)
    }

    /// `|γ_a|`.
    pub fn amplitude(&self, a: usize) -> f64 {
        if a == 0 { self.mu0 } else { self.mu1 }.sqrt()
    }
}

/// Quadrature and route settings for the photon-number analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub method: EveMethod,
    pub quadrature: QuadratureOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            method: EveMethod::default(),
            quadrature: QuadratureOptions::with_rel_tol(1e-7),
        }
    }
}

// Per-bit model constants: α ~ CN(γ, g1), β | α ~ CN(√(1-r) α, g2),
// so |β| is Rician with centre c and variance s.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Arm {
    pub gamma: f64,
    pub g1: f64,
    pub g2: f64,
    pub r: f64,
    pub c: f64,
    pub s: f64,
}

// Bob's Rician density is treated as a point mass below this variance.
const POINT_MASS_VARIANCE: f64 = 1e-12;
const RICIAN_SIGMAS: f64 = 15.0;

impl Arm {
    pub(crate) fn new(a: usize, enc: &PhotonNumberEncoding, line: &EffectiveLine) -> Self {
        let gamma = enc.amplitude(a);
        let (g1, g2, r) = (line.g1(), line.g2(), line.leak_fraction);
        let t = 1.0 - r;
        Self {
            gamma,
            g1,
            g2,
            r,
            c: t.sqrt() * gamma,
            s: t * g1 + g2,
        }
    }

    pub(crate) fn is_point_mass(&self) -> bool {
        self.s < POINT_MASS_VARIANCE
    }

    /// Log density of `|β|`.
    pub(crate) fn ln_rician(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let (c, s) = (self.c, self.s);
        (2.0 * y / s).ln() - (y - c) * (y - c) / s + ln_i0e(2.0 * c * y / s)
    }

    /// Range of `|β|` carrying all but a negligible part of the density.
    pub(crate) fn support(&self) -> (f64, f64) {
        let sigma = (0.5 * self.s).sqrt();
        let lo = (self.c - RICIAN_SIGMAS * sigma).max(0.0);
        let hi = self.c + RICIAN_SIGMAS * sigma;
        (lo, hi)
    }

    /// Integration range for conclusive outcomes, or `None` when empty.
    pub(crate) fn conclusive_range(&self, w: &Windows) -> Option<(f64, f64)> {
        let (rl, rh) = self.support();
        let (wl, wh) = w.support();
        let (lo, hi) = (rl.max(wl), rh.min(wh));
        (hi > lo).then_some((lo, hi))
    }

    pub(crate) fn breakpoints(&self, w: &Windows) -> Vec<f64> {
        let sigma = (0.5 * self.s).sqrt();
        let mut bp = w.breakpoints();
        bp.extend([-6.0, -3.0, 0.0, 3.0, 6.0].map(|k| self.c + k * sigma));
        bp
    }
}

/// Bob's `p(b|a)` from the radial integral over `|β|`.
pub fn bob_conditional_probs(enc: &PhotonNumberEncoding, line: &EffectiveLine) -> Result<ConditionalProbabilities> {
    bob_conditional_probs_with(enc, line, QuadratureOptions::with_rel_tol(1e-10))
}

pub fn bob_conditional_probs_with(
    enc: &PhotonNumberEncoding,
    line: &EffectiveLine,
    opts: QuadratureOptions,
) -> Result<ConditionalProbabilities> {
    enc.validate()?;
    let w = Windows::new(enc);
    let mut table = [[0.0; 2]; 2];
    for (a, row) in table.iter_mut().enumerate() {
        *row = bob_row(&Arm::new(a, enc, line), &w, opts)?;
    }
    Ok(ConditionalProbabilities::from_table(table))
}

pub(crate) fn bob_row(arm: &Arm, w: &Windows, opts: QuadratureOptions) -> Result<[f64; 2]> {
    if arm.is_point_mass() {
        return Ok(w.probs(arm.c));
    }
    let Some((lo, hi)) = arm.conclusive_range(w) else {
        return Ok([0.0; 2]);
    };
    let res = integrate_vec(
        |y, out| {
            let f = arm.ln_rician(y).exp();
            if f == 0.0 {
                out.fill(0.0);
                return;
            }
            let p = w.probs(y);
            out[0] = f * p[0];
            out[1] = f * p[1];
        },
        2,
        lo,
        hi,
        &arm.breakpoints(w),
        opts,
    )?;
    Ok([res.values[0], res.values[1]])
}

/// Holevo quantity of the two-state diagonal ensemble `{q_a, ρ_a}`.
pub fn holevo_bound(rho0: &FockDiagonal, rho1: &FockDiagonal, q0: f64, q1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q0) || !(0.0..=1.0).contains(&q1) || (q0 + q1 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("ensemble weights {q0} + {q1} != 1")));
    }
    let (p0, p1) = (rho0.probs.weights(), rho1.probs.weights());
    let n = p0.len().max(p1.len());
    let at = |p: &[f64], i: usize| p.get(i).copied().unwrap_or(0.0);
    let mix: Vec<f64> = (0..n).map(|i| q0 * at(p0, i) + q1 * at(p1, i)).collect();
    let chi = shannon_entropy_of(&mix) - q0 * shannon_entropy_of(p0) - q1 * shannon_entropy_of(p1);
    Ok(chi.clamp(0.0, 1.0))
}

/// Key rate with the default analysis options.
pub fn key_rate(enc: &PhotonNumberEncoding, line: &EffectiveLine) -> Result<KeyRateBreakdown> {
    key_rate_with(enc, line, AnalysisOptions::default())
}

pub fn key_rate_with(
    enc: &PhotonNumberEncoding,
    line: &EffectiveLine,
    opts: AnalysisOptions,
) -> Result<KeyRateBreakdown> {
    enc.validate()?;
    let mut table = [[0.0; 2]; 2];
    let mut states = Vec::with_capacity(2);
    for (a, row) in table.iter_mut().enumerate() {
        let out = eve::analyse(a, enc, line, opts)?;
        *row = out.bob;
        states.push(out.state);
    }
    let probs = ConditionalProbabilities::from_table(table);
    if probs.p_conclusive <= 0.0 {
        return Ok(KeyRateBreakdown::new(probs, 0.0, 0.0));
    }
    let [q0, _] = probs.post_selected_priors();
    let chi = holevo_bound(&states[0], &states[1], q0, 1.0 - q0)?;
    Ok(KeyRateBreakdown::new(probs, probs.mutual_information(), chi))
}

/// Poisson distribution truncated where its tail falls below `FOCK_TAIL_TOL`.
pub fn poisson_fock(mean: f64) -> Result<FockDiagonal> {
    eve::displaced_thermal_state(0.0, mean)
}
