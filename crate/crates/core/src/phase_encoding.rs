//! Phase encoding `±γ` with homodyne post-selection and the Jensen bound on
//! Eve's information.

use serde::{Deserialize, Serialize};

use crate::channels::EffectiveLine;
use crate::error::{Error, Result};
use crate::numerics::{erf, h2};
use crate::photon_encoding::windows::gaussian_interval;
use crate::rate::{ConditionalProbabilities, KeyRateBreakdown};

/// Alice sends `+γ` for bit 0 and `-γ` for bit 1; Bob keeps quadrature
/// readings with `θ'1 <= |q| <= θ'2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEncoding {
    pub gamma: f64,
    pub theta1p: f64,
    /// May be `+∞`.
    pub theta2p: f64,
}

impl PhaseEncoding {
    pub fn new(gamma: f64, theta1p: f64, theta2p: f64) -> Result<Self> {
        let enc = Self { gamma, theta1p, theta2p };
        enc.validate()?;
        Ok(enc)
    }

    /// An empty window `θ'1 = θ'2` is allowed and yields `p✓ = 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Encoding(format!("γ must be positive and finite, got {}", self.gamma)));
        }
        if !(self.theta1p >= 0.0) || !self.theta1p.is_finite() || !(self.theta2p >= self.theta1p) {
            return Err(Error::Encoding(format!(
                "window must satisfy 0 <= θ'1 <= θ'2, got [{}, {}]",
                self.theta1p, self.theta2p
            )));
        }
        Ok(())
    }

    /// `|γ|²`.
    pub fn mean_photons(&self) -> f64 {
        self.gamma * self.gamma
    }
}

/// Mean and standard deviation of Bob's quadrature given bit 0; bit 1 mirrors it.
///
/// Vacuum quadrature variance is 1/4.
pub fn quadrature_distribution(enc: &PhaseEncoding, line: &EffectiveLine) -> (f64, f64) {
    let r = line.leak_fraction;
    let centre = (1.0 - r).sqrt() * enc.gamma;
    let var = (1.0 + 2.0 * line.g2() + 2.0 * (1.0 - r) * line.g1()) / 4.0;
    (centre, var.sqrt())
}

/// Closed-form `p(b|a)`.
pub fn bob_conditional_probs(enc: &PhaseEncoding, line: &EffectiveLine) -> Result<ConditionalProbabilities> {
    enc.validate()?;
    let (c, sd) = quadrature_distribution(enc, line);
    let k = std::f64::consts::SQRT_2 * sd;
    // agreeing bits see the window on the signal's side
    let agree = gaussian_interval((enc.theta1p - c) / k, (enc.theta2p - c) / k);
    let disagree = gaussian_interval((enc.theta1p + c) / k, (enc.theta2p + c) / k);
    Ok(ConditionalProbabilities::from_table([[agree, disagree], [disagree, agree]]))
}

/// `⟨exp(-2 r |α|²)⟩` over Alice's post-selected amplitude distribution.
pub fn mean_overlap(enc: &PhaseEncoding, line: &EffectiveLine, p_conclusive: f64) -> f64 {
    let (r, g1, g2) = (line.leak_fraction, line.g1(), line.g2());
    if p_conclusive <= 0.0 {
        return 1.0;
    }
    let d = 1.0 + 2.0 * r * g1;
    let zeta = (g1 + g2 + 0.5 + 2.0 * r * g1 * g2).sqrt();
    let shift = (1.0 - r).sqrt() * enc.gamma;
    let scale = zeta * d.sqrt();
    let edge = |theta: f64| -> f64 {
        if theta.is_infinite() {
            return 2.0;
        }
        erf((theta * d + shift) / scale) + erf((theta * d - shift) / scale)
    };
    let bracket = edge(enc.theta2p) - edge(enc.theta1p);
    let v = (-2.0 * r * enc.mean_photons() / d).exp() / (2.0 * p_conclusive * d) * bracket;
    v.clamp(0.0, 1.0)
}

/// Upper bound `h2((1 + ⟨e^{-2r|α|²}⟩) / 2)` on Eve's information.
pub fn eve_info_bound(enc: &PhaseEncoding, line: &EffectiveLine) -> Result<f64> {
    let probs = bob_conditional_probs(enc, line)?;
    Ok(bound_from(enc, line, &probs))
}

fn bound_from(enc: &PhaseEncoding, line: &EffectiveLine, probs: &ConditionalProbabilities) -> f64 {
    if probs.p_conclusive <= 0.0 {
        return 0.0;
    }
    h2(0.5 * (1.0 + mean_overlap(enc, line, probs.p_conclusive)))
}

pub fn key_rate(enc: &PhaseEncoding, line: &EffectiveLine) -> Result<KeyRateBreakdown> {
    let probs = bob_conditional_probs(enc, line)?;
    if probs.p_conclusive <= 0.0 {
        return Ok(KeyRateBreakdown::new(probs, 0.0, 0.0));
    }
    let i_ab = 1.0 - h2(probs.p[0][1] / probs.p_conclusive);
    Ok(KeyRateBreakdown::new(probs, i_ab, bound_from(enc, line, &probs)))
}
