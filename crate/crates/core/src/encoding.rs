//! Either encoding behind one type, as used by the optimizer, the
//! Monte-Carlo engine and the CLI.

use serde::{Deserialize, Serialize};

use crate::channels::EffectiveLine;
use crate::error::Result;
use crate::phase_encoding::{self, PhaseEncoding};
use crate::photon_encoding::{self, AnalysisOptions, PhotonNumberEncoding};
use crate::rate::{ConditionalProbabilities, KeyRateBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    PhotonNumber,
    Phase,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::PhotonNumber => "photon-number",
            Scheme::Phase => "phase",
        })
    }
}

/// Bob's verdict on one reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BobOutcome {
    Zero,
    One,
    Fail,
}

impl BobOutcome {
    pub fn bit(self) -> Option<u8> {
        match self {
            BobOutcome::Zero => Some(0),
            BobOutcome::One => Some(1),
            BobOutcome::Fail => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            BobOutcome::Zero => 0,
            BobOutcome::One => 1,
            BobOutcome::Fail => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum EncodingConfig {
    PhotonNumber(PhotonNumberEncoding),
    Phase(PhaseEncoding),
}

impl From<PhotonNumberEncoding> for EncodingConfig {
    fn from(e: PhotonNumberEncoding) -> Self {
        EncodingConfig::PhotonNumber(e)
    }
}

impl From<PhaseEncoding> for EncodingConfig {
    fn from(e: PhaseEncoding) -> Self {
        EncodingConfig::Phase(e)
    }
}

impl EncodingConfig {
    pub fn scheme(&self) -> Scheme {
        match self {
            EncodingConfig::PhotonNumber(_) => Scheme::PhotonNumber,
            EncodingConfig::Phase(_) => Scheme::Phase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EncodingConfig::PhotonNumber(e) => e.validate(),
            EncodingConfig::Phase(e) => e.validate(),
        }
    }

    /// Alice's amplitude for bit `a` before any phase randomization.
    pub fn amplitude(&self, a: u8) -> f64 {
        match self {
            EncodingConfig::PhotonNumber(e) => e.amplitude(a as usize),
            EncodingConfig::Phase(e) if a == 0 => e.gamma,
            EncodingConfig::Phase(e) => -e.gamma,
        }
    }

    /// Mean photon number `μ` or `|γ|²`.
    pub fn mean_photons(&self) -> f64 {
        match self {
            EncodingConfig::PhotonNumber(e) => e.mean_photons(),
            EncodingConfig::Phase(e) => e.mean_photons(),
        }
    }

    /// Applies the post-selection windows to a photon count or a quadrature.
    pub fn decide(&self, reading: f64) -> BobOutcome {
        match self {
            EncodingConfig::PhotonNumber(e) => {
                let mu = e.mean_photons();
                let [t1, t2, t3, t4] = e.thresholds;
                if mu - t3 <= reading && reading <= mu - t1 {
                    BobOutcome::Zero
                } else if mu + t2 <= reading && reading <= mu + t4 {
                    BobOutcome::One
                } else {
                    BobOutcome::Fail
                }
            }
            EncodingConfig::Phase(e) => {
                let q = reading.abs();
                if q < e.theta1p || q > e.theta2p || q == 0.0 {
                    BobOutcome::Fail
                } else if reading > 0.0 {
                    BobOutcome::Zero
                } else {
                    BobOutcome::One
                }
            }
        }
    }

    pub fn bob_conditional_probs(&self, line: &EffectiveLine) -> Result<ConditionalProbabilities> {
        match self {
            EncodingConfig::PhotonNumber(e) => photon_encoding::bob_conditional_probs(e, line),
            EncodingConfig::Phase(e) => phase_encoding::bob_conditional_probs(e, line),
        }
    }

    pub fn key_rate(&self, line: &EffectiveLine) -> Result<KeyRateBreakdown> {
        self.key_rate_with(line, AnalysisOptions::default())
    }

    /// `opts` only affects the photon-number analysis.
    pub fn key_rate_with(&self, line: &EffectiveLine, opts: AnalysisOptions) -> Result<KeyRateBreakdown> {
        match self {
            EncodingConfig::PhotonNumber(e) => photon_encoding::key_rate_with(e, line, opts),
            EncodingConfig::Phase(e) => phase_encoding::key_rate(e, line),
        }
    }
}
