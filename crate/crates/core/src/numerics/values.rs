use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// A finite discrete probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution {
    weights: Vec<f64>,
}

impl ProbabilityDistribution {
    /// Validates that every weight lies in `[0, 1]` and that they sum to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !(0.0..=1.0 + DISTRIBUTION_TOL).contains(&w) || !w.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "weight {i} = {w} outside [0, 1]"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}"
            )));
        }
        Ok(Self { weights })
    }

    /// Rescales non-negative masses to unit total.
    pub fn normalized(mut masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite mass".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        masses.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights: masses })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .sum()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// A real number stored as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScaledValue {
    pub log_magnitude: f64,
    pub sign: i8,
}

impl LogScaledValue {
    pub const ZERO: Self = Self {
        log_magnitude: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: Self = Self {
        log_magnitude: 0.0,
        sign: 1,
    };

    /// A positive value `exp(log_magnitude)`.
    pub fn from_ln(log_magnitude: f64) -> Self {
        if log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                log_magnitude,
                sign: 1,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                log_magnitude: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    /// Natural log of a positive value; `-inf` for zero, NaN for negatives.
    pub fn ln(self) -> f64 {
        match self.sign {
            1 => self.log_magnitude,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn mul(self, other: Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return Self::ZERO;
        }
        Self {
            log_magnitude: self.log_magnitude + other.log_magnitude,
            sign: self.sign * other.sign,
        }
    }

    pub fn div(self, other: Self) -> Self {
        Self {
            log_magnitude: self.log_magnitude - other.log_magnitude,
            sign: self.sign * other.sign,
        }
    }

    pub fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log_magnitude >= other.log_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (lo.log_magnitude - hi.log_magnitude).exp() * f64::from(hi.sign * lo.sign);
        if ratio == -1.0 {
            return Self::ZERO;
        }
        Self {
            log_magnitude: hi.log_magnitude + ratio.ln_1p(),
            sign: hi.sign,
        }
    }
}

impl From<f64> for LogScaledValue {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}
