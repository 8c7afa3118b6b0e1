//! Conditional-probability tables and key-rate bookkeeping shared by both
//! encodings.

use serde::{Deserialize, Serialize};

use crate::numerics::{h2, shannon_entropy_of};

/// Bob's outcome probabilities `p(b|a)` with the inconclusive remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProbabilities {
    /// `p[a][b]`.
    pub p: [[f64; 2]; 2],
    pub p_fail_given_a: [f64; 2],
    pub p_conclusive: f64,
}

impl ConditionalProbabilities {
    /// Builds the table from `p[a][b]`, clamping round-off into `[0, 1]`.
    pub fn from_table(p: [[f64; 2]; 2]) -> Self {
        let p = p.map(|row| row.map(|v| v.clamp(0.0, 1.0)));
        let p_fail_given_a = [0, 1].map(|a| (1.0 - p[a][0] - p[a][1]).clamp(0.0, 1.0));
        let p_conclusive = 0.5 * (p[0][0] + p[0][1] + p[1][0] + p[1][1]);
        Self {
            p,
            p_fail_given_a,
            p_conclusive,
        }
    }

    /// `p(✓|a)`.
    pub fn conclusive_given(&self, a: usize) -> f64 {
        self.p[a][0] + self.p[a][1]
    }

    /// Ensemble weights `p(✓|a) / 2p✓` of the post-selected states.
    pub fn post_selected_priors(&self) -> [f64; 2] {
        if self.p_conclusive <= 0.0 {
            return [0.5, 0.5];
        }
        [0, 1].map(|a| self.conclusive_given(a) / (2.0 * self.p_conclusive))
    }

    /// Joint `P(a, b) = p(b|a) / 2p✓` over conclusive rounds.
    pub fn post_selected_joint(&self) -> [[f64; 2]; 2] {
        let z = 2.0 * self.p_conclusive;
        if z <= 0.0 {
            return [[0.0; 2]; 2];
        }
        self.p.map(|row| row.map(|v| v / z))
    }

    /// `I(A, B) = H(A) + H(B) - H(A, B)` of the post-selected joint.
    pub fn mutual_information(&self) -> f64 {
        if self.p_conclusive <= 0.0 {
            return 0.0;
        }
        let j = self.post_selected_joint();
        let pa = [j[0][0] + j[0][1], j[1][0] + j[1][1]];
        let pb = [j[0][0] + j[1][0], j[0][1] + j[1][1]];
        let flat = [j[0][0], j[0][1], j[1][0], j[1][1]];
        let i = shannon_entropy_of(&pa) + shannon_entropy_of(&pb) - shannon_entropy_of(&flat);
        i.clamp(0.0, 1.0)
    }

    /// Error rate among conclusive rounds, `(p(1|0) + p(0|1)) / 2p✓`.
    pub fn error_rate(&self) -> f64 {
        if self.p_conclusive <= 0.0 {
            return 0.0;
        }
        (self.p[0][1] + self.p[1][0]) / (2.0 * self.p_conclusive)
    }
}

/// Per-round secret fraction and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateBreakdown {
    pub i_ab: f64,
    pub eve_bound: f64,
    pub p_conclusive: f64,
    /// `max(0, p✓ (I(A,B) - eve_bound))`.
    pub normalized_rate: f64,
    /// The same quantity before clamping at zero.
    pub raw_rate: f64,
    pub probabilities: ConditionalProbabilities,
}

impl KeyRateBreakdown {
    pub fn new(probabilities: ConditionalProbabilities, i_ab: f64, eve_bound: f64) -> Self {
        let p_conclusive = probabilities.p_conclusive;
        let raw_rate = p_conclusive * (i_ab - eve_bound);
        Self {
            i_ab,
            eve_bound,
            p_conclusive,
            normalized_rate: raw_rate.max(0.0),
            raw_rate,
            probabilities,
        }
    }

    /// True when the protocol must abort (`L_f / L` not positive).
    pub fn terminated(&self) -> bool {
        !(self.raw_rate > 0.0)
    }
}

/// Mutual information of a binary symmetric channel, `1 - h2(e)`.
pub fn bsc_information(error_rate: f64) -> f64 {
    1.0 - h2(error_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_channel_has_one_bit() {
        let c = ConditionalProbabilities::from_table([[0.5, 0.0], [0.0, 0.5]]);
        assert!((c.mutual_information() - 1.0).abs() < 1e-15);
        assert_eq!(c.p_conclusive, 0.5);
        assert_eq!(c.p_fail_given_a, [0.5, 0.5]);
    }

    #[test]
    fn symmetric_table_matches_bsc() {
        let c = ConditionalProbabilities::from_table([[0.6, 0.1], [0.1, 0.6]]);
        let e = c.error_rate();
        assert!((e - 1.0 / 7.0).abs() < 1e-15);
        assert!((c.mutual_information() - bsc_information(e)).abs() < 1e-14);
    }

    #[test]
    fn empty_post_selection_is_harmless() {
        let c = ConditionalProbabilities::from_table([[0.0; 2]; 2]);
        assert_eq!(c.mutual_information(), 0.0);
        let k = KeyRateBreakdown::new(c, 0.0, 0.0);
        assert_eq!(k.normalized_rate, 0.0);
        assert!(k.terminated());
    }
}
