use super::values::ProbabilityDistribution;
use crate::error::{domain, Result};

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain("binary entropy argument", p));
    }
    Ok(h2(p))
}

/// Binary entropy with the argument clamped into `[0, 1]`.
///
/// Used internally where round-off may push a ratio of probabilities a few
/// ulps outside the unit interval.
pub fn h2(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let q = 1.0 - p;
    let h = -xlog2x(p) - xlog2x(q);
    h.clamp(0.0, 1.0)
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon entropy in bits of a validated distribution.
pub fn shannon_entropy(dist: &ProbabilityDistribution) -> f64 {
    shannon_entropy_of(dist.weights())
}

/// Shannon entropy of raw non-negative weights assumed to sum to one.
pub fn shannon_entropy_of(weights: &[f64]) -> f64 {
    let h: f64 = weights.iter().map(|&w| -xlog2x(w)).sum();
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89
        let expected = 0.11 * (1.0f64 / 0.11).log2() + 0.89 * (1.0f64 / 0.89).log2();
        assert!((binary_entropy(0.11).unwrap() - expected).abs() < 1e-15);
        assert!((binary_entropy(0.11).unwrap() - 0.49993).abs() < 1e-4);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn shannon_reference_points() {
        let d = ProbabilityDistribution::new(vec![0.25; 4]).unwrap();
        assert!((shannon_entropy(&d) - 2.0).abs() < 1e-15);
        let d = ProbabilityDistribution::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(shannon_entropy(&d), 0.0);
        let d = ProbabilityDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((shannon_entropy(&d) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(ProbabilityDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbabilityDistribution::normalized(vec![0.0, 0.0]).is_err());
    }
}
