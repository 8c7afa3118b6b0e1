use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::numerics::{erf, erfc};

use super::PhotonNumberEncoding;

/// Mean photon number at and above which Bob's count windows use the normal
/// approximation of the Poisson distribution.
pub const GAUSSIAN_WINDOW_THRESHOLD: f64 = 1000.0;

// Bob's count distribution is neglected beyond this many standard deviations.
const WINDOW_SIGMAS: f64 = 14.0;

/// Bob's post-selection windows `E0 = [μ-θ3, μ-θ1]`, `E1 = [μ+θ2, μ+θ4]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Windows {
    edges: [[f64; 2]; 2],
    counts: Option<[[i64; 2]; 2]>,
}

impl Windows {
    pub(crate) fn new(enc: &PhotonNumberEncoding) -> Self {
        let mu = enc.mean_photons();
        let [t1, t2, t3, t4] = enc.thresholds;
        let edges = [[mu - t3, mu - t1], [mu + t2, mu + t4]];
        let counts = (mu < GAUSSIAN_WINDOW_THRESHOLD).then(|| {
            let lo0 = (mu - t3).ceil() as i64;
            let hi0 = (mu - t1).floor() as i64;
            let lo1 = ((mu + t2).ceil() as i64).max(hi0 + 1);
            let hi1 = (mu + t4).floor() as i64;
            [[lo0, hi0], [lo1, hi1]]
        });
        Self { edges, counts }
    }

    /// `<β|E_b|β>` for `|β| = y`.
    pub(crate) fn probs(&self, y: f64) -> [f64; 2] {
        let lam = y * y;
        match self.counts {
            Some(c) => [0, 1].map(|b| poisson_window(c[b][0], c[b][1], lam)),
            None => [0, 1].map(|b| gaussian_window(self.edges[b][0], self.edges[b][1], y)),
        }
    }

    /// Points bracketing the window edges, where `<β|E_b|β>` changes fastest.
    ///
    /// A count edge `e` is crossed at `|β| = √e` over a width of about 1/2.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in self.edges.iter().flatten().filter(|e| e.is_finite() && **e > 0.0) {
            let y = e.sqrt();
            out.extend([-3.0, -1.0, 0.0, 1.0, 3.0].map(|k| y + k));
        }
        out
    }

    /// Range of `|β|` outside which both windows are negligible.
    pub(crate) fn support(&self) -> (f64, f64) {
        let lo_count = self.edges[0][0].min(self.edges[1][0]).max(0.0);
        let hi_count = self.edges[0][1].max(self.edges[1][1]).max(0.0);
        let k = WINDOW_SIGMAS;
        // y^2 + k y >= lo and y^2 - k y <= hi, padded for the Poisson tails
        let pad = if self.counts.is_some() { 3.0 * k } else { 0.0 };
        let lo = (-k + (k * k + 4.0 * (lo_count - pad).max(0.0)).sqrt()) / 2.0;
        let hi = (k + (k * k + 4.0 * (hi_count + pad)).sqrt()) / 2.0;
        (lo.max(0.0), hi)
    }
}

/// `P(lo <= X <= hi)` for `X ~ N(y^2, y^2)` as a continuous count.
fn gaussian_window(lo: f64, hi: f64, y: f64) -> f64 {
    if hi < lo {
        return 0.0;
    }
    if y <= 0.0 {
        return if lo <= 0.0 && 0.0 <= hi { 1.0 } else { 0.0 };
    }
    let lam = y * y;
    let s = std::f64::consts::SQRT_2 * y;
    gaussian_interval((lo - lam) / s, (hi - lam) / s)
}

/// `(erf(u1) - erf(u0)) / 2` evaluated on the tail that keeps precision.
pub(crate) fn gaussian_interval(u0: f64, u1: f64) -> f64 {
    let v = if u0 >= 0.0 {
        0.5 * (erfc(u0) - erfc(u1))
    } else if u1 <= 0.0 {
        0.5 * (erfc(-u1) - erfc(-u0))
    } else {
        0.5 * (erf(u1) - erf(u0))
    };
    v.clamp(0.0, 1.0)
}

/// `P(lo <= K <= hi)` for `K ~ Poisson(lam)`.
pub(crate) fn poisson_window(lo: i64, hi: i64, lam: f64) -> f64 {
    let lo = lo.max(0);
    if hi < lo {
        return 0.0;
    }
    if lam <= 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    // P(K <= k) = Q(k + 1, lam) and P(K >= k) = P(k, lam)
    let below = |k: i64| if k < 0 { 0.0 } else { gamma_ur(k as f64 + 1.0, lam) };
    let at_least = |k: i64| if k <= 0 { 1.0 } else { gamma_lr(k as f64, lam) };
    let v = if (hi as f64) < lam {
        below(hi) - below(lo - 1)
    } else if (lo as f64) > lam {
        at_least(lo) - at_least(hi + 1)
    } else {
        1.0 - below(lo - 1) - at_least(hi + 1)
    };
    v.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::poisson_pmf_ln;

    #[test]
    fn poisson_window_matches_direct_sum() {
        for lam in [0.3, 4.0, 50.0, 400.0] {
            for (lo, hi) in [(0, 3), (2, 9), (40, 60), (380, 420), (500, 600)] {
                let direct: f64 = (lo..=hi).map(|k| poisson_pmf_ln(k as usize, lam).exp()).sum();
                let got = poisson_window(lo, hi, lam);
                assert!((got - direct).abs() < 1e-12 + 1e-10 * direct, "lam {lam} [{lo},{hi}]");
            }
        }
        assert_eq!(poisson_window(0, 5, 0.0), 1.0);
        assert_eq!(poisson_window(3, 2, 1.0), 0.0);
    }

    #[test]
    fn gaussian_window_tails_keep_precision() {
        // far right tail: P(X >= lam + 10 sd) ~ erfc(10 / sqrt 2) / 2
        let y: f64 = 100.0;
        let p = gaussian_window(y * y + 10.0 * y, f64::INFINITY, y);
        assert!((p / (0.5 * erfc(10.0 / 2f64.sqrt())) - 1.0).abs() < 1e-12);
    }
}
