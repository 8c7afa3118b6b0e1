use crate::error::{Error, Result};
use crate::numerics::{integrate_vec, ln_gamma, log_kummer_1f1, LogScaledValue, BESSEL_SWITCH};

use super::eve::{fock_cutoff, finish, Analysis, Posterior};
use super::{AnalysisOptions, Arm, Windows};

// Width of the |α| bulk, in standard deviations, checked against the switch.
const BULK_SIGMAS: f64 = 8.0;

/// Gaussian kernel of the `|α|` integral after the two-term Bessel expansion:
/// `∫ x^m e^{-A x^2 + B x} dx` with `B = b0 + b1 |β|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveIntegralKernel {
    /// `1/(G1-1) + (1-r)/(G2-1) + r`.
    pub a: f64,
    /// `2γ/(G1-1)`.
    pub b0: f64,
    /// `2√(1-r)/(G2-1)`.
    pub b1: f64,
    gamma: f64,
    g1: f64,
    g2: f64,
    r: f64,
}

impl EveIntegralKernel {
    pub(crate) fn new(arm: &Arm) -> Result<Self> {
        if !(arm.g1 > 0.0) || !(arm.g2 > 0.0) || !(arm.r > 0.0 && arm.r < 1.0) || !(arm.gamma > 0.0) {
            return Err(Error::Domain {
                what: "asymptotic kernel needs G1, G2 > 1, 0 < r < 1 and γ > 0",
                value: arm.r,
            });
        }
        let t = 1.0 - arm.r;
        Ok(Self {
            a: 1.0 / arm.g1 + t / arm.g2 + arm.r,
            b0: 2.0 * arm.gamma / arm.g1,
            b1: 2.0 * t.sqrt() / arm.g2,
            gamma: arm.gamma,
            g1: arm.g1,
            g2: arm.g2,
            r: arm.r,
        })
    }

    pub fn b(&self, y: f64) -> f64 {
        self.b0 + self.b1 * y
    }

    fn z(&self, y: f64) -> f64 {
        let b = self.b(y);
        b * b / (4.0 * self.a)
    }

    /// `κ_n(|β|) = ∫ x^{2n}/n! e^{-A x^2 + B x} dx`.
    pub fn kappa(&self, n: usize, y: f64) -> Result<LogScaledValue> {
        let z = self.z(y);
        let nf = n as f64;
        let ln_n_fact = ln_gamma(nf + 1.0);
        let t1 = log_kummer_1f1(nf + 1.0, 1.5, z)?.mul(LogScaledValue::from_f64(z.sqrt()));
        let t2 = log_kummer_1f1(nf + 0.5, 0.5, z)?
            .mul(LogScaledValue::from_ln(ln_gamma(nf + 0.5) - ln_n_fact - 2f64.ln()));
        Ok(t1.add(t2).mul(LogScaledValue::from_ln(-(nf + 0.5) * self.a.ln())))
    }

    /// `κ̃_n(|β|) = ∫ x^{2n-1}/n! e^{-A x^2 + B x} dx`, zero for `n = 0`.
    pub fn kappa_tilde(&self, n: usize, y: f64) -> Result<LogScaledValue> {
        if n == 0 {
            return Ok(LogScaledValue::ZERO);
        }
        let z = self.z(y);
        let nf = n as f64;
        let t1 = log_kummer_1f1(nf + 0.5, 1.5, z)?
            .mul(LogScaledValue::from_ln(0.5 * z.ln() + ln_gamma(nf + 0.5) - ln_gamma(nf + 1.0)));
        let t2 = log_kummer_1f1(nf, 0.5, z)?.mul(LogScaledValue::from_f64(0.5 / nf));
        Ok(t1.add(t2).mul(LogScaledValue::from_ln(-nf * self.a.ln())))
    }

    /// Log of the `|β|` integrand of `⟨n|ρ_E|n⟩ p(✓|a)` without Bob's window.
    pub fn ln_density(&self, n: usize, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let sqrt_t = (1.0 - self.r).sqrt();
        let corr = (self.g1 / self.gamma + self.g2 / (y * sqrt_t)) / 16.0;
        let bracket = self
            .kappa(n, y)?
            .add(self.kappa_tilde(n, y)?.mul(LogScaledValue::from_f64(corr)));
        let ln_pref = n as f64 * self.r.ln()
            - self.gamma * self.gamma / self.g1
            - std::f64::consts::PI.ln()
            - 0.5 * (self.g1 * self.g2 * self.gamma * sqrt_t).ln();
        Ok(ln_pref + 0.5 * y.ln() - y * y / self.g2 + bracket.ln())
    }

    /// Log integrands for `n = 0..out.len()` at one `|β|`, using the
    /// contiguous relations of `1F1` in its first parameter.
    pub fn ln_densities(&self, y: f64, out: &mut [f64]) -> Result<()> {
        if y <= 0.0 {
            out.fill(f64::NEG_INFINITY);
            return Ok(());
        }
        let len = out.len();
        if len == 0 {
            return Ok(());
        }
        let z = self.z(y);
        let ln_a = self.a.ln();
        let sqrt_t = (1.0 - self.r).sqrt();
        let corr = (self.g1 / self.gamma + self.g2 / (y * sqrt_t)) / 16.0;
        let ln_pref = -self.gamma * self.gamma / self.g1
            - std::f64::consts::PI.ln()
            - 0.5 * (self.g1 * self.g2 * self.gamma * sqrt_t).ln()
            + 0.5 * y.ln()
            - y * y / self.g2;
        let f_n1 = kummer_ladder(1.0, 1.5, z, len)?;
        let f_nh = kummer_ladder(0.5, 0.5, z, len)?;
        let (ft_nh, ft_n) = if len > 1 {
            (kummer_ladder(1.5, 1.5, z, len - 1)?, kummer_ladder(1.0, 0.5, z, len - 1)?)
        } else {
            (Vec::new(), Vec::new())
        };
        let ln_half_sqrt_z = 0.5 * z.ln();
        for (n, o) in out.iter_mut().enumerate() {
            let nf = n as f64;
            let ln_nf = ln_gamma(nf + 1.0);
            let lg_half = ln_gamma(nf + 0.5);
            let kappa = LogScaledValue::from_ln(ln_half_sqrt_z + f_n1[n])
                .add(LogScaledValue::from_ln(f_nh[n] + lg_half - ln_nf - 2f64.ln()))
                .mul(LogScaledValue::from_ln(-(nf + 0.5) * ln_a));
            let bracket = if n == 0 {
                kappa
            } else {
                let kt = LogScaledValue::from_ln(ln_half_sqrt_z + lg_half - ln_nf + ft_nh[n - 1])
                    .add(LogScaledValue::from_ln(ft_n[n - 1] - (2.0 * nf).ln()))
                    .mul(LogScaledValue::from_ln(-nf * ln_a));
                kappa.add(kt.mul(LogScaledValue::from_f64(corr)))
            };
            *o = ln_pref + nf * self.r.ln() + bracket.ln();
        }
        Ok(())
    }

    /// Whether both Bessel arguments stay above the switch point over the
    /// bulk of the `|α|` integrand for all `|β| >= y_lo`.
    pub fn in_asymptotic_regime(&self, y_lo: f64) -> bool {
        let x_lo = self.b(y_lo) / (2.0 * self.a) - BULK_SIGMAS / (2.0 * self.a).sqrt();
        x_lo > 0.0 && self.b0 * x_lo >= BESSEL_SWITCH && self.b1 * y_lo * x_lo >= BESSEL_SWITCH
    }
}

/// `ln 1F1(a0 + j, b, z)` for `j = 0..len`, `z > 0`.
///
/// Forward recurrence in `a` is stable here because `1F1` is the dominant
/// solution for positive `z`.
pub(crate) fn kummer_ladder(a0: f64, b: f64, z: f64, len: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return Ok(out);
    }
    out.push(log_kummer_1f1(a0, b, z)?.ln());
    if len == 1 {
        return Ok(out);
    }
    out.push(log_kummer_1f1(a0 + 1.0, b, z)?.ln());
    let mut ratio = (out[1] - out[0]).exp();
    for j in 2..len {
        let a = a0 + (j - 1) as f64;
        // a M(a+1) = (2a - b + z) M(a) + (b - a) M(a-1)
        ratio = ((2.0 * a - b + z) + (b - a) / ratio) / a;
        out.push(out[j - 1] + ratio.ln());
    }
    Ok(out)
}

pub(crate) fn asymptotic(arm: &Arm, w: &Windows, (lo, hi): (f64, f64), opts: AnalysisOptions) -> Result<Analysis> {
    let kern = EveIntegralKernel::new(arm)?;
    let post = Posterior::new(arm);
    let n_max = fock_cutoff(arm.r * post.v, arm.r * (post.a0 + post.k * hi).powi(2))?;
    let mut failure = None;
    let res = integrate_vec(
        |y, out| {
            let f = arm.ln_rician(y).exp();
            let p = w.probs(y);
            let wc = p[0] + p[1];
            out[0] = f * p[0];
            out[1] = f * p[1];
            let rest = &mut out[2..];
            if wc <= 0.0 {
                rest.fill(0.0);
                return;
            }
            if let Err(e) = kern.ln_densities(y, rest) {
                failure.get_or_insert(e);
                rest.fill(0.0);
                return;
            }
            rest.iter_mut().for_each(|o| *o = wc * o.exp());
        },
        n_max + 3,
        lo,
        hi,
        &arm.breakpoints(w),
        opts.quadrature,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    finish(res.values, n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matches_direct_evaluation() {
        for z in [0.3, 7.0, 99.0, 150.0, 2.0e4] {
            for (a0, b) in [(1.0, 1.5), (0.5, 0.5), (1.5, 1.5), (1.0, 0.5)] {
                let lad = kummer_ladder(a0, b, z, 120).unwrap();
                for (j, l) in lad.iter().enumerate() {
                    let direct = log_kummer_1f1(a0 + j as f64, b, z).unwrap().ln();
                    assert!((l - direct).abs() <= 1e-10 * direct.abs().max(1.0), "a0 {a0} b {b} z {z} j {j}: {l} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn batched_densities_match_single_terms() {
        let arm = Arm { gamma: 300.0, g1: 90.0, g2: 90.0, r: 1e-4, c: 300.0 * (1.0f64 - 1e-4).sqrt(), s: 90.0 * (1.0 - 1e-4) + 90.0 };
        let k = EveIntegralKernel::new(&arm).unwrap();
        let mut out = vec![0.0; 40];
        for y in [50.0, 300.0, 700.0] {
            k.ln_densities(y, &mut out).unwrap();
            for (n, l) in out.iter().enumerate() {
                let single = k.ln_density(n, y).unwrap();
                assert!((l - single).abs() < 1e-9 * single.abs().max(1.0), "n {n} y {y}");
            }
        }
    }
}
