use serde::{Deserialize, Serialize};

use crate::channels::EffectiveLine;
use crate::error::{Error, Result};
use crate::numerics::{integrate_vec, ProbabilityDistribution};

use super::kernel::{self, EveIntegralKernel};
use super::{bob_row, AnalysisOptions, Arm, PhotonNumberEncoding, Windows};

/// Tail mass allowed beyond the Fock cutoff.
pub const FOCK_TAIL_TOL: f64 = 1e-9;
/// Largest Fock cutoff tried before giving up.
pub const MAX_FOCK_CUTOFF: usize = 1 << 15;

// Below this pre-Eve excess noise Eve's state is taken as Poisson.
const SMALL_G1: f64 = 1e-6;
// Grid step of the phase average, in units of the angular width.
const PHASE_STEP: f64 = 0.7;
const MAX_PHASE_NODES: usize = 4096;

/// How Eve's conditional state is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveMethod {
    /// Asymptotic kernel where its Bessel expansion holds, exact otherwise.
    Auto,
    /// Conditional displaced-thermal mixture integrated over `|β|`.
    #[default]
    Exact,
    /// Two-term Bessel expansion with Kummer kernels.
    Asymptotic,
}

/// Diagonal of a phase-randomized state in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDiagonal {
    pub probs: ProbabilityDistribution,
    /// Largest photon number kept.
    pub truncation: usize,
}

impl FockDiagonal {
    /// Normalizes non-negative masses over `n = 0..len`.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidDistribution("no Fock levels".into()));
        }
        let truncation = masses.len() - 1;
        let masses = masses.into_iter().map(|m| m.max(0.0)).collect();
        Ok(Self {
            probs: ProbabilityDistribution::normalized(masses)?,
            truncation,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            probs: ProbabilityDistribution::new(vec![1.0]).expect("unit mass"),
            truncation: 0,
        }
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.weights().get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs.mean()
    }
}

pub(crate) struct Analysis {
    pub bob: [f64; 2],
    pub state: FockDiagonal,
}

/// Eve's Fock diagonal given bit `a` and a conclusive result at Bob.
pub fn eve_conditional_state(a: usize, enc: &PhotonNumberEncoding, line: &EffectiveLine) -> Result<FockDiagonal> {
    eve_conditional_state_with(a, enc, line, AnalysisOptions::default())
}

pub fn eve_conditional_state_with(
    a: usize,
    enc: &PhotonNumberEncoding,
    line: &EffectiveLine,
    opts: AnalysisOptions,
) -> Result<FockDiagonal> {
    enc.validate()?;
    Ok(analyse(a, enc, line, opts)?.state)
}

pub(crate) fn analyse(a: usize, enc: &PhotonNumberEncoding, line: &EffectiveLine, opts: AnalysisOptions) -> Result<Analysis> {
    let arm = Arm::new(a, enc, line);
    let w = Windows::new(enc);
    let independent = |state: FockDiagonal| -> Result<Analysis> {
        Ok(Analysis {
            bob: bob_row(&arm, &w, opts.quadrature)?,
            state,
        })
    };
    if arm.r == 0.0 {
        return independent(FockDiagonal::vacuum());
    }
    if arm.g1 < SMALL_G1 {
        return independent(displaced_thermal_state(0.0, arm.r * arm.gamma * arm.gamma)?);
    }
    if arm.is_point_mass() {
        return independent(displaced_thermal_state(arm.r * arm.g1, arm.r * arm.gamma * arm.gamma)?);
    }
    let Some(range) = arm.conclusive_range(&w) else {
        return Ok(Analysis {
            bob: [0.0; 2],
            state: FockDiagonal::vacuum(),
        });
    };
    match opts.method {
        EveMethod::Exact => exact(&arm, &w, range, opts),
        EveMethod::Asymptotic => kernel::asymptotic(&arm, &w, range, opts),
        EveMethod::Auto => {
            let asymptotic_ok = EveIntegralKernel::new(&arm).is_ok_and(|k| k.in_asymptotic_regime(range.0));
            if asymptotic_ok {
                kernel::asymptotic(&arm, &w, range, opts)
            } else {
                exact(&arm, &w, range, opts)
            }
        }
    }
}

// Given |β| = y and its phase ψ relative to γ, α is complex normal with
// mean a0 + k·y·e^{iψ} and variance v; ψ itself is von Mises with
// concentration 2cy/s.
pub(crate) struct Posterior {
    pub v: f64,
    pub k: f64,
    pub a0: f64,
}

impl Posterior {
    pub(crate) fn new(arm: &Arm) -> Self {
        Self {
            v: arm.g1 * arm.g2 / arm.s,
            k: (1.0 - arm.r).sqrt() * arm.g1 / arm.s,
            a0: arm.gamma * arm.g2 / arm.s,
        }
    }
}

/// Smallest cutoff whose truncated tail is below `FOCK_TAIL_TOL` for a
/// displaced thermal state with thermal mean `v` and coherent mean `m`.
pub(crate) fn fock_cutoff(v: f64, m: f64) -> Result<usize> {
    let var = v * (v + 1.0) + m * (2.0 * v + 1.0);
    let mut n = (m + v + 12.0 * var.sqrt() + 8.0).ceil() as usize;
    let mut buf = Vec::new();
    loop {
        let len = n.min(MAX_FOCK_CUTOFF) + 1;
        buf.resize(len, 0.0);
        displaced_thermal_into(v, m, &mut buf);
        let tail = 1.0 - buf.iter().sum::<f64>();
        if tail < FOCK_TAIL_TOL {
            return Ok(len - 1);
        }
        if len - 1 >= MAX_FOCK_CUTOFF {
            return Err(Error::Truncation { n_max: len - 1, tail });
        }
        n *= 2;
    }
}

/// Displaced thermal state truncated at its own cutoff.
pub(crate) fn displaced_thermal_state(v: f64, m: f64) -> Result<FockDiagonal> {
    let n = fock_cutoff(v, m)?;
    let mut buf = vec![0.0; n + 1];
    displaced_thermal_into(v, m, &mut buf);
    FockDiagonal::from_masses(buf)
}

/// Photon-number distribution of a displaced thermal state with thermal
/// mean `v` and coherent intensity `m`, written for `n = 0..out.len()`.
pub(crate) fn displaced_thermal_into(v: f64, m: f64, out: &mut [f64]) {
    let inv: Vec<f64> = (1..out.len()).map(|k| 1.0 / k as f64).collect();
    displaced_thermal_with(v, m, &inv, out);
}

// `inv[k] = 1 / (k + 1)`, at least `out.len() - 1` entries.
fn displaced_thermal_with(v: f64, m: f64, inv: &[f64], out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    const BIG: f64 = 1e100;
    let u = v / (1.0 + v);
    let uu = u * u;
    let w = m / ((1.0 + v) * (1.0 + v));
    // S_n = u^n L_n(-m / v(1+v)), held as cur * e^scale
    let mut scale = -m / (1.0 + v) - v.ln_1p();
    let mut factor = scale.exp();
    let (mut prev, mut cur) = (0.0, 1.0);
    out[0] = factor;
    for n in 1..out.len() {
        let k = (n - 1) as f64;
        let next = (((2.0 * k + 1.0) * u + w) * cur - k * uu * prev) * inv[n - 1];
        prev = cur;
        cur = next;
        if cur > BIG {
            prev /= BIG;
            cur /= BIG;
            scale += BIG.ln();
            factor = scale.exp();
        }
        out[n] = if factor.is_normal() {
            cur * factor
        } else if cur > 0.0 {
            (cur.ln() + scale).exp()
        } else {
            0.0
        };
    }
}

// Accumulates E_ψ[p(n)] over the von Mises phase for one |β| node.
struct PhaseAverage {
    pdt: Vec<f64>,
    acc: Vec<f64>,
    inv: Vec<f64>,
}

impl PhaseAverage {
    fn new(len: usize) -> Self {
        Self {
            pdt: vec![0.0; len],
            acc: vec![0.0; len],
            inv: (1..len.max(1)).map(|k| 1.0 / k as f64).collect(),
        }
    }

    fn run(&mut self, big_v: f64, m0: f64, m1: f64, kappa: f64) -> &[f64] {
        let n_max = self.pdt.len() as f64;
        if m1 <= 1e-13 * (1.0 + m0) {
            displaced_thermal_with(big_v, m0, &self.inv, &mut self.acc);
            return &self.acc;
        }
        let k_min = kappa / (1.0 + big_v);
        let k_max = k_min + n_max * m1 / (m0 + m1);
        let psi_max = if k_min <= 15.0 {
            std::f64::consts::PI
        } else {
            2.0 * (15.0 / k_min).sqrt().asin()
        };
        let q = ((psi_max * k_max.sqrt() / PHASE_STEP).ceil() as usize).clamp(2, MAX_PHASE_NODES);
        let h = psi_max / q as f64;
        self.acc.fill(0.0);
        let mut total = 0.0;
        for j in 0..q {
            let psi = (j as f64 + 0.5) * h;
            let cos = psi.cos();
            let wt = (kappa * (cos - 1.0)).exp();
            if wt < 1e-300 {
                continue;
            }
            total += wt;
            displaced_thermal_with(big_v, m0 + m1 * cos, &self.inv, &mut self.pdt);
            for (a, p) in self.acc.iter_mut().zip(&self.pdt) {
                *a += wt * p;
            }
        }
        self.acc.iter_mut().for_each(|a| *a /= total);
        &self.acc
    }
}

fn exact(arm: &Arm, w: &Windows, (lo, hi): (f64, f64), opts: AnalysisOptions) -> Result<Analysis> {
    let post = Posterior::new(arm);
    let big_v = arm.r * post.v;
    let m_max = arm.r * (post.a0 + post.k * hi).powi(2);
    let n_max = fock_cutoff(big_v, m_max)?;
    let mut phase = PhaseAverage::new(n_max + 1);
    let res = integrate_vec(
        |y, out| {
            let f = arm.ln_rician(y).exp();
            let p = w.probs(y);
            let fw = f * (p[0] + p[1]);
            if fw == 0.0 {
                out.fill(0.0);
                return;
            }
            out[0] = f * p[0];
            out[1] = f * p[1];
            let m0 = arm.r * (post.a0 * post.a0 + post.k * post.k * y * y);
            let m1 = 2.0 * arm.r * post.a0 * post.k * y;
            let kappa = 2.0 * arm.c * y / arm.s;
            let avg = phase.run(big_v, m0, m1, kappa);
            for (o, e) in out[2..].iter_mut().zip(avg) {
                *o = fw * e;
            }
        },
        n_max + 3,
        lo,
        hi,
        &arm.breakpoints(w),
        opts.quadrature,
    )?;
    finish(res.values, n_max)
}

/// Splits the stacked `[p(0|a), p(1|a), masses...]` integral into Bob's row
/// and Eve's normalized state.
pub(crate) fn finish(values: Vec<f64>, n_max: usize) -> Result<Analysis> {
    let bob = [values[0].max(0.0), values[1].max(0.0)];
    let pc = bob[0] + bob[1];
    if !(pc > 0.0) {
        return Ok(Analysis {
            bob,
            state: FockDiagonal::vacuum(),
        });
    }
    let masses: Vec<f64> = values[2..].iter().map(|m| m / pc).collect();
    let total: f64 = masses.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Truncation {
            n_max,
            tail: 1.0 - total,
        });
    }
    Ok(Analysis {
        bob,
        state: FockDiagonal::from_masses(masses)?,
    })
}
