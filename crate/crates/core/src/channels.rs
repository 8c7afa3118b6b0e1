//! Loss and amplification channels, cascade reduction and the two-segment
//! line model seen by a beam-splitting eavesdropper.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default span attenuation exponent `xi` in km^-1 (base-10).
pub const DEFAULT_ATTENUATION_PER_KM: f64 = 0.02;
/// Default distance between neighbouring amplifiers in km.
pub const DEFAULT_AMP_SPACING_KM: f64 = 50.0;

const GT_GUARD: f64 = 1e-9;
const COMPENSATION_TOL: f64 = 1e-9;

/// A loss channel of transmission `t` followed by an amplifier of gain `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPair {
    pub t: f64,
    pub g: f64,
}

impl ChannelPair {
    pub const IDENTITY: Self = Self { t: 1.0, g: 1.0 };

    pub fn new(t: f64, g: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(domain("transmission T", t));
        }
        if !(g >= 1.0) || !g.is_finite() {
            return Err(domain("gain G", g));
        }
        Ok(Self { t, g })
    }

    /// Net intensity transfer `T G`.
    pub fn eta(&self) -> f64 {
        self.t * self.g
    }

    /// Thermal noise added by the pair, `G - 1` photons.
    pub fn excess_noise(&self) -> f64 {
        self.g - 1.0
    }

    /// Maps a mean photon number through the pair.
    pub fn mean_photons(&self, n: f64) -> f64 {
        self.g * self.t * n + self.g - 1.0
    }
}

/// A single pure stage of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stage {
    Loss(f64),
    Amp(f64),
}

impl Stage {
    fn validate(self) -> Result<Self> {
        match self {
            Stage::Loss(t) if !(t > 0.0 && t <= 1.0) => Err(domain("transmission T", t)),
            Stage::Amp(g) if !(g >= 1.0) || !g.is_finite() => Err(domain("gain G", g)),
            s => Ok(s),
        }
    }
}

/// Two losses or two amplifiers in series reduce to one of the same kind.
pub fn compose_same_kind(c1: Stage, c2: Stage) -> Result<Stage> {
    match (c1.validate()?, c2.validate()?) {
        (Stage::Loss(a), Stage::Loss(b)) => Ok(Stage::Loss(a * b)),
        (Stage::Amp(a), Stage::Amp(b)) => Ok(Stage::Amp(a * b)),
        _ => Err(Error::KindMismatch),
    }
}

/// Rewrites `Loss_{T'} ∘ Amp_{G'}` (amplify first) as `Amp_G ∘ Loss_T`.
pub fn commute_amp_then_loss(g_prime: f64, t_prime: f64) -> Result<ChannelPair> {
    if !(g_prime >= 1.0) || !g_prime.is_finite() {
        return Err(domain("gain G'", g_prime));
    }
    if !(t_prime > 0.0 && t_prime <= 1.0) {
        return Err(domain("transmission T'", t_prime));
    }
    let g = (g_prime - 1.0) * t_prime + 1.0;
    let t = g_prime * t_prime / g;
    Ok(ChannelPair { t: t.min(1.0), g })
}

/// Reduces `M` repetitions of (loss `t`, then amplifier `g`) to one pair.
pub fn reduce_chain(m: u32, t: f64, g: f64) -> Result<ChannelPair> {
    let stage = ChannelPair::new(t, g)?;
    if m == 0 {
        return Ok(ChannelPair::IDENTITY);
    }
    let eta = stage.eta();
    let eps = eta - 1.0;
    let mf = f64::from(m);
    // sum_{k<M} eta^k
    let geometric = if eps.abs() < GT_GUARD {
        mf + 0.5 * mf * (mf - 1.0) * eps
    } else {
        (mf * eps.ln_1p()).exp_m1() / eps
    };
    let g0 = 1.0 + (g - 1.0) * geometric;
    let t0 = (mf * eta.ln()).exp() / g0;
    Ok(ChannelPair { t: t0.min(1.0), g: g0 })
}

/// Physical layout of an amplified line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGeometry {
    pub span_km: f64,
    pub eve_position_km: f64,
    pub amp_spacing_km: f64,
    pub attenuation_per_km: f64,
}

impl LineGeometry {
    /// Geometry with the default 50 km spacing and 0.02 km^-1 attenuation.
    pub fn new(span_km: f64, eve_position_km: f64) -> Self {
        Self {
            span_km,
            eve_position_km,
            amp_spacing_km: DEFAULT_AMP_SPACING_KM,
            attenuation_per_km: DEFAULT_ATTENUATION_PER_KM,
        }
    }

    pub fn with_eve_at(self, eve_position_km: f64) -> Self {
        Self {
            eve_position_km,
            ..self
        }
    }

    fn grid_index(&self, km: f64, what: &str) -> Result<u64> {
        let k = km / self.amp_spacing_km;
        let r = k.round();
        if (k - r).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(Error::Geometry(format!(
                "{what} {km} km is not a multiple of the amplifier spacing {} km",
                self.amp_spacing_km
            )));
        }
        Ok(r as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.span_km,
            self.eve_position_km,
            self.amp_spacing_km,
            self.attenuation_per_km,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Geometry("non-finite field".into()));
        }
        if !(self.amp_spacing_km > 0.0) {
            return Err(Error::Geometry(format!(
                "amplifier spacing must be positive, got {}",
                self.amp_spacing_km
            )));
        }
        if !(self.attenuation_per_km > 0.0) {
            return Err(Error::Geometry(format!(
                "attenuation must be positive, got {}",
                self.attenuation_per_km
            )));
        }
        if !(0.0..=self.span_km).contains(&self.eve_position_km) {
            return Err(Error::Geometry(format!(
                "Eve position {} km outside [0, {}] km",
                self.eve_position_km, self.span_km
            )));
        }
        self.grid_index(self.span_km, "span")?;
        self.grid_index(self.eve_position_km, "Eve position")?;
        Ok(())
    }

    /// Amplifier counts before and after Eve.
    pub fn segment_counts(&self) -> Result<(u64, u64)> {
        self.validate()?;
        let total = self.grid_index(self.span_km, "span")?;
        let before = self.grid_index(self.eve_position_km, "Eve position")?;
        Ok((before, total - before))
    }

    /// Per-span transmission `10^(-xi d)`.
    pub fn span_transmission(&self) -> f64 {
        10f64.powf(-self.attenuation_per_km * self.amp_spacing_km)
    }

    /// Amplifier grid positions `{0, d, ..., D_AB}` in km.
    pub fn eve_grid(&self) -> Result<Vec<f64>> {
        let (m1, m2) = self.segment_counts()?;
        Ok((0..=m1 + m2)
            .map(|k| k as f64 * self.amp_spacing_km)
            .collect())
    }
}

/// Reduced pre-Eve and post-Eve channels and the tapped fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLine {
    pub pre_eve: ChannelPair,
    pub post_eve: ChannelPair,
    pub leak_fraction: f64,
}

impl EffectiveLine {
    /// Builds a line in the gain-compensating regime `T = 1/G` on both segments.
    pub fn new(pre_eve: ChannelPair, post_eve: ChannelPair, leak_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&leak_fraction) {
            return Err(domain("leak fraction r_E", leak_fraction));
        }
        for (c, name) in [(pre_eve, "pre-Eve"), (post_eve, "post-Eve")] {
            ChannelPair::new(c.t, c.g)?;
            if (c.eta() - 1.0).abs() > COMPENSATION_TOL {
                return Err(Error::Geometry(format!(
                    "{name} segment is not gain-compensating (T G = {})",
                    c.eta()
                )));
            }
        }
        Ok(Self {
            pre_eve,
            post_eve,
            leak_fraction,
        })
    }

    /// A line given directly by its segment gains.
    pub fn from_gains(g1: f64, g2: f64, leak_fraction: f64) -> Result<Self> {
        Self::new(
            ChannelPair::new(1.0 / g1, g1)?,
            ChannelPair::new(1.0 / g2, g2)?,
            leak_fraction,
        )
    }

    /// Noise-free, lossless line with only the tap.
    pub fn ideal(leak_fraction: f64) -> Result<Self> {
        Self::new(ChannelPair::IDENTITY, ChannelPair::IDENTITY, leak_fraction)
    }

    /// `G1 - 1`.
    pub fn g1(&self) -> f64 {
        self.pre_eve.g - 1.0
    }

    /// `G2 - 1`.
    pub fn g2(&self) -> f64 {
        self.post_eve.g - 1.0
    }

    pub fn with_leak(self, leak_fraction: f64) -> Result<Self> {
        Self::new(self.pre_eve, self.post_eve, leak_fraction)
    }
}

/// Reduces a geometry to the two-segment effective line.
pub fn split_line(geom: &LineGeometry, leak_fraction: f64) -> Result<EffectiveLine> {
    let (m1, m2) = geom.segment_counts()?;
    let per_amp = 10f64.powf(geom.attenuation_per_km * geom.amp_spacing_km) - 1.0;
    let g1 = per_amp * m1 as f64 + 1.0;
    let g2 = per_amp * m2 as f64 + 1.0;
    EffectiveLine::from_gains(g1, g2, leak_fraction)
}

/// Photon-number statistics at the end of an amplified chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonStats {
    pub mean: f64,
    pub std_dev: f64,
    pub secondary_mode_noise: f64,
    pub filter_time_bandwidth: f64,
}

/// Mean, spread and out-of-mode noise after `m` (loss, amplifier) stages.
pub fn output_photon_stats(
    mean_input_photons: f64,
    m: u32,
    t: f64,
    g: f64,
    filter_time_bandwidth: f64,
) -> Result<PhotonStats> {
    if !(mean_input_photons >= 0.0) {
        return Err(domain("input mean photon number", mean_input_photons));
    }
    if !(filter_time_bandwidth >= 0.0) {
        return Err(domain("filter time-bandwidth product", filter_time_bandwidth));
    }
    let c = reduce_chain(m, t, g)?;
    let signal = c.eta() * mean_input_photons;
    let noise = c.g - 1.0;
    let variance = noise * (noise + 1.0) + signal * (2.0 * noise + 1.0);
    Ok(PhotonStats {
        mean: signal + noise,
        std_dev: variance.sqrt(),
        secondary_mode_noise: 2.0 * noise * filter_time_bandwidth,
        filter_time_bandwidth,
    })
}

/// Smallest leak resolvable by a test pulse of `n` photons, `sqrt(M G / n)`.
pub fn min_detectable_leakage(m: u32, g: f64, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(domain("test-pulse photon number", n));
    }
    if !(g >= 1.0) {
        return Err(domain("gain G", g));
    }
    Ok((f64::from(m) * g / n).sqrt())
}
