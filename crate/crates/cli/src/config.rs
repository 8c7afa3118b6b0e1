//! TOML run configuration. Every field is optional; command-line flags win
//! over file values, which win over built-in defaults.

use std::path::{Path, PathBuf};

use ampqkd_core::{EncodingConfig, KeyFormat, LineGeometry, OptimizationBudget, Scheme};
use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::failure::{Category, Failure};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<GeometryConfig>,
    pub scheme: Option<Scheme>,
    pub leak_fraction: Option<f64>,
    pub leak_grid: Option<Vec<f64>>,
    pub eve_positions_km: Option<Vec<f64>>,
    pub encoding: Option<EncodingConfig>,
    pub budget: Option<BudgetConfig>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub montecarlo: Option<MonteCarloConfig>,
    pub natural_loss: Option<NaturalLossConfig>,
    pub loss_control: Option<LossControlConfig>,
    pub pa: Option<PaConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub span_km: Option<f64>,
    pub eve_position_km: Option<f64>,
    pub amp_spacing_km: Option<f64>,
    pub attenuation_per_km: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub restarts: Option<usize>,
    pub max_evaluations: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub rounds: Option<u64>,
    pub key_out: Option<PathBuf>,
    pub key_format: Option<KeyFormat>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaturalLossConfig {
    pub mu0: Option<f64>,
    pub mu1: Option<f64>,
    pub segment_length_m: Option<f64>,
    pub attenuation_per_km: Option<f64>,
    pub efficiency: Option<f64>,
    pub detectors: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossControlConfig {
    pub amplifiers: Option<Vec<u32>>,
    pub gain: Option<Vec<f64>>,
    pub photons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaConfig {
    pub input: Option<PathBuf>,
    pub input_format: Option<KeyFormat>,
    pub output: Option<PathBuf>,
    pub output_format: Option<KeyFormat>,
    pub out_bits: Option<usize>,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(Category::Io, format!("{}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| Failure::new(Category::Schema, format!("{}: {e}", path.display())).into())
}

/// First present value, or a schema failure naming the missing field.
pub fn require<T>(value: Option<T>, field: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| Failure::new(Category::Schema, format!("missing required field `{field}`")).into())
}

impl GeometryConfig {
    pub fn overlay(&self, over: &GeometryConfig) -> GeometryConfig {
        GeometryConfig {
            span_km: over.span_km.or(self.span_km),
            eve_position_km: over.eve_position_km.or(self.eve_position_km),
            amp_spacing_km: over.amp_spacing_km.or(self.amp_spacing_km),
            attenuation_per_km: over.attenuation_per_km.or(self.attenuation_per_km),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<LineGeometry> {
        let span = require(self.span_km, "geometry.span_km")?;
        let mut g = LineGeometry::new(span, self.eve_position_km.unwrap_or(0.0));
        if let Some(d) = self.amp_spacing_km {
            g.amp_spacing_km = d;
        }
        if let Some(x) = self.attenuation_per_km {
            g.attenuation_per_km = x;
        }
        g.validate().context("geometry")?;
        Ok(g)
    }
}

impl BudgetConfig {
    pub fn overlay(&self, over: &BudgetConfig) -> BudgetConfig {
        BudgetConfig {
            restarts: over.restarts.or(self.restarts),
            max_evaluations: over.max_evaluations.or(self.max_evaluations),
            tolerance: over.tolerance.or(self.tolerance),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<OptimizationBudget> {
        let d = OptimizationBudget::default();
        let b = OptimizationBudget {
            restarts: self.restarts.unwrap_or(d.restarts),
            max_evaluations: self.max_evaluations.unwrap_or(d.max_evaluations),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
        };
        b.validate().context("budget")?;
        Ok(b)
    }
}
