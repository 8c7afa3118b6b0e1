//! Key-rate analysis, eavesdropper bounds and Monte-Carlo simulation for
//! quantum key distribution over amplified lines with physical loss control.

pub mod channels;
pub mod eavesdrop_analysis;
pub mod encoding;
pub mod error;
pub mod numerics;
pub mod optimizer;
pub mod phase_encoding;
pub mod photon_encoding;
pub mod protocol;
pub mod rate;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use channels::{
    commute_amp_then_loss, compose_same_kind, min_detectable_leakage, output_photon_stats, reduce_chain, split_line,
    ChannelPair, EffectiveLine, LineGeometry, PhotonStats, Stage,
};
pub use eavesdrop_analysis::{
    ClickStatistics, CorrelationReport, DetectorRequirement, NaturalLossScenario,
};
pub use encoding::{BobOutcome, EncodingConfig, Scheme};
pub use error::{Error, Result};
pub use numerics::{LogScaledValue, ProbabilityDistribution};
pub use optimizer::{
    OptimizationBudget, OptimizationResult, SweepMode, SweepPoint, WorstCaseEve,
};
pub use phase_encoding::PhaseEncoding;
pub use photon_encoding::{EveMethod, FockDiagonal, PhotonNumberEncoding};
pub use protocol::{FinalKeyLength, KeyFormat, MonteCarloReport, RoundSample, ToeplitzSeed};
pub use rate::{ConditionalProbabilities, KeyRateBreakdown};
