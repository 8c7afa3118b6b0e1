mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use ampqkd_core::{KeyFormat, Scheme};
use clap::{Args, Parser, Subcommand};

use failure::{categorize, Category};

/// Key rates, eavesdropper bounds and protocol simulation for QKD over
/// amplified lines.
#[derive(Debug, Parser)]
#[command(name = "ampqkd", version)]
pub struct Cli {
    /// Worker threads; all cores when unset.
    #[arg(long, global = true, env = "AMPQKD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate of one encoding at one point.
    Keyrate(PointArgs),
    /// Optimize the encoding at one point.
    Optimize(OptimizeArgs),
    /// Key rate over a grid of tapped fractions.
    Sweep(SweepArgs),
    /// Optimized rate at every amplifier position and the worst one.
    WorstEve(WorstEveArgs),
    /// Sampled protocol rounds against the analytic tables.
    Montecarlo(MonteCarloArgs),
    /// Eve's information from natural fibre loss versus detector count.
    NaturalLoss(NaturalLossArgs),
    /// Minimal detectable leak for amplifier chains.
    LossControl(LossControlArgs),
    /// Toeplitz hashing of a key file.
    Pa(PaArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV destination; a JSON sidecar is written next to it. Stdout when unset.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Alice-Bob distance.
    #[arg(long)]
    pub span_km: Option<f64>,
    /// Alice-Eve distance.
    #[arg(long)]
    pub eve_km: Option<f64>,
    #[arg(long)]
    pub spacing_km: Option<f64>,
    /// Base-10 attenuation per km.
    #[arg(long)]
    pub attenuation: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodingArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    /// θ1,θ2,θ3,θ4 in photons.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta1p: Option<f64>,
    #[arg(long)]
    pub theta2p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Evaluation cap per restart.
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    /// Tapped fraction r_E.
    #[arg(long)]
    pub leak: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Ascending r_E values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Logarithmic grid `from:to:points`.
    #[arg(long, conflicts_with = "grid")]
    pub log_grid: Option<String>,
    /// Evaluate the given encoding instead of optimizing.
    #[arg(long)]
    pub fixed: bool,
}

#[derive(Debug, Args)]
pub struct WorstEveArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Subset of amplifier positions; the full grid when unset.
    #[arg(long, value_delimiter = ',')]
    pub positions: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the privacy-amplified key here.
    #[arg(long)]
    pub key_out: Option<PathBuf>,
    #[arg(long, value_parser = parse_key_format)]
    pub key_format: Option<KeyFormat>,
}

#[derive(Debug, Args)]
pub struct NaturalLossArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Fibre length per detector tap, metres.
    #[arg(long)]
    pub segment_m: Option<f64>,
    #[arg(long)]
    pub attenuation: Option<f64>,
    #[arg(long)]
    pub efficiency: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct LossControlArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub amplifiers: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub gain: Option<Vec<f64>>,
    /// Photons per test pulse.
    #[arg(long, value_delimiter = ',')]
    pub photons: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PaArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_key_format)]
    pub input_format: Option<KeyFormat>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_parser = parse_key_format)]
    pub output_format: Option<KeyFormat>,
    /// Output key length in bits.
    #[arg(long)]
    pub out_bits: Option<usize>,
    /// Seed for the public Toeplitz matrix.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "photon-number" => Ok(Scheme::PhotonNumber),
        "phase" => Ok(Scheme::Phase),
        _ => Err(format!("unknown scheme `{s}` (photon-number | phase)")),
    }
}

fn parse_key_format(s: &str) -> Result<KeyFormat, String> {
    match s {
        "raw" => Ok(KeyFormat::Raw),
        "hex" => Ok(KeyFormat::Hex),
        _ => Err(format!("unknown key format `{s}` (raw | hex)")),
    }
}

fn report(category: Category, message: &str) -> ExitCode {
    let line = serde_json::json!({ "category": category, "message": message });
    eprintln!("error: {message}");
    eprintln!("{line}");
    ExitCode::from(category.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return report(Category::Schema, &e.kind().to_string());
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report(Category::Runtime, &e.to_string());
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(categorize(&e), &format!("{e:#}")),
    }
}
