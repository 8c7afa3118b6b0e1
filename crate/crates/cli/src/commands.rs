use std::path::Path;

use ampqkd_core::eavesdrop_analysis::{
    holevo_coherent, holevo_phase_randomized, info_collective_photon_number, info_individual_detectors,
};
use ampqkd_core::optimizer::{optimize_encoding, sweep_leak_fraction, worst_case_eve_over};
use ampqkd_core::protocol::{final_key_length, read_key, round_rng, run_protocol, toeplitz_privacy_amplification, write_key};
use ampqkd_core::{
    min_detectable_leakage, split_line, EncodingConfig, KeyFormat, KeyRateBreakdown, LineGeometry,
    NaturalLossScenario, PhaseEncoding, PhotonNumberEncoding, Scheme, SweepMode, ToeplitzSeed,
};
use anyhow::Context;
use serde::Serialize;

use crate::config::{
    self, require, BudgetConfig, GeometryConfig, LossControlConfig, MonteCarloConfig, NaturalLossConfig, PaConfig,
    RunConfig,
};
use crate::failure::{Category, Failure};
use crate::output::{emit, sidecar_path, write_json, Cell, Sidecar, Table};
use crate::{BudgetArgs, Cli, Command, EncodingArgs, GeometryArgs};

pub const RATE_COLUMNS: [&str; 15] = [
    "r_E",
    "D_AE_km",
    "rate",
    "mu0",
    "mu1",
    "theta1",
    "theta2",
    "theta3",
    "theta4",
    "scheme",
    "p_conclusive",
    "i_ab",
    "eve_bound",
    "evaluations",
    "converged",
];

const DEFAULT_ROUNDS: u64 = 100_000;
const DEFAULT_DETECTORS: [u64; 13] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000];
// Keeps the hashing matrix off the streams used by the rounds themselves.
const TOEPLITZ_STREAM: u64 = u64::MAX;

fn schema(msg: impl Into<String>) -> anyhow::Error {
    Failure::new(Category::Schema, msg).into()
}

fn rate_row(
    leak: f64,
    eve_km: f64,
    enc: &EncodingConfig,
    rate: &KeyRateBreakdown,
    evaluations: Option<usize>,
    converged: Option<bool>,
) -> Vec<Cell> {
    let (mu0, mu1, th) = match enc {
        EncodingConfig::PhotonNumber(e) => (e.mu0, e.mu1, e.thresholds.map(Some)),
        EncodingConfig::Phase(e) => {
            let n = e.mean_photons();
            (n, n, [Some(e.theta1p), Some(e.theta2p), None, None])
        }
    };
    let mut row: Vec<Cell> = vec![
        leak.into(),
        eve_km.into(),
        rate.normalized_rate.into(),
        mu0.into(),
        mu1.into(),
    ];
    row.extend(th.map(Cell::from));
    row.extend([
        Cell::Text(enc.scheme().to_string()),
        rate.p_conclusive.into(),
        rate.i_ab.into(),
        rate.eve_bound.into(),
        evaluations.map_or(Cell::Empty, Cell::from),
        converged.map_or(Cell::Empty, Cell::from),
    ]);
    row
}

struct Ctx {
    command: &'static str,
    threads: usize,
}

impl Ctx {
    fn emit(&self, table: &Table, out: Option<&Path>, seed: Option<u64>, resolved: &RunConfig) -> anyhow::Result<()> {
        emit(
            table,
            out,
            &Sidecar {
                command: self.command,
                version: env!("CARGO_PKG_VERSION"),
                core_version: ampqkd_core::VERSION,
                seed,
                threads: self.threads,
                columns: &table.columns,
                config: resolved,
            },
        )
    }
}

fn geometry_flags(a: &GeometryArgs) -> GeometryConfig {
    GeometryConfig {
        span_km: a.span_km,
        eve_position_km: a.eve_km,
        amp_spacing_km: a.spacing_km,
        attenuation_per_km: a.attenuation,
    }
}

fn echo_geometry(g: &LineGeometry) -> GeometryConfig {
    GeometryConfig {
        span_km: Some(g.span_km),
        eve_position_km: Some(g.eve_position_km),
        amp_spacing_km: Some(g.amp_spacing_km),
        attenuation_per_km: Some(g.attenuation_per_km),
    }
}

fn resolve_geometry(cfg: &RunConfig, a: &GeometryArgs) -> anyhow::Result<LineGeometry> {
    cfg.geometry.clone().unwrap_or_default().overlay(&geometry_flags(a)).resolve()
}

fn budget_flags(a: &BudgetArgs) -> BudgetConfig {
    BudgetConfig {
        restarts: a.restarts,
        max_evaluations: a.max_evals,
        tolerance: a.tolerance,
    }
}

fn echo_budget(b: &ampqkd_core::OptimizationBudget) -> BudgetConfig {
    BudgetConfig {
        restarts: Some(b.restarts),
        max_evaluations: Some(b.max_evaluations),
        tolerance: Some(b.tolerance),
    }
}

fn resolve_encoding(cfg: &RunConfig, a: &EncodingArgs) -> anyhow::Result<Option<EncodingConfig>> {
    let photon_flags = a.mu0.is_some() || a.mu1.is_some() || a.thresholds.is_some();
    let phase_flags = a.gamma.is_some() || a.theta1p.is_some() || a.theta2p.is_some();
    if photon_flags && phase_flags {
        return Err(schema("photon-number and phase encoding flags cannot be mixed"));
    }
    let enc = if photon_flags {
        let base = match cfg.encoding {
            Some(EncodingConfig::PhotonNumber(e)) => Some(e),
            _ => None,
        };
        let flag = match a.thresholds.as_deref() {
            None => None,
            Some(&[t1, t2, t3, t4]) => Some([t1, t2, t3, t4]),
            Some(v) => return Err(schema(format!("--thresholds needs 4 values, got {}", v.len()))),
        };
        let thresholds = flag.or(base.map(|e| e.thresholds));
        Some(
            PhotonNumberEncoding::new(
                require(a.mu0.or(base.map(|e| e.mu0)), "encoding.mu0")?,
                require(a.mu1.or(base.map(|e| e.mu1)), "encoding.mu1")?,
                require(thresholds, "encoding.thresholds")?,
            )?
            .into(),
        )
    } else if phase_flags {
        let base = match cfg.encoding {
            Some(EncodingConfig::Phase(e)) => Some(e),
            _ => None,
        };
        Some(
            PhaseEncoding::new(
                require(a.gamma.or(base.map(|e| e.gamma)), "encoding.gamma")?,
                a.theta1p.or(base.map(|e| e.theta1p)).unwrap_or(0.0),
                a.theta2p.or(base.map(|e| e.theta2p)).unwrap_or(f64::INFINITY),
            )?
            .into(),
        )
    } else {
        cfg.encoding
    };
    if let Some(e) = &enc {
        e.validate().context("encoding")?;
    }
    Ok(enc)
}

fn resolve_scheme(cfg: &RunConfig, a: &EncodingArgs, enc: Option<&EncodingConfig>) -> anyhow::Result<Scheme> {
    require(a.scheme.or(cfg.scheme).or(enc.map(|e| e.scheme())), "scheme")
}

fn resolve_leak(cfg: &RunConfig, flag: Option<f64>) -> anyhow::Result<f64> {
    require(flag.or(cfg.leak_fraction), "leak_fraction")
}

fn parse_log_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || schema(format!("log grid `{spec}` must be `from:to:points` with 0 < from <= to, points >= 2"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let from: f64 = parts[0].parse().map_err(|_| bad())?;
    let to: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(from > 0.0 && to >= from && n >= 2) {
        return Err(bad());
    }
    let step = (to / from).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k + 1 == n { to } else { from * (step * k as f64).exp() })
        .collect())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::Keyrate(a) => {
            let ctx = Ctx { command: "keyrate", threads };
            let cfg = config::load(a.common.config.as_deref())?;
            let geom = resolve_geometry(&cfg, &a.geometry)?;
            let leak = resolve_leak(&cfg, a.leak)?;
            let enc = require(resolve_encoding(&cfg, &a.encoding)?, "encoding")?;
            let line = split_line(&geom, leak)?;
            let rate = enc.key_rate(&line)?;
            let mut table = Table::new(&RATE_COLUMNS);
            table.push(rate_row(leak, geom.eve_position_km, &enc, &rate, None, None));
            let out = a.common.out.or(cfg.output);
            let resolved = RunConfig {
                geometry: Some(echo_geometry(&geom)),
                scheme: Some(enc.scheme()),
                leak_fraction: Some(leak),
                encoding: Some(enc),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), None, &resolved)
        }
        Command::Optimize(a) => {
            let ctx = Ctx { command: "optimize", threads };
            let p = &a.point;
            let cfg = config::load(p.common.config.as_deref())?;
            let geom = resolve_geometry(&cfg, &p.geometry)?;
            let leak = resolve_leak(&cfg, p.leak)?;
            let enc = resolve_encoding(&cfg, &p.encoding)?;
            let scheme = resolve_scheme(&cfg, &p.encoding, enc.as_ref())?;
            let budget = cfg.budget.clone().unwrap_or_default().overlay(&budget_flags(&a.budget)).resolve()?;
            let res = optimize_encoding(scheme, &split_line(&geom, leak)?, &budget)?;
            let mut table = Table::new(&RATE_COLUMNS);
            table.push(rate_row(
                leak,
                geom.eve_position_km,
                &res.best_encoding,
                &res.best_rate,
                Some(res.evaluations),
                Some(res.converged),
            ));
            let out = p.common.out.clone().or(cfg.output);
            let resolved = RunConfig {
                geometry: Some(echo_geometry(&geom)),
                scheme: Some(scheme),
                leak_fraction: Some(leak),
                budget: Some(echo_budget(&budget)),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), None, &resolved)?;
            if res.infeasible {
                return Err(Failure::new(
                    Category::Infeasible,
                    format!("no positive key rate at r_E = {leak}; the protocol must terminate"),
                )
                .into());
            }
            Ok(())
        }
        Command::Sweep(a) => {
            let ctx = Ctx { command: "sweep", threads };
            let cfg = config::load(a.common.config.as_deref())?;
            let geom = resolve_geometry(&cfg, &a.geometry)?;
            let grid = match (&a.grid, &a.log_grid) {
                (Some(g), _) => g.clone(),
                (None, Some(spec)) => parse_log_grid(spec)?,
                (None, None) => require(cfg.leak_grid.clone(), "leak_grid")?,
            };
            let enc = resolve_encoding(&cfg, &a.encoding)?;
            let budget = cfg.budget.clone().unwrap_or_default().overlay(&budget_flags(&a.budget)).resolve()?;
            let (mode, scheme) = if a.fixed {
                let enc = require(enc, "encoding")?;
                (SweepMode::Fixed(enc), enc.scheme())
            } else {
                let scheme = resolve_scheme(&cfg, &a.encoding, enc.as_ref())?;
                (SweepMode::Optimize { scheme, budget }, scheme)
            };
            let rows = sweep_leak_fraction(&geom, &grid, mode)?;
            let mut table = Table::new(&RATE_COLUMNS);
            for r in &rows {
                table.push(rate_row(
                    r.leak_fraction,
                    r.eve_position_km,
                    &r.encoding,
                    &r.rate,
                    Some(r.evaluations),
                    Some(r.converged),
                ));
            }
            let out = a.common.out.clone().or(cfg.output);
            let resolved = RunConfig {
                geometry: Some(echo_geometry(&geom)),
                scheme: Some(scheme),
                leak_grid: Some(grid),
                encoding: if a.fixed { enc } else { None },
                budget: (!a.fixed).then(|| echo_budget(&budget)),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), None, &resolved)
        }
        Command::WorstEve(a) => {
            let ctx = Ctx { command: "worst-eve", threads };
            let p = &a.point;
            let cfg = config::load(p.common.config.as_deref())?;
            let geom = resolve_geometry(&cfg, &p.geometry)?;
            let leak = resolve_leak(&cfg, p.leak)?;
            let enc = resolve_encoding(&cfg, &p.encoding)?;
            let scheme = resolve_scheme(&cfg, &p.encoding, enc.as_ref())?;
            let budget = cfg.budget.clone().unwrap_or_default().overlay(&budget_flags(&a.budget)).resolve()?;
            let positions = match a.positions.clone().or(cfg.eve_positions_km.clone()) {
                Some(p) => p,
                None => geom.eve_grid()?,
            };
            let worst = worst_case_eve_over(scheme, &geom, leak, &positions, &budget)?;
            let mut columns = RATE_COLUMNS.to_vec();
            columns.push("worst");
            let mut table = Table::new(&columns);
            for p in &worst.profile {
                let mut row = rate_row(
                    leak,
                    p.eve_position_km,
                    &p.result.best_encoding,
                    &p.result.best_rate,
                    Some(p.result.evaluations),
                    Some(p.result.converged),
                );
                row.push((p.eve_position_km == worst.eve_position_km).into());
                table.push(row);
            }
            let out = p.common.out.clone().or(cfg.output);
            let resolved = RunConfig {
                geometry: Some(echo_geometry(&geom)),
                scheme: Some(scheme),
                leak_fraction: Some(leak),
                eve_positions_km: Some(positions),
                budget: Some(echo_budget(&budget)),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), None, &resolved)
        }
        Command::Montecarlo(a) => {
            let ctx = Ctx { command: "montecarlo", threads };
            let p = &a.point;
            let cfg = config::load(p.common.config.as_deref())?;
            let geom = resolve_geometry(&cfg, &p.geometry)?;
            let leak = resolve_leak(&cfg, p.leak)?;
            let enc = require(resolve_encoding(&cfg, &p.encoding)?, "encoding")?;
            let mc = cfg.montecarlo.clone().unwrap_or_default();
            let rounds = a.rounds.or(mc.rounds).unwrap_or(DEFAULT_ROUNDS);
            let seed = a.seed.or(cfg.seed).unwrap_or(0);
            let key_out = a.key_out.clone().or(mc.key_out);
            let key_format = a.key_format.or(mc.key_format).unwrap_or(KeyFormat::Hex);

            let line = split_line(&geom, leak)?;
            let analytic = enc.key_rate(&line)?;
            let report = run_protocol(rounds, &enc, &line, seed)?;
            let length = final_key_length(rounds, &analytic);
            let emp = report.empirical_probabilities();
            let key_bits = (length.bits as usize).min(report.sifted_alice.len());

            if let Some(path) = &key_out {
                let key = if key_bits == 0 {
                    Vec::new()
                } else {
                    let mut rng = round_rng(seed, TOEPLITZ_STREAM);
                    let toeplitz = ToeplitzSeed::random(report.sifted_alice.len(), key_bits, &mut rng);
                    toeplitz_privacy_amplification(&report.sifted_alice, &toeplitz, key_bits)?
                };
                write_key(path, &key, key_format)?;
            }

            let columns = [
                "r_E",
                "D_AE_km",
                "rounds",
                "sent0",
                "sent1",
                "p00",
                "p01",
                "p10",
                "p11",
                "p_conclusive",
                "p_conclusive_analytic",
                "qber",
                "qber_analytic",
                "bob_mean0",
                "bob_mean1",
                "rate_analytic",
                "final_key_bits",
                "terminated",
            ];
            let mut table = Table::new(&columns);
            table.push(vec![
                leak.into(),
                geom.eve_position_km.into(),
                rounds.into(),
                report.sent[0].into(),
                report.sent[1].into(),
                emp.p[0][0].into(),
                emp.p[0][1].into(),
                emp.p[1][0].into(),
                emp.p[1][1].into(),
                report.p_conclusive().into(),
                analytic.p_conclusive.into(),
                report.qber.into(),
                analytic.probabilities.error_rate().into(),
                report.bob_intensity_mean[0].into(),
                report.bob_intensity_mean[1].into(),
                analytic.normalized_rate.into(),
                (key_bits as u64).into(),
                length.terminated.into(),
            ]);
            let out = p.common.out.clone().or(cfg.output);
            let resolved = RunConfig {
                geometry: Some(echo_geometry(&geom)),
                scheme: Some(enc.scheme()),
                leak_fraction: Some(leak),
                encoding: Some(enc),
                seed: Some(seed),
                montecarlo: Some(MonteCarloConfig {
                    rounds: Some(rounds),
                    key_out,
                    key_format: Some(key_format),
                }),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), Some(seed), &resolved)
        }
        Command::NaturalLoss(a) => {
            let ctx = Ctx { command: "natural-loss", threads };
            let cfg = config::load(a.common.config.as_deref())?;
            let nl = cfg.natural_loss.clone().unwrap_or_default();
            let mut s = NaturalLossScenario::new(
                a.mu0.or(nl.mu0).unwrap_or(9000.0),
                a.mu1.or(nl.mu1).unwrap_or(11000.0),
                a.segment_m.or(nl.segment_length_m).unwrap_or(0.2),
                0,
            );
            if let Some(x) = a.attenuation.or(nl.attenuation_per_km) {
                s.attenuation_per_km = x;
            }
            if let Some(e) = a.efficiency.or(nl.efficiency) {
                s.efficiency = e;
            }
            s.validate()?;
            let detectors = a
                .detectors
                .clone()
                .or(nl.detectors)
                .unwrap_or_else(|| DEFAULT_DETECTORS.to_vec());
            let mut table = Table::new(&[
                "detectors",
                "total_length_m",
                "info_individual",
                "info_collective",
                "holevo_phase_randomized",
                "holevo_coherent",
            ]);
            for &n in &detectors {
                let sn = s.with_detectors(n);
                table.push(vec![
                    n.into(),
                    (n as f64 * s.segment_length_m).into(),
                    info_individual_detectors(&sn)?.into(),
                    info_collective_photon_number(&sn)?.into(),
                    holevo_phase_randomized(&sn)?.into(),
                    holevo_coherent(&sn)?.into(),
                ]);
            }
            let out = a.common.out.clone().or(cfg.output);
            let resolved = RunConfig {
                natural_loss: Some(NaturalLossConfig {
                    mu0: Some(s.mu0),
                    mu1: Some(s.mu1),
                    segment_length_m: Some(s.segment_length_m),
                    attenuation_per_km: Some(s.attenuation_per_km),
                    efficiency: Some(s.efficiency),
                    detectors: Some(detectors),
                }),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), None, &resolved)
        }
        Command::LossControl(a) => {
            let ctx = Ctx { command: "loss-control", threads };
            let cfg = config::load(a.common.config.as_deref())?;
            let lc = cfg.loss_control.clone().unwrap_or_default();
            let amplifiers = a.amplifiers.clone().or(lc.amplifiers).unwrap_or_else(|| vec![20, 800]);
            let gain = a.gain.clone().or(lc.gain).unwrap_or_else(|| vec![10.0]);
            let photons = a.photons.clone().or(lc.photons).unwrap_or_else(|| vec![1e14]);
            let mut table = Table::new(&["amplifiers", "gain", "photons", "r_min"]);
            for &m in &amplifiers {
                for &g in &gain {
                    for &n in &photons {
                        table.push(vec![
                            u64::from(m).into(),
                            g.into(),
                            n.into(),
                            min_detectable_leakage(m, g, n)?.into(),
                        ]);
                    }
                }
            }
            let out = a.common.out.clone().or(cfg.output);
            let resolved = RunConfig {
                loss_control: Some(LossControlConfig {
                    amplifiers: Some(amplifiers),
                    gain: Some(gain),
                    photons: Some(photons),
                }),
                output: out.clone(),
                ..RunConfig::default()
            };
            ctx.emit(&table, out.as_deref(), None, &resolved)
        }
        Command::Pa(a) => {
            let cfg = config::load(a.config.as_deref())?;
            let pc = cfg.pa.clone().unwrap_or_default();
            let input = require(a.input.clone().or(pc.input), "pa.input")?;
            let output = require(a.output.clone().or(pc.output), "pa.output")?;
            let input_format = a.input_format.or(pc.input_format).unwrap_or(KeyFormat::Raw);
            let output_format = a.output_format.or(pc.output_format).unwrap_or(input_format);
            let out_bits = require(a.out_bits.or(pc.out_bits), "pa.out_bits")?;
            let seed = a.seed.or(cfg.seed).unwrap_or(0);

            let raw = read_key(&input, input_format)?;
            if out_bits == 0 || out_bits > raw.len() {
                return Err(schema(format!(
                    "pa.out_bits must lie in 1..={} for this key, got {out_bits}",
                    raw.len()
                )));
            }
            let mut rng = round_rng(seed, TOEPLITZ_STREAM);
            let toeplitz = ToeplitzSeed::random(raw.len(), out_bits, &mut rng);
            let key = toeplitz_privacy_amplification(&raw, &toeplitz, out_bits)?;
            write_key(&output, &key, output_format)?;

            #[derive(Serialize)]
            struct PaMeta<'a> {
                command: &'static str,
                version: &'static str,
                core_version: &'static str,
                seed: u64,
                raw_bits: usize,
                config: &'a RunConfig,
            }
            let resolved = RunConfig {
                seed: Some(seed),
                pa: Some(PaConfig {
                    input: Some(input),
                    input_format: Some(input_format),
                    output: Some(output.clone()),
                    output_format: Some(output_format),
                    out_bits: Some(out_bits),
                }),
                ..RunConfig::default()
            };
            write_json(
                &sidecar_path(&output),
                &PaMeta {
                    command: "pa",
                    version: env!("CARGO_PKG_VERSION"),
                    core_version: ampqkd_core::VERSION,
                    seed,
                    raw_bits: raw.len(),
                    config: &resolved,
                },
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_hits_both_ends() {
        let g = parse_log_grid("1e-6:1e-2:5").unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[4], 1e-2);
        assert!((g[2] - 1e-4).abs() < 1e-16);
        assert!(parse_log_grid("1:0.5:3").is_err());
        assert!(parse_log_grid("1:2").is_err());
    }
}
