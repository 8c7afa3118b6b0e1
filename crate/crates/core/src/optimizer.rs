//! Multi-start simplex search for the encoding that maximizes `L_f / L`,
//! leak-fraction sweeps and the worst-case tap position.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{split_line, EffectiveLine, LineGeometry};
use crate::encoding::{EncodingConfig, Scheme};
use crate::error::{domain, Result};
use crate::phase_encoding::{quadrature_distribution, PhaseEncoding};
use crate::photon_encoding::PhotonNumberEncoding;
use crate::rate::KeyRateBreakdown;

/// Upper window edge used for phase seeds that stand in for `θ'2 = ∞`, in
/// units of Bob's quadrature spread.
const OPEN_WINDOW: f64 = 1e3;
const TIE_TOL: f64 = 1e-12;

/// Restarts and per-restart evaluation cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationBudget {
    pub restarts: usize,
    pub max_evaluations: usize,
    /// Simplex diameter, in scaled coordinates, at which a restart stops.
    pub tolerance: f64,
}

impl Default for OptimizationBudget {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_evaluations: 500,
            tolerance: 1e-3,
        }
    }
}

impl OptimizationBudget {
    pub fn new(restarts: usize, max_evaluations: usize) -> Self {
        Self {
            restarts,
            max_evaluations,
            ..Self::default()
        }
    }

    /// Multiplies both the restart count and the evaluation cap.
    pub fn scaled(self, factor: usize) -> Self {
        Self {
            restarts: self.restarts * factor,
            max_evaluations: self.max_evaluations * factor,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(domain("restart count", self.restarts as f64));
        }
        if self.max_evaluations < 1 {
            return Err(domain("evaluation budget", self.max_evaluations as f64));
        }
        if !(self.tolerance > 0.0) {
            return Err(domain("simplex tolerance", self.tolerance));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_encoding: EncodingConfig,
    pub best_rate: KeyRateBreakdown,
    pub evaluations: usize,
    /// The winning restart met the simplex tolerance.
    pub converged: bool,
    /// No start reached a positive rate.
    pub infeasible: bool,
}

/// Maps scaled search coordinates to an encoding.
trait Space: Sync {
    fn decode(&self, x: &[f64]) -> Option<EncodingConfig>;
    fn seeds(&self) -> Vec<Vec<f64>>;
    fn steps(&self) -> Vec<f64>;
    /// Leading coordinates used to spread restarts over distinct basins.
    fn spread_dims(&self) -> usize;
}

// (ln μ0, ln μ1, y1..y4) with θ1 = h y1², θ3 = θ1 + h y3² and likewise for
// θ2, θ4, where h = (μ1 - μ0) / 2.
struct PhotonSpace;

impl Space for PhotonSpace {
    fn decode(&self, x: &[f64]) -> Option<EncodingConfig> {
        let (mu0, mu1) = (x[0].exp(), x[1].exp());
        if !(mu1 > mu0) {
            return None;
        }
        let h = 0.5 * (mu1 - mu0);
        let mu = 0.5 * (mu0 + mu1);
        let t1 = h * x[2] * x[2];
        let t2 = h * x[3] * x[3];
        let t3 = (t1 + h * x[4] * x[4]).min(mu);
        let t4 = t2 + h * x[5] * x[5];
        PhotonNumberEncoding::new(mu0, mu1, [t1.min(t3), t2, t3, t4])
            .ok()
            .map(Into::into)
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for k in 0..9 {
            let mu = 10f64.powf(2.0 + 0.5 * k as f64);
            for delta in [0.1, 0.25, 0.5, 0.8, 0.999] {
                for inner in [0.05f64, 0.3] {
                    for outer in [0.7f64, 3.0] {
                        let (yi, yo) = (inner.sqrt(), outer.sqrt());
                        out.push(vec![
                            (mu * (1.0 - delta)).ln(),
                            (mu * (1.0 + delta)).ln(),
                            yi,
                            yi,
                            yo,
                            yo,
                        ]);
                    }
                }
            }
        }
        out
    }

    fn steps(&self) -> Vec<f64> {
        vec![0.25, 0.25, 0.3, 0.3, 0.3, 0.3]
    }

    fn spread_dims(&self) -> usize {
        2
    }
}

// (ln γ², y1, y2) with θ'1 = σ y1² and θ'2 = θ'1 + σ y2², σ being Bob's
// quadrature spread on this line.
struct PhaseSpace {
    sigma: f64,
}

impl PhaseSpace {
    fn new(line: &EffectiveLine) -> Self {
        let probe = PhaseEncoding {
            gamma: 1.0,
            theta1p: 0.0,
            theta2p: f64::INFINITY,
        };
        Self {
            sigma: quadrature_distribution(&probe, line).1,
        }
    }
}

impl Space for PhaseSpace {
    fn decode(&self, x: &[f64]) -> Option<EncodingConfig> {
        let gamma = (0.5 * x[0]).exp();
        let t1 = self.sigma * x[1] * x[1];
        let t2 = t1 + self.sigma * x[2] * x[2];
        PhaseEncoding::new(gamma, t1, t2).ok().map(Into::into)
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for k in 0..13 {
            let n = 10f64.powf(1.0 + 0.5 * k as f64);
            for lower in [0.0f64, 0.5, 1.5, 3.0] {
                for width in [2.0f64, 6.0, OPEN_WINDOW] {
                    out.push(vec![n.ln(), lower.sqrt(), width.sqrt()]);
                }
            }
        }
        out
    }

    fn steps(&self) -> Vec<f64> {
        vec![0.25, 0.3, 0.3]
    }

    fn spread_dims(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    encoding: EncodingConfig,
    rate: KeyRateBreakdown,
}

impl Point {
    /// Higher raw rate wins; near-ties go to the cheaper signal.
    fn beats(&self, other: &Point) -> bool {
        let (a, b) = (self.rate.raw_rate, other.rate.raw_rate);
        if (a - b).abs() > TIE_TOL * a.abs().max(b.abs()).max(1e-300) {
            return a > b;
        }
        self.encoding.mean_photons() < other.encoding.mean_photons()
    }
}

fn evaluate(space: &dyn Space, line: &EffectiveLine, x: &[f64]) -> Option<Point> {
    let encoding = space.decode(x)?;
    let rate = encoding.key_rate(line).ok()?;
    rate.raw_rate.is_finite().then_some(Point { encoding, rate })
}

fn cost(p: &Option<Point>) -> f64 {
    p.map_or(f64::INFINITY, |p| -p.rate.raw_rate)
}

struct Restart {
    best: Point,
    evaluations: usize,
    converged: bool,
}

fn nelder_mead(
    space: &dyn Space,
    line: &EffectiveLine,
    start: Vec<f64>,
    start_point: Point,
    budget: &OptimizationBudget,
) -> Restart {
    let n = start.len();
    let steps = space.steps();
    let mut evaluations = 0;
    let eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let p = evaluate(space, line, x);
        (cost(&p), p)
    };

    let mut simplex: Vec<(Vec<f64>, f64, Option<Point>)> = vec![(start.clone(), cost(&Some(start_point)), Some(start_point))];
    for i in 0..n {
        let mut x = start.clone();
        x[i] += steps[i];
        let (f, p) = eval(&x, &mut evaluations);
        simplex.push((x, f, p));
    }

    let mut converged = false;
    while evaluations < budget.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.0.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < budget.tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

        let xr = along(1.0);
        let (fr, pr) = eval(&xr, &mut evaluations);
        if fr < f_best {
            let xe = along(2.0);
            let (fe, pe) = eval(&xe, &mut evaluations);
            simplex[n] = if fe < fr { (xe, fe, pe) } else { (xr, fr, pr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr, pr);
            continue;
        }
        let (xc, (fc, pc)) = if fr < f_worst {
            let xc = along(0.5);
            let v = eval(&xc, &mut evaluations);
            (xc, v)
        } else {
            let xc = along(-0.5);
            let v = eval(&xc, &mut evaluations);
            (xc, v)
        };
        if fc < fr.min(f_worst) {
            simplex[n] = (xc, fc, pc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = v.0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
            let (f, p) = eval(&x, &mut evaluations);
            *v = (x, f, p);
        }
    }

    let mut best = start_point;
    for p in simplex.iter().filter_map(|v| v.2) {
        if p.beats(&best) {
            best = p;
        }
    }
    Restart {
        best,
        evaluations,
        converged,
    }
}

/// Best seeds first, skipping any within `SPREAD` of an earlier pick in the
/// leading coordinates until every basin has one start.
fn pick_starts(sorted: Vec<(Vec<f64>, Point)>, k: usize, dims: usize) -> Vec<(Vec<f64>, Point)> {
    const SPREAD: f64 = 0.5;
    let mut picked: Vec<usize> = Vec::new();
    for (i, (x, _)) in sorted.iter().enumerate() {
        if picked.len() == k {
            break;
        }
        let near = picked.iter().any(|&j| {
            (0..dims).all(|d| (sorted[j].0[d] - x[d]).abs() < SPREAD)
        });
        if !near {
            picked.push(i);
        }
    }
    for i in 0..sorted.len() {
        if picked.len() == k {
            break;
        }
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked.sort_unstable();
    picked.into_iter().map(|i| sorted[i].clone()).collect()
}

fn optimize_in(space: &dyn Space, line: &EffectiveLine, budget: &OptimizationBudget, extra: &[EncodingConfig]) -> Result<OptimizationResult> {
    budget.validate()?;
    let grid = space.seeds();
    let mut evaluations = grid.len() + extra.len();
    let mut seeded: Vec<(Vec<f64>, Point)> = grid
        .into_par_iter()
        .filter_map(|x| evaluate(space, line, &x).map(|p| (x, p)))
        .collect();
    // extra starts are scored as-is and compete with the winner only
    let extra_points: Vec<Point> = extra
        .iter()
        .filter_map(|e| e.key_rate(line).ok().map(|rate| Point { encoding: *e, rate }))
        .collect();

    seeded.sort_by(|a, b| {
        if a.1.beats(&b.1) {
            std::cmp::Ordering::Less
        } else if b.1.beats(&a.1) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let seeded = pick_starts(seeded, budget.restarts, space.spread_dims());

    let restarts: Vec<Restart> = seeded
        .into_par_iter()
        .map(|(x, p)| nelder_mead(space, line, x, p, budget))
        .collect();

    let mut winner: Option<(Point, bool)> = None;
    for r in &restarts {
        evaluations += r.evaluations;
        if winner.is_none_or(|(w, _)| r.best.beats(&w)) {
            winner = Some((r.best, r.converged));
        }
    }
    for p in extra_points {
        if winner.is_none_or(|(w, _)| p.beats(&w)) {
            winner = Some((p, true));
        }
    }
    let (best, converged) = winner.ok_or_else(|| {
        crate::error::Error::Encoding("no admissible starting point on this line".into())
    })?;
    Ok(OptimizationResult {
        best_encoding: best.encoding,
        best_rate: best.rate,
        evaluations,
        converged,
        infeasible: !(best.rate.raw_rate > 0.0),
    })
}

fn space_for(scheme: Scheme, line: &EffectiveLine) -> Box<dyn Space> {
    match scheme {
        Scheme::PhotonNumber => Box::new(PhotonSpace),
        Scheme::Phase => Box::new(PhaseSpace::new(line)),
    }
}

/// Maximizes the key rate over the encoding parameters of `scheme`.
pub fn optimize_encoding(scheme: Scheme, line: &EffectiveLine, budget: &OptimizationBudget) -> Result<OptimizationResult> {
    optimize_in(&*space_for(scheme, line), line, budget, &[])
}

/// As [`optimize_encoding`], with additional candidate encodings that are
/// scored alongside the grid.
pub fn optimize_encoding_from(
    scheme: Scheme,
    line: &EffectiveLine,
    budget: &OptimizationBudget,
    candidates: &[EncodingConfig],
) -> Result<OptimizationResult> {
    let own: Vec<EncodingConfig> = candidates.iter().copied().filter(|c| c.scheme() == scheme).collect();
    optimize_in(&*space_for(scheme, line), line, budget, &own)
}

/// What each sweep point does with the encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMode {
    Optimize { scheme: Scheme, budget: OptimizationBudget },
    Fixed(EncodingConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub leak_fraction: f64,
    pub eve_position_km: f64,
    pub encoding: EncodingConfig,
    pub rate: KeyRateBreakdown,
    pub evaluations: usize,
    pub converged: bool,
}

fn check_sorted(grid: &[f64]) -> Result<()> {
    for w in grid.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(domain("leak grid entry (grid must ascend)", w[1]));
        }
    }
    Ok(())
}

/// Key rate along an ascending grid of tapped fractions.
///
/// With optimization enabled the encoding found at each larger `r_E` is
/// also tried at the smaller ones, so the curve never increases.
pub fn sweep_leak_fraction(geometry: &LineGeometry, grid: &[f64], mode: SweepMode) -> Result<Vec<SweepPoint>> {
    check_sorted(grid)?;
    let lines: Vec<EffectiveLine> = grid
        .iter()
        .map(|&r| split_line(geometry, r))
        .collect::<Result<_>>()?;
    let eve = geometry.eve_position_km;
    match mode {
        SweepMode::Fixed(enc) => lines
            .par_iter()
            .map(|line| {
                Ok(SweepPoint {
                    leak_fraction: line.leak_fraction,
                    eve_position_km: eve,
                    encoding: enc,
                    rate: enc.key_rate(line)?,
                    evaluations: 1,
                    converged: true,
                })
            })
            .collect(),
        SweepMode::Optimize { scheme, budget } => {
            let mut points: Vec<SweepPoint> = lines
                .par_iter()
                .map(|line| {
                    let res = optimize_encoding(scheme, line, &budget)?;
                    Ok(SweepPoint {
                        leak_fraction: line.leak_fraction,
                        eve_position_km: eve,
                        encoding: res.best_encoding,
                        rate: res.best_rate,
                        evaluations: res.evaluations,
                        converged: res.converged,
                    })
                })
                .collect::<Result<_>>()?;
            for i in (0..points.len().saturating_sub(1)).rev() {
                let next = points[i + 1];
                if let Ok(rate) = next.encoding.key_rate(&lines[i]) {
                    points[i].evaluations += 1;
                    if rate.raw_rate > points[i].rate.raw_rate {
                        points[i].encoding = next.encoding;
                        points[i].rate = rate;
                    }
                }
            }
            Ok(points)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvePositionRate {
    pub eve_position_km: f64,
    pub result: OptimizationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseEve {
    pub eve_position_km: f64,
    pub result: OptimizationResult,
    /// Optimized rate at every position tried, in grid order.
    pub profile: Vec<EvePositionRate>,
}

impl WorstCaseEve {
    pub fn rate(&self) -> f64 {
        self.result.best_rate.normalized_rate
    }
}

/// Minimizes the optimized rate over the amplifier positions `{0, d, …, D_AB}`.
pub fn worst_case_eve(
    scheme: Scheme,
    geometry: &LineGeometry,
    leak_fraction: f64,
    budget: &OptimizationBudget,
) -> Result<WorstCaseEve> {
    worst_case_eve_over(scheme, geometry, leak_fraction, &geometry.eve_grid()?, budget)
}

/// As [`worst_case_eve`] over a caller-chosen subset of amplifier positions.
pub fn worst_case_eve_over(
    scheme: Scheme,
    geometry: &LineGeometry,
    leak_fraction: f64,
    positions_km: &[f64],
    budget: &OptimizationBudget,
) -> Result<WorstCaseEve> {
    if positions_km.is_empty() {
        return Err(crate::error::Error::Geometry("no Eve positions given".into()));
    }
    let profile: Vec<EvePositionRate> = positions_km
        .par_iter()
        .map(|&km| {
            let line = split_line(&geometry.with_eve_at(km), leak_fraction)?;
            Ok(EvePositionRate {
                eve_position_km: km,
                result: optimize_encoding(scheme, &line, budget)?,
            })
        })
        .collect::<Result<_>>()?;
    let worst = profile
        .iter()
        .fold(&profile[0], |w, p| {
            if p.result.best_rate.raw_rate < w.result.best_rate.raw_rate {
                p
            } else {
                w
            }
        });
    Ok(WorstCaseEve {
        eve_position_km: worst.eve_position_km,
        result: worst.result,
        profile,
    })
}
