//! Monte Carlo for Brownian motion killed at the chamber walls and for the
//! process conditioned never to hit them.
//!
//! Every path draws from its own ChaCha8 stream `(seed, path_index)`, and
//! paths are reduced in fixed-size chunks in index order, so results do not
//! depend on the number of worker threads.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rootsys::{Root, RootSystem};

/// Drift guard: substeps are halved while `|mu| dt > theta * d`.
pub const DEFAULT_THETA: f64 = 0.25;
/// Proposals leaving the chamber are redrawn this many times before the
/// substep is halved.
pub const MAX_REDRAWS: usize = 100;
/// Smallest substep, as a power of two below `dt`.
pub const SUBSTEP_FLOOR_LOG2: i32 = 20;
/// Runs with a larger fraction of invalid conditioned paths fail.
pub const MAX_INVALID_FRACTION: f64 = 1e-3;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub rs: RootSystem,
    pub eta: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Kill with the Brownian-bridge crossing probability between steps.
    pub bridge_correction: bool,
    /// Absorbed runs: cap each step at `kappa * d^2`, `d` the distance to the
    /// nearest wall. Useful for starts close to a corner.
    pub adaptive_kappa: Option<f64>,
    /// Conditioned runs: drift guard parameter.
    pub theta: f64,
}

impl SimConfig {
    pub fn new(rs: RootSystem, eta: Vec<f64>, horizon: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            rs,
            eta,
            horizon,
            dt,
            n_paths,
            seed,
            bridge_correction: true,
            adaptive_kappa: None,
            theta: DEFAULT_THETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta.len() != self.rs.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rs.rank(),
                got: self.eta.len(),
            });
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::NonPositiveTime(self.horizon));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(Error::InvalidInput(format!(
                "dt must lie in (0, horizon], got dt={} horizon={}",
                self.dt, self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidInput("n_paths must be at least 1".into()));
        }
        if self.theta.is_nan() || self.theta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if let Some(k) = self.adaptive_kappa {
            if k.is_nan() || k <= 0.0 {
                return Err(Error::InvalidInput(format!("kappa must be positive, got {k}")));
            }
        }
        Ok(())
    }

    fn dt_min(&self) -> f64 {
        self.dt * 2f64.powi(-SUBSTEP_FLOOR_LOG2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub t: f64,
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)` for direct estimates;
    /// sample standard error of the weights for h-transform estimates.
    pub std_err: f64,
    pub n_paths: usize,
    /// Survivor endpoints (direct estimates at the horizon only).
    #[serde(skip)]
    pub endpoint_samples: Vec<Vec<f64>>,
}

impl SurvivalEstimate {
    fn binomial(t: f64, survivors: usize, n_paths: usize, endpoint_samples: Vec<Vec<f64>>) -> Self {
        let p = survivors as f64 / n_paths as f64;
        Self {
            t,
            p_hat: p,
            std_err: (p * (1.0 - p) / n_paths as f64).sqrt(),
            n_paths,
            endpoint_samples,
        }
    }
}

/// Final state of one simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathOutcome {
    pub index: usize,
    /// Survived to the horizon (absorbed) or stayed valid (conditioned).
    pub survived: bool,
    pub x: Vec<f64>,
}

type DriftFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Drift of a diffusion with identity infinitesimal covariance.
#[derive(Clone)]
pub struct DriftSpec {
    f: Arc<DriftFn>,
}

impl std::fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("DriftSpec")
    }
}

impl DriftSpec {
    /// `mu(x) = grad h / h = sum_{alpha > 0} alpha / (alpha, x)`.
    pub fn conditioned(rs: &RootSystem) -> Self {
        let roots: Vec<Root> = rs.positive_roots().to_vec();
        Self {
            f: Arc::new(move |x, out| {
                out.iter_mut().for_each(|v| *v = 0.0);
                for r in &roots {
                    r.add_scaled(1.0 / r.eval(x), out);
                }
            }),
        }
    }

    pub fn custom<F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static>(f: F) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn chunks(n_paths: usize) -> impl IndexedParallelIterator<Item = std::ops::Range<usize>> {
    let n_chunks = n_paths.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n_paths))
}

fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] <= 0.0 {
        return Err(Error::InvalidInput("time grid must be positive and increasing".into()));
    }
    if *grid.last().unwrap() > horizon {
        return Err(Error::InvalidInput(format!("time grid exceeds horizon {horizon}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Absorbed Brownian motion

struct Walls {
    roots: Vec<(Root, f64)>,
}

impl Walls {
    fn new(rs: &RootSystem) -> Self {
        Self {
            roots: rs
                .simple_roots()
                .iter()
                .map(|r| (*r, 1.0 / r.norm_sq().sqrt()))
                .collect(),
        }
    }

    /// Probability of not touching any wall along a bridge of duration `s`
    /// from `x` to `y`, one wall at a time.
    fn bridge_survival(&self, x: &[f64], y: &[f64], s: f64) -> f64 {
        let mut q = 1.0;
        for (r, inv) in &self.roots {
            let e = 2.0 * r.eval(x) * r.eval(y) * inv * inv / s;
            if e < 40.0 {
                q *= -(-e).exp_m1();
            }
        }
        q
    }
}

/// Runs one absorbed path; returns its exit time (`inf` if it survives) and
/// final position. Steps land exactly on every time in `stops`, the last of
/// which is the horizon, so an exit time never straddles a stop.
fn absorbed_path(cfg: &SimConfig, walls: &Walls, index: usize, stops: &[f64]) -> (f64, Vec<f64>) {
    let mut rng = path_rng(cfg.seed, index);
    let n = cfg.eta.len();
    let mut x = cfg.eta.clone();
    let mut y = vec![0.0; n];
    let floor = cfg.dt_min();
    let mut t = 0.0;
    let mut next = 0;
    while next < stops.len() {
        let remaining = stops[next] - t;
        let mut s = cfg.dt.min(remaining);
        if let Some(kappa) = cfg.adaptive_kappa {
            let d = cfg.rs.distance_to_walls(&x);
            s = s.min((kappa * d * d).max(floor));
        }
        let t_next = if s >= remaining * (1.0 - 1e-12) {
            s = remaining;
            next += 1;
            stops[next - 1]
        } else {
            t + s
        };
        let sq = s.sqrt();
        for (yi, xi) in y.iter_mut().zip(&x) {
            let z: f64 = rng.sample(StandardNormal);
            *yi = xi + sq * z;
        }
        if !cfg.rs.contains_unchecked(&y, true) {
            return (t_next, y);
        }
        if cfg.bridge_correction {
            let q = walls.bridge_survival(&x, &y, s);
            if q < 1.0 && rng.gen::<f64>() >= q {
                return (t_next, y);
            }
        }
        std::mem::swap(&mut x, &mut y);
        t = t_next;
    }
    (f64::INFINITY, x)
}

fn start_on_wall(cfg: &SimConfig) -> Result<bool> {
    if cfg.rs.contains(&cfg.eta, true)? {
        return Ok(false);
    }
    if !cfg.rs.contains(&cfg.eta, false)? {
        return Err(Error::OutsideChamber(format!("eta = {:?}", cfg.eta)));
    }
    log::warn!("eta = {:?} lies on a wall; survival is zero", cfg.eta);
    Ok(true)
}

/// Fraction of paths that stay inside the chamber up to the horizon, with
/// survivor endpoints.
pub fn simulate_absorbed(cfg: &SimConfig) -> Result<SurvivalEstimate> {
    cfg.validate()?;
    if start_on_wall(cfg)? {
        return Ok(SurvivalEstimate::binomial(cfg.horizon, 0, cfg.n_paths, Vec::new()));
    }
    let walls = Walls::new(&cfg.rs);
    let parts: Vec<Vec<Vec<f64>>> = chunks(cfg.n_paths)
        .map(|range| {
            range
                .filter_map(|i| {
                    let (exit, x) = absorbed_path(cfg, &walls, i, &[cfg.horizon]);
                    exit.is_infinite().then_some(x)
                })
                .collect()
        })
        .collect();
    let survivors: Vec<Vec<f64>> = parts.into_iter().flatten().collect();
    Ok(SurvivalEstimate::binomial(
        cfg.horizon,
        survivors.len(),
        cfg.n_paths,
        survivors,
    ))
}

/// Per-path outcomes of an absorbed run (for export).
pub fn absorbed_outcomes(cfg: &SimConfig) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    if start_on_wall(cfg)? {
        return Ok((0..cfg.n_paths)
            .map(|index| PathOutcome {
                index,
                survived: false,
                x: cfg.eta.clone(),
            })
            .collect());
    }
    let walls = Walls::new(&cfg.rs);
    let parts: Vec<Vec<PathOutcome>> = chunks(cfg.n_paths)
        .map(|range| {
            range
                .map(|index| {
                    let (exit, x) = absorbed_path(cfg, &walls, index, &[cfg.horizon]);
                    PathOutcome {
                        index,
                        survived: exit.is_infinite(),
                        x,
                    }
                })
                .collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

/// Direct survival estimates at each grid time from one ensemble of first
/// exit times. Endpoints are attached to the last grid point when it equals
/// the horizon.
pub fn survival_curve(cfg: &SimConfig, grid: &[f64]) -> Result<Vec<SurvivalEstimate>> {
    cfg.validate()?;
    check_grid(grid, cfg.horizon)?;
    if start_on_wall(cfg)? {
        return Ok(grid
            .iter()
            .map(|&t| SurvivalEstimate::binomial(t, 0, cfg.n_paths, Vec::new()))
            .collect());
    }
    let walls = Walls::new(&cfg.rs);
    let mut stops = grid.to_vec();
    if *grid.last().unwrap() < cfg.horizon {
        stops.push(cfg.horizon);
    }
    let parts: Vec<(Vec<usize>, Vec<Vec<f64>>)> = chunks(cfg.n_paths)
        .map(|range| {
            let mut counts = vec![0usize; grid.len()];
            let mut ends = Vec::new();
            for i in range {
                let (exit, x) = absorbed_path(cfg, &walls, i, &stops);
                for (c, &g) in counts.iter_mut().zip(grid) {
                    if exit > g {
                        *c += 1;
                    }
                }
                if exit.is_infinite() {
                    ends.push(x);
                }
            }
            (counts, ends)
        })
        .collect();
    let mut counts = vec![0usize; grid.len()];
    let mut ends = Vec::new();
    for (c, e) in parts {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        ends.extend(e);
    }
    let last = grid.len() - 1;
    let attach = grid[last] == cfg.horizon;
    Ok(grid
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(k, (&t, c))| {
            let e = if attach && k == last {
                std::mem::take(&mut ends)
            } else {
                Vec::new()
            };
            SurvivalEstimate::binomial(t, c, cfg.n_paths, e)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Conditioned process

/// Counters describing how hard the drift guard had to work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub steps: u64,
    pub guard_halvings: u64,
    pub redraws: u64,
}

impl StepStats {
    fn add(&mut self, o: &StepStats) {
        self.steps += o.steps;
        self.guard_halvings += o.guard_halvings;
        self.redraws += o.redraws;
    }
}

struct Stepper<'a> {
    cfg: &'a SimConfig,
    drift: &'a DriftSpec,
    rng: ChaCha8Rng,
    mu: Vec<f64>,
    y: Vec<f64>,
    stats: StepStats,
}

/// A path hit the substep floor without finding an admissible proposal.
struct InvalidPath;

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SimConfig, drift: &'a DriftSpec, index: usize) -> Self {
        let n = cfg.eta.len();
        Self {
            cfg,
            drift,
            rng: path_rng(cfg.seed, index),
            mu: vec![0.0; n],
            y: vec![0.0; n],
            stats: StepStats::default(),
        }
    }

    /// One guarded Euler substep of length at most `s_max`; returns the
    /// length taken.
    fn substep(&mut self, x: &mut Vec<f64>, s_max: f64) -> Result<f64, InvalidPath> {
        let floor = self.cfg.dt_min().min(s_max);
        self.drift.eval_into(x, &mut self.mu);
        let speed = self.mu.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = self.cfg.rs.distance_to_walls(x);
        let mut s = s_max;
        while speed * s > self.cfg.theta * d && s * 0.5 >= floor {
            s *= 0.5;
            self.stats.guard_halvings += 1;
        }
        loop {
            let sq = s.sqrt();
            for _ in 0..MAX_REDRAWS {
                for ((yi, xi), mi) in self.y.iter_mut().zip(x.iter()).zip(&self.mu) {
                    let z: f64 = self.rng.sample(StandardNormal);
                    *yi = xi + mi * s + sq * z;
                }
                if self.cfg.rs.contains_unchecked(&self.y, true) {
                    std::mem::swap(x, &mut self.y);
                    self.stats.steps += 1;
                    return Ok(s);
                }
                self.stats.redraws += 1;
            }
            if s * 0.5 < floor {
                return Err(InvalidPath);
            }
            s *= 0.5;
        }
    }

    /// Advances from `t` to exactly `target`.
    fn advance(&mut self, x: &mut Vec<f64>, t: &mut f64, target: f64) -> Result<(), InvalidPath> {
        while *t < target {
            let remaining = target - *t;
            let s = self.substep(x, self.cfg.dt.min(remaining))?;
            *t = if s >= remaining { target } else { *t + s };
        }
        Ok(())
    }

    /// Runs to the horizon, calling `visit(k, x)` at each stop time.
    fn run<F: FnMut(usize, &[f64])>(&mut self, stops: &[f64], mut visit: F) -> Result<Vec<f64>, InvalidPath> {
        let mut x = self.cfg.eta.clone();
        let mut t = 0.0;
        for (k, &s) in stops.iter().enumerate() {
            self.advance(&mut x, &mut t, s)?;
            visit(k, &x);
        }
        self.advance(&mut x, &mut t, self.cfg.horizon)?;
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedRun {
    pub outcomes: Vec<PathOutcome>,
    pub invalid: usize,
    pub stats: StepStats,
}

impl ConditionedRun {
    /// Endpoints of the valid paths.
    pub fn endpoints(&self) -> Vec<Vec<f64>> {
        self.outcomes
            .iter()
            .filter(|o| o.survived)
            .map(|o| o.x.clone())
            .collect()
    }
}

fn check_conditioned(cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    if !cfg.rs.contains(&cfg.eta, true)? {
        return Err(Error::NotInterior(format!("eta = {:?}", cfg.eta)));
    }
    Ok(())
}

fn check_invalid(invalid: usize, n_paths: usize) -> Result<()> {
    if invalid as f64 > MAX_INVALID_FRACTION * n_paths as f64 {
        return Err(Error::Numeric(format!(
            "{invalid} of {n_paths} conditioned paths hit the substep floor"
        )));
    }
    if invalid > 0 {
        log::warn!("{invalid} of {n_paths} conditioned paths flagged invalid");
    }
    Ok(())
}

/// Euler–Maruyama for `dX = mu(X) dt + dW` with the drift guard; paths never
/// leave the open chamber.
pub fn simulate_conditioned(cfg: &SimConfig, drift: &DriftSpec) -> Result<ConditionedRun> {
    check_conditioned(cfg)?;
    let parts: Vec<(Vec<PathOutcome>, usize, StepStats)> = chunks(cfg.n_paths)
        .map(|range| {
            let mut out = Vec::with_capacity(range.len());
            let mut invalid = 0;
            let mut stats = StepStats::default();
            for index in range {
                let mut stepper = Stepper::new(cfg, drift, index);
                let res = stepper.run(&[], |_, _| {});
                stats.add(&stepper.stats);
                match res {
                    Ok(x) => out.push(PathOutcome {
                        index,
                        survived: true,
                        x,
                    }),
                    Err(InvalidPath) => {
                        invalid += 1;
                        out.push(PathOutcome {
                            index,
                            survived: false,
                            x: vec![f64::NAN; cfg.eta.len()],
                        });
                    }
                }
            }
            (out, invalid, stats)
        })
        .collect();
    let mut run = ConditionedRun {
        outcomes: Vec::with_capacity(cfg.n_paths),
        invalid: 0,
        stats: StepStats::default(),
    };
    for (o, i, s) in parts {
        run.outcomes.extend(o);
        run.invalid += i;
        run.stats.add(&s);
    }
    check_invalid(run.invalid, cfg.n_paths)?;
    Ok(run)
}

/// Records every accepted state of one conditioned path (for diagnostics).
pub fn conditioned_trajectory(cfg: &SimConfig, drift: &DriftSpec, index: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    check_conditioned(cfg)?;
    let mut stepper = Stepper::new(cfg, drift, index);
    let mut x = cfg.eta.clone();
    let mut t = 0.0;
    let mut out = vec![(0.0, x.clone())];
    while t < cfg.horizon {
        let remaining = cfg.horizon - t;
        let s = stepper
            .substep(&mut x, cfg.dt.min(remaining))
            .map_err(|_| Error::Numeric(format!("path {index} hit the substep floor")))?;
        t = if s >= remaining { cfg.horizon } else { t + s };
        out.push((t, x.clone()));
    }
    Ok(out)
}

/// Survival probabilities from conditioned paths via
/// Per-chunk sums, squared sums, valid and invalid counts, step counters.
type WeightSums = (Vec<f64>, Vec<f64>, usize, usize, StepStats);

/// `P_eta(T > t) = h(eta) E^h_eta[1 / h(X_t)]`.
///
/// Each path contributes the weight `h(eta) / h(X_t)` at every grid time.
/// Unlike direct counting, the relative error does not grow as the survival
/// probability shrinks, which makes large horizons reachable.
pub fn h_transform_survival(cfg: &SimConfig, grid: &[f64]) -> Result<(Vec<SurvivalEstimate>, StepStats)> {
    check_conditioned(cfg)?;
    check_grid(grid, cfg.horizon)?;
    let drift = DriftSpec::conditioned(&cfg.rs);
    let ln_h_eta = cfg.rs.ln_abs_h(&cfg.eta);
    let g = grid.len();
    let parts: Vec<WeightSums> = chunks(cfg.n_paths)
        .map(|range| {
            let mut sum = vec![0.0; g];
            let mut sum_sq = vec![0.0; g];
            let mut valid = 0;
            let mut invalid = 0;
            let mut stats = StepStats::default();
            let mut w = vec![0.0; g];
            for index in range {
                let mut stepper = Stepper::new(cfg, &drift, index);
                let res = stepper.run(grid, |k, x| w[k] = (ln_h_eta - cfg.rs.ln_abs_h(x)).exp());
                stats.add(&stepper.stats);
                if res.is_ok() {
                    valid += 1;
                    for k in 0..g {
                        sum[k] += w[k];
                        sum_sq[k] += w[k] * w[k];
                    }
                } else {
                    invalid += 1;
                }
            }
            (sum, sum_sq, valid, invalid, stats)
        })
        .collect();
    let mut sum = vec![0.0; g];
    let mut sum_sq = vec![0.0; g];
    let (mut valid, mut invalid) = (0, 0);
    let mut stats = StepStats::default();
    for (s, q, v, i, st) in parts {
        sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        sum_sq.iter_mut().zip(q).for_each(|(a, b)| *a += b);
        valid += v;
        invalid += i;
        stats.add(&st);
    }
    check_invalid(invalid, cfg.n_paths)?;
    let nv = valid as f64;
    let est = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mean = sum[k] / nv;
            let var = (sum_sq[k] / nv - mean * mean).max(0.0) * nv / (nv - 1.0).max(1.0);
            SurvivalEstimate {
                t,
                p_hat: mean,
                std_err: (var / nv).sqrt(),
                n_paths: valid,
                endpoint_samples: Vec::new(),
            }
        })
        .collect();
    Ok((est, stats))
}

/// Least-squares slope of `ln p` against `ln t`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, p)| *t > 0.0 && *p > 0.0)
        .map(|(t, p)| (t.ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("need two positive points for a slope".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
