//! Seeded Monte Carlo of multiplicative wealth paths at constant leverage.
//!
//! Every path owns a ChaCha8 stream selected by its index under the master
//! seed, and per-path results are reduced in index order. Output is
//! therefore bit-identical for any rayon worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KellyError, Result};
use crate::model::DiscreteModel;
use crate::numeric::{quantile_sorted, CompensatedSum};

pub const DEFAULT_RUIN_FLOOR: f64 = 0.01;

/// Drawdown quantiles reported by [`simulate_paths`].
pub const DRAWDOWN_QUANTILES: [f64; 4] = [0.5, 0.9, 0.95, 0.99];

/// Paths reduced per parallel batch in the streaming estimators.
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub n_periods: usize,
    pub leverage: f64,
    pub ruin_floor: f64,
}

impl SimConfig {
    pub fn new(seed: u64, n_paths: usize, n_periods: usize, leverage: f64) -> Self {
        Self {
            seed,
            n_paths,
            n_periods,
            leverage,
            ruin_floor: DEFAULT_RUIN_FLOOR,
        }
    }

    pub fn with_ruin_floor(mut self, floor: f64) -> Self {
        self.ruin_floor = floor;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_periods == 0 {
            return Err(KellyError::invalid("n_paths and n_periods must be at least 1"));
        }
        if !(self.ruin_floor > 0.0 && self.ruin_floor < 1.0) {
            return Err(KellyError::invalid(format!(
                "ruin floor must lie in (0, 1), got {}",
                self.ruin_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileValue {
    pub quantile: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStats {
    pub n_paths: usize,
    pub n_periods: usize,
    /// Average over paths of `ln(W_N) / N`.
    pub mean_log_growth: f64,
    pub se_log_growth: f64,
    pub median_terminal: f64,
    pub mean_terminal: f64,
    pub se_terminal: f64,
    /// Maximum peak-to-trough drawdown fraction at [`DRAWDOWN_QUANTILES`].
    pub max_drawdown_quantiles: Vec<QuantileValue>,
    pub ruin_fraction: f64,
}

/// Inverse-CDF branch table with precomputed log wealth factors.
struct Sampler {
    cdf: Vec<f64>,
    log_factor: Vec<f64>,
}

impl Sampler {
    fn new(model: &DiscreteModel, f: f64) -> Result<Self> {
        model.check_leverage(f).map_err(|e| match e {
            KellyError::DomainViolation { .. } => KellyError::InfeasibleLeverage(f),
            other => other,
        })?;
        Ok(Self {
            cdf: model.cumulative(),
            log_factor: model.outcomes().iter().map(|o| (f * o.value).ln_1p()).collect(),
        })
    }

    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        let last = self.cdf.len() - 1;
        let k = self.cdf[..last].iter().position(|&c| u < c).unwrap_or(last);
        self.log_factor[k]
    }
}

fn master_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn path_rng(master: &ChaCha8Rng, index: u64) -> ChaCha8Rng {
    let mut rng = master.clone();
    rng.set_stream(index);
    rng.set_word_pos(0);
    rng
}

/// Summary of one path in log-wealth space.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PathSummary {
    log_terminal: f64,
    /// Largest `peak - current` of log wealth.
    max_log_drop: f64,
    min_log: f64,
}

fn run_path(sampler: &Sampler, master: &ChaCha8Rng, index: u64, n: usize) -> PathSummary {
    let mut rng = path_rng(master, index);
    let mut lw = 0.0_f64;
    let mut peak = 0.0_f64;
    let mut drop = 0.0_f64;
    let mut min_log = 0.0_f64;
    for _ in 0..n {
        lw += sampler.draw(&mut rng);
        peak = peak.max(lw);
        drop = drop.max(peak - lw);
        min_log = min_log.min(lw);
    }
    PathSummary {
        log_terminal: lw,
        max_log_drop: drop,
        min_log,
    }
}

fn drop_to_fraction(log_drop: f64) -> f64 {
    -(-log_drop).exp_m1()
}

/// Simulates `cfg.n_paths` paths of `cfg.n_periods` periods.
pub fn simulate_paths(model: &DiscreteModel, cfg: &SimConfig) -> Result<PathStats> {
    cfg.validate()?;
    let sampler = Sampler::new(model, cfg.leverage)?;
    let master = master_rng(cfg.seed);
    let n = cfg.n_periods;
    let paths: Vec<PathSummary> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| run_path(&sampler, &master, i, n))
        .collect();

    let count = paths.len() as f64;
    let mut growth = CompensatedSum::new();
    let mut growth_sq = CompensatedSum::new();
    let mut terminal = CompensatedSum::new();
    let mut terminal_sq = CompensatedSum::new();
    let ruin_log = cfg.ruin_floor.ln();
    let mut ruined = 0usize;
    for p in &paths {
        let g = p.log_terminal / n as f64;
        growth.add(g);
        growth_sq.add(g * g);
        let w = p.log_terminal.exp();
        terminal.add(w);
        terminal_sq.add(w * w);
        if p.min_log <= ruin_log {
            ruined += 1;
        }
    }
    let (mean_g, se_g) = mean_and_se(growth.value(), growth_sq.value(), count);
    let (mean_w, se_w) = mean_and_se(terminal.value(), terminal_sq.value(), count);

    let mut wealth: Vec<f64> = paths.iter().map(|p| p.log_terminal.exp()).collect();
    wealth.sort_by(f64::total_cmp);
    let mut drawdowns: Vec<f64> = paths.iter().map(|p| drop_to_fraction(p.max_log_drop)).collect();
    drawdowns.sort_by(f64::total_cmp);

    Ok(PathStats {
        n_paths: cfg.n_paths,
        n_periods: n,
        mean_log_growth: mean_g,
        se_log_growth: se_g,
        median_terminal: quantile_sorted(&wealth, 0.5),
        mean_terminal: mean_w,
        se_terminal: se_w,
        max_drawdown_quantiles: DRAWDOWN_QUANTILES
            .iter()
            .map(|&q| QuantileValue {
                quantile: q,
                value: quantile_sorted(&drawdowns, q),
            })
            .collect(),
        ruin_fraction: ruined as f64 / count,
    })
}

fn mean_and_se(sum: f64, sum_sq: f64, count: f64) -> (f64, f64) {
    let mean = sum / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0);
    (mean, (var / count).sqrt())
}

/// Maximum-drawdown quantiles at [`DRAWDOWN_QUANTILES`].
pub fn drawdown_distribution(model: &DiscreteModel, cfg: &SimConfig) -> Result<Vec<QuantileValue>> {
    Ok(simulate_paths(model, cfg)?.max_drawdown_quantiles)
}

/// Log-wealth trajectory of a single path, `log_wealth[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathTrace {
    pub log_wealth: Vec<f64>,
    /// Maximum drawdown tracked online while the path was generated.
    pub max_drawdown: f64,
}

/// Regenerates path `index` of a [`simulate_paths`] run and keeps every
/// wealth level.
pub fn trace_path(model: &DiscreteModel, cfg: &SimConfig, index: u64) -> Result<PathTrace> {
    cfg.validate()?;
    let sampler = Sampler::new(model, cfg.leverage)?;
    let master = master_rng(cfg.seed);
    let summary = run_path(&sampler, &master, index, cfg.n_periods);
    let mut rng = path_rng(&master, index);
    let mut lw = 0.0;
    let mut log_wealth = Vec::with_capacity(cfg.n_periods + 1);
    log_wealth.push(0.0);
    for _ in 0..cfg.n_periods {
        lw += sampler.draw(&mut rng);
        log_wealth.push(lw);
    }
    Ok(PathTrace {
        log_wealth,
        max_drawdown: drop_to_fraction(summary.max_log_drop),
    })
}

impl PathTrace {
    pub fn wealth(&self) -> Vec<f64> {
        self.log_wealth.iter().map(|x| x.exp()).collect()
    }
}

/// Maximum drawdown of a stored log-wealth path, computed after the fact.
pub fn max_drawdown_log(log_wealth: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut drop: f64 = 0.0;
    for &lw in log_wealth {
        peak = peak.max(lw);
        drop = drop.max(peak - lw);
    }
    drop_to_fraction(drop)
}

/// Maximum peak-to-trough drawdown of a stored wealth path.
pub fn max_drawdown(wealth: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &w in wealth {
        peak = peak.max(w);
        worst = worst.max(1.0 - w / peak);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverRow {
    pub n_periods: usize,
    pub mean_terminal: f64,
    pub se_terminal: f64,
    pub median_terminal: f64,
    /// `ln(mean) - ln(median)`.
    pub gap: f64,
}

/// Mean versus median terminal wealth over a grid of horizons.
pub fn crossover_diagnostic(
    model: &DiscreteModel,
    f: f64,
    n_periods_grid: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<CrossoverRow>> {
    n_periods_grid
        .iter()
        .map(|&n| {
            let s = simulate_paths(model, &SimConfig::new(seed, n_paths, n, f))?;
            Ok(CrossoverRow {
                n_periods: n,
                mean_terminal: s.mean_terminal,
                se_terminal: s.se_terminal,
                median_terminal: s.median_terminal,
                gap: s.mean_terminal.ln() - s.median_terminal.ln(),
            })
        })
        .collect()
}

/// `n` i.i.d. outcome values drawn from `model`, seeded and reproducible.
pub fn sample_returns(model: &DiscreteModel, n: usize, seed: u64) -> Vec<f64> {
    let cdf = model.cumulative();
    let last = cdf.len() - 1;
    let mut rng = path_rng(&master_rng(seed), 0);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let k = cdf[..last].iter().position(|&c| u < c).unwrap_or(last);
            model.outcomes()[k].value
        })
        .collect()
}

/// Which wealth level a protection floor is struck against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FloorKind {
    /// Wealth at the horizon.
    Terminal,
    /// Lowest wealth reached along the path (barrier-style).
    RunningMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Monte Carlo estimate of `E[max(strike - W, 0)]` with `W` the terminal or
/// running-minimum wealth after `n_periods` periods at leverage `f`.
pub fn shortfall_mc(
    model: &DiscreteModel,
    f: f64,
    strike: f64,
    n_periods: usize,
    n_paths: usize,
    seed: u64,
    kind: FloorKind,
) -> Result<McEstimate> {
    if n_paths == 0 || n_periods == 0 {
        return Err(KellyError::invalid("n_paths and n_periods must be at least 1"));
    }
    let sampler = Sampler::new(model, f)?;
    let master = master_rng(seed);
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut start = 0usize;
    while start < n_paths {
        let end = (start + CHUNK).min(n_paths);
        let payoffs: Vec<f64> = (start as u64..end as u64)
            .into_par_iter()
            .map(|i| {
                let p = run_path(&sampler, &master, i, n_periods);
                let lw = match kind {
                    FloorKind::Terminal => p.log_terminal,
                    FloorKind::RunningMinimum => p.min_log,
                };
                (strike - lw.exp()).max(0.0)
            })
            .collect();
        for x in payoffs {
            sum.add(x);
            sum_sq.add(x * x);
        }
        start = end;
    }
    let (mean, std_error) = mean_and_se(sum.value(), sum_sq.value(), n_paths as f64);
    Ok(McEstimate {
        mean,
        std_error,
        n_paths,
    })
}
