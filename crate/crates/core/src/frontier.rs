//! Drawdown protection cost (DDVA) and the protected efficient frontier.
//!
//! Protection is a put on terminal wealth struck at `1 - D`, priced as its
//! expected payoff under the model itself (no risk-neutral measure). Small
//! horizons are priced by exact multinomial enumeration, larger ones by
//! seeded Monte Carlo.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KellyError, Result};
use crate::model::{build_discrete_model, DiscreteModel, GaussianCore, TailSpec};
use crate::numeric::CompensatedSum;
use crate::simulate::{shortfall_mc, FloorKind};

/// Largest number of outcome-count vectors priced by enumeration.
pub const ENUMERATION_LIMIT: u64 = 200_000;

/// Concavity tolerance on second differences.
pub const CONCAVITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DdvaMethod {
    Enumeration,
    MonteCarlo { n_paths: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DdvaQuote {
    pub drawdown_level: f64,
    pub horizon: usize,
    /// Fraction of initial capital.
    pub cost: f64,
    /// Zero for enumeration.
    pub std_error: f64,
    pub method: DdvaMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DdvaOptions {
    pub enumeration_limit: u64,
    pub mc_paths: usize,
    pub seed: u64,
}

impl Default for DdvaOptions {
    fn default() -> Self {
        Self {
            enumeration_limit: ENUMERATION_LIMIT,
            mc_paths: 1_000_000,
            seed: 0,
        }
    }
}

/// `C(n + k - 1, k - 1)`, saturating.
pub fn composition_count(n: usize, k: usize) -> u64 {
    if k == 0 {
        return 0;
    }
    let r = (k - 1) as u64;
    let mut c: u64 = 1;
    for i in 1..=r {
        // c * (n + i) / i stays integral at every step
        match c.checked_mul(n as u64 + i) {
            Some(v) => c = v / i,
            None => return u64::MAX,
        }
    }
    c
}

fn check_inputs(model: &DiscreteModel, f: f64, d: f64, n: usize) -> Result<()> {
    if !(d > 0.0 && d < 1.0) {
        return Err(KellyError::invalid(format!(
            "drawdown level must lie in (0, 1), got {d}"
        )));
    }
    if n == 0 {
        return Err(KellyError::invalid("horizon must be at least 1"));
    }
    model.check_leverage(f).map_err(|e| match e {
        KellyError::DomainViolation { .. } => KellyError::InfeasibleLeverage(f),
        other => other,
    })
}

/// Cost of protecting terminal wealth below `1 - d` after `n` periods.
pub fn ddva(model: &DiscreteModel, f: f64, d: f64, n: usize) -> Result<DdvaQuote> {
    ddva_with(model, f, d, n, &DdvaOptions::default())
}

pub fn ddva_with(model: &DiscreteModel, f: f64, d: f64, n: usize, opts: &DdvaOptions) -> Result<DdvaQuote> {
    if composition_count(n, model.len()) <= opts.enumeration_limit {
        ddva_enumerate(model, f, d, n)
    } else {
        ddva_monte_carlo(model, f, d, n, opts.mc_paths, opts.seed)
    }
}

/// Exact expectation over all outcome-count vectors.
pub fn ddva_enumerate(model: &DiscreteModel, f: f64, d: f64, n: usize) -> Result<DdvaQuote> {
    check_inputs(model, f, d, n)?;
    let strike = 1.0 - d;
    let log_p: Vec<f64> = model.outcomes().iter().map(|o| o.probability.ln()).collect();
    let log_factor: Vec<f64> = model.outcomes().iter().map(|o| (f * o.value).ln_1p()).collect();
    let mut ln_fact = vec![0.0; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let mut total = CompensatedSum::new();
    let mut counts = vec![0usize; model.len()];
    enumerate(&mut counts, 0, n, &mut |c| {
        let mut log_prob = ln_fact[n];
        let mut log_w = 0.0;
        for (i, &ni) in c.iter().enumerate() {
            if ni > 0 {
                log_prob += ni as f64 * log_p[i] - ln_fact[ni];
                log_w += ni as f64 * log_factor[i];
            }
        }
        let payoff = strike - log_w.exp();
        if payoff > 0.0 {
            total.add(log_prob.exp() * payoff);
        }
    });
    Ok(DdvaQuote {
        drawdown_level: d,
        horizon: n,
        cost: total.value().clamp(0.0, 1.0),
        std_error: 0.0,
        method: DdvaMethod::Enumeration,
    })
}

fn enumerate(counts: &mut [usize], pos: usize, remaining: usize, visit: &mut dyn FnMut(&[usize])) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        enumerate(counts, pos + 1, remaining - c, visit);
    }
}

/// Seeded Monte Carlo estimate of the same expectation.
pub fn ddva_monte_carlo(
    model: &DiscreteModel,
    f: f64,
    d: f64,
    n: usize,
    n_paths: usize,
    seed: u64,
) -> Result<DdvaQuote> {
    check_inputs(model, f, d, n)?;
    let est = shortfall_mc(model, f, 1.0 - d, n, n_paths, seed, FloorKind::Terminal)?;
    Ok(DdvaQuote {
        drawdown_level: d,
        horizon: n,
        cost: est.mean,
        std_error: est.std_error,
        method: DdvaMethod::MonteCarlo { n_paths, seed },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub leverage: f64,
    /// `leverage * sigma0`.
    pub volatility: f64,
    /// `leverage` times the model mean, per period.
    pub gross_return: f64,
    /// DDVA amortized per period (`cost / N`).
    pub protection_cost: f64,
    pub financing_cost: f64,
    pub net_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub leverage: f64,
    pub point: Result<FrontierPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierSpec {
    pub mu0: f64,
    pub sigma0: f64,
    pub tails: TailSpec,
    pub drawdown: f64,
    pub horizon: usize,
    /// Financing charge per period on leverage above one.
    pub spread: f64,
    pub leverage_grid: Vec<f64>,
}

/// Protected frontier over `spec.leverage_grid`. Tails are added to the core
/// `(mu0, sigma0)` without recalibration.
pub fn frontier_curve(spec: &FrontierSpec) -> Result<Vec<FrontierRow>> {
    frontier_curve_with(spec, &DdvaOptions::default())
}

/// [`frontier_curve`] with explicit DDVA options (Monte Carlo paths and seed
/// for long horizons).
pub fn frontier_curve_with(spec: &FrontierSpec, opts: &DdvaOptions) -> Result<Vec<FrontierRow>> {
    let core = GaussianCore::new(spec.mu0, spec.sigma0)?;
    if !(spec.spread >= 0.0) {
        return Err(KellyError::invalid("financing spread must be non-negative"));
    }
    if !(spec.drawdown > 0.0 && spec.drawdown < 1.0) || spec.horizon == 0 {
        return Err(KellyError::invalid(
            "drawdown must lie in (0, 1) and horizon be at least 1",
        ));
    }
    let model = build_discrete_model(&core, &spec.tails);
    let mean = model.mean();
    Ok(spec
        .leverage_grid
        .par_iter()
        .map(|&l| FrontierRow {
            leverage: l,
            point: frontier_point(&model, mean, spec, l, opts),
        })
        .collect())
}

fn frontier_point(
    model: &DiscreteModel,
    mean: f64,
    spec: &FrontierSpec,
    l: f64,
    opts: &DdvaOptions,
) -> Result<FrontierPoint> {
    if !(l >= 0.0) {
        return Err(KellyError::invalid(format!("leverage must be non-negative, got {l}")));
    }
    let quote = ddva_with(model, l, spec.drawdown, spec.horizon, opts)?;
    let gross = l * mean;
    let protection = quote.cost / spec.horizon as f64;
    let financing = spec.spread * (l - 1.0).max(0.0);
    Ok(FrontierPoint {
        leverage: l,
        volatility: l * spec.sigma0,
        gross_return: gross,
        protection_cost: protection,
        financing_cost: financing,
        net_return: gross - protection - financing,
    })
}

/// Inputs for the three comparison curves: no tails, symmetric tails and a
/// left tail only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub alpha: f64,
    pub etl: f64,
    pub drawdown: f64,
    pub horizon: usize,
    pub spread: f64,
    pub leverage_grid: Vec<f64>,
}

impl Default for FrontierParams {
    fn default() -> Self {
        Self {
            mu0: 0.06,
            sigma0: 0.15,
            alpha: 0.02,
            etl: 0.30,
            drawdown: 0.10,
            horizon: 1,
            spread: 0.0,
            leverage_grid: (1..=12).map(|i| 0.25 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierSet {
    pub no_tail: Vec<FrontierRow>,
    pub symmetric: Vec<FrontierRow>,
    pub skewed: Vec<FrontierRow>,
}

impl FrontierSet {
    pub fn curves(&self) -> [(&'static str, &[FrontierRow]); 3] {
        [
            ("no_tail", &self.no_tail),
            ("symmetric", &self.symmetric),
            ("skewed", &self.skewed),
        ]
    }
}

pub fn frontier_set(p: &FrontierParams) -> Result<FrontierSet> {
    frontier_set_with(p, &DdvaOptions::default())
}

pub fn frontier_set_with(p: &FrontierParams, opts: &DdvaOptions) -> Result<FrontierSet> {
    let curve = |tails: TailSpec| {
        frontier_curve_with(
            &FrontierSpec {
                mu0: p.mu0,
                sigma0: p.sigma0,
                tails,
                drawdown: p.drawdown,
                horizon: p.horizon,
                spread: p.spread,
                leverage_grid: p.leverage_grid.clone(),
            },
            opts,
        )
    };
    Ok(FrontierSet {
        no_tail: curve(TailSpec::none())?,
        symmetric: curve(TailSpec::symmetric(p.alpha, p.etl)?)?,
        skewed: curve(TailSpec::left(p.alpha, p.etl)?)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub concave: bool,
    /// Largest amount by which a point falls below the chord of its
    /// neighbours (positive means locally convex).
    pub max_second_difference: f64,
}

/// Checks that net return is concave in volatility.
pub fn frontier_concavity_check(points: &[FrontierPoint]) -> Result<ConcavityReport> {
    if points.len() < 3 {
        return Err(KellyError::invalid("concavity check needs at least 3 points"));
    }
    if points.windows(2).any(|w| !(w[1].volatility > w[0].volatility)) {
        return Err(KellyError::invalid("volatility must be strictly increasing"));
    }
    let mut worst = f64::NEG_INFINITY;
    for w in points.windows(3) {
        let (x0, x1, x2) = (w[0].volatility, w[1].volatility, w[2].volatility);
        let t = (x1 - x0) / (x2 - x0);
        let chord = (1.0 - t) * w[0].net_return + t * w[2].net_return;
        worst = worst.max(chord - w[1].net_return);
    }
    Ok(ConcavityReport {
        concave: worst <= CONCAVITY_TOLERANCE,
        max_second_difference: worst,
    })
}

/// Successful points of a curve, in grid order.
pub fn feasible_points(rows: &[FrontierRow]) -> Vec<FrontierPoint> {
    rows.iter().filter_map(|r| r.point.as_ref().ok().copied()).collect()
}
