//! Single-asset Kelly leverage: binary bets, the two-point limit, fat-tail
//! closed forms and exact maximization of the log-growth rate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KellyError, Result};
use crate::model::{build_discrete_model, calibrate_center, implied_mean, DiscreteModel, GaussianCore, TailSpec};
use crate::numeric::{compensated_sum, decreasing_root};

/// `|g'(f)|` below which the exact optimizer stops.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-12;

/// Relative inset of the search bracket from the edges of the feasible
/// leverage interval.
const BRACKET_INSET: f64 = 1e-9;

/// Optimal leverage and the per-period geometric growth it earns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KellyPoint {
    pub fraction: f64,
    pub growth: f64,
}

/// Kelly fraction `(b p - q) / b` for a bet paying `b` per unit staked with
/// win probability `p`. Negative values are returned as-is.
pub fn kelly_binary(p: f64, b: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(KellyError::invalid(format!(
            "win probability must lie in (0, 1), got {p}"
        )));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(KellyError::invalid(format!("payout must be positive, got {b}")));
    }
    Ok((b * p - (1.0 - p)) / b)
}

/// Exact optimum of the tail-free two-point model,
/// `f = mu / (sigma^2 - mu^2)`.
pub fn kelly_simple(core: &GaussianCore) -> KellyPoint {
    let (mu, sigma) = (core.mu(), core.sigma());
    let fraction = mu / (sigma * sigma - mu * mu);
    // 1 + f(mu + sigma) = sigma / (sigma - mu) and 1 + f(mu - sigma) = sigma / (sigma + mu)
    let growth = 0.5 * (1.0 + fraction * (mu + sigma)).ln() + 0.5 * (1.0 + fraction * (mu - sigma)).ln();
    KellyPoint { fraction, growth }
}

/// Expected log wealth factor `sum p ln(1 + f v)`.
pub fn growth_at(model: &DiscreteModel, f: f64) -> Result<f64> {
    model.check_leverage(f)?;
    Ok(compensated_sum(
        model.outcomes().iter().map(|o| o.probability * (f * o.value).ln_1p()),
    ))
}

/// First and second derivatives of the growth function in `f`.
/// Caller guarantees `f` is feasible.
pub fn growth_derivatives(model: &DiscreteModel, f: f64) -> (f64, f64) {
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for o in model.outcomes() {
        let r = o.value / (1.0 + f * o.value);
        d1 += o.probability * r;
        d2 -= o.probability * r * r;
    }
    (d1, d2)
}

/// Closed-form leverage and growth with both tails:
///
/// ```text
/// A = 1 + (beta etw - alpha etl) / (mu (1 - alpha - beta))
/// B = 1 + (beta etw^2 + alpha etl^2) / (sigma^2 (1 - alpha - beta))
/// f = (mu / sigma^2) A / B
/// g = (1 - alpha - beta) mu^2 A^2 / (2 sigma^2 B)
/// ```
///
/// Evaluated with `mu A` expanded so `mu == 0` is well defined.
pub fn kelly_fat_closed(core: &GaussianCore, tails: &TailSpec) -> KellyPoint {
    let (mu, var) = (core.mu(), core.variance());
    let mass = tails.core_mass();
    let skew_shift = (tails.beta() * tails.etw() - tails.alpha() * tails.etl()) / mass;
    let convexity =
        1.0 + (tails.beta() * tails.etw() * tails.etw() + tails.alpha() * tails.etl() * tails.etl()) / (var * mass);
    let drift = mu + skew_shift;
    KellyPoint {
        fraction: drift / (var * convexity),
        growth: 0.5 * mass * drift * drift / (var * convexity),
    }
}

/// Left-tail-only closed form, written exactly as the one-sided
/// approximation: `f = (mu/sigma^2) (1 - alpha etl/(mu(1-alpha))) /
/// (1 + alpha etl^2/(sigma^2 (1-alpha)))`.
///
/// Requires `mu != 0`.
pub fn kelly_fat_closed_one_sided(core: &GaussianCore, alpha: f64, etl: f64) -> Result<KellyPoint> {
    let (mu, var) = (core.mu(), core.variance());
    if mu == 0.0 {
        return Err(KellyError::invalid("one-sided closed form needs mu != 0"));
    }
    let impact = 1.0 - alpha * etl / (mu * (1.0 - alpha));
    let convexity = 1.0 + alpha * etl * etl / (var * (1.0 - alpha));
    Ok(KellyPoint {
        fraction: mu / var * impact / convexity,
        growth: mu * mu / (2.0 * var) * (1.0 - alpha) * impact * impact / convexity,
    })
}

/// Options for [`kelly_fat_exact_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Allow negative leverage (shorting). When disabled a negative optimum
    /// is reported as `f = 0`, `g = 0`.
    pub allow_short: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { allow_short: true }
    }
}

/// Exact maximizer of [`growth_at`] over the open feasible interval.
pub fn kelly_fat_exact(model: &DiscreteModel) -> Result<KellyPoint> {
    kelly_fat_exact_with(model, ExactOptions::default())
}

pub fn kelly_fat_exact_with(model: &DiscreteModel, opts: ExactOptions) -> Result<KellyPoint> {
    let (lo, hi) = model.feasible_interval();
    if !lo.is_finite() || !hi.is_finite() {
        return Err(KellyError::NoInteriorMaximum);
    }
    // g' is strictly decreasing and runs from +inf at lo to -inf at hi.
    let mut inset = BRACKET_INSET;
    let (a, b) = loop {
        let width = hi - lo;
        let a = lo + inset * width;
        let b = hi - inset * width;
        if growth_derivatives(model, a).0 > 0.0 && growth_derivatives(model, b).0 < 0.0 {
            break (a, b);
        }
        inset *= 1e-3;
        if inset < f64::EPSILON {
            return Err(KellyError::NoInteriorMaximum);
        }
    };
    let fraction = decreasing_root(a, b, DERIVATIVE_TOLERANCE, |f| growth_derivatives(model, f));
    if fraction < 0.0 && !opts.allow_short {
        return Ok(KellyPoint {
            fraction: 0.0,
            growth: 0.0,
        });
    }
    Ok(KellyPoint {
        fraction,
        growth: growth_at(model, fraction)?,
    })
}

/// How the center of the distribution is chosen along an ETL sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepMode {
    /// `(mu, sigma)` of the core are held fixed while the tail grows.
    FixedCenter,
    /// Observed moments `(mu0, sigma0)` are held fixed and the core is
    /// recalibrated at each tail size.
    Recalibrated,
}

/// One grid point of an ETL sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub mu: f64,
    pub sigma: f64,
    pub f_closed: f64,
    pub f_exact: f64,
    pub g_closed: f64,
    pub g_exact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub etl: f64,
    pub point: Result<SweepPoint>,
}

/// Closed-form and exact Kelly points along a grid of tail-loss sizes.
///
/// In [`SweepMode::FixedCenter`] `(mu0, sigma0)` are the core parameters; in
/// [`SweepMode::Recalibrated`] they are the observed moments the full model
/// must keep. Rows that cannot be built carry their error.
pub fn etl_sweep(mu0: f64, sigma0: f64, alpha: f64, etl_grid: &[f64], mode: SweepMode) -> Vec<SweepRow> {
    etl_grid
        .par_iter()
        .map(|&etl| SweepRow {
            etl,
            point: sweep_point(mu0, sigma0, alpha, etl, mode),
        })
        .collect()
}

fn sweep_point(mu0: f64, sigma0: f64, alpha: f64, etl: f64, mode: SweepMode) -> Result<SweepPoint> {
    let tails = TailSpec::left(alpha, etl)?;
    let core = match mode {
        SweepMode::FixedCenter => GaussianCore::new(mu0, sigma0)?,
        SweepMode::Recalibrated => calibrate_center(mu0, sigma0, alpha, etl)?,
    };
    let model = build_discrete_model(&core, &tails);
    let closed = kelly_fat_closed(&core, &tails);
    let exact = kelly_fat_exact(&model)?;
    Ok(SweepPoint {
        mu: core.mu(),
        sigma: core.sigma(),
        f_closed: closed.fraction,
        f_exact: exact.fraction,
        g_closed: closed.growth,
        g_exact: exact.growth,
    })
}

/// Evenly spaced grid `start, ..., stop` with `steps` intervals.
pub fn linear_grid(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![start];
    }
    (0..=steps)
        .map(|i| start + (stop - start) * i as f64 / steps as f64)
        .collect()
}

/// Tail impact parameter `2 alpha etl / (mu (1 - alpha))`. Above one the
/// leading-order tail correction flips the sign of the leverage.
pub fn tail_impact(core: &GaussianCore, tails: &TailSpec) -> Result<f64> {
    if tails.alpha() == 0.0 {
        return Ok(0.0);
    }
    if core.mu() <= 0.0 {
        return Err(KellyError::invalid("tail impact is defined for mu > 0"));
    }
    Ok(2.0 * tails.alpha() * tails.etl() / (core.mu() * (1.0 - tails.alpha())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArithmeticGrowth {
    /// First moment `(1 - alpha - beta) mu + beta etw - alpha etl`.
    pub expected_return: f64,
    /// `mu - sigma^2 / 2`: log drift of the core held at unit leverage.
    pub log_drift: f64,
}

pub fn arithmetic_growth(core: &GaussianCore, tails: &TailSpec) -> ArithmeticGrowth {
    ArithmeticGrowth {
        expected_return: implied_mean(core, tails),
        log_drift: core.mu() - 0.5 * core.variance(),
    }
}

/// Derivatives of the optimal growth rate with respect to volatility and the
/// factor `Z_g = -dg*/dsigma + 2 sigma d^2g*/dsigma^2` that maps volatility
/// skew and convexity onto growth skew and convexity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthSensitivity {
    pub dg_dsigma: f64,
    pub d2g_dsigma2: f64,
    pub zg: f64,
}

impl GrowthSensitivity {
    /// `(Skew_g, Convexity_g) = Z_g (Skew_sigma, Convexity_sigma)`.
    pub fn map_skew_convexity(&self, skew_sigma: f64, convexity_sigma: f64) -> (f64, f64) {
        (self.zg * skew_sigma, self.zg * convexity_sigma)
    }

    pub fn zg_positive(&self) -> bool {
        self.zg > 0.0
    }
}

/// Default relative finite-difference step.
pub const SENSITIVITY_STEP: f64 = 1e-4;

/// Central finite differences of `g(sigma)` at `sigma` with step
/// `rel_step * sigma`.
pub fn sensitivity_of<G: Fn(f64) -> f64>(g: G, sigma: f64, rel_step: f64) -> GrowthSensitivity {
    let h = rel_step * sigma;
    let (gm, g0, gp) = (g(sigma - h), g(sigma), g(sigma + h));
    let dg_dsigma = (gp - gm) / (2.0 * h);
    let d2g_dsigma2 = (gp - 2.0 * g0 + gm) / (h * h);
    GrowthSensitivity {
        dg_dsigma,
        d2g_dsigma2,
        zg: -dg_dsigma + 2.0 * sigma * d2g_dsigma2,
    }
}

/// Sensitivity of the exact tail-free optimal growth `g*(sigma)` at fixed
/// `mu`.
pub fn growth_sensitivity(core: &GaussianCore) -> Result<GrowthSensitivity> {
    growth_sensitivity_with_step(core, SENSITIVITY_STEP)
}

pub fn growth_sensitivity_with_step(core: &GaussianCore, rel_step: f64) -> Result<GrowthSensitivity> {
    let mu = core.mu();
    let sigma_low = core.sigma() * (1.0 - rel_step);
    // the shifted cores must stay valid
    GaussianCore::new(mu, sigma_low)?;
    Ok(sensitivity_of(
        |s| {
            let c = GaussianCore::new(mu, s).expect("checked above");
            kelly_simple(&c).growth
        },
        core.sigma(),
        rel_step,
    ))
}

/// Result of compounding a fixed sequence of bet outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioResult {
    /// Final wealth as a multiple of initial wealth.
    pub multiple: f64,
    /// Per-bet log growth `ln(multiple) / bets`.
    pub growth_rate: f64,
    pub bets: u64,
}

/// Compounds `count` bets of each `outcome` (per unit staked) at fraction
/// `f`. Order does not matter.
pub fn scenario_growth(spec: &[(u64, f64)], f: f64) -> Result<ScenarioResult> {
    let mut log_wealth = 0.0;
    let mut bets = 0u64;
    for &(count, outcome) in spec {
        let factor = 1.0 + f * outcome;
        if factor <= 0.0 {
            return Err(KellyError::DomainViolation {
                leverage: f,
                outcome,
                factor,
            });
        }
        log_wealth += count as f64 * factor.ln();
        bets += count;
    }
    Ok(ScenarioResult {
        multiple: log_wealth.exp(),
        growth_rate: if bets == 0 { 0.0 } else { log_wealth / bets as f64 },
        bets,
    })
}

/// The 100 even bets example: 60 wins and 40 losses, optionally with a
/// triple-size tail loss and/or tail win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BrownCase {
    Base,
    TailLoss,
    TailWin,
    BothTails,
}

impl BrownCase {
    pub const ALL: [BrownCase; 4] = [
        BrownCase::Base,
        BrownCase::TailLoss,
        BrownCase::TailWin,
        BrownCase::BothTails,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            BrownCase::Base => "base",
            BrownCase::TailLoss => "TL",
            BrownCase::TailWin => "TW",
            BrownCase::BothTails => "BT",
        }
    }
}

/// How a tail bet enters the 100-bet run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScenarioConvention {
    /// The tail bet replaces one ordinary bet of the same sign; 100 bets total.
    Replacement,
    /// The tail bet is added on top of the 100 ordinary bets.
    Append,
}

pub fn brown_scenario(case: BrownCase, convention: ScenarioConvention) -> Vec<(u64, f64)> {
    let (tail_loss, tail_win) = match case {
        BrownCase::Base => (false, false),
        BrownCase::TailLoss => (true, false),
        BrownCase::TailWin => (false, true),
        BrownCase::BothTails => (true, true),
    };
    let replace = convention == ScenarioConvention::Replacement;
    let wins = if tail_win && replace { 59 } else { 60 };
    let losses = if tail_loss && replace { 39 } else { 40 };
    let mut spec = vec![(wins, 1.0), (losses, -1.0)];
    if tail_win {
        spec.push((1, 3.0));
    }
    if tail_loss {
        spec.push((1, -3.0));
    }
    spec
}
