//! Per-command arguments.
//!
//! Every `*Args` struct is filled both from command-line flags and from the
//! matching `[section]` of the config file (flags win). Its `resolve` method
//! applies defaults and returns the concrete `*Params` used by the command.

use std::cmp::Ordering;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn required<T>(value: Option<T>, name: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::invalid(format!("missing required parameter '{name}'")))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleArgs {
    /// Core mean per period
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Core volatility per period
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Tail-loss probability
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Tail-loss size (fraction of capital)
    #[arg(long)]
    pub etl: Option<f64>,
    /// Tail-win probability
    #[arg(long)]
    pub beta: Option<f64>,
    /// Tail-win size
    #[arg(long)]
    pub etw: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleParams {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub etl: f64,
    pub beta: f64,
    pub etw: f64,
}

impl SingleArgs {
    pub fn resolve(self) -> CliResult<SingleParams> {
        Ok(SingleParams {
            mu: required(self.mu, "mu")?,
            sigma: required(self.sigma, "sigma")?,
            alpha: self.alpha.unwrap_or(0.0),
            etl: self.etl.unwrap_or(0.0),
            beta: self.beta.unwrap_or(0.0),
            etw: self.etw.unwrap_or(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepModeArg {
    /// Hold the core (mu0, sigma0) fixed
    Fixed,
    /// Recalibrate the core so the full model keeps moments (mu0, sigma0)
    Recalibrated,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub etl_min: Option<f64>,
    #[arg(long)]
    pub etl_max: Option<f64>,
    /// Number of grid intervals
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<SweepModeArg>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub alpha: f64,
    pub etl_min: f64,
    pub etl_max: f64,
    pub steps: usize,
    pub mode: SweepModeArg,
}

impl SweepArgs {
    pub fn resolve(self) -> CliResult<SweepParams> {
        let p = SweepParams {
            mu0: required(self.mu0, "mu0")?,
            sigma0: required(self.sigma0, "sigma0")?,
            alpha: required(self.alpha, "alpha")?,
            etl_min: self.etl_min.unwrap_or(0.0),
            etl_max: required(self.etl_max, "etl_max")?,
            steps: self.steps.unwrap_or(40),
            mode: self.mode.unwrap_or(SweepModeArg::Fixed),
        };
        if p.steps == 0 || p.etl_max.partial_cmp(&p.etl_min) != Some(Ordering::Greater) || p.etl_min < 0.0 {
            return Err(CliError::invalid("sweep needs 0 <= etl_min < etl_max and steps >= 1"));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentArg {
    None,
    Coaligned,
    Opposed,
    Independent,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityArgs {
    /// Excess returns M, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub premiums: Option<Vec<f64>>,
    /// Covariance C, row-major, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub covariance: Option<Vec<f64>>,
    /// Volatilities (alternative to --covariance, with --correlation)
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Correlation matrix, row-major
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub correlation: Option<Vec<f64>>,
    /// Two-asset tail relation for the joint fat-tail optimization
    #[arg(long, value_enum)]
    pub alignment: Option<AlignmentArg>,
    /// Per-asset tail-loss probabilities (independent alignment)
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Per-asset tail-loss sizes
    #[arg(long, value_delimiter = ',')]
    pub etl: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub etw: Option<Vec<f64>>,
    /// Probability of the joint tail event (coaligned or opposed)
    #[arg(long)]
    pub joint_alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityParams {
    pub premiums: Vec<f64>,
    pub covariance: Vec<f64>,
    pub alignment: AlignmentArg,
    pub alpha: Vec<f64>,
    pub etl: Vec<f64>,
    pub beta: Vec<f64>,
    pub etw: Vec<f64>,
    pub joint_alpha: f64,
}

impl ParityArgs {
    pub fn resolve(self) -> CliResult<ParityParams> {
        let premiums = required(self.premiums, "premiums")?;
        let n = premiums.len();
        let covariance = match (self.covariance, self.sigmas, self.correlation) {
            (Some(c), None, None) => c,
            (None, Some(s), Some(r)) => {
                if s.len() != n || r.len() != n * n {
                    return Err(CliError::invalid("sigmas/correlation sizes do not match premiums"));
                }
                (0..n * n).map(|k| r[k] * s[k / n] * s[k % n]).collect()
            }
            _ => {
                return Err(CliError::invalid(
                    "give either 'covariance' or both 'sigmas' and 'correlation'",
                ))
            }
        };
        let per_asset = |v: Option<Vec<f64>>, name: &str| -> CliResult<Vec<f64>> {
            let v = v.unwrap_or_else(|| vec![0.0; n]);
            if v.len() != n {
                return Err(CliError::invalid(format!("'{name}' needs {n} entries")));
            }
            Ok(v)
        };
        Ok(ParityParams {
            premiums,
            covariance,
            alignment: self.alignment.unwrap_or(AlignmentArg::None),
            alpha: per_asset(self.alpha, "alpha")?,
            etl: per_asset(self.etl, "etl")?,
            beta: per_asset(self.beta, "beta")?,
            etw: per_asset(self.etw, "etw")?,
            joint_alpha: self.joint_alpha.unwrap_or(0.0),
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub etl: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub etw: Option<f64>,
    /// Constant leverage; defaults to the exact Kelly fraction
    #[arg(long, allow_hyphen_values = true)]
    pub leverage: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub periods: Option<usize>,
    /// Wealth level counted as ruin
    #[arg(long)]
    pub ruin_floor: Option<f64>,
    /// Horizons for the mean-versus-median diagnostic, comma separated
    #[arg(long, value_delimiter = ',')]
    pub crossover: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateParams {
    pub model: SingleParams,
    pub leverage: Option<f64>,
    pub paths: usize,
    pub periods: usize,
    pub ruin_floor: f64,
    pub crossover: Vec<usize>,
}

impl SimulateArgs {
    pub fn resolve(self) -> CliResult<SimulateParams> {
        Ok(SimulateParams {
            model: SingleArgs {
                mu: self.mu,
                sigma: self.sigma,
                alpha: self.alpha,
                etl: self.etl,
                beta: self.beta,
                etw: self.etw,
            }
            .resolve()?,
            leverage: self.leverage,
            paths: self.paths.unwrap_or(10_000),
            periods: self.periods.unwrap_or(1_000),
            ruin_floor: self.ruin_floor.unwrap_or(kelly_tails::simulate::DEFAULT_RUIN_FLOOR),
            crossover: self.crossover.unwrap_or_default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetArg {
    /// 100 even bets: 60 wins and 40 losses, with tail variants
    Brown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionArg {
    Replacement,
    Append,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioArgs {
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Fraction of capital per bet
    #[arg(long)]
    pub bet: Option<f64>,
    /// How tail bets enter the preset run
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
    /// Custom run: bet counts, comma separated (pairs with --outcomes)
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<u64>>,
    /// Custom run: per-unit outcome of each bet group
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub outcomes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioParams {
    pub preset: Option<PresetArg>,
    pub bet: f64,
    pub convention: ConventionArg,
    pub custom: Vec<(u64, f64)>,
}

impl ScenarioArgs {
    pub fn resolve(self) -> CliResult<ScenarioParams> {
        let custom = match (self.counts, self.outcomes) {
            (Some(c), Some(o)) if c.len() == o.len() => c.into_iter().zip(o).collect(),
            (None, None) => Vec::new(),
            _ => {
                return Err(CliError::invalid(
                    "'counts' and 'outcomes' must be given together with equal length",
                ))
            }
        };
        let preset = match (self.preset, custom.is_empty()) {
            (Some(_), false) => return Err(CliError::invalid("give either a preset or a custom run, not both")),
            (None, true) => Some(PresetArg::Brown),
            (p, _) => p,
        };
        Ok(ScenarioParams {
            preset,
            bet: self.bet.unwrap_or(0.2),
            convention: self.convention.unwrap_or(ConventionArg::Replacement),
            custom,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub etl: Option<f64>,
    /// Tolerated loss D; protection is struck at 1 - D
    #[arg(long)]
    pub drawdown: Option<f64>,
    /// Protection horizon in periods
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Financing spread per period on leverage above one
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub lev_min: Option<f64>,
    #[arg(long)]
    pub lev_max: Option<f64>,
    /// Number of leverage grid intervals
    #[arg(long)]
    pub lev_steps: Option<usize>,
    /// Monte Carlo paths when the horizon is too long to enumerate
    #[arg(long)]
    pub mc_paths: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierParamsArg {
    pub mu0: f64,
    pub sigma0: f64,
    pub alpha: f64,
    pub etl: f64,
    pub drawdown: f64,
    pub horizon: usize,
    pub spread: f64,
    pub lev_min: f64,
    pub lev_max: f64,
    pub lev_steps: usize,
    pub mc_paths: usize,
}

impl FrontierArgs {
    pub fn resolve(self) -> CliResult<FrontierParamsArg> {
        let d = kelly_tails::frontier::FrontierParams::default();
        let p = FrontierParamsArg {
            mu0: self.mu0.unwrap_or(d.mu0),
            sigma0: self.sigma0.unwrap_or(d.sigma0),
            alpha: self.alpha.unwrap_or(d.alpha),
            etl: self.etl.unwrap_or(d.etl),
            drawdown: self.drawdown.unwrap_or(d.drawdown),
            horizon: self.horizon.unwrap_or(d.horizon),
            spread: self.spread.unwrap_or(d.spread),
            lev_min: self.lev_min.unwrap_or(0.25),
            lev_max: self.lev_max.unwrap_or(3.0),
            lev_steps: self.lev_steps.unwrap_or(11),
            mc_paths: self.mc_paths.unwrap_or(1_000_000),
        };
        if p.lev_max.partial_cmp(&p.lev_min) != Some(Ordering::Greater) || p.lev_steps < 2 || p.mc_paths == 0 {
            return Err(CliError::invalid(
                "frontier needs lev_min < lev_max, at least 2 grid intervals and mc_paths >= 1",
            ));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateArgs {
    /// CSV file of returns (one per line, or a 'return' column)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Tail quantile q in (0, 0.25]
    #[arg(long)]
    pub quantile: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateParamsArg {
    pub input: PathBuf,
    pub quantile: f64,
}

impl EstimateArgs {
    pub fn resolve(self) -> CliResult<EstimateParamsArg> {
        Ok(EstimateParamsArg {
            input: required(self.input, "input")?,
            quantile: self.quantile.unwrap_or(kelly_tails::estimate::DEFAULT_TAIL_QUANTILE),
        })
    }
}
