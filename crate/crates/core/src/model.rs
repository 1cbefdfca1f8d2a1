//! Domain types for the discrete fat-tailed return model.
//!
//! A period's excess return is modelled as a four-point distribution: a tail
//! loss `-etl` with probability `alpha`, a symmetric two-point core
//! `mu ± sigma` sharing the central mass `1 - alpha - beta`, and a tail win
//! `+etw` with probability `beta`. With no tails this is the classic
//! two-point model whose Kelly fraction tends to `mu / sigma^2`.

use serde::Serialize;

use crate::error::{KellyError, Result};
use crate::numeric::compensated_sum;

/// Tolerance on the total probability of a model.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Ratio `sigma / |mu|` below which the small-drift approximations are
/// considered unreliable.
pub const SEPARATION_RATIO: f64 = 5.0;

/// Center of the return distribution: drift `mu` and volatility `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianCore {
    mu: f64,
    sigma: f64,
}

impl GaussianCore {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() {
            return Err(KellyError::invalid("mu and sigma must be finite"));
        }
        if sigma <= 0.0 {
            return Err(KellyError::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if mu.abs() >= sigma {
            return Err(KellyError::invalid(format!(
                "sigma ({sigma}) must exceed |mu| ({})",
                mu.abs()
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// `false` when `sigma <= 5 |mu|`; the closed-form approximations assume
    /// `sigma >> mu` while the exact optimizer does not care.
    pub fn is_well_separated(&self) -> bool {
        self.sigma > SEPARATION_RATIO * self.mu.abs()
    }
}

/// Tail parameters: loss `etl` with probability `alpha`, win `etw` with
/// probability `beta`. Sizes are non-negative fractions of capital; a zero
/// size leaves the tail mass sitting at a zero return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSpec {
    alpha: f64,
    etl: f64,
    beta: f64,
    etw: f64,
}

impl TailSpec {
    pub fn new(alpha: f64, etl: f64, beta: f64, etw: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("etl", etl), ("beta", beta), ("etw", etw)] {
            if !v.is_finite() {
                return Err(KellyError::invalid(format!("{name} must be finite")));
            }
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(KellyError::invalid(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(KellyError::invalid(format!("beta must lie in [0, 1), got {beta}")));
        }
        if alpha + beta >= 1.0 {
            return Err(KellyError::invalid("alpha + beta must be below 1"));
        }
        if etl < 0.0 || etw < 0.0 {
            return Err(KellyError::invalid("etl and etw must be non-negative"));
        }
        Ok(Self { alpha, etl, beta, etw })
    }

    /// Left tail only.
    pub fn left(alpha: f64, etl: f64) -> Result<Self> {
        Self::new(alpha, etl, 0.0, 0.0)
    }

    /// Mirrored tails: `beta = alpha`, `etw = etl`.
    pub fn symmetric(alpha: f64, size: f64) -> Result<Self> {
        Self::new(alpha, size, alpha, size)
    }

    pub fn none() -> Self {
        Self {
            alpha: 0.0,
            etl: 0.0,
            beta: 0.0,
            etw: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn etl(&self) -> f64 {
        self.etl
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn etw(&self) -> f64 {
        self.etw
    }

    /// Probability mass left in the two-point core.
    pub fn core_mass(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }

    pub fn is_empty(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }
}

impl Default for TailSpec {
    fn default() -> Self {
        Self::none()
    }
}

/// One atom of a discrete return distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub value: f64,
    pub probability: f64,
}

/// A finite per-period return distribution with strictly increasing values
/// and strictly positive probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteModel {
    outcomes: Vec<Outcome>,
}

impl DiscreteModel {
    /// Builds a model from `(value, probability)` pairs.
    ///
    /// Zero-probability atoms are dropped, atoms are sorted by value and
    /// coincident values are merged.
    pub fn from_outcomes<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut outcomes: Vec<Outcome> = Vec::new();
        for (value, probability) in atoms {
            if !value.is_finite() || !probability.is_finite() {
                return Err(KellyError::invalid("outcome values and probabilities must be finite"));
            }
            if !(0.0..=1.0).contains(&probability) {
                return Err(KellyError::invalid(format!("probability {probability} outside [0, 1]")));
            }
            if probability > 0.0 {
                outcomes.push(Outcome { value, probability });
            }
        }
        if outcomes.is_empty() {
            return Err(KellyError::invalid("model has no outcome with positive probability"));
        }
        outcomes.sort_by(|a, b| a.value.total_cmp(&b.value));
        outcomes.dedup_by(|next, kept| {
            if next.value == kept.value {
                kept.probability += next.probability;
                true
            } else {
                false
            }
        });
        let total = compensated_sum(outcomes.iter().map(|o| o.probability));
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(KellyError::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.outcomes[0].value
    }

    pub fn max_value(&self) -> f64 {
        self.outcomes[self.outcomes.len() - 1].value
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.outcomes.iter().map(|o| o.probability * o.value))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        compensated_sum(
            self.outcomes
                .iter()
                .map(|o| o.probability * (o.value - m) * (o.value - m)),
        )
    }

    /// Open interval of leverages keeping every wealth factor `1 + f v`
    /// positive. Infinite ends when no outcome bounds that side.
    pub fn feasible_interval(&self) -> (f64, f64) {
        let max = self.max_value();
        let min = self.min_value();
        let lo = if max > 0.0 { -1.0 / max } else { f64::NEG_INFINITY };
        let hi = if min < 0.0 { -1.0 / min } else { f64::INFINITY };
        (lo, hi)
    }

    /// Checks `1 + f v > 0` for every outcome.
    pub fn check_leverage(&self, f: f64) -> Result<()> {
        if !f.is_finite() {
            return Err(KellyError::invalid("leverage must be finite"));
        }
        for o in &self.outcomes {
            let factor = 1.0 + f * o.value;
            if factor <= 0.0 {
                return Err(KellyError::DomainViolation {
                    leverage: f,
                    outcome: o.value,
                    factor,
                });
            }
        }
        Ok(())
    }

    /// Cumulative probabilities, last entry forced to exactly 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .outcomes
            .iter()
            .map(|o| {
                acc += o.probability;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }
}

/// Four-point model from a core and tail specification.
pub fn build_discrete_model(core: &GaussianCore, tails: &TailSpec) -> DiscreteModel {
    let half = 0.5 * tails.core_mass();
    DiscreteModel::from_outcomes([
        (-tails.etl, tails.alpha),
        (core.mu - core.sigma, half),
        (core.mu + core.sigma, half),
        (tails.etw, tails.beta),
    ])
    .expect("validated core and tails always form a valid model")
}

/// `(mean, variance)` by direct summation.
pub fn model_moments(model: &DiscreteModel) -> (f64, f64) {
    (model.mean(), model.variance())
}

/// Center `(mu, sigma)` that, combined with a left tail `(alpha, etl)`,
/// reproduces observed moments `(mu0, sigma0^2)` exactly.
pub fn calibrate_center(mu0: f64, sigma0: f64, alpha: f64, etl: f64) -> Result<GaussianCore> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(KellyError::invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if sigma0 <= 0.0 || !sigma0.is_finite() || !mu0.is_finite() || !etl.is_finite() {
        return Err(KellyError::invalid("observed moments must be finite with sigma0 > 0"));
    }
    let mu = mu0 / (1.0 - alpha) + alpha * etl / (1.0 - alpha);
    let variance = sigma0 * sigma0 / (1.0 - alpha) - alpha * (etl + mu) * (etl + mu);
    if variance <= 0.0 {
        return Err(KellyError::CalibrationInfeasible { variance });
    }
    GaussianCore::new(mu, variance.sqrt())
}

/// Two-sided generalisation of [`calibrate_center`]: the returned core plus
/// `tails` has mean `mu0` and variance `sigma0^2`. Identical to
/// [`calibrate_center`] when `beta == 0`.
pub fn calibrate_center_two_sided(mu0: f64, sigma0: f64, tails: &TailSpec) -> Result<GaussianCore> {
    if tails.beta == 0.0 {
        return calibrate_center(mu0, sigma0, tails.alpha, tails.etl);
    }
    if sigma0 <= 0.0 || !sigma0.is_finite() || !mu0.is_finite() {
        return Err(KellyError::invalid("observed moments must be finite with sigma0 > 0"));
    }
    let mass = tails.core_mass();
    let mu = (mu0 + tails.alpha * tails.etl - tails.beta * tails.etw) / mass;
    let second = sigma0 * sigma0 + mu0 * mu0 - tails.alpha * tails.etl * tails.etl - tails.beta * tails.etw * tails.etw;
    let variance = second / mass - mu * mu;
    if variance <= 0.0 {
        return Err(KellyError::CalibrationInfeasible { variance });
    }
    GaussianCore::new(mu, variance.sqrt())
}

/// Mean of the model implied by `(core, tails)`:
/// `(1 - alpha - beta) mu + beta etw - alpha etl`.
pub fn implied_mean(core: &GaussianCore, tails: &TailSpec) -> f64 {
    tails.core_mass() * core.mu + tails.beta * tails.etw - tails.alpha * tails.etl
}

/// Regime checks for the closed-form approximations. None of these are
/// errors; the exact optimizer stays valid outside them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    /// Expected return of the full model is positive.
    pub positive_edge: bool,
    /// `sigma > 5 |mu|`.
    pub well_separated: bool,
    /// `mu0 / sigma0^2 < 1 / etl`: the tail-free optimum stays inside the
    /// domain set by the tail loss.
    pub tail_keeps_optimum: bool,
    /// `alpha` small enough (<= 0.1) for the tail to act as a perturbation.
    pub perturbative_tail: bool,
    /// `etl / mu > 1`.
    pub meaningful_tail: bool,
}

pub fn validity_report(core: &GaussianCore, tails: &TailSpec) -> ValidityReport {
    let model = build_discrete_model(core, tails);
    let (mean, var) = model_moments(&model);
    ValidityReport {
        positive_edge: implied_mean(core, tails) > 0.0,
        well_separated: core.is_well_separated(),
        tail_keeps_optimum: tails.etl == 0.0 || mean / var < 1.0 / tails.etl,
        perturbative_tail: tails.alpha <= 0.1,
        meaningful_tail: tails.alpha == 0.0 || tails.etl > core.mu.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_model() -> (GaussianCore, TailSpec) {
        (
            GaussianCore::new(0.004, 0.10).unwrap(),
            TailSpec::left(0.02, 0.10).unwrap(),
        )
    }

    #[test]
    fn reference_model_has_three_states() {
        let (core, tails) = reference_model();
        let m = build_discrete_model(&core, &tails);
        let expected = [(-0.10, 0.02), (-0.096, 0.49), (0.104, 0.49)];
        assert_eq!(m.len(), 3);
        for (o, (v, p)) in m.outcomes().iter().zip(expected) {
            assert!((o.value - v).abs() < 1e-15);
            assert!((o.probability - p).abs() < 1e-15);
        }
    }

    #[test]
    fn no_tail_model_is_two_point() {
        let core = GaussianCore::new(0.004, 0.10).unwrap();
        let m = build_discrete_model(&core, &TailSpec::none());
        assert_eq!(m.len(), 2);
        assert!(m.outcomes().iter().all(|o| o.probability == 0.5));
        let (mean, var) = model_moments(&m);
        assert!((mean - 0.004).abs() < 1e-15);
        assert!((var - 0.01).abs() < 1e-15);
    }

    #[test]
    fn four_state_probabilities() {
        let core = GaussianCore::new(0.06, 0.2).unwrap();
        let tails = TailSpec::new(0.2, 0.3, 0.05, 0.4).unwrap();
        let m = build_discrete_model(&core, &tails);
        let probs: Vec<f64> = m.outcomes().iter().map(|o| o.probability).collect();
        assert_eq!(probs.len(), 4);
        for (p, e) in probs.iter().zip([0.2, 0.375, 0.375, 0.05]) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn small_tail_loss_is_sorted_inside_core() {
        // -etl sits between mu - sigma and mu + sigma
        let core = GaussianCore::new(0.004, 0.10).unwrap();
        let m = build_discrete_model(&core, &TailSpec::left(0.02, 0.05).unwrap());
        let values: Vec<f64> = m.outcomes().iter().map(|o| o.value).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert!((values[1] + 0.05).abs() < 1e-15);
    }

    #[test]
    fn coincident_values_merge() {
        let m = DiscreteModel::from_outcomes([(0.1, 0.25), (-0.1, 0.5), (0.1, 0.25)]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.outcomes()[1].probability, 0.5);
    }

    #[test]
    fn reference_mean_by_summation() {
        let (core, tails) = reference_model();
        let (mean, var) = model_moments(&build_discrete_model(&core, &tails));
        assert!((mean - 0.00192).abs() < 1e-15);
        assert!(var >= 0.0);
    }

    #[test]
    fn core_rejects_sigma_not_above_mu() {
        assert!(GaussianCore::new(0.004, 0.004).is_err());
        assert!(GaussianCore::new(0.0, 0.0).is_err());
        assert!(GaussianCore::new(-0.01, 0.02).is_ok());
    }

    #[test]
    fn tail_spec_validation() {
        assert!(TailSpec::new(0.6, 0.1, 0.4, 0.1).is_err());
        assert!(TailSpec::new(-0.1, 0.1, 0.0, 0.0).is_err());
        // a zero-size tail keeps its mass at a zero return
        assert!(TailSpec::new(0.1, 0.0, 0.0, 0.0).is_ok());
        assert!(TailSpec::new(0.0, 0.0, 0.0, 0.0).is_ok());
        assert!(TailSpec::new(0.0, 0.3, 0.0, 0.0).is_ok());
    }

    #[test]
    fn calibration_without_tail_is_identity() {
        let core = calibrate_center(0.003, 0.07, 0.0, 0.42).unwrap();
        assert_eq!(core.mu(), 0.003);
        assert!((core.sigma() - 0.07).abs() < 1e-16);
    }

    #[test]
    fn calibration_example_round_trips() {
        let core = calibrate_center(0.002, 0.10, 0.02, 0.10).unwrap();
        assert!((core.mu() - 0.004 / 0.98).abs() < 1e-15);
        // 0.01/0.98 - 0.02 (0.10 + 0.004/0.98)^2
        assert!((core.variance() - 0.009_987_421_907_538_529).abs() < 1e-15);
        let m = build_discrete_model(&core, &TailSpec::left(0.02, 0.10).unwrap());
        let (mean, var) = model_moments(&m);
        assert!((mean - 0.002).abs() < 1e-15);
        assert!((var - 0.01).abs() < 1e-14);
    }

    #[test]
    fn calibration_too_heavy_tail_is_infeasible() {
        let err = calibrate_center(0.0, 0.05, 0.5, 0.5).unwrap_err();
        assert!(matches!(err, KellyError::CalibrationInfeasible { variance } if variance < 0.0));
    }

    #[test]
    fn two_sided_calibration_matches_moments() {
        let tails = TailSpec::new(0.03, 0.25, 0.02, 0.2).unwrap();
        let core = calibrate_center_two_sided(0.01, 0.12, &tails).unwrap();
        let (mean, var) = model_moments(&build_discrete_model(&core, &tails));
        assert!((mean - 0.01).abs() < 1e-14);
        assert!((var - 0.0144).abs() < 1e-14);
    }

    #[test]
    fn validity_flags_for_reference_model() {
        let (core, tails) = reference_model();
        let r = validity_report(&core, &tails);
        assert!(r.positive_edge);
        assert!(r.well_separated);
        assert!(r.perturbative_tail);
        assert!(r.meaningful_tail);
        let heavy = TailSpec::left(0.2, 0.3).unwrap();
        let core = GaussianCore::new(0.06, 0.2).unwrap();
        assert!(!validity_report(&core, &heavy).positive_edge);
        assert!(!validity_report(&core, &heavy).perturbative_tail);
    }
}
