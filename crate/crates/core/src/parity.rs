//! Multi-asset Kelly allocation ("Kelly parity").
//!
//! In the Gaussian regime the growth-optimal leverage vector solves
//! `C f = M`. Normalizing it to unit total leverage gives the maximum-Sharpe
//! tangency portfolio, and with equal Sharpe ratios and no correlation it
//! collapses to risk parity (`f_i ∝ 1 / sigma_i`). For two assets with tail
//! events the exact log-growth is maximized over a discrete joint pdf.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{KellyError, Result};
use crate::model::{DiscreteModel, GaussianCore, TailSpec};
use crate::numeric::{compensated_sum, decreasing_root};

/// Symmetry tolerance on the covariance matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Relative size of the smallest squared Cholesky pivot below which the
/// covariance is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Cholesky succeeds and no squared pivot is negligible next to its
/// diagonal entry (nalgebra accepts zero pivots).
fn is_positive_definite(c: &DMatrix<f64>) -> bool {
    let Some(chol) = c.clone().cholesky() else {
        return false;
    };
    let l = chol.l();
    (0..c.nrows()).all(|i| l[(i, i)] * l[(i, i)] > PIVOT_TOLERANCE * c[(i, i)])
}

/// How tail events of different assets relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alignment {
    /// Both assets hit their tail loss together.
    Coaligned,
    /// A tail loss in the first asset coincides with a tail win in the second.
    Opposed,
    /// Tail events occur independently per asset.
    Independent,
    /// Tails are ignored (Gaussian regime).
    None,
}

/// Premiums, covariance and optional tails of an N-asset portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    premiums: DVector<f64>,
    covariance: DMatrix<f64>,
    tails: Option<Vec<TailSpec>>,
    alignment: Alignment,
}

impl PortfolioSpec {
    /// `covariance` is row-major, `n * n` entries for `n` premiums.
    pub fn new(premiums: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let n = premiums.len();
        if n == 0 {
            return Err(KellyError::invalid("portfolio needs at least one asset"));
        }
        if covariance.len() != n * n {
            return Err(KellyError::invalid(format!(
                "covariance has {} entries, expected {}",
                covariance.len(),
                n * n
            )));
        }
        if premiums.iter().chain(&covariance).any(|x| !x.is_finite()) {
            return Err(KellyError::invalid("premiums and covariance must be finite"));
        }
        let covariance = DMatrix::from_row_slice(n, n, &covariance);
        for i in 0..n {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(KellyError::invalid(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if !is_positive_definite(&covariance) {
            return Err(KellyError::SingularCovariance);
        }
        Ok(Self {
            premiums: DVector::from_vec(premiums),
            covariance,
            tails: None,
            alignment: Alignment::None,
        })
    }

    /// Builds `C_ij = rho_ij sigma_i sigma_j` from volatilities and a
    /// row-major correlation matrix.
    pub fn from_correlation(premiums: Vec<f64>, sigmas: &[f64], correlation: &[f64]) -> Result<Self> {
        let n = sigmas.len();
        if correlation.len() != n * n {
            return Err(KellyError::invalid("correlation matrix has the wrong size"));
        }
        let cov = (0..n * n)
            .map(|k| correlation[k] * sigmas[k / n] * sigmas[k % n])
            .collect();
        Self::new(premiums, cov)
    }

    pub fn with_tails(mut self, tails: Vec<TailSpec>, alignment: Alignment) -> Result<Self> {
        if tails.len() != self.len() {
            return Err(KellyError::invalid(format!(
                "{} tail specs for {} assets",
                tails.len(),
                self.len()
            )));
        }
        self.tails = Some(tails);
        self.alignment = alignment;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.premiums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premiums.is_empty()
    }

    pub fn premiums(&self) -> &[f64] {
        self.premiums.as_slice()
    }

    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[(i, j)]
    }

    pub fn volatilities(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.covariance[(i, i)].sqrt()).collect()
    }

    pub fn tails(&self) -> Option<&[TailSpec]> {
        self.tails.as_deref()
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    /// `C^-1 M` via Cholesky.
    fn solve_premiums(&self) -> Result<DVector<f64>> {
        let chol = self
            .covariance
            .clone()
            .cholesky()
            .ok_or(KellyError::SingularCovariance)?;
        Ok(chol.solve(&self.premiums))
    }
}

/// Per-asset breakdown of an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssetContribution {
    pub asset: usize,
    pub fraction: f64,
    /// `f_i E[x_i]`.
    pub return_contribution: f64,
    /// `f_i (C f)_i`; these sum to the portfolio variance.
    pub variance_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    pub fractions: Vec<f64>,
    /// Total leverage `Z = sum f_i`.
    pub total_leverage: f64,
    pub growth_rate: f64,
    pub feasible: bool,
    pub diagnostics: Vec<AssetContribution>,
}

fn contributions(fractions: &[f64], means: &[f64], cov: &DMatrix<f64>) -> Vec<AssetContribution> {
    let f = DVector::from_column_slice(fractions);
    let cf = cov * &f;
    fractions
        .iter()
        .enumerate()
        .map(|(i, &fi)| AssetContribution {
            asset: i,
            fraction: fi,
            return_contribution: fi * means[i],
            variance_contribution: fi * cf[i],
        })
        .collect()
}

/// Gaussian growth rate `f'M - f'Cf / 2`.
pub fn quadratic_growth(spec: &PortfolioSpec, fractions: &[f64]) -> f64 {
    let f = DVector::from_column_slice(fractions);
    f.dot(&spec.premiums) - 0.5 * f.dot(&(&spec.covariance * &f))
}

/// Kelly allocation `f = C^-1 M` with Gaussian growth `f'M - f'Cf / 2`.
pub fn kelly_allocation(spec: &PortfolioSpec) -> Result<AllocationResult> {
    let f = spec.solve_premiums()?;
    let fractions: Vec<f64> = f.iter().copied().collect();
    Ok(AllocationResult {
        total_leverage: compensated_sum(fractions.iter().copied()),
        growth_rate: quadratic_growth(spec, &fractions),
        feasible: true,
        diagnostics: contributions(&fractions, spec.premiums(), &spec.covariance),
        fractions,
    })
}

/// Two-asset leverages in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoAssetLeverage {
    pub z1: f64,
    pub z2: f64,
    /// Total leverage from its own closed-form expression.
    pub z: f64,
}

impl TwoAssetLeverage {
    /// Relative leverage of each asset, `Z_i / Z`.
    pub fn relative(&self) -> (f64, f64) {
        (self.z1 / self.z, self.z2 / self.z)
    }
}

pub fn two_asset_closed(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64, rho: f64) -> Result<TwoAssetLeverage> {
    if !(rho.abs() < 1.0) {
        return Err(KellyError::invalid(format!(
            "correlation must lie in (-1, 1), got {rho}"
        )));
    }
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(KellyError::invalid("volatilities must be positive"));
    }
    let denom = 1.0 - rho * rho;
    let cross = sigma1 * sigma2;
    Ok(TwoAssetLeverage {
        z1: (mu1 / (sigma1 * sigma1) - rho * mu2 / cross) / denom,
        z2: (mu2 / (sigma2 * sigma2) - rho * mu1 / cross) / denom,
        z: (mu1 / (sigma1 * sigma1) + mu2 / (sigma2 * sigma2) - rho * (mu1 + mu2) / cross) / denom,
    })
}

/// Fully invested maximum-Sharpe weights `C^-1 M / (1' C^-1 M)`.
pub fn max_sharpe_tangency(spec: &PortfolioSpec) -> Result<Vec<f64>> {
    let f = spec.solve_premiums()?;
    let total = compensated_sum(f.iter().copied());
    let scale = f.iter().map(|x| x.abs()).sum::<f64>();
    if scale == 0.0 || total.abs() <= 1e-14 * scale {
        return Err(KellyError::DegenerateNormalization);
    }
    Ok(f.iter().map(|x| x / total).collect())
}

/// Naive risk parity: weights proportional to `1 / sigma_i`, summing to one.
pub fn risk_parity_weights(sigmas: &[f64]) -> Result<Vec<f64>> {
    if sigmas.is_empty() {
        return Err(KellyError::invalid("no volatilities given"));
    }
    if sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(KellyError::invalid("volatilities must be positive"));
    }
    let inv: Vec<f64> = sigmas.iter().map(|s| 1.0 / s).collect();
    let total = compensated_sum(inv.iter().copied());
    Ok(inv.into_iter().map(|w| w / total).collect())
}

/// One asset of the two-asset joint model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssetModel {
    pub core: GaussianCore,
    pub tails: TailSpec,
}

/// Tail relation for the two-asset joint model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JointAlignment {
    /// With probability `joint_alpha` both assets realise their tail loss.
    Coaligned,
    /// With probability `joint_alpha` asset 1 loses `etl_1` while asset 2
    /// gains `etw_2`.
    Opposed,
    /// Each asset's own tail spec applies independently; `joint_alpha` is
    /// unused.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointTwoAssetModel {
    pub asset1: AssetModel,
    pub asset2: AssetModel,
    pub rho: f64,
    pub alignment: JointAlignment,
    pub joint_alpha: f64,
}

impl JointTwoAssetModel {
    pub fn new(
        asset1: AssetModel,
        asset2: AssetModel,
        rho: f64,
        alignment: JointAlignment,
        joint_alpha: f64,
    ) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(KellyError::InvalidJoint(format!("rho must lie in (-1, 1), got {rho}")));
        }
        if !(0.0..1.0).contains(&joint_alpha) {
            return Err(KellyError::InvalidJoint(format!(
                "joint_alpha must lie in [0, 1), got {joint_alpha}"
            )));
        }
        Ok(Self {
            asset1,
            asset2,
            rho,
            alignment,
            joint_alpha,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointOutcome {
    pub x1: f64,
    pub x2: f64,
    pub probability: f64,
}

/// Discrete joint pdf of two asset returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    states: Vec<JointOutcome>,
}

impl JointDistribution {
    pub fn from_states(states: Vec<JointOutcome>) -> Result<Self> {
        if states.iter().any(|s| s.probability < 0.0 || !s.probability.is_finite()) {
            return Err(KellyError::InvalidJoint("negative state probability".into()));
        }
        let states: Vec<JointOutcome> = states.into_iter().filter(|s| s.probability > 0.0).collect();
        let total = compensated_sum(states.iter().map(|s| s.probability));
        if (total - 1.0).abs() > 1e-12 {
            return Err(KellyError::InvalidJoint(format!("probabilities sum to {total}")));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[JointOutcome] {
        &self.states
    }

    /// Marginal distribution of asset `index` (0 or 1).
    pub fn marginal(&self, index: usize) -> Result<DiscreteModel> {
        DiscreteModel::from_outcomes(
            self.states
                .iter()
                .map(|s| (if index == 0 { s.x1 } else { s.x2 }, s.probability)),
        )
    }

    pub fn means(&self) -> [f64; 2] {
        [
            compensated_sum(self.states.iter().map(|s| s.probability * s.x1)),
            compensated_sum(self.states.iter().map(|s| s.probability * s.x2)),
        ]
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let [m1, m2] = self.means();
        let e = |g: &dyn Fn(&JointOutcome) -> f64| compensated_sum(self.states.iter().map(|s| s.probability * g(s)));
        let c11 = e(&|s| (s.x1 - m1) * (s.x1 - m1));
        let c12 = e(&|s| (s.x1 - m1) * (s.x2 - m2));
        let c22 = e(&|s| (s.x2 - m2) * (s.x2 - m2));
        [[c11, c12], [c12, c22]]
    }

    fn check(&self, f: [f64; 2]) -> Result<()> {
        for s in &self.states {
            let factor = 1.0 + f[0] * s.x1 + f[1] * s.x2;
            if factor <= 0.0 || !factor.is_finite() {
                return Err(KellyError::DomainViolation {
                    leverage: f[0] + f[1],
                    outcome: f[0] * s.x1 + f[1] * s.x2,
                    factor,
                });
            }
        }
        Ok(())
    }
}

/// Normal-state (core) pairs: `(mu_i ± sigma_i)` with weights
/// `(1 + rho)/4` for same-sign and `(1 - rho)/4` for opposite-sign moves.
fn core_pairs(a: &GaussianCore, b: &GaussianCore, rho: f64, mass: f64) -> [JointOutcome; 4] {
    let same = mass * (1.0 + rho) / 4.0;
    let opposite = mass * (1.0 - rho) / 4.0;
    let (u1, d1) = (a.mu() + a.sigma(), a.mu() - a.sigma());
    let (u2, d2) = (b.mu() + b.sigma(), b.mu() - b.sigma());
    [
        JointOutcome {
            x1: d1,
            x2: d2,
            probability: same,
        },
        JointOutcome {
            x1: d1,
            x2: u2,
            probability: opposite,
        },
        JointOutcome {
            x1: u1,
            x2: d2,
            probability: opposite,
        },
        JointOutcome {
            x1: u1,
            x2: u2,
            probability: same,
        },
    ]
}

/// Marginal states of one asset: `(value, probability, is_core)`; the core
/// appears once with its total mass.
fn marginal_categories(asset: &AssetModel) -> Vec<(f64, f64, bool)> {
    vec![
        (-asset.tails.etl(), asset.tails.alpha(), false),
        (f64::NAN, asset.tails.core_mass(), true),
        (asset.tails.etw(), asset.tails.beta(), false),
    ]
}

pub fn build_joint_model(m: &JointTwoAssetModel) -> Result<JointDistribution> {
    let (a1, a2) = (&m.asset1, &m.asset2);
    let mut states = Vec::with_capacity(9);
    match m.alignment {
        JointAlignment::Coaligned | JointAlignment::Opposed => {
            let x2 = if m.alignment == JointAlignment::Coaligned {
                -a2.tails.etl()
            } else {
                a2.tails.etw()
            };
            states.push(JointOutcome {
                x1: -a1.tails.etl(),
                x2,
                probability: m.joint_alpha,
            });
            states.extend(core_pairs(&a1.core, &a2.core, m.rho, 1.0 - m.joint_alpha));
        }
        JointAlignment::Independent => {
            for (v1, p1, core1) in marginal_categories(a1) {
                for (v2, p2, core2) in marginal_categories(a2) {
                    let p = p1 * p2;
                    match (core1, core2) {
                        (true, true) => states.extend(core_pairs(&a1.core, &a2.core, m.rho, p)),
                        (true, false) => {
                            for x1 in [a1.core.mu() - a1.core.sigma(), a1.core.mu() + a1.core.sigma()] {
                                states.push(JointOutcome {
                                    x1,
                                    x2: v2,
                                    probability: 0.5 * p,
                                });
                            }
                        }
                        (false, true) => {
                            for x2 in [a2.core.mu() - a2.core.sigma(), a2.core.mu() + a2.core.sigma()] {
                                states.push(JointOutcome {
                                    x1: v1,
                                    x2,
                                    probability: 0.5 * p,
                                });
                            }
                        }
                        (false, false) => states.push(JointOutcome {
                            x1: v1,
                            x2: v2,
                            probability: p,
                        }),
                    }
                }
            }
        }
    }
    JointDistribution::from_states(states)
}

/// `E[ln(1 + f1 x1 + f2 x2)]`.
pub fn joint_growth(dist: &JointDistribution, f: [f64; 2]) -> Result<f64> {
    dist.check(f)?;
    Ok(compensated_sum(
        dist.states
            .iter()
            .map(|s| s.probability * (f[0] * s.x1 + f[1] * s.x2).ln_1p()),
    ))
}

/// Gradient and Hessian of [`joint_growth`]; `f` must be feasible.
pub fn joint_gradient_hessian(dist: &JointDistribution, f: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut g = [0.0; 2];
    let mut h = [[0.0; 2]; 2];
    for s in &dist.states {
        let w = 1.0 + f[0] * s.x1 + f[1] * s.x2;
        let (r1, r2) = (s.x1 / w, s.x2 / w);
        g[0] += s.probability * r1;
        g[1] += s.probability * r2;
        h[0][0] -= s.probability * r1 * r1;
        h[0][1] -= s.probability * r1 * r2;
        h[1][1] -= s.probability * r2 * r2;
    }
    h[1][0] = h[0][1];
    (g, h)
}

/// `true` when some leverage direction never loses in any state, so the
/// growth has no finite maximizer (or states are collinear and it is not
/// unique).
fn has_free_direction(dist: &JointDistribution) -> bool {
    let states = &dist.states;
    let spans_plane = states.iter().any(|a| {
        states
            .iter()
            .any(|b| (a.x1 * b.x2 - a.x2 * b.x1).abs() > 1e-15 * (a.x1.hypot(a.x2) * b.x1.hypot(b.x2)).max(1e-300))
    });
    if !spans_plane {
        return true;
    }
    // An extreme ray of the cone {d : d.x >= 0 for all states} is orthogonal
    // to some state vector, so checking those candidates is exhaustive.
    states.iter().any(|s| {
        [[-s.x2, s.x1], [s.x2, -s.x1]].iter().any(|d| {
            let dots: Vec<f64> = states.iter().map(|t| d[0] * t.x1 + d[1] * t.x2).collect();
            let scale = d[0].hypot(d[1]);
            scale > 0.0 && dots.iter().all(|&v| v >= -1e-15 * scale) && dots.iter().any(|&v| v > 1e-15 * scale)
        })
    })
}

/// Gradient norm below which the joint optimizer stops.
pub const JOINT_GRADIENT_TOLERANCE: f64 = 1e-12;
const NEWTON_MAX_ITERATIONS: usize = 200;

/// Maximizes the exact joint log-growth over `(f1, f2)`.
pub fn joint_fat_allocation(m: &JointTwoAssetModel) -> Result<AllocationResult> {
    let dist = build_joint_model(m)?;
    joint_allocation_for(&dist)
}

/// [`joint_fat_allocation`] on an explicit joint distribution.
pub fn joint_allocation_for(dist: &JointDistribution) -> Result<AllocationResult> {
    if has_free_direction(dist) {
        return Err(KellyError::NoInteriorMaximum);
    }
    let f = match newton_ascent(dist) {
        Ok(f) => f,
        Err(KellyError::NewtonStall { .. }) => coordinate_ascent(dist)?,
        Err(e) => return Err(e),
    };
    let means = dist.means();
    let cov = dist.covariance();
    let cov = DMatrix::from_row_slice(2, 2, &[cov[0][0], cov[0][1], cov[1][0], cov[1][1]]);
    Ok(AllocationResult {
        fractions: f.to_vec(),
        total_leverage: f[0] + f[1],
        growth_rate: joint_growth(dist, f)?,
        feasible: true,
        diagnostics: contributions(&f, &means, &cov),
    })
}

fn norm(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

fn newton_ascent(dist: &JointDistribution) -> Result<[f64; 2]> {
    let mut f = [0.0, 0.0];
    let mut value = joint_growth(dist, f)?;
    let mut gnorm = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let (g, h) = joint_gradient_hessian(dist, f);
        gnorm = norm(g);
        if gnorm < JOINT_GRADIENT_TOLERANCE {
            return Ok(f);
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !(det > 0.0) {
            break;
        }
        // d = -H^-1 g
        let d = [
            -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
            -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
        ];
        let slope = g[0] * d[0] + g[1] * d[1];
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-20 {
            let trial = [f[0] + t * d[0], f[1] + t * d[1]];
            if let Ok(v) = joint_growth(dist, trial) {
                let armijo = v >= value + 1e-4 * t * slope;
                // near the optimum the objective change drowns in rounding,
                // so a gradient decrease is accepted instead
                let polish = gnorm < 1e-7 && norm(joint_gradient_hessian(dist, trial).0) < gnorm;
                if armijo || polish {
                    f = trial;
                    value = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(KellyError::NewtonStall {
        iterations: NEWTON_MAX_ITERATIONS,
        gradient_norm: gnorm,
    })
}

/// Alternating exact line maximization along each axis.
fn coordinate_ascent(dist: &JointDistribution) -> Result<[f64; 2]> {
    let mut f = [0.0, 0.0];
    let mut gnorm = f64::INFINITY;
    for iteration in 0..10_000 {
        for axis in 0..2 {
            // feasible interval along the axis with the other coordinate fixed
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for s in dist.states() {
                let (x, rest) = if axis == 0 {
                    (s.x1, 1.0 + f[1] * s.x2)
                } else {
                    (s.x2, 1.0 + f[0] * s.x1)
                };
                if x > 0.0 {
                    lo = lo.max(-rest / x);
                } else if x < 0.0 {
                    hi = hi.min(-rest / x);
                }
            }
            if !lo.is_finite() || !hi.is_finite() {
                return Err(KellyError::NoInteriorMaximum);
            }
            let width = hi - lo;
            let partial = |v: f64| {
                let mut p = f;
                p[axis] = v;
                let (g, h) = joint_gradient_hessian(dist, p);
                (g[axis], h[axis][axis])
            };
            f[axis] = decreasing_root(lo + 1e-12 * width, hi - 1e-12 * width, 1e-14, partial);
        }
        gnorm = norm(joint_gradient_hessian(dist, f).0);
        if gnorm < 1e-10 {
            return Ok(f);
        }
        if iteration > 0 && !gnorm.is_finite() {
            break;
        }
    }
    Err(KellyError::NewtonStall {
        iterations: 10_000,
        gradient_norm: gnorm,
    })
}
