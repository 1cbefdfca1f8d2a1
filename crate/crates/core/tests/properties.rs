use kelly_tails::frontier::{ddva_enumerate, frontier_concavity_check, FrontierPoint};
use kelly_tails::parity::{
    build_joint_model, joint_fat_allocation, joint_gradient_hessian, joint_growth, kelly_allocation,
    max_sharpe_tangency, AssetModel, JointAlignment, JointTwoAssetModel, PortfolioSpec,
};
use kelly_tails::single::{
    etl_sweep, growth_derivatives, kelly_fat_closed, kelly_fat_closed_one_sided, linear_grid, SweepMode,
};
use kelly_tails::{
    build_discrete_model, calibrate_center, growth_at, kelly_fat_exact, kelly_simple, DiscreteModel, GaussianCore,
    TailSpec,
};
use proptest::prelude::*;

fn core_strategy() -> impl Strategy<Value = GaussianCore> {
    (0.02f64..0.4, -0.5f64..0.5).prop_map(|(sigma, ratio)| GaussianCore::new(ratio * sigma, sigma).unwrap())
}

fn tails_strategy() -> impl Strategy<Value = TailSpec> {
    (0.0f64..0.1, 0.0f64..0.8, 0.0f64..0.1, 0.0f64..0.8)
        .prop_map(|(a, etl, b, etw)| TailSpec::new(a, etl, b, etw).unwrap())
}

fn model_strategy() -> impl Strategy<Value = DiscreteModel> {
    (core_strategy(), tails_strategy()).prop_map(|(c, t)| build_discrete_model(&c, &t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn model_probabilities_sum_to_one(model in model_strategy()) {
        let total: f64 = model.outcomes().iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(model.outcomes().windows(2).all(|w| w[0].value < w[1].value));
    }

    #[test]
    fn build_is_deterministic(core in core_strategy(), tails in tails_strategy()) {
        prop_assert_eq!(build_discrete_model(&core, &tails), build_discrete_model(&core, &tails));
    }

    #[test]
    fn calibration_round_trip(sigma0 in 0.02f64..0.4, r in -0.3f64..0.3, alpha in 0.0f64..0.1, etl in 0.0f64..0.6) {
        let mu0 = r * sigma0;
        if let Ok(core) = calibrate_center(mu0, sigma0, alpha, etl) {
            let m = build_discrete_model(&core, &TailSpec::left(alpha, etl).unwrap());
            prop_assert!((m.mean() - mu0).abs() <= 1e-12);
            prop_assert!((m.variance() - sigma0 * sigma0).abs() <= 1e-12);
        }
    }

    #[test]
    fn growth_is_concave(model in model_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = model.feasible_interval();
        let lo = lo.max(-50.0);
        let hi = hi.min(50.0);
        let at = |t: f64| lo + (hi - lo) * (1e-6 + t * (1.0 - 2e-6));
        let (f1, f2) = (at(a.min(b)), at(a.max(b)));
        let mid = growth_at(&model, 0.5 * (f1 + f2)).unwrap();
        let chord = 0.5 * (growth_at(&model, f1).unwrap() + growth_at(&model, f2).unwrap());
        prop_assert!(mid >= chord - 1e-12);
    }

    #[test]
    fn exact_optimum_is_stationary_and_maximal(model in model_strategy(), t in 0.0f64..1.0) {
        let best = kelly_fat_exact(&model).unwrap();
        prop_assert!(growth_derivatives(&model, best.fraction).0.abs() < 1e-10);
        let (lo, hi) = model.feasible_interval();
        let f = lo + (hi - lo) * (1e-6 + t * (1.0 - 2e-6));
        prop_assert!(best.growth >= growth_at(&model, f).unwrap() - 1e-10);
    }

    #[test]
    fn no_tail_exact_matches_simple(core in core_strategy()) {
        let exact = kelly_fat_exact(&build_discrete_model(&core, &TailSpec::none())).unwrap();
        prop_assert!((exact.fraction - kelly_simple(&core).fraction).abs() <= 1e-9);
    }

    #[test]
    fn both_sided_closed_form_reduces(core in core_strategy(), alpha in 0.0f64..0.2, etl in 0.0f64..0.8) {
        prop_assume!(core.mu().abs() > 1e-6);
        let both = kelly_fat_closed(&core, &TailSpec::left(alpha, etl).unwrap());
        let one = kelly_fat_closed_one_sided(&core, alpha, etl).unwrap();
        prop_assert!((both.fraction - one.fraction).abs() <= 1e-14 * one.fraction.abs().max(1.0));
        prop_assert!((both.growth - one.growth).abs() <= 1e-14 * one.growth.abs().max(1.0));
    }

    #[test]
    fn fixed_center_sweep_is_non_increasing(sigma in 0.05f64..0.3, r in 0.01f64..0.3, alpha in 0.001f64..0.1) {
        let rows = etl_sweep(r * sigma, sigma, alpha, &linear_grid(0.0, 1.0, 40), SweepMode::FixedCenter);
        let f: Vec<f64> = rows.iter().map(|row| row.point.as_ref().unwrap().f_exact).collect();
        prop_assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn tangency_weights_sum_to_one(n in 1usize..6, seed in any::<u64>()) {
        // diagonally dominant covariance with positive premiums
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let c = 0.02 * (next() - 0.5);
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
            cov[i * n + i] = 0.05 + 0.1 * next();
        }
        let m: Vec<f64> = (0..n).map(|_| 0.01 + 0.05 * next()).collect();
        let spec = PortfolioSpec::new(m.clone(), cov.clone()).unwrap();
        let a = kelly_allocation(&spec).unwrap();
        for i in 0..n {
            let cf: f64 = (0..n).map(|j| cov[i * n + j] * a.fractions[j]).sum();
            prop_assert!((cf - m[i]).abs() < 1e-12);
        }
        let w = max_sharpe_tangency(&spec).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concavity_check_rejects_convex_kinks(bump in 1e-9f64..1.0) {
        let pts: Vec<FrontierPoint> = [0.0, -bump, 0.0]
            .iter()
            .enumerate()
            .map(|(i, &y)| FrontierPoint {
                leverage: i as f64,
                volatility: i as f64,
                gross_return: y,
                protection_cost: 0.0,
                financing_cost: 0.0,
                net_return: y,
            })
            .collect();
        prop_assert!(!frontier_concavity_check(&pts).unwrap().concave);
    }

    #[test]
    fn ddva_is_bounded(model in model_strategy(), t in 0.0f64..1.0, d in 0.01f64..0.99, n in 1usize..15) {
        let (lo, hi) = model.feasible_interval();
        let hi = hi.min(20.0);
        let f = t * hi * (1.0 - 1e-9) + (1.0 - t) * 0.0f64.max(lo);
        let q = ddva_enumerate(&model, f, d, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&q.cost));
    }
}

fn joint_strategy() -> impl Strategy<Value = JointTwoAssetModel> {
    let asset = (
        0.05f64..0.2,
        0.02f64..0.3,
        0.0f64..0.04,
        0.1f64..0.4,
        0.0f64..0.02,
        0.1f64..0.3,
    )
        .prop_map(|(s, r, a, etl, b, etw)| AssetModel {
            core: GaussianCore::new(r * s, s).unwrap(),
            tails: TailSpec::new(a, etl, b, etw).unwrap(),
        });
    (asset.clone(), asset, -0.7f64..0.7, 0usize..3, 0.0f64..0.04).prop_map(|(a1, a2, rho, k, ja)| {
        let alignment = [
            JointAlignment::Coaligned,
            JointAlignment::Opposed,
            JointAlignment::Independent,
        ][k];
        JointTwoAssetModel::new(a1, a2, rho, alignment, ja).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_optimum_gradient_and_fd(m in joint_strategy(), points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 10)) {
        let dist = build_joint_model(&m).unwrap();
        let a = joint_fat_allocation(&m).unwrap();
        let f = [a.fractions[0], a.fractions[1]];
        let (g, _) = joint_gradient_hessian(&dist, f);
        prop_assert!(g[0].hypot(g[1]) < 1e-10);
        let h = 1e-6;
        for (u, v) in points {
            // points on the segment between the origin and twice the optimum
            let p = [2.0 * u * f[0] * 0.9, 2.0 * v * f[1] * 0.9];
            let Ok(_) = joint_growth(&dist, p) else { continue };
            let (an, _) = joint_gradient_hessian(&dist, p);
            for axis in 0..2 {
                let (mut up, mut dn) = (p, p);
                up[axis] += h;
                dn[axis] -= h;
                let fd = (joint_growth(&dist, up).unwrap() - joint_growth(&dist, dn).unwrap()) / (2.0 * h);
                prop_assert!((fd - an[axis]).abs() <= 1e-6 * an[axis].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn joint_marginals_match_single_models(m in joint_strategy()) {
        let dist = build_joint_model(&m).unwrap();
        let expected = |asset: &AssetModel| match m.alignment {
            JointAlignment::Independent => Some(build_discrete_model(&asset.core, &asset.tails)),
            JointAlignment::Coaligned => Some(build_discrete_model(
                &asset.core,
                &TailSpec::left(m.joint_alpha, asset.tails.etl()).unwrap(),
            )),
            JointAlignment::Opposed => None,
        };
        for (i, asset) in [m.asset1, m.asset2].iter().enumerate() {
            if let Some(single) = expected(asset) {
                let marginal = dist.marginal(i).unwrap();
                prop_assert_eq!(marginal.len(), single.len());
                for (a, b) in marginal.outcomes().iter().zip(single.outcomes()) {
                    prop_assert!((a.value - b.value).abs() <= 1e-15);
                    prop_assert!((a.probability - b.probability).abs() <= 1e-12);
                }
            }
        }
    }
}
