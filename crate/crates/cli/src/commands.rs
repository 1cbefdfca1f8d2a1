use kelly_tails::frontier::{
    feasible_points, frontier_concavity_check, frontier_set_with, DdvaMethod, DdvaOptions, FrontierParams,
};
use kelly_tails::model::validity_report;
use kelly_tails::parity::{
    joint_fat_allocation, max_sharpe_tangency, risk_parity_weights, two_asset_closed, AssetModel, JointAlignment,
    JointTwoAssetModel,
};
use kelly_tails::simulate::crossover_diagnostic;
use kelly_tails::single::{
    arithmetic_growth, brown_scenario, etl_sweep, kelly_fat_closed, linear_grid, scenario_growth, tail_impact,
    BrownCase, ScenarioConvention, SweepMode,
};
use kelly_tails::{
    build_discrete_model, estimate_params, growth_at, kelly_allocation, kelly_fat_exact, kelly_simple,
    read_returns_csv, simulate_paths, DiscreteModel, GaussianCore, PortfolioSpec, SimConfig, TailSpec,
};

use crate::args::{
    AlignmentArg, ConventionArg, EstimateParamsArg, FrontierParamsArg, ParityParams, PresetArg, ScenarioParams,
    SimulateParams, SingleParams, SweepModeArg, SweepParams,
};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Table};

fn report(command: &str, tables: Vec<Table>) -> Report {
    Report {
        command: command.to_string(),
        tables,
    }
}

fn model_of(p: &SingleParams) -> CliResult<(GaussianCore, TailSpec, DiscreteModel)> {
    let core = GaussianCore::new(p.mu, p.sigma)?;
    let tails = TailSpec::new(p.alpha, p.etl, p.beta, p.etw)?;
    let model = build_discrete_model(&core, &tails);
    Ok((core, tails, model))
}

pub fn single(p: &SingleParams) -> CliResult<Report> {
    let (core, tails, model) = model_of(p)?;
    let simple = kelly_simple(&core);
    let closed = kelly_fat_closed(&core, &tails);
    let exact = kelly_fat_exact(&model)?;
    let impact = tail_impact(&core, &tails).map_or(Cell::Empty, Cell::Num);
    let arith = arithmetic_growth(&core, &tails);
    let v = validity_report(&core, &tails);
    let mut t = Table::new(
        "single",
        &[
            "mu",
            "sigma",
            "alpha",
            "etl",
            "beta",
            "etw",
            "f0",
            "g0",
            "f1_closed",
            "g1_closed",
            "f1_exact",
            "g1_exact",
            "tail_impact",
            "expected_return",
            "log_drift",
            "positive_edge",
            "well_separated",
            "tail_keeps_optimum",
            "perturbative_tail",
            "meaningful_tail",
        ],
    );
    t.push(vec![
        p.mu.into(),
        p.sigma.into(),
        p.alpha.into(),
        p.etl.into(),
        p.beta.into(),
        p.etw.into(),
        simple.fraction.into(),
        simple.growth.into(),
        closed.fraction.into(),
        closed.growth.into(),
        exact.fraction.into(),
        exact.growth.into(),
        impact,
        arith.expected_return.into(),
        arith.log_drift.into(),
        v.positive_edge.into(),
        v.well_separated.into(),
        v.tail_keeps_optimum.into(),
        v.perturbative_tail.into(),
        v.meaningful_tail.into(),
    ]);
    Ok(report("single", vec![t]))
}

pub fn sweep(p: &SweepParams) -> CliResult<Report> {
    let mode = match p.mode {
        SweepModeArg::Fixed => SweepMode::FixedCenter,
        SweepModeArg::Recalibrated => SweepMode::Recalibrated,
    };
    let rows = etl_sweep(
        p.mu0,
        p.sigma0,
        p.alpha,
        &linear_grid(p.etl_min, p.etl_max, p.steps),
        mode,
    );
    let mut t = Table::new(
        "sweep",
        &[
            "etl", "mu", "sigma", "f_closed", "f_exact", "g_closed", "g_exact", "status",
        ],
    );
    for row in rows {
        match row.point {
            Ok(s) => t.push(vec![
                row.etl.into(),
                s.mu.into(),
                s.sigma.into(),
                s.f_closed.into(),
                s.f_exact.into(),
                s.g_closed.into(),
                s.g_exact.into(),
                "ok".into(),
            ]),
            Err(e) => {
                let mut cells = vec![row.etl.into()];
                cells.extend(std::iter::repeat(Cell::Empty).take(6));
                cells.push(e.to_string().into());
                t.push(cells);
            }
        }
    }
    Ok(report("sweep", vec![t]))
}

pub fn parity(p: &ParityParams) -> CliResult<Report> {
    let spec = PortfolioSpec::new(p.premiums.clone(), p.covariance.clone())?;
    let n = spec.len();
    let alloc = kelly_allocation(&spec)?;
    let sigmas = spec.volatilities();
    let tangency = max_sharpe_tangency(&spec).ok();
    let parity_w = risk_parity_weights(&sigmas)?;

    let mut allocation = Table::new(
        "allocation",
        &[
            "asset",
            "premium",
            "sigma",
            "kelly_fraction",
            "return_contribution",
            "variance_contribution",
            "risk_parity_weight",
        ],
    );
    for (i, d) in alloc.diagnostics.iter().enumerate() {
        allocation.push(vec![
            i.into(),
            p.premiums[i].into(),
            sigmas[i].into(),
            d.fraction.into(),
            d.return_contribution.into(),
            d.variance_contribution.into(),
            parity_w[i].into(),
        ]);
    }

    let mut summary = Table::new("summary", &["total_leverage", "growth_rate", "tangency_defined"]);
    summary.push(vec![
        alloc.total_leverage.into(),
        alloc.growth_rate.into(),
        tangency.is_some().into(),
    ]);
    let mut tables = vec![allocation, summary];

    if let Some(w) = &tangency {
        let mut eq = Table::new(
            "equivalence",
            &["asset", "normalized_kelly", "tangency_weight", "abs_difference"],
        );
        for (i, &wi) in w.iter().enumerate() {
            let normalized = alloc.fractions[i] / alloc.total_leverage;
            eq.push(vec![
                i.into(),
                normalized.into(),
                wi.into(),
                (normalized - wi).abs().into(),
            ]);
        }
        tables.push(eq);
    }

    if n == 2 {
        let rho = spec.covariance_entry(0, 1) / (sigmas[0] * sigmas[1]);
        let z = two_asset_closed(p.premiums[0], sigmas[0], p.premiums[1], sigmas[1], rho)?;
        let mut t = Table::new("two_asset_closed", &["rho", "z1", "z2", "z"]);
        t.push(vec![rho.into(), z.z1.into(), z.z2.into(), z.z.into()]);
        tables.push(t);
    }

    let alignment = match p.alignment {
        AlignmentArg::None => None,
        AlignmentArg::Coaligned => Some(JointAlignment::Coaligned),
        AlignmentArg::Opposed => Some(JointAlignment::Opposed),
        AlignmentArg::Independent => Some(JointAlignment::Independent),
    };
    if let Some(alignment) = alignment {
        if n != 2 {
            return Err(CliError::invalid("the joint tail model needs exactly two assets"));
        }
        let asset = |i: usize| -> CliResult<AssetModel> {
            Ok(AssetModel {
                core: GaussianCore::new(p.premiums[i], sigmas[i])?,
                tails: TailSpec::new(p.alpha[i], p.etl[i], p.beta[i], p.etw[i])?,
            })
        };
        let rho = spec.covariance_entry(0, 1) / (sigmas[0] * sigmas[1]);
        let m = JointTwoAssetModel::new(asset(0)?, asset(1)?, rho, alignment, p.joint_alpha)?;
        let joint = joint_fat_allocation(&m)?;
        let mut t = Table::new(
            "joint",
            &["asset", "fraction", "return_contribution", "variance_contribution"],
        );
        for d in &joint.diagnostics {
            t.push(vec![
                d.asset.into(),
                d.fraction.into(),
                d.return_contribution.into(),
                d.variance_contribution.into(),
            ]);
        }
        tables.push(t);
        let mut s = Table::new(
            "joint_summary",
            &["alignment", "joint_alpha", "total_leverage", "growth_rate"],
        );
        let label = match alignment {
            JointAlignment::Coaligned => "coaligned",
            JointAlignment::Opposed => "opposed",
            JointAlignment::Independent => "independent",
        };
        s.push(vec![
            label.into(),
            p.joint_alpha.into(),
            joint.total_leverage.into(),
            joint.growth_rate.into(),
        ]);
        tables.push(s);
    }
    Ok(report("parity", tables))
}

pub fn simulate(p: &SimulateParams, seed: u64) -> CliResult<Report> {
    let (_, _, model) = model_of(&p.model)?;
    let f = match p.leverage {
        Some(f) => f,
        None => kelly_fat_exact(&model)?.fraction,
    };
    let cfg = SimConfig::new(seed, p.paths, p.periods, f).with_ruin_floor(p.ruin_floor);
    let s = simulate_paths(&model, &cfg)?;
    let mut stats = Table::new(
        "stats",
        &[
            "leverage",
            "n_paths",
            "n_periods",
            "expected_log_growth",
            "mean_log_growth",
            "se_log_growth",
            "median_terminal",
            "mean_terminal",
            "se_terminal",
            "ruin_fraction",
        ],
    );
    stats.push(vec![
        f.into(),
        s.n_paths.into(),
        s.n_periods.into(),
        growth_at(&model, f)?.into(),
        s.mean_log_growth.into(),
        s.se_log_growth.into(),
        s.median_terminal.into(),
        s.mean_terminal.into(),
        s.se_terminal.into(),
        s.ruin_fraction.into(),
    ]);
    let mut dd = Table::new("drawdown_quantiles", &["quantile", "max_drawdown"]);
    for q in &s.max_drawdown_quantiles {
        dd.push(vec![q.quantile.into(), q.value.into()]);
    }
    let mut tables = vec![stats, dd];
    if !p.crossover.is_empty() {
        let rows = crossover_diagnostic(&model, f, &p.crossover, p.paths, seed)?;
        let mut t = Table::new(
            "crossover",
            &[
                "n_periods",
                "mean_terminal",
                "se_terminal",
                "median_terminal",
                "log_gap",
            ],
        );
        for r in rows {
            t.push(vec![
                r.n_periods.into(),
                r.mean_terminal.into(),
                r.se_terminal.into(),
                r.median_terminal.into(),
                r.gap.into(),
            ]);
        }
        tables.push(t);
    }
    Ok(report("simulate", tables))
}

pub fn scenario(p: &ScenarioParams) -> CliResult<Report> {
    let convention = match p.convention {
        ConventionArg::Replacement => ScenarioConvention::Replacement,
        ConventionArg::Append => ScenarioConvention::Append,
    };
    let runs: Vec<(String, Vec<(u64, f64)>)> = match p.preset {
        Some(PresetArg::Brown) => BrownCase::ALL
            .iter()
            .map(|c| (c.label().to_string(), brown_scenario(*c, convention)))
            .collect(),
        None => vec![("custom".to_string(), p.custom.clone())],
    };
    let mut t = Table::new("scenarios", &["case", "bet", "bets", "multiple", "growth_rate"]);
    for (label, spec) in runs {
        let r = scenario_growth(&spec, p.bet)?;
        t.push(vec![
            label.into(),
            p.bet.into(),
            r.bets.into(),
            r.multiple.into(),
            r.growth_rate.into(),
        ]);
    }
    Ok(report("scenario", vec![t]))
}

pub fn frontier(p: &FrontierParamsArg, seed: u64) -> CliResult<Report> {
    let params = FrontierParams {
        mu0: p.mu0,
        sigma0: p.sigma0,
        alpha: p.alpha,
        etl: p.etl,
        drawdown: p.drawdown,
        horizon: p.horizon,
        spread: p.spread,
        leverage_grid: linear_grid(p.lev_min, p.lev_max, p.lev_steps),
    };
    let opts = DdvaOptions {
        mc_paths: p.mc_paths,
        seed,
        ..DdvaOptions::default()
    };
    let set = frontier_set_with(&params, &opts)?;
    let mut rows = Table::new(
        "frontier",
        &[
            "curve",
            "leverage",
            "volatility",
            "gross_return",
            "protection_cost",
            "financing_cost",
            "net_return",
            "status",
        ],
    );
    let mut concavity = Table::new("concavity", &["curve", "points", "concave", "max_second_difference"]);
    for (name, curve) in set.curves() {
        for row in curve {
            match &row.point {
                Ok(q) => rows.push(vec![
                    name.into(),
                    q.leverage.into(),
                    q.volatility.into(),
                    q.gross_return.into(),
                    q.protection_cost.into(),
                    q.financing_cost.into(),
                    q.net_return.into(),
                    "ok".into(),
                ]),
                Err(e) => {
                    let mut cells = vec![name.into(), row.leverage.into()];
                    cells.extend(std::iter::repeat(Cell::Empty).take(5));
                    cells.push(e.to_string().into());
                    rows.push(cells);
                }
            }
        }
        let pts = feasible_points(curve);
        match frontier_concavity_check(&pts) {
            Ok(c) => concavity.push(vec![
                name.into(),
                pts.len().into(),
                c.concave.into(),
                c.max_second_difference.into(),
            ]),
            Err(_) => concavity.push(vec![name.into(), pts.len().into(), Cell::Empty, Cell::Empty]),
        }
    }
    let mut method = Table::new("ddva_method", &["horizon", "method", "mc_paths", "seed"]);
    let probe = kelly_tails::frontier::ddva_with(
        &build_discrete_model(&GaussianCore::new(p.mu0, p.sigma0)?, &TailSpec::left(p.alpha, p.etl)?),
        0.0,
        p.drawdown,
        p.horizon,
        &opts,
    )?;
    match probe.method {
        DdvaMethod::Enumeration => method.push(vec![p.horizon.into(), "enumeration".into(), Cell::Empty, Cell::Empty]),
        DdvaMethod::MonteCarlo { n_paths, seed } => method.push(vec![
            p.horizon.into(),
            "monte_carlo".into(),
            n_paths.into(),
            seed.into(),
        ]),
    }
    Ok(report("frontier", vec![rows, concavity, method]))
}

pub fn estimate(p: &EstimateParamsArg) -> CliResult<Report> {
    let series = read_returns_csv(&p.input)?;
    let e = estimate_params(&series, p.quantile)?;
    let model = build_discrete_model(&e.core, &e.tails);
    let exact = kelly_fat_exact(&model).ok();
    let d = &e.diagnostics;
    let mut t = Table::new(
        "estimate",
        &[
            "n_observations",
            "tail_quantile",
            "mu",
            "sigma",
            "alpha",
            "etl",
            "beta",
            "etw",
            "left_threshold",
            "right_threshold",
            "n_left",
            "n_right",
            "interior_mean",
            "interior_std",
            "sample_mean",
            "sample_std",
            "degenerate_left",
            "degenerate_right",
            "f_exact",
        ],
    );
    t.push(vec![
        d.n_observations.into(),
        d.tail_quantile.into(),
        e.core.mu().into(),
        e.core.sigma().into(),
        e.tails.alpha().into(),
        e.tails.etl().into(),
        e.tails.beta().into(),
        e.tails.etw().into(),
        d.left_threshold.into(),
        d.right_threshold.into(),
        d.n_left.into(),
        d.n_right.into(),
        d.interior_mean.into(),
        d.interior_std.into(),
        d.sample_mean.into(),
        d.sample_std.into(),
        d.degenerate_left.into(),
        d.degenerate_right.into(),
        exact.map_or(Cell::Empty, |k| k.fraction.into()),
    ]);
    Ok(report("estimate", vec![t]))
}
