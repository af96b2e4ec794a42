//! Built-in parameter sets. Every preset prints the analytic value next to a
//! simulated one so the two can be compared row by row.

use clap::ValueEnum;
use rayon::prelude::*;

use super::{Cell, SolverOverrides, Table};
use crate::error::Result;
use crate::model::{RateProfile, ServiceDistribution, SystemConfig};
use crate::optimizer::{
    audit_plan, benchmark_constant_rate, default_eval_grid, optimize_rates, ConstraintSchedule,
    OptimizerSettings,
};
use crate::simulator::{empirical_cdf, SimRequest};
use crate::stationary::{aoi_cdf_stationary, aoi_pdf_stationary, InversionSettings, StationaryModel};
use crate::tv_solver::TvSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    /// Four service laws at t = 3 under a sinusoidal rate.
    Fig2a,
    /// Same laws at t = 10.
    Fig2b,
    /// Φ(t, x) over time, sinusoidal rate.
    Fig4a,
    /// Φ(t, x) over time, constant rate (transient towards steady state).
    Fig4b,
    /// Effect of θ under sinusoidal and square-wave rates.
    Fig5,
    /// Steady-state CDF/PDF against long simulations.
    Fig6,
    /// Steady-state CDF/PDF as θ varies, Erlang service.
    Fig7,
    /// Rate plans under the AoI constraint schedule.
    Fig8,
}

#[derive(Debug, Clone, Copy)]
pub struct PresetOptions {
    pub replications: usize,
    pub seed: u64,
    pub solver: SolverOverrides,
}

pub fn reproduce(figure: FigureId, opts: &PresetOptions) -> Result<Table> {
    let mut table = match figure {
        FigureId::Fig2a => laws_at(3.0, &steps(0.1, 3.0, 0.1), opts),
        FigureId::Fig2b => laws_at(10.0, &steps(0.25, 8.0, 0.25), opts),
        FigureId::Fig4a => over_time(RateProfile::sinusoid(1.8, 1.0, 0.8)?, opts),
        FigureId::Fig4b => over_time(RateProfile::constant(1.8)?, opts),
        FigureId::Fig5 => theta_effect(opts),
        FigureId::Fig6 => steady_vs_simulation(opts),
        FigureId::Fig7 => theta_sweep(opts),
        FigureId::Fig8 => rate_plans(opts),
    }?;
    table.note("replications", Cell::Int(opts.replications as i64));
    table.note("seed", Cell::Int(opts.seed as i64));
    Ok(table)
}

/// `a, a+step, …` up to and including `b`.
pub fn steps(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| a + k as f64 * step).collect()
}

/// Laws compared at `μ = 1.2`, all with mean `1/μ`.
pub fn comparison_laws(mu: f64) -> Result<Vec<(&'static str, ServiceDistribution)>> {
    Ok(vec![
        ("exp", ServiceDistribution::exponential(mu)?),
        ("uni", ServiceDistribution::uniform(2.0 / mu)?),
        ("gam1", ServiceDistribution::gamma(mu, 1.0 / (mu * mu))?),
        ("erlang", ServiceDistribution::erlang(5, 1.0 / (5.0 * mu))?),
    ])
}

fn solver(config: SystemConfig, horizon: f64, opts: &PresetOptions) -> Result<TvSolver> {
    let settings = opts.solver.settings(&config, horizon)?;
    TvSolver::new(config, settings)
}

fn simulated(config: &SystemConfig, t: f64, xs: &[f64], opts: &PresetOptions) -> Result<Vec<f64>> {
    empirical_cdf(&SimRequest::new(config.clone(), t, opts.replications, opts.seed)?, xs)
}

fn laws_at(t: f64, xs: &[f64], opts: &PresetOptions) -> Result<Table> {
    let rate = RateProfile::sinusoid(1.7, 1.0, 1.8)?;
    let mut table = Table::new(&["law", "t", "x", "analytic", "simulated"]);
    for (name, law) in comparison_laws(1.2)? {
        let cfg = SystemConfig::new(rate.clone(), law, 0.6)?;
        let phi = solver(cfg.clone(), t, opts)?.cdf_many(t, xs)?;
        let sim = simulated(&cfg, t, xs, opts)?;
        for ((&x, a), s) in xs.iter().zip(phi).zip(sim) {
            table.push(vec![name.into(), t.into(), x.into(), a.into(), s.into()]);
        }
    }
    table.note("theta", 0.6);
    Ok(table)
}

/// Φ(t, x) on `t ∈ {0, 0.5, …, horizon}` for each `x`, with per-time
/// simulations.
fn trajectories(
    cfg: &SystemConfig,
    xs: &[f64],
    horizon: f64,
    opts: &PresetOptions,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let s = solver(cfg.clone(), horizon, opts)?;
    let times = steps(0.0, horizon, 0.5);
    let per_time: Vec<Vec<(f64, f64, f64, f64)>> = times
        .par_iter()
        .map(|&t| {
            let phi = xs.iter().map(|&x| s.cdf(t, x)).collect::<Result<Vec<_>>>()?;
            let sim = simulated(cfg, t, xs, opts)?;
            Ok(xs
                .iter()
                .zip(phi)
                .zip(sim)
                .map(|((&x, a), b)| (t, x, a, b))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_time.into_iter().flatten().collect())
}

fn over_time(rate: RateProfile, opts: &PresetOptions) -> Result<Table> {
    let cfg = SystemConfig::new(rate.clone(), ServiceDistribution::exponential(1.5)?, 0.2)?;
    let mut table = Table::new(&["t", "x", "lambda", "analytic", "simulated"]);
    for (t, x, a, s) in trajectories(&cfg, &[0.5, 1.5, 2.5, 3.5], 20.0, opts)? {
        table.push(vec![t.into(), x.into(), rate.rate_at(t)?.into(), a.into(), s.into()]);
    }
    table.note("theta", 0.2);
    table.note("mu", 1.5);
    Ok(table)
}

fn theta_effect(opts: &PresetOptions) -> Result<Table> {
    let mu = 1.5;
    let horizon = 20.0;
    let profiles = [
        ("sinusoid", RateProfile::sinusoid(1.0, 1.0, 0.8)?),
        ("square", RateProfile::square_wave(1.5, 0.5, 3.0, horizon)?),
    ];
    let laws = [
        ("exp", ServiceDistribution::exponential(mu)?),
        ("uni", ServiceDistribution::uniform(2.0 / mu)?),
    ];
    let mut table = Table::new(&["profile", "law", "theta", "t", "x", "analytic", "simulated"]);
    for (pname, rate) in &profiles {
        for (lname, law) in &laws {
            for theta in [0.1, 0.9] {
                let cfg = SystemConfig::new(rate.clone(), *law, theta)?;
                for (t, x, a, s) in trajectories(&cfg, &[0.8, 3.0], horizon, opts)? {
                    table.push(vec![
                        (*pname).into(),
                        (*lname).into(),
                        theta.into(),
                        t.into(),
                        x.into(),
                        a.into(),
                        s.into(),
                    ]);
                }
            }
        }
    }
    Ok(table)
}

fn steady_rows(
    table: &mut Table,
    panel: &str,
    law: &str,
    model: &StationaryModel,
    xs: &[f64],
    sim_time: f64,
    opts: &PresetOptions,
) -> Result<()> {
    let inv = InversionSettings::default();
    let cfg = SystemConfig::new(RateProfile::constant(model.lambda)?, model.service, model.theta)?;
    let sim = simulated(&cfg, sim_time, xs, opts)?;
    let rows = xs
        .par_iter()
        .map(|&x| Ok((aoi_cdf_stationary(model, x, &inv)?, aoi_pdf_stationary(model, x, &inv)?)))
        .collect::<Result<Vec<_>>>()?;
    for ((&x, (cdf, pdf)), s) in xs.iter().zip(rows).zip(sim) {
        table.push(vec![
            panel.into(),
            law.into(),
            model.theta.into(),
            x.into(),
            cdf.into(),
            pdf.into(),
            s.into(),
        ]);
    }
    Ok(())
}

fn steady_vs_simulation(opts: &PresetOptions) -> Result<Table> {
    let mu = 1.2;
    let mut table = Table::new(&["panel", "law", "theta", "x", "cdf", "pdf", "simulated"]);
    let erl = StationaryModel::new(2.0, ServiceDistribution::erlang(5, 1.0 / (5.0 * mu))?, 0.5)?;
    steady_rows(&mut table, "erlang", "erlang", &erl, &steps(0.1, 6.0, 0.1), 50.0, opts)?;

    let mut laws = comparison_laws(mu)?;
    laws.insert(1, ("det", ServiceDistribution::deterministic(1.0 / mu)?));
    laws.insert(4, ("gam2", ServiceDistribution::gamma(1.0 / mu, 1.0)?));
    let xs = steps(0.2, 10.0, 0.2);
    for theta in [0.0, 0.3] {
        for (name, law) in &laws {
            let m = StationaryModel::new(0.8, *law, theta)?;
            steady_rows(&mut table, "laws", name, &m, &xs, 60.0, opts)?;
        }
    }
    Ok(table)
}

fn theta_sweep(opts: &PresetOptions) -> Result<Table> {
    let mu = 1.2;
    let law = ServiceDistribution::erlang(2, 1.0 / (2.0 * mu))?;
    let mut table = Table::new(&["panel", "law", "theta", "x", "cdf", "pdf", "simulated"]);
    let xs = steps(0.05, 5.0, 0.05);
    for k in 0..=5 {
        let m = StationaryModel::new(3.5, law, 0.2 * k as f64)?;
        steady_rows(&mut table, "theta", "erlang", &m, &xs, 40.0, opts)?;
    }
    Ok(table)
}

/// Seven windows of length 8 with a tight constraint in the middle.
pub fn fig8_schedule() -> Result<ConstraintSchedule> {
    ConstraintSchedule::new(
        (0..8).map(|k| 8.0 * k as f64).collect(),
        vec![7.5, 6.5, 4.5, 3.0, 4.5, 6.5, 7.5],
        vec![0.9; 7],
    )
}

fn rate_plans(opts: &PresetOptions) -> Result<Table> {
    let service = ServiceDistribution::uniform(4.0 / 3.0)?;
    let schedule = fig8_schedule()?;
    let settings = OptimizerSettings {
        solver_etol: opts.solver.etol.unwrap_or(OptimizerSettings::default().solver_etol),
        ..OptimizerSettings::default()
    };
    let heuristic = optimize_rates(&service, &schedule, &settings)?.into_result()?;
    let bench = benchmark_constant_rate(&service, &schedule, &settings)?.into_result()?;
    let eval = default_eval_grid(&schedule, settings.eval_spacing);
    let bench_checks = audit_plan(&service, bench.theta, &schedule, &bench.plan, &eval, &settings)?;

    let hcfg = SystemConfig::new(heuristic.plan.to_profile()?, service, heuristic.theta)?;
    let sims = heuristic
        .checks
        .par_iter()
        .map(|c| Ok(simulated(&hcfg, c.eta, &[c.threshold], opts)?[0]))
        .collect::<Result<Vec<f64>>>()?;

    let hprof = heuristic.plan.to_profile()?;
    let bprof = bench.plan.to_profile()?;
    let mut table = Table::new(&[
        "eta",
        "interval",
        "threshold",
        "required",
        "heuristic_rate",
        "heuristic_phi",
        "heuristic_simulated",
        "benchmark_rate",
        "benchmark_phi",
    ]);
    for ((h, b), s) in heuristic.checks.iter().zip(&bench_checks).zip(sims) {
        table.push(vec![
            h.eta.into(),
            Cell::Int(h.interval as i64),
            h.threshold.into(),
            h.required.into(),
            hprof.rate_at(h.eta)?.into(),
            h.value.into(),
            s.into(),
            bprof.rate_at(b.eta)?.into(),
            b.value.into(),
        ]);
    }
    table.note("theta", heuristic.theta);
    table.note("heuristic_cost", heuristic.plan.cost());
    table.note("benchmark_cost", bench.plan.cost());
    table.note("heuristic_iterations", Cell::Int(heuristic.iterations as i64));
    Ok(table)
}
