//! Minimal-cost piecewise-constant sampling rates under time-varying AoI
//! violation constraints `P(Δ(t) ≤ xᵢ) ≥ pᵢ` for `t ∈ [tᵢ, tᵢ₊₁)`.
//!
//! The heuristic fixes the preemption policy from the service law, splits
//! every requirement interval into a cruising part and a preparation part
//! that anticipates the next requirement, picks each part's rate from the
//! steady-state model, and then tightens the targets `p̃` wherever the
//! time-varying solution shows a violation.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};
use crate::model::{RateProfile, ServiceDistribution, SystemConfig};
use crate::stationary::{aoi_cdf_stationary, InversionSettings, StationaryModel};
use crate::tv_solver::{SolverSettings, TvSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSchedule {
    /// `t₀ < t₁ < … < t_n`
    pub times: Vec<f64>,
    /// `x₀ … x_{n−1}`
    pub thresholds: Vec<f64>,
    /// `p₀ … p_{n−1}`
    pub probabilities: Vec<f64>,
}

impl ConstraintSchedule {
    pub fn new(times: Vec<f64>, thresholds: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        let s = Self {
            times,
            thresholds,
            probabilities,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn intervals(&self) -> usize {
        self.thresholds.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated schedule")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.thresholds.len();
        if n == 0 || self.times.len() != n + 1 || self.probabilities.len() != n {
            return Err(AoiError::Config(format!(
                "schedule needs n+1 times and n thresholds/probabilities (got {}, {}, {})",
                self.times.len(),
                n,
                self.probabilities.len()
            )));
        }
        if self.times.iter().any(|t| !t.is_finite()) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AoiError::Config("schedule times must be finite and strictly increasing".into()));
        }
        for i in 0..n {
            let x = self.thresholds[i];
            let p = self.probabilities[i];
            if !(x > 0.0) {
                return Err(AoiError::Config(format!("threshold x{i} = {x} must be positive")));
            }
            if !(p > 0.0 && p < 1.0) {
                return Err(AoiError::Config(format!("probability p{i} = {p} must lie in (0, 1)")));
            }
            if x >= self.times[i + 1] - self.times[i] {
                return Err(AoiError::Config(format!(
                    "threshold x{i} = {x} does not fit inside [{}, {})",
                    self.times[i],
                    self.times[i + 1]
                )));
            }
        }
        Ok(())
    }

    /// Requirement interval containing `t`, if any.
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        if t < self.times[0] || t >= self.horizon() {
            return None;
        }
        Some(self.times.partition_point(|&s| s <= t) - 1)
    }
}

/// Piecewise-constant rate `λ_k` on `[t̃_k, t̃_{k+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRatePlan {
    pub breakpoints: Vec<f64>,
    pub rates: Vec<f64>,
}

impl PiecewiseRatePlan {
    pub fn new(breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != rates.len() + 1 || rates.is_empty() {
            return Err(AoiError::Config("plan needs one more breakpoint than rates".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AoiError::Config("plan breakpoints must increase".into()));
        }
        if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(AoiError::Config("plan rates must be finite and nonnegative".into()));
        }
        Ok(Self { breakpoints, rates })
    }

    /// `J = Σ λ_k (t̃_{k+1} − t̃_k)`.
    pub fn cost(&self) -> f64 {
        self.rates
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(r, w)| r * (w[1] - w[0]))
            .sum()
    }

    /// Rows `(start, end, rate)`.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        self.rates
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(&r, w)| (w[0], w[1], r))
            .collect()
    }

    /// The plan as an arrival profile; the last rate continues past the end.
    pub fn to_profile(&self) -> Result<RateProfile> {
        RateProfile::piecewise(self.breakpoints[..self.rates.len()].to_vec(), self.rates.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    /// Candidate rates, ascending.
    pub rate_grid: Vec<f64>,
    pub epsilon: f64,
    pub ite_max: usize,
    /// Evaluation nodes; `None` uses [`default_eval_grid`].
    pub eval_grid: Option<Vec<f64>>,
    pub eval_spacing: f64,
    pub inversion: InversionSettings,
    /// Time-varying solver step; `None` uses the solver default.
    pub solver_step: Option<f64>,
    pub solver_etol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            rate_grid: log_grid(0.05, 20.0, 60),
            epsilon: 0.01,
            ite_max: 30,
            eval_grid: None,
            eval_spacing: 0.5,
            inversion: InversionSettings::default(),
            solver_step: None,
            solver_etol: SolverSettings::DEFAULT_ETOL,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.rate_grid.is_empty()
            || self.rate_grid.iter().any(|r| !(*r > 0.0 && r.is_finite()))
            || self.rate_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(AoiError::Config("rate grid must be positive, finite and ascending".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(AoiError::Config("epsilon must be positive".into()));
        }
        if self.ite_max < 1 {
            return Err(AoiError::Config("ite_max must be at least 1".into()));
        }
        if !(self.eval_spacing > 0.0) {
            return Err(AoiError::Config("evaluation spacing must be positive".into()));
        }
        Ok(())
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|k| lo * (ratio * k as f64).exp()).collect()
}

/// Nodes `spacing, 2·spacing, …` (offset from `t₀`) inside `(t₀ + x₀, t_n)`;
/// before `t₀ + x₀` the constraint holds trivially.
pub fn default_eval_grid(schedule: &ConstraintSchedule, spacing: f64) -> Vec<f64> {
    let t0 = schedule.times[0];
    let start = t0 + schedule.thresholds[0];
    let end = schedule.horizon();
    (1..)
        .map(|k| t0 + k as f64 * spacing)
        .take_while(|&t| t < end - 1e-12)
        .filter(|&t| t > start)
        .collect()
}

/// Preemption policy by service family: preempt for the memoryless law and
/// for gamma laws with decreasing failure rate, never otherwise.
pub fn choose_theta(service: &ServiceDistribution) -> f64 {
    match *service {
        ServiceDistribution::Exponential { .. } => 1.0,
        ServiceDistribution::Deterministic { .. } | ServiceDistribution::Uniform { .. } => 0.0,
        ServiceDistribution::Gamma { shape, .. } => {
            if shape < 1.0 {
                1.0
            } else {
                0.0
            }
        }
        ServiceDistribution::Erlang { .. } => 0.0,
    }
}

/// Sub-interval breakpoints `t̃`: interval `i < n−1` splits at
/// `tᵢ₊₁ − xᵢ₊₁`; the last interval is not split.
pub fn split_windows(schedule: &ConstraintSchedule) -> Result<Vec<f64>> {
    schedule.validate()?;
    let n = schedule.intervals();
    let t = &schedule.times;
    let mut out = vec![t[0]];
    for i in 0..n - 1 {
        let split = t[i + 1] - schedule.thresholds[i + 1];
        if !(split > t[i]) {
            return Err(AoiError::Config(format!(
                "preparation window for x{} = {} swallows [{}, {})",
                i + 1,
                schedule.thresholds[i + 1],
                t[i],
                t[i + 1]
            )));
        }
        out.push(split);
        out.push(t[i + 1]);
    }
    out.push(t[n]);
    Ok(out)
}

/// Steady-state CDF evaluations keyed by `(rate index, x bits)`.
#[derive(Debug, Default)]
pub struct StationaryCache {
    values: Mutex<HashMap<(usize, u64), f64>>,
}

impl StationaryCache {
    fn get_or_compute(
        &self,
        service: &ServiceDistribution,
        theta: f64,
        rate_index: usize,
        rate: f64,
        x: f64,
        inversion: &InversionSettings,
    ) -> Result<f64> {
        let key = (rate_index, x.to_bits());
        if let Some(v) = self.values.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let model = StationaryModel::new(rate, *service, theta)?;
        let v = aoi_cdf_stationary(&model, x, inversion)?;
        self.values.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }
}

/// Smallest grid rate whose steady-state CDF meets every `(x, p)`; `None` if
/// no grid rate does.
pub fn stationary_rate_search(
    service: &ServiceDistribution,
    theta: f64,
    constraints: &[(f64, f64)],
    settings: &OptimizerSettings,
) -> Result<Option<f64>> {
    search_cached(service, theta, constraints, settings, &StationaryCache::default())
}

fn search_cached(
    service: &ServiceDistribution,
    theta: f64,
    constraints: &[(f64, f64)],
    settings: &OptimizerSettings,
    cache: &StationaryCache,
) -> Result<Option<f64>> {
    if constraints.is_empty() {
        return Err(AoiError::Config("rate search needs at least one constraint".into()));
    }
    for (idx, &rate) in settings.rate_grid.iter().enumerate() {
        let mut ok = true;
        for &(x, p) in constraints {
            if cache.get_or_compute(service, theta, idx, rate, x, &settings.inversion)? < p {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(rate));
        }
    }
    Ok(None)
}

/// `Φ(η, x_k)` at one evaluation node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCheck {
    pub eta: f64,
    pub interval: usize,
    pub threshold: f64,
    pub required: f64,
    pub value: f64,
}

impl NodeCheck {
    pub fn satisfied(&self) -> bool {
        self.value >= self.required
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedPlan {
    pub plan: PiecewiseRatePlan,
    pub theta: f64,
    pub iterations: usize,
    /// Final targets `p̃`.
    pub targets: Vec<f64>,
    pub checks: Vec<NodeCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleReport {
    pub reason: String,
    pub iterations: usize,
    pub targets: Vec<f64>,
    pub violations: Vec<NodeCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Feasible(OptimizedPlan),
    Infeasible(InfeasibleReport),
}

impl PlanOutcome {
    pub fn feasible(&self) -> Option<&OptimizedPlan> {
        match self {
            PlanOutcome::Feasible(p) => Some(p),
            PlanOutcome::Infeasible(_) => None,
        }
    }

    /// Feasible plan or an [`AoiError::Infeasible`].
    pub fn into_result(self) -> Result<OptimizedPlan> {
        match self {
            PlanOutcome::Feasible(p) => Ok(p),
            PlanOutcome::Infeasible(r) => Err(AoiError::Infeasible(format!(
                "{} after {} iterations; {} violating nodes",
                r.reason,
                r.iterations,
                r.violations.len()
            ))),
        }
    }
}

/// Evaluates `Φ(η, x_k)` for every node under `plan` with a freshly solved
/// time-varying model.
pub fn audit_plan(
    service: &ServiceDistribution,
    theta: f64,
    schedule: &ConstraintSchedule,
    plan: &PiecewiseRatePlan,
    eval_grid: &[f64],
    settings: &OptimizerSettings,
) -> Result<Vec<NodeCheck>> {
    let config = SystemConfig::new(plan.to_profile()?, *service, theta)?;
    let horizon = schedule.horizon();
    let mut solver_settings = SolverSettings::for_config(&config, horizon)?.with_etol(settings.solver_etol);
    if let Some(h) = settings.solver_step {
        solver_settings = SolverSettings::new(horizon, (horizon / h).ceil() as usize)?
            .with_etol(settings.solver_etol);
    }
    let solver = TvSolver::new(config, solver_settings)?;
    eval_grid
        .par_iter()
        .filter_map(|&eta| schedule.interval_of(eta).map(|k| (eta, k)))
        .map(|(eta, k)| {
            let x = schedule.thresholds[k];
            Ok(NodeCheck {
                eta,
                interval: k,
                threshold: x,
                required: schedule.probabilities[k],
                value: solver.cdf(eta, x)?,
            })
        })
        .collect()
}

fn eval_grid_for(schedule: &ConstraintSchedule, settings: &OptimizerSettings) -> Vec<f64> {
    settings
        .eval_grid
        .clone()
        .unwrap_or_else(|| default_eval_grid(schedule, settings.eval_spacing))
}

/// Rates for every sub-interval under targets `p̃`; `Err(reason)` if some
/// sub-interval has no qualifying grid rate.
fn initial_rates(
    service: &ServiceDistribution,
    theta: f64,
    schedule: &ConstraintSchedule,
    targets: &[f64],
    settings: &OptimizerSettings,
    cache: &StationaryCache,
) -> Result<std::result::Result<Vec<f64>, String>> {
    let n = schedule.intervals();
    let x = &schedule.thresholds;
    let mut windows: Vec<Vec<(f64, f64)>> = Vec::with_capacity(2 * n - 1);
    for i in 0..n - 1 {
        windows.push(vec![(x[i], targets[i])]);
        windows.push(vec![(x[i], targets[i]), (x[i + 1], targets[i + 1])]);
    }
    windows.push(vec![(x[n - 1], targets[n - 1])]);
    let found: Vec<Option<f64>> = windows
        .par_iter()
        .map(|c| search_cached(service, theta, c, settings, cache))
        .collect::<Result<_>>()?;
    let mut rates = Vec::with_capacity(found.len());
    for (k, r) in found.into_iter().enumerate() {
        match r {
            Some(r) => rates.push(r),
            None => {
                return Ok(Err(format!(
                    "no grid rate meets the steady-state targets of sub-interval {k}"
                )))
            }
        }
    }
    Ok(Ok(rates))
}

/// Refinement loop shared by the heuristic and the constant benchmark.
fn refine<F>(
    service: &ServiceDistribution,
    schedule: &ConstraintSchedule,
    settings: &OptimizerSettings,
    theta: f64,
    mut build: F,
) -> Result<PlanOutcome>
where
    F: FnMut(&[f64]) -> Result<std::result::Result<PiecewiseRatePlan, String>>,
{
    settings.validate()?;
    schedule.validate()?;
    let eval = eval_grid_for(schedule, settings);
    let mut targets = schedule.probabilities.clone();
    let mut last_violations = Vec::new();
    for ite in 1..=settings.ite_max {
        let plan = match build(&targets)? {
            Ok(p) => p,
            Err(reason) => {
                return Ok(PlanOutcome::Infeasible(InfeasibleReport {
                    reason,
                    iterations: ite,
                    targets,
                    violations: last_violations,
                }))
            }
        };
        let checks = audit_plan(service, theta, schedule, &plan, &eval, settings)?;
        let violations: Vec<NodeCheck> = checks.iter().filter(|c| !c.satisfied()).copied().collect();
        if violations.is_empty() {
            return Ok(PlanOutcome::Feasible(OptimizedPlan {
                plan,
                theta,
                iterations: ite,
                targets,
                checks,
            }));
        }
        let mut bumped = vec![false; targets.len()];
        for v in &violations {
            if !bumped[v.interval] {
                targets[v.interval] += settings.epsilon;
                bumped[v.interval] = true;
            }
        }
        last_violations = violations;
    }
    Ok(PlanOutcome::Infeasible(InfeasibleReport {
        reason: "iteration limit reached".into(),
        iterations: settings.ite_max,
        targets,
        violations: last_violations,
    }))
}

/// Heuristic piecewise-constant plan on the split windows.
pub fn optimize_rates(
    service: &ServiceDistribution,
    schedule: &ConstraintSchedule,
    settings: &OptimizerSettings,
) -> Result<PlanOutcome> {
    let theta = choose_theta(service);
    let breakpoints = split_windows(schedule)?;
    let cache = StationaryCache::default();
    refine(service, schedule, settings, theta, |targets| {
        Ok(
            match initial_rates(service, theta, schedule, targets, settings, &cache)? {
                Ok(rates) => Ok(PiecewiseRatePlan::new(breakpoints.clone(), rates)?),
                Err(reason) => Err(reason),
            },
        )
    })
}

/// One rate for the whole horizon meeting every requirement.
pub fn benchmark_constant_rate(
    service: &ServiceDistribution,
    schedule: &ConstraintSchedule,
    settings: &OptimizerSettings,
) -> Result<PlanOutcome> {
    let theta = choose_theta(service);
    let cache = StationaryCache::default();
    let span = vec![schedule.times[0], schedule.horizon()];
    refine(service, schedule, settings, theta, |targets| {
        let constraints: Vec<(f64, f64)> = schedule
            .thresholds
            .iter()
            .copied()
            .zip(targets.iter().copied())
            .collect();
        Ok(
            match search_cached(service, theta, &constraints, settings, &cache)? {
                Some(rate) => Ok(PiecewiseRatePlan::new(span.clone(), vec![rate])?),
                None => Err("no grid rate meets every steady-state target".into()),
            },
        )
    })
}
