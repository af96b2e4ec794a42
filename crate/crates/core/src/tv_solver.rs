//! Transient AoI distribution `Φ(t,x) = P(Δ(t) ≤ x)` under a time-varying
//! Poisson rate, for a system started empty.
//!
//! Three quantities are chained:
//!
//! * the idle probability `M(t,∞)`, the solution of a Volterra equation of the
//!   second kind, computed on `[0, T]` by successive approximation;
//! * the completion kernel `G_z(t,y,0)` and `M(t,x) = P(Δ(t) ≤ x, idle)`,
//!   plain quadratures once `M(·,∞)` is known;
//! * `Φ(t,x)` itself: along the diagonal `t − x = u` the equation becomes a
//!   one-dimensional Volterra equation in `x`, again solved by successive
//!   approximation.
//!
//! All integrals use the composite trapezoid rule on equally spaced nodes;
//! cumulative intensities come from the closed-form [`RateProfile::rate_integral`].
//! Kernel terms that carry `1 − F` or `f` are truncated where the service tail
//! drops below `1e-16`.

use rayon::prelude::*;

use crate::error::{AoiError, Result};
use crate::model::{GridFunction, RateProfile, SystemConfig};

/// Service tail mass below which kernel terms are dropped.
const TAIL_EPS: f64 = 1e-16;

/// Order in which grid nodes are refreshed during one successive-approximation
/// sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Update nodes in increasing time, reusing values refreshed earlier in
    /// the same sweep.
    #[default]
    Forward,
    /// Evaluate the whole right-hand side from the previous iterate, then
    /// replace every node at once.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Horizon `T`; the idle curve covers `[0, T]`.
    pub horizon: f64,
    /// Number of grid intervals; step `h = T/n`.
    pub grid_n: usize,
    pub etol: f64,
    pub ite_max: usize,
    pub sweep: SweepOrder,
}

impl SolverSettings {
    pub const DEFAULT_ETOL: f64 = 1e-8;
    pub const DEFAULT_ITE_MAX: usize = 200;

    pub fn new(horizon: f64, grid_n: usize) -> Result<Self> {
        let s = Self {
            horizon,
            grid_n,
            etol: Self::DEFAULT_ETOL,
            ite_max: Self::DEFAULT_ITE_MAX,
            sweep: SweepOrder::Forward,
        };
        s.validate()?;
        Ok(s)
    }

    /// Grid with `h ≤ min(0.01, mean service / 20)`.
    pub fn for_config(config: &SystemConfig, horizon: f64) -> Result<Self> {
        let h_max = (config.service.mean() / 20.0).min(0.01);
        let n = (horizon / h_max).ceil().max(2.0) as usize;
        Self::new(horizon, n)
    }

    pub fn with_etol(mut self, etol: f64) -> Self {
        self.etol = etol;
        self
    }

    pub fn with_ite_max(mut self, ite_max: usize) -> Self {
        self.ite_max = ite_max;
        self
    }

    pub fn with_sweep(mut self, sweep: SweepOrder) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.grid_n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(AoiError::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.grid_n < 2 {
            return Err(AoiError::Config("grid needs at least 2 intervals".into()));
        }
        if !(self.etol > 0.0) {
            return Err(AoiError::Config("etol must be positive".into()));
        }
        if self.ite_max < 1 {
            return Err(AoiError::Config("ite_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// `M(t,∞)`, the probability that the system is empty at `t`, on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdleProbabilityCurve {
    curve: GridFunction,
    iterations: usize,
    residual: f64,
}

impl IdleProbabilityCurve {
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.curve.eval(t)
    }

    pub fn grid(&self) -> &GridFunction {
        &self.curve
    }

    pub fn values(&self) -> &[f64] {
        self.curve.values()
    }

    pub fn horizon(&self) -> f64 {
        self.curve.t_end()
    }

    /// Sweeps used.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `max_i |RHS_i(w) − w_i|` of the returned values.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

fn require_bounded_density(config: &SystemConfig) -> Result<()> {
    if !config.service.has_bounded_density() {
        return Err(AoiError::Unsupported(format!(
            "time-varying solver needs a bounded service density; {:?} has none",
            config.service
        )));
    }
    Ok(())
}

fn band_len(config: &SystemConfig, h: f64) -> usize {
    (config.service.tail_cutoff(TAIL_EPS) / h).ceil() as usize + 1
}

/// Solves `M(t,∞) = 1 − ∫₀ᵗ λ(r)(1 − F(t−r))(θ + (1−θ)M(r,∞)) e^{−θΛ(r,t)} dr`,
/// the busy-probability form of the idle-probability equation, on the grid
/// `t_i = i·h`.
pub fn solve_idle_prob(
    config: &SystemConfig,
    settings: &SolverSettings,
) -> Result<IdleProbabilityCurve> {
    config.validate()?;
    settings.validate()?;
    let theta = config.theta;
    let n = settings.grid_n;
    let h = settings.step();
    let lambda = config.rate.node_rates(0.0, h, n)?;
    let big_lambda = config.rate.cumulative_on_grid(0.0, h, n)?;
    let band = band_len(config, h).min(n);
    let tail: Vec<f64> = (0..=band).map(|k| config.service.ccdf(k as f64 * h)).collect();

    // For node i: constant part c_i and coefficients b_ij of w_j (j in window).
    // rhs_i = 1 − c_i − Σ_j b_ij w_j
    let rhs_at = |i: usize, w: &[f64]| -> f64 {
        if i == 0 {
            return 1.0;
        }
        let lo = i.saturating_sub(band);
        let mut acc = 0.0;
        for j in lo..=i {
            let wt = if j == 0 || j == i { 0.5 } else { 1.0 };
            let decay = (-theta * (big_lambda[i] - big_lambda[j])).exp();
            acc += wt * lambda[j] * tail[i - j] * (theta + (1.0 - theta) * w[j]) * decay;
        }
        1.0 - h * acc
    };

    let mut w = vec![1.0; n + 1];
    let mut iterations = 0;
    if theta == 1.0 {
        // no dependence on w: one quadrature pass
        for i in 0..=n {
            w[i] = rhs_at(i, &w);
        }
        iterations = 1;
    } else {
        loop {
            if iterations >= settings.ite_max {
                let residual = (0..=n)
                    .map(|i| (rhs_at(i, &w) - w[i]).abs())
                    .fold(0.0, f64::max);
                return Err(AoiError::Convergence {
                    iterations,
                    residual,
                });
            }
            iterations += 1;
            let error = match settings.sweep {
                SweepOrder::Forward => {
                    let mut err = 0.0_f64;
                    for i in 0..=n {
                        let r = rhs_at(i, &w);
                        err = err.max((r - w[i]).abs());
                        w[i] = r;
                    }
                    err
                }
                SweepOrder::Jacobi => {
                    let next: Vec<f64> = (0..=n).into_par_iter().map(|i| rhs_at(i, &w)).collect();
                    let err = next
                        .iter()
                        .zip(&w)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    w = next;
                    err
                }
            };
            if error <= settings.etol {
                break;
            }
        }
    }
    let residual = (0..=n)
        .map(|i| (rhs_at(i, &w) - w[i]).abs())
        .fold(0.0, f64::max);
    Ok(IdleProbabilityCurve {
        curve: GridFunction::new(0.0, h, w)?,
        iterations,
        residual,
    })
}

/// Per-diagonal quantities for fixed `u = t − x` on the grid `τ_k = k·hx`,
/// `k = 0..=m`.
struct DiagonalPath {
    hx: f64,
    /// trapezoid node rates at `u + τ_k`
    lambda: Vec<f64>,
    /// `Λ(u, u + τ_k)`
    cum: Vec<f64>,
    /// `M(u + τ_k, τ_k)`
    m_path: Vec<f64>,
}

/// Service mass of the trapezoid cells around each node, used in place of
/// `h·f(d·h)` so that jumps of the density are integrated exactly.
///
/// For the node at lag `d` (in steps) the cell is `[(d−½)h, (d+½)h] ∩ [0, ∞)`;
/// the node at the far end of the integration range owns only `[(d−½)h, d·h]`.
struct CellMasses {
    interior: Vec<f64>,
    far_end: Vec<f64>,
}

impl CellMasses {
    fn new(service: &crate::model::ServiceDistribution, h: f64, max_lag: usize) -> Self {
        let cdf = |z: f64| service.cdf(z);
        let interior = (0..=max_lag)
            .map(|d| cdf((d as f64 + 0.5) * h) - cdf((d as f64 - 0.5) * h))
            .collect();
        let far_end = (0..=max_lag)
            .map(|d| cdf(d as f64 * h) - cdf((d as f64 - 0.5) * h))
            .collect();
        Self { interior, far_end }
    }

    #[inline]
    fn weight(&self, lag: usize, far_end: bool) -> f64 {
        if lag >= self.interior.len() {
            return 0.0;
        }
        if far_end {
            self.far_end[lag]
        } else {
            self.interior[lag]
        }
    }
}

/// Time-varying solver bound to one configuration: owns the idle curve and
/// answers `G_z`, `M(t,x)` and `Φ(t,x)` queries for `t ≤ T`.
#[derive(Debug, Clone)]
pub struct TvSolver {
    config: SystemConfig,
    settings: SolverSettings,
    idle: IdleProbabilityCurve,
    /// `1 − F(k·h)` and `f(k·h)` for `k` inside the service band.
    band: usize,
}

impl TvSolver {
    pub fn new(config: SystemConfig, settings: SolverSettings) -> Result<Self> {
        require_bounded_density(&config)?;
        let idle = solve_idle_prob(&config, &settings)?;
        let band = band_len(&config, settings.step());
        Ok(Self {
            config,
            settings,
            idle,
            band,
        })
    }

    /// Reuses an already computed idle curve.
    pub fn with_idle(
        config: SystemConfig,
        settings: SolverSettings,
        idle: IdleProbabilityCurve,
    ) -> Result<Self> {
        require_bounded_density(&config)?;
        let band = band_len(&config, settings.step());
        Ok(Self {
            config,
            settings,
            idle,
            band,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn idle(&self) -> &IdleProbabilityCurve {
        &self.idle
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(AoiError::Domain(format!("time {t} must be nonnegative")));
        }
        if t > self.idle.horizon() * (1.0 + 1e-12) {
            return Err(AoiError::Domain(format!(
                "time {t} beyond solver horizon {}",
                self.idle.horizon()
            )));
        }
        Ok(())
    }

    fn step_count(&self, len: f64) -> usize {
        (len / self.settings.step() - 1e-9).ceil().max(1.0) as usize
    }

    /// `G_z(t,y,0) = ∫_{t−y}^{t} λ(r)(θ + (1−θ)M(r,∞)) f(t−r) e^{−θΛ(r,t)} dr`.
    pub fn kernel_gz(&self, t: f64, y: f64) -> Result<f64> {
        if !(y >= 0.0) || t < y {
            return Err(AoiError::Domain(format!("kernel needs t >= y >= 0, got t={t}, y={y}")));
        }
        self.check_time(t)?;
        if y == 0.0 {
            return Ok(0.0);
        }
        let theta = self.config.theta;
        let m = self.step_count(y);
        let hy = y / m as f64;
        let start = t - y;
        let cells = CellMasses::new(&self.config.service, hy, m);
        let rates = self.config.rate.node_rates(start, hy, m)?;
        let mut acc = 0.0;
        for (j, rate) in rates.iter().enumerate() {
            let w = cells.weight(m - j, j == 0);
            if w == 0.0 {
                continue;
            }
            let r = start + j as f64 * hy;
            let a = rate * (theta + (1.0 - theta) * self.idle.eval(r)?);
            let decay = (-theta * self.config.rate.rate_integral(r, t)?).exp();
            acc += w * a * decay;
        }
        Ok(acc)
    }

    fn diagonal(&self, u: f64, x: f64) -> Result<DiagonalPath> {
        let cfg = &self.config;
        let theta = cfg.theta;
        let m = self.step_count(x);
        let hx = x / m as f64;
        let times: Vec<f64> = (0..=m).map(|k| u + k as f64 * hx).collect();
        let lambda = cfg.rate.node_rates(u, hx, m)?;
        let cum = cfg.rate.cumulative_on_grid(u, hx, m)?;
        let admit: Vec<f64> = times
            .iter()
            .zip(&lambda)
            .map(|(&s, &l)| Ok(l * (theta + (1.0 - theta) * self.idle.eval(s)?)))
            .collect::<Result<_>>()?;
        let band = (self.band + 1).min(m);
        let cells = CellMasses::new(&cfg.service, hx, band);

        // g_k = G_z(u + τ_k, τ_k, 0)
        let mut g = vec![0.0; m + 1];
        for (k, gk) in g.iter_mut().enumerate().skip(1) {
            let lo = k.saturating_sub(band);
            let mut acc = 0.0;
            for j in lo..=k {
                acc += cells.weight(k - j, j == 0) * admit[j] * (-theta * (cum[k] - cum[j])).exp();
            }
            *gk = acc;
        }

        // M(u + τ_k, τ_k) = ∫_u^{u+τ_k} g(r) e^{−Λ(r, u+τ_k)} dr, accumulated
        let mut m_path = vec![0.0; m + 1];
        for k in 1..=m {
            let d = (-(cum[k] - cum[k - 1])).exp();
            m_path[k] = d * (m_path[k - 1] + 0.5 * hx * g[k - 1]) + 0.5 * hx * g[k];
        }
        Ok(DiagonalPath {
            hx,
            lambda,
            cum,
            m_path,
        })
    }

    /// `M(t,x) = P(Δ(t) ≤ x, system empty)`.
    pub fn m_tx(&self, t: f64, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(AoiError::Domain(format!("threshold {x} must be nonnegative")));
        }
        self.check_time(t)?;
        if t < x {
            return self.idle.eval(t);
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let path = self.diagonal(t - x, x)?;
        Ok(*path.m_path.last().expect("nonempty path"))
    }

    /// `Φ(t,x) = P(Δ(t) ≤ x)`.
    pub fn cdf(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.cdf_detail(t, x)?.value)
    }

    /// `Φ(t,x)` with iteration diagnostics.
    pub fn cdf_detail(&self, t: f64, x: f64) -> Result<CdfEvaluation> {
        if !(x >= 0.0) {
            return Err(AoiError::Domain(format!("threshold {x} must be nonnegative")));
        }
        self.check_time(t)?;
        if x >= t {
            return Ok(CdfEvaluation::trivial(1.0));
        }
        if x == 0.0 {
            return Ok(CdfEvaluation::trivial(0.0));
        }
        let cfg = &self.config;
        let theta = cfg.theta;
        let path = self.diagonal(t - x, x)?;
        let m = path.m_path.len() - 1;
        let hx = path.hx;
        let band = self.band.min(m);
        let tail: Vec<f64> = (0..=band).map(|k| cfg.service.ccdf(k as f64 * hx)).collect();

        let rhs_at = |i: usize, w: &[f64]| -> f64 {
            if i == 0 {
                return path.m_path[0];
            }
            let lo = i.saturating_sub(band);
            let mut acc = 0.0;
            for j in lo..=i {
                let wt = if j == 0 || j == i { 0.5 } else { 1.0 };
                let decay = (-theta * (path.cum[i] - path.cum[j])).exp();
                acc += wt
                    * path.lambda[j]
                    * tail[i - j]
                    * (theta * w[j] + (1.0 - theta) * path.m_path[j])
                    * decay;
            }
            path.m_path[i] + hx * acc
        };

        let mut w = vec![1.0; m + 1];
        let mut iterations = 0;
        if theta == 0.0 {
            for i in 0..=m {
                w[i] = rhs_at(i, &w);
            }
            iterations = 1;
        } else {
            loop {
                if iterations >= self.settings.ite_max {
                    let residual = (0..=m)
                        .map(|i| (rhs_at(i, &w) - w[i]).abs())
                        .fold(0.0, f64::max);
                    return Err(AoiError::Convergence {
                        iterations,
                        residual,
                    });
                }
                iterations += 1;
                let error = match self.settings.sweep {
                    SweepOrder::Forward => {
                        let mut err = 0.0_f64;
                        for i in 0..=m {
                            let r = rhs_at(i, &w);
                            err = err.max((r - w[i]).abs());
                            w[i] = r;
                        }
                        err
                    }
                    SweepOrder::Jacobi => {
                        let next: Vec<f64> = (0..=m).map(|i| rhs_at(i, &w)).collect();
                        let err = next
                            .iter()
                            .zip(&w)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        w = next;
                        err
                    }
                };
                if error <= self.settings.etol {
                    break;
                }
            }
        }
        let residual = (0..=m)
            .map(|i| (rhs_at(i, &w) - w[i]).abs())
            .fold(0.0, f64::max);
        Ok(CdfEvaluation {
            value: w[m].clamp(0.0, 1.0),
            iterations,
            residual,
        })
    }

    /// `Φ(t, x)` for every `x` in `xs`, evaluated in parallel.
    pub fn cdf_many(&self, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.cdf(t, x)).collect()
    }
}

/// One `Φ(t,x)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEvaluation {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl CdfEvaluation {
    fn trivial(value: f64) -> Self {
        Self {
            value,
            iterations: 0,
            residual: 0.0,
        }
    }
}

/// `G_z(t,y,0)` against a precomputed idle curve.
pub fn kernel_gz(
    config: &SystemConfig,
    idle: &IdleProbabilityCurve,
    settings: &SolverSettings,
    t: f64,
    y: f64,
) -> Result<f64> {
    TvSolver::with_idle(config.clone(), *settings, idle.clone())?.kernel_gz(t, y)
}

/// `M(t,x)` against a precomputed idle curve.
pub fn m_tx(
    config: &SystemConfig,
    idle: &IdleProbabilityCurve,
    settings: &SolverSettings,
    t: f64,
    x: f64,
) -> Result<f64> {
    TvSolver::with_idle(config.clone(), *settings, idle.clone())?.m_tx(t, x)
}

/// `Φ(t,x)`; builds the idle curve on `[0, max(t, settings.horizon)]`.
pub fn aoi_cdf_tv(config: &SystemConfig, t: f64, x: f64, settings: &SolverSettings) -> Result<f64> {
    if !(t >= 0.0 && x >= 0.0) {
        return Err(AoiError::Domain(format!("need t, x >= 0 (t={t}, x={x})")));
    }
    if x >= t {
        return Ok(1.0);
    }
    let mut s = *settings;
    if t > s.horizon {
        let h = s.step();
        s.horizon = t;
        s.grid_n = (t / h).ceil() as usize;
    }
    TvSolver::new(config.clone(), s)?.cdf(t, x)
}

/// Zero processing time: `Φ(t,x) = 1 − e^{−Λ(t−x, t)}` for `t > x`, else 1.
pub fn aoi_cdf_negligible(profile: &RateProfile, t: f64, x: f64) -> Result<f64> {
    if !(t >= 0.0 && x >= 0.0) {
        return Err(AoiError::Domain(format!("need t, x >= 0 (t={t}, x={x})")));
    }
    if t <= x {
        return Ok(1.0);
    }
    Ok(-(-profile.rate_integral(t - x, t)?).exp_m1())
}

/// Zero processing time: `E[Δ(t)] = ∫₀ᵗ e^{−Λ(t−x, t)} dx`.
pub fn mean_aoi_negligible(profile: &RateProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(AoiError::Domain(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    crate::quadrature::composite_gauss_legendre(
        |x| Ok((-profile.rate_integral(t - x, t)?).exp()),
        0.0,
        t,
        &[],
        0.25,
    )
}
