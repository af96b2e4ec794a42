//! Time-varying Poisson arrival rates and their exact cumulative integrals.

use crate::error::{AoiError, Result};
use crate::model::grid::GridFunction;

/// Arrival (sampling) rate `λ(t)` of a non-homogeneous Poisson process.
#[derive(Debug, Clone, PartialEq)]
pub enum RateProfile {
    /// `λ(t) = a`.
    Constant(f64),
    /// `λ(t) = base + amplitude·sin(frequency·t)`.
    Sinusoid {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    PiecewiseConstant(PiecewiseConstant),
    /// Nodal values with linear interpolation in between.
    Tabulated(Tabulated),
}

/// Step function: `rates[k]` holds on `[breakpoints[k], breakpoints[k+1])`,
/// and the last rate extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    rates: Vec<f64>,
    // Λ(breakpoints[0], breakpoints[k])
    cumulative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: GridFunction,
    // Λ(t0, t0 + k·h), exact for the piecewise-linear interpolant
    cumulative: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != rates.len() {
            return Err(AoiError::Config(format!(
                "piecewise rate needs one rate per breakpoint (got {} breakpoints, {} rates)",
                breakpoints.len(),
                rates.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(AoiError::Config("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AoiError::Config(
                "piecewise breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(AoiError::Config(format!("negative or non-finite rate {r}")));
        }
        let mut cumulative = Vec::with_capacity(rates.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 1..breakpoints.len() {
            acc += rates[k - 1] * (breakpoints[k] - breakpoints[k - 1]);
            cumulative.push(acc);
        }
        Ok(Self {
            breakpoints,
            rates,
            cumulative,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn segment(&self, t: f64) -> Result<usize> {
        if t < self.breakpoints[0] {
            return Err(AoiError::Domain(format!(
                "t = {t} precedes the first breakpoint {}",
                self.breakpoints[0]
            )));
        }
        Ok(self.breakpoints.partition_point(|b| *b <= t) - 1)
    }

    fn cumulative_at(&self, t: f64) -> Result<f64> {
        let k = self.segment(t)?;
        Ok(self.cumulative[k] + self.rates[k] * (t - self.breakpoints[k]))
    }
}

impl Tabulated {
    pub fn new(grid: GridFunction) -> Result<Self> {
        if let Some(v) = grid.values().iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(AoiError::Config(format!("tabulated rate has negative value {v}")));
        }
        let h = grid.step();
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in grid.values().windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self { grid, cumulative })
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    fn cumulative_at(&self, t: f64) -> Result<f64> {
        let (k, frac) = self.grid.locate(t)?;
        let h = self.grid.step();
        let v = self.grid.values();
        if frac == 0.0 {
            return Ok(self.cumulative[k]);
        }
        let slope = v[k + 1] - v[k];
        Ok(self.cumulative[k] + h * frac * (v[k] + 0.5 * frac * slope))
    }
}

impl RateProfile {
    pub fn constant(rate: f64) -> Result<Self> {
        let p = RateProfile::Constant(rate);
        p.validate()?;
        Ok(p)
    }

    pub fn sinusoid(base: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        let p = RateProfile::Sinusoid {
            base,
            amplitude,
            frequency,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn piecewise(breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Ok(RateProfile::PiecewiseConstant(PiecewiseConstant::new(
            breakpoints,
            rates,
        )?))
    }

    /// Square wave starting at `t = 0` with `first` on `[0, dwell)`, `second`
    /// on `[dwell, 2·dwell)`, and so on until `horizon`.
    pub fn square_wave(first: f64, second: f64, dwell: f64, horizon: f64) -> Result<Self> {
        if !(dwell > 0.0) || !(horizon > 0.0) {
            return Err(AoiError::Config(
                "square wave needs positive dwell time and horizon".into(),
            ));
        }
        let pieces = (horizon / dwell).ceil().max(1.0) as usize;
        let breakpoints = (0..pieces).map(|k| k as f64 * dwell).collect();
        let rates = (0..pieces)
            .map(|k| if k % 2 == 0 { first } else { second })
            .collect();
        Self::piecewise(breakpoints, rates)
    }

    pub fn tabulated(t0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        Ok(RateProfile::Tabulated(Tabulated::new(GridFunction::new(
            t0, step, values,
        )?)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateProfile::Constant(a) => {
                if !(*a >= 0.0 && a.is_finite()) {
                    return Err(AoiError::Config(format!("constant rate {a} must be >= 0")));
                }
            }
            RateProfile::Sinusoid {
                base,
                amplitude,
                frequency,
            } => {
                if !(base.is_finite() && amplitude.is_finite() && frequency.is_finite()) {
                    return Err(AoiError::Config("sinusoid parameters must be finite".into()));
                }
                if *base < amplitude.abs() {
                    return Err(AoiError::Config(format!(
                        "sinusoid rate {base} + {amplitude}·sin(·) goes negative"
                    )));
                }
            }
            RateProfile::PiecewiseConstant(_) | RateProfile::Tabulated(_) => {}
        }
        Ok(())
    }

    /// `λ(t)`.
    pub fn rate_at(&self, t: f64) -> Result<f64> {
        let r = match self {
            RateProfile::Constant(a) => *a,
            RateProfile::Sinusoid {
                base,
                amplitude,
                frequency,
            } => base + amplitude * (frequency * t).sin(),
            RateProfile::PiecewiseConstant(p) => p.rates[p.segment(t)?],
            RateProfile::Tabulated(tab) => tab.grid.eval(t)?,
        };
        if r < 0.0 {
            // sin() rounding at a == |b|
            if r > -1e-12 {
                return Ok(0.0);
            }
            return Err(AoiError::Config(format!("negative rate {r} at t = {t}")));
        }
        Ok(r)
    }

    /// `Λ(t0, t1) = ∫_{t0}^{t1} λ(u) du`.
    pub fn rate_integral(&self, t0: f64, t1: f64) -> Result<f64> {
        if t0 > t1 {
            return Err(AoiError::Domain(format!(
                "rate integral bounds reversed: [{t0}, {t1}]"
            )));
        }
        if t0 == t1 {
            return Ok(0.0);
        }
        match self {
            RateProfile::Constant(a) => Ok(a * (t1 - t0)),
            RateProfile::Sinusoid {
                base,
                amplitude,
                frequency,
            } => {
                let mut v = base * (t1 - t0);
                if *frequency != 0.0 {
                    v += amplitude / frequency * ((frequency * t0).cos() - (frequency * t1).cos());
                }
                Ok(v)
            }
            RateProfile::PiecewiseConstant(p) => Ok(p.cumulative_at(t1)? - p.cumulative_at(t0)?),
            RateProfile::Tabulated(tab) => Ok(tab.cumulative_at(t1)? - tab.cumulative_at(t0)?),
        }
    }

    /// Cumulative intensity at every node `t0 + k·h`, `k = 0..=n`, measured
    /// from `t0`.
    pub fn cumulative_on_grid(&self, t0: f64, h: f64, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for k in 1..=n {
            out.push(self.rate_integral(t0, t0 + k as f64 * h)?);
        }
        Ok(out)
    }

    /// Rate attributed to each trapezoid node `t0 + k·h`, `k = 0..=n`: the mean
    /// of `λ` over the node's half cells inside `[t0, t0 + n·h]`. Equal to
    /// `λ(t_k)` up to `O(h²)` where `λ` is smooth, and uses the correct
    /// one-sided values where it jumps.
    pub fn node_rates(&self, t0: f64, h: f64, n: usize) -> Result<Vec<f64>> {
        let half = self.cumulative_on_grid(t0, 0.5 * h, 2 * n)?;
        if n == 0 {
            return Ok(vec![self.rate_at(t0)?]);
        }
        Ok((0..=n)
            .map(|k| {
                let lo = (2 * k).saturating_sub(1);
                let hi = (2 * k + 1).min(2 * n);
                (half[hi] - half[lo]) / ((hi - lo) as f64 * 0.5 * h)
            })
            .collect())
    }

    /// Covers `[t0, t1)` with consecutive segments `(start, end, bound)` where
    /// `bound ≥ λ(t)` on the segment. Used for thinning.
    pub fn bound_segments(&self, t0: f64, t1: f64) -> Result<Vec<(f64, f64, f64)>> {
        if t0 > t1 {
            return Err(AoiError::Domain(format!("reversed interval [{t0}, {t1}]")));
        }
        match self {
            RateProfile::Constant(a) => Ok(vec![(t0, t1, *a)]),
            RateProfile::Sinusoid {
                base, amplitude, ..
            } => Ok(vec![(t0, t1, base + amplitude.abs())]),
            RateProfile::PiecewiseConstant(p) => {
                let mut k = p.segment(t0)?;
                let mut out = Vec::new();
                let mut start = t0;
                while start < t1 {
                    let end = p.breakpoints.get(k + 1).copied().unwrap_or(f64::INFINITY).min(t1);
                    out.push((start, end, p.rates[k]));
                    start = end;
                    k += 1;
                }
                Ok(out)
            }
            RateProfile::Tabulated(tab) => {
                let g = &tab.grid;
                let (mut k, _) = g.locate(t0)?;
                g.locate(t1)?;
                let v = g.values();
                let mut out = Vec::new();
                let mut start = t0;
                while start < t1 {
                    let end = g.node(k + 1).min(t1);
                    out.push((start, end, v[k].max(v[k + 1])));
                    start = end;
                    k += 1;
                }
                Ok(out)
            }
        }
    }

    /// Upper bound of `λ` over `[t0, t1]`.
    pub fn max_rate(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok(self
            .bound_segments(t0, t1)?
            .iter()
            .fold(0.0_f64, |m, s| m.max(s.2)))
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            RateProfile::Constant(a) => Some(*a),
            RateProfile::Sinusoid {
                base, amplitude, ..
            } if *amplitude == 0.0 => Some(*base),
            _ => None,
        }
    }
}
