use crate::error::{AoiError, Result};

/// Values on the equally spaced nodes `t0 + k·step`, `k = 0..values.len()`,
/// evaluated between nodes by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    t0: f64,
    step: f64,
    values: Vec<f64>,
}

// Relative slack for evaluation right at the grid ends.
const EDGE_SLACK: f64 = 1e-9;

impl GridFunction {
    pub fn new(t0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(AoiError::Config(format!("grid step must be positive, got {step}")));
        }
        if !t0.is_finite() {
            return Err(AoiError::Config("grid origin must be finite".into()));
        }
        if values.len() < 2 {
            return Err(AoiError::Config("grid needs at least two nodes".into()));
        }
        Ok(Self { t0, step, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn t_end(&self) -> f64 {
        self.node(self.values.len() - 1)
    }

    /// Cell index `k` and fraction in `[0, 1)` with `t = node(k) + frac·step`;
    /// the right end maps to `(len-2, 1.0)`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let last = self.values.len() - 1;
        let pos = (t - self.t0) / self.step;
        if !(pos >= -EDGE_SLACK && pos <= last as f64 * (1.0 + EDGE_SLACK) + EDGE_SLACK) {
            return Err(AoiError::Domain(format!(
                "t = {t} outside grid [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        let pos = pos.clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last - 1);
        Ok((k, pos - k as f64))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (k, frac) = self.locate(t)?;
        let v = &self.values;
        Ok(v[k] + frac * (v[k + 1] - v[k]))
    }
}
