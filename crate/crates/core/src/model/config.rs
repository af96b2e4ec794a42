//! Text configuration for a [`SystemConfig`].
//!
//! ```toml
//! theta = 0.6
//!
//! [rate]
//! kind = "sinusoid"      # constant | sinusoid | piecewise | square_wave | tabulated
//! params = [1.7, 1.0, 1.8]
//!
//! [service]
//! kind = "erlang"        # exponential | deterministic | uniform | gamma | erlang
//! params = [5, 0.16666666666666666]
//! ```
//!
//! Parameter lists per kind:
//!
//! | kind | params |
//! |------|--------|
//! | `constant` | `[a]` |
//! | `sinusoid` | `[a, b, ω]` for `a + b·sin(ωt)` |
//! | `piecewise` | none; uses `breakpoints` and `rates` |
//! | `square_wave` | `[first, second, dwell, horizon]` |
//! | `tabulated` | `[t0, step]` plus `values` |
//! | `exponential` | `[μ]` |
//! | `deterministic` | `[d]` |
//! | `uniform` | `[b]` or `[a, b]` |
//! | `gamma` | `[shape, scale]` |
//! | `erlang` | `[stages, scale]` |

use serde::{Deserialize, Serialize};

use super::{RateProfile, ServiceDistribution, SystemConfig};
use crate::error::{AoiError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub rate: RateSpec,
    pub service: ServiceSpec,
    #[serde(default)]
    pub theta: f64,
}

fn expect_params(kind: &str, params: &[f64], counts: &[usize]) -> Result<()> {
    if counts.contains(&params.len()) {
        Ok(())
    } else {
        Err(AoiError::Config(format!(
            "{kind} expects {counts:?} parameters, got {}",
            params.len()
        )))
    }
}

impl RateSpec {
    pub fn build(&self) -> Result<RateProfile> {
        let p = &self.params;
        match self.kind.as_str() {
            "constant" => {
                expect_params("constant", p, &[1])?;
                RateProfile::constant(p[0])
            }
            "sinusoid" => {
                expect_params("sinusoid", p, &[3])?;
                RateProfile::sinusoid(p[0], p[1], p[2])
            }
            "piecewise" => {
                let (Some(b), Some(r)) = (&self.breakpoints, &self.rates) else {
                    return Err(AoiError::Config(
                        "piecewise rate needs `breakpoints` and `rates`".into(),
                    ));
                };
                RateProfile::piecewise(b.clone(), r.clone())
            }
            "square_wave" => {
                expect_params("square_wave", p, &[4])?;
                RateProfile::square_wave(p[0], p[1], p[2], p[3])
            }
            "tabulated" => {
                expect_params("tabulated", p, &[2])?;
                let Some(v) = &self.values else {
                    return Err(AoiError::Config("tabulated rate needs `values`".into()));
                };
                RateProfile::tabulated(p[0], p[1], v.clone())
            }
            other => Err(AoiError::Config(format!("unknown rate kind `{other}`"))),
        }
    }
}

impl ServiceSpec {
    pub fn build(&self) -> Result<ServiceDistribution> {
        let p = &self.params;
        match self.kind.as_str() {
            "exponential" => {
                expect_params("exponential", p, &[1])?;
                ServiceDistribution::exponential(p[0])
            }
            "deterministic" => {
                expect_params("deterministic", p, &[1])?;
                ServiceDistribution::deterministic(p[0])
            }
            "uniform" => {
                expect_params("uniform", p, &[1, 2])?;
                if p.len() == 1 {
                    ServiceDistribution::uniform(p[0])
                } else {
                    ServiceDistribution::uniform_between(p[0], p[1])
                }
            }
            "gamma" => {
                expect_params("gamma", p, &[2])?;
                ServiceDistribution::gamma(p[0], p[1])
            }
            "erlang" => {
                expect_params("erlang", p, &[2])?;
                if p[0] < 1.0 || p[0].fract() != 0.0 {
                    return Err(AoiError::Config(format!(
                        "erlang stage count must be a positive integer, got {}",
                        p[0]
                    )));
                }
                ServiceDistribution::erlang(p[0] as u32, p[1])
            }
            other => Err(AoiError::Config(format!("unknown service kind `{other}`"))),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<SystemConfig> {
        SystemConfig::new(self.rate.build()?, self.service.build()?, self.theta)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AoiError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fig2b_config() {
        let text = r#"
            theta = 0.6
            [rate]
            kind = "sinusoid"
            params = [1.7, 1.0, 1.8]
            [service]
            kind = "erlang"
            params = [5, 0.16666666666666666]
        "#;
        let cfg = ModelSpec::from_toml(text).unwrap().build().unwrap();
        assert_eq!(cfg.theta, 0.6);
        assert_eq!(cfg.rate.rate_at(0.0).unwrap(), 1.7);
        assert!((cfg.service.mean() - 1.0 / 1.2).abs() < 1e-15);
    }

    #[test]
    fn piecewise_and_errors() {
        let text = r#"
            [rate]
            kind = "piecewise"
            breakpoints = [0.0, 3.0]
            rates = [1.5, 0.5]
            [service]
            kind = "uniform"
            params = [1.3333333333333333]
        "#;
        let cfg = ModelSpec::from_toml(text).unwrap().build().unwrap();
        assert_eq!(cfg.theta, 0.0);
        assert_eq!(cfg.rate.rate_at(4.0).unwrap(), 0.5);

        let bad = r#"
            theta = 0.5
            [rate]
            kind = "warp"
            [service]
            kind = "exponential"
            params = [1.0]
        "#;
        assert!(matches!(
            ModelSpec::from_toml(bad).unwrap().build(),
            Err(AoiError::Config(_))
        ));
        assert!(ModelSpec::from_toml("theta = ").is_err());
    }
}
