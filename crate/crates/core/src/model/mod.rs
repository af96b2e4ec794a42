//! Arrival profiles, service laws, and the system configuration shared by
//! every solver.

pub mod config;
pub mod grid;
pub mod rate;
pub mod service;

pub use config::ModelSpec;
pub use grid::GridFunction;
pub use rate::{PiecewiseConstant, RateProfile, Tabulated};
pub use service::{sample_service, ServiceDistribution, ServiceSampler};

use crate::error::{AoiError, Result};

/// M_t/G/1/1 system with probabilistic preemption, started empty
/// (`Δ(0) = A(0) = W(0) = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub rate: RateProfile,
    pub service: ServiceDistribution,
    /// Probability that an arrival during a busy period replaces the packet
    /// in service.
    pub theta: f64,
}

impl SystemConfig {
    pub fn new(rate: RateProfile, service: ServiceDistribution, theta: f64) -> Result<Self> {
        let cfg = Self {
            rate,
            service,
            theta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.rate.validate()?;
        self.service.validate()?;
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(AoiError::Config(format!(
                "preemption probability {} outside [0, 1]",
                self.theta
            )));
        }
        Ok(())
    }
}
