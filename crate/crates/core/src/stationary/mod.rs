//! Steady-state AoI distribution for a constant arrival rate.
//!
//! Without preemption (`θ = 0`) the CDF is a convolution
//! `Φ(x) = M(x) + λ∫₀ˣ M(s)(1 − F(x−s)) ds` evaluated by nested Gauss–Legendre
//! quadrature. With `θ > 0` the Laplace–Stieltjes transform `Φ̃(s)` is known in
//! closed form and the CDF is recovered by numerical Laplace inversion.

pub mod closed_form;
pub mod inversion;

pub use closed_form::{
    check_dominance, closed_form_md11, closed_form_mm11, closed_form_mm11_preemptive,
};
pub use inversion::{invert, InversionMethod, InversionSettings};

use num_complex::Complex64;

use crate::error::{AoiError, Result};
use crate::model::ServiceDistribution;
use crate::quadrature::composite_gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryModel {
    pub lambda: f64,
    pub service: ServiceDistribution,
    pub theta: f64,
}

impl StationaryModel {
    pub fn new(lambda: f64, service: ServiceDistribution, theta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(AoiError::Config(format!("arrival rate must be positive, got {lambda}")));
        }
        service.validate()?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(AoiError::Config(format!("preemption probability {theta} outside [0, 1]")));
        }
        Ok(Self {
            lambda,
            service,
            theta,
        })
    }

    /// Widest quadrature panel that resolves `F` and the `e^{−λs}` factors.
    fn panel(&self) -> f64 {
        let smooth = match self.service {
            ServiceDistribution::Exponential { rate } => 2.0 / rate,
            ServiceDistribution::Gamma { shape, scale } => 2.0 * scale * shape.sqrt().max(1.0),
            ServiceDistribution::Erlang { stages, scale } => {
                2.0 * scale * (stages as f64).sqrt()
            }
            // piecewise linear or constant between breakpoints
            _ => f64::INFINITY,
        };
        smooth.min(2.0 / self.lambda).min(1.0)
    }

    /// `λ·(F̃(λθ) + λ·(1−F̃(λθ))/(λθ))`-style denominator shared by `M(∞)` and
    /// `Φ̃`, with the factor `θ` divided out.
    fn idle_denominator(&self) -> f64 {
        let w = Complex64::new(self.lambda * self.theta, 0.0);
        self.lambda * self.service.ccdf_laplace(w).re + self.service.lst(w).re
    }
}

/// Long-run probability that the server is idle.
pub fn m_infinity(model: &StationaryModel) -> f64 {
    // θF̃(λθ)/(1−(1−θ)F̃(λθ)) with 1 − F̃(w) = w·L(w) and the θ cancelled;
    // at θ = 0 this is 1/(1 + λ·mean).
    model.service.lst_real(model.lambda * model.theta) / model.idle_denominator()
}

/// `M(x) = P(Δ ≤ x, idle)` in steady state. Uses only `F`, so every service
/// law is accepted.
pub fn m_x_stationary(model: &StationaryModel, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(AoiError::Domain(format!("threshold {x} must be nonnegative")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let lam = model.lambda;
    let th = model.theta;
    let coef = th + (1.0 - th) * m_infinity(model);
    let integral = composite_gauss_legendre(
        |s| {
            let f = model.service.cdf(s);
            Ok(f * (lam * th * (-lam * th * s).exp()
                + lam * (1.0 - th) * (lam * (1.0 - th) * s - lam * x).exp()))
        },
        0.0,
        x,
        &model.service.breakpoints(),
        model.panel(),
    )?;
    Ok(coef * integral)
}

/// Laplace–Stieltjes transform `Φ̃(s) = E[e^{−sΔ}]` of the steady-state AoI.
pub fn aoi_lst(model: &StationaryModel, s: Complex64) -> Complex64 {
    let lam = model.lambda;
    let th = model.theta;
    let w = s + lam * th;
    let k = lam * model.service.ccdf_laplace(w);
    let one = Complex64::new(1.0, 0.0);
    lam / (s + lam) * model.service.lst(w) / model.idle_denominator() * (one + (1.0 - th) * k)
        / (one - th * k)
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(AoiError::Domain(format!("threshold {x} must be nonnegative and finite")));
    }
    Ok(())
}

/// `Φ(x) = P(Δ ≤ x)` in steady state.
pub fn aoi_cdf_stationary(
    model: &StationaryModel,
    x: f64,
    inv: &InversionSettings,
) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if model.theta == 0.0 {
        return convolution_cdf(model, x);
    }
    let v = invert(|s| aoi_lst(model, s) / s, x, inv)?;
    if !(-1e-3..=1.0 + 1e-3).contains(&v) {
        return Err(AoiError::Inversion(format!(
            "inverted CDF {v} at x = {x} is not a probability"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Density of the steady-state AoI.
pub fn aoi_pdf_stationary(
    model: &StationaryModel,
    x: f64,
    inv: &InversionSettings,
) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if model.theta == 0.0 {
        return convolution_pdf(model, x);
    }
    let v = invert(|s| aoi_lst(model, s), x, inv)?;
    Ok(v.max(0.0))
}

fn convolution_breaks(model: &StationaryModel, x: f64) -> Vec<f64> {
    let b = model.service.breakpoints();
    b.iter().copied().chain(b.iter().map(|p| x - p)).collect()
}

fn convolution_cdf(model: &StationaryModel, x: f64) -> Result<f64> {
    let lam = model.lambda;
    let conv = composite_gauss_legendre(
        |s| Ok(m_x_stationary(model, s)? * model.service.ccdf(x - s)),
        0.0,
        x,
        &convolution_breaks(model, x),
        model.panel(),
    )?;
    Ok((m_x_stationary(model, x)? + lam * conv).clamp(0.0, 1.0))
}

fn convolution_pdf(model: &StationaryModel, x: f64) -> Result<f64> {
    // φ = λM(∞)F(x) − λ²∫₀ˣ (M(∞)F(s) − M(s)) F(x−s) ds
    let lam = model.lambda;
    let m_inf = m_infinity(model);
    let conv = composite_gauss_legendre(
        |s| Ok((m_inf * model.service.cdf(s) - m_x_stationary(model, s)?) * model.service.cdf(x - s)),
        0.0,
        x,
        &convolution_breaks(model, x),
        model.panel(),
    )?;
    Ok((lam * m_inf * model.service.cdf(x) - lam * lam * conv).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_model(lambda: f64, mu: f64, theta: f64) -> StationaryModel {
        StationaryModel::new(lambda, ServiceDistribution::exponential(mu).unwrap(), theta).unwrap()
    }

    #[test]
    fn idle_probability_values() {
        assert!((m_infinity(&exp_model(0.8, 1.2, 0.5)) - 0.6).abs() < 1e-14);
        for theta in [0.0, 0.2, 1.0] {
            assert!((m_infinity(&exp_model(2.0, 1.0, theta)) - 1.0 / 3.0).abs() < 1e-14);
        }
        let erl = ServiceDistribution::erlang(3, 0.4).unwrap();
        let zero = StationaryModel::new(1.5, erl, 0.0).unwrap();
        assert!((m_infinity(&zero) - 1.0 / (1.0 + 1.5 * 1.2)).abs() < 1e-15);
        let tiny = StationaryModel::new(1.5, erl, 1e-8).unwrap();
        assert!((m_infinity(&tiny) - m_infinity(&zero)).abs() < 1e-6);
    }

    #[test]
    fn m_x_limits_and_deterministic_branch() {
        let m = exp_model(0.8, 1.2, 0.5);
        assert_eq!(m_x_stationary(&m, 0.0).unwrap(), 0.0);
        assert!((m_x_stationary(&m, 60.0).unwrap() - 0.6).abs() < 1e-6);

        let (lam, mu) = (0.9, 1.25);
        let d = StationaryModel::new(lam, ServiceDistribution::deterministic(1.0 / mu).unwrap(), 0.0)
            .unwrap();
        for &x in &[0.3, 0.8, 1.0, 1.7, 5.0] {
            let want = if x <= 1.0 / mu {
                0.0
            } else {
                mu / (lam + mu) * (1.0 - (-lam * x + lam / mu).exp())
            };
            assert!((m_x_stationary(&d, x).unwrap() - want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn lst_examples() {
        let m = exp_model(2.0, 1.0, 1.0);
        let v = aoi_lst(&m, Complex64::new(1.0, 0.0));
        assert!((v.re - 1.0 / 3.0).abs() < 1e-14 && v.im == 0.0);
        for theta in [0.0, 0.4, 1.0] {
            let m = StationaryModel::new(1.3, ServiceDistribution::uniform(1.5).unwrap(), theta).unwrap();
            assert!((aoi_lst(&m, Complex64::new(1e-9, 0.0)).re - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_oracles() {
        let inv = InversionSettings::default();
        let m = exp_model(0.8, 1.2, 0.0);
        assert!((aoi_cdf_stationary(&m, 1.0, &inv).unwrap() - 0.188_024_569_616_407).abs() < 1e-10);
        let p = exp_model(2.0, 1.0, 1.0);
        assert!((aoi_cdf_stationary(&p, 2f64.ln(), &inv).unwrap() - 0.25).abs() < 1e-6);
        assert_eq!(aoi_cdf_stationary(&p, 0.0, &inv).unwrap(), 0.0);
    }

    #[test]
    fn theta_zero_pdf_matches_derivative_of_closed_form() {
        let (lam, mu) = (0.8, 1.2);
        let m = exp_model(lam, mu, 0.0);
        let inv = InversionSettings::default();
        for &x in &[0.4, 1.0, 3.0, 7.0] {
            let h = 1e-5;
            let fd = (closed_form_mm11(lam, mu, x + h) - closed_form_mm11(lam, mu, x - h)) / (2.0 * h);
            assert!((aoi_pdf_stationary(&m, x, &inv).unwrap() - fd).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn bad_inputs() {
        let s = ServiceDistribution::exponential(1.0).unwrap();
        assert!(StationaryModel::new(0.0, s, 0.5).is_err());
        assert!(StationaryModel::new(1.0, s, 1.5).is_err());
        let m = exp_model(1.0, 1.0, 0.5);
        assert!(aoi_cdf_stationary(&m, -1.0, &InversionSettings::default()).is_err());
    }
}
