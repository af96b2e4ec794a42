//! Numerical inversion of Laplace transforms along the Bromwich contour.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{AoiError, Result};

/// Quadrature of the Bromwich integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InversionMethod {
    /// Trapezoid rule on the line `Re s = A/(2x)` with Euler summation of the
    /// alternating tail. Tolerates transforms with `e^{−sd}` factors.
    Euler {
        /// Discretization parameter; aliasing error is about `e^{−A}`.
        a: f64,
        /// Terms summed before acceleration.
        terms: usize,
        /// Binomial averaging order.
        euler_terms: usize,
    },
    /// Fixed Talbot contour. Needs a transform analytic and decaying in the
    /// left half plane away from the negative axis.
    Talbot { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionSettings {
    pub method: InversionMethod,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self::euler()
    }
}

impl InversionSettings {
    pub fn euler() -> Self {
        Self {
            method: InversionMethod::Euler {
                a: 18.4,
                terms: 30,
                euler_terms: 11,
            },
        }
    }

    pub fn talbot() -> Self {
        Self {
            method: InversionMethod::Talbot { nodes: 32 },
        }
    }

    /// Abscissa `γ` of the Bromwich line used at time `x` (Euler method);
    /// `None` for the deformed Talbot contour.
    pub fn abscissa(&self, x: f64) -> Option<f64> {
        match self.method {
            InversionMethod::Euler { a, .. } => Some(a / (2.0 * x)),
            InversionMethod::Talbot { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            InversionMethod::Euler {
                a,
                terms,
                euler_terms,
            } => a > 0.0 && terms >= 1 && euler_terms <= 40,
            InversionMethod::Talbot { nodes } => nodes >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(AoiError::Config(format!("invalid inversion settings {self:?}")))
        }
    }
}

/// `f(x)` from its Laplace transform `f̂`, `x > 0`.
pub fn invert<F>(transform: F, x: f64, settings: &InversionSettings) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    settings.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(AoiError::Domain(format!("inversion point {x} must be positive")));
    }
    let value = match settings.method {
        InversionMethod::Euler {
            a,
            terms,
            euler_terms,
        } => euler(&transform, x, a, terms, euler_terms),
        InversionMethod::Talbot { nodes } => talbot(&transform, x, nodes),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(AoiError::Inversion(format!(
            "non-finite result at x = {x} with {:?}",
            settings.method
        )))
    }
}

fn euler<F>(f: &F, x: f64, a: f64, n: usize, m: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let gamma = a / (2.0 * x);
    let scale = (0.5 * a).exp() / x;
    let mut partial = Vec::with_capacity(m + 1);
    let mut sum = 0.5 * f(Complex64::new(gamma, 0.0)).re;
    for k in 1..=n + m {
        let s = Complex64::new(gamma, k as f64 * PI / x);
        let term = f(s).re;
        sum += if k % 2 == 0 { term } else { -term };
        if k >= n {
            partial.push(sum);
        }
    }
    // binomial average of the partial sums S_n … S_{n+m}
    let mut avg = 0.0;
    let mut binom = 1.0;
    for (j, s) in partial.iter().enumerate() {
        avg += binom * s;
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    scale * avg / 2f64.powi(m as i32)
}

fn talbot<F>(f: &F, x: f64, m: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * x);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0)) * (r * x).exp()).re;
    for k in 1..m {
        let th = k as f64 * PI / mf;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let ds = Complex64::new(1.0, th * (1.0 + cot * cot) - cot);
        acc += ((s * x).exp() * f(s) * ds).re;
    }
    r / mf * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_exponential_and_kink() {
        for settings in [InversionSettings::euler(), InversionSettings::talbot()] {
            for &x in &[0.1, 1.0, 5.0] {
                let v = invert(|s| 1.0 / (s + 2.0), x, &settings).unwrap();
                assert!((v - (-2.0 * x).exp()).abs() < 1e-7, "{settings:?} x={x}");
            }
        }
        // shifted kink e^{-s}/(s(s+1)): Euler only
        let e = InversionSettings::euler();
        for &x in &[0.5f64, 1.5, 2.0, 3.0] {
            let want = if x > 1.0 { 1.0 - (1.0 - x).exp() } else { 0.0 };
            let v = invert(|s| (-s).exp() / (s * (s + 1.0)), x, &e).unwrap();
            assert!((v - want).abs() < 1e-4, "x={x}: {v}");
        }
    }

    #[test]
    fn rejects_bad_points() {
        let e = InversionSettings::euler();
        assert!(invert(|s| 1.0 / s, 0.0, &e).is_err());
        assert!(matches!(invert(|_| Complex64::new(f64::NAN, 0.0), 1.0, &e), Err(AoiError::Inversion(_))));
        assert_eq!(e.abscissa(1.0), Some(9.2));
    }
}
