//! Processing-time laws: CDF, density, Laplace–Stieltjes transform, sampling.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{AoiError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceDistribution {
    /// Rate `μ`, mean `1/μ`.
    Exponential { rate: f64 },
    /// Constant processing time.
    Deterministic { value: f64 },
    /// Uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Sum of `stages` exponentials with mean `scale` each.
    Erlang { stages: u32, scale: f64 },
}

const NBU_GRID: usize = 100;
const NBU_TOL: f64 = 1e-9;

impl ServiceDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::Deterministic { value }.validated()
    }

    /// Uniform on `[0, high]`.
    pub fn uniform(high: f64) -> Result<Self> {
        Self::Uniform { low: 0.0, high }.validated()
    }

    pub fn uniform_between(low: f64, high: f64) -> Result<Self> {
        Self::Uniform { low, high }.validated()
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::Gamma { shape, scale }.validated()
    }

    pub fn erlang(stages: u32, scale: f64) -> Result<Self> {
        Self::Erlang { stages, scale }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Self::Deterministic { value } => value > 0.0 && value.is_finite(),
            Self::Uniform { low, high } => low >= 0.0 && high > low && high.is_finite(),
            Self::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            Self::Erlang { stages, scale } => stages >= 1 && scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(AoiError::Config(format!("invalid service distribution {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Deterministic { .. } => "deterministic",
            Self::Uniform { .. } => "uniform",
            Self::Gamma { .. } => "gamma",
            Self::Erlang { .. } => "erlang",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { value } => value,
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Gamma { shape, scale } => shape * scale,
            Self::Erlang { stages, scale } => stages as f64 * scale,
        }
    }

    /// False only for the deterministic law.
    pub fn has_density(&self) -> bool {
        !matches!(self, Self::Deterministic { .. })
    }

    /// Density exists and stays finite at the origin.
    pub fn has_bounded_density(&self) -> bool {
        match *self {
            Self::Deterministic { .. } => false,
            Self::Gamma { shape, .. } => shape >= 1.0,
            _ => true,
        }
    }

    /// `F(z)`; zero for `z < 0`.
    pub fn cdf(&self, z: f64) -> f64 {
        // every law has F(0) = 0 (deterministic values are positive)
        if z <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => -(-rate * z).exp_m1(),
            Self::Deterministic { value } => {
                if z >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform { low, high } => ((z - low) / (high - low)).clamp(0.0, 1.0),
            Self::Gamma { shape, scale } => gamma_lr(shape, z / scale),
            Self::Erlang { .. } => 1.0 - self.ccdf(z),
        }
    }

    /// `1 − F(z)`, computed without cancellation in the tail.
    pub fn ccdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => (-rate * z).exp(),
            Self::Gamma { shape, scale } => gamma_ur(shape, z / scale),
            Self::Erlang { stages, scale } => {
                let y = z / scale;
                let mut term = 1.0;
                let mut sum = 1.0;
                for k in 1..stages {
                    term *= y / k as f64;
                    sum += term;
                }
                (sum * (-y).exp()).min(1.0)
            }
            _ => 1.0 - self.cdf(z),
        }
    }

    /// `f(z)`. Errors for the deterministic law.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        if z < 0.0 {
            return if self.has_density() {
                Ok(0.0)
            } else {
                Err(self.no_density())
            };
        }
        Ok(match *self {
            Self::Exponential { rate } => rate * (-rate * z).exp(),
            Self::Deterministic { .. } => return Err(self.no_density()),
            Self::Uniform { low, high } => {
                if z >= low && z <= high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Self::Gamma { shape, scale } => gamma_density(shape, scale, z),
            Self::Erlang { stages, scale } => gamma_density(stages as f64, scale, z),
        })
    }

    fn no_density(&self) -> AoiError {
        AoiError::Unsupported(format!("{} service has no density", self.name()))
    }

    /// Laplace–Stieltjes transform `F̃(s) = E[e^{−sS}]` at complex `s`.
    pub fn lst(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            Self::Exponential { rate } => rate / (rate + s),
            Self::Deterministic { value } => (-s * value).exp(),
            Self::Uniform { low, high } => {
                let w = high - low;
                (-s * low).exp() * one_minus_exp_over(s * w)
            }
            Self::Gamma { shape, scale } => (one + s * scale).powf(-shape),
            Self::Erlang { stages, scale } => (one + s * scale).powi(-(stages as i32)),
        }
    }

    pub fn lst_real(&self, s: f64) -> f64 {
        self.lst(Complex64::new(s, 0.0)).re
    }

    /// Laplace transform of the CDF, `F*(s) = F̃(s)/s`.
    pub fn cdf_laplace(&self, s: Complex64) -> Complex64 {
        self.lst(s) / s
    }

    /// `(1 − F̃(s))/s`, i.e. the Laplace transform of `1 − F`, stable near `s = 0`.
    pub fn ccdf_laplace(&self, s: Complex64) -> Complex64 {
        if s.norm() < 1e-7 {
            // 1 − F̃(s) = m·s − E[S²]s²/2 + …
            return Complex64::new(self.mean(), 0.0) - s * (0.5 * self.second_moment());
        }
        (Complex64::new(1.0, 0.0) - self.lst(s)) / s
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 2.0 / (rate * rate),
            Self::Deterministic { value } => value * value,
            Self::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
            Self::Gamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
            Self::Erlang { stages, scale } => {
                let k = stages as f64;
                k * (k + 1.0) * scale * scale
            }
        }
    }

    /// Points where `F` has a jump or a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Deterministic { value } => vec![value],
            Self::Uniform { low, high } if low > 0.0 => vec![low, high],
            Self::Uniform { high, .. } => vec![high],
            _ => Vec::new(),
        }
    }

    /// Smallest `z` with `1 − F(z) ≤ eps` (exact end of support when bounded).
    pub fn tail_cutoff(&self, eps: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => (1.0 / eps).ln() / rate,
            Self::Deterministic { value } => value,
            Self::Uniform { high, .. } => high,
            Self::Gamma { .. } | Self::Erlang { .. } => {
                let mut hi = self.mean().max(1e-12);
                while self.ccdf(hi) > eps {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.ccdf(mid) > eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 * hi {
                        break;
                    }
                }
                hi
            }
        }
    }

    /// New-Better-than-Used check `F̄(z+τ) ≤ F̄(z)·F̄(τ)` on a 100×100 grid
    /// over `[0, 5·mean]`.
    pub fn is_nbu(&self) -> bool {
        let top = 5.0 * self.mean();
        let pts: Vec<f64> = (0..NBU_GRID)
            .map(|i| top * i as f64 / (NBU_GRID - 1) as f64)
            .collect();
        let tail: Vec<f64> = pts.iter().map(|&z| self.ccdf(z)).collect();
        for (i, &z) in pts.iter().enumerate() {
            for (j, &tau) in pts.iter().enumerate() {
                if self.ccdf(z + tau) > tail[i] * tail[j] + NBU_TOL {
                    return false;
                }
            }
        }
        true
    }

    pub fn sampler(&self) -> ServiceSampler {
        match *self {
            Self::Exponential { rate } => ServiceSampler::Exponential(Exp::new(rate).expect("validated rate")),
            Self::Deterministic { value } => ServiceSampler::Constant(value),
            Self::Uniform { low, high } => {
                ServiceSampler::Uniform(Uniform::new_inclusive(low, high).expect("validated bounds"))
            }
            Self::Gamma { shape, scale } => {
                ServiceSampler::Gamma(Gamma::new(shape, scale).expect("validated gamma"))
            }
            Self::Erlang { stages, scale } => {
                ServiceSampler::Gamma(Gamma::new(stages as f64, scale).expect("validated erlang"))
            }
        }
    }
}

/// Draws a processing time distributed per `dist`.
pub fn sample_service<R: Rng + ?Sized>(dist: &ServiceDistribution, rng: &mut R) -> f64 {
    dist.sampler().sample(rng)
}

#[derive(Debug, Clone, Copy)]
pub enum ServiceSampler {
    Exponential(Exp<f64>),
    Constant(f64),
    Uniform(Uniform<f64>),
    Gamma(Gamma<f64>),
}

impl Distribution<f64> for ServiceSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceSampler::Exponential(d) => d.sample(rng),
            ServiceSampler::Constant(v) => *v,
            ServiceSampler::Uniform(d) => d.sample(rng),
            ServiceSampler::Gamma(d) => d.sample(rng),
        }
    }
}

fn gamma_density(shape: f64, scale: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            1.0 / scale
        } else {
            0.0
        };
    }
    let y = z / scale;
    ((shape - 1.0) * y.ln() - y - ln_gamma(shape)).exp() / scale
}

// (1 − e^{−z})/z
fn one_minus_exp_over(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let one = Complex64::new(1.0, 0.0);
        return one - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
    }
    (Complex64::new(1.0, 0.0) - (-z).exp()) / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_laws() -> Vec<ServiceDistribution> {
        let mu = 1.2;
        vec![
            ServiceDistribution::exponential(mu).unwrap(),
            ServiceDistribution::deterministic(1.0 / mu).unwrap(),
            ServiceDistribution::uniform(2.0 / mu).unwrap(),
            ServiceDistribution::uniform_between(0.3, 1.1).unwrap(),
            ServiceDistribution::gamma(mu, 1.0 / (mu * mu)).unwrap(),
            ServiceDistribution::gamma(1.0 / mu, 1.0).unwrap(),
            ServiceDistribution::erlang(5, 1.0 / (5.0 * mu)).unwrap(),
        ]
    }

    #[test]
    fn lst_examples() {
        let e = ServiceDistribution::exponential(1.2).unwrap();
        assert_eq!(e.lst_real(0.0), 1.0);
        assert!((e.lst_real(1.2) - 0.5).abs() < 1e-15);
        let d = ServiceDistribution::deterministic(1.0 / 1.2).unwrap();
        assert_eq!(d.cdf(0.5), 0.0);
        assert_eq!(d.cdf(1.0), 1.0);
    }

    #[test]
    fn cdf_monotone_and_lst_consistent_for_every_law() {
        for law in all_laws() {
            let top = 6.0 * law.mean();
            let mut prev = 0.0;
            for i in 0..1000 {
                let z = top * i as f64 / 999.0;
                let f = law.cdf(z);
                assert!((0.0..=1.0).contains(&f));
                assert!(f >= prev - 1e-15, "{law:?} not monotone at {z}");
                prev = f;
            }
            assert_eq!(law.lst_real(0.0), 1.0, "{law:?}");
            let h = 1e-6;
            let deriv = (law.lst_real(h) - law.lst_real(0.0)) / h;
            assert!((deriv + law.mean()).abs() < 1e-4, "{law:?}: {deriv}");
            // strictly decreasing on s >= 0
            let mut last = 1.0;
            for k in 1..50 {
                let v = law.lst_real(k as f64 * 0.2);
                assert!(v < last);
                last = v;
            }
        }
    }

    #[test]
    fn ccdf_agrees_with_cdf() {
        for law in all_laws() {
            for &z in &[0.1, 0.5, 1.0, 2.0, 4.0] {
                assert!((law.ccdf(z) + law.cdf(z) - 1.0).abs() < 1e-12, "{law:?} at {z}");
            }
        }
    }

    #[test]
    fn density_integrates_to_cdf() {
        for law in all_laws().into_iter().filter(|l| l.has_bounded_density()) {
            let z = 1.3;
            let n = 20_000;
            let h = z / n as f64;
            let mut s = 0.5 * (law.pdf(0.0).unwrap() + law.pdf(z).unwrap());
            for i in 1..n {
                s += law.pdf(i as f64 * h).unwrap();
            }
            assert!((s * h - law.cdf(z)).abs() < 1e-3, "{law:?}");
        }
    }

    #[test]
    fn deterministic_pdf_is_unsupported() {
        let d = ServiceDistribution::deterministic(1.0).unwrap();
        assert!(!d.has_density());
        assert!(matches!(d.pdf(0.5), Err(AoiError::Unsupported(_))));
    }

    #[test]
    fn nbu_classification() {
        assert!(ServiceDistribution::exponential(1.3).unwrap().is_nbu());
        assert!(ServiceDistribution::erlang(5, 0.2).unwrap().is_nbu());
        assert!(!ServiceDistribution::gamma(0.5, 1.0).unwrap().is_nbu());
        // the CCDF inequality holds for these as well
        assert!(ServiceDistribution::deterministic(1.0).unwrap().is_nbu());
        assert!(ServiceDistribution::uniform(2.0).unwrap().is_nbu());
    }

    #[test]
    fn sample_means() {
        let mu = 1.2;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = ServiceDistribution::exponential(mu).unwrap().sampler();
        let n = 1_000_000;
        let m: f64 = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m * mu - 1.0).abs() < 0.01, "{m}");
        let er = ServiceDistribution::erlang(5, 1.0 / (5.0 * mu)).unwrap().sampler();
        let m: f64 = (0..n).map(|_| er.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m * mu - 1.0).abs() < 0.01, "{m}");
        let d = ServiceDistribution::deterministic(0.7).unwrap();
        assert!((0..10).all(|_| sample_service(&d, &mut rng) == 0.7));
    }

    #[test]
    fn empirical_cdf_within_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for law in all_laws() {
            let s = law.sampler();
            let n = 100_000;
            let mut draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
            draws.sort_by(f64::total_cmp);
            let top = 4.0 * law.mean();
            for i in 0..=40 {
                let z = top * i as f64 / 40.0;
                let emp = draws.partition_point(|d| *d <= z) as f64 / n as f64;
                assert!((emp - law.cdf(z)).abs() < 0.01, "{law:?} at {z}");
            }
        }
    }

    #[test]
    fn tail_cutoff_brackets_quantile() {
        for law in all_laws() {
            let z = law.tail_cutoff(1e-12);
            assert!(law.ccdf(z) <= 1e-12 * (1.0 + 1e-6));
            if law.has_bounded_density() && law.breakpoints().is_empty() {
                assert!(law.ccdf(z * 0.99) > 1e-12);
            }
        }
    }
}
