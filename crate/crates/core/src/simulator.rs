//! Discrete-event simulation of the single-buffer queue with probabilistic
//! preemption, started empty at time 0.
//!
//! Arrivals of the non-homogeneous Poisson stream are generated by thinning
//! against piecewise rate bounds. Each replication returns one AoI sample at
//! the requested time and owns a ChaCha stream selected by
//! `(seed, replication index)`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{AoiError, Result};
use crate::model::SystemConfig;

/// Packet currently being processed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InService {
    pub generation: f64,
    pub completion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub clock: f64,
    pub in_service: Option<InService>,
    /// Generation time `U` of the last completed packet.
    pub last_generation: f64,
}

impl SimState {
    pub fn empty() -> Self {
        Self {
            clock: 0.0,
            in_service: None,
            last_generation: 0.0,
        }
    }

    /// `Δ = clock − U`.
    pub fn age(&self) -> f64 {
        self.clock - self.last_generation
    }

    /// `A = clock − generation time` of the packet in service, 0 if idle.
    pub fn packet_age(&self) -> f64 {
        self.in_service.map_or(0.0, |p| self.clock - p.generation)
    }

    /// `W`, remaining processing time, 0 if idle.
    pub fn remaining_work(&self) -> f64 {
        self.in_service.map_or(0.0, |p| p.completion - self.clock)
    }

    /// Completes the packet in service if it finishes by `time`.
    fn complete_until(&mut self, time: f64) -> Option<SimEvent> {
        match self.in_service {
            Some(p) if p.completion <= time => {
                self.last_generation = p.generation;
                self.in_service = None;
                Some(SimEvent::Completed {
                    time: p.completion,
                    generation: p.generation,
                })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEvent {
    /// Arrival to an idle server.
    Admitted { time: f64, completion: f64 },
    /// Busy arrival that replaced the packet in service.
    Preempted {
        time: f64,
        replaced: InService,
        completion: f64,
    },
    /// Busy arrival that was dropped.
    Discarded { time: f64 },
    Completed { time: f64, generation: f64 },
}

/// Receives every event together with the state right after it.
pub trait SimObserver {
    fn on_event(&mut self, event: &SimEvent, state: &SimState);
}

impl SimObserver for () {
    fn on_event(&mut self, _: &SimEvent, _: &SimState) {}
}

impl<F: FnMut(&SimEvent, &SimState)> SimObserver for F {
    fn on_event(&mut self, event: &SimEvent, state: &SimState) {
        self(event, state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRequest {
    pub config: SystemConfig,
    pub eval_time: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimRequest {
    pub fn new(config: SystemConfig, eval_time: f64, replications: usize, seed: u64) -> Result<Self> {
        let r = Self {
            config,
            eval_time,
            replications,
            seed,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.replications < 1 {
            return Err(AoiError::Config("at least one replication is required".into()));
        }
        if !(self.eval_time >= 0.0 && self.eval_time.is_finite()) {
            return Err(AoiError::Config(format!("evaluation time {} is invalid", self.eval_time)));
        }
        Ok(())
    }
}

/// Random stream of replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// One AoI sample `Δ(t)`.
pub fn simulate_aoi_at<R: Rng + ?Sized>(config: &SystemConfig, t: f64, rng: &mut R) -> Result<f64> {
    simulate_observed(config, t, rng, &mut ())
}

/// [`simulate_aoi_at`] reporting every event to `observer`.
pub fn simulate_observed<R, O>(config: &SystemConfig, t: f64, rng: &mut R, observer: &mut O) -> Result<f64>
where
    R: Rng + ?Sized,
    O: SimObserver + ?Sized,
{
    if !(t >= 0.0 && t.is_finite()) {
        return Err(AoiError::Domain(format!("evaluation time {t} is invalid")));
    }
    let rate = &config.rate;
    let sampler = config.service.sampler();
    let theta = config.theta;
    let mut state = SimState::empty();

    for (start, end, bound) in rate.bound_segments(0.0, t)? {
        if !bound.is_finite() {
            return Err(AoiError::Config(format!("rate unbounded on [{start}, {end})")));
        }
        if bound <= 0.0 {
            continue;
        }
        let gap = Exp::new(bound).map_err(|e| AoiError::Config(e.to_string()))?;
        let mut clock = start;
        loop {
            clock += gap.sample(rng);
            if clock >= end {
                break;
            }
            let accept = rate.rate_at(clock)? / bound;
            if accept < 1.0 && rng.random::<f64>() >= accept {
                continue;
            }
            state.clock = clock;
            if let Some(ev) = state.complete_until(clock) {
                observer.on_event(&ev, &state);
            }
            let event = match state.in_service {
                None => {
                    let completion = clock + sampler.sample(rng);
                    state.in_service = Some(InService {
                        generation: clock,
                        completion,
                    });
                    SimEvent::Admitted {
                        time: clock,
                        completion,
                    }
                }
                Some(replaced) => {
                    if theta > 0.0 && (theta >= 1.0 || rng.random::<f64>() < theta) {
                        let completion = clock + sampler.sample(rng);
                        state.in_service = Some(InService {
                            generation: clock,
                            completion,
                        });
                        SimEvent::Preempted {
                            time: clock,
                            replaced,
                            completion,
                        }
                    } else {
                        SimEvent::Discarded { time: clock }
                    }
                }
            };
            observer.on_event(&event, &state);
        }
    }
    state.clock = t;
    if let Some(ev) = state.complete_until(t) {
        observer.on_event(&ev, &state);
    }
    Ok(state.age())
}

/// One AoI sample per replication, in replication order.
pub fn sample_aoi(request: &SimRequest) -> Result<Vec<f64>> {
    request.validate()?;
    (0..request.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(request.seed, rep);
            simulate_aoi_at(&request.config, request.eval_time, &mut rng)
        })
        .collect()
}

/// Fraction of replications with `Δ(t) ≤ x`, for each `x`.
pub fn empirical_cdf(request: &SimRequest, xs: &[f64]) -> Result<Vec<f64>> {
    let samples = sample_aoi(request)?;
    Ok(empirical_cdf_of(&samples, xs))
}

/// Empirical CDF of `samples` at each `x`.
pub fn empirical_cdf_of(samples: &[f64], xs: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    xs.iter()
        .map(|&x| sorted.partition_point(|&v| v <= x) as f64 / n)
        .collect()
}

/// Dvoretzky–Kiefer–Wolfowitz half-width `sqrt(ln(2/α)/(2n))`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RateProfile, ServiceDistribution};

    fn cfg(rate: RateProfile, service: ServiceDistribution, theta: f64) -> SystemConfig {
        SystemConfig::new(rate, service, theta).unwrap()
    }

    #[test]
    fn zero_rate_gives_full_age() {
        let c = cfg(
            RateProfile::constant(0.0).unwrap(),
            ServiceDistribution::exponential(1.0).unwrap(),
            0.5,
        );
        let mut rng = replication_rng(1, 0);
        assert_eq!(simulate_aoi_at(&c, 5.0, &mut rng).unwrap(), 5.0);
        let req = SimRequest::new(c, 5.0, 100, 3).unwrap();
        assert_eq!(
            empirical_cdf(&req, &[4.999, 5.0, 6.0]).unwrap(),
            vec![0.0, 1.0, 1.0]
        );
    }

    #[test]
    fn reproducible_and_bounded_by_t() {
        let c = cfg(
            RateProfile::sinusoid(1.7, 1.0, 1.8).unwrap(),
            ServiceDistribution::uniform(2.0 / 1.2).unwrap(),
            0.6,
        );
        let req = SimRequest::new(c, 3.0, 2000, 42).unwrap();
        let a = sample_aoi(&req).unwrap();
        let b = sample_aoi(&req).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&d| (0.0..=3.0).contains(&d)));
        let other = sample_aoi(&SimRequest { seed: 43, ..req.clone() }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn empirical_cdf_counts_ties() {
        let v = empirical_cdf_of(&[1.0, 2.0, 2.0, 3.0], &[0.5, 2.0, 3.0]);
        assert_eq!(v, vec![0.0, 0.75, 1.0]);
        assert!((dkw_epsilon(100_000, 0.01) - 0.005_146).abs() < 1e-5);
    }

    #[test]
    fn rejects_empty_request() {
        let c = cfg(
            RateProfile::constant(1.0).unwrap(),
            ServiceDistribution::exponential(1.0).unwrap(),
            0.0,
        );
        assert!(SimRequest::new(c, 1.0, 0, 0).is_err());
    }
}
