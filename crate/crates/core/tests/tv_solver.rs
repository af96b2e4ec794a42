//! Time-varying solver: examples, bounds and limiting cases.

use proptest::prelude::*;

use aoi::error::AoiError;
use aoi::model::{RateProfile, ServiceDistribution, SystemConfig};
use aoi::stationary::{aoi_cdf_stationary, InversionSettings, StationaryModel};
use aoi::tv_solver::{
    aoi_cdf_negligible, aoi_cdf_tv, kernel_gz, m_tx, mean_aoi_negligible, solve_idle_prob,
    SolverSettings, SweepOrder, TvSolver,
};

fn config(rate: RateProfile, service: ServiceDistribution, theta: f64) -> SystemConfig {
    SystemConfig::new(rate, service, theta).unwrap()
}

fn solver(cfg: &SystemConfig, horizon: f64) -> TvSolver {
    TvSolver::new(cfg.clone(), SolverSettings::for_config(cfg, horizon).unwrap()).unwrap()
}

fn exp_sin(theta: f64) -> SystemConfig {
    config(
        RateProfile::sinusoid(1.7, 1.0, 1.8).unwrap(),
        ServiceDistribution::exponential(1.2).unwrap(),
        theta,
    )
}

#[test]
fn idle_curve_examples() {
    let cfg = config(
        RateProfile::constant(0.8).unwrap(),
        ServiceDistribution::exponential(1.2).unwrap(),
        0.5,
    );
    let s = SolverSettings::for_config(&cfg, 50.0).unwrap();
    let curve = solve_idle_prob(&cfg, &s).unwrap();
    assert_eq!(curve.eval(0.0).unwrap(), 1.0);
    assert!((curve.eval(50.0).unwrap() - 0.6).abs() < 1e-3);
    assert!(curve.residual() <= s.etol);
    assert!(curve.eval(51.0).is_err());

    let idle = config(
        RateProfile::constant(0.0).unwrap(),
        ServiceDistribution::uniform(1.0).unwrap(),
        0.3,
    );
    let curve = solve_idle_prob(&idle, &SolverSettings::new(5.0, 500).unwrap()).unwrap();
    assert!(curve.values().iter().all(|&v| v == 1.0));
}

#[test]
fn idle_curve_matches_transient_mm11() {
    // constant rate, exponential service: two-state chain
    // M(t) = μ/(λ+μ) + λ/(λ+μ)·e^{−(λ+μ)t} for every θ
    let (lam, mu) = (1.3, 0.9);
    for theta in [0.0, 0.4, 1.0] {
        let cfg = config(
            RateProfile::constant(lam).unwrap(),
            ServiceDistribution::exponential(mu).unwrap(),
            theta,
        );
        let curve = solve_idle_prob(&cfg, &SolverSettings::for_config(&cfg, 8.0).unwrap()).unwrap();
        for &t in &[0.5, 1.0, 3.0, 8.0] {
            let want = mu / (lam + mu) + lam / (lam + mu) * (-(lam + mu) * t).exp();
            assert!((curve.eval(t).unwrap() - want).abs() < 1e-4, "θ={theta} t={t}");
        }
    }
}

#[test]
fn jacobi_and_gauss_seidel_agree() {
    let cfg = exp_sin(0.6);
    let base = SolverSettings::new(6.0, 600).unwrap();
    let gs = solve_idle_prob(&cfg, &base).unwrap();
    let jac = solve_idle_prob(&cfg, &base.with_sweep(SweepOrder::Jacobi)).unwrap();
    for (a, b) in gs.values().iter().zip(jac.values()) {
        assert!((a - b).abs() < 1e-7);
    }
    assert!(jac.iterations() >= gs.iterations());
    let err = solve_idle_prob(&cfg, &base.with_sweep(SweepOrder::Jacobi).with_ite_max(1)).unwrap_err();
    assert!(matches!(err, AoiError::Convergence { iterations: 1, .. }));
}

#[test]
fn kernel_examples() {
    let cfg = exp_sin(0.6);
    let s = solver(&cfg, 10.0);
    assert_eq!(s.kernel_gz(5.0, 0.0).unwrap(), 0.0);
    assert!(matches!(s.kernel_gz(1.0, 2.0), Err(AoiError::Domain(_))));

    // θ = 1, constant rate: G_z(y) = λμ/(λ+μ)·(1 − e^{−(λ+μ)y})
    let (lam, mu) = (2.0, 1.0);
    let pre = config(
        RateProfile::constant(lam).unwrap(),
        ServiceDistribution::exponential(mu).unwrap(),
        1.0,
    );
    let set = SolverSettings::for_config(&pre, 30.0).unwrap();
    let idle = solve_idle_prob(&pre, &set).unwrap();
    for &y in &[0.2, 1.0, 4.0] {
        let want = lam * mu / (lam + mu) * (1.0 - (-(lam + mu) * y).exp());
        let got = kernel_gz(&pre, &idle, &set, 30.0, y).unwrap();
        assert!((got - want).abs() < 1e-4, "y={y}: {got} vs {want}");
    }
}

#[test]
fn deterministic_service_is_unsupported() {
    let cfg = config(
        RateProfile::constant(1.0).unwrap(),
        ServiceDistribution::deterministic(0.5).unwrap(),
        0.5,
    );
    let s = SolverSettings::new(5.0, 500).unwrap();
    assert!(matches!(TvSolver::new(cfg.clone(), s), Err(AoiError::Unsupported(_))));
    assert!(matches!(aoi_cdf_tv(&cfg, 3.0, 1.0, &s), Err(AoiError::Unsupported(_))));
}

#[test]
fn idle_branch_examples() {
    let cfg = exp_sin(0.6);
    let s = solver(&cfg, 5.0);
    let idle = s.idle().eval(2.0).unwrap();
    assert_eq!(s.m_tx(2.0, 3.0).unwrap(), idle);
    assert_eq!(s.m_tx(2.0, 0.0).unwrap(), 0.0);
    // at the seam t = x the integral branch misses exactly the paths with no
    // arrival on [0, t] (empty, Δ(t) = t): M(t,∞) − M(t,t) = e^{−Λ(0,t)}
    for &t in &[0.7, 2.0, 4.5] {
        let gap = s.idle().eval(t).unwrap() - s.m_tx(t, t).unwrap();
        let none = (-cfg.rate.rate_integral(0.0, t).unwrap()).exp();
        assert!((gap - none).abs() < 1e-4, "t={t}: {gap} vs {none}");
    }
    let idle = solve_idle_prob(&cfg, s.settings()).unwrap();
    assert_eq!(m_tx(&cfg, &idle, s.settings(), 2.0, 3.0).unwrap(), s.idle().eval(2.0).unwrap());
}

#[test]
fn cdf_examples() {
    let cfg = exp_sin(0.6);
    let s = SolverSettings::for_config(&cfg, 3.0).unwrap();
    assert_eq!(aoi_cdf_tv(&cfg, 3.0, 3.0, &s).unwrap(), 1.0);
    assert_eq!(aoi_cdf_tv(&cfg, 3.0, 0.0, &s).unwrap(), 0.0);
    // beyond the settings horizon the curve is extended
    let far = aoi_cdf_tv(&cfg, 5.0, 1.0, &s).unwrap();
    assert!((far - solver(&cfg, 5.0).cdf(5.0, 1.0).unwrap()).abs() < 1e-12);
    let detail = solver(&cfg, 3.0).cdf_detail(3.0, 1.0).unwrap();
    assert!(detail.residual <= 1e-8 && (0.0..=1.0).contains(&detail.value));
}

#[test]
fn negligible_processing_examples() {
    let one = RateProfile::constant(1.0).unwrap();
    assert_eq!(aoi_cdf_negligible(&one, 1.0, 2.0).unwrap(), 1.0);
    assert!((aoi_cdf_negligible(&one, 2.0, 1.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
    assert_eq!(aoi_cdf_negligible(&one, 2.0, 0.0).unwrap(), 0.0);
    assert_eq!(mean_aoi_negligible(&one, 0.0).unwrap(), 0.0);
    // constant rate: E[Δ(t)] = (1 − e^{−λt})/λ
    assert!((mean_aoi_negligible(&one, 3.0).unwrap() - (1.0 - (-3f64).exp())).abs() < 1e-12);
    assert!((mean_aoi_negligible(&one, 60.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn near_zero_service_matches_negligible_law() {
    let rate = RateProfile::sinusoid(1.7, 1.0, 1.8).unwrap();
    let cfg = config(rate.clone(), ServiceDistribution::uniform(2e-3).unwrap(), 0.4);
    let s = solver(&cfg, 6.0);
    for &x in &[0.3, 1.0, 2.0, 4.0] {
        let d = (s.cdf(6.0, x).unwrap() - aoi_cdf_negligible(&rate, 6.0, x).unwrap()).abs();
        assert!(d <= 5e-3, "x={x}: {d}");
    }
}

#[test]
fn constant_rate_reaches_steady_state() {
    let lam = 0.8;
    let mu = 1.2;
    let laws = [
        ServiceDistribution::exponential(mu).unwrap(),
        ServiceDistribution::uniform(2.0 / mu).unwrap(),
        ServiceDistribution::gamma(mu, 1.0 / (mu * mu)).unwrap(),
        ServiceDistribution::erlang(5, 1.0 / (5.0 * mu)).unwrap(),
    ];
    let inv = InversionSettings::default();
    for law in laws {
        for theta in [0.0, 0.3, 1.0] {
            let cfg = config(RateProfile::constant(lam).unwrap(), law, theta);
            let s = solver(&cfg, 50.0);
            let steady = StationaryModel::new(lam, law, theta).unwrap();
            for &x in &[0.5, 1.0, 2.0, 4.0] {
                let a = s.cdf(50.0, x).unwrap();
                let b = aoi_cdf_stationary(&steady, x, &inv).unwrap();
                assert!((a - b).abs() <= 1e-3, "{law:?} θ={theta} x={x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn grid_refinement_converges() {
    let cfg = exp_sin(0.6);
    let at = |n: usize| {
        TvSolver::new(cfg.clone(), SolverSettings::new(4.0, n).unwrap())
            .unwrap()
            .cdf(4.0, 1.5)
            .unwrap()
    };
    let (a, b, c) = (at(100), at(200), at(400));
    let (d1, d2) = ((b - a).abs(), (c - b).abs());
    assert!(d2 <= 4.0 * d1 + 1e-12, "{d1} then {d2}");
    assert!(d2 < 1e-3);
}

#[test]
fn peak_lags_rate() {
    let rate = RateProfile::sinusoid(1.8, 1.0, 0.8).unwrap();
    let cfg = config(rate.clone(), ServiceDistribution::exponential(1.5).unwrap(), 0.2);
    let s = solver(&cfg, 14.0);
    let ts: Vec<f64> = (60..=140).map(|k| k as f64 / 10.0).collect();
    let arg = |v: Vec<f64>| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| ts[i])
            .unwrap()
    };
    let phi = arg(ts.iter().map(|&t| s.cdf(t, 2.5).unwrap()).collect());
    let lam = arg(ts.iter().map(|&t| rate.rate_at(t).unwrap()).collect());
    assert!(phi > lam);
    assert!((10.5..=11.8).contains(&phi), "peak at {phi}");
}

fn small_configs() -> impl Strategy<Value = SystemConfig> {
    let rate = prop_oneof![
        (0.2..3.0f64).prop_map(|a| RateProfile::constant(a).unwrap()),
        (1.0..3.0f64, 0.0..1.0f64, 0.2..2.0f64)
            .prop_map(|(a, b, w)| RateProfile::sinusoid(a, b, w).unwrap()),
        (0.0..3.0f64, 0.0..3.0f64, 0.5..2.0f64)
            .prop_map(|(p, q, d)| RateProfile::square_wave(p, q, d, 6.0).unwrap()),
    ];
    let law = prop_oneof![
        (0.5..3.0f64).prop_map(|m| ServiceDistribution::exponential(m).unwrap()),
        (0.3..2.0f64).prop_map(|b| ServiceDistribution::uniform(b).unwrap()),
        (1..5u32, 0.1..0.5f64).prop_map(|(k, s)| ServiceDistribution::erlang(k, s).unwrap()),
    ];
    (rate, law, 0.0..=1.0f64).prop_map(|(r, l, th)| SystemConfig::new(r, l, th).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cdf_bounds_and_monotonicity(cfg in small_configs(), t in 0.5..5.0f64) {
        let s = TvSolver::new(cfg.clone(), SolverSettings::new(5.0, 500).unwrap()).unwrap();
        let curve = s.idle().values();
        prop_assert_eq!(curve[0], 1.0);
        prop_assert!(curve.iter().all(|v| (0.0..=1.0).contains(v)));

        prop_assert_eq!(s.cdf(t, 0.0).unwrap(), 0.0);
        prop_assert_eq!(s.cdf(t, t).unwrap(), 1.0);
        prop_assert_eq!(s.cdf(t, t + 0.5).unwrap(), 1.0);
        let mut last = 0.0;
        for k in 1..=50 {
            let x = t * k as f64 / 51.0;
            let phi = s.cdf(t, x).unwrap();
            let m = s.m_tx(t, x).unwrap();
            prop_assert!(phi >= last - 1e-6, "x={} {} < {}", x, phi, last);
            prop_assert!(m <= phi + 1e-9 && phi <= 1.0);
            prop_assert!(m >= 0.0);
            last = phi;
        }
    }
}
