//! Closed-form steady-state AoI CDFs for exponential and deterministic
//! service, used as oracles for the numerical paths.

fn near(lambda: f64, mu: f64) -> bool {
    (lambda - mu).abs() < 1e-6 * lambda.max(mu)
}

/// M/M/1/1 without preemption.
pub fn closed_form_mm11(lambda: f64, mu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if near(lambda, mu) {
        let m = 0.5 * (lambda + mu);
        let y = m * x;
        return 1.0 - (1.0 + y + 0.25 * y * y) * (-y).exp();
    }
    let d = lambda - mu;
    let sum = lambda + mu;
    1.0 - mu.powi(3) / (sum * d * d) * (-lambda * x).exp()
        - lambda / sum
            * ((lambda * lambda - lambda * mu - mu * mu) / (d * d) + lambda * mu * x / d)
            * (-mu * x).exp()
}

/// M/D/1/1 without preemption, processing time `1/μ`.
pub fn closed_form_md11(lambda: f64, mu: f64, x: f64) -> f64 {
    let sum = lambda + mu;
    if x < 1.0 / mu {
        0.0
    } else if x < 2.0 / mu {
        lambda * mu * x / sum - lambda / sum
    } else {
        1.0 - mu / sum * (-lambda * x + 2.0 * lambda / mu).exp()
    }
}

/// M/M/1/1 with preemption (`θ = 1`).
pub fn closed_form_mm11_preemptive(lambda: f64, mu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if near(lambda, mu) {
        let y = 0.5 * (lambda + mu) * x;
        return 1.0 - (1.0 + y) * (-y).exp();
    }
    let d = lambda - mu;
    1.0 - lambda / d * (-mu * x).exp() + mu / d * (-lambda * x).exp()
}

/// True iff the preemptive M/M/1/1 CDF is at least the non-preemptive one at
/// every point of `xs`.
pub fn check_dominance(lambda: f64, mu: f64, xs: &[f64]) -> bool {
    xs.iter().all(|&x| {
        closed_form_mm11_preemptive(lambda, mu, x) >= closed_form_mm11(lambda, mu, x) - 1e-14
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm11_values() {
        assert_eq!(closed_form_mm11(0.8, 1.2, 0.0), 0.0);
        assert!(closed_form_mm11(0.8, 1.2, 1e-12).abs() < 1e-12);
        assert!((closed_form_mm11(0.8, 1.2, 1.0) - 0.188_024_569_616_407).abs() < 1e-12);
        assert!((closed_form_mm11(0.8, 1.2, 60.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limit_branches_are_continuous() {
        for &x in &[0.3, 1.0, 4.0] {
            let lim = closed_form_mm11(1.0, 1.0, x);
            let off = closed_form_mm11(1.0 + 1e-4, 1.0, x);
            assert!((lim - off).abs() < 1e-4, "x={x}: {lim} vs {off}");
            let lim = closed_form_mm11_preemptive(1.0, 1.0, x);
            let off = closed_form_mm11_preemptive(1.0 - 1e-4, 1.0, x);
            assert!((lim - off).abs() < 1e-4);
        }
        assert!((closed_form_mm11_preemptive(1.0, 1.0, 1.0) - (1.0 - 2.0 / 1f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn md11_branches() {
        assert_eq!(closed_form_md11(1.0, 1.0, 0.5), 0.0);
        assert!((closed_form_md11(1.0, 1.0, 1.5) - 0.25).abs() < 1e-15);
        assert!((closed_form_md11(1.0, 1.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((closed_form_md11(1.0, 1.0, 2.0 - 1e-12) - 0.5).abs() < 1e-11);
        assert!(closed_form_md11(1.0, 1.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn preemptive_values_and_dominance() {
        let x = 2f64.ln();
        assert!((closed_form_mm11_preemptive(2.0, 1.0, x) - 0.25).abs() < 1e-14);
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        assert!(check_dominance(0.8, 1.2, &xs));
        assert!(check_dominance(3.5, 1.2, &xs));
        assert!(check_dominance(1.0, 2.0, &[]));
    }
}
