use super::prior::ScalarPrior;
use super::quadrature::{default_rule, GaussHermite};
use crate::{Error, Result};

/// `(E[theta | z], E[theta^2 | z])` for `z = theta + sigma W`.
pub fn posterior_moments(prior: &ScalarPrior, sigma: f64, z: f64) -> (f64, f64) {
    let inv = 0.5 / (sigma * sigma);
    let pts = prior.points();
    let lw = prior.ln_weights();
    let max = pts
        .iter()
        .zip(lw)
        .map(|(p, l)| l - (z - p) * (z - p) * inv)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut total, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (p, l) in pts.iter().zip(lw) {
        let w = (l - (z - p) * (z - p) * inv - max).exp();
        total += w;
        m1 += w * p;
        m2 += w * p * p;
    }
    (m1 / total, m2 / total)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain("sigma", sigma, "(0, inf)"));
    }
    Ok(())
}

/// `E[theta | theta + sigma W = z]`.
pub fn posterior_mean_scalar(prior: &ScalarPrior, sigma: f64, z: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(posterior_moments(prior, sigma, z).0)
}

/// `d/dz E[theta | z] = Var(theta | z) / sigma^2`.
pub fn posterior_mean_derivative(prior: &ScalarPrior, sigma: f64, z: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let (m1, m2) = posterior_moments(prior, sigma, z);
    Ok((m2 - m1 * m1).max(0.0) / (sigma * sigma))
}

/// `E[(eta(theta + tau W) - theta)^2]` for `theta` from `truth`, using the
/// posterior mean under `model` as `eta`.
pub(crate) fn bayes_risk_with(model: &ScalarPrior, truth: &ScalarPrior, tau: f64, rule: &GaussHermite) -> f64 {
    truth
        .points()
        .iter()
        .zip(truth.weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|(theta, w)| {
            w * rule.expect(|g| {
                let e = posterior_moments(model, tau, theta + tau * g).0 - theta;
                e * e
            })
        })
        .sum()
}

/// Minimum mean-squared error of estimating `theta` from `theta + sigma W`.
pub fn scalar_mmse(prior: &ScalarPrior, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::domain("sigma", sigma, "[0, inf)"));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    if sigma.is_infinite() {
        return Ok(prior.variance());
    }
    Ok(bayes_risk_with(prior, prior, sigma, default_rule()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn gaussian_conjugate() {
        let k2 = 1.5;
        let prior = ScalarPrior::gaussian(k2).unwrap();
        for sigma in [0.3, 1.0, 2.0] {
            for z in [-3.0, -0.4, 0.0, 1.1, 4.0] {
                let pm = posterior_mean_scalar(&prior, sigma, z).unwrap();
                let s2 = sigma * sigma;
                assert!((pm - k2 * z / (k2 + s2)).abs() < 1e-10, "sigma={sigma} z={z}");
                let d = posterior_mean_derivative(&prior, sigma, z).unwrap();
                assert!((d - k2 / (k2 + s2)).abs() < 1e-9);
            }
            let mmse = scalar_mmse(&prior, sigma).unwrap();
            let exact = k2 * sigma * sigma / (k2 + sigma * sigma);
            assert!((mmse - exact).abs() < 1e-8, "{mmse} vs {exact}");
        }
    }

    #[test]
    fn rademacher_tanh() {
        let prior = ScalarPrior::rademacher();
        for sigma in [0.5f64, 1.0, 1.7] {
            for z in [-2.0f64, -0.3, 0.0, 0.8, 3.0] {
                let s2 = sigma * sigma;
                let t = (z / s2).tanh();
                assert!((posterior_mean_scalar(&prior, sigma, z).unwrap() - t).abs() < 1e-14);
                let d = posterior_mean_derivative(&prior, sigma, z).unwrap();
                assert!((d - (1.0 - t * t) / s2).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn three_atom_by_bayes_rule() {
        let prior = ScalarPrior::atoms(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        let z: f64 = 0.7;
        let lik = |t: f64| (-(z - t).powi(2) / 2.0).exp();
        let num = 0.25 * (lik(1.0) - lik(-1.0));
        let den = 0.25 * lik(-1.0) + 0.5 * lik(0.0) + 0.25 * lik(1.0);
        let oracle = num / den;
        assert!((oracle - 0.261_230_153_226_715).abs() < 1e-12);
        assert!((posterior_mean_scalar(&prior, 1.0, z).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let priors = [
            ScalarPrior::rademacher(),
            ScalarPrior::bernoulli_gaussian(0.2, 2.0).unwrap(),
            ScalarPrior::atoms(vec![-2.0, 0.5, 3.0], vec![0.3, 0.3, 0.4]).unwrap(),
        ];
        let h = 1e-5;
        for prior in &priors {
            for sigma in [0.4, 1.0, 2.5] {
                for z in [-3.0, -1.0, 0.2, 2.0] {
                    let fd = (posterior_mean_scalar(prior, sigma, z + h).unwrap()
                        - posterior_mean_scalar(prior, sigma, z - h).unwrap())
                        / (2.0 * h);
                    let d = posterior_mean_derivative(prior, sigma, z).unwrap();
                    assert!((fd - d).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn mmse_limits() {
        let prior = ScalarPrior::bernoulli_gaussian(0.1, 1.0).unwrap();
        assert_eq!(scalar_mmse(&prior, 0.0).unwrap(), 0.0);
        let far = scalar_mmse(&prior, 1e3).unwrap();
        assert!((far - prior.variance()).abs() < 1e-3 * prior.variance());
    }

    #[test]
    fn rademacher_mmse_monte_carlo() {
        let sigma = (1.0f64 / 3.0).sqrt();
        let v = scalar_mmse(&ScalarPrior::rademacher(), sigma).unwrap();
        // high-precision reference: 0.12431790238714132407
        assert!((v - 0.124_317_902_387_141_3).abs() < 1e-10);
        let mut rng = crate::rng::seeded(3);
        let count = 1_000_000;
        let errs: Vec<f64> = (0..count)
            .map(|_| {
                let theta = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let w: f64 = rng.sample(StandardNormal);
                let z = theta + sigma * w;
                ((z / (sigma * sigma)).tanh() - theta).powi(2)
            })
            .collect();
        let (m, se) = crate::stats::mean_stderr(&errs);
        assert!((m - v).abs() < 3.0 * se, "{m} +- {se} vs {v}");
    }
}
