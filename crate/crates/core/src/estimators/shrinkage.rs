use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::{Error, Result};

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub(crate) fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `lambda* = kappa^2 / (kappa^2 + eps^2 + sigma^2)`.
pub fn optimal_linear_coefficient(kappa2: f64, eps2: f64, sigma2: f64) -> Result<f64> {
    for (name, v) in [("kappa2", kappa2), ("eps2", eps2), ("sigma2", sigma2)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(name, v, "[0, inf)"));
        }
    }
    let denom = kappa2 + eps2 + sigma2;
    if denom == 0.0 {
        return Err(Error::domain("kappa2 + eps2 + sigma2", 0.0, "(0, inf)"));
    }
    Ok(kappa2 / denom)
}

/// Worst-case MSE of `lambda* z` over the shell `|theta|^2 = n kappa^2`:
/// `kappa^2 (eps^2 + sigma^2) / (kappa^2 + eps^2 + sigma^2)`.
pub fn linear_minimax_mse(kappa2: f64, eps2: f64, sigma2: f64) -> Result<f64> {
    let lambda = optimal_linear_coefficient(kappa2, eps2, sigma2)?;
    Ok(lambda * (eps2 + sigma2))
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

pub fn soft_threshold_vec(z: &[f64], lambda: f64) -> Vec<f64> {
    z.iter().map(|&v| soft_threshold(v, lambda)).collect()
}

/// `E[(eta_lambda(mu + W) - mu)^2]` for `W ~ N(0, 1)`.
pub fn soft_threshold_risk_unit(mu: f64, lambda: f64) -> f64 {
    let p = normal_cdf(lambda - mu) - normal_cdf(-lambda - mu);
    1.0 + lambda * lambda + (mu * mu - lambda * lambda - 1.0) * p
        - (lambda - mu) * normal_pdf(lambda + mu)
        - (lambda + mu) * normal_pdf(lambda - mu)
}

/// `E[(eta_lambda(mu + tau W) - mu)^2]`.
pub fn soft_threshold_risk(mu: f64, lambda: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        let e = soft_threshold(mu, lambda) - mu;
        return e * e;
    }
    tau * tau * soft_threshold_risk_unit(mu / tau, lambda / tau)
}

fn beta0_objective(nu: f64, lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    (1.0 - nu) * (2.0 * (1.0 + l2) * normal_cdf(-lambda) - 2.0 * lambda * normal_pdf(lambda)) + nu * (1.0 + l2)
}

/// `beta0(nu)` together with the minimizing threshold (infinite at `nu = 0`).
pub fn beta0_with_argmin(nu: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::domain("nu", nu, "[0, 1]"));
    }
    if nu == 0.0 {
        return Ok((0.0, f64::INFINITY));
    }
    const HI: f64 = 10.0;
    let f = |l: f64| beta0_objective(nu, l);
    // Coarse scan to place the bracket, then golden section.
    let steps = 200;
    let h = HI / steps as f64;
    let best = (0..=steps)
        .map(|i| i as f64 * h)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .expect("nonempty scan");
    let (mut a, mut b) = ((best - h).max(0.0), (best + h).min(HI));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let interior = 0.5 * (a + b);
    let mut out = (f(interior), interior);
    for l in [0.0, HI] {
        let v = f(l);
        if v < out.0 {
            out = (v, l);
        }
    }
    Ok(out)
}

/// Minimax soft-thresholding risk at sparsity fraction `nu`.
pub fn beta0(nu: f64) -> Result<f64> {
    beta0_with_argmin(nu).map(|(v, _)| v)
}
