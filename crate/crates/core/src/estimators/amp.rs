use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use super::bayes::{bayes_risk_with, posterior_moments};
use super::prior::ScalarPrior;
use super::quadrature::{check_rule, default_rule};
use super::shrinkage::{soft_threshold, soft_threshold_risk};
use crate::{Error, Result};

/// Separable denoiser `eta(v; tau)` applied at effective noise level `tau`.
#[derive(Clone, Debug)]
pub enum Denoiser {
    Identity,
    /// Soft thresholding at `lambda = alpha * tau`.
    SoftThreshold {
        alpha: f64,
    },
    /// Posterior mean under a prior, treating `v = theta + tau W`.
    Bayes(ScalarPrior),
}

impl Denoiser {
    pub fn apply(&self, v: f64, tau: f64) -> f64 {
        match self {
            Denoiser::Identity => v,
            Denoiser::SoftThreshold { alpha } => soft_threshold(v, alpha * tau),
            Denoiser::Bayes(prior) => posterior_moments(prior, tau, v).0,
        }
    }

    pub fn derivative(&self, v: f64, tau: f64) -> f64 {
        match self {
            Denoiser::Identity => 1.0,
            Denoiser::SoftThreshold { alpha } => {
                if v.abs() > alpha * tau {
                    1.0
                } else {
                    0.0
                }
            }
            Denoiser::Bayes(prior) => {
                let (m1, m2) = posterior_moments(prior, tau, v);
                (m2 - m1 * m1).max(0.0) / (tau * tau)
            }
        }
    }

    /// A Lipschitz constant valid at noise level `tau`.
    pub fn lipschitz(&self, tau: f64) -> f64 {
        match self {
            Denoiser::Identity | Denoiser::SoftThreshold { .. } => 1.0,
            Denoiser::Bayes(prior) => {
                let r = prior.support_radius();
                r * r / (tau * tau)
            }
        }
    }

    /// `E[(eta(theta + tau W; tau) - theta)^2]` with `theta ~ truth`.
    fn risk(&self, truth: &ScalarPrior, tau: f64) -> Result<f64> {
        match self {
            Denoiser::Identity => Ok(tau * tau),
            Denoiser::SoftThreshold { alpha } => Ok(truth
                .points()
                .iter()
                .zip(truth.weights())
                .map(|(mu, w)| w * soft_threshold_risk(*mu, alpha * tau, tau))
                .sum()),
            Denoiser::Bayes(model) => {
                if tau == 0.0 {
                    return Ok(0.0);
                }
                let fine = bayes_risk_with(model, truth, tau, default_rule());
                let coarse = bayes_risk_with(model, truth, tau, check_rule());
                if (fine - coarse).abs() > 1e-9 + 1e-6 * fine {
                    return Err(Error::Quadrature(format!(
                        "Gauss-Hermite rules disagree at tau = {tau}: {fine} vs {coarse}"
                    )));
                }
                Ok(fine)
            }
        }
    }
}

/// Noise levels fed to the denoiser at each iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum TauSchedule {
    /// `tau_t^2 = |r^t|^2 / n`.
    Empirical,
    /// A precomputed sequence of `tau_t^2`, typically from state evolution.
    Fixed(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct AmpConfig {
    pub iterations: usize,
    pub denoiser: Denoiser,
    /// Sampling ratio `n / d`.
    pub delta: f64,
    /// Effective channel noise `xi^2`.
    pub xi2: f64,
    /// Initial state-evolution variance `tau_0^2`.
    pub tau0_sq: f64,
    pub schedule: TauSchedule,
}

impl AmpConfig {
    /// Config with `tau_0^2 = xi^2 + E[theta^2] / delta` and an empirical schedule.
    pub fn new(iterations: usize, denoiser: Denoiser, delta: f64, xi2: f64, prior: &ScalarPrior) -> Result<Self> {
        let cfg = Self {
            iterations,
            denoiser,
            delta,
            xi2,
            tau0_sq: xi2 + prior.second_moment() / delta,
            schedule: TauSchedule::Empirical,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::domain("delta", self.delta, "(0, inf)"));
        }
        if !(self.xi2 >= 0.0) || !self.xi2.is_finite() {
            return Err(Error::domain("xi2", self.xi2, "[0, inf)"));
        }
        if !(self.tau0_sq >= 0.0) || !self.tau0_sq.is_finite() {
            return Err(Error::domain("tau0_sq", self.tau0_sq, "[0, inf)"));
        }
        match &self.denoiser {
            Denoiser::SoftThreshold { alpha } if !(*alpha >= 0.0) => {
                return Err(Error::domain("alpha", *alpha, "[0, inf)"))
            }
            _ => {}
        }
        if let TauSchedule::Fixed(t) = &self.schedule {
            if t.len() < self.iterations {
                return Err(Error::DimensionMismatch {
                    what: "tau schedule",
                    expected: self.iterations,
                    got: t.len(),
                });
            }
        }
        Ok(())
    }
}

/// `tau_sq[t]` is the noise variance entering iteration `t`, and `mse[t]` the
/// predicted MSE of the estimate it produces, `theta_hat^{t+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateEvolutionTrace {
    pub tau_sq: Vec<f64>,
    pub mse: Vec<f64>,
}

impl StateEvolutionTrace {
    /// Predicted MSE after the last iteration.
    pub fn final_mse(&self) -> f64 {
        *self.mse.last().expect("at least one iteration")
    }
}

/// Runs `tau_{t+1}^2 = xi^2 + E[(eta_t(theta + tau_t W) - theta)^2] / delta`
/// from `tau_0^2 = config.tau0_sq`.
pub fn state_evolution(prior: &ScalarPrior, config: &AmpConfig) -> Result<StateEvolutionTrace> {
    config.validate()?;
    let mut tau_sq = Vec::with_capacity(config.iterations);
    let mut mse = Vec::with_capacity(config.iterations);
    let mut t2 = config.tau0_sq;
    for _ in 0..config.iterations {
        let m = config.denoiser.risk(prior, t2.sqrt())?;
        tau_sq.push(t2);
        mse.push(m);
        t2 = config.xi2 + m / config.delta;
    }
    Ok(StateEvolutionTrace { tau_sq, mse })
}

#[derive(Clone, Debug)]
pub struct AmpOutput {
    /// `theta_hat^1 .. theta_hat^T`.
    pub iterates: Vec<Array1<f64>>,
    /// `|r^t|^2 / n` for `t = 0 .. T-1`.
    pub residual_trace: Vec<f64>,
    /// Noise variances the denoiser was run at.
    pub tau_sq_used: Vec<f64>,
}

impl AmpOutput {
    pub fn theta_hat(&self) -> &Array1<f64> {
        self.iterates.last().expect("at least one iteration")
    }
}

fn ensure_finite(v: &Array1<f64>, iteration: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration })
    }
}

/// Approximate message passing for `z = A theta + noise`:
///
/// ```text
/// theta^{t+1} = eta_t(A^T r^t + theta^t)
/// r^t = z - A theta^t + r^{t-1} (1/n) sum_i eta'_{t-1}(v^{t-1}_i)
/// ```
///
/// starting from `theta^0 = 0`, `r^0 = z`.
pub fn amp_run(a: &Array2<f64>, z: ArrayView1<f64>, config: &AmpConfig) -> Result<AmpOutput> {
    config.validate()?;
    let (n, d) = a.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            what: "observation length",
            expected: n,
            got: z.len(),
        });
    }
    let nf = n as f64;
    let mut theta = Array1::<f64>::zeros(d);
    let mut r = z.to_owned();
    let mut iterates = Vec::with_capacity(config.iterations);
    let mut residual_trace = Vec::with_capacity(config.iterations);
    let mut tau_sq_used = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        let r2 = r.dot(&r) / nf;
        residual_trace.push(r2);
        let t2 = match &config.schedule {
            TauSchedule::Empirical => r2,
            TauSchedule::Fixed(s) => s[t],
        };
        tau_sq_used.push(t2);
        let tau = t2.sqrt();
        let v = a.t().dot(&r) + &theta;
        ensure_finite(&v, t)?;
        let (next, slopes): (Vec<f64>, Vec<f64>) = v
            .as_slice()
            .expect("contiguous")
            .par_iter()
            .map(|&vi| (config.denoiser.apply(vi, tau), config.denoiser.derivative(vi, tau)))
            .unzip();
        theta = Array1::from(next);
        ensure_finite(&theta, t + 1)?;
        iterates.push(theta.clone());
        if t + 1 < config.iterations {
            let onsager = slopes.iter().sum::<f64>() / nf;
            r = &z - &a.dot(&theta) + &(r * onsager);
            ensure_finite(&r, t + 1)?;
        }
    }
    Ok(AmpOutput {
        iterates,
        residual_trace,
        tau_sq_used,
    })
}
