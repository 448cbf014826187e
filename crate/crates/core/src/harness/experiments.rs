use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::config::{ExperimentConfig, PriorSpec};
use super::output::{ExperimentOutput, Point, SummaryRow, TrialResult};
use crate::estimators::{
    amp_run, beta0_with_argmin, linear_minimax_mse, optimal_linear_coefficient, posterior_mean_scalar, soft_threshold,
    state_evolution, AmpConfig, Denoiser, ScalarPrior, TauSchedule,
};
use crate::ratedist::{
    alpha_r, awgn_equivalent_variance, blahut_arimoto_at, gaussian_drf_direct, gaussian_idrf, mmse_equivalent_curve,
    JointScalarSource,
};
use crate::rng::{trial_stream, StreamRng};
use crate::sphere_code::{
    awgn_channel, coupling_bound, draw_codebook, sample_coupled, sample_output, SphericalCodeConfig,
};
use crate::stats::{linear_fit, mean_stderr, quantile_sorted};
use crate::{Error, Result};

/// Largest `n R` for which `--explicit-codebook` draws a real codebook.
pub const EXPLICIT_CODEBOOK_MAX_BITS: f64 = 24.0;

/// Slack on the curve ordering `D(R) <= M(sigma_R^2) <= D_G(R)`.
pub const CURVE_ORDER_SLACK: f64 = 1e-3;

fn par_trials<T: Send>(trials: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials as u64).into_par_iter().map(f).collect()
}

fn sq_err_per_coord(est: &[f64], truth: &[f64]) -> f64 {
    est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn gaussian_vec(n: usize, sd: f64, rng: &mut StreamRng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            sd * w
        })
        .collect()
}

fn add_scaled(x: &[f64], w: &[f64], scale: f64) -> Vec<f64> {
    x.iter().zip(w).map(|(a, b)| a + scale * b).collect()
}

/// One draw from the continuous prior named by `kind`.
fn draw_prior(kind: PriorSpec, kappa: f64, sparsity: f64, rng: &mut StreamRng) -> f64 {
    match kind {
        PriorSpec::Gaussian => kappa * rng.sample::<f64, _>(StandardNormal),
        PriorSpec::Rademacher => {
            if rng.random::<bool>() {
                kappa
            } else {
                -kappa
            }
        }
        PriorSpec::BernoulliGaussian => {
            let on = rng.random::<f64>() < sparsity;
            let w: f64 = rng.sample(StandardNormal);
            if on {
                kappa / sparsity.sqrt() * w
            } else {
                0.0
            }
        }
    }
}

/// Spherical-code output for `x`, by the cap law or by a fresh explicit codebook.
fn spherical_branch(code: &SphericalCodeConfig, x: &[f64], explicit: bool, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if explicit {
        let bits = code.n as f64 * code.rate;
        if bits > EXPLICIT_CODEBOOK_MAX_BITS {
            return Err(Error::Config(format!(
                "explicit codebooks need n R <= {EXPLICIT_CODEBOOK_MAX_BITS} bits, got {bits}"
            )));
        }
        let book = draw_codebook(code, rng.random())?;
        Ok(book.encode(x, rng)?.1)
    } else {
        sample_output(code, x, rng)
    }
}

/// Stream offset for the coupled draws behind the Lipschitz transfer check.
const TRANSFER_STREAM: u64 = 1 << 40;

/// Per-trial `(|f(Y') - theta|^2 / n, |f(Z') - theta|^2 / n, |Y' - Z'|^2 / n)` for a coupled pair `(Y', Z')`.
type TransferDraw = (f64, f64, f64);

fn transfer_draw(
    code: &SphericalCodeConfig,
    x: &[f64],
    truth: &[f64],
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    rng: &mut StreamRng,
) -> Result<TransferDraw> {
    let pair = sample_coupled(code, x, rng)?;
    let dist = pair.distance();
    Ok((
        sq_err_per_coord(&f(&pair.y)?, truth),
        sq_err_per_coord(&f(&pair.z)?, truth),
        dist * dist / truth.len() as f64,
    ))
}

/// `|rootMSE(f(Y)) - rootMSE(f(Z))| <= L (E|Y - Z|^2 / n)^(1/2)` over coupled draws.
fn transfer_row(point: &Point, branch: &str, lipschitz: f64, draws: &[TransferDraw]) -> SummaryRow {
    let k = draws.len() as f64;
    let my = draws.iter().map(|d| d.0).sum::<f64>() / k;
    let mz = draws.iter().map(|d| d.1).sum::<f64>() / k;
    let md = draws.iter().map(|d| d.2).sum::<f64>() / k;
    let gap = (my.sqrt() - mz.sqrt()).abs();
    let bound = lipschitz * md.sqrt();
    SummaryRow {
        trials: draws.len(),
        ..SummaryRow::value(point, branch, "lipschitz_transfer", gap)
            .reference(bound)
            .verdict(gap <= bound * (1.0 + 1e-9) + 1e-15)
    }
}

fn within_se(mean: f64, se: f64, reference: f64, k: f64) -> bool {
    (mean - reference).abs() <= k * se
}

fn within_rel(value: f64, reference: f64, rel: f64) -> bool {
    (value - reference).abs() <= rel * reference.abs()
}

/// Linear estimation of `theta ~ N(0, kappa^2 I)` from `X = theta + eps W`,
/// after spherical coding and after the matched Gaussian channel.
pub fn run_gaussian_location(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (k2, e2) = (cfg.kappa * cfg.kappa, cfg.eps * cfg.eps);
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let mut point_id = 0u64;
    for &n in &cfg.ns {
        for &rate in &cfg.rates {
            let gamma = (n as f64 * (k2 + e2)).sqrt();
            let code = SphericalCodeConfig::matched(n, rate, gamma)?;
            let sigma2 = code.noise_variance();
            let lambda = optimal_linear_coefficient(k2, e2, sigma2)?;
            let pid = point_id;
            let rows = par_trials(cfg.trials, |t| {
                let mut rng = trial_stream(cfg.seed, pid, t);
                let theta = gaussian_vec(n, cfg.kappa, &mut rng);
                let w = gaussian_vec(n, 1.0, &mut rng);
                let x = add_scaled(&theta, &w, cfg.eps);
                let y = spherical_branch(&code, &x, cfg.explicit_codebook, &mut rng)?;
                let z = awgn_channel(&x, sigma2, &mut rng)?;
                let ys: Vec<f64> = y.iter().map(|v| lambda * v).collect();
                let zs: Vec<f64> = z.iter().map(|v| lambda * v).collect();
                let mut crng = trial_stream(cfg.seed, pid + TRANSFER_STREAM, t);
                let linear = |v: &[f64]| Ok(v.iter().map(|a| lambda * a).collect());
                let tr = transfer_draw(&code, &x, &theta, linear, &mut crng)?;
                Ok((sq_err_per_coord(&ys, &theta), sq_err_per_coord(&zs, &theta), tr))
            })?;
            point_id += 1;
            let transfer: Vec<TransferDraw> = rows.iter().map(|r| r.2).collect();
            let (sph, awgn): (Vec<f64>, Vec<f64>) = rows.into_iter().map(|r| (r.0, r.1)).unzip();
            let point = Point {
                n: Some(n),
                rate: Some(rate),
                eps: Some(cfg.eps),
                kappa: Some(cfg.kappa),
                ..Point::default()
            };
            let shell = k2 * e2 / (k2 + e2) + k2 * k2 / (k2 + e2) * (-2.0 * rate).exp2();
            let closed = linear_minimax_mse(k2, e2, sigma2)?;
            let (ms, ses) = mean_stderr(&sph);
            let (ma, sea) = mean_stderr(&awgn);
            out.summary.push(
                SummaryRow::sample(&point, "spherical", "mse", &sph)
                    .reference(shell)
                    .verdict(within_se(ms, ses, shell, 3.0)),
            );
            out.summary.push(
                SummaryRow::sample(&point, "awgn", "mse", &awgn)
                    .reference(closed)
                    .verdict(within_se(ma, sea, closed, 3.0)),
            );
            out.summary
                .push(SummaryRow::value(&point, "both", "mse_gap", (ms - ma).abs()));
            out.summary.push(SummaryRow::value(
                &point,
                "both",
                "sqrt_mse_gap",
                (ms.sqrt() - ma.sqrt()).abs(),
            ));
            out.summary
                .push(transfer_row(&point, "linear", lambda.abs(), &transfer));
            out.results.push(TrialResult {
                point,
                branches: vec![("spherical".into(), sph), ("awgn".into(), awgn)],
            });
        }
    }
    Ok(out)
}

/// Soft thresholding of a `k`-sparse signal at the minimax threshold.
pub fn run_sparse_threshold(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let e2 = cfg.eps * cfg.eps;
    let mut point_id = 0u64;
    for &n in &cfg.ns {
        let k = (cfg.sparsity * n as f64).round() as usize;
        if k > n {
            return Err(Error::Config(format!("k = {k} exceeds n = {n}")));
        }
        let nu = k as f64 / n as f64;
        let (beta, arg) = beta0_with_argmin(nu)?;
        let amp = if k > 0 {
            cfg.kappa * (n as f64 / k as f64).sqrt()
        } else {
            0.0
        };
        let signal2 = if k > 0 { cfg.kappa * cfg.kappa } else { 0.0 };
        for &rate in &cfg.rates {
            let gamma = (n as f64 * (signal2 + e2)).sqrt();
            let code = SphericalCodeConfig::matched(n, rate, gamma)?;
            let sigma2 = code.noise_variance();
            let tau2 = e2 + sigma2;
            let lambda = arg * tau2.sqrt();
            let pid = point_id;
            let rows = par_trials(cfg.trials, |t| {
                let mut rng = trial_stream(cfg.seed, pid, t);
                let mut theta = vec![0.0; n];
                for i in rand::seq::index::sample(&mut rng, n, k) {
                    theta[i] = if rng.random::<bool>() { amp } else { -amp };
                }
                let w = gaussian_vec(n, 1.0, &mut rng);
                let x = add_scaled(&theta, &w, cfg.eps);
                let y = spherical_branch(&code, &x, cfg.explicit_codebook, &mut rng)?;
                let z = awgn_channel(&x, sigma2, &mut rng)?;
                let ys: Vec<f64> = y.iter().map(|&v| soft_threshold(v, lambda)).collect();
                let zs: Vec<f64> = z.iter().map(|&v| soft_threshold(v, lambda)).collect();
                let mut crng = trial_stream(cfg.seed, pid + TRANSFER_STREAM, t);
                let shrink = |v: &[f64]| Ok(v.iter().map(|&a| soft_threshold(a, lambda)).collect());
                let tr = transfer_draw(&code, &x, &theta, shrink, &mut crng)?;
                Ok((sq_err_per_coord(&ys, &theta), sq_err_per_coord(&zs, &theta), tr))
            })?;
            point_id += 1;
            let transfer: Vec<TransferDraw> = rows.iter().map(|r| r.2).collect();
            let (sph, awgn): (Vec<f64>, Vec<f64>) = rows.into_iter().map(|r| (r.0, r.1)).unzip();
            let point = Point {
                n: Some(n),
                rate: Some(rate),
                eps: Some(cfg.eps),
                kappa: Some(cfg.kappa),
                sparsity: Some(nu),
                ..Point::default()
            };
            let risk = tau2 * beta;
            let bound = if k == 0 { risk + 0.01 } else { risk * 1.05 };
            let (ms, _) = mean_stderr(&sph);
            let (ma, _) = mean_stderr(&awgn);
            out.summary.push(
                SummaryRow::sample(&point, "spherical", "mse", &sph)
                    .reference(risk)
                    .verdict(ms <= bound),
            );
            out.summary.push(
                SummaryRow::sample(&point, "awgn", "mse", &awgn)
                    .reference(risk)
                    .verdict(ma <= bound),
            );
            let rel = if ma > 0.0 {
                (ms - ma).abs() / ma
            } else {
                (ms - ma).abs()
            };
            out.summary
                .push(SummaryRow::value(&point, "both", "relative_gap", rel).verdict(k == 0 || rel <= 0.05));
            out.summary.push(SummaryRow::value(&point, "both", "threshold", lambda));
            out.summary.push(transfer_row(&point, "soft_threshold", 1.0, &transfer));
            out.results.push(TrialResult {
                point,
                branches: vec![("spherical".into(), sph), ("awgn".into(), awgn)],
            });
        }
    }
    Ok(out)
}

/// Bayes-AMP on `X = A theta + eps W` after spherical coding and after the
/// matched Gaussian channel, tracked against state evolution.
pub fn run_amp_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let prior = cfg.prior.build(cfg.kappa, cfg.sparsity)?;
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let e2 = cfg.eps * cfg.eps;
    let k2 = prior.second_moment();
    let mut point_id = 0u64;
    for &n in &cfg.ns {
        let d = cfg.signal_dim(n);
        let delta = n as f64 / d as f64;
        for &rate in &cfg.rates {
            let gamma = (n as f64 * (e2 + k2 / delta)).sqrt();
            let code = SphericalCodeConfig::matched(n, rate, gamma)?;
            let sigma2 = code.noise_variance();
            let xi2 = e2 + sigma2;
            let base = AmpConfig::new(cfg.iterations, Denoiser::Bayes(prior.clone()), delta, xi2, &prior)?;
            let se = state_evolution(&prior, &base)?;
            let amp_cfg = AmpConfig {
                schedule: TauSchedule::Fixed(se.tau_sq.clone()),
                ..base
            };
            let pid = point_id;
            let entry = Normal::new(0.0, (1.0 / n as f64).sqrt()).expect("positive sd");
            let rows = par_trials(cfg.trials, |t| {
                let mut rng = trial_stream(cfg.seed, pid, t);
                let a = Array2::from_shape_simple_fn((n, d), || entry.sample(&mut rng));
                let theta: Array1<f64> = (0..d)
                    .map(|_| draw_prior(cfg.prior, cfg.kappa, cfg.sparsity, &mut rng))
                    .collect();
                let w = gaussian_vec(n, cfg.eps, &mut rng);
                let x = a.dot(&theta) + Array1::from(w);
                let x = x.to_vec();
                let y = spherical_branch(&code, &x, cfg.explicit_codebook, &mut rng)?;
                let z = awgn_channel(&x, sigma2, &mut rng)?;
                let run = |obs: Vec<f64>| -> Result<Vec<f64>> {
                    let res = amp_run(&a, Array1::from(obs).view(), &amp_cfg)?;
                    Ok(res
                        .iterates
                        .iter()
                        .map(|th| (th - &theta).mapv(|v| v * v).sum() / d as f64)
                        .collect())
                };
                Ok((run(y)?, run(z)?))
            })?;
            point_id += 1;
            let point = Point {
                n: Some(n),
                d: Some(d),
                rate: Some(rate),
                eps: Some(cfg.eps),
                kappa: Some(cfg.kappa),
                sparsity: Some(cfg.sparsity),
                delta: Some(delta),
                step: None,
            };
            for step in 0..cfg.iterations {
                let p = point.with_step(step + 1);
                let sph: Vec<f64> = rows.iter().map(|r| r.0[step]).collect();
                let awgn: Vec<f64> = rows.iter().map(|r| r.1[step]).collect();
                let reference = se.mse[step];
                let ms = mean_stderr(&sph).0;
                let ma = mean_stderr(&awgn).0;
                out.summary.push(
                    SummaryRow::sample(&p, "spherical", "mse", &sph)
                        .reference(reference)
                        .verdict(within_rel(ms, reference, 0.07)),
                );
                out.summary.push(
                    SummaryRow::sample(&p, "awgn", "mse", &awgn)
                        .reference(reference)
                        .verdict(within_rel(ma, reference, 0.05)),
                );
                out.summary
                    .push(SummaryRow::value(&p, "state_evolution", "tau_sq", se.tau_sq[step]));
                out.results.push(TrialResult {
                    point: p,
                    branches: vec![("spherical".into(), sph), ("awgn".into(), awgn)],
                });
            }
        }
    }
    Ok(out)
}

struct IndirectPoint {
    point: Point,
    branches: [Vec<f64>; 4],
    transfer: Vec<SummaryRow>,
    linear_ref: f64,
    bayes_ref: f64,
}

const INDIRECT_BRANCHES: [&str; 4] = ["spherical-linear", "spherical-bayes", "awgn-linear", "awgn-bayes"];

fn indirect_point(
    cfg: &ExperimentConfig,
    prior: &ScalarPrior,
    n: usize,
    rate: f64,
    eps: f64,
    pid: u64,
) -> Result<IndirectPoint> {
    let source = JointScalarSource::awgn(prior.clone(), eps)?;
    let gamma = (n as f64 * source.x_second_moment).sqrt();
    let code = SphericalCodeConfig::matched(n, rate, gamma)?;
    let sigma2 = code.noise_variance();
    let alpha = alpha_r(&source, rate)?;
    let noise = (eps * eps + sigma2).sqrt();
    let rows = par_trials(cfg.trials, |t| {
        let mut rng = trial_stream(cfg.seed, pid, t);
        let u: Vec<f64> = (0..n)
            .map(|_| draw_prior(cfg.prior, cfg.kappa, cfg.sparsity, &mut rng))
            .collect();
        let w = gaussian_vec(n, 1.0, &mut rng);
        let x = add_scaled(&u, &w, eps);
        let y = spherical_branch(&code, &x, cfg.explicit_codebook, &mut rng)?;
        let z = awgn_channel(&x, sigma2, &mut rng)?;
        let linear = |v: &[f64]| -> Vec<f64> { v.iter().map(|a| alpha * a).collect() };
        let bayes =
            |v: &[f64]| -> Result<Vec<f64>> { v.iter().map(|&a| posterior_mean_scalar(prior, noise, a)).collect() };
        let mut crng = trial_stream(cfg.seed, pid + TRANSFER_STREAM, t);
        let tr_linear = transfer_draw(&code, &x, &u, |v| Ok(linear(v)), &mut crng)?;
        let tr_bayes = transfer_draw(&code, &x, &u, bayes, &mut crng)?;
        Ok((
            [
                sq_err_per_coord(&linear(&y), &u),
                sq_err_per_coord(&bayes(&y)?, &u),
                sq_err_per_coord(&linear(&z), &u),
                sq_err_per_coord(&bayes(&z)?, &u),
            ],
            tr_linear,
            tr_bayes,
        ))
    })?;
    let branches = std::array::from_fn(|b| rows.iter().map(|r| r.0[b]).collect());
    let point = Point {
        n: Some(n),
        rate: Some(rate),
        eps: Some(eps),
        kappa: Some(cfg.kappa),
        ..Point::default()
    };
    let transfer = vec![
        transfer_row(
            &point,
            "linear",
            alpha.abs(),
            &rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        ),
        transfer_row(
            &point,
            "bayes",
            Denoiser::Bayes(prior.clone()).lipschitz(noise),
            &rows.iter().map(|r| r.2).collect::<Vec<_>>(),
        ),
    ];
    Ok(IndirectPoint {
        point,
        branches,
        transfer,
        linear_ref: gaussian_idrf(&source, rate)?,
        bayes_ref: mmse_equivalent_curve(&source, &[rate])?.points[0].1,
    })
}

fn push_indirect(out: &mut ExperimentOutput, p: IndirectPoint) {
    for (name, values) in INDIRECT_BRANCHES.iter().zip(&p.branches) {
        let (m, se) = mean_stderr(values);
        let row = SummaryRow::sample(&p.point, name, "mse", values);
        out.summary.push(if name.ends_with("linear") {
            row.reference(p.linear_ref).verdict(within_rel(m, p.linear_ref, 0.02))
        } else {
            row.reference(p.bayes_ref).verdict(within_se(m, se, p.bayes_ref, 3.0))
        });
    }
    out.summary.extend(p.transfer);
    out.results.push(TrialResult {
        point: p.point,
        branches: INDIRECT_BRANCHES
            .iter()
            .map(|s| s.to_string())
            .zip(p.branches)
            .collect(),
    });
}

/// Rows comparing the three indirect distortion-rate curves of `source` at `rates`.
fn curve_rows(point: &Point, source: &JointScalarSource, rates: &[f64], gaussian: bool) -> Result<Vec<SummaryRow>> {
    let mmse = mmse_equivalent_curve(source, rates)?;
    let ba = blahut_arimoto_at(source, rates)?;
    let mut rows = Vec::new();
    for (i, &r) in rates.iter().enumerate() {
        let p = Point {
            rate: Some(r),
            ..point.clone()
        };
        let dg = gaussian_idrf(source, r)?;
        let m = mmse.points[i].1;
        let d = ba.points[i].1;
        rows.push(SummaryRow::value(
            &p,
            "curve",
            "gaussian_direct",
            gaussian_drf_direct(source.u_second_moment(), r)?,
        ));
        rows.push(SummaryRow::value(&p, "curve", "gaussian_idrf", dg));
        rows.push(SummaryRow::value(&p, "curve", "mmse_equivalent", m).reference(dg));
        rows.push(SummaryRow::value(&p, "curve", "blahut_arimoto", d).reference(m));
        rows.push(
            SummaryRow::value(&p, "curve", "ordering", (m - d).min(dg - m))
                .verdict(d <= m + CURVE_ORDER_SLACK && m <= dg + CURVE_ORDER_SLACK),
        );
        if gaussian {
            let spread = [d, m, dg];
            let hi = spread.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = spread.iter().copied().fold(f64::INFINITY, f64::min);
            rows.push(SummaryRow::value(&p, "curve", "gaussian_agreement", hi / lo - 1.0).verdict(hi <= lo * 1.02));
        }
    }
    Ok(rows)
}

/// Remote-source coding of `U` observed through `X = U + eps W`, decoded
/// linearly and by the scalar posterior mean.
pub fn run_indirect_coding(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let prior = cfg.prior.build(cfg.kappa, cfg.sparsity)?;
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let mut pid = 0u64;
    for &n in &cfg.ns {
        for &rate in &cfg.rates {
            let p = indirect_point(cfg, &prior, n, rate, cfg.eps, pid)?;
            pid += 1;
            push_indirect(&mut out, p);
        }
        for &eps in &cfg.eps_grid {
            let p = indirect_point(cfg, &prior, n, 1.0, eps, pid)?;
            pid += 1;
            push_indirect(&mut out, p);
        }
    }
    let source = JointScalarSource::awgn(prior, cfg.eps)?;
    let point = Point {
        eps: Some(cfg.eps),
        kappa: Some(cfg.kappa),
        ..Point::default()
    };
    out.summary.extend(curve_rows(
        &point,
        &source,
        &cfg.rates,
        cfg.prior == PriorSpec::Gaussian,
    )?);
    Ok(out)
}

/// Fewest exceedances for a tail point to enter the fit.
const MIN_TAIL_COUNT: usize = 10;

/// Slope of `ln P(T >= t)` against `t^2` for `t = 1.0, 1.1, .., 3.0`, using the
/// points with at least ten exceedances; NaN if fewer than three remain.
pub fn log_tail_slope(sorted: &[f64]) -> f64 {
    let total = sorted.len() as f64;
    let (mut t2, mut ln_tail) = (Vec::new(), Vec::new());
    for i in 0..=20 {
        let t = 1.0 + 0.1 * i as f64;
        let above = sorted.len() - sorted.partition_point(|v| *v < t);
        if above >= MIN_TAIL_COUNT {
            t2.push(t * t);
            ln_tail.push((above as f64 / total).ln());
        }
    }
    if t2.len() < 3 {
        return f64::NAN;
    }
    linear_fit(&t2, &ln_tail).1
}

/// `(E|v|^p)^(1/p) / sqrt(p)`.
fn scaled_moment(values: &[f64], p: f64) -> f64 {
    let m = values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / values.len() as f64;
    m.powf(1.0 / p) / p.sqrt()
}

const MOMENT_ORDERS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
const DISTANCE_ORDERS: [f64; 3] = [1.0, 2.0, 4.0];

/// Coupled draws at fixed `x`, matched (`|x| = gamma`) and mismatched
/// (`|x| = gamma (1 + m)` for each configured `m`).
pub fn run_coupling_tails(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let mut offsets = vec![0.0];
    offsets.extend(cfg.mismatch.iter().copied().filter(|m| *m != 0.0));
    let mut pid = 0u64;
    for &rate in &cfg.rates {
        let mut q99 = Vec::new();
        let mut medians = Vec::new();
        let mut constants = Vec::new();
        for &n in &cfg.ns {
            let nf = n as f64;
            let gamma = nf.sqrt();
            let code = SphericalCodeConfig::matched(n, rate, gamma)?;
            for &m in &offsets {
                let x = vec![1.0 + m; n];
                let offset = (norm(&x) - gamma).abs();
                let id = pid;
                pid += 1;
                let draws = par_trials(cfg.trials, |t| {
                    let mut rng = trial_stream(cfg.seed, id, t);
                    let pair = sample_coupled(&code, &x, &mut rng)?;
                    let dist = pair.distance();
                    let bound = offset + coupling_bound(&code, pair.delta1, pair.delta2);
                    let sin = (1.0 - pair.s * pair.s).max(0.0).sqrt();
                    Ok((
                        dist,
                        pair.delta1,
                        pair.delta2,
                        dist <= bound * (1.0 + 1e-9) + 1e-12,
                        sin,
                    ))
                })?;
                let branch = if m == 0.0 {
                    "matched".to_string()
                } else {
                    format!("mismatch_{m}")
                };
                let point = Point {
                    n: Some(n),
                    rate: Some(rate),
                    ..Point::default()
                };
                let mut stat: Vec<f64> = draws.iter().map(|d| nf.sqrt() / gamma * (d.0 - offset).abs()).collect();
                stat.sort_by(f64::total_cmp);
                for (label, p) in [("q50", 0.5), ("q90", 0.9), ("q99", 0.99)] {
                    out.summary
                        .push(SummaryRow::value(&point, &branch, label, quantile_sorted(&stat, p)));
                }
                let slope = log_tail_slope(&stat);
                out.summary
                    .push(SummaryRow::value(&point, &branch, "log_tail_slope", slope).verdict(slope < 0.0));
                let held = draws.iter().filter(|d| d.3).count() as f64 / draws.len() as f64;
                out.summary
                    .push(SummaryRow::value(&point, &branch, "bound_holds", held).verdict(held == 1.0));
                let d1: Vec<f64> = draws.iter().map(|d| nf.sqrt() * d.1).collect();
                let d2: Vec<f64> = draws.iter().map(|d| d.2).collect();
                for (name, values) in [("delta1_scaled", &d1), ("delta2", &d2)] {
                    let moments: Vec<f64> = MOMENT_ORDERS.iter().map(|&p| scaled_moment(values, p)).collect();
                    for (p, v) in MOMENT_ORDERS.iter().zip(&moments) {
                        out.summary
                            .push(SummaryRow::value(&point, &branch, &format!("{name}_moment_p{p}"), *v));
                    }
                    let hi = moments.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lo = moments.iter().copied().fold(f64::INFINITY, f64::min);
                    out.summary.push(
                        SummaryRow::value(&point, &branch, &format!("{name}_moment_spread"), hi / lo)
                            .verdict(hi / lo <= 3.0),
                    );
                }
                let sins: Vec<f64> = draws.iter().map(|d| d.4).collect();
                out.summary
                    .push(SummaryRow::sample(&point, &branch, "mean_sin_angle", &sins).reference((-rate).exp2()));
                if m == 0.0 {
                    let scaled: Vec<f64> = draws.iter().map(|d| nf.sqrt() / gamma * d.0).collect();
                    let mut c = 0.0f64;
                    for p in DISTANCE_ORDERS {
                        let v = scaled_moment(&scaled, p);
                        c = c.max(v);
                        out.summary
                            .push(SummaryRow::value(&point, &branch, &format!("distance_moment_p{p}"), v));
                    }
                    constants.push(c);
                    q99.push(quantile_sorted(&stat, 0.99));
                    medians.push(quantile_sorted(&stat, 0.5));
                } else {
                    let mut dist: Vec<f64> = draws.iter().map(|d| d.0).collect();
                    dist.sort_by(f64::total_cmp);
                    let ratio = quantile_sorted(&dist, 0.5) / offset;
                    out.summary.push(
                        SummaryRow::value(&point, &branch, "median_distance_over_offset", ratio)
                            .verdict(within_rel(ratio, 1.0, 0.1)),
                    );
                }
                out.results.push(TrialResult {
                    point,
                    branches: vec![(branch, draws.iter().map(|d| d.0 * d.0 / nf).collect())],
                });
            }
        }
        let point = Point {
            rate: Some(rate),
            ..Point::default()
        };
        let spread = |v: &[f64]| {
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let r99 = spread(&q99);
        let r50 = spread(&medians);
        out.summary
            .push(SummaryRow::value(&point, "matched", "q99_ratio", r99).verdict(r99 < 1.5));
        out.summary
            .push(SummaryRow::value(&point, "matched", "median_ratio", r50).verdict(r50 <= 2.0));
        let c = constants.iter().copied().fold(0.0, f64::max);
        let rc = spread(&constants);
        out.summary
            .push(SummaryRow::value(&point, "matched", "distance_moment_constant", c));
        out.summary
            .push(SummaryRow::value(&point, "matched", "distance_moment_constant_ratio", rc).verdict(rc <= 1.5));
    }
    Ok(out)
}

/// Coupling cost `sqrt(E|Y - Z|^2 / n)` for a Gaussian-location source
/// against `sqrt(E(|X| - gamma)^2 / n) + C gamma / n`, with `gamma` offset by
/// each configured mismatch and `C` fitted on the matched points.
pub fn run_wasserstein_bound(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let sd = (cfg.kappa * cfg.kappa + cfg.eps * cfg.eps).sqrt();
    struct Cell {
        point: Point,
        tau: f64,
        gamma: f64,
        cost: f64,
        spread: f64,
        values: Vec<f64>,
    }
    let taus = if cfg.mismatch.is_empty() {
        vec![0.0]
    } else {
        cfg.mismatch.clone()
    };
    let mut cells = Vec::new();
    for &rate in &cfg.rates {
        for (ni, &n) in cfg.ns.iter().enumerate() {
            let nf = n as f64;
            for &tau in &taus {
                let gamma = nf.sqrt() * sd + tau;
                let code = SphericalCodeConfig::matched(n, rate, gamma)?;
                // common random numbers across mismatch levels
                let id = (ni as u64) << 16;
                let draws = par_trials(cfg.trials, |t| {
                    let mut rng = trial_stream(cfg.seed, id, t);
                    let x = gaussian_vec(n, sd, &mut rng);
                    let pair = sample_coupled(&code, &x, &mut rng)?;
                    Ok((pair.distance().powi(2) / nf, (norm(&x) - gamma).powi(2) / nf))
                })?;
                let (values, gaps): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
                cells.push(Cell {
                    point: Point {
                        n: Some(n),
                        rate: Some(rate),
                        eps: Some(cfg.eps),
                        kappa: Some(cfg.kappa),
                        ..Point::default()
                    },
                    tau,
                    gamma,
                    cost: mean_stderr(&values).0.sqrt(),
                    spread: mean_stderr(&gaps).0.sqrt(),
                    values,
                });
            }
        }
    }
    let c = cells
        .iter()
        .filter(|c| c.tau == 0.0)
        .map(|c| (c.cost - c.spread) * c.point.n.unwrap() as f64 / c.gamma)
        .fold(0.0, f64::max);
    for cell in &cells {
        let branch = format!("mismatch_{}", cell.tau);
        let bound = cell.spread + c * cell.gamma / cell.point.n.unwrap() as f64;
        out.summary.push(
            SummaryRow::value(&cell.point, &branch, "coupling_cost", cell.cost)
                .reference(bound)
                .verdict(cell.cost >= 0.0 && cell.cost <= bound * (1.0 + 1e-12)),
        );
        out.summary
            .push(SummaryRow::value(&cell.point, &branch, "magnitude_spread", cell.spread));
    }
    for &rate in &cfg.rates {
        let point = Point {
            rate: Some(rate),
            ..Point::default()
        };
        out.summary.push(SummaryRow::value(&point, "fit", "bound_constant", c));
        let matched: Vec<&Cell> = cells
            .iter()
            .filter(|c| c.tau == 0.0 && c.point.rate == Some(rate))
            .collect();
        if matched.len() > 1 {
            let decreasing = matched.windows(2).all(|w| w[1].cost < w[0].cost);
            let ratio = matched.last().unwrap().cost / matched[0].cost;
            out.summary
                .push(SummaryRow::value(&point, "mismatch_0", "cost_ratio_last_first", ratio).verdict(decreasing));
        }
        if taus.len() > 1 {
            for &n in &cfg.ns {
                let at_n: Vec<&Cell> = cells
                    .iter()
                    .filter(|c| c.point.n == Some(n) && c.point.rate == Some(rate))
                    .collect();
                let xs: Vec<f64> = at_n.iter().map(|c| c.tau).collect();
                let ys: Vec<f64> = at_n.iter().map(|c| c.cost * (n as f64).sqrt()).collect();
                let slope = linear_fit(&xs, &ys).1;
                let p = Point {
                    n: Some(n),
                    ..point.clone()
                };
                out.summary
                    .push(SummaryRow::value(&p, "fit", "mismatch_slope", slope).verdict(within_rel(slope, 1.0, 0.2)));
            }
        }
    }
    for cell in cells {
        out.results.push(TrialResult {
            point: cell.point,
            branches: vec![(format!("mismatch_{}", cell.tau), cell.values)],
        });
    }
    Ok(out)
}

/// The analytic and Blahut-Arimoto distortion-rate curves, plus a noise
/// sweep at one bit.
pub fn run_rd_curves(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let prior = cfg.prior.build(cfg.kappa, cfg.sparsity)?;
    let gaussian = cfg.prior == PriorSpec::Gaussian;
    let mut out = ExperimentOutput {
        experiment: cfg.experiment.to_string(),
        ..Default::default()
    };
    let source = JointScalarSource::awgn(prior.clone(), cfg.eps)?;
    let point = Point {
        eps: Some(cfg.eps),
        kappa: Some(cfg.kappa),
        ..Point::default()
    };
    out.summary.extend(curve_rows(&point, &source, &cfg.rates, gaussian)?);
    for &eps in &cfg.eps_grid {
        let source = JointScalarSource::awgn(prior.clone(), eps)?;
        let p = Point {
            eps: Some(eps),
            ..point.clone()
        };
        out.summary.extend(curve_rows(&p, &source, &[1.0], gaussian)?);
        let s2 = awgn_equivalent_variance(&source, 1.0)?;
        out.summary.push(SummaryRow::value(
            &Point { rate: Some(1.0), ..p },
            "curve",
            "equivalent_noise_variance",
            s2,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(kind);
        c.trials = 4;
        c
    }

    #[test]
    fn gaussian_location_shape() {
        let mut c = small(ExperimentKind::GaussianLocation);
        c.ns = vec![64, 128];
        c.rates = vec![0.5, 1.0];
        let out = run_gaussian_location(&c).unwrap();
        assert_eq!(out.results.len(), 4);
        assert!(out
            .results
            .iter()
            .all(|r| r.branches.len() == 2 && r.branches[0].1.len() == 4));
        assert_eq!(out.find("awgn", "mse").count(), 4);
    }

    #[test]
    fn explicit_codebook_branch() {
        let mut c = small(ExperimentKind::GaussianLocation);
        c.ns = vec![12];
        c.explicit_codebook = true;
        let out = run_gaussian_location(&c).unwrap();
        assert!(out.results[0]
            .branch("spherical")
            .unwrap()
            .iter()
            .all(|v| v.is_finite()));
        c.ns = vec![40];
        assert!(run_gaussian_location(&c).is_err());
    }

    #[test]
    fn sparse_zero_signal() {
        let mut c = small(ExperimentKind::SparseThreshold);
        c.ns = vec![2000];
        c.sparsity = 0.0;
        let out = run_sparse_threshold(&c).unwrap();
        assert!(out.all_passed());
        let mse = out.find("awgn", "mse").next().unwrap().mean;
        assert_eq!(mse, 0.0);
    }

    #[test]
    fn amp_small() {
        let mut c = small(ExperimentKind::Amp);
        c.ns = vec![100];
        c.iterations = 3;
        let out = run_amp_experiment(&c).unwrap();
        assert_eq!(out.results.len(), 3);
        assert_eq!(out.results[2].point.step, Some(3));
        assert_eq!(out.results[0].point.d, Some(200));
    }

    #[test]
    fn coupling_small() {
        let mut c = small(ExperimentKind::CouplingTails);
        c.ns = vec![16, 32];
        c.trials = 200;
        let out = run_coupling_tails(&c).unwrap();
        for row in out.find("matched", "bound_holds") {
            assert_eq!(row.mean, 1.0);
        }
        assert_eq!(out.find("matched", "q99_ratio").count(), 1);
    }

    #[test]
    fn wasserstein_small() {
        let mut c = small(ExperimentKind::WassersteinBound);
        c.ns = vec![32, 64];
        c.trials = 50;
        let out = run_wasserstein_bound(&c).unwrap();
        for row in out.find("mismatch_0", "coupling_cost") {
            assert_eq!(row.verdict.map(|v| v.passed()), Some(true));
        }
    }

    #[test]
    fn tail_slope_of_gaussian_is_about_minus_half() {
        let mut rng = crate::rng::seeded(5);
        let mut v: Vec<f64> = (0..200_000)
            .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
            .collect();
        v.sort_by(f64::total_cmp);
        let s = log_tail_slope(&v);
        assert!(s < -0.5 && s > -0.8, "{s}");
        assert!(log_tail_slope(&[0.5, 0.7]).is_nan());
    }

    #[test]
    fn scaled_moments_of_constant() {
        let v = vec![2.0; 10];
        assert!((scaled_moment(&v, 4.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_draws_match_moments() {
        let mut rng = crate::rng::seeded(9);
        for kind in [PriorSpec::Gaussian, PriorSpec::Rademacher, PriorSpec::BernoulliGaussian] {
            let v: Vec<f64> = (0..200_000).map(|_| draw_prior(kind, 0.7, 0.2, &mut rng)).collect();
            let m2 = v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64;
            assert!((m2 - 0.49).abs() < 0.02, "{kind:?} {m2}");
        }
    }
}
