//! Distortion-rate functions for recovering a latent `U` from a rate-limited
//! description of `X`, where `X` is `U` seen through a noisy channel.
//!
//! All rates are in bits per sample.

use crate::estimators::{posterior_moments, scalar_mmse, ScalarPrior};
use crate::sphere_code::pow4_minus_one;
use crate::{Error, Result};

/// Conditional law of `X` given `U`.
#[derive(Clone, Debug, PartialEq)]
pub enum Channel {
    /// `X = U + eps W`.
    Awgn { eps: f64 },
    /// `kernel[i][j] = P(X = x_values[j] | U = u_i)` for each atom `u_i` of the prior.
    Discrete { x_values: Vec<f64>, kernel: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointScalarSource {
    pub u_prior: ScalarPrior,
    pub channel: Channel,
    /// `E[U X]`.
    pub cross_moment: f64,
    /// `E[X^2]`.
    pub x_second_moment: f64,
}

impl JointScalarSource {
    pub fn awgn(u_prior: ScalarPrior, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::domain("eps", eps, "[0, inf)"));
        }
        let m2 = u_prior.second_moment();
        Ok(Self {
            u_prior,
            channel: Channel::Awgn { eps },
            cross_moment: m2,
            x_second_moment: m2 + eps * eps,
        })
    }

    pub fn discrete(u_prior: ScalarPrior, x_values: Vec<f64>, kernel: Vec<Vec<f64>>) -> Result<Self> {
        let atoms = u_prior.points().len();
        if kernel.len() != atoms {
            return Err(Error::DimensionMismatch {
                what: "kernel rows",
                expected: atoms,
                got: kernel.len(),
            });
        }
        for row in &kernel {
            if row.len() != x_values.len() {
                return Err(Error::DimensionMismatch {
                    what: "kernel columns",
                    expected: x_values.len(),
                    got: row.len(),
                });
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::Prior("kernel rows must be probability vectors".into()));
            }
        }
        let mut cross = 0.0;
        let mut x2 = 0.0;
        for ((u, w), row) in u_prior.points().iter().zip(u_prior.weights()).zip(&kernel) {
            for (x, p) in x_values.iter().zip(row) {
                cross += w * p * u * x;
                x2 += w * p * x * x;
            }
        }
        Ok(Self {
            u_prior,
            channel: Channel::Discrete { x_values, kernel },
            cross_moment: cross,
            x_second_moment: x2,
        })
    }

    /// `E[U^2]`.
    pub fn u_second_moment(&self) -> f64 {
        self.u_prior.second_moment()
    }

    pub fn eps(&self) -> Option<f64> {
        match self.channel {
            Channel::Awgn { eps } => Some(eps),
            Channel::Discrete { .. } => None,
        }
    }

    /// `(E[U | X = x], E[U^2 | X = x])`.
    pub fn conditional_moments(&self, x: f64) -> (f64, f64) {
        match &self.channel {
            Channel::Awgn { eps } if *eps == 0.0 => (x, x * x),
            Channel::Awgn { eps } => posterior_moments(&self.u_prior, *eps, x),
            Channel::Discrete { x_values, kernel } => {
                let j = x_values
                    .iter()
                    .position(|v| *v == x)
                    .expect("x must be one of the channel outputs");
                let (mut p, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for ((u, w), row) in self.u_prior.points().iter().zip(self.u_prior.weights()).zip(kernel) {
                    let q = w * row[j];
                    p += q;
                    m1 += q * u;
                    m2 += q * u * u;
                }
                (m1 / p, m2 / p)
            }
        }
    }

    /// Discretized law of `X`: support points and probabilities.
    ///
    /// For a noisy Gaussian channel this is a 1201-point grid spanning eight
    /// standard deviations of `X` each side, weighted by the exact density.
    pub fn x_marginal(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.channel {
            Channel::Awgn { eps } if *eps == 0.0 => (self.u_prior.points().to_vec(), self.u_prior.weights().to_vec()),
            Channel::Awgn { .. } => {
                let sd = (self.x_second_moment - self.u_prior.mean().powi(2)).sqrt();
                let grid = span_grid(self.u_prior.mean(), 8.0 * sd, 1201);
                let probs = self.x_density_weights(&grid);
                (grid, probs)
            }
            Channel::Discrete { x_values, kernel } => {
                let probs = (0..x_values.len())
                    .map(|j| {
                        self.u_prior
                            .weights()
                            .iter()
                            .zip(kernel)
                            .map(|(w, row)| w * row[j])
                            .sum()
                    })
                    .collect();
                (x_values.clone(), probs)
            }
        }
    }

    /// Probabilities for an arbitrary grid of `x` values, proportional to the
    /// density of `X` (noisy Gaussian channel) or to its mass function.
    pub fn x_density_weights(&self, grid: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = match &self.channel {
            Channel::Awgn { eps } if *eps > 0.0 => grid
                .iter()
                .map(|x| {
                    self.u_prior
                        .points()
                        .iter()
                        .zip(self.u_prior.weights())
                        .map(|(u, w)| w * (-0.5 * ((x - u) / eps).powi(2)).exp())
                        .sum()
                })
                .collect(),
            _ => {
                let (support, probs) = self.x_marginal();
                grid.iter()
                    .map(|x| support.iter().position(|s| s == x).map_or(0.0, |j| probs[j]))
                    .collect()
            }
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

fn span_grid(center: f64, half_width: f64, count: usize) -> Vec<f64> {
    let step = 2.0 * half_width / (count - 1) as f64;
    (0..count).map(|i| center - half_width + step * i as f64).collect()
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0) || rate.is_nan() {
        return Err(Error::domain("rate", rate, "[0, inf)"));
    }
    Ok(())
}

/// Shannon distortion-rate function of a Gaussian source, `var 2^(-2R)`.
pub fn gaussian_drf_direct(var: f64, rate: f64) -> Result<f64> {
    check_rate(rate)?;
    if !(var >= 0.0) {
        return Err(Error::domain("var", var, "[0, inf)"));
    }
    Ok(var * (-2.0 * rate).exp2())
}

/// `E[U^2] - (E[UX]^2 / E[X^2]) (1 - 2^(-2R))`.
pub fn gaussian_idrf(source: &JointScalarSource, rate: f64) -> Result<f64> {
    check_rate(rate)?;
    let gain = source.cross_moment.powi(2) / source.x_second_moment;
    Ok(source.u_second_moment() - gain * (-(-2.0 * rate).exp2() + 1.0))
}

/// Linear decoding coefficient `(1 - 2^(-2R)) E[UX] / E[X^2]`.
pub fn alpha_r(source: &JointScalarSource, rate: f64) -> Result<f64> {
    check_rate(rate)?;
    if !(source.x_second_moment > 0.0) {
        return Err(Error::domain("E[X^2]", source.x_second_moment, "(0, inf)"));
    }
    Ok((-(-2.0 * rate).exp2() + 1.0) * source.cross_moment / source.x_second_moment)
}

/// `sigma_R^2 = E[X^2] / (2^(2R) - 1)`.
pub fn awgn_equivalent_variance(source: &JointScalarSource, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::domain("rate", rate, "(0, inf)"));
    }
    Ok(source.x_second_moment / pow4_minus_one(rate))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveMethod {
    GaussianDirect,
    GaussianIndirect,
    MmseEquivalent,
    BlahutArimoto,
}

impl CurveMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            CurveMethod::GaussianDirect => "gaussian_direct",
            CurveMethod::GaussianIndirect => "gaussian_indirect",
            CurveMethod::MmseEquivalent => "mmse_equivalent",
            CurveMethod::BlahutArimoto => "blahut_arimoto",
        }
    }
}

/// `(rate, distortion)` pairs sorted by rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RateDistortionCurve {
    pub points: Vec<(f64, f64)>,
    pub method: CurveMethod,
}

impl RateDistortionCurve {
    pub fn new(mut points: Vec<(f64, f64)>, method: CurveMethod) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { points, method }
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
    }

    /// Piecewise-linear value at `rate`; `None` outside the traced range.
    pub fn interpolate(&self, rate: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        if rate < first.0 || rate > pts.last()?.0 {
            return None;
        }
        let i = pts.partition_point(|p| p.0 < rate);
        if i == 0 {
            return Some(first.1);
        }
        let (r0, d0) = pts[i - 1];
        let (r1, d1) = pts[i];
        if r1 == r0 {
            return Some(d1);
        }
        Some(d0 + (d1 - d0) * (rate - r0) / (r1 - r0))
    }
}

/// `M(sigma_R^2)`: the MMSE of `U` from `U + sqrt(eps^2 + sigma_R^2) W` at each rate.
pub fn mmse_equivalent_curve(source: &JointScalarSource, rates: &[f64]) -> Result<RateDistortionCurve> {
    let eps = source
        .eps()
        .ok_or_else(|| Error::Config("the MMSE-equivalent curve needs a Gaussian channel".into()))?;
    let points = rates
        .iter()
        .map(|&r| {
            let s2 = awgn_equivalent_variance(source, r)?;
            Ok((r, scalar_mmse(&source.u_prior, (eps * eps + s2).sqrt())?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateDistortionCurve::new(points, CurveMethod::MmseEquivalent))
}

/// Analytic curve for a closed-form method.
pub fn analytic_curve(source: &JointScalarSource, rates: &[f64], method: CurveMethod) -> Result<RateDistortionCurve> {
    let points = rates
        .iter()
        .map(|&r| {
            let d = match method {
                CurveMethod::GaussianDirect => gaussian_drf_direct(source.u_second_moment(), r)?,
                CurveMethod::GaussianIndirect => gaussian_idrf(source, r)?,
                CurveMethod::MmseEquivalent => return mmse_equivalent_curve(source, &[r]).map(|c| c.points[0]),
                CurveMethod::BlahutArimoto => return Err(Error::Config("Blahut-Arimoto has no closed form".into())),
            };
            Ok((r, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateDistortionCurve::new(points, method))
}

/// Default reproduction alphabet: 201 points spanning the range of `E[U | X = x]` over `x_grid`.
pub fn default_xhat_grid(source: &JointScalarSource, x_grid: &[f64]) -> Vec<f64> {
    let means: Vec<f64> = x_grid.iter().map(|&x| source.conditional_moments(x).0).collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![lo];
    }
    span_grid(0.5 * (lo + hi), 0.5 * (hi - lo), 201)
}

/// One point on the indirect distortion-rate curve.
#[derive(Clone, Debug)]
pub struct BlahutArimotoPoint {
    /// Bits.
    pub rate: f64,
    pub distortion: f64,
    pub iterations: usize,
    /// `I + slope * D` (nats) after each iteration.
    pub lagrangian: Vec<f64>,
    /// Final reproduction marginal, usable as a warm start.
    pub output_marginal: Vec<f64>,
}

/// Blahut-Arimoto at Lagrange slope `slope` for the indirect problem with
/// reduced distortion `d(x, xh) = E[U^2|x] - 2 xh E[U|x] + xh^2`.
pub fn blahut_arimoto_indirect(
    source: &JointScalarSource,
    x_grid: &[f64],
    xhat_grid: &[f64],
    slope: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BlahutArimotoPoint> {
    blahut_arimoto_warm(source, x_grid, xhat_grid, slope, tol, max_iter, None)
}

/// Discretized indirect problem at one slope. Row `i` of `exp(-slope d)` is
/// stored as `exp(-shift_i) * kernel_i` with the largest kernel entry equal to 1.
struct BaProblem {
    probs: Vec<f64>,
    shifts: Vec<f64>,
    kernel: Vec<f64>,
    dist: Vec<f64>,
    m: usize,
}

/// Smallest reproduction probability kept, so that no row loses all support.
const Q_FLOOR: f64 = 1e-280;

fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl BaProblem {
    fn new(source: &JointScalarSource, x_grid: &[f64], xhat_grid: &[f64], slope: f64) -> Self {
        let px = source.x_density_weights(x_grid);
        let m = xhat_grid.len();
        let mut out = Self {
            probs: Vec::new(),
            shifts: Vec::new(),
            kernel: Vec::new(),
            dist: Vec::new(),
            m,
        };
        // d(x, xh) = Var(U|x) + (E[U|x] - xh)^2
        for (&x, &p) in x_grid.iter().zip(&px) {
            if p <= 0.0 {
                continue;
            }
            let (m1, m2) = source.conditional_moments(x);
            let var = (m2 - m1 * m1).max(0.0);
            let sq: Vec<f64> = xhat_grid.iter().map(|xh| (m1 - xh) * (m1 - xh)).collect();
            let best = sq.iter().copied().fold(f64::INFINITY, f64::min);
            out.probs.push(p);
            out.shifts.push(slope * (var + best));
            out.kernel.extend(sq.iter().map(|v| (-slope * (v - best)).exp()));
            out.dist.extend(sq.iter().map(|v| var + v));
        }
        out
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.kernel[i * self.m..(i + 1) * self.m]
    }

    /// Lagrangian `F(q) = -sum_x p(x) ln sum_xh q(xh) exp(-slope d)` and the
    /// Blahut-Arimoto update of `q`.
    fn step(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let mut f = 0.0;
        let mut c = vec![0.0; self.m];
        for (i, (&p, &shift)) in self.probs.iter().zip(&self.shifts).enumerate() {
            let k = self.row(i);
            let z = dot4(k, q);
            f += p * (shift - z.ln());
            let scale = p / z;
            c.iter_mut().zip(k).for_each(|(cj, kj)| *cj += scale * kj);
        }
        let next = q.iter().zip(&c).map(|(qj, cj)| (qj * cj).max(Q_FLOOR)).collect();
        (f, next)
    }

    /// Rate (bits) and distortion of the test channel induced by `q`.
    fn rate_distortion(&self, q: &[f64]) -> (f64, f64) {
        let m = self.m;
        let rows = self.probs.len();
        let mut channel = vec![0.0; rows * m];
        let mut marginal = vec![0.0; m];
        for i in 0..rows {
            let k = self.row(i);
            let out = &mut channel[i * m..(i + 1) * m];
            out.iter_mut().zip(k).zip(q).for_each(|((c, kj), qj)| *c = kj * qj);
            let z: f64 = out.iter().sum();
            let p = self.probs[i];
            out.iter_mut().zip(marginal.iter_mut()).for_each(|(c, mj)| {
                *c /= z;
                *mj += p * *c;
            });
        }
        let (mut info, mut distortion) = (0.0, 0.0);
        for (i, &p) in self.probs.iter().enumerate() {
            for j in 0..m {
                let v = channel[i * m + j];
                if v > 0.0 {
                    info += p * v * (v / marginal[j]).ln();
                    distortion += p * v * self.dist[i * m + j];
                }
            }
        }
        (info.max(0.0) / std::f64::consts::LN_2, distortion)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Blahut-Arimoto with squared-extrapolation acceleration. An extrapolated
/// point is kept only when it does not raise the Lagrangian, so the recorded
/// Lagrangian sequence is nonincreasing.
#[allow(clippy::too_many_arguments)]
fn blahut_arimoto_warm(
    source: &JointScalarSource,
    x_grid: &[f64],
    xhat_grid: &[f64],
    slope: f64,
    tol: f64,
    max_iter: usize,
    start: Option<&[f64]>,
) -> Result<BlahutArimotoPoint> {
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(Error::domain("slope", slope, "(0, inf)"));
    }
    if x_grid.is_empty() || xhat_grid.is_empty() {
        return Err(Error::Config("grids must be nonempty".into()));
    }
    let problem = BaProblem::new(source, x_grid, xhat_grid, slope);
    let m = xhat_grid.len();
    let mut q: Vec<f64> = match start {
        Some(s) if s.len() == m => s.iter().map(|v| v.max(Q_FLOOR)).collect(),
        _ => vec![1.0 / m as f64; m],
    };
    let mut lagrangian = Vec::new();
    let mut evaluations = 0;
    let mut gap = f64::INFINITY;
    while evaluations < max_iter {
        let (f0, q1) = problem.step(&q);
        let (f1, q2) = problem.step(&q1);
        evaluations += 2;
        if let Some(&last) = lagrangian.last() {
            gap = last - f0;
        }
        lagrangian.push(f0);
        if gap.abs() < tol {
            let (rate, distortion) = problem.rate_distortion(&q);
            return Ok(BlahutArimotoPoint {
                rate,
                distortion,
                iterations: evaluations,
                lagrangian,
                output_marginal: q,
            });
        }
        let r: Vec<f64> = q1.iter().zip(&q).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = q2.iter().zip(&q1).zip(&q).map(|((c, b), a)| c - 2.0 * b + a).collect();
        let (nr, nv) = (norm2(&r), norm2(&v));
        let mut alpha = if nv > 0.0 { -(nr / nv) } else { -1.0 };
        let mut next = q2;
        while alpha < -1.0 {
            let cand: Vec<f64> = q
                .iter()
                .zip(&r)
                .zip(&v)
                .map(|((a, rj), vj)| a - 2.0 * alpha * rj + alpha * alpha * vj)
                .collect();
            if cand.iter().all(|c| *c > 0.0) {
                let total: f64 = cand.iter().sum();
                let cand: Vec<f64> = cand.iter().map(|c| c / total).collect();
                let (fc, stabilized) = problem.step(&cand);
                evaluations += 1;
                if fc <= f1 {
                    next = stabilized;
                }
                break;
            }
            alpha = 0.5 * (alpha - 1.0);
        }
        q = next;
    }
    Err(Error::NoConvergence {
        iterations: evaluations,
        gap: gap.abs(),
    })
}

fn x_moments(source: &JointScalarSource, x_grid: &[f64]) -> (Vec<f64>, f64, f64, f64) {
    let px = source.x_density_weights(x_grid);
    let (mut m1, mut s1, mut m2) = (0.0, 0.0, 0.0);
    for (x, p) in x_grid.iter().zip(&px) {
        let (a, b) = source.conditional_moments(*x);
        m1 += p * a;
        s1 += p * a * a;
        m2 += p * b;
    }
    (px, m1, s1, m2)
}

/// Solutions at geometrically increasing slopes, each warm started from the
/// previous output marginal, until the rate exceeds `max_rate`.
fn trace_slopes(
    source: &JointScalarSource,
    x_grid: &[f64],
    xhat_grid: &[f64],
    max_rate: f64,
) -> Result<Vec<(f64, BlahutArimotoPoint)>> {
    let (_, mean, second, _) = x_moments(source, x_grid);
    // Below 1 / (2 Var(E[U|X])) the optimal rate is zero.
    let spread = (second - mean * mean).max(1e-300);
    let mut slope = 0.55 / spread;
    let mut out: Vec<(f64, BlahutArimotoPoint)> = Vec::new();
    while slope < 1e9 {
        let warm = out.last().map(|(_, p)| p.output_marginal.as_slice());
        let p = blahut_arimoto_warm(source, x_grid, xhat_grid, slope, BA_TOL, BA_MAX_ITER, warm)?;
        let done = p.rate > max_rate;
        out.push((slope, p));
        if done {
            break;
        }
        slope *= TRACE_FACTOR;
    }
    Ok(out)
}

const BA_TOL: f64 = 1e-10;
const TRACE_FACTOR: f64 = 2.0;
const BA_MAX_ITER: usize = 1_000_000;

/// Distortion of the best constant reproduction on `xhat_grid`.
fn zero_rate_distortion(source: &JointScalarSource, x_grid: &[f64], xhat_grid: &[f64]) -> f64 {
    let (_, m1, _, m2) = x_moments(source, x_grid);
    xhat_grid
        .iter()
        .map(|xh| m2 - 2.0 * xh * m1 + xh * xh)
        .fold(f64::INFINITY, f64::min)
}

/// Traces `D(R)` by Blahut-Arimoto over geometrically increasing slopes, warm
/// starting each from the previous output marginal, until the rate exceeds
/// `max_rate`.
pub fn blahut_arimoto_curve(
    source: &JointScalarSource,
    x_grid: &[f64],
    xhat_grid: &[f64],
    max_rate: f64,
) -> Result<RateDistortionCurve> {
    let mut points: Vec<(f64, f64)> = trace_slopes(source, x_grid, xhat_grid, max_rate)?
        .into_iter()
        .map(|(_, p)| (p.rate, p.distortion))
        .collect();
    points.push((0.0, zero_rate_distortion(source, x_grid, xhat_grid)));
    Ok(RateDistortionCurve::new(points, CurveMethod::BlahutArimoto))
}

/// Rate tolerance (bits) of the slope search in [`blahut_arimoto_at`].
const RATE_TOL: f64 = 1e-5;
const SLOPE_TOL: f64 = 1e-7;

/// `D(R)` at each requested rate on the default grids. Each rate is located
/// by bisection on the log slope between traced solutions.
pub fn blahut_arimoto_at(source: &JointScalarSource, rates: &[f64]) -> Result<RateDistortionCurve> {
    let (x_grid, _) = source.x_marginal();
    let xhat = default_xhat_grid(source, &x_grid);
    let max_rate = rates.iter().copied().fold(0.0, f64::max);
    let traced = trace_slopes(source, &x_grid, &xhat, max_rate)?;
    let d0 = zero_rate_distortion(source, &x_grid, &xhat);
    let points = rates
        .iter()
        .map(|&r| {
            if r == 0.0 {
                return Ok((r, d0));
            }
            let hi = traced
                .iter()
                .position(|(_, p)| p.rate >= r)
                .ok_or_else(|| Error::Config(format!("rate {r} outside the traced range")))?;
            let (mut s_hi, mut p_hi) = (traced[hi].0, traced[hi].1.clone());
            // (slope, rate, distortion, marginal) of the lower bracket
            let (mut s_lo, mut r_lo, mut d_lo, mut q_lo) = if hi == 0 {
                (s_hi / 4.0, 0.0, d0, None)
            } else {
                let (s, p) = &traced[hi - 1];
                (*s, p.rate, p.distortion, Some(p.output_marginal.clone()))
            };
            for _ in 0..60 {
                // a collapsed slope bracket means a linear piece of D(R)
                if p_hi.rate - r_lo <= RATE_TOL || s_hi / s_lo - 1.0 <= SLOPE_TOL {
                    break;
                }
                let s_mid = (s_lo * s_hi).sqrt();
                let warm = q_lo.as_deref().unwrap_or(&p_hi.output_marginal);
                let mid = blahut_arimoto_warm(source, &x_grid, &xhat, s_mid, BA_TOL, BA_MAX_ITER, Some(warm))?;
                if mid.rate >= r {
                    s_hi = s_mid;
                    p_hi = mid;
                } else {
                    s_lo = s_mid;
                    r_lo = mid.rate;
                    d_lo = mid.distortion;
                    q_lo = Some(mid.output_marginal);
                }
            }
            let d = if p_hi.rate > r_lo {
                d_lo + (p_hi.distortion - d_lo) * (r - r_lo) / (p_hi.rate - r_lo)
            } else {
                p_hi.distortion
            };
            Ok((r, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateDistortionCurve::new(points, CurveMethod::BlahutArimoto))
}
