//! Random spherical codes, the Gaussian reference channel, and the explicit
//! coupling between the two.
//!
//! A bitrate-`R` code in dimension `n` holds `M = floor(2^(nR))` codewords
//! drawn uniformly from the unit sphere. The encoder sends the index of the
//! codeword with the largest cosine similarity to the input and the decoder
//! outputs that codeword scaled to magnitude `rho`.
//!
//! [`ExplicitCodebook`] materializes the codebook and searches it by brute
//! force. [`sample_output`] draws the decoder output directly from its law,
//! `Y = rho (S x/|x| + sqrt(1 - S^2) H)`, which works for any `n`.

use std::io::Write;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};

use crate::specfun::{ln_codebook_size, SphereCapLaw};
use crate::{Error, Result};

/// Largest number of `f64` entries an explicit codebook may hold.
pub const MAX_CODEBOOK_ENTRIES: u64 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalCodeConfig {
    pub n: usize,
    /// Bits per coordinate.
    pub rate: f64,
    /// Output radius `rho`.
    pub magnitude: f64,
    /// Concentration scale `gamma`.
    pub gamma: f64,
}

impl SphericalCodeConfig {
    pub fn new(n: usize, rate: f64, magnitude: f64, gamma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("n", n as f64, "n >= 2"));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::domain("rate", rate, "(0, inf)"));
        }
        if !(magnitude > 0.0) || !magnitude.is_finite() {
            return Err(Error::domain("magnitude", magnitude, "(0, inf)"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain("gamma", gamma, "(0, inf)"));
        }
        Ok(Self {
            n,
            rate,
            magnitude,
            gamma,
        })
    }

    /// Code whose output magnitude is `gamma / sqrt(1 - 2^(-2R))`.
    pub fn matched(n: usize, rate: f64, gamma: f64) -> Result<Self> {
        let shrink = -(-2.0 * rate).exp2() + 1.0;
        Self::new(n, rate, gamma / shrink.sqrt(), gamma)
    }

    pub fn ln_codebook_size(&self) -> f64 {
        ln_codebook_size(self.n, self.rate)
    }

    /// `floor(2^(nR))` when it fits in a `u64`.
    pub fn codebook_size(&self) -> Option<u64> {
        let bits = self.n as f64 * self.rate;
        if bits < 64.0 {
            Some(bits.exp2().floor() as u64)
        } else {
            None
        }
    }

    pub fn cap_law(&self) -> SphereCapLaw {
        SphereCapLaw::with_ln_size(self.n, self.ln_codebook_size()).expect("validated config yields a valid law")
    }

    /// `gamma^2 / (n (2^(2R) - 1))`.
    pub fn noise_variance(&self) -> f64 {
        self.gamma * self.gamma / (self.n as f64 * pow4_minus_one(self.rate))
    }
}

/// `2^(2R) - 1` without cancellation at small rates.
pub(crate) fn pow4_minus_one(rate: f64) -> f64 {
    (2.0 * rate * std::f64::consts::LN_2).exp_m1()
}

/// AWGN variance equivalent to bitrate-`rate` spherical coding at scale `gamma`:
/// `gamma^2 / (n (2^(2R) - 1))`.
pub fn effective_noise_variance(gamma: f64, n: usize, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::domain("rate", rate, "(0, inf)"));
    }
    if n == 0 {
        return Err(Error::domain("n", 0.0, "n >= 1"));
    }
    Ok(gamma * gamma / (n as f64 * pow4_minus_one(rate)))
}

fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform point on the unit sphere of `R^n`.
pub fn uniform_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut g = gaussian_vector(n, rng);
        let r = norm(&g);
        if r > 1e-12 {
            g.iter_mut().for_each(|v| *v /= r);
            return g;
        }
    }
}

/// Uniform unit vector orthogonal to the unit vector `u`.
fn orthogonal_direction<R: Rng + ?Sized>(u: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut g = gaussian_vector(u.len(), rng);
        let p = dot(&g, u);
        g.iter_mut().zip(u).for_each(|(v, w)| *v -= p * w);
        let r = norm(&g);
        if r > 1e-12 {
            g.iter_mut().for_each(|v| *v /= r);
            return g;
        }
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ExplicitCodebook {
    config: SphericalCodeConfig,
    /// Row-major `M x n`.
    codewords: Vec<f64>,
    seed: u64,
}

/// Draws `M` i.i.d. uniform codewords from the stream seeded by `seed`.
pub fn draw_codebook(config: &SphericalCodeConfig, seed: u64) -> Result<ExplicitCodebook> {
    let n = config.n;
    let bits = n as f64 * config.rate;
    let entries = bits.exp2().floor() * n as f64;
    if bits >= 63.0 || entries > MAX_CODEBOOK_ENTRIES as f64 {
        return Err(Error::CodebookTooLarge {
            entries,
            limit: MAX_CODEBOOK_ENTRIES,
        });
    }
    let m = config.codebook_size().expect("checked above") as usize;
    let mut rng = crate::rng::seeded(seed);
    let mut codewords = Vec::with_capacity(m * n);
    for _ in 0..m {
        codewords.extend(uniform_direction(n, &mut rng));
    }
    Ok(ExplicitCodebook {
        config: *config,
        codewords,
        seed,
    })
}

impl ExplicitCodebook {
    pub fn config(&self) -> &SphericalCodeConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.codewords.len() / self.config.n
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        let n = self.config.n;
        &self.codewords[i * n..(i + 1) * n]
    }

    pub fn codewords(&self) -> impl Iterator<Item = &[f64]> {
        self.codewords.chunks_exact(self.config.n)
    }

    /// Index (0-based) of the codeword closest in angle to `x`, and the
    /// decoded output `rho * C(index)`. Ties go to the lowest index; a zero
    /// input selects a uniformly random codeword.
    pub fn encode<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<(usize, Vec<f64>)> {
        check_len("input length", self.config.n, x.len())?;
        let index = if x.iter().all(|&v| v == 0.0) {
            rng.random_range(0..self.len())
        } else {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, c) in self.codewords().enumerate() {
                let score = dot(c, x);
                if score > best_score {
                    best = i;
                    best_score = score;
                }
            }
            best
        };
        let rho = self.config.magnitude;
        let y = self.codeword(index).iter().map(|c| rho * c).collect();
        Ok((index, y))
    }

    /// Like [`encode`](Self::encode), also writing `"seed index"` as one line to `dump`.
    pub fn encode_logged<R: Rng + ?Sized, W: Write>(
        &self,
        x: &[f64],
        rng: &mut R,
        dump: &mut W,
    ) -> Result<(usize, Vec<f64>)> {
        let out = self.encode(x, rng)?;
        writeln!(dump, "{} {}", self.seed, out.0)?;
        Ok(out)
    }
}

/// Draws the decoder output of a fresh random code applied to `x`.
pub fn sample_output<R: Rng + ?Sized>(config: &SphericalCodeConfig, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_len("input length", config.n, x.len())?;
    let rho = config.magnitude;
    let r = norm(x);
    if r == 0.0 {
        return Ok(uniform_direction(config.n, rng).into_iter().map(|v| rho * v).collect());
    }
    let u: Vec<f64> = x.iter().map(|v| v / r).collect();
    let s = config.cap_law().sample(rng.sample(Open01))?;
    let h = orthogonal_direction(&u, rng);
    let c = (1.0 - s * s).max(0.0).sqrt();
    Ok(u.iter().zip(&h).map(|(a, b)| rho * (s * a + c * b)).collect())
}

/// `z = x + sqrt(sigma2) W` with `W` standard Gaussian.
pub fn awgn_channel<R: Rng + ?Sized>(x: &[f64], sigma2: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::domain("sigma2", sigma2, "[0, inf)"));
    }
    let sigma = sigma2.sqrt();
    Ok(x.iter()
        .map(|&v| {
            let w: f64 = rng.sample(StandardNormal);
            v + sigma * w
        })
        .collect())
}

/// Jointly drawn spherical-code output `y` and Gaussian-channel output `z`.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Cosine similarity of the selected codeword.
    pub s: f64,
    /// Radial Gaussian component.
    pub a: f64,
    /// Chi(n-1) tangential component.
    pub b: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl CoupledPair {
    pub fn distance(&self) -> f64 {
        self.y
            .iter()
            .zip(&self.z)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }
}

/// `|(S - sqrt(1 - 2^(-2R)), sqrt(1 - S^2) - 2^(-R))|`.
pub fn delta1(s: f64, rate: f64) -> f64 {
    let target_cos = (-(-2.0 * rate).exp2() + 1.0).sqrt();
    let target_sin = (-rate).exp2();
    (s - target_cos).hypot((1.0 - s * s).max(0.0).sqrt() - target_sin)
}

/// `|(A, B - sqrt(n))|`.
pub fn delta2(a: f64, b: f64, n: usize) -> f64 {
    a.hypot(b - (n as f64).sqrt())
}

/// Right-hand side of the deterministic coupling bound:
/// `(gamma/sqrt n)(sqrt(n) delta1 / sqrt(1 - 2^(-2R)) + delta2 / sqrt(2^(2R) - 1))`.
pub fn coupling_bound(config: &SphericalCodeConfig, delta1: f64, delta2: f64) -> f64 {
    let nf = config.n as f64;
    let shrink = -(-2.0 * config.rate).exp2() + 1.0;
    config.gamma / nf.sqrt() * (nf.sqrt() * delta1 / shrink.sqrt() + delta2 / pow4_minus_one(config.rate).sqrt())
}

/// Samples `(Y, Z)` sharing the radial direction of `x` and one tangential
/// direction `H`:
///
/// ```text
/// Y = rho (S x/|x| + sqrt(1 - S^2) H)
/// Z = x + sigma A x/|x| + sigma B H
/// ```
///
/// with `S` from the cap law, `A ~ N(0, 1)`, `B ~ chi(n - 1)` and
/// `sigma^2 = gamma^2 / (n (2^(2R) - 1))`.
pub fn sample_coupled<R: Rng + ?Sized>(config: &SphericalCodeConfig, x: &[f64], rng: &mut R) -> Result<CoupledPair> {
    check_len("input length", config.n, x.len())?;
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::domain("|x|", 0.0, "(0, inf)"));
    }
    let n = config.n;
    let u: Vec<f64> = x.iter().map(|v| v / r).collect();
    let s = config.cap_law().sample(rng.sample(Open01))?;
    let a: f64 = rng.sample(StandardNormal);
    let chi2 = ChiSquared::new((n - 1) as f64).expect("n >= 2");
    let b = chi2.sample(rng).sqrt();
    let h = orthogonal_direction(&u, rng);
    let sigma = effective_noise_variance(config.gamma, n, config.rate)?.sqrt();
    let rho = config.magnitude;
    let c = (1.0 - s * s).max(0.0).sqrt();
    let y = u.iter().zip(&h).map(|(p, q)| rho * (s * p + c * q)).collect();
    let z = x
        .iter()
        .zip(&u)
        .zip(&h)
        .map(|((xi, p), q)| xi + sigma * a * p + sigma * b * q)
        .collect();
    Ok(CoupledPair {
        y,
        z,
        s,
        a,
        b,
        delta1: delta1(s, config.rate),
        delta2: delta2(a, b, n),
    })
}
