//! Special functions for the cosine-similarity law of a random spherical code.
//!
//! For a fixed nonzero `x` and a direction `V` uniform on the unit sphere of
//! `R^n`, the cosine `G = <x, V> / |x|` has complementary CDF
//!
//! ```text
//! Q_n(g) = kappa_n * integral_g^1 (1 - t^2)^((n - 3) / 2) dt,
//! kappa_n = Gamma(n/2) / (sqrt(pi) * Gamma((n - 1)/2)),
//! ```
//!
//! and the largest of `M` independent cosines has CDF `(1 - Q_n(s))^M`.
//!
//! Codebooks of interest have `M = floor(2^(nR))` entries, which overflows
//! `f64` long before `n` reaches the dimensions used in experiments, so the
//! law is parameterized by `ln M` and every evaluation goes through `ln Q_n`.

use std::f64::consts::{FRAC_1_PI, LN_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// `ln Gamma(a + 1/2) - ln Gamma(a)`.
///
/// The direct difference of log-gammas loses digits once both terms are in
/// the thousands, so large arguments use the asymptotic series of the ratio.
fn ln_gamma_half_ratio(a: f64) -> f64 {
    if a < 400.0 {
        ln_gamma(a + 0.5) - ln_gamma(a)
    } else {
        let r = 1.0 / a;
        let series = -r / 8.0 + r * r / 128.0 + 5.0 * r.powi(3) / 1024.0 - 21.0 * r.powi(4) / 32768.0;
        0.5 * a.ln() + series.ln_1p()
    }
}

/// `ln(1 - e^l)` for `l <= 0`.
pub(crate) fn ln_one_minus_exp(l: f64) -> f64 {
    if l > -LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain("n", n as f64, "n >= 2"));
    }
    Ok(())
}

fn check_cosine(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::domain("s", s, "[-1, 1]"));
    }
    Ok(())
}

/// `ln kappa_n`.
pub fn ln_kappa(n: usize) -> Result<f64> {
    check_dimension(n)?;
    Ok(ln_gamma_half_ratio((n as f64 - 1.0) / 2.0) - LN_SQRT_PI)
}

/// Normalizing constant `kappa_n = Gamma(n/2) / (sqrt(pi) Gamma((n-1)/2))`.
pub fn kappa(n: usize) -> Result<f64> {
    ln_kappa(n).map(f64::exp)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `ln I_x(a, 1/2)` where `xc = 1 - x` is supplied separately so that
/// neither tail loses precision. `ln_beta` is `ln B(a, 1/2)`.
fn ln_ibeta_half(a: f64, x: f64, xc: f64, ln_beta: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if xc <= 0.0 {
        return 0.0;
    }
    if x < (a + 1.0) / (a + 2.5) {
        a * x.ln() + 0.5 * xc.ln() - ln_beta - a.ln() + beta_continued_fraction(a, 0.5, x).ln()
    } else {
        // I_x(a, b) = 1 - I_{1-x}(b, a)
        let ln_comp = 0.5 * xc.ln() + a * x.ln() - ln_beta - 0.5f64.ln() + beta_continued_fraction(0.5, a, xc).ln();
        ln_one_minus_exp(ln_comp.min(0.0))
    }
}

/// `ln Q_n(s)`; finite far into the upper tail where `Q_n` itself underflows.
pub fn ln_q_n(n: usize, s: f64) -> Result<f64> {
    check_dimension(n)?;
    check_cosine(s)?;
    Ok(ln_q_n_unchecked(n, s))
}

fn ln_q_n_unchecked(n: usize, s: f64) -> f64 {
    if n == 2 {
        return (s.acos() * FRAC_1_PI).ln();
    }
    if s < 0.0 {
        return ln_one_minus_exp(ln_q_n_unchecked(n, -s));
    }
    if s >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let a = (n as f64 - 1.0) / 2.0;
    let ln_beta = LN_SQRT_PI - ln_gamma_half_ratio(a);
    let x = (1.0 - s) * (1.0 + s);
    -LN_2 + ln_ibeta_half(a, x, s * s, ln_beta)
}

/// Complementary CDF `Q_n(s) = P(<x, V>/|x| >= s)`.
pub fn q_n(n: usize, s: f64) -> Result<f64> {
    check_dimension(n)?;
    check_cosine(s)?;
    if n == 2 {
        return Ok(s.acos() * FRAC_1_PI);
    }
    if s < 0.0 {
        return Ok(1.0 - ln_q_n_unchecked(n, -s).exp());
    }
    Ok(ln_q_n_unchecked(n, s).exp())
}

/// Solves `ln Q_n(s) = ln_q` for `s` in `[0, 1]`, assuming `ln_q <= ln(1/2)`.
fn solve_upper_half(n: usize, ln_q: f64) -> f64 {
    if ln_q == f64::NEG_INFINITY {
        return 1.0;
    }
    if n == 2 {
        return (PI * ln_q.exp()).cos();
    }
    let nf = n as f64;
    let ln_k = ln_gamma_half_ratio((nf - 1.0) / 2.0) - LN_SQRT_PI;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // Start from the lower envelope kappa_n/(n-1) (1-s^2)^((n-1)/2).
    let guess = 1.0 - (2.0 * (ln_q - ln_k + (nf - 1.0).ln()) / (nf - 1.0)).exp();
    let mut s = if guess > 0.0 && guess < 1.0 { guess.sqrt() } else { 0.5 };
    for _ in 0..300 {
        let lq = ln_q_n_unchecked(n, s);
        let g = lq - ln_q;
        if g.abs() <= 1e-14 {
            return s;
        }
        if g > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 1e-17 {
            break;
        }
        let one_minus_s2 = (1.0 - s) * (1.0 + s);
        let slope = -(ln_k + 0.5 * (nf - 3.0) * one_minus_s2.ln() - lq).exp();
        let step = s - g / slope;
        s = if step.is_finite() && step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    s
}

/// Inverse of `ln Q_n`: returns `s` with `ln Q_n(s) = ln_q`, `ln_q <= 0`.
pub fn q_n_inverse_ln(n: usize, ln_q: f64) -> Result<f64> {
    check_dimension(n)?;
    if ln_q.is_nan() || ln_q > 0.0 {
        return Err(Error::domain("ln_q", ln_q, "(-inf, 0]"));
    }
    if ln_q > -LN_2 {
        return Ok(-solve_upper_half(n, ln_one_minus_exp(ln_q)));
    }
    Ok(solve_upper_half(n, ln_q))
}

/// Inverse of `Q_n`: returns `s` with `Q_n(s) = q`; `q = 0` gives 1 and `q = 1` gives -1.
pub fn q_n_inverse(n: usize, q: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("q", q, "[0, 1]"));
    }
    if q == 0.0 {
        return Ok(1.0);
    }
    if q == 1.0 {
        return Ok(-1.0);
    }
    if q > 0.5 {
        return Ok(-solve_upper_half(n, (-q).ln_1p()));
    }
    Ok(solve_upper_half(n, q.ln()))
}

/// `ln floor(2^(nR))`, exact while the codebook size fits in an `f64` mantissa.
pub fn ln_codebook_size(n: usize, rate: f64) -> f64 {
    let bits = n as f64 * rate;
    if bits < 52.0 {
        bits.exp2().floor().ln()
    } else {
        bits * LN_2
    }
}

/// Law of the maximal cosine similarity `S` among `M` i.i.d. uniform
/// directions in dimension `n`: `P(S <= s) = (1 - Q_n(s))^M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereCapLaw {
    n: usize,
    ln_m: f64,
}

impl SphereCapLaw {
    pub fn new(n: usize, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("m", 0.0, "m >= 1"));
        }
        Self::with_ln_size(n, (m as f64).ln())
    }

    /// Law for a codebook with `ln M = ln_m`.
    pub fn with_ln_size(n: usize, ln_m: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(ln_m >= 0.0) || !ln_m.is_finite() {
            return Err(Error::domain("ln_m", ln_m, "[0, inf)"));
        }
        Ok(Self { n, ln_m })
    }

    /// Law for a bitrate-`rate` code, `M = floor(2^(n * rate))`.
    pub fn for_rate(n: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::domain("rate", rate, "(0, inf)"));
        }
        Self::with_ln_size(n, ln_codebook_size(n, rate))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ln_m(&self) -> f64 {
        self.ln_m
    }

    /// Codebook size as a float; infinite once `M` exceeds `f64::MAX`.
    pub fn m(&self) -> f64 {
        self.ln_m.exp()
    }

    /// `P(S <= s) = (1 - Q_n(s))^M`.
    pub fn cdf(&self, s: f64) -> Result<f64> {
        check_cosine(s)?;
        let lq = ln_q_n_unchecked(self.n, s);
        if lq == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        if lq == 0.0 {
            return Ok(0.0);
        }
        // ln(-ln(1 - q)), with -ln(1 - q) = q (1 + q/2 + ...) for small q
        let q = lq.exp();
        let ln_neg_log = if q > 1e-8 {
            (-(-q).ln_1p()).ln()
        } else {
            lq + (0.5 * q).ln_1p()
        };
        Ok((-(self.ln_m + ln_neg_log).exp()).exp())
    }

    /// Draws `S` by inversion from a uniform `u` in (0, 1).
    pub fn sample(&self, u: f64) -> Result<f64> {
        sample_max_cosine(self, u)
    }
}

/// Maps a uniform `u` to `S = Q_n^{-1}(1 - u^(1/M))`.
///
/// The target `1 - u^(1/M) = -expm1(ln(u)/M)` is formed in log space so that
/// codebooks with `ln M` in the thousands stay representable.
pub fn sample_max_cosine(law: &SphereCapLaw, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain("u", u, "(0, 1)"));
    }
    // t = ln(-ln(u) / M)
    let t = (-u.ln()).ln() - law.ln_m;
    let ln_target = if t < -40.0 { t } else { (-(-t.exp()).exp_m1()).ln() };
    q_n_inverse_ln(law.n, ln_target.min(0.0))
}

fn check_unit_interval(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::domain("s", s, "[0, 1]"));
    }
    Ok(())
}

/// Upper bound on `P(S <= s)`: `exp(-(M kappa_n / (n-1)) (1 - s^2)^((n-1)/2))`.
pub fn tail_bound_lower(law: &SphereCapLaw, s: f64) -> Result<f64> {
    check_unit_interval(s)?;
    let nf = law.n as f64;
    let ln_arg = law.ln_m + ln_kappa(law.n)? - (nf - 1.0).ln() + 0.5 * (nf - 1.0) * ((1.0 - s) * (1.0 + s)).ln();
    Ok((-ln_arg.exp()).exp())
}

/// Upper bound on `P(S >= s)`: `min(1, M kappa_n (1 - s^2)^((n-1)/2))`, for `n >= 3`.
pub fn tail_bound_upper(law: &SphereCapLaw, s: f64) -> Result<f64> {
    check_unit_interval(s)?;
    if law.n < 3 {
        return Err(Error::domain("n", law.n as f64, "n >= 3"));
    }
    let nf = law.n as f64;
    let ln_arg = law.ln_m + ln_kappa(law.n)? + 0.5 * (nf - 1.0) * ((1.0 - s) * (1.0 + s)).ln();
    Ok(ln_arg.exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::Rng;

    /// kappa_{n+2} = kappa_n * n / (n - 1), from Gamma(z + 1) = z Gamma(z).
    fn kappa_by_recurrence(n: usize) -> f64 {
        let (mut k, mut m) = if n.is_multiple_of(2) {
            (FRAC_1_PI, 2usize)
        } else {
            (0.5, 3usize)
        };
        while m < n {
            k *= m as f64 / (m as f64 - 1.0);
            m += 2;
        }
        k
    }

    /// Adaptive Simpson on the defining integral of Q_n.
    fn q_n_by_quadrature(n: usize, s: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn simpson(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let e = (n as f64 - 3.0) / 2.0;
        let f = move |t: f64| (1.0 - t * t).max(0.0).powf(e);
        let (fa, fm, fb) = (f(s), f(0.5 * (s + 1.0)), f(1.0));
        let whole = (1.0 - s) / 6.0 * (fa + 4.0 * fm + fb);
        kappa_by_recurrence(n) * simpson(&f, s, 1.0, fa, fm, fb, whole, 1e-15, 50)
    }

    #[test]
    fn kappa_small_dimensions() {
        assert!((kappa(2).unwrap() - FRAC_1_PI).abs() < 1e-14);
        assert!((kappa(3).unwrap() - 0.5).abs() < 1e-14);
        assert!(kappa(1).is_err());
    }

    #[test]
    fn kappa_matches_recurrence() {
        let oracle = kappa_by_recurrence(100);
        // mpmath: 3.9594145850267609618
        assert!((oracle - 3.959_414_585_026_761).abs() < 1e-13);
        let k = kappa(100).unwrap();
        assert!(((k - oracle) / oracle).abs() < 1e-12, "{k} vs {oracle}");
        for n in [4usize, 17, 399, 800, 801, 802, 2000, 5001] {
            let o = kappa_by_recurrence(n);
            let k = kappa(n).unwrap();
            assert!(((k - o) / o).abs() < 1e-11, "n={n}: {k} vs {o}");
        }
    }

    #[test]
    fn closed_forms_on_grid() {
        for i in 0..1000 {
            let s = -1.0 + 2.0 * i as f64 / 999.0;
            let q2 = q_n(2, s).unwrap();
            assert!((q2 - s.acos() / PI).abs() <= 1e-12);
            let q3 = q_n(3, s).unwrap();
            assert!((q3 - (1.0 - s) / 2.0).abs() <= 1e-12, "s={s}: {q3}");
        }
        assert_eq!(q_n(2, 0.0).unwrap(), 0.5);
        for g in [-1.0, 0.0, 0.5, 1.0] {
            assert!((q_n(3, g).unwrap() - (1.0 - g) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn q_n_matches_quadrature() {
        let oracle = q_n_by_quadrature(20, 0.6);
        // mpmath: 0.0020179576908134819597
        assert!((oracle - 0.002_017_957_690_813_482).abs() < 1e-12);
        assert!((q_n(20, 0.6).unwrap() - oracle).abs() < 1e-10);
        for n in [4usize, 7, 50, 200] {
            for s in [-0.7, -0.2, 0.0, 0.05, 0.3, 0.8, 0.97] {
                let q = q_n(n, s).unwrap();
                let o = q_n_by_quadrature(n, s);
                assert!((q - o).abs() < 1e-10, "n={n} s={s}: {q} vs {o}");
            }
        }
    }

    #[test]
    fn q_n_rejects_out_of_range() {
        assert!(q_n(5, 1.01).is_err());
        assert!(q_n(5, f64::NAN).is_err());
        assert!(q_n_inverse(5, -0.1).is_err());
        assert!(q_n_inverse(5, 1.1).is_err());
    }

    #[test]
    fn appendix_envelope() {
        for n in [3usize, 10, 100] {
            let k = kappa(n).unwrap();
            let nf = n as f64;
            for i in 0..=90 {
                let s = 0.05 + 0.01 * i as f64;
                let base = k / (nf - 1.0) * (1.0 - s * s).powf((nf - 1.0) / 2.0);
                let q = q_n(n, s).unwrap();
                assert!(base <= q * (1.0 + 1e-12), "n={n} s={s}");
                assert!(q <= base / s * (1.0 + 1e-12), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn ln_q_n_deep_tail_is_finite() {
        // kappa_n (1-s^2)^((n-1)/2)/(n-1) sits below Q_n and is astronomically small here.
        let n = 4096;
        let s = 0.9;
        let lq = ln_q_n(n, s).unwrap();
        let nf = n as f64;
        let lower = ln_kappa(n).unwrap() - (nf - 1.0).ln() + 0.5 * (nf - 1.0) * (1.0 - s * s).ln();
        assert!(lq.is_finite());
        assert!(lq >= lower - 1e-9 && lq <= lower - s.ln() + 1e-9);
    }

    #[test]
    fn inverse_examples() {
        assert!((q_n_inverse(3, 0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!(q_n_inverse(2, 0.5).unwrap().abs() < 1e-12);
        assert_eq!(q_n_inverse(7, 0.0).unwrap(), 1.0);
        assert_eq!(q_n_inverse(7, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn inverse_round_trip() {
        for n in [2usize, 3, 5, 10, 50, 128] {
            for i in 1..200 {
                let s0 = -1.0 + 2.0 * i as f64 / 200.0;
                let q = q_n(n, s0).unwrap();
                if q == 0.0 || q == 1.0 {
                    continue;
                }
                let s = q_n_inverse(n, q).unwrap();
                // q itself carries a rounding error of about eps, which maps
                // to eps / |Q'(s0)| in s once q is close to 1.
                let density = (ln_kappa(n).unwrap() + 0.5 * (n as f64 - 3.0) * (1.0 - s0 * s0).ln()).exp();
                let tol = 1e-9 + 4.0 * f64::EPSILON / density;
                assert!((s - s0).abs() < tol, "n={n} s0={s0} s={s}");
            }
        }
        for n in [512usize, 4096] {
            for s0 in [0.2, 0.5, 0.8, 0.95] {
                let s = q_n_inverse_ln(n, ln_q_n(n, s0).unwrap()).unwrap();
                assert!((s - s0).abs() < 1e-9, "n={n} s0={s0} s={s}");
            }
        }
    }

    #[test]
    fn single_codeword_median_is_zero() {
        let law = SphereCapLaw::new(3, 1).unwrap();
        assert!(sample_max_cosine(&law, 0.5).unwrap().abs() < 1e-12);
        assert!(sample_max_cosine(&law, 0.0).is_err());
    }

    #[test]
    fn single_codeword_n2_matches_direct_simulation() {
        let law = SphereCapLaw::new(2, 1).unwrap();
        let mut rng = crate::rng::seeded(99);
        let count = 100_000;
        let mut via_law: Vec<f64> = (0..count)
            .map(|_| law.sample(rng.random_range(f64::EPSILON..1.0)).unwrap())
            .collect();
        // direct: cosine between a fixed x and one uniform codeword
        let mut direct: Vec<f64> = (0..count)
            .map(|_| {
                let c = crate::sphere_code::uniform_direction(2, &mut rng);
                c[0]
            })
            .collect();
        let d = stats::ks_two_sample(&mut via_law, &mut direct);
        let p = stats::ks_two_sample_pvalue(d, count, count);
        assert!(p > 0.01, "D={d} p={p}");
        // and S = cos(pi u') in law
        let mut cos_pi: Vec<f64> = (0..count).map(|_| (PI * rng.random::<f64>()).cos()).collect();
        let d = stats::ks_two_sample(&mut direct, &mut cos_pi);
        assert!(stats::ks_two_sample_pvalue(d, count, count) > 0.01);
    }

    #[test]
    fn large_codebook_mean_near_sakrison_angle() {
        let law = SphereCapLaw::for_rate(200, 1.0).unwrap();
        let mut rng = crate::rng::seeded(5);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| law.sample(rng.random_range(f64::EPSILON..1.0)).unwrap())
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.75f64.sqrt()).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn sampler_is_deterministic_in_u() {
        let law = SphereCapLaw::for_rate(64, 1.5).unwrap();
        let a: Vec<f64> = (1..50).map(|i| law.sample(i as f64 / 50.0).unwrap()).collect();
        let b: Vec<f64> = (1..50).map(|i| law.sample(i as f64 / 50.0).unwrap()).collect();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cdf_endpoints_and_monotone() {
        for law in [
            SphereCapLaw::new(5, 3).unwrap(),
            SphereCapLaw::for_rate(50, 1.0).unwrap(),
            SphereCapLaw::for_rate(2048, 1.0).unwrap(),
        ] {
            assert_eq!(law.cdf(-1.0).unwrap(), 0.0);
            assert_eq!(law.cdf(1.0).unwrap(), 1.0);
            let mut prev = 0.0;
            for i in 0..=400 {
                let c = law.cdf(-1.0 + i as f64 / 200.0).unwrap();
                assert!(c >= prev - 1e-15);
                prev = c;
            }
        }
    }

    #[test]
    fn empirical_cdf_within_dkw_band() {
        let law = SphereCapLaw::for_rate(40, 1.0).unwrap();
        let mut rng = crate::rng::seeded(21);
        let count = 100_000;
        let mut draws: Vec<f64> = (0..count)
            .map(|_| law.sample(rng.random_range(f64::EPSILON..1.0)).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        let band = ((2.0f64 / 0.001).ln() / (2.0 * count as f64)).sqrt();
        for (i, &s) in draws.iter().enumerate().step_by(97) {
            let f = law.cdf(s).unwrap();
            let hi = (i + 1) as f64 / count as f64;
            let lo = i as f64 / count as f64;
            assert!(f <= hi + band && f >= lo - band, "s={s} F={f} band {band}");
        }
    }

    #[test]
    fn tail_bound_examples() {
        let law = SphereCapLaw::new(3, 4).unwrap();
        assert_eq!(tail_bound_lower(&law, 1.0).unwrap(), 1.0);
        assert!((tail_bound_lower(&law, 0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(tail_bound_upper(&law, 1.0).unwrap(), 0.0);
        assert!((tail_bound_upper(&law, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let law = SphereCapLaw::new(3, 1).unwrap();
        assert!((tail_bound_upper(&law, 0.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(tail_bound_upper(&SphereCapLaw::new(2, 4).unwrap(), 0.3).is_err());
        assert!(tail_bound_lower(&law, -0.1).is_err());
    }

    #[test]
    fn tail_bounds_dominate_monte_carlo() {
        let law = SphereCapLaw::for_rate(50, 1.0).unwrap();
        let mut rng = crate::rng::seeded(77);
        let count = 100_000;
        let draws: Vec<f64> = (0..count)
            .map(|_| law.sample(rng.random_range(f64::EPSILON..1.0)).unwrap())
            .collect();
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            let below = draws.iter().filter(|&&v| v <= s).count() as f64 / count as f64;
            let above = draws.iter().filter(|&&v| v >= s).count() as f64 / count as f64;
            let slack = |p: f64| 4.0 * (p * (1.0 - p) / count as f64).sqrt() + 1e-12;
            let lo = tail_bound_lower(&law, s).unwrap();
            let hi = tail_bound_upper(&law, s).unwrap();
            assert!(below <= lo + slack(lo), "s={s}");
            assert!(above <= hi + slack(hi), "s={s}");
        }
    }
}
