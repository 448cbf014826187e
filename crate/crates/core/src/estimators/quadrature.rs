//! Gauss-Hermite rules for expectations over a standard Gaussian.

use std::sync::OnceLock;

/// Nodes and weights with `sum_k w_k f(x_k) ~ E[f(W)]`, `W ~ N(0, 1)`.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(count: usize) -> Self {
        let (x, w) = hermite_physicists(count);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        Self {
            nodes: x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
            weights: w.iter().map(|v| v / sqrt_pi).collect(),
        }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub const DEFAULT_NODES: usize = 201;
pub const CHECK_NODES: usize = 151;

pub fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES))
}

pub fn check_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(CHECK_NODES))
}

/// Orthonormal Hermite recurrence at `z`: returns `(p_n(z), sqrt(2n) p_{n-1}(z))`,
/// the second being `p_n'(z)`.
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Nodes and weights for weight function `exp(-x^2)`. Roots of the Hermite
/// polynomial are bracketed by sign changes on a fine grid and polished by
/// safeguarded Newton steps.
fn hermite_physicists(n: usize) -> (Vec<f64>, Vec<f64>) {
    let top = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let steps = 200 * n.max(10);
    let h = top / steps as f64;
    let mut roots = Vec::with_capacity(n);
    if n % 2 == 1 {
        roots.push(0.0);
    }
    let mut lo = if n % 2 == 1 { 0.5 * h } else { 0.0 };
    let mut f_lo = hermite_eval(n, lo).0;
    while lo < top && roots.len() < n.div_ceil(2) {
        let hi = lo + h;
        let f_hi = hermite_eval(n, hi).0;
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            let (mut a, mut b) = (lo, hi);
            let mut z = 0.5 * (a + b);
            for _ in 0..100 {
                let (p, dp) = hermite_eval(n, z);
                if p == 0.0 {
                    break;
                }
                if p.signum() == f_lo.signum() {
                    a = z;
                } else {
                    b = z;
                }
                let step = z - p / dp;
                let next = if step > a && step < b { step } else { 0.5 * (a + b) };
                let done = (next - z).abs() <= 1e-15 * z.abs().max(1.0);
                z = next;
                if done {
                    break;
                }
            }
            roots.push(z);
        }
        lo = hi;
        f_lo = f_hi;
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n / 2;
    for (k, &r) in roots.iter().enumerate() {
        let dp = hermite_eval(n, r).1;
        let wt = 2.0 / (dp * dp);
        if n % 2 == 1 && k == 0 {
            x[half] = 0.0;
            w[half] = wt;
            continue;
        }
        let idx = if n % 2 == 1 { k - 1 } else { k };
        // positive roots ascending; store descending from the front
        x[half - 1 - idx] = r;
        w[half - 1 - idx] = wt;
        x[n - half + idx] = -r;
        w[n - half + idx] = wt;
    }
    (x, w)
}
