//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use sphercomp::estimators::{posterior_mean_derivative, posterior_mean_scalar, ScalarPrior};
use sphercomp::harness::{run, run_with_threads, ExperimentConfig, ExperimentKind, ExperimentOutput, PriorSpec};
use sphercomp::rng::{seeded, trial_stream};
use sphercomp::specfun::{kappa, q_n};
use sphercomp::sphere_code::{draw_codebook, uniform_direction, SphericalCodeConfig};
use sphercomp::stats::{ks_critical_1pct, ks_one_sample};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn verdicts_pass(out: &ExperimentOutput, branch: &str, metric: &str) -> (bool, usize) {
    let rows: Vec<_> = out.find(branch, metric).collect();
    let ok = !rows.is_empty() && rows.iter().all(|r| r.verdict.is_some_and(|v| v.passed()));
    (ok, rows.len())
}

fn ac1() -> Outcome {
    let mut worst2 = 0.0f64;
    let mut worst3 = 0.0f64;
    for i in 0..1000 {
        let s = -1.0 + 2.0 * i as f64 / 999.0;
        worst2 = worst2.max((q_n(2, s).unwrap() - s.acos() / std::f64::consts::PI).abs());
        worst3 = worst3.max((q_n(3, s).unwrap() - (1.0 - s) / 2.0).abs());
    }
    let mut envelope = true;
    for n in [3usize, 10, 100] {
        let k = kappa(n).unwrap();
        for i in 0..=90 {
            let s = 0.05 + 0.9 * i as f64 / 90.0;
            let base = k / (n as f64 - 1.0) * (1.0 - s * s).powf((n as f64 - 1.0) / 2.0);
            let q = q_n(n, s).unwrap();
            envelope &= base * (1.0 - 1e-12) <= q && q <= base / s * (1.0 + 1e-12);
        }
    }
    outcome(
        worst2 <= 1e-12 && worst3 <= 1e-12 && envelope,
        format!(
            "max err n=2 {worst2:.1e}, n=3 {worst3:.1e}, envelope {}",
            if envelope { "holds" } else { "violated" }
        ),
    )
}

fn ac2() -> Outcome {
    let code = SphericalCodeConfig::matched(8, 1.0, 1.0).unwrap();
    let law = code.cap_law();
    let x = uniform_direction(8, &mut seeded(1));
    let mut sims: Vec<f64> = (0..2000u64)
        .map(|t| {
            let mut rng = trial_stream(2, 0, t);
            let book = draw_codebook(&code, rng.random()).unwrap();
            let (i, _) = book.encode(&x, &mut rng).unwrap();
            book.codeword(i).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    let d = ks_one_sample(&mut sims, |s| law.cdf(s).unwrap());
    let crit = ks_critical_1pct(2000);
    let m = code.codebook_size().unwrap();
    outcome(d < crit, format!("M = {m}, KS D = {d:.4} vs 1% critical {crit:.4}"))
}

fn ac3() -> Outcome {
    let cfg = ExperimentConfig::defaults(ExperimentKind::CouplingTails);
    let out = run(&cfg).unwrap();
    let ratio = out.find("matched", "q99_ratio").next().unwrap();
    let (slopes_ok, k) = verdicts_pass(&out, "matched", "log_tail_slope");
    let slopes: Vec<String> = out
        .find("matched", "log_tail_slope")
        .map(|r| format!("{:.2}", r.mean))
        .collect();
    outcome(
        ratio.verdict.unwrap().passed() && slopes_ok && k == 3,
        format!(
            "q99 ratio {:.3} (< 1.5), tail slopes [{}]",
            ratio.mean,
            slopes.join(", ")
        ),
    )
}

fn ac4() -> Outcome {
    let out = run(&ExperimentConfig::defaults(ExperimentKind::GaussianLocation)).unwrap();
    let s = out.find("spherical", "mse").next().unwrap();
    let a = out.find("awgn", "mse").next().unwrap();
    outcome(
        s.verdict.unwrap().passed() && a.verdict.unwrap().passed(),
        format!(
            "spherical {:.5} +- {:.5}, awgn {:.5} +- {:.5}, reference {:.5}",
            s.mean,
            s.stderr.unwrap(),
            a.mean,
            a.stderr.unwrap(),
            a.analytic_ref.unwrap()
        ),
    )
}

fn ac5() -> Outcome {
    let out = run(&ExperimentConfig::defaults(ExperimentKind::SparseThreshold)).unwrap();
    let s = out.find("spherical", "mse").next().unwrap();
    let a = out.find("awgn", "mse").next().unwrap();
    let g = out.find("both", "relative_gap").next().unwrap();
    outcome(
        s.verdict.unwrap().passed() && a.verdict.unwrap().passed() && g.verdict.unwrap().passed(),
        format!(
            "spherical {:.5}, awgn {:.5}, bound {:.5}, relative gap {:.4}",
            s.mean,
            a.mean,
            s.analytic_ref.unwrap() * 1.05,
            g.mean
        ),
    )
}

fn worst_relative(out: &ExperimentOutput, branch: &str) -> f64 {
    out.find(branch, "mse")
        .map(|r| (r.mean - r.analytic_ref.unwrap()).abs() / r.analytic_ref.unwrap())
        .fold(0.0, f64::max)
}

fn ac6() -> Outcome {
    let out = run(&ExperimentConfig::defaults(ExperimentKind::Amp)).unwrap();
    let (s_ok, ks) = verdicts_pass(&out, "spherical", "mse");
    let (a_ok, ka) = verdicts_pass(&out, "awgn", "mse");
    outcome(
        s_ok && a_ok && ks == 10 && ka == 10,
        format!(
            "worst relative deviation from state evolution: spherical {:.4} (7%), awgn {:.4} (5%)",
            worst_relative(&out, "spherical"),
            worst_relative(&out, "awgn")
        ),
    )
}

fn ac7() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::IndirectCoding);
    cfg.eps_grid.clear();
    let out = run(&cfg).unwrap();
    let lin = out
        .find("spherical-linear", "mse")
        .find(|r| r.point.rate == Some(1.0))
        .unwrap();
    let a = (lin.mean - 0.4375).abs() <= 0.02 * 0.4375;
    let (b, kb) = verdicts_pass(&out, "spherical-bayes", "mse");
    let (c, kc) = verdicts_pass(&out, "curve", "ordering");
    let bayes: Vec<String> = out
        .find("spherical-bayes", "mse")
        .map(|r| format!("{:.2}SE", (r.mean - r.analytic_ref.unwrap()).abs() / r.stderr.unwrap()))
        .collect();
    outcome(
        a && b && c && kb == 4 && kc == 4,
        format!(
            "(a) linear {:.5} vs 0.4375; (b) Bayes deviations [{}]; (c) ordering {}",
            lin.mean,
            bayes.join(", "),
            if c { "holds" } else { "violated" }
        ),
    )
}

fn ac8() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::RdCurves);
    cfg.prior = PriorSpec::Gaussian;
    cfg.rates = (1..=8).map(|i| 0.25 * i as f64).collect();
    cfg.eps_grid.clear();
    let out = run(&cfg).unwrap();
    let (ok, k) = verdicts_pass(&out, "curve", "gaussian_agreement");
    let worst = out
        .find("curve", "gaussian_agreement")
        .map(|r| r.mean)
        .fold(0.0, f64::max);
    outcome(
        ok && k == 8,
        format!("largest relative spread {worst:.2e} over R in [0.25, 2]"),
    )
}

fn ac9() -> Outcome {
    let mut rng = seeded(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let atoms = rng.random_range(2..=5);
        let values: Vec<f64> = (0..atoms).map(|_| rng.random_range(-2.0..2.0)).collect();
        let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let prior = ScalarPrior::atoms(values, raw.iter().map(|w| w / total).collect()).unwrap();
        let sigma = rng.random_range(0.3..3.0);
        let z = rng.random_range(-4.0..4.0);
        let f = |v: f64| posterior_mean_scalar(&prior, sigma, v).unwrap();
        let central = |h: f64| (f(z + h) - f(z - h)) / (2.0 * h);
        let h = 1e-3;
        let fd = (4.0 * central(h / 2.0) - central(h)) / 3.0;
        worst = worst.max((posterior_mean_derivative(&prior, sigma, z).unwrap() - fd).abs());
    }
    outcome(
        worst <= 1e-6,
        format!("max |analytic - finite difference| = {worst:.2e} over 100 triples"),
    )
}

fn determinism_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(kind);
    match kind {
        ExperimentKind::GaussianLocation => {}
        ExperimentKind::SparseThreshold => c.ns = vec![2000],
        ExperimentKind::Amp => {
            c.ns = vec![200];
            c.trials = 4;
        }
        ExperimentKind::IndirectCoding => {
            c.ns = vec![512];
            c.rates = vec![0.5, 1.0];
            c.eps_grid = vec![0.5];
            c.trials = 10;
        }
        ExperimentKind::CouplingTails => c.trials = 1000,
        ExperimentKind::WassersteinBound => c.trials = 200,
        ExperimentKind::RdCurves => {
            c.prior = PriorSpec::Gaussian;
            c.rates = vec![0.5, 1.0];
            c.eps_grid = vec![0.5];
        }
    }
    c
}

fn ac10() -> Outcome {
    let mut differing = Vec::new();
    for kind in ExperimentKind::ALL {
        let cfg = determinism_config(kind);
        let bytes = |threads| {
            let out = run_with_threads(&cfg, Some(threads)).unwrap();
            let (mut t, mut s) = (Vec::new(), Vec::new());
            out.write_trials(&mut t).unwrap();
            out.write_summary(&mut s).unwrap();
            (t, s)
        };
        if bytes(1) != bytes(2) {
            differing.push(kind.name());
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            "all 7 experiments byte-identical on re-run".to_string()
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

/// `(id, name, time budget in seconds, check)`.
type Criterion = (&'static str, &'static str, Option<u64>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1", "special functions", Some(1), ac1),
        ("AC2", "code-law equivalence", Some(30), ac2),
        ("AC3", "coupling tails", Some(120), ac3),
        ("AC4", "gaussian location", Some(120), ac4),
        ("AC5", "sparse thresholding", Some(120), ac5),
        ("AC6", "AMP state evolution", Some(300), ac6),
        ("AC7", "indirect coding", Some(360), ac7),
        ("AC8", "gaussian equivalence", Some(120), ac8),
        ("AC9", "jacobian identity", Some(5), ac9),
        ("AC10", "determinism", None, ac10),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= Duration::from_secs(b));
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        let limit = budget.map(|b| format!(" / {b} s")).unwrap_or_default();
        println!(
            "{id} {} {name}: {} [{:.2} s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
