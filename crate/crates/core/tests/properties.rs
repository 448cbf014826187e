use proptest::prelude::*;
use sphercomp::estimators::{
    beta0, posterior_mean_derivative, posterior_mean_scalar, scalar_mmse, soft_threshold, Denoiser, ScalarPrior,
};
use sphercomp::ratedist::{gaussian_idrf, mmse_equivalent_curve, JointScalarSource};
use sphercomp::rng::{seeded, trial_stream};
use sphercomp::specfun::{q_n, q_n_inverse, SphereCapLaw};
use sphercomp::sphere_code::{coupling_bound, effective_noise_variance, sample_coupled, SphericalCodeConfig};

fn three_atom(a: f64, b: f64, w: f64) -> ScalarPrior {
    ScalarPrior::atoms(vec![-a, 0.0, b], vec![w, 1.0 - 2.0 * w, w]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cap_tail_is_a_decreasing_probability(n in 2usize..400, s in -0.999f64..0.999, ds in 1e-4f64..0.5) {
        let a = q_n(n, s).unwrap();
        let b = q_n(n, (s + ds).min(1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a);
    }

    #[test]
    fn cap_tail_inverse(n in 2usize..200, s in -0.9f64..0.9) {
        let q = q_n(n, s).unwrap();
        prop_assume!(q > 1e-200 && q < 1.0 - 1e-6);
        let back = q_n_inverse(n, q).unwrap();
        prop_assert!((q_n(n, back).unwrap() - q).abs() <= 1e-9 * q.max(1e-3));
    }

    #[test]
    fn cap_law_cdf_is_monotone(n in 2usize..300, m in 1u64..100_000, s in -0.99f64..0.98) {
        let law = SphereCapLaw::new(n, m).unwrap();
        let lo = law.cdf(s).unwrap();
        let hi = law.cdf(s + 0.01).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi);
    }

    #[test]
    fn soft_threshold_is_one_lipschitz(a in -50f64..50.0, b in -50f64..50.0, lambda in 0f64..10.0) {
        let ulps = 4.0 * f64::EPSILON * (a.abs() + b.abs() + lambda);
        prop_assert!((soft_threshold(a, lambda) - soft_threshold(b, lambda)).abs() <= (a - b).abs() + ulps);
    }

    #[test]
    fn bayes_slope_certificate(a in 0.1f64..3.0, b in 0.1f64..3.0, w in 0.01f64..0.49,
                               sigma in 0.2f64..3.0, z in -6f64..6.0) {
        let prior = three_atom(a, b, w);
        let slope = posterior_mean_derivative(&prior, sigma, z).unwrap();
        let r = prior.support_radius();
        prop_assert!(slope >= 0.0 && slope <= r * r / (sigma * sigma) * (1.0 + 1e-12));
        let lip = Denoiser::Bayes(prior.clone()).lipschitz(sigma);
        prop_assert!(slope <= lip * (1.0 + 1e-12));
    }

    #[test]
    fn posterior_mean_is_inside_the_hull(a in 0.1f64..3.0, b in 0.1f64..3.0, w in 0.01f64..0.49,
                                         sigma in 0.05f64..3.0, z in -20f64..20.0) {
        let prior = three_atom(a, b, w);
        let m = posterior_mean_scalar(&prior, sigma, z).unwrap();
        prop_assert!(m >= -a - 1e-12 && m <= b + 1e-12);
    }

    #[test]
    fn mmse_is_at_most_prior_variance(a in 0.1f64..3.0, w in 0.01f64..0.49, sigma in 0.01f64..10.0) {
        let prior = three_atom(a, a, w);
        let m = scalar_mmse(&prior, sigma).unwrap();
        prop_assert!(m >= -1e-12 && m <= prior.variance() + 1e-12);
    }

    #[test]
    fn coupling_obeys_the_deterministic_bound(n in 2usize..300, rate in 0.1f64..3.0,
                                              scale in 0.2f64..5.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let x: Vec<f64> = (0..n).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let r = x.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let gamma = r * scale;
        let code = SphericalCodeConfig::matched(n, rate, gamma).unwrap();
        let pair = sample_coupled(&code, &x, &mut rng).unwrap();
        let bound = (r - gamma).abs() + coupling_bound(&code, pair.delta1, pair.delta2);
        prop_assert!(pair.distance() <= bound * (1.0 + 1e-9) + 1e-12);
        prop_assert!((effective_noise_variance(gamma, n, rate).unwrap() - code.noise_variance()).abs()
            <= 1e-12 * code.noise_variance());
    }

    #[test]
    fn coupled_output_has_the_code_magnitude(n in 2usize..200, rate in 0.1f64..4.0, seed in any::<u64>()) {
        let mut rng = trial_stream(seed, 1, 2);
        let x = vec![1.0; n];
        let code = SphericalCodeConfig::matched(n, rate, (n as f64).sqrt()).unwrap();
        let pair = sample_coupled(&code, &x, &mut rng).unwrap();
        let norm = pair.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - code.magnitude).abs() <= 1e-9 * code.magnitude);
    }

    #[test]
    fn streams_are_reproducible(root in any::<u64>(), point in any::<u64>(), trial in any::<u64>()) {
        use rand::Rng;
        let a: u64 = trial_stream(root, point, trial).random();
        let b: u64 = trial_stream(root, point, trial).random();
        prop_assert_eq!(a, b);
        let other: u64 = trial_stream(root, point, trial.wrapping_add(1)).random();
        prop_assert_ne!(a, other);
    }

    #[test]
    fn beta0_is_bounded_by_one(nu in 0f64..=1.0) {
        let b = beta0(nu).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mmse_equivalent_curve_is_nonincreasing_and_above_the_floor(eps in 0.05f64..1.5, kappa in 0.3f64..2.0) {
        let prior = ScalarPrior::atoms(vec![-kappa, kappa], vec![0.5, 0.5]).unwrap();
        let source = JointScalarSource::awgn(prior.clone(), eps).unwrap();
        let rates: Vec<f64> = (1..=10).map(|i| 0.25 * i as f64).collect();
        let curve = mmse_equivalent_curve(&source, &rates).unwrap();
        prop_assert!(curve.is_nonincreasing(1e-12));
        let floor = scalar_mmse(&prior, eps).unwrap();
        for (r, m) in &curve.points {
            prop_assert!(*m >= floor - 1e-12);
            prop_assert!(*m <= gaussian_idrf(&source, *r).unwrap() + 1e-9);
        }
    }
}
