use proptest::prelude::*;

use rough_mild::fbm_noise::fbm_sample;
use rough_mild::heat_app::{check_conditions, RegularityBudget};
use rough_mild::holder_paths::{holder_seminorm, SampledPath};
use rough_mild::mild_convolution::{chasles_residual, dyadic_level, grid_convolution, separable_driver, Driver};
use rough_mild::scale_space::*;
use rough_mild::young::{accumulate, OperatorPath};

fn element(max_modes: usize) -> impl Strategy<Value = SpectralElement> {
    prop::collection::vec(-1.0f64..1.0, 1..=max_modes).prop_map(|c| SpectralElement::new(c).unwrap())
}

fn path(modes: usize, steps: usize) -> impl Strategy<Value = SampledPath> {
    prop::collection::vec(-1.0f64..1.0, modes * (steps + 1)).prop_map(move |v| {
        let values = v.chunks(modes).map(|c| SpectralElement::new(c.to_vec()).unwrap()).collect();
        SampledPath::uniform(1.0, values, ScaleIndex(0.0)).unwrap()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_law(x in element(16), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let lhs = semigroup_apply(s, &semigroup_apply(t, &x).unwrap()).unwrap();
        let rhs = semigroup_apply(s + t, &x).unwrap();
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            if b.abs() >= f64::MIN_POSITIVE {
                prop_assert!(rel(*a, *b) <= 1e-13);
            }
        }
    }

    #[test]
    fn power_composition(x in element(16), a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let lhs = frac_power_apply(ScaleIndex(a), &frac_power_apply(ScaleIndex(b), &x).unwrap()).unwrap();
        let rhs = frac_power_apply(ScaleIndex(a + b), &x).unwrap();
        for (p, q) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!(rel(*p, *q) <= 1e-12);
        }
        let n = norm_alpha(ScaleIndex(a), &frac_power_apply(ScaleIndex(-a), &x).unwrap());
        prop_assert!(rel(n, norm_alpha(ScaleIndex(0.0), &x)) <= 1e-12);
    }

    #[test]
    fn smoothing_envelope_bounds_the_norm(alpha in 0.0f64..2.0, log_t in -4.0f64..0.0) {
        let t = 10f64.powf(log_t);
        let bound = smoothing_envelope(alpha) * t.powf(-alpha);
        prop_assert!(smoothing_norm(alpha, t, 256).unwrap() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn continuity_at_the_origin(x in element(12), alpha in 0.05f64..1.0, log_t in -4.0f64..0.0) {
        let t = 10f64.powf(log_t);
        let moved = &semigroup_apply(t, &x).unwrap() - &x;
        let denom = t.powf(alpha) * norm_alpha(ScaleIndex(alpha), &x);
        prop_assume!(denom > 0.0);
        prop_assert!(norm_alpha(ScaleIndex(0.0), &moved) / denom <= 1.0 + 1e-12);
    }

    #[test]
    fn grid_round_trip(x in element(16), extra in 0usize..40) {
        let m = 2 * x.n_modes() + 2 + extra;
        let grid = SineGrid::new(m, x.n_modes()).unwrap();
        let back = grid.project(&grid.evaluate(&x).unwrap()).unwrap();
        let scale = 1.0 + norm_alpha(ScaleIndex(0.0), &x);
        prop_assert!(norm_alpha(ScaleIndex(0.0), &(&back - &x)) <= 1e-12 * scale);
    }

    #[test]
    fn increments_add_up(p in path(3, 16), i in 0usize..17, j in 0usize..17, k in 0usize..17) {
        let mut idx = [i, j, k];
        idx.sort_unstable();
        let [i, j, k] = idx;
        let whole = p.increment(i, k).unwrap();
        let parts = &p.increment(i, j).unwrap() + &p.increment(j, k).unwrap();
        for (a, b) in whole.coeffs().iter().zip(parts.coeffs()) {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * (1.0 + a.abs()));
        }
    }

    #[test]
    fn seminorm_properties(p in path(2, 32), c in -5.0f64..5.0, g1 in 0.1f64..0.5, g2 in 0.5f64..0.95) {
        let h = holder_seminorm(&p, g1, ScaleIndex(0.0)).unwrap().seminorm;
        let scaled = holder_seminorm(&p.scaled(c), g1, ScaleIndex(0.0)).unwrap().seminorm;
        prop_assert!(rel(scaled, c.abs() * h) <= 1e-12);
        let sub = holder_seminorm(&p.subsample(4).unwrap(), g1, ScaleIndex(0.0)).unwrap().seminorm;
        prop_assert!(sub <= h);
        let rougher = holder_seminorm(&p, g2, ScaleIndex(0.0)).unwrap().seminorm;
        prop_assert!(rougher >= h);
    }

    #[test]
    fn young_sums_are_bilinear(x1 in path(1, 32), x2 in path(1, 32), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let times = x1.times().to_vec();
        let h1 = OperatorPath::scalar(&times, 1, 0.9, f64::sin);
        let h2 = OperatorPath::scalar(&times, 1, 0.9, |s| s * s);
        let last = |h: &OperatorPath, x: &SampledPath| accumulate(h, x).unwrap().values().last().unwrap().coeffs()[0];
        let combo = h1.linear_combination(a, &h2, b).unwrap();
        let lhs = last(&combo, &x1);
        let rhs = a * last(&h1, &x1) + b * last(&h2, &x1);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        let xc = x1.linear_combination(a, &x2, b).unwrap();
        let lhs = last(&h1, &xc);
        let rhs = a * last(&h1, &x1) + b * last(&h1, &x2);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn young_sums_split_at_grid_points(x in path(1, 32), j in 0usize..33, k in 0usize..33) {
        prop_assume!(j < k);
        let h = OperatorPath::scalar(x.times(), 1, 0.9, f64::cos);
        let f = accumulate(&h, &x).unwrap();
        let piece = x.window(j, k).unwrap();
        let hp = OperatorPath::scalar(&x.times()[j..=k], 1, 0.9, f64::cos);
        let hp = OperatorPath::new(piece.times().to_vec(), hp.operators.clone(), 0.9, piece.scale(), piece.scale()).unwrap();
        let sub = accumulate(&hp, &piece).unwrap().values().last().unwrap().coeffs()[0];
        let diff = f.values()[k].coeffs()[0] - f.values()[j].coeffs()[0];
        prop_assert!((diff - sub).abs() <= 1e-13 * (1.0 + sub.abs() + f.values()[j].coeffs()[0].abs()));
    }

    #[test]
    fn convolution_is_linear(x1 in path(4, 64), x2 in path(4, 64), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let combo = grid_convolution(&x1.linear_combination(a, &x2, b).unwrap(), ScaleIndex(0.2)).unwrap();
        let c1 = grid_convolution(&x1, ScaleIndex(0.2)).unwrap();
        let c2 = grid_convolution(&x2, ScaleIndex(0.2)).unwrap();
        let expected = c1.linear_combination(a, &c2, b).unwrap();
        let scale = 1.0 + expected.sup_norm(ScaleIndex(0.2));
        prop_assert!(combo.difference(&expected).unwrap().sup_norm(ScaleIndex(0.2)) <= 1e-10 * scale);
    }

    #[test]
    fn dyadic_levels_are_linear(p in -1.0f64..1.0, q in -1.0f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0, n in 0u32..12) {
        let e = SpectralElement::new(vec![1.0, p, q]).unwrap();
        let x1 = separable_driver(e.clone(), ScaleIndex(-0.1), |t| t);
        let x2 = separable_driver(e.clone(), ScaleIndex(-0.1), |t| t * t);
        let xc = separable_driver(e.clone(), ScaleIndex(-0.1), move |t| a * t + b * t * t);
        let level = |x: &dyn Driver| dyadic_level(x, 0.0, 1.0, 1.0, n).unwrap();
        let mut expected = level(&x1).scaled(a);
        expected.axpy(b, &level(&x2));
        let err = norm_alpha(ScaleIndex(0.2), &(&level(&xc) - &expected));
        prop_assert!(err <= 1e-10 * (1.0 + norm_alpha(ScaleIndex(0.2), &expected)));
    }

    #[test]
    fn chasles_on_dyadic_triples(c in -2.0f64..2.0, i in 0u32..=64, j in 0u32..=64, k in 0u32..=64) {
        let mut idx = [i, j, k];
        idx.sort_unstable();
        let [a, b, d] = idx.map(|v| v as f64 / 64.0);
        let x = separable_driver(SpectralElement::new(vec![1.0, c]).unwrap(), ScaleIndex(-0.1), |u| u * u + u);
        prop_assert!(chasles_residual(&x, a, b, d, 1.0, 6, 0.2).unwrap() <= 1e-12);
    }

    #[test]
    fn admissibility_is_pure(h in 0.05f64..0.95, mu in 0.0f64..1.0, delta in 0.01f64..0.99, kappa in 0.01f64..0.99) {
        let budget = RegularityBudget { hurst: h, mu, gamma: 0.7, alpha: 0.15, delta, kappa, rho: -0.15, p: 6.0, p_hat: 1.1 };
        let r = check_conditions(&budget);
        prop_assert_eq!(&r, &check_conditions(&budget));
        let expected = h > 0.5 && mu > 0.0 && 2.0 * kappa < 2.0 * h - mu - delta && h + kappa > 1.0;
        prop_assert_eq!(r.nonlinear_admissible(), expected);
        let linear = mu < 2.0 * h && delta < 2.0 * h - mu && 2.0 * kappa < 2.0 * h - mu - delta;
        prop_assert_eq!(r.linear_admissible(), linear);
    }

    #[test]
    fn csv_round_trip_is_exact(p in path(3, 8)) {
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = SampledPath::read_csv(buf.as_slice(), ScaleIndex(0.0)).unwrap();
        prop_assert_eq!(back.times(), p.times());
        prop_assert_eq!(back.values(), p.values());
    }

    #[test]
    fn fbm_is_deterministic(seed in any::<u64>(), h in 0.1f64..0.95) {
        prop_assert_eq!(fbm_sample(h, 64, 1.0, seed).unwrap(), fbm_sample(h, 64, 1.0, seed).unwrap());
    }
}
