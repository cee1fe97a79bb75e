//! End-to-end acceptance run: one line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rough_mild::config::RunConfig;
use rough_mild::fbm_noise::{fbm_covariance, fbm_sample, noise_field, NoiseSpec, QRule};
use rough_mild::heat_app::{
    check_conditions, solve_linear_heat_with_driver, solve_nonlinear_heat_with_driver, NonlinearRun,
    RegularityBudget, ScalarNonlinearity,
};
use rough_mild::holder_paths::{holder_exponent_estimate, holder_seminorm, SampledPath};
use rough_mild::mild_convolution::{
    chasles_residual, convolve, flow_identity_residual, level_study, rate_slope, separable_driver,
    smooth_oracle, DyadicConvolutionConfig, SampledDriver,
};
use rough_mild::nonlinear_solver::{ito_map_probe, IdentityOperator, InitialGuess};
use rough_mild::scale_space::{
    frac_power_apply, norm_alpha, semigroup_apply, ScaleIndex, SpectralElement,
};
use rough_mild::stats::{mean, mean_product_with_se, ols};
use rough_mild::young::{accumulate, operator_holder_seminorm, scalar_rate_study, sewing_constant, OperatorPath};

const NONLINEAR_PRESET: &str = include_str!("../presets/nonlinear.cfg");
const LINEAR_PRESET: &str = include_str!("../presets/linear.cfg");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn rel_diff(a: &SpectralElement, b: &SpectralElement, delta: f64) -> f64 {
    norm_alpha(ScaleIndex(delta), &(a - b)) / norm_alpha(ScaleIndex(delta), b)
}

fn dyadic_rate() -> Outcome {
    let start = Instant::now();
    let cfg = DyadicConvolutionConfig::with_beta(0.1, 0.9, 0.2, 0.45, 0.3, 14, 1e-12).unwrap();
    let x = separable_driver(
        SpectralElement::new(vec![1.0, 0.0, 1.0]).unwrap(),
        ScaleIndex(-0.1),
        |t: f64| t.powf(0.9),
    );
    let rows = level_study(&x, 1.0, 1.0, &cfg, 0..=13).unwrap();
    let incs: Vec<f64> = rows.iter().map(|r| r.increment_norm).collect();
    let slope = rate_slope(&incs, 5, 14).unwrap();
    let elapsed = start.elapsed();
    outcome(
        slope <= -0.15 && within(elapsed, 10.0),
        format!("slope {slope:.3} over levels 5..13 (need ≤ -0.15), {elapsed:.2?}"),
    )
}

fn smooth_oracle_agreement() -> Outcome {
    let start = Instant::now();
    let cfg = DyadicConvolutionConfig::new(0.1, 0.9, 0.2, 0.3, 14, 2e-4).unwrap();
    let e1 = SpectralElement::basis(2, 1);
    let e2 = SpectralElement::basis(2, 2);
    let linear = convolve(&separable_driver(e1.clone(), ScaleIndex(-0.1), |t| t), 1.0, &cfg).unwrap();
    let linear_err = rel_diff(&linear.value, &smooth_oracle(|_| e1.clone(), 1.0, 16), 0.2);
    let quad = convolve(&separable_driver(e2.clone(), ScaleIndex(-0.1), |t| t * t), 1.0, &cfg).unwrap();
    let quad_err = rel_diff(&quad.value, &smooth_oracle(|s| e2.scaled(2.0 * s), 1.0, 16), 0.2);
    let elapsed = start.elapsed();
    outcome(
        linear_err <= 1e-4 && quad_err <= 1e-4 && within(elapsed, 5.0),
        format!("relative errors t·e1 {linear_err:.2e}, t²·e2 {quad_err:.2e} (need ≤ 1e-4), {elapsed:.2?}"),
    )
}

fn young_bound() -> Outcome {
    let (alpha, gamma) = (0.9, 0.7);
    let w = fbm_sample(0.8, 1 << 10, 1.0, 2024).unwrap();
    let x = SampledPath::uniform(
        1.0,
        w.iter().map(|&v| SpectralElement::new(vec![v]).unwrap()).collect(),
        ScaleIndex(0.0),
    )
    .unwrap();
    let h = OperatorPath::scalar(x.times(), 1, alpha, f64::sin);
    let f = accumulate(&h, &x).unwrap();
    let hx = holder_seminorm(&x, gamma, x.scale()).unwrap().seminorm;
    let hh = operator_holder_seminorm(&h, alpha, x.scale(), x.scale()).unwrap();
    let k = sewing_constant(alpha + gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..200 {
        let i = rng.random_range(0..x.len() - 1);
        let j = rng.random_range(i + 1..x.len());
        let (s, t) = (x.times()[i], x.times()[j]);
        let integral = f.values()[j].coeffs()[0] - f.values()[i].coeffs()[0];
        let germ = s.sin() * (w[j] - w[i]);
        let defect = (integral - germ).abs();
        let bound = k * hx * hh * (t - s).powf(alpha + gamma);
        worst = worst.max(defect / bound);
        if defect > bound {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations in 200 pairs, largest defect/bound {worst:.3}"),
    )
}

fn young_rate() -> Outcome {
    let rows = scalar_rate_study(6..=12).unwrap();
    let xs: Vec<f64> = rows.iter().map(|r| r.level as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.increment_norm.log2()).collect();
    let slope = ols(&xs, &ys).unwrap().slope;
    outcome(slope <= -0.8, format!("log-log slope {slope:.3} over m = 2^6..2^12 (need ≤ -0.8)"))
}

fn algebraic_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();

    let linear = separable_driver(SpectralElement::basis(4, 1), ScaleIndex(-0.1), |u| u);
    let noise = NoiseSpec {
        hurst: 0.75,
        q_rule: QRule::Power(0.2),
        mu: 0.1,
        n_modes: 8,
        time_steps: 1 << 10,
        horizon: 1.0,
        seed: 17,
    };
    let field = noise_field(&noise, ScaleIndex(-0.15)).unwrap();
    let sampled = SampledDriver::new(&field).unwrap();
    let mut chasles = 0.0f64;
    for _ in 0..20 {
        let n = 6;
        let cells = 1u32 << n;
        let mut ks = [0, 0, 0].map(|_| rng.random_range(0..=cells));
        ks.sort_unstable();
        let [a, b, c] = ks.map(|k| k as f64 / cells as f64);
        chasles = chasles.max(chasles_residual(&linear, a, b, c, 1.0, n, 0.2).unwrap());
        chasles = chasles.max(chasles_residual(&sampled, a, b, c, 1.0, n, 0.2).unwrap());
    }
    if chasles > 1e-12 {
        failures.push("chasles");
    }

    let tight = DyadicConvolutionConfig::new(0.1, 0.9, 0.2, 0.3, 30, 1e-8).unwrap();
    let flow_linear = flow_identity_residual(&linear, 0.5, 0.25, &tight).unwrap().max();
    if flow_linear > 10.0 * tight.tol {
        failures.push("flow (linear)");
    }
    let rough = DyadicConvolutionConfig::new(0.15, 0.7, 0.2, 0.3, 14, 1e-6).unwrap();
    let flow_fbm = flow_identity_residual(&sampled, 0.5, 0.5, &rough).unwrap().max();
    if flow_fbm > 10.0 * rough.tol {
        failures.push("flow (fBm)");
    }

    let (mut semigroup, mut power) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let x = SpectralElement::new((0..16).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let (s, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let lhs = semigroup_apply(s, &semigroup_apply(t, &x).unwrap()).unwrap();
        let rhs = semigroup_apply(s + t, &x).unwrap();
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            // subnormal coefficients carry no relative precision
            if b.abs() >= f64::MIN_POSITIVE {
                semigroup = semigroup.max((a - b).abs() / b.abs());
            }
        }
        let (p, q) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let lhs = frac_power_apply(ScaleIndex(p), &frac_power_apply(ScaleIndex(q), &x).unwrap()).unwrap();
        let rhs = frac_power_apply(ScaleIndex(p + q), &x).unwrap();
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            if *b != 0.0 {
                power = power.max((a - b).abs() / b.abs());
            }
        }
    }
    if semigroup > 1e-13 {
        failures.push("semigroup law");
    }
    if power > 1e-12 {
        failures.push("power composition");
    }
    outcome(
        failures.is_empty(),
        format!(
            "chasles {chasles:.1e}, flow linear {flow_linear:.1e}, flow fBm {flow_fbm:.1e}, semigroup {semigroup:.1e}, power {power:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

fn fbm_statistics() -> Outcome {
    let start = Instant::now();
    let samples = 10_000;
    let steps = 64;
    let (i25, i50, i75, i100) = (16, 32, 48, 64);
    let mut worst = 0.0f64;
    for (h_index, &h) in [0.5, 0.7, 0.9].iter().enumerate() {
        let paths: Vec<Vec<f64>> = (0..samples)
            .map(|j| fbm_sample(h, steps, 1.0, 1_000_000 * (h_index as u64 + 1) + j as u64).unwrap())
            .collect();
        let col = |k: usize| paths.iter().map(|p| p[k]).collect::<Vec<f64>>();
        let (var, se) = mean_product_with_se(&col(i100), &col(i100));
        worst = worst.max((var - 1.0).abs() / se);
        let (cov, se) = mean_product_with_se(&col(i25), &col(i75));
        worst = worst.max((cov - fbm_covariance(h, 0.25, 0.75)).abs() / se);
        if h == 0.5 {
            let a: Vec<f64> = paths.iter().map(|p| p[i50] - p[i25]).collect();
            let b: Vec<f64> = paths.iter().map(|p| p[i100] - p[i75]).collect();
            let (c, se) = mean_product_with_se(&a, &b);
            worst = worst.max(c.abs() / se);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 3.0 && within(elapsed, 60.0),
        format!("largest |z| {worst:.2} over variance, covariance and increment checks (need ≤ 3), {elapsed:.2?}"),
    )
}

fn holder_recovery() -> Outcome {
    let estimates: Vec<f64> = (0..10)
        .map(|seed| {
            let w = fbm_sample(0.75, 1 << 12, 1.0, 500 + seed).unwrap();
            let path = SampledPath::uniform(
                1.0,
                w.into_iter().map(|v| SpectralElement::new(vec![v]).unwrap()).collect(),
                ScaleIndex(0.0),
            )
            .unwrap();
            holder_exponent_estimate(&path, ScaleIndex(0.0)).unwrap().exponent.unwrap()
        })
        .collect();
    let m = mean(&estimates);
    outcome((0.65..=0.80).contains(&m), format!("mean exponent {m:.3} over 10 seeds (need 0.65..0.80)"))
}

fn picard_contraction() -> Outcome {
    let cfg = RunConfig::parse(NONLINEAR_PRESET, None).unwrap();
    let x = noise_field(&cfg.noise, ScaleIndex(-cfg.budget.alpha)).unwrap();
    let mut solver = cfg.solver_config();
    let run = NonlinearRun {
        sigma: ScalarNonlinearity::sin(),
        initial: cfg.initial_state().unwrap(),
        grid_intervals: cfg.grid_intervals(),
        horizon: 1.0,
        solver,
    };
    let a = solve_nonlinear_heat_with_driver(&x, &cfg.budget, &run).unwrap();
    solver.initial_guess = InitialGuess::Constant;
    let b = solve_nonlinear_heat_with_driver(&x, &cfg.budget, &NonlinearRun { solver, ..run }).unwrap();
    let factor = a.windows.iter().map(|w| w.contraction).fold(0.0, f64::max);
    let gap = a.solution.difference(&b.solution).unwrap().sup_norm(ScaleIndex(cfg.budget.delta));
    // odd σ maps the antisymmetric sine modes to nothing, so a zero factor is the exact answer
    let note = if factor == 0.0 { " (odd σ: B(u) vanishes in the sine basis)" } else { "" };
    outcome(
        !a.windows.is_empty() && factor < 1.0 && gap <= 10.0 * solver.tol && !a.exploded,
        format!(
            "{} windows, largest contraction factor {factor:.3}{note}, initial-guess gap {gap:.1e} (need ≤ {:.0e})",
            a.windows.len(),
            10.0 * solver.tol
        ),
    )
}

fn linear_consistency() -> Outcome {
    let cfg = RunConfig::parse(NONLINEAR_PRESET, None).unwrap();
    let x = noise_field(&cfg.noise, ScaleIndex(-cfg.budget.alpha)).unwrap();
    let solver = cfg.solver_config();
    let run = NonlinearRun {
        sigma: ScalarNonlinearity::constant(1.0),
        initial: SpectralElement::zeros(cfg.noise.n_modes),
        grid_intervals: cfg.grid_intervals(),
        horizon: 1.0,
        solver,
    };
    let nonlinear = solve_nonlinear_heat_with_driver(&x, &cfg.budget, &run).unwrap();
    let linear = solve_linear_heat_with_driver(&x, &cfg.budget).unwrap();
    let gap = nonlinear
        .solution
        .difference(&linear.solution)
        .unwrap()
        .sup_norm(ScaleIndex(cfg.budget.delta));
    outcome(
        gap <= 10.0 * solver.tol,
        format!("sup over grid times of ‖Y_σ≡1 - Y_linear‖_δ = {gap:.1e} (need ≤ {:.0e})", 10.0 * solver.tol),
    )
}

fn ito_stability() -> Outcome {
    let cfg = RunConfig::parse(LINEAR_PRESET, None).unwrap();
    let scale = ScaleIndex(-cfg.budget.alpha);
    let x = noise_field(&cfg.noise, scale).unwrap();
    let z = noise_field(&NoiseSpec { seed: cfg.noise.seed + 1, ..cfg.noise.clone() }, scale).unwrap();
    let solver = cfg.solver_config();
    let y0 = SpectralElement::zeros(cfg.noise.n_modes);
    let b = IdentityOperator { n_modes: cfg.noise.n_modes };
    let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&eta| {
            let perturbed = x.linear_combination(1.0, &z, eta).unwrap();
            ito_map_probe(&x, &perturbed, &y0, &b, 1.0, &solver).unwrap().ratio
        })
        .collect();
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    outcome(
        lo > 0.0 && hi / lo <= 3.0,
        format!("ratios {:.4e} {:.4e} {:.4e}, spread {:.4}", ratios[0], ratios[1], ratios[2], hi / lo),
    )
}

fn admissibility() -> Outcome {
    let budget = |hurst, mu, delta, kappa| RegularityBudget {
        hurst,
        mu,
        gamma: 0.72,
        alpha: 0.15,
        delta,
        kappa,
        rho: -0.15,
        p: 6.0,
        p_hat: 1.1,
    };
    let reference_point = check_conditions(&budget(0.75, 0.1, 0.2, 0.3)).nonlinear_admissible();
    let brownian = (1..100)
        .map(|k| k as f64 / 100.0)
        .all(|kappa| !check_conditions(&budget(0.5, 0.1, 0.2, kappa)).nonlinear_admissible());
    let boundary = !check_conditions(&budget(0.75, 1.5, 0.2, 0.3)).linear_admissible();
    outcome(
        reference_point && brownian && boundary,
        format!("H=0.75 admissible: {reference_point}; H=0.5 inadmissible for all κ: {brownian}; μ=2H linear inadmissible: {boundary}"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_rough-mild");
    let presets = concat!(env!("CARGO_MANIFEST_DIR"), "/presets");
    let run_once = |dir: &std::path::Path| -> Vec<(String, Vec<u8>)> {
        let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
        let nonlinear = format!("{presets}/nonlinear.cfg");
        let linear = format!("{presets}/linear.cfg");
        let driver = p("noise.csv");
        let commands: Vec<Vec<String>> = vec![
            vec!["noise-gen", "--hurst", "0.75", "--mu", "0.1", "--modes", "8", "--steps", "512", "--horizon", "1", "--seed", "42", "--q-rule", "pow:0.2", "--out", &driver]
                .into_iter().map(String::from).collect(),
            vec!["convolve", "--driver", &driver, "--alpha", "0.15", "--gamma", "0.7", "--delta", "0.2", "--kappa", "0.3", "--max-level", "14", "--tol", "1e-6", "--out", &p("sol.csv"), "--rates", &p("rates.csv")]
                .into_iter().map(String::from).collect(),
            vec!["solve-linear", "--spec", &linear, "--out", &p("linear.csv")].into_iter().map(String::from).collect(),
            vec!["solve-nonlinear", "--spec", &nonlinear, "--sigma", "poly:1,0,0.5", "--horizon", "1", "--out", &p("nonlinear.csv"), "--meta", &p("run_meta.txt")]
                .into_iter().map(String::from).collect(),
            vec!["rate-study", "--which", "dyadic", "--levels", "4..12", "--out", &p("dyadic.csv")].into_iter().map(String::from).collect(),
            vec!["rate-study", "--which", "young", "--levels", "4..12", "--out", &p("young.csv")].into_iter().map(String::from).collect(),
            vec!["check", "--spec", &nonlinear].into_iter().map(String::from).collect(),
        ];
        let mut outputs = Vec::new();
        for args in commands {
            let out = Command::new(bin).args(&args).env_remove("ROUGH_MILD_SEED").output().unwrap();
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
            outputs.push((format!("{} stdout", args[0]), out.stdout));
        }
        for name in ["noise.csv", "sol.csv", "rates.csv", "linear.csv", "nonlinear.csv", "run_meta.txt", "dyadic.csv", "young.csv"] {
            outputs.push((name.to_string(), std::fs::read(dir.join(name)).unwrap()));
        }
        outputs
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = (run_once(a.path()), run_once(b.path()));
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        differing.is_empty(),
        format!("{} outputs compared across two runs, differing: {differing:?}", first.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("dyadic convergence rate", dyadic_rate),
        ("smooth oracle agreement", smooth_oracle_agreement),
        ("Young local bound", young_bound),
        ("Young convergence rate", young_rate),
        ("algebraic identities", algebraic_identities),
        ("fBm statistics", fbm_statistics),
        ("Hölder exponent recovery", holder_recovery),
        ("Picard contraction", picard_contraction),
        ("linear/nonlinear consistency", linear_consistency),
        ("Itô-map stability", ito_stability),
        ("admissibility predicates", admissibility),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let mark = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {mark} {name}: {}", i + 1, result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
