//! The stochastic heat equation on `[0, 1]` driven by fractional noise:
//! admissibility arithmetic, the pointwise and rank-one coefficients, and the
//! linear and nonlinear solves.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fbm_noise::{noise_field, NoiseSpec};
use crate::holder_paths::{self, SampledPath};
use crate::mild_convolution::grid_convolution;
use crate::nonlinear_solver::{picard_solve, RoughOperator, SolveReport, SolverConfig};
use crate::scale_space::{eigenvalue, sup_norm_embedding, ScaleIndex, SineGrid, SpectralElement};
use crate::young::{LinearMap, Multiplication, ScaledIdentity};

/// Exponents of a heat-equation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityBudget {
    pub hurst: f64,
    pub mu: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub kappa: f64,
    pub rho: f64,
    pub p: f64,
    pub p_hat: f64,
}

impl RegularityBudget {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::new(self.gamma, self.alpha, self.delta, self.kappa, self.rho)
    }
}

/// One named inequality and whether it holds.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub statement: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// Existence conditions for the nonlinear equation.
    pub nonlinear: Vec<Condition>,
    /// Existence conditions for the additive equation.
    pub linear: Vec<Condition>,
    /// Conditions on the auxiliary exponents a concrete run uses.
    pub run: Vec<Condition>,
}

impl ConditionReport {
    pub fn nonlinear_admissible(&self) -> bool {
        self.nonlinear.iter().all(|c| c.holds)
    }

    pub fn linear_admissible(&self) -> bool {
        self.linear.iter().all(|c| c.holds)
    }

    pub fn run_admissible(&self) -> bool {
        self.run.iter().all(|c| c.holds)
    }

    /// The Sobolev-index condition `p̂ < 1/(1-α)` and `p > 1/δ`.
    pub fn sobolev_indices_ok(&self) -> bool {
        self.run
            .iter()
            .filter(|c| c.name == "p_hat" || c.name == "p")
            .all(|c| c.holds)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (group, list) in [("nonlinear", &self.nonlinear), ("linear", &self.linear), ("run", &self.run)] {
            for c in list.iter() {
                let mark = if c.holds { "ok  " } else { "FAIL" };
                writeln!(f, "{mark} {group}.{}: {}", c.name, c.statement)?;
            }
        }
        writeln!(f, "linear admissible: {}", self.linear_admissible())?;
        writeln!(f, "nonlinear admissible: {}", self.nonlinear_admissible())?;
        write!(f, "run admissible: {}", self.run_admissible())
    }
}

fn cond(name: &'static str, statement: String, holds: bool) -> Condition {
    Condition { name, statement, holds }
}

/// Evaluates every admissibility inequality; pure arithmetic on the budget.
pub fn check_conditions(b: &RegularityBudget) -> ConditionReport {
    let RegularityBudget {
        hurst: h,
        mu,
        gamma,
        alpha,
        delta,
        kappa,
        rho,
        p,
        p_hat,
    } = *b;
    let room = 2.0 * h - mu - delta;
    let nonlinear = vec![
        cond("hurst", format!("H = {h} > 1/2"), h > 0.5),
        cond("mu", format!("μ = {mu} > 0"), mu > 0.0),
        cond(
            "unit_interval",
            format!("δ = {delta}, κ = {kappa} in (0, 1)"),
            delta > 0.0 && delta < 1.0 && kappa > 0.0 && kappa < 1.0,
        ),
        cond("kappa_room", format!("2κ = {} < 2H - μ - δ = {room}", 2.0 * kappa), 2.0 * kappa < room),
        cond("young", format!("H + κ = {} > 1", h + kappa), h + kappa > 1.0),
    ];
    let linear = vec![
        cond("mu", format!("μ = {mu} < 2H = {}", 2.0 * h), mu < 2.0 * h),
        cond(
            "delta",
            format!("0 < δ = {delta} < 2H - μ = {}", 2.0 * h - mu),
            delta > 0.0 && delta < 2.0 * h - mu,
        ),
        cond(
            "kappa_room",
            format!("0 < 2κ = {} < 2H - μ - δ = {room}", 2.0 * kappa),
            kappa > 0.0 && 2.0 * kappa < room,
        ),
    ];
    let kappa_cap = (gamma + rho - delta).min(1.0);
    let run = vec![
        cond("gamma", format!("γ = {gamma} < H = {h}"), gamma < h),
        cond("alpha", format!("μ = {mu} < α = {alpha} < 1"), mu < alpha && alpha < 1.0),
        cond("alpha_gamma", format!("α = {alpha} < γ = {gamma}"), alpha < gamma),
        cond("young", format!("γ + κ = {} > 1", gamma + kappa), gamma + kappa > 1.0),
        cond("kappa_cap", format!("κ = {kappa} < min(γ + ρ - δ, 1) = {kappa_cap}"), kappa < kappa_cap),
        cond(
            "p_hat",
            format!("p̂ = {p_hat} < 1/(1 - α) = {}", 1.0 / (1.0 - alpha)),
            p_hat < 1.0 / (1.0 - alpha),
        ),
        cond("p", format!("p = {p} > 1/δ = {}", 1.0 / delta), p > 1.0 / delta),
    ];
    ConditionReport { nonlinear, linear, run }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A bounded `C²` function `σ` with its first two derivatives and sup bounds.
#[derive(Clone)]
pub struct ScalarNonlinearity {
    pub name: String,
    pub sigma: ScalarFn,
    pub sigma_prime: ScalarFn,
    pub sigma_second: ScalarFn,
    /// `(‖σ‖∞, ‖σ'‖∞, ‖σ''‖∞)`.
    pub sup_bounds: (f64, f64, f64),
}

impl fmt::Debug for ScalarNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarNonlinearity")
            .field("name", &self.name)
            .field("sup_bounds", &self.sup_bounds)
            .finish()
    }
}

/// Default range `|v| ≤ V` on which polynomial coefficients are bounded.
pub const POLY_DEFAULT_RANGE: f64 = 10.0;

impl ScalarNonlinearity {
    pub fn sin() -> Self {
        ScalarNonlinearity {
            name: "sin".into(),
            sigma: Arc::new(f64::sin),
            sigma_prime: Arc::new(f64::cos),
            sigma_second: Arc::new(|v: f64| -v.sin()),
            sup_bounds: (1.0, 1.0, 1.0),
        }
    }

    pub fn tanh() -> Self {
        ScalarNonlinearity {
            name: "tanh".into(),
            sigma: Arc::new(f64::tanh),
            sigma_prime: Arc::new(|v: f64| 1.0 - v.tanh().powi(2)),
            sigma_second: Arc::new(|v: f64| {
                let t = v.tanh();
                -2.0 * t * (1.0 - t * t)
            }),
            // max of 2t(1-t²) at t = 1/√3
            sup_bounds: (1.0, 1.0, 4.0 / (3.0 * 3f64.sqrt())),
        }
    }

    /// `c₀ + c₁v + c₂v²`, with bounds taken over `|v| ≤ range`.
    pub fn poly(c0: f64, c1: f64, c2: f64, range: f64) -> Self {
        ScalarNonlinearity {
            name: format!("poly:{c0},{c1},{c2}"),
            sigma: Arc::new(move |v| c0 + c1 * v + c2 * v * v),
            sigma_prime: Arc::new(move |v| c1 + 2.0 * c2 * v),
            sigma_second: Arc::new(move |_| 2.0 * c2),
            sup_bounds: (
                c0.abs() + c1.abs() * range + c2.abs() * range * range,
                c1.abs() + 2.0 * c2.abs() * range,
                2.0 * c2.abs(),
            ),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::poly(c, 0.0, 0.0, POLY_DEFAULT_RANGE)
    }

    /// `sin`, `tanh` or `poly:c0,c1,c2`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "sin" => Ok(Self::sin()),
            "tanh" => Ok(Self::tanh()),
            other => {
                let coeffs = other
                    .strip_prefix("poly:")
                    .ok_or_else(|| Error::Parse(format!("unknown nonlinearity `{other}`")))?;
                let c = coeffs
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if c.len() != 3 || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Parse(format!("poly needs three finite coefficients, got `{coeffs}`")));
                }
                Ok(Self::poly(c[0], c[1], c[2], POLY_DEFAULT_RANGE))
            }
        }
    }

    /// Largest gap between `σ'` and a central difference of `σ` with step `h`
    /// (and likewise for `σ''`) at random points in `[-range, range]`.
    pub fn derivative_consistency(&self, h: f64, range: f64, trials: usize, rng: &mut impl Rng) -> f64 {
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let v = rng.random_range(-range..range);
            let d1 = ((self.sigma)(v + h) - (self.sigma)(v - h)) / (2.0 * h);
            let d2 = ((self.sigma_prime)(v + h) - (self.sigma_prime)(v - h)) / (2.0 * h);
            worst = worst
                .max((d1 - (self.sigma_prime)(v)).abs())
                .max((d2 - (self.sigma_second)(v)).abs());
        }
        worst
    }
}

/// `(λ_N/λ_1)^α`: norm of `ℬ_{-α} → L² → ℬ_{-α}` around a multiplication on `N` modes.
fn truncation_factor(alpha: f64, n_modes: usize) -> f64 {
    (eigenvalue(n_modes) / eigenvalue(1)).powf(alpha)
}

/// `B(u)φ = P[σ(u)·φ]` with `u`, `φ` evaluated on a uniform sine grid.
#[derive(Clone, Debug)]
pub struct NemytskiiOperator {
    sigma: ScalarNonlinearity,
    grid: Arc<SineGrid>,
    delta: f64,
    alpha: f64,
}

impl NemytskiiOperator {
    /// `grid_intervals` is `M` in `x_j = j/M`; it must be at least `2N + 2`.
    pub fn new(sigma: ScalarNonlinearity, grid_intervals: usize, n_modes: usize, delta: f64, alpha: f64) -> Result<Self> {
        Ok(NemytskiiOperator {
            sigma,
            grid: Arc::new(SineGrid::new(grid_intervals, n_modes)?),
            delta,
            alpha,
        })
    }

    pub fn grid(&self) -> &SineGrid {
        &self.grid
    }

    fn on_grid(&self, u: &SpectralElement) -> Vec<f64> {
        self.grid.evaluate(u).expect("state matches operator modes")
    }
}

impl RoughOperator for NemytskiiOperator {
    fn n_modes(&self) -> usize {
        self.grid.n_modes()
    }

    fn apply(&self, u: &SpectralElement) -> Arc<dyn LinearMap> {
        let weights = self.on_grid(u).into_iter().map(|v| (self.sigma.sigma)(v)).collect();
        Arc::new(Multiplication::new(self.grid.clone(), weights).expect("weights sized to grid"))
    }

    fn derivative(&self, u: &SpectralElement, z: &SpectralElement, x: &SpectralElement) -> SpectralElement {
        let (uv, zv, xv) = (self.on_grid(u), self.on_grid(z), self.on_grid(x));
        let prod: Vec<f64> = uv
            .iter()
            .zip(&zv)
            .zip(&xv)
            .map(|((u, z), x)| (self.sigma.sigma_prime)(*u) * z * x)
            .collect();
        self.grid.project(&prod).expect("grid size fixed")
    }

    /// `‖σ'‖∞ E_δ (λ_N/λ_1)^α` with `E_δ` the truncated sup-norm embedding constant.
    fn bound_b(&self, _r: f64) -> f64 {
        let n = self.n_modes();
        self.sigma.sup_bounds.1 * sup_norm_embedding(self.delta, n) * truncation_factor(self.alpha, n)
    }

    fn bound_c(&self, _r: f64) -> f64 {
        let n = self.n_modes();
        self.sigma.sup_bounds.2 * sup_norm_embedding(self.delta, n).powi(2) * truncation_factor(self.alpha, n)
    }

    fn epsilon(&self) -> f64 {
        1.0
    }

    /// The bound above grows with the truncation, so it is not reported as global.
    fn global_bound(&self) -> Option<f64> {
        None
    }
}

/// `B(w) = (∫_0^1 σ(w(x)) φ(x) dx)·Id`, the integral by the grid rule `(1/M)Σ_j`.
#[derive(Clone, Debug)]
pub struct RankOneOperator {
    sigma: ScalarNonlinearity,
    phi_values: Vec<f64>,
    phi_norm: f64,
    grid: Arc<SineGrid>,
    delta: f64,
}

impl RankOneOperator {
    pub fn new(sigma: ScalarNonlinearity, phi: &SpectralElement, grid_intervals: usize, delta: f64) -> Result<Self> {
        let grid = Arc::new(SineGrid::new(grid_intervals, phi.n_modes())?);
        Ok(RankOneOperator {
            phi_values: grid.evaluate(phi)?,
            phi_norm: phi.dot(phi).sqrt(),
            sigma,
            grid,
            delta,
        })
    }

    /// `∫_0^1 σ(w(x)) φ(x) dx`.
    pub fn functional(&self, w: &SpectralElement) -> f64 {
        let m = self.grid.intervals() as f64;
        let wv = self.grid.evaluate(w).expect("state matches operator modes");
        wv.iter()
            .zip(&self.phi_values)
            .map(|(w, p)| (self.sigma.sigma)(*w) * p)
            .sum::<f64>()
            / m
    }
}

impl RoughOperator for RankOneOperator {
    fn n_modes(&self) -> usize {
        self.grid.n_modes()
    }

    fn apply(&self, w: &SpectralElement) -> Arc<dyn LinearMap> {
        Arc::new(ScaledIdentity::new(self.functional(w), self.n_modes()))
    }

    fn derivative(&self, w: &SpectralElement, z: &SpectralElement, x: &SpectralElement) -> SpectralElement {
        let m = self.grid.intervals() as f64;
        let wv = self.grid.evaluate(w).expect("state matches operator modes");
        let zv = self.grid.evaluate(z).expect("direction matches operator modes");
        let c = wv
            .iter()
            .zip(&zv)
            .zip(&self.phi_values)
            .map(|((w, z), p)| (self.sigma.sigma_prime)(*w) * z * p)
            .sum::<f64>()
            / m;
        x.scaled(c)
    }

    fn bound_b(&self, _r: f64) -> f64 {
        self.global_bound().unwrap()
    }

    /// `‖σ''‖∞ E_δ λ_1^{-δ} ‖φ‖`.
    fn bound_c(&self, _r: f64) -> f64 {
        self.sigma.sup_bounds.2
            * sup_norm_embedding(self.delta, self.n_modes())
            * eigenvalue(1).powf(-self.delta)
            * self.phi_norm
    }

    fn epsilon(&self) -> f64 {
        1.0
    }

    /// `‖σ'‖∞ ‖φ‖ λ_1^{-δ}`.
    fn global_bound(&self) -> Option<f64> {
        Some(self.sigma.sup_bounds.1 * self.phi_norm * eigenvalue(1).powf(-self.delta))
    }
}

/// Additive solution with its measured time regularity.
#[derive(Clone, Debug)]
pub struct LinearHeatReport {
    pub solution: SampledPath,
    /// `H_κ(Y; ℬ_δ)` on the grid.
    pub holder_kappa: f64,
}

/// `Y = 𝔖(X)` from zero initial data for a given driver path.
pub fn solve_linear_heat_with_driver(x: &SampledPath, budget: &RegularityBudget) -> Result<LinearHeatReport> {
    let scale = ScaleIndex(budget.delta);
    let solution = grid_convolution(x, scale)?;
    let holder_kappa = holder_paths::seminorm_unchecked(&solution, budget.kappa, scale).seminorm;
    Ok(LinearHeatReport { solution, holder_kappa })
}

/// Samples the noise of `spec` and solves the additive equation.
pub fn solve_linear_heat(spec: &NoiseSpec, budget: &RegularityBudget) -> Result<LinearHeatReport> {
    let report = check_conditions(budget);
    if !report.linear_admissible() {
        return Err(Error::InvalidConfig(format!("linear conditions fail:\n{report}")));
    }
    let x = noise_field(spec, ScaleIndex(-budget.alpha))?;
    solve_linear_heat_with_driver(&x, budget)
}

/// Everything besides the noise that a nonlinear heat run needs.
#[derive(Clone, Debug)]
pub struct NonlinearRun {
    pub sigma: ScalarNonlinearity,
    pub initial: SpectralElement,
    /// `M` of the collocation grid `x_j = j/M`.
    pub grid_intervals: usize,
    pub horizon: f64,
    pub solver: SolverConfig,
}

/// Nemytskii coefficient wired into the Picard solver on a sampled driver.
pub fn solve_nonlinear_heat_with_driver(
    x: &SampledPath,
    budget: &RegularityBudget,
    run: &NonlinearRun,
) -> Result<SolveReport> {
    let op = NemytskiiOperator::new(
        run.sigma.clone(),
        run.grid_intervals,
        x.n_modes(),
        budget.delta,
        budget.alpha,
    )?;
    let mut report = picard_solve(&run.initial, x, &op, None, run.horizon, &run.solver)?;
    let conditions = check_conditions(budget);
    report
        .notes
        .push(("sobolev_indices".into(), conditions.sobolev_indices_ok().to_string()));
    if budget.delta <= 0.5 {
        report.notes.push((
            "scale".into(),
            "computed in the Hilbert scale p = 2; the W^{δ,p} setting with p ≥ 1/δ is only checked arithmetically"
                .into(),
        ));
    }
    Ok(report)
}

/// Samples the noise of `spec` and solves the nonlinear equation.
pub fn solve_nonlinear_heat(spec: &NoiseSpec, budget: &RegularityBudget, run: &NonlinearRun) -> Result<SolveReport> {
    let report = check_conditions(budget);
    if !report.nonlinear_admissible() {
        return Err(Error::InvalidConfig(format!("nonlinear conditions fail:\n{report}")));
    }
    let x = noise_field(spec, ScaleIndex(-budget.alpha))?;
    solve_nonlinear_heat_with_driver(&x, budget, run)
}
