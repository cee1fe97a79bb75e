//! Mild solutions of `dY = -AY dt + B(Y) dX (+ F(Y) dt)` by Picard iteration on
//! successive time windows.
//!
//! The fixed-point map is `Γ(Y)(t) = S(t)y + ∫_0^t S(t-s) dZ(s)` with
//! `Z(t) = ∫_0^t B(Y(s)) dX(s)`. Both integrals are evaluated on the driver's grid:
//! `Z` by left-point Young sums and the convolution by the exact grid recursion.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::holder_paths::{self, SampledPath};
use crate::mild_convolution::grid_convolution;
use crate::quadrature;
use crate::scale_space::{eigenvalue, decay, norm_alpha, semigroup_apply, ScaleIndex, SpectralElement};
use crate::young::{self, LinearMap, OperatorPath, ScaledIdentity};

/// The coefficient `B` of the equation with its derivative and bounds.
pub trait RoughOperator: Send + Sync {
    fn n_modes(&self) -> usize;

    /// `B(u)`, a linear map from the noise space into `ℬ_ρ`.
    fn apply(&self, u: &SpectralElement) -> Arc<dyn LinearMap>;

    /// `C(u) z⊗x`, the derivative of `u ↦ B(u)x` in direction `z`.
    fn derivative(&self, u: &SpectralElement, z: &SpectralElement, x: &SpectralElement) -> SpectralElement;

    /// `M_B(r) = sup_{‖y‖_δ ≤ r} ‖C(y)‖`.
    fn bound_b(&self, r: f64) -> f64;

    /// Hölder constant of `C` on the ball of radius `r`.
    fn bound_c(&self, r: f64) -> f64;

    /// Hölder exponent of `C`.
    fn epsilon(&self) -> f64;

    /// A finite `sup_r M_B(r)`, when there is one; solutions are then global.
    fn global_bound(&self) -> Option<f64>;
}

/// `B ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroOperator {
    pub n_modes: usize,
}

impl RoughOperator for ZeroOperator {
    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn apply(&self, _u: &SpectralElement) -> Arc<dyn LinearMap> {
        Arc::new(ScaledIdentity::new(0.0, self.n_modes))
    }

    fn derivative(&self, _u: &SpectralElement, _z: &SpectralElement, _x: &SpectralElement) -> SpectralElement {
        SpectralElement::zeros(self.n_modes)
    }

    fn bound_b(&self, _r: f64) -> f64 {
        0.0
    }

    fn bound_c(&self, _r: f64) -> f64 {
        0.0
    }

    fn epsilon(&self) -> f64 {
        1.0
    }

    fn global_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `B ≡ Id`, the additive equation.
#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator {
    pub n_modes: usize,
}

impl RoughOperator for IdentityOperator {
    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn apply(&self, _u: &SpectralElement) -> Arc<dyn LinearMap> {
        Arc::new(ScaledIdentity::new(1.0, self.n_modes))
    }

    fn derivative(&self, _u: &SpectralElement, _z: &SpectralElement, _x: &SpectralElement) -> SpectralElement {
        SpectralElement::zeros(self.n_modes)
    }

    fn bound_b(&self, _r: f64) -> f64 {
        0.0
    }

    fn bound_c(&self, _r: f64) -> f64 {
        0.0
    }

    fn epsilon(&self) -> f64 {
        1.0
    }

    fn global_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// A Lipschitz drift `F` acting on states.
pub trait Drift: Send + Sync {
    fn apply(&self, y: &SpectralElement) -> SpectralElement;
}

impl<F: Fn(&SpectralElement) -> SpectralElement + Send + Sync> Drift for F {
    fn apply(&self, y: &SpectralElement) -> SpectralElement {
        self(y)
    }
}

/// Which side of the time-regularity constraint on `κ` is enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaBound {
    /// `0 < κ < min(γ + ρ - δ, 1)`.
    Min,
    /// `0 < κ < max(γ + ρ - δ, 1)`.
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    /// `Y⁰(t) = S(t) y`.
    SemigroupFlow,
    /// `Y⁰(t) = y`.
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Driver Hölder exponent.
    pub gamma: f64,
    /// Driver spatial deficit: `X ∈ ℬ_{-α}`.
    pub alpha: f64,
    /// State space `ℬ_δ`.
    pub delta: f64,
    /// Solution time regularity.
    pub kappa: f64,
    /// `B(y)` maps into `ℬ_ρ`.
    pub rho: f64,
    /// Contraction threshold: windows whose measured factor reaches it are halved.
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Longest window tried, in time units.
    pub max_window: f64,
    /// Windows are never shorter than this many grid cells.
    pub min_window_cells: usize,
    /// A state norm `sup ‖Y‖_δ` above this is treated as blow-up.
    pub explosion_norm: f64,
    pub kappa_bound: KappaBound,
    pub initial_guess: InitialGuess,
}

impl SolverConfig {
    pub fn new(gamma: f64, alpha: f64, delta: f64, kappa: f64, rho: f64) -> Self {
        SolverConfig {
            gamma,
            alpha,
            delta,
            kappa,
            rho,
            theta: 0.5,
            tol: 1e-10,
            max_iter: 200,
            max_window: 1.0,
            min_window_cells: 4,
            explosion_norm: 1e8,
            kappa_bound: KappaBound::Min,
            initial_guess: InitialGuess::SemigroupFlow,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma + self.kappa > 1.0) {
            return Err(Error::YoungAdmissibility {
                sum: self.gamma + self.kappa,
            });
        }
        let limit = match self.kappa_bound {
            KappaBound::Min => (self.gamma + self.rho - self.delta).min(1.0),
            KappaBound::Max => (self.gamma + self.rho - self.delta).max(1.0),
        };
        if !(self.kappa > 0.0 && self.kappa < limit) {
            return bad(format!("need 0 < κ < {limit}, got κ = {}", self.kappa));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("θ must lie in (0, 1), got {}", self.theta));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 || self.min_window_cells == 0 {
            return bad("tolerance, iteration cap and minimal window must be positive".into());
        }
        if !(self.max_window > 0.0) {
            return bad(format!("max window must be positive, got {}", self.max_window));
        }
        Ok(())
    }

    pub fn state_scale(&self) -> ScaleIndex {
        ScaleIndex(self.delta)
    }

    pub fn noise_scale(&self) -> ScaleIndex {
        ScaleIndex(-self.alpha)
    }

    pub fn image_scale(&self) -> ScaleIndex {
        ScaleIndex(self.rho)
    }
}

/// `H_κ(Y; ℬ_δ) + sup ‖Y‖_δ`, the norm in which Picard iterates are compared.
pub fn window_norm(y: &SampledPath, cfg: &SolverConfig) -> f64 {
    holder_paths::seminorm_unchecked(y, cfg.kappa, cfg.state_scale()).seminorm + y.sup_norm(cfg.state_scale())
}

/// `Γ(Y)` on the driver's grid.
pub fn gamma_map(
    y: &SampledPath,
    x: &SampledPath,
    y0: &SpectralElement,
    b: &dyn RoughOperator,
    drift: Option<&dyn Drift>,
    cfg: &SolverConfig,
) -> Result<SampledPath> {
    y.check_same_grid(x)?;
    let operators = y.values().iter().map(|u| b.apply(u)).collect();
    let h = OperatorPath::new(
        x.times().to_vec(),
        operators,
        cfg.kappa,
        cfg.noise_scale(),
        cfg.image_scale(),
    )?;
    let z = young::accumulate(&h, x)?;
    let conv = grid_convolution(&z, cfg.state_scale())?;
    let drift_part = drift.map(|f| drift_convolution(y, f));
    let values = x
        .times()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut v = semigroup_apply(t, y0)?;
            v.axpy(1.0, &conv.values()[k]);
            if let Some(d) = &drift_part {
                v.axpy(1.0, &d[k]);
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    SampledPath::new(x.times().to_vec(), values, cfg.state_scale())
}

/// `∫_0^{t_k} S(t_k - s) F(Y(s)) ds` with `F(Y)` frozen on each cell and the
/// exponential integrated exactly.
fn drift_convolution(y: &SampledPath, f: &dyn Drift) -> Vec<SpectralElement> {
    let n = y.n_modes();
    let mut acc = SpectralElement::zeros(n);
    let mut out = vec![acc.clone()];
    for j in 0..y.len() - 1 {
        let dt = y.times()[j + 1] - y.times()[j];
        let fy = f.apply(&y.values()[j]);
        for (i, a) in acc.coeffs_mut().iter_mut().enumerate() {
            let lambda = eigenvalue(i + 1);
            let r = decay(lambda, dt);
            *a = r * *a + (-(-lambda * dt).exp_m1()) / lambda * fy.coeffs()[i];
        }
        out.push(acc.clone());
    }
    out
}

/// Radius and window length of an invariant ball for `Γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallParameters {
    pub radius: f64,
    /// Largest dyadic fraction of `min(1, horizon)` meeting the step inequality.
    pub tau: f64,
    pub theta: f64,
    /// Continuous solution of the step inequality when `M_B` is global.
    pub tau_global: Option<f64>,
}

/// Constants entering [`ball_parameters`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallConstants {
    /// `C_κ` in front of `‖y‖_{δ+κ}`.
    pub c_kappa: f64,
    /// Convolution constant `C`.
    pub c: f64,
    /// Sewing constant `K`.
    pub k: f64,
}

impl BallConstants {
    /// `C_κ = 1`, `K = (1 - 2^{1-γ-κ})^{-1}` and `C` as given.
    pub fn standard(cfg: &SolverConfig, c: f64) -> Result<Self> {
        Ok(BallConstants {
            c_kappa: 1.0,
            c,
            k: young::sewing_constant(cfg.gamma + cfg.kappa)?,
        })
    }
}

/// Measured `H_κ(𝔖(X); ℬ_δ) / H_γ(X; ℬ_{-α})` for the driver itself.
pub fn calibrate_convolution_constant(x: &SampledPath, cfg: &SolverConfig) -> Result<f64> {
    let hx = holder_paths::seminorm_unchecked(x, cfg.gamma, cfg.noise_scale()).seminorm;
    if hx == 0.0 {
        return Ok(0.0);
    }
    let conv = grid_convolution(x, cfg.state_scale())?;
    Ok(holder_paths::seminorm_unchecked(&conv, cfg.kappa, cfg.state_scale()).seminorm / hx)
}

/// `R = (1-θ)^{-1}[C_κ‖y‖_{δ+κ} + C H_γ(X)‖B(y)‖]` and the largest dyadic
/// `τ ≤ min(1, horizon)` with `M_B(‖y‖_δ + Rτ^κ) τ^κ ≤ θ / ((1+K) C H_γ(X))`.
pub fn ball_parameters(
    y0: &SpectralElement,
    x: &SampledPath,
    b: &dyn RoughOperator,
    theta: f64,
    constants: &BallConstants,
    cfg: &SolverConfig,
) -> Result<BallParameters> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("θ must lie in (0, 1), got {theta}")));
    }
    let hx = holder_paths::seminorm_unchecked(x, cfg.gamma, cfg.noise_scale()).seminorm;
    let b_norm = young::operator_difference_norm(
        b.apply(y0).as_ref(),
        &ScaledIdentity::new(0.0, b.n_modes()),
        cfg.noise_scale(),
        cfg.image_scale(),
    )?;
    let y_norm = norm_alpha(ScaleIndex(cfg.delta + cfg.kappa), y0);
    let radius = (constants.c_kappa * y_norm + constants.c * hx * b_norm) / (1.0 - theta);
    let tau_max = x.horizon().min(1.0);
    let rhs_den = (1.0 + constants.k) * constants.c * hx;
    if rhs_den == 0.0 {
        return Ok(BallParameters {
            radius,
            tau: tau_max,
            theta,
            tau_global: None,
        });
    }
    let target = theta / rhs_den;
    let tau_global = b
        .global_bound()
        .map(|m| if m == 0.0 { f64::INFINITY } else { (target / m).powf(1.0 / cfg.kappa) });
    let start = norm_alpha(cfg.state_scale(), y0);
    let grid_step = x.times()[1] - x.times()[0];
    let mut tau = tau_max;
    loop {
        let tk = tau.powf(cfg.kappa);
        let m_b = match b.global_bound() {
            Some(m) => m,
            None => b.bound_b(start + radius * tk),
        };
        if m_b * tk <= target {
            return Ok(BallParameters {
                radius,
                tau,
                theta,
                tau_global,
            });
        }
        tau *= 0.5;
        if tau < grid_step {
            return Err(Error::StepTooSmall { start: 0.0, grid_step });
        }
    }
}

/// Outcome of Picard iteration on one window.
#[derive(Clone, Debug)]
pub struct WindowSolution {
    pub path: SampledPath,
    /// Largest observed ratio of successive iterate distances (0 if the second
    /// iterate already coincided with the first).
    pub contraction: f64,
    pub factors: Vec<f64>,
    pub iterations: usize,
    /// `‖Y - Γ(Y)‖` at acceptance.
    pub residual: f64,
}

/// Iterates `Y ← Γ(Y)` on a window until successive iterates are within `tol`.
///
/// Fails with [`Error::ContractionFailure`] as soon as a ratio of successive
/// distances reaches `threshold`, and with [`Error::MaxIterations`] when the
/// iteration cap is hit.
pub fn picard_window(
    y0: &SpectralElement,
    x: &SampledPath,
    b: &dyn RoughOperator,
    drift: Option<&dyn Drift>,
    cfg: &SolverConfig,
    threshold: f64,
) -> Result<WindowSolution> {
    let mut y = initial_guess(y0, x, cfg)?;
    let mut factors = Vec::new();
    let mut prev_dist: Option<f64> = None;
    for iter in 1..=cfg.max_iter {
        let next = gamma_map(&y, x, y0, b, drift, cfg)?;
        let dist = window_norm(&next.difference(&y)?, cfg);
        let floor = 1e-13 * (1.0 + window_norm(&next, cfg));
        if let Some(p) = prev_dist {
            if p > floor {
                let q = dist / p;
                factors.push(q);
                if q >= threshold {
                    return Err(Error::ContractionFailure {
                        start: 0.0,
                        end: x.horizon(),
                        factors,
                    });
                }
            }
        }
        y = next;
        if dist < cfg.tol {
            let check = gamma_map(&y, x, y0, b, drift, cfg)?;
            let residual = window_norm(&check.difference(&y)?, cfg);
            return Ok(WindowSolution {
                path: y,
                contraction: factors.iter().copied().fold(0.0, f64::max),
                factors,
                iterations: iter,
                residual,
            });
        }
        prev_dist = Some(dist);
    }
    Err(Error::MaxIterations {
        max_iter: cfg.max_iter,
        last: prev_dist.unwrap_or(f64::NAN),
    })
}

fn initial_guess(y0: &SpectralElement, x: &SampledPath, cfg: &SolverConfig) -> Result<SampledPath> {
    let values = x
        .times()
        .iter()
        .map(|&t| match cfg.initial_guess {
            InitialGuess::SemigroupFlow => semigroup_apply(t, y0),
            InitialGuess::Constant => Ok(y0.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    SampledPath::new(x.times().to_vec(), values, cfg.state_scale())
}

/// One accepted window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowRecord {
    pub start: f64,
    pub end: f64,
    /// Invariant-ball radius at the window start, when an admissible `τ` exists.
    pub radius: Option<f64>,
    /// A-priori window length from the ball inequality, when it exists.
    pub tau_theory: Option<f64>,
    pub contraction: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: SampledPath,
    pub windows: Vec<WindowRecord>,
    pub exploded: bool,
    pub final_time: f64,
    /// Free-form notes carried into the metadata file.
    pub notes: Vec<(String, String)>,
}

impl SolveReport {
    /// `key = value` lines: `exploded`, `final_time`, `windows`, then
    /// `window.<i>.{start,end,R,tau,contraction,iters,residual}` and any notes.
    pub fn write_meta<W: Write>(&self, mut w: W) -> Result<()> {
        let f = holder_paths::format_float;
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), f);
        writeln!(w, "exploded = {}", self.exploded)?;
        writeln!(w, "final_time = {}", f(self.final_time))?;
        writeln!(w, "windows = {}", self.windows.len())?;
        for (i, r) in self.windows.iter().enumerate() {
            writeln!(w, "window.{i}.start = {}", f(r.start))?;
            writeln!(w, "window.{i}.end = {}", f(r.end))?;
            writeln!(w, "window.{i}.R = {}", opt(r.radius))?;
            writeln!(w, "window.{i}.tau = {}", opt(r.tau_theory))?;
            writeln!(w, "window.{i}.contraction = {}", f(r.contraction))?;
            writeln!(w, "window.{i}.iters = {}", r.iterations)?;
            writeln!(w, "window.{i}.residual = {}", f(r.residual))?;
        }
        for (k, v) in &self.notes {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Solves on `[0, horizon]` (a grid time of `x`) window by window.
///
/// Each window starts at the longest length allowed by `max_window` and is halved
/// while Picard iteration fails to contract below `θ`. The solve stops early, with
/// `exploded = true`, when even a minimal window fails or the state norm exceeds
/// `explosion_norm`; the solution then ends at `final_time`.
pub fn picard_solve(
    y0: &SpectralElement,
    x: &SampledPath,
    b: &dyn RoughOperator,
    drift: Option<&dyn Drift>,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let dt = x
        .uniform_step()
        .ok_or_else(|| Error::UnsupportedGrid("the solver needs a uniform driver grid".into()))?;
    let end_index = (horizon / dt).round() as usize;
    if end_index == 0 || end_index >= x.len() || ((end_index as f64) * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::Domain(format!("horizon {horizon} is not a positive grid time of the driver")));
    }
    let max_cells = ((cfg.max_window / dt).floor() as usize).max(cfg.min_window_cells);
    let constants = BallConstants::standard(cfg, calibrate_convolution_constant(x, cfg)?)?;

    let mut times = vec![0.0];
    let mut values = vec![y0.clone()];
    let mut windows = Vec::new();
    let mut start = 0usize;
    let mut state = y0.clone();
    let mut exploded = false;
    while start < end_index {
        let mut cells = max_cells.min(end_index - start);
        let accepted = loop {
            let piece = x.window(start, start + cells)?;
            let ball = ball_parameters(&state, &piece, b, cfg.theta, &constants, cfg).ok();
            match picard_window(&state, &piece, b, drift, cfg, cfg.theta) {
                Ok(sol) => break Some((sol, ball)),
                Err(Error::ContractionFailure { .. }) | Err(Error::MaxIterations { .. }) => {
                    if cells <= cfg.min_window_cells {
                        break None;
                    }
                    cells = (cells / 2).max(cfg.min_window_cells);
                }
                Err(e) => return Err(e),
            }
        };
        let Some((sol, ball)) = accepted else {
            log::warn!("no contracting window at t = {}", x.times()[start]);
            exploded = true;
            break;
        };
        let t0 = x.times()[start];
        let blown = sol.path.sup_norm(cfg.state_scale()) > cfg.explosion_norm;
        for (t, v) in sol.path.times().iter().zip(sol.path.values()).skip(1) {
            times.push(t0 + t);
            values.push(v.clone());
        }
        windows.push(WindowRecord {
            start: t0,
            end: x.times()[start + cells],
            radius: ball.map(|b| b.radius),
            tau_theory: ball.map(|b| b.tau),
            contraction: sol.contraction,
            iterations: sol.iterations,
            residual: sol.residual,
        });
        state = sol.path.values().last().unwrap().clone();
        start += cells;
        if blown {
            log::warn!("state norm exceeded {} by t = {}", cfg.explosion_norm, x.times()[start]);
            exploded = true;
            break;
        }
    }
    // keep the driver's own time values so outputs line up with the input grid
    let final_index = times.len() - 1;
    let solution = SampledPath::new(x.times()[..=final_index].to_vec(), values, cfg.state_scale())?;
    Ok(SolveReport {
        final_time: x.times()[final_index],
        solution,
        windows,
        exploded,
        notes: Vec::new(),
    })
}

/// Sensitivity of the solution to the driver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItoProbe {
    /// `H_κ(Y₁ - Y₂; ℬ_δ) / H_γ(X₁ - X₂; ℬ_{-α})`, or 0 when the drivers coincide.
    pub ratio: f64,
    pub degenerate: bool,
}

pub fn ito_map_probe(
    x1: &SampledPath,
    x2: &SampledPath,
    y0: &SpectralElement,
    b: &dyn RoughOperator,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<ItoProbe> {
    let dx = x1.difference(x2)?;
    let hx = holder_paths::seminorm_unchecked(&dx, cfg.gamma, cfg.noise_scale()).seminorm;
    if hx == 0.0 {
        return Ok(ItoProbe {
            ratio: 0.0,
            degenerate: true,
        });
    }
    let s1 = picard_solve(y0, x1, b, None, horizon, cfg)?;
    let s2 = picard_solve(y0, x2, b, None, horizon, cfg)?;
    if s1.exploded || s2.exploded {
        return Err(Error::StepTooSmall {
            start: s1.final_time.min(s2.final_time),
            grid_step: x1.times()[1],
        });
    }
    let dy = s1.solution.difference(&s2.solution)?;
    let hy = holder_paths::seminorm_unchecked(&dy, cfg.kappa, cfg.state_scale()).seminorm;
    Ok(ItoProbe {
        ratio: hy / hx,
        degenerate: false,
    })
}

/// `‖B(y')x - B(y)x - ∫_0^1 C(y + τ(y'-y))(y'-y)⊗x dτ‖_ρ` by Gauss–Legendre in `τ`.
pub fn mean_value_residual(
    b: &dyn RoughOperator,
    y: &SpectralElement,
    y_prime: &SpectralElement,
    x: &SpectralElement,
    quad_points: usize,
    rho: ScaleIndex,
) -> f64 {
    let dy = y_prime - y;
    let mut integral = SpectralElement::zeros(b.n_modes());
    for (tau, w) in quadrature::composite(0.0, 1.0, 1, quad_points) {
        let mut point = y.clone();
        point.axpy(tau, &dy);
        integral.axpy(w, &b.derivative(&point, &dy, x));
    }
    let lhs = &b.apply(y_prime).apply(x) - &b.apply(y).apply(x);
    norm_alpha(rho, &(&lhs - &integral))
}

/// Largest observed `‖C(y')z⊗x - C(y)z⊗x‖_ρ / (‖y'-y‖_δ^ε ‖z‖_δ ‖x‖_{-α})` over
/// random triples with `‖y‖_δ, ‖y'‖_δ ≤ r`, divided by `M_C(r)`.
pub fn derivative_holder_probe(
    b: &dyn RoughOperator,
    radius: f64,
    modes_used: usize,
    trials: usize,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> f64 {
    let n = b.n_modes();
    let draw = |target: f64, rng: &mut dyn rand::RngCore| {
        let mut c = vec![0.0; n];
        for v in c.iter_mut().take(modes_used.min(n)) {
            *v = rng.random_range(-1.0..1.0);
        }
        let e = SpectralElement::from_vec_unchecked(c);
        let norm = norm_alpha(cfg.state_scale(), &e);
        if norm == 0.0 {
            e
        } else {
            e.scaled(target * rng.random_range(0.0..1.0) / norm)
        }
    };
    let m_c = b.bound_c(radius);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let y = draw(radius, rng);
        let y2 = draw(radius, rng);
        let z = draw(1.0, rng);
        let x = draw(1.0, rng);
        let lhs = norm_alpha(cfg.image_scale(), &(&b.derivative(&y2, &z, &x) - &b.derivative(&y, &z, &x)));
        let denom = norm_alpha(cfg.state_scale(), &(&y2 - &y)).powf(b.epsilon())
            * norm_alpha(cfg.state_scale(), &z)
            * norm_alpha(cfg.noise_scale(), &x);
        if denom > 0.0 {
            worst = worst.max(lhs / denom);
        }
    }
    if m_c > 0.0 {
        worst / m_c
    } else if worst == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}
