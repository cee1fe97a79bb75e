//! The mild convolution `𝔖(X)(t) = ∫_0^t S(t-s) dX(s)` by dyadic Riemann-type sums.
//!
//! Level `n` of the scheme is
//! `𝔖ⁿ(X)(s, s'; t) = Σ_{k=⌈2ⁿs/t⌉}^{⌊2ⁿs'/t⌋-1} S(t - t_k) X(t_k, t_{k+1})`, `t_k = tk/2ⁿ`.
//! Successive levels converge geometrically in `ℬ_δ`; [`convolve`] iterates until
//! the `ℬ_δ` increment drops below the tolerance.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::holder_paths::{format_float, SampledPath};
use crate::quadrature;
use crate::scale_space::{
    decay, eigenvalue, power_weights, semigroup_apply, semigroup_in_place, smoothing_envelope,
    ScaleIndex, SpectralElement,
};
use crate::stats;

const GRID_REL_TOL: f64 = 1e-9;

/// A path that can be evaluated at the dyadic points the scheme asks for.
pub trait Driver: Sync {
    fn n_modes(&self) -> usize;

    /// Space the driver lives in, `ℬ_{-α}`.
    fn scale(&self) -> ScaleIndex;

    /// Writes the coefficients of `X(t)` into `out`.
    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()>;

    /// Deepest level `n` at which every point `start + span·k/2ⁿ` can be supplied.
    /// `None` means unlimited.
    fn resolvable_level(&self, start: f64, span: f64) -> Result<Option<u32>>;

    fn eval(&self, t: f64) -> Result<SpectralElement> {
        let mut out = vec![0.0; self.n_modes()];
        self.eval_into(t, &mut out)?;
        SpectralElement::new(out)
    }
}

/// A driver given by a closure writing `X(t)` into a buffer.
pub struct AnalyticDriver<F> {
    f: F,
    n_modes: usize,
    scale: ScaleIndex,
}

impl<F: Fn(f64, &mut [f64]) + Sync> AnalyticDriver<F> {
    pub fn new(n_modes: usize, scale: ScaleIndex, f: F) -> Self {
        AnalyticDriver { f, n_modes, scale }
    }
}

impl<F: Fn(f64, &mut [f64]) + Sync> Driver for AnalyticDriver<F> {
    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn scale(&self) -> ScaleIndex {
        self.scale
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        (self.f)(t, out);
        Ok(())
    }

    fn resolvable_level(&self, _start: f64, _span: f64) -> Result<Option<u32>> {
        Ok(None)
    }
}

/// `t ↦ f(t)·x₀` for a scalar profile `f`.
pub fn separable_driver(
    x0: SpectralElement,
    scale: ScaleIndex,
    f: impl Fn(f64) -> f64 + Sync,
) -> AnalyticDriver<impl Fn(f64, &mut [f64]) + Sync> {
    let n = x0.n_modes();
    AnalyticDriver::new(n, scale, move |t, out: &mut [f64]| {
        let ft = f(t);
        for (o, c) in out.iter_mut().zip(x0.coeffs()) {
            *o = ft * c;
        }
    })
}

/// A uniformly sampled path used as a driver; only grid points are available.
pub struct SampledDriver<'a> {
    path: &'a SampledPath,
    step: f64,
}

impl<'a> SampledDriver<'a> {
    pub fn new(path: &'a SampledPath) -> Result<Self> {
        let step = path
            .uniform_step()
            .ok_or_else(|| Error::UnsupportedGrid("sampled drivers need a uniform grid".into()))?;
        Ok(SampledDriver { path, step })
    }

    pub fn path(&self) -> &SampledPath {
        self.path
    }

    fn grid_index(&self, t: f64) -> Option<usize> {
        let x = t / self.step;
        let k = x.round();
        ((x - k).abs() <= GRID_REL_TOL * x.abs().max(1.0) && k >= 0.0 && (k as usize) < self.path.len())
            .then_some(k as usize)
    }
}

impl Driver for SampledDriver<'_> {
    fn n_modes(&self) -> usize {
        self.path.n_modes()
    }

    fn scale(&self) -> ScaleIndex {
        self.path.scale()
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let k = self.grid_index(t).ok_or_else(|| Error::GridIncompatible {
            level: 0,
            detail: format!("time {t} is not a grid point (step {})", self.step),
        })?;
        out.copy_from_slice(self.path.values()[k].coeffs());
        Ok(())
    }

    fn resolvable_level(&self, start: f64, span: f64) -> Result<Option<u32>> {
        let incompatible = |detail: String| Error::GridIncompatible { level: 0, detail };
        self.grid_index(start)
            .ok_or_else(|| incompatible(format!("start {start} is not a grid point")))?;
        let end = self
            .grid_index(start + span)
            .ok_or_else(|| incompatible(format!("end {} is not a grid point", start + span)))?;
        let cells = end - self.grid_index(start).unwrap();
        if cells == 0 {
            return Err(incompatible("empty span".into()));
        }
        Ok(Some(cells.trailing_zeros()))
    }
}

/// `X_{t₀+·}`: the driver restarted at `t₀`.
pub struct ShiftedDriver<'a, D: ?Sized> {
    inner: &'a D,
    offset: f64,
}

impl<'a, D: Driver + ?Sized> ShiftedDriver<'a, D> {
    pub fn new(inner: &'a D, offset: f64) -> Self {
        ShiftedDriver { inner, offset }
    }
}

impl<D: Driver + ?Sized> Driver for ShiftedDriver<'_, D> {
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    fn scale(&self) -> ScaleIndex {
        self.inner.scale()
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        self.inner.eval_into(self.offset + t, out)
    }

    fn resolvable_level(&self, start: f64, span: f64) -> Result<Option<u32>> {
        self.inner.resolvable_level(self.offset + start, span)
    }
}

/// Exponents of the scheme: `X ∈ 𝒞^γ(ℬ_{-α})`, output measured in `ℬ_δ` with
/// time regularity `κ`, and the proof exponent `β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicConvolutionConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub beta: f64,
    pub kappa: f64,
    pub max_level: u32,
    pub tol: f64,
    /// Do not stop before this level even if the increment is small.
    pub min_level: u32,
    /// Return `2𝔖ⁿ⁺¹ - 𝔖ⁿ` instead of `𝔖ⁿ⁺¹` at the stopping level.
    pub richardson: bool,
}

impl DyadicConvolutionConfig {
    /// Validated config with `β` at the midpoint of `(1-γ, min(1-α-δ, 1))`.
    pub fn new(alpha: f64, gamma: f64, delta: f64, kappa: f64, max_level: u32, tol: f64) -> Result<Self> {
        let beta = 0.5 * ((1.0 - gamma) + (1.0 - alpha - delta).min(1.0));
        Self::with_beta(alpha, gamma, delta, beta, kappa, max_level, tol)
    }

    pub fn with_beta(
        alpha: f64,
        gamma: f64,
        delta: f64,
        beta: f64,
        kappa: f64,
        max_level: u32,
        tol: f64,
    ) -> Result<Self> {
        let cfg = DyadicConvolutionConfig {
            alpha,
            gamma,
            delta,
            beta,
            kappa,
            max_level,
            tol,
            min_level: 0,
            richardson: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let DyadicConvolutionConfig {
            alpha,
            gamma,
            delta,
            beta,
            kappa,
            tol,
            ..
        } = *self;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if [alpha, gamma, delta, beta, kappa, tol].iter().any(|v| !v.is_finite()) {
            return bad("exponents and tolerance must be finite".into());
        }
        if !(alpha < gamma) {
            return bad(format!("need α < γ, got α = {alpha}, γ = {gamma}"));
        }
        if !(delta > 0.0 && delta < gamma - alpha) {
            return bad(format!("need 0 < δ < γ - α, got δ = {delta}"));
        }
        if !(kappa > 0.0 && kappa < (gamma - alpha - delta).min(1.0)) {
            return bad(format!("need 0 < κ < min(γ - α - δ, 1), got κ = {kappa}"));
        }
        if !(beta > 1.0 - gamma && beta < (1.0 - alpha - delta).min(1.0)) {
            return bad(format!("need 1 - γ < β < min(1 - α - δ, 1), got β = {beta}"));
        }
        if !(tol > 0.0) {
            return bad(format!("tolerance must be positive, got {tol}"));
        }
        Ok(())
    }

    /// `ε = α + δ + β`.
    pub fn epsilon(&self) -> f64 {
        self.alpha + self.delta + self.beta
    }

    /// Predicted decay exponent `β + γ - 1` of the level increments.
    pub fn rate_exponent(&self) -> f64 {
        self.beta + self.gamma - 1.0
    }
}

/// Why the level iteration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// An increment fell below the tolerance.
    Tolerance,
    /// The driver cannot supply finer dyadic points.
    Resolution,
}

#[derive(Clone, Debug)]
pub struct ConvolutionResult {
    /// Estimate of `𝔖(X)(s, s'; t)`.
    pub value: SpectralElement,
    /// The finest level sum `𝔖ⁿ(X)(s, s'; t)` itself.
    pub raw_value: SpectralElement,
    /// `‖A^δ(𝔖ⁿ⁺¹ - 𝔖ⁿ)‖` for `n = 0, 1, …`.
    pub level_increments: Vec<f64>,
    /// Finest level computed.
    pub levels_used: u32,
    /// OLS slope of `log₂` increments against level from level 4 on.
    pub rate_slope: Option<f64>,
    pub stop: StopReason,
}

/// One dyadic sum `𝔖ⁿ(X)(s, s'; t)`.
pub fn dyadic_level<D: Driver + ?Sized>(x: &D, s: f64, s_prime: f64, t: f64, n: u32) -> Result<SpectralElement> {
    check_times(s, s_prime, t)?;
    if let Some(res) = x.resolvable_level(0.0, t)? {
        if n > res {
            return Err(Error::GridIncompatible {
                level: n,
                detail: format!("driver resolves at most level {res} on [0, {t}]"),
            });
        }
    }
    let mut out = vec![0.0; x.n_modes()];
    level_sum(x, s, s_prime, t, n, &mut out)?;
    Ok(SpectralElement::from_vec_unchecked(out))
}

fn check_times(s: f64, s_prime: f64, t: f64) -> Result<()> {
    if !(0.0 <= s && s <= s_prime && s_prime <= t && t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 ≤ s ≤ s' ≤ t and t > 0, got ({s}, {s_prime}, {t})"
        )));
    }
    Ok(())
}

/// Summation bounds `[⌈2ⁿs/t⌉, ⌊2ⁿs'/t⌋)`.
fn index_range(s: f64, s_prime: f64, t: f64, n: u32) -> (u64, u64) {
    let cells = (1u64 << n) as f64;
    let lo = (cells * s / t).ceil() as u64;
    let hi = (cells * s_prime / t).floor() as u64;
    (lo, hi.max(lo))
}

/// Horner accumulation per mode: `acc ← r(acc + ΔX_k)` with `r = e^{-λt/2ⁿ}`,
/// then the remaining factor `S(t - t_{hi})`.
fn level_sum<D: Driver + ?Sized>(x: &D, s: f64, s_prime: f64, t: f64, n: u32, out: &mut [f64]) -> Result<()> {
    out.fill(0.0);
    let (lo, hi) = index_range(s, s_prime, t, n);
    if lo >= hi {
        return Ok(());
    }
    let cells = 1u64 << n;
    let h = t / cells as f64;
    let n_modes = out.len();
    let r: Vec<f64> = (1..=n_modes).map(|k| decay(eigenvalue(k), h)).collect();
    let point = |k: u64| if k == cells { t } else { k as f64 * h };
    let mut prev = vec![0.0; n_modes];
    let mut cur = vec![0.0; n_modes];
    x.eval_into(point(lo), &mut prev)?;
    for k in lo..hi {
        x.eval_into(point(k + 1), &mut cur)?;
        for i in 0..n_modes {
            out[i] = r[i] * (out[i] + cur[i] - prev[i]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    semigroup_in_place(t - point(hi), out);
    Ok(())
}

fn delta_norm_of_difference(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| {
            let d = w * (x - y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `𝔖(X)(s, s'; t)` by iterating levels until the `ℬ_δ` increment is below `tol`.
///
/// Stopping is not allowed before `max(min_level, ⌈log₂(λ₁t)⌉)`, the first level
/// whose cells resolve the slowest mode. If the driver runs out of dyadic points
/// first, the finest available level is used and [`StopReason::Resolution`] is
/// reported.
pub fn convolve_range<D: Driver + ?Sized>(
    x: &D,
    s: f64,
    s_prime: f64,
    t: f64,
    cfg: &DyadicConvolutionConfig,
) -> Result<ConvolutionResult> {
    cfg.validate()?;
    check_times(s, s_prime, t)?;
    let n_modes = x.n_modes();
    let weights = power_weights(cfg.delta, n_modes)?;
    let resolution = x.resolvable_level(0.0, t)?;
    let cap = resolution.map_or(cfg.max_level, |r| r.min(cfg.max_level));
    let first_stop = cfg.min_level.max((eigenvalue(1) * t).log2().ceil().max(0.0) as u32);

    let mut prev = vec![0.0; n_modes];
    let mut cur = vec![0.0; n_modes];
    level_sum(x, s, s_prime, t, 0, &mut prev)?;
    let mut increments = Vec::new();
    let mut stop = None;
    let mut n = 0;
    while n < cap {
        level_sum(x, s, s_prime, t, n + 1, &mut cur)?;
        let inc = delta_norm_of_difference(&cur, &prev, &weights);
        increments.push(inc);
        n += 1;
        std::mem::swap(&mut prev, &mut cur);
        if inc < cfg.tol && n > first_stop {
            stop = Some(StopReason::Tolerance);
            break;
        }
    }
    // prev holds level n, cur level n-1 (if any)
    let stop = match stop {
        Some(s) => s,
        None if cap < cfg.max_level => StopReason::Resolution,
        None => {
            return Err(Error::NonConvergence {
                tol: cfg.tol,
                max_level: cfg.max_level,
                last: increments.last().copied().unwrap_or(f64::NAN),
                increments,
            })
        }
    };
    let raw_value = SpectralElement::from_vec_unchecked(prev.clone());
    let value = if cfg.richardson && n > 0 {
        SpectralElement::from_vec_unchecked(prev.iter().zip(&cur).map(|(f, c)| 2.0 * f - c).collect())
    } else {
        raw_value.clone()
    };
    let rate_slope = rate_slope(&increments, 4, increments.len());
    Ok(ConvolutionResult {
        value,
        raw_value,
        level_increments: increments,
        levels_used: n,
        rate_slope,
        stop,
    })
}

/// `𝔖(X)(t) = 𝔖(X)(0, t; t)`.
pub fn convolve<D: Driver + ?Sized>(x: &D, t: f64, cfg: &DyadicConvolutionConfig) -> Result<ConvolutionResult> {
    convolve_range(x, 0.0, t, t, cfg)
}

/// [`convolve`] at each of `times` (in parallel). The value at `t = 0` is zero.
pub fn convolve_path<D: Driver + ?Sized>(
    x: &D,
    times: &[f64],
    cfg: &DyadicConvolutionConfig,
    out_scale: ScaleIndex,
) -> Result<(SampledPath, Vec<Option<ConvolutionResult>>)> {
    let results = times
        .par_iter()
        .map(|&t| if t == 0.0 { Ok(None) } else { convolve(x, t, cfg).map(Some) })
        .collect::<Result<Vec<_>>>()?;
    let values = results
        .iter()
        .map(|r| match r {
            Some(r) => r.value.clone(),
            None => SpectralElement::zeros(x.n_modes()),
        })
        .collect();
    Ok((SampledPath::new(times.to_vec(), values, out_scale)?, results))
}

/// `Σ_{k<j} S(t_j - t_k) X(t_k, t_{k+1})` at every grid time, by the recursion
/// `V_{j+1} = S(t_{j+1} - t_j)(V_j + X(t_j, t_{j+1}))`.
///
/// On a uniform grid of `2^L` cells this is the finest dyadic level available
/// for the horizon, evaluated at all grid times at once.
pub fn grid_convolution(x: &SampledPath, out_scale: ScaleIndex) -> Result<SampledPath> {
    let mut values = Vec::with_capacity(x.len());
    let mut acc = SpectralElement::zeros(x.n_modes());
    values.push(acc.clone());
    for j in 0..x.len() - 1 {
        let dt = x.times()[j + 1] - x.times()[j];
        let coeffs = acc.coeffs_mut();
        for ((a, hi), lo) in coeffs.iter_mut().zip(x.values()[j + 1].coeffs()).zip(x.values()[j].coeffs()) {
            *a += hi - lo;
        }
        semigroup_in_place(dt, acc.coeffs_mut());
        values.push(acc.clone());
    }
    SampledPath::new(x.times().to_vec(), values, out_scale)
}

/// `∫_0^t S(t-s) X'(s) ds` per mode by composite Gauss–Legendre quadrature.
///
/// Each mode uses enough panels that a panel spans at most about eight decay times.
pub fn smooth_oracle(x_derivative: impl Fn(f64) -> SpectralElement, t: f64, quad_points: usize) -> SpectralElement {
    assert!(quad_points >= 8, "oracle needs at least 8 quadrature points");
    let n_modes = x_derivative(0.0).n_modes();
    let mut out = vec![0.0; n_modes];
    let max_panels = ((eigenvalue(n_modes) * t / 8.0).ceil() as usize).max(1);
    let rule = quadrature::composite(0.0, t, max_panels, quad_points);
    let samples: Vec<(f64, SpectralElement)> = rule.iter().map(|&(s, w)| (w, x_derivative(s))).collect();
    for (i, o) in out.iter_mut().enumerate() {
        let lambda = eigenvalue(i + 1);
        *o = rule
            .iter()
            .zip(&samples)
            .map(|(&(s, _), (w, v))| w * decay(lambda, t - s) * v.coeffs()[i])
            .sum();
    }
    SpectralElement::from_vec_unchecked(out)
}

/// `‖A^δ(𝔖ⁿ(s,s') + 𝔖ⁿ(s',s'') - 𝔖ⁿ(s,s''))‖` at a single level.
pub fn chasles_residual<D: Driver + ?Sized>(
    x: &D,
    s: f64,
    s_prime: f64,
    s_second: f64,
    t: f64,
    n: u32,
    delta: f64,
) -> Result<f64> {
    check_times(s, s_prime, t)?;
    check_times(s_prime, s_second, t)?;
    let a = dyadic_level(x, s, s_prime, t, n)?;
    let b = dyadic_level(x, s_prime, s_second, t, n)?;
    let c = dyadic_level(x, s, s_second, t, n)?;
    let defect = &(&a + &b) - &c;
    Ok(crate::scale_space::norm_alpha(ScaleIndex(delta), &defect))
}

/// Defects of the two flow identities, in `ℬ_δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowResidual {
    /// `‖𝔖(X)(0,t;t+h) - S(h)𝔖(X)(0,t;t)‖`.
    pub propagation: f64,
    /// `‖𝔖(X)(t,t+h;t+h) - 𝔖(X_{t+·})(0,h;h)‖`.
    pub restart: f64,
}

impl FlowResidual {
    pub fn max(&self) -> f64 {
        self.propagation.max(self.restart)
    }
}

pub fn flow_identity_residual<D: Driver + ?Sized>(
    x: &D,
    t: f64,
    h: f64,
    cfg: &DyadicConvolutionConfig,
) -> Result<FlowResidual> {
    if h == 0.0 {
        return Ok(FlowResidual {
            propagation: 0.0,
            restart: 0.0,
        });
    }
    if !(t > 0.0 && h > 0.0) {
        return Err(Error::Domain(format!("need t > 0 and h ≥ 0, got ({t}, {h})")));
    }
    let delta = ScaleIndex(cfg.delta);
    let lhs = convolve_range(x, 0.0, t, t + h, cfg)?.value;
    let rhs = semigroup_apply(h, &convolve(x, t, cfg)?.value)?;
    let propagation = crate::scale_space::norm_alpha(delta, &(&lhs - &rhs));

    let lhs = convolve_range(x, t, t + h, t + h, cfg)?.value;
    let shifted = ShiftedDriver::new(x, t);
    let rhs = convolve(&shifted, h, cfg)?.value;
    let restart = crate::scale_space::norm_alpha(delta, &(&lhs - &rhs));
    Ok(FlowResidual { propagation, restart })
}

/// OLS slope of `log₂(increment)` against level over `from..to`, skipping zeros.
pub fn rate_slope(increments: &[f64], from: usize, to: usize) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = increments
        .iter()
        .enumerate()
        .take(to)
        .skip(from)
        .filter(|(_, v)| **v > 0.0)
        .map(|(n, v)| (n as f64, v.log2()))
        .unzip();
    stats::ols(&xs, &ys).map(|f| f.slope)
}

/// Right side of the level-increment bound at level `n` over the full range `(0, t; t)`:
/// `M_ε H(Y) h^{β+γ} Σ_k (t - t_{2k+1}^{n+1})^{-ε}` with `h = t/2^{n+1}`, `ε = α+δ+β`.
///
/// `holder_constant` is `H_γ(X; ℬ_{-α})`. The sum is exact up to `2^16` terms
/// and replaced by its integral upper bound beyond that.
pub fn increment_bound(n: u32, t: f64, holder_constant: f64, cfg: &DyadicConvolutionConfig) -> f64 {
    let eps = cfg.epsilon();
    let h = t / (1u64 << (n + 1)) as f64;
    let terms = 1u64 << n;
    // Σ_{k<terms} (2k+1)^{-ε}
    let odd_sum = if terms <= 1 << 16 {
        (0..terms).map(|k| ((2 * k + 1) as f64).powf(-eps)).sum::<f64>()
    } else {
        1.0 + (((2 * terms - 1) as f64).powf(1.0 - eps) - 1.0) / (2.0 * (1.0 - eps))
    };
    smoothing_envelope(eps) * holder_constant * h.powf(cfg.beta + cfg.gamma - eps) * odd_sum
}

/// One row of a rate table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub level: u32,
    pub increment_norm: f64,
    pub bound_rhs: f64,
}

pub fn rate_table(
    increments: &[f64],
    t: f64,
    holder_constant: f64,
    cfg: &DyadicConvolutionConfig,
) -> Vec<RateRow> {
    increments
        .iter()
        .enumerate()
        .map(|(n, &v)| RateRow {
            level: n as u32,
            increment_norm: v,
            bound_rhs: increment_bound(n as u32, t, holder_constant, cfg),
        })
        .collect()
}

/// Rows `‖𝔖^{n+1}(X)(t) - 𝔖ⁿ(X)(t)‖_δ` against the increment bound for every `n`
/// in `levels`, with no stopping rule; levels are computed in parallel.
pub fn level_study<D: Driver + ?Sized>(
    x: &D,
    t: f64,
    holder_constant: f64,
    cfg: &DyadicConvolutionConfig,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<Vec<RateRow>> {
    cfg.validate()?;
    let delta = ScaleIndex(cfg.delta);
    let (lo, hi) = (*levels.start(), *levels.end());
    let values = (lo..=hi + 1)
        .into_par_iter()
        .map(|n| dyadic_level(x, 0.0, t, t, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(values
        .windows(2)
        .zip(lo..=hi)
        .map(|(w, n)| RateRow {
            level: n,
            increment_norm: crate::scale_space::norm_alpha(delta, &(&w[1] - &w[0])),
            bound_rhs: increment_bound(n, t, holder_constant, cfg),
        })
        .collect())
}

/// CSV `level,increment_norm,bound_rhs`.
pub fn write_rate_csv<W: Write>(rows: &[RateRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["level", "increment_norm", "bound_rhs"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            format_float(r.increment_norm),
            format_float(r.bound_rhs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder_paths::uniform_times;

    fn cfg() -> DyadicConvolutionConfig {
        DyadicConvolutionConfig::new(0.1, 0.9, 0.2, 0.3, 30, 1e-8).unwrap()
    }

    fn linear_e1() -> AnalyticDriver<impl Fn(f64, &mut [f64]) + Sync> {
        separable_driver(SpectralElement::basis(1, 1), ScaleIndex(-0.1), |t| t)
    }

    #[test]
    fn config_validation() {
        assert!(DyadicConvolutionConfig::new(0.9, 0.5, 0.1, 0.1, 10, 1e-6).is_err());
        assert!(DyadicConvolutionConfig::new(0.1, 0.9, 0.8, 0.05, 10, 1e-6).is_err());
        assert!(DyadicConvolutionConfig::new(0.1, 0.9, 0.2, 0.7, 10, 1e-6).is_err());
        let c = cfg();
        assert!((c.beta - 0.4).abs() < 1e-15);
        assert!(DyadicConvolutionConfig::with_beta(0.1, 0.9, 0.2, 0.05, 0.3, 10, 1e-6).is_err());
    }

    #[test]
    fn level_examples() {
        let x = linear_e1();
        // empty range
        assert!(dyadic_level(&x, 0.3, 0.4, 1.0, 1).unwrap().is_zero());
        let v = dyadic_level(&x, 0.0, 1.0, 1.0, 1).unwrap();
        let l = eigenvalue(1);
        let expected = 0.5 * ((-l).exp() + (-l / 2.0).exp());
        assert!((v.coeffs()[0] - expected).abs() <= 1e-15 * expected);

        let constant = separable_driver(SpectralElement::basis(2, 2), ScaleIndex::BASE, |_| 4.0);
        for n in 0..6 {
            assert!(dyadic_level(&constant, 0.0, 1.0, 1.0, n).unwrap().is_zero());
        }
    }

    #[test]
    fn horner_matches_direct_sum() {
        let x = separable_driver(SpectralElement::new(vec![1.0, -0.5, 0.25]).unwrap(), ScaleIndex::BASE, |t| {
            (5.0 * t).sin() + t * t
        });
        let (t, s, sp, n) = (0.8, 0.13, 0.71, 7);
        let v = dyadic_level(&x, s, sp, t, n).unwrap();
        let (lo, hi) = index_range(s, sp, t, n);
        let h = t / (1 << n) as f64;
        let mut direct = SpectralElement::zeros(3);
        for k in lo..hi {
            let dx = &x.eval((k + 1) as f64 * h).unwrap() - &x.eval(k as f64 * h).unwrap();
            direct.axpy(1.0, &semigroup_apply(t - k as f64 * h, &dx).unwrap());
        }
        for (a, b) in v.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn zero_driver() {
        let x = separable_driver(SpectralElement::zeros(3), ScaleIndex::BASE, |t| t);
        let r = convolve(&x, 1.0, &cfg()).unwrap();
        assert!(r.value.is_zero());
        assert!(r.level_increments.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_closed_forms() {
        let l = eigenvalue(1);
        let v = smooth_oracle(|_| SpectralElement::basis(3, 1), 1.0, 32);
        assert!((v.coeffs()[0] - (1.0 - (-l).exp()) / l).abs() < 1e-10);
        let v = smooth_oracle(|s| SpectralElement::basis(1, 1).scaled(s), 1.0, 32);
        let exact = 1.0 / l - (1.0 - (-l).exp()) / (l * l);
        assert!((v.coeffs()[0] - exact).abs() < 1e-8);
        assert!(smooth_oracle(|_| SpectralElement::zeros(2), 1.0, 8).is_zero());
    }

    #[test]
    fn sampled_driver_resolution() {
        let path = SampledPath::from_fn(1.0, 64, ScaleIndex::BASE, |t| SpectralElement::new(vec![t]).unwrap()).unwrap();
        let d = SampledDriver::new(&path).unwrap();
        assert_eq!(d.resolvable_level(0.0, 1.0).unwrap(), Some(6));
        assert_eq!(d.resolvable_level(0.0, 0.75).unwrap(), Some(4));
        assert_eq!(d.resolvable_level(0.25, 0.5).unwrap(), Some(5));
        assert!(d.resolvable_level(0.0, 0.3).is_err());
        assert!(matches!(dyadic_level(&d, 0.0, 1.0, 1.0, 7), Err(Error::GridIncompatible { .. })));
        let r = convolve(&d, 1.0, &cfg()).unwrap();
        assert_eq!(r.stop, StopReason::Resolution);
        assert_eq!(r.levels_used, 6);
    }

    #[test]
    fn grid_convolution_is_finest_level() {
        let times = uniform_times(1.0, 32);
        let path = SampledPath::from_fn(1.0, 32, ScaleIndex::BASE, |t| {
            SpectralElement::new(vec![t.sin(), t * t]).unwrap()
        })
        .unwrap();
        let g = grid_convolution(&path, ScaleIndex::BASE).unwrap();
        let d = SampledDriver::new(&path).unwrap();
        let direct = dyadic_level(&d, 0.0, 1.0, 1.0, 5).unwrap();
        let last = g.values().last().unwrap();
        for (a, b) in last.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(g.times(), times.as_slice());
    }

    #[test]
    fn non_convergence_carries_increments() {
        let mut c = cfg();
        c.max_level = 8;
        c.tol = 1e-14;
        match convolve(&linear_e1(), 1.0, &c) {
            Err(Error::NonConvergence { increments, .. }) => assert_eq!(increments.len(), 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rate_csv_format() {
        let rows = [RateRow {
            level: 3,
            increment_norm: 0.125,
            bound_rhs: 1.0,
        }];
        let mut buf = Vec::new();
        write_rate_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "level,increment_norm,bound_rhs\n3,0.125,1.0\n");
    }
}
