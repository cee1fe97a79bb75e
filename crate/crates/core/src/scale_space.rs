//! The Dirichlet Laplacian `A = -d²/dx²` on `[0, 1]` in its sine eigenbasis.
//!
//! Elements are truncated coefficient vectors on the orthonormal basis
//! `ê_n(x) = √2 sin(2πnx)` with eigenvalues `λ_n = (2πn)²`. Every operator in
//! this module (fractional powers, the semigroup, the graded norms) is
//! diagonal in that basis and therefore exact on the truncated space.

use std::f64::consts::{E, PI, SQRT_2};
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// `λ_n = (2πn)²`.
pub fn eigenvalue(n: usize) -> f64 {
    assert!(n >= 1, "eigenvalue index starts at 1");
    let k = 2.0 * PI * n as f64;
    k * k
}

/// Order of a space in the scale `ℬ_α = Dom(A^α)`. Negative orders are allowed.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct ScaleIndex(pub f64);

impl ScaleIndex {
    pub const BASE: ScaleIndex = ScaleIndex(0.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("scale index must be finite, got {alpha}")));
        }
        Ok(ScaleIndex(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for ScaleIndex {
    fn from(alpha: f64) -> Self {
        ScaleIndex(alpha)
    }
}

/// Constants of the bound `‖S(t)‖ ≤ M e^{-λt}` and the smoothing envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemigroupConstants {
    pub m: f64,
    pub lambda: f64,
}

impl SemigroupConstants {
    /// The Dirichlet instance: contraction semigroup with spectral gap `λ_1`.
    pub fn dirichlet() -> Self {
        SemigroupConstants {
            m: 1.0,
            lambda: eigenvalue(1),
        }
    }

    /// `M_α` in `‖A^α S(t)‖ ≤ M_α t^{-α} e^{-λt}`.
    pub fn m_alpha(&self, alpha: f64) -> f64 {
        self.m * smoothing_envelope(alpha)
    }

    /// `C_α` in `‖S(t)x - x‖ ≤ C_α t^α ‖A^α x‖` for `0 < α ≤ 1`.
    pub fn c_alpha(&self, alpha: f64) -> f64 {
        debug_assert!(alpha > 0.0 && alpha <= 1.0);
        // sup_{u>0} (1 - e^{-u}) / u^α ≤ 1 for α ≤ 1
        1.0
    }
}

/// Truncated sine-series coefficients `c_1 … c_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralElement {
    coeffs: Vec<f64>,
}

impl SpectralElement {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("a spectral element needs at least one mode".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient c{} is not finite", i + 1)));
        }
        Ok(SpectralElement { coeffs })
    }

    pub fn zeros(n_modes: usize) -> Self {
        assert!(n_modes >= 1);
        SpectralElement {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// The basis vector `ê_k` (1-based) in an `n_modes`-dimensional space.
    pub fn basis(n_modes: usize, k: usize) -> Self {
        assert!(k >= 1 && k <= n_modes, "basis index {k} outside 1..={n_modes}");
        let mut e = Self::zeros(n_modes);
        e.coeffs[k - 1] = 1.0;
        e
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        SpectralElement { coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        SpectralElement {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &SpectralElement) {
        assert_eq!(self.n_modes(), x.n_modes(), "mode count mismatch");
        for (c, xc) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += a * xc;
        }
    }

    /// Euclidean inner product of coefficients (the `L²(0,1)` product).
    pub fn dot(&self, other: &SpectralElement) -> f64 {
        assert_eq!(self.n_modes(), other.n_modes(), "mode count mismatch");
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Pads with zeros or drops trailing modes.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n_modes.max(1), 0.0);
        SpectralElement { coeffs }
    }
}

impl Add for &SpectralElement {
    type Output = SpectralElement;

    fn add(self, rhs: &SpectralElement) -> SpectralElement {
        assert_eq!(self.n_modes(), rhs.n_modes(), "mode count mismatch");
        SpectralElement {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralElement {
    type Output = SpectralElement;

    fn sub(self, rhs: &SpectralElement) -> SpectralElement {
        assert_eq!(self.n_modes(), rhs.n_modes(), "mode count mismatch");
        SpectralElement {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &SpectralElement {
    type Output = SpectralElement;

    fn neg(self) -> SpectralElement {
        self.scaled(-1.0)
    }
}

/// Weights `λ_n^α`, `n = 1..=N`. Fails if the largest weight leaves the double range.
pub fn power_weights(alpha: f64, n_modes: usize) -> Result<Vec<f64>> {
    let weights: Vec<f64> = (1..=n_modes).map(|n| eigenvalue(n).powf(alpha)).collect();
    // a zero weight means α·ln λ_n underflowed, which silently destroys the element
    if let Some(n) = weights.iter().position(|w| !w.is_finite() || *w == 0.0) {
        return Err(Error::Range(format!(
            "λ_{}^{alpha} is not representable in double precision",
            n + 1
        )));
    }
    Ok(weights)
}

/// `A^α x`: `c_n ↦ λ_n^α c_n`.
pub fn frac_power_apply(alpha: ScaleIndex, x: &SpectralElement) -> Result<SpectralElement> {
    if alpha.0 == 0.0 {
        return Ok(x.clone());
    }
    let weights = power_weights(alpha.0, x.n_modes())?;
    let coeffs: Vec<f64> = x.coeffs.iter().zip(&weights).map(|(c, w)| c * w).collect();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Range(format!("A^{} overflows on this element", alpha.0)));
    }
    Ok(SpectralElement { coeffs })
}

/// `S(t) x`: `c_n ↦ e^{-λ_n t} c_n`.
pub fn semigroup_apply(t: f64, x: &SpectralElement) -> Result<SpectralElement> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("semigroup time must be finite and ≥ 0, got {t}")));
    }
    let mut y = x.clone();
    semigroup_in_place(t, &mut y.coeffs);
    Ok(y)
}

pub(crate) fn semigroup_in_place(t: f64, coeffs: &mut [f64]) {
    if t == 0.0 {
        return;
    }
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c *= decay(eigenvalue(i + 1), t);
    }
}

/// `e^{-λt}` with the rounding error of `λt` folded back in, so composing
/// `S(s)S(t)` agrees with `S(s+t)` to a few ulps even for large `λt`.
pub(crate) fn decay(lambda: f64, t: f64) -> f64 {
    let p = lambda * t;
    let err = lambda.mul_add(t, -p);
    (-p).exp() * (1.0 - err)
}

/// `‖x‖_{ℬ_α} = (Σ λ_n^{2α} c_n²)^{1/2}`.
pub fn norm_alpha(alpha: ScaleIndex, x: &SpectralElement) -> f64 {
    weighted_norm(x.coeffs.iter().enumerate().map(|(i, c)| c * eigenvalue(i + 1).powf(alpha.0)))
}

/// Overflow-safe Euclidean norm.
pub(crate) fn weighted_norm(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let scale = values.clone().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * values.map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// `(α/e)^α = sup_{u>0} u^α e^{-u}`, with `0⁰ = 1`.
pub fn smoothing_envelope(alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        (alpha / E).powf(alpha)
    }
}

/// Exact operator norm `sup_{n ≤ N} λ_n^α e^{-λ_n t}` of `A^α S(t)` on the truncated space.
pub fn smoothing_norm(alpha: f64, t: f64, n_modes: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("smoothing norm needs t > 0, got {t}")));
    }
    Ok((1..=n_modes)
        .map(|n| {
            let lambda = eigenvalue(n);
            (alpha * lambda.ln() - lambda * t).exp()
        })
        .fold(0.0, f64::max))
}

/// Constant `E_δ` with `sup_x |u(x)| ≤ E_δ ‖u‖_{ℬ_δ}` on the first `n_modes` modes.
///
/// Finite uniformly in `N` when `δ > 1/4`; below that it depends on the truncation.
pub fn sup_norm_embedding(delta: f64, n_modes: usize) -> f64 {
    SQRT_2 * (1..=n_modes).map(|n| eigenvalue(n).powf(-2.0 * delta)).sum::<f64>().sqrt()
}

/// `Σ c_n ê_n(p)` at each point `p ∈ [0, 1]`.
pub fn grid_evaluate(x: &SpectralElement, points: &[f64]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("evaluation point {p} outside [0, 1]")));
            }
            // exact Dirichlet values; sin(2πn) is not exactly zero in floating point
            if p == 0.0 || p == 1.0 {
                return Ok(0.0);
            }
            Ok(x.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * SQRT_2 * (2.0 * PI * (i + 1) as f64 * p).sin())
                .sum())
        })
        .collect()
}

/// Discrete sine transform of the interior values `v_j = u(j/M)`, `j = 1..M-1`.
///
/// Exact for elements with at most `n_modes` modes as long as `M ≥ 2N + 2`.
pub fn grid_project(values: &[f64], n_modes: usize) -> Result<SpectralElement> {
    let grid = SineGrid::new(values.len() + 1, n_modes)?;
    grid.project(values)
}

/// Cached sine table for a uniform grid `x_j = j/M`, `j = 1..M-1`.
#[derive(Clone, Debug)]
pub struct SineGrid {
    intervals: usize,
    n_modes: usize,
    // row-major: mode n (0-based) × interior point j (0-based)
    table: Vec<f64>,
}

impl SineGrid {
    pub fn new(intervals: usize, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Domain("n_modes must be ≥ 1".into()));
        }
        let required = 2 * n_modes + 2;
        if intervals < required {
            return Err(Error::Aliasing {
                grid_points: intervals,
                n_modes,
                required,
            });
        }
        let interior = intervals - 1;
        let mut table = Vec::with_capacity(n_modes * interior);
        for n in 1..=n_modes {
            for j in 1..intervals {
                // reduce the phase mod M before scaling so large n·j stay accurate
                let phase = ((n * j) % intervals) as f64 / intervals as f64;
                table.push(SQRT_2 * (2.0 * PI * phase).sin());
            }
        }
        Ok(SineGrid {
            intervals,
            n_modes,
            table,
        })
    }

    /// Number of grid intervals `M`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn interior_points(&self) -> Vec<f64> {
        (1..self.intervals).map(|j| j as f64 / self.intervals as f64).collect()
    }

    fn row(&self, n: usize) -> &[f64] {
        let interior = self.intervals - 1;
        &self.table[n * interior..(n + 1) * interior]
    }

    /// Interior grid values of `x` (modes beyond the table are rejected).
    pub fn evaluate(&self, x: &SpectralElement) -> Result<Vec<f64>> {
        if x.n_modes() > self.n_modes {
            return Err(Error::Aliasing {
                grid_points: self.intervals,
                n_modes: x.n_modes(),
                required: 2 * x.n_modes() + 2,
            });
        }
        let mut out = vec![0.0; self.intervals - 1];
        for (n, &c) in x.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(self.row(n)) {
                *o += c * s;
            }
        }
        Ok(out)
    }

    pub fn project(&self, values: &[f64]) -> Result<SpectralElement> {
        if values.len() != self.intervals - 1 {
            return Err(Error::MismatchedGrids(format!(
                "expected {} interior values, got {}",
                self.intervals - 1,
                values.len()
            )));
        }
        let inv_m = 1.0 / self.intervals as f64;
        let coeffs = (0..self.n_modes)
            .map(|n| inv_m * self.row(n).iter().zip(values).map(|(s, v)| s * v).sum::<f64>())
            .collect();
        SpectralElement::new(coeffs)
    }
}
