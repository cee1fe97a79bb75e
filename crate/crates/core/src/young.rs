//! Young integrals `∫ H dX` of operator-valued paths against Hölder drivers.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::holder_paths::{self, SampledPath};
use crate::scale_space::{power_weights, ScaleIndex, SineGrid, SpectralElement};

/// A linear map between truncated spectral spaces, applied lazily.
pub trait LinearMap: Send + Sync {
    fn apply(&self, x: &SpectralElement) -> SpectralElement;

    fn n_modes(&self) -> usize;

    /// `Some(c)` when the map is `c·Id`; lets norms and sums skip materialization.
    fn as_scaled_identity(&self) -> Option<f64> {
        None
    }
}

impl fmt::Debug for dyn LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_scaled_identity() {
            Some(c) => write!(f, "{c}·Id[{}]", self.n_modes()),
            None => write!(f, "LinearMap[{}]", self.n_modes()),
        }
    }
}

/// `c·Id`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledIdentity {
    pub factor: f64,
    pub n_modes: usize,
}

impl ScaledIdentity {
    pub fn new(factor: f64, n_modes: usize) -> Self {
        ScaledIdentity { factor, n_modes }
    }
}

impl LinearMap for ScaledIdentity {
    fn apply(&self, x: &SpectralElement) -> SpectralElement {
        x.scaled(self.factor)
    }

    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn as_scaled_identity(&self) -> Option<f64> {
        Some(self.factor)
    }
}

/// Pseudo-spectral multiplication `φ ↦ P[w·φ]` by a function sampled on a sine grid.
#[derive(Clone, Debug)]
pub struct Multiplication {
    grid: Arc<SineGrid>,
    weights: Vec<f64>,
}

impl Multiplication {
    pub fn new(grid: Arc<SineGrid>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() + 1 != grid.intervals() {
            return Err(Error::MismatchedGrids(format!(
                "{} weights for a grid with {} interior points",
                weights.len(),
                grid.intervals() - 1
            )));
        }
        Ok(Multiplication { grid, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl LinearMap for Multiplication {
    fn apply(&self, x: &SpectralElement) -> SpectralElement {
        let mut v = self.grid.evaluate(x).expect("element matches grid modes");
        for (a, w) in v.iter_mut().zip(&self.weights) {
            *a *= w;
        }
        self.grid.project(&v).expect("grid size fixed at construction")
    }

    fn n_modes(&self) -> usize {
        self.grid.n_modes()
    }

    fn as_scaled_identity(&self) -> Option<f64> {
        let first = self.weights[0];
        self.weights.iter().all(|&w| w == first).then_some(first)
    }
}

/// Operators `H(t_0), …, H(t_M)` mapping `ℬ_{in_scale}` into `ℬ_{out_scale}`.
#[derive(Clone, Debug)]
pub struct OperatorPath {
    pub times: Vec<f64>,
    pub operators: Vec<Arc<dyn LinearMap>>,
    pub holder_exponent_hint: f64,
    pub in_scale: ScaleIndex,
    pub out_scale: ScaleIndex,
}

impl OperatorPath {
    pub fn new(
        times: Vec<f64>,
        operators: Vec<Arc<dyn LinearMap>>,
        holder_exponent_hint: f64,
        in_scale: ScaleIndex,
        out_scale: ScaleIndex,
    ) -> Result<Self> {
        if times.len() != operators.len() || times.is_empty() {
            return Err(Error::MismatchedGrids(format!(
                "{} times but {} operators",
                times.len(),
                operators.len()
            )));
        }
        Ok(OperatorPath {
            times,
            operators,
            holder_exponent_hint,
            in_scale,
            out_scale,
        })
    }

    /// `s ↦ f(s)·Id` sampled on `times`.
    pub fn scalar(times: &[f64], n_modes: usize, hint: f64, f: impl Fn(f64) -> f64) -> Self {
        let operators = times
            .iter()
            .map(|&t| Arc::new(ScaledIdentity::new(f(t), n_modes)) as Arc<dyn LinearMap>)
            .collect();
        OperatorPath {
            times: times.to_vec(),
            operators,
            holder_exponent_hint: hint,
            in_scale: ScaleIndex::BASE,
            out_scale: ScaleIndex::BASE,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Pointwise `a·self + b·other`, kept lazy.
    pub fn linear_combination(&self, a: f64, other: &OperatorPath, b: f64) -> Result<OperatorPath> {
        if self.times != other.times {
            return Err(Error::MismatchedGrids("operator paths on different grids".into()));
        }
        let operators = self
            .operators
            .iter()
            .zip(&other.operators)
            .map(|(x, y)| {
                Arc::new(Combination {
                    a,
                    x: x.clone(),
                    b,
                    y: y.clone(),
                }) as Arc<dyn LinearMap>
            })
            .collect();
        Ok(OperatorPath {
            times: self.times.clone(),
            operators,
            holder_exponent_hint: self.holder_exponent_hint.min(other.holder_exponent_hint),
            in_scale: self.in_scale,
            out_scale: self.out_scale,
        })
    }
}

struct Combination {
    a: f64,
    x: Arc<dyn LinearMap>,
    b: f64,
    y: Arc<dyn LinearMap>,
}

impl LinearMap for Combination {
    fn apply(&self, v: &SpectralElement) -> SpectralElement {
        let mut out = self.x.apply(v).scaled(self.a);
        out.axpy(self.b, &self.y.apply(v));
        out
    }

    fn n_modes(&self) -> usize {
        self.x.n_modes()
    }

    fn as_scaled_identity(&self) -> Option<f64> {
        Some(self.a * self.x.as_scaled_identity()? + self.b * self.y.as_scaled_identity()?)
    }
}

/// `F(t)` on the driver's grid plus the unresolved-scale estimate.
#[derive(Clone, Debug)]
pub struct YoungResult {
    pub path: SampledPath,
    pub error_estimate: f64,
    /// Sewing constant `K_{α+γ}` used in the estimate.
    pub constant_used: f64,
}

/// `(1 - 2^{1-θ})^{-1}`.
pub fn sewing_constant(theta: f64) -> Result<f64> {
    if !(theta > 1.0) {
        return Err(Error::Domain(format!("sewing constant needs θ > 1, got {theta}")));
    }
    Ok(1.0 / (1.0 - 2f64.powf(1.0 - theta)))
}

fn check_common_grid(h: &OperatorPath, x: &SampledPath) -> Result<()> {
    if h.times.as_slice() != x.times() {
        return Err(Error::MismatchedGrids(
            "integrand and driver must share a time grid".into(),
        ));
    }
    Ok(())
}

/// Left-point sum `Σ H(s_i)(X(s_{i+1}) - X(s_i))` over grid indices `partition`.
pub fn riemann_sum(h: &OperatorPath, x: &SampledPath, partition: &[usize]) -> Result<SpectralElement> {
    check_common_grid(h, x)?;
    if partition.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("partition indices must increase".into()));
    }
    if let Some(&last) = partition.last() {
        if last >= x.len() {
            return Err(Error::IndexOutOfRange {
                index: last,
                len: x.len(),
            });
        }
    }
    let mut acc = SpectralElement::zeros(x.n_modes());
    for w in partition.windows(2) {
        let dx = x.increment(w[0], w[1])?;
        acc.axpy(1.0, &h.operators[w[0]].apply(&dx));
    }
    Ok(acc)
}

/// Prefix sums `F(t_k) = Σ_{i<k} H(t_i) X(t_i, t_{i+1})` over the full grid.
pub fn accumulate(h: &OperatorPath, x: &SampledPath) -> Result<SampledPath> {
    check_common_grid(h, x)?;
    let mut values = Vec::with_capacity(x.len());
    let mut acc = SpectralElement::zeros(x.n_modes());
    values.push(acc.clone());
    for i in 0..x.len() - 1 {
        let dx = &x.values()[i + 1] - &x.values()[i];
        acc.axpy(1.0, &h.operators[i].apply(&dx));
        values.push(acc.clone());
    }
    SampledPath::new(x.times().to_vec(), values, h.out_scale)
}

/// The integral on the finest common grid with the estimate
/// `K_{α+γ} H_γ(X) H_α(H) Δ^{α+γ-1} T` for the scales below the mesh `Δ`.
pub fn young_integral(h: &OperatorPath, x: &SampledPath, alpha: f64, gamma: f64) -> Result<YoungResult> {
    if !(alpha + gamma > 1.0) {
        return Err(Error::YoungAdmissibility { sum: alpha + gamma });
    }
    let path = accumulate(h, x)?;
    let k = sewing_constant(alpha + gamma)?;
    let hx = holder_paths::seminorm_unchecked(x, gamma, x.scale()).seminorm;
    let hh = operator_holder_seminorm(h, alpha, x.scale(), h.out_scale)?;
    let mesh = x
        .times()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let error_estimate = if hx == 0.0 || hh == 0.0 {
        0.0
    } else {
        k * hx * hh * mesh.powf(alpha + gamma - 1.0) * x.horizon()
    };
    Ok(YoungResult {
        path,
        error_estimate,
        constant_used: k,
    })
}

/// `|F_m(1) - 1/2|` for `F_m = Σ s_k (s_{k+1} - s_k)`, the left-point sums of
/// `∫_0^1 s ds` on `m = 2^level` cells, against the sewing estimate
/// `K_{α+γ} H_α(H) H_γ(X) m^{1-α-γ}` with measured seminorms (`α = γ = 0.9`).
pub fn scalar_rate_study(levels: std::ops::RangeInclusive<u32>) -> Result<Vec<crate::mild_convolution::RateRow>> {
    const EXPONENT: f64 = 0.9;
    let k = sewing_constant(2.0 * EXPONENT)?;
    levels
        .map(|level| {
            let m = 1usize << level;
            let x = SampledPath::from_fn(1.0, m, ScaleIndex(0.0), |t| SpectralElement::new(vec![t]).unwrap())?;
            let h = OperatorPath::scalar(x.times(), 1, EXPONENT, |s| s);
            let f = accumulate(&h, &x)?;
            let err = (f.values().last().unwrap().coeffs()[0] - 0.5).abs();
            let hx = holder_paths::seminorm_unchecked(&x, EXPONENT, x.scale()).seminorm;
            let hh = operator_holder_seminorm(&h, EXPONENT, x.scale(), x.scale())?;
            Ok(crate::mild_convolution::RateRow {
                level,
                increment_norm: err,
                bound_rhs: k * hh * hx * (m as f64).powf(1.0 - 2.0 * EXPONENT),
            })
        })
        .collect()
}

/// Operator norm `ℬ_in → ℬ_out` of `a - b`.
pub fn operator_difference_norm(
    a: &dyn LinearMap,
    b: &dyn LinearMap,
    in_scale: ScaleIndex,
    out_scale: ScaleIndex,
) -> Result<f64> {
    if let (Some(ca), Some(cb)) = (a.as_scaled_identity(), b.as_scaled_identity()) {
        return Ok((ca - cb).abs() * identity_gain(a.n_modes(), in_scale, out_scale)?);
    }
    let ma = materialize(a, in_scale, out_scale)?;
    let mb = materialize(b, in_scale, out_scale)?;
    Ok(spectral_norm(&(ma - mb)))
}

/// Norm of `Id: ℬ_in → ℬ_out` on the truncated space.
fn identity_gain(n_modes: usize, in_scale: ScaleIndex, out_scale: ScaleIndex) -> Result<f64> {
    let w = power_weights(out_scale.0 - in_scale.0, n_modes)?;
    Ok(w.into_iter().fold(0.0, f64::max))
}

/// Matrix of `A^{out} L A^{-in}` in the sine basis.
fn materialize(map: &dyn LinearMap, in_scale: ScaleIndex, out_scale: ScaleIndex) -> Result<DMatrix<f64>> {
    let n = map.n_modes();
    let w_in = power_weights(-in_scale.0, n)?;
    let w_out = power_weights(out_scale.0, n)?;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = map.apply(&SpectralElement::basis(n, j + 1));
        for i in 0..n {
            m[(i, j)] = w_out[i] * col.coeffs()[i] * w_in[j];
        }
    }
    Ok(m)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Paths with more intervals than this use dyadic lags in [`operator_holder_seminorm`].
const OPERATOR_ALL_PAIRS_MAX_INTERVALS: usize = 256;

/// Discrete `H_α(H)` in the operator norm `ℬ_in → ℬ_out`.
///
/// Scalar-identity paths are exact over all pairs; general paths are materialized
/// once per time and use all pairs on short grids, dyadic lags otherwise.
pub fn operator_holder_seminorm(
    h: &OperatorPath,
    alpha: f64,
    in_scale: ScaleIndex,
    out_scale: ScaleIndex,
) -> Result<f64> {
    let n = h.operators[0].n_modes();
    let scalars: Option<Vec<f64>> = h.operators.iter().map(|o| o.as_scaled_identity()).collect();
    if let Some(c) = scalars {
        let gain = identity_gain(n, in_scale, out_scale)?;
        let values = c
            .into_iter()
            .map(|v| SpectralElement::new(vec![v]))
            .collect::<Result<Vec<_>>>()?;
        let p = SampledPath::new(h.times.clone(), values, ScaleIndex::BASE)?;
        return Ok(gain * holder_paths::seminorm_unchecked(&p, alpha, ScaleIndex::BASE).seminorm);
    }
    let mats = h
        .operators
        .iter()
        .map(|o| materialize(o.as_ref(), in_scale, out_scale))
        .collect::<Result<Vec<_>>>()?;
    let len = mats.len();
    let mut best = 0.0f64;
    let mut consider = |i: usize, j: usize| {
        let d = spectral_norm(&(&mats[j] - &mats[i]));
        if d > 0.0 {
            best = best.max(d / (h.times[j] - h.times[i]).powf(alpha));
        }
    };
    if len - 1 <= OPERATOR_ALL_PAIRS_MAX_INTERVALS {
        for i in 0..len {
            for j in i + 1..len {
                consider(i, j);
            }
        }
    } else {
        let mut lag = 1;
        while lag < len {
            for i in 0..len - lag {
                consider(i, i + lag);
            }
            lag *= 2;
        }
    }
    Ok(best)
}

/// Largest relative defect of `L(ax + by) = aL(x) + bL(y)` over random draws.
pub fn linearity_probe(map: &dyn LinearMap, rng: &mut impl Rng, trials: usize) -> f64 {
    let n = map.n_modes();
    let draw = |rng: &mut dyn rand::RngCore| {
        SpectralElement::from_vec_unchecked((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = draw(rng);
        let y = draw(rng);
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        let mut combo = x.scaled(a);
        combo.axpy(b, &y);
        let lhs = map.apply(&combo);
        let mut rhs = map.apply(&x).scaled(a);
        rhs.axpy(b, &map.apply(&y));
        let scale = lhs.dot(&lhs).sqrt().max(rhs.dot(&rhs).sqrt()).max(1e-300);
        let diff = &lhs - &rhs;
        worst = worst.max(diff.dot(&diff).sqrt() / scale);
    }
    worst
}
