//! Time-sampled paths with values in a scale space, and their Hölder regularity.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scale_space::{eigenvalue, ScaleIndex, SpectralElement};
use crate::stats;

/// Paths with more points than this use dyadic lags only in [`holder_seminorm`].
pub const ALL_PAIRS_MAX_INTERVALS: usize = 2048;

const UNIFORM_REL_TOL: f64 = 1e-9;

/// Values `Y(t_0), …, Y(t_M)` on a strictly increasing grid starting at `t_0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<SpectralElement>,
    scale: ScaleIndex,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<SpectralElement>, scale: ScaleIndex) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::MismatchedGrids(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Domain("a path needs at least two time points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain(format!("paths start at t = 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Domain(format!(
                "times must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        let n = values[0].n_modes();
        if values.iter().any(|v| v.n_modes() != n) {
            return Err(Error::MismatchedGrids("values have differing mode counts".into()));
        }
        Ok(SampledPath {
            times,
            values,
            scale,
        })
    }

    /// Uniform grid `t_k = k·horizon/(len-1)`.
    pub fn uniform(horizon: f64, values: Vec<SpectralElement>, scale: ScaleIndex) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        let steps = values.len().saturating_sub(1).max(1);
        let times = uniform_times(horizon, steps);
        Self::new(times, values, scale)
    }

    /// Samples `f` on a uniform grid with `steps` intervals.
    pub fn from_fn(
        horizon: f64,
        steps: usize,
        scale: ScaleIndex,
        f: impl Fn(f64) -> SpectralElement,
    ) -> Result<Self> {
        let times = uniform_times(horizon, steps);
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values, scale)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[SpectralElement] {
        &self.values
    }

    pub fn into_values(self) -> Vec<SpectralElement> {
        self.values
    }

    pub fn scale(&self) -> ScaleIndex {
        self.scale
    }

    pub fn with_scale(mut self, scale: ScaleIndex) -> Self {
        self.scale = scale;
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.values[0].n_modes()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Common step if the grid is uniform.
    pub fn uniform_step(&self) -> Option<f64> {
        let h = self.horizon() / (self.len() - 1) as f64;
        let uniform = self
            .times
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - k as f64 * h).abs() <= UNIFORM_REL_TOL * self.horizon());
        uniform.then_some(h)
    }

    /// `f(t_i, t_j) = f(t_j) - f(t_i)`.
    pub fn increment(&self, i: usize, j: usize) -> Result<SpectralElement> {
        let len = self.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        if i > j {
            return Err(Error::Domain(format!("increment needs i ≤ j, got ({i}, {j})")));
        }
        Ok(&self.values[j] - &self.values[i])
    }

    /// The piece on `[t_start, t_end]` re-based to start at time zero.
    pub fn window(&self, start: usize, end: usize) -> Result<SampledPath> {
        if end >= self.len() || start >= end {
            return Err(Error::IndexOutOfRange {
                index: end,
                len: self.len(),
            });
        }
        let t0 = self.times[start];
        Ok(SampledPath {
            times: self.times[start..=end].iter().map(|t| t - t0).collect(),
            values: self.values[start..=end].to_vec(),
            scale: self.scale,
        })
    }

    /// Every `stride`-th point, keeping the first.
    pub fn subsample(&self, stride: usize) -> Result<SampledPath> {
        if stride == 0 || (self.len() - 1) % stride != 0 {
            return Err(Error::UnsupportedGrid(format!(
                "stride {stride} does not divide {} intervals",
                self.len() - 1
            )));
        }
        Ok(SampledPath {
            times: self.times.iter().step_by(stride).copied().collect(),
            values: self.values.iter().step_by(stride).cloned().collect(),
            scale: self.scale,
        })
    }

    pub fn scaled(&self, a: f64) -> SampledPath {
        SampledPath {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v.scaled(a)).collect(),
            scale: self.scale,
        }
    }

    /// `a·self + b·other` on a shared grid.
    pub fn linear_combination(&self, a: f64, other: &SampledPath, b: f64) -> Result<SampledPath> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| {
                let mut z = x.scaled(a);
                z.axpy(b, y);
                z
            })
            .collect();
        Ok(SampledPath {
            times: self.times.clone(),
            values,
            scale: self.scale,
        })
    }

    pub fn difference(&self, other: &SampledPath) -> Result<SampledPath> {
        self.linear_combination(1.0, other, -1.0)
    }

    pub(crate) fn check_same_grid(&self, other: &SampledPath) -> Result<()> {
        if self.times != other.times {
            return Err(Error::MismatchedGrids("paths live on different time grids".into()));
        }
        if self.n_modes() != other.n_modes() {
            return Err(Error::MismatchedGrids(format!(
                "{} modes vs {} modes",
                self.n_modes(),
                other.n_modes()
            )));
        }
        Ok(())
    }

    /// `sup_k ‖Y(t_k)‖` measured in `scale`.
    pub fn sup_norm(&self, scale: ScaleIndex) -> f64 {
        self.values
            .iter()
            .map(|v| crate::scale_space::norm_alpha(scale, v))
            .fold(0.0, f64::max)
    }

    /// Writes `t,c1,...,cN` rows with round-trip float formatting and LF endings.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_modes()).map(|n| format!("c{n}")));
        w.write_record(&header)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            let mut row = vec![format_float(*t)];
            row.extend(v.coeffs().iter().map(|c| format_float(*c)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`SampledPath::write_csv`].
    pub fn read_csv<R: Read>(reader: R, scale: ScaleIndex) -> Result<SampledPath> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(Error::Parse("expected header `t,c1,...,cN`".into()));
        }
        for (k, h) in headers.iter().skip(1).enumerate() {
            if h != format!("c{}", k + 1) {
                return Err(Error::Parse(format!("unexpected column `{h}`")));
            }
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let nums = record
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            times.push(nums[0]);
            values.push(SpectralElement::new(nums[1..].to_vec())?);
        }
        SampledPath::new(times, values, scale)
    }
}

pub(crate) fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
    let h = horizon / steps as f64;
    (0..=steps).map(|k| if k == steps { horizon } else { k as f64 * h }).collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Discrete Hölder seminorm and the pair attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderReport {
    pub seminorm: f64,
    pub argmax_pair: (f64, f64),
}

/// Empirical Hölder exponent from a log-log fit of mean increment norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    /// `None` when every increment vanishes.
    pub exponent: Option<f64>,
    pub fit_residual: f64,
}

fn weighted_values(path: &SampledPath, measured_in: ScaleIndex) -> Vec<f64> {
    let n = path.n_modes();
    let weights: Vec<f64> = (1..=n).map(|k| eigenvalue(k).powf(measured_in.0)).collect();
    let mut flat = Vec::with_capacity(n * path.len());
    for v in path.values() {
        flat.extend(v.coeffs().iter().zip(&weights).map(|(c, w)| c * w));
    }
    flat
}

fn diff_norm(flat: &[f64], n: usize, i: usize, j: usize) -> f64 {
    let a = &flat[i * n..(i + 1) * n];
    let b = &flat[j * n..(j + 1) * n];
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
}

/// `max ‖f(t_i, t_j)‖_{measured_in} / (t_j - t_i)^γ` over grid pairs.
///
/// All pairs are used up to [`ALL_PAIRS_MAX_INTERVALS`] intervals; beyond that
/// only pairs `(i, i + 2^k)`, which can only under-estimate the all-pairs value.
pub fn holder_seminorm(path: &SampledPath, gamma: f64, measured_in: ScaleIndex) -> Result<HolderReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("Hölder exponent must lie in (0, 1), got {gamma}")));
    }
    Ok(seminorm_unchecked(path, gamma, measured_in))
}

/// Same as [`holder_seminorm`] without the `γ ∈ (0,1)` restriction (used for `γ ≥ 1` probes).
pub(crate) fn seminorm_unchecked(path: &SampledPath, gamma: f64, measured_in: ScaleIndex) -> HolderReport {
    let n = path.n_modes();
    let flat = weighted_values(path, measured_in);
    let times = path.times();
    let len = path.len();
    let mut best = HolderReport {
        seminorm: 0.0,
        argmax_pair: (times[0], times[1]),
    };
    let mut consider = |i: usize, j: usize| {
        let d = diff_norm(&flat, n, i, j);
        if d == 0.0 {
            return;
        }
        let q = d / (times[j] - times[i]).powf(gamma);
        if q > best.seminorm {
            best = HolderReport {
                seminorm: q,
                argmax_pair: (times[i], times[j]),
            };
        }
    };
    if len - 1 <= ALL_PAIRS_MAX_INTERVALS {
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
    best
}

/// Slope of `log(mean ‖f(t, t+ℓh)‖)` against `log(ℓh)` over dyadic lags `ℓ ≤ M/4`.
pub fn holder_exponent_estimate(path: &SampledPath, measured_in: ScaleIndex) -> Result<ExponentFit> {
    if path.len() < 33 {
        return Err(Error::UnsupportedGrid(format!(
            "exponent estimation needs at least 33 points, got {}",
            path.len()
        )));
    }
    let h = path
        .uniform_step()
        .ok_or_else(|| Error::UnsupportedGrid("exponent estimation needs a uniform grid".into()))?;
    let n = path.n_modes();
    let flat = weighted_values(path, measured_in);
    let intervals = path.len() - 1;
    let mut log_lag = Vec::new();
    let mut log_mean = Vec::new();
    let mut lag = 1;
    while lag <= intervals / 4 {
        let count = path.len() - lag;
        let mean = (0..count).map(|i| diff_norm(&flat, n, i, i + lag)).sum::<f64>() / count as f64;
        if mean > 0.0 {
            log_lag.push((lag as f64 * h).ln());
            log_mean.push(mean.ln());
        }
        lag *= 2;
    }
    Ok(match stats::ols(&log_lag, &log_mean) {
        Some(fit) => ExponentFit {
            exponent: Some(fit.slope),
            fit_residual: fit.residual,
        },
        None => ExponentFit {
            exponent: None,
            fit_residual: 0.0,
        },
    })
}
