//! Cylindrical fractional noise `X(t) = Σ_n q_n Ŵⁿ(t) ê_n` with independent
//! fractional Brownian motions `Ŵⁿ` of a common Hurst index.
//!
//! Sampling is exact on the grid: Hosking's recursion (the Cholesky factor of the
//! increment covariance, built by Durbin–Levinson) up to [`FACTORIZATION_MAX_STEPS`]
//! steps, circulant embedding above.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::holder_paths::{uniform_times, SampledPath};
use crate::scale_space::{ScaleIndex, SpectralElement};
use crate::stats;

/// Grids up to this many steps are sampled by exact factorization.
pub const FACTORIZATION_MAX_STEPS: usize = 4096;

/// Added to a non-positive prediction variance before continuing.
pub const JITTER: f64 = 1e-12;

/// `½(t^{2H} + s^{2H} - |t-s|^{2H})`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let p = 2.0 * hurst;
    0.5 * (t.abs().powf(p) + s.abs().powf(p) - (t - s).abs().powf(p))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let p = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).abs().powf(p))
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`: `mix64(master ⊕ index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMethod {
    Factorization,
    CirculantEmbedding,
}

impl SamplingMethod {
    pub fn for_steps(steps: usize) -> Self {
        if steps <= FACTORIZATION_MAX_STEPS {
            SamplingMethod::Factorization
        } else {
            SamplingMethod::CirculantEmbedding
        }
    }
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Domain(format!("Hurst index must lie in (0, 1), got {hurst}")));
    }
    Ok(())
}

/// One path `Ŵ(t_0) = 0, Ŵ(t_1), …, Ŵ(t_M)` on the uniform grid `t_k = k·horizon/M`.
pub fn fbm_sample(hurst: f64, steps: usize, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    fbm_sample_with(hurst, steps, horizon, seed, SamplingMethod::for_steps(steps))
}

pub fn fbm_sample_with(hurst: f64, steps: usize, horizon: f64, seed: u64, method: SamplingMethod) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    if steps == 0 || !(horizon > 0.0) {
        return Err(Error::Domain(format!(
            "need at least one step and a positive horizon, got {steps} steps on {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = match method {
        SamplingMethod::Factorization => hosking_fgn(hurst, steps, &mut rng),
        SamplingMethod::CirculantEmbedding => circulant_fgn(hurst, steps, &mut rng),
    };
    let scale = (horizon / steps as f64).powf(hurst);
    let mut path = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    path.push(0.0);
    for g in noise {
        acc += g * scale;
        path.push(acc);
    }
    Ok(path)
}

/// Unit-spacing fractional Gaussian noise by Durbin–Levinson prediction.
fn hosking_fgn(hurst: f64, steps: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gamma: Vec<f64> = (0..=steps).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut out = Vec::with_capacity(steps);
    let mut phi: Vec<f64> = Vec::with_capacity(steps);
    let mut prev_phi: Vec<f64> = Vec::with_capacity(steps);
    let mut v = gamma[0];
    let z: f64 = StandardNormal.sample(rng);
    out.push(z * v.sqrt());
    for n in 1..steps {
        // update prediction coefficients φ_{n,1..n}
        let num = gamma[n] - prev_phi.iter().enumerate().map(|(j, p)| p * gamma[n - 1 - j]).sum::<f64>();
        let k = num / v;
        phi.clear();
        for j in 0..n - 1 {
            phi.push(prev_phi[j] - k * prev_phi[n - 2 - j]);
        }
        phi.push(k);
        v *= 1.0 - k * k;
        if !(v > 0.0) {
            log::warn!("fGn prediction variance {v:e} at step {n}; adding jitter {JITTER:e}");
            v = JITTER;
        }
        let mean: f64 = phi.iter().enumerate().map(|(j, p)| p * out[n - 1 - j]).sum();
        let z: f64 = StandardNormal.sample(rng);
        out.push(mean + z * v.sqrt());
        std::mem::swap(&mut phi, &mut prev_phi);
    }
    out
}

/// Unit-spacing fractional Gaussian noise by circulant embedding (Davies–Harte).
fn circulant_fgn(hurst: f64, steps: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = 2 * steps;
    let mut c: Vec<Complex64> = (0..m)
        .map(|j| {
            let k = if j <= steps { j } else { m - j };
            Complex64::new(fgn_autocovariance(hurst, k), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut c);
    let mut negative = 0usize;
    let mut w: Vec<Complex64> = c
        .iter()
        .map(|l| {
            let mut lambda = l.re;
            if lambda < 0.0 {
                negative += 1;
                lambda = JITTER;
            }
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            Complex64::new(a, b) * (lambda / m as f64).sqrt()
        })
        .collect();
    if negative > 0 {
        log::warn!("circulant embedding had {negative} negative eigenvalues; replaced by jitter {JITTER:e}");
    }
    fft.process(&mut w);
    w.iter().take(steps).map(|z| z.re).collect()
}

/// Rule for the spatial coefficients `q_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum QRule {
    /// `q_n = 1`.
    Constant,
    /// `q_n = n^{-a}`.
    Power(f64),
    /// Explicit values; modes beyond the list get zero.
    Values(Arc<Vec<f64>>),
}

impl QRule {
    pub fn q(&self, n: usize) -> f64 {
        match self {
            QRule::Constant => 1.0,
            QRule::Power(a) => (n as f64).powf(-a),
            QRule::Values(v) => v.get(n - 1).copied().unwrap_or(0.0),
        }
    }

    /// `const`, `pow:a`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "const" {
            return Ok(QRule::Constant);
        }
        if let Some(a) = s.strip_prefix("pow:") {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("q rule exponent `{a}`: {e}")))?;
            if !(a >= 0.0) {
                return Err(Error::InvalidConfig(format!("q rule exponent must be ≥ 0, got {a}")));
            }
            return Ok(QRule::Power(a));
        }
        Err(Error::Parse(format!("unknown q rule `{s}` (expected const or pow:a)")))
    }

    /// One value per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("q value `{l}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("q values must be finite".into()));
        }
        Ok(QRule::Values(Arc::new(values)))
    }
}

/// Everything that determines one sample of the noise field.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub hurst: f64,
    pub q_rule: QRule,
    pub mu: f64,
    pub n_modes: usize,
    pub time_steps: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        check_hurst(self.hurst)?;
        if self.n_modes == 0 {
            return Err(Error::InvalidConfig("at least one mode is required".into()));
        }
        if !self.time_steps.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "time steps must be a power of two, got {}",
                self.time_steps
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidConfig(format!("decay index μ must be positive, got {}", self.mu)));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        uniform_times(self.horizon, self.time_steps)
    }

    pub fn mode_seed(&self, n: usize) -> u64 {
        derive_seed(self.seed, n as u64)
    }
}

/// The field with coefficient `q_n Ŵⁿ(t)` in mode `n`, declared to live in `scale`.
pub fn noise_field(spec: &NoiseSpec, scale: ScaleIndex) -> Result<SampledPath> {
    spec.validate()?;
    let modes = (1..=spec.n_modes)
        .into_par_iter()
        .map(|n| {
            let q = spec.q_rule.q(n);
            if q == 0.0 {
                return Ok(vec![0.0; spec.time_steps + 1]);
            }
            let w = fbm_sample(spec.hurst, spec.time_steps, spec.horizon, spec.mode_seed(n))?;
            Ok(w.into_iter().map(|v| q * v).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let values = (0..=spec.time_steps)
        .map(|k| SpectralElement::new(modes.iter().map(|m| m[k]).collect()))
        .collect::<Result<Vec<_>>>()?;
    SampledPath::new(spec.times(), values, scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Diagnostic for `Σ_n (q_n / n^μ)² < ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummabilityReport {
    pub partial_n: f64,
    pub partial_4n: f64,
    /// Integral-test estimate of `Σ_{n>N}` (infinite when divergent).
    pub tail_estimate: f64,
    /// Decay exponent `p` with `(q_n/n^μ)² = n^{-p}`, when the rule is a power law.
    pub exponent: Option<f64>,
    pub verdict: Verdict,
}

/// Partial sums of `(q_n/n^μ)²` to `N` and `4N` with a verdict. Power-law rules are
/// decided by the exponent `p = 2(a+μ)`: `p ≤ 1` diverges, `p > 1.05` converges,
/// anything in between is too slow to call from partial sums. Explicit lists are
/// finite sums and reported as inconclusive.
pub fn check_summability(q_rule: &QRule, n_modes: usize, probe_mu: f64) -> SummabilityReport {
    let term = |n: usize| (q_rule.q(n) / (n as f64).powf(probe_mu)).powi(2);
    let partial_n: f64 = (1..=n_modes).map(term).sum();
    let partial_4n: f64 = partial_n + (n_modes + 1..=4 * n_modes).map(term).sum::<f64>();
    let exponent = match q_rule {
        QRule::Constant => Some(2.0 * probe_mu),
        QRule::Power(a) => Some(2.0 * (a + probe_mu)),
        QRule::Values(_) => None,
    };
    let (tail_estimate, verdict) = match exponent {
        Some(p) if p <= 1.0 => (f64::INFINITY, Verdict::Divergent),
        Some(p) => {
            let tail = (n_modes as f64).powf(1.0 - p) / (p - 1.0);
            (tail, if p > 1.05 { Verdict::Convergent } else { Verdict::Inconclusive })
        }
        None => (f64::NAN, Verdict::Inconclusive),
    };
    SummabilityReport {
        partial_n,
        partial_4n,
        tail_estimate,
        exponent,
        verdict,
    }
}

/// Empirical against theoretical covariance of one mode at one time pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceCheck {
    pub pair: (f64, f64),
    pub mode: usize,
    pub empirical: f64,
    pub theoretical: f64,
    pub z_score: f64,
    pub n_samples: usize,
}

/// Mode-wise covariance at each pair of grid times over `n_samples` independent
/// fields. Sample `j` of mode `n` uses seed `derive_seed(mode_seed(n), j)`.
pub fn covariance_audit(spec: &NoiseSpec, pairs: &[(f64, f64)], n_samples: usize) -> Result<Vec<CovarianceCheck>> {
    spec.validate()?;
    if n_samples < 100 {
        return Err(Error::InvalidConfig(format!("need at least 100 samples, got {n_samples}")));
    }
    let dt = spec.horizon / spec.time_steps as f64;
    let index = |t: f64| -> Result<usize> {
        let k = (t / dt).round();
        if (t / dt - k).abs() > 1e-9 || k < 0.0 || k as usize > spec.time_steps {
            return Err(Error::GridIncompatible {
                level: 0,
                detail: format!("audit time {t} is not on the noise grid"),
            });
        }
        Ok(k as usize)
    };
    let idx = pairs
        .iter()
        .map(|&(s, t)| Ok((index(s)?, index(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for n in 1..=spec.n_modes {
        let q = spec.q_rule.q(n);
        let base = spec.mode_seed(n);
        let paths = (0..n_samples)
            .into_par_iter()
            .map(|j| fbm_sample(spec.hurst, spec.time_steps, spec.horizon, derive_seed(base, j as u64)))
            .collect::<Result<Vec<_>>>()?;
        for (&(s, t), &(i, k)) in pairs.iter().zip(&idx) {
            let xs: Vec<f64> = paths.iter().map(|p| q * p[i]).collect();
            let ys: Vec<f64> = paths.iter().map(|p| q * p[k]).collect();
            let (empirical, se) = stats::mean_product_with_se(&xs, &ys);
            let theoretical = q * q * fbm_covariance(spec.hurst, s, t);
            let z_score = if se > 0.0 {
                (empirical - theoretical) / se
            } else if empirical == theoretical {
                0.0
            } else {
                f64::INFINITY
            };
            checks.push(CovarianceCheck {
                pair: (s, t),
                mode: n,
                empirical,
                theoretical,
                z_score,
                n_samples,
            });
        }
    }
    Ok(checks)
}

/// `max |z|` over an audit.
pub fn max_abs_z(checks: &[CovarianceCheck]) -> f64 {
    checks.iter().map(|c| c.z_score.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_formula() {
        assert_eq!(fbm_covariance(0.7, 0.0, 0.4), 0.0);
        assert!((fbm_covariance(0.7, 0.5, 1.0) - 0.5).abs() < 1e-15);
        let expected = 0.5 * (0.75f64.powf(1.6) + 0.25f64.powf(1.6) - 0.5f64.powf(1.6));
        assert!((fbm_covariance(0.8, 0.25, 0.75) - expected).abs() < 1e-15);
    }

    #[test]
    fn hosking_reproduces_brownian_scaling() {
        // H = 1/2 gives independent unit increments: φ ≡ 0 and v ≡ 1
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let g = hosking_fgn(0.5, 16, &mut a);
        let z: Vec<f64> = (0..16).map(|_| StandardNormal.sample(&mut b)).collect();
        for (x, y) in g.iter().zip(&z) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let a = fbm_sample(0.7, 64, 1.0, 11).unwrap();
        let b = fbm_sample(0.7, 64, 1.0, 11).unwrap();
        let c = fbm_sample(0.7, 64, 1.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a[0], 0.0);
        let d = fbm_sample_with(0.7, 64, 1.0, 11, SamplingMethod::CirculantEmbedding).unwrap();
        assert_eq!(d, fbm_sample_with(0.7, 64, 1.0, 11, SamplingMethod::CirculantEmbedding).unwrap());
    }

    #[test]
    fn zero_rule_gives_zero_field() {
        let spec = NoiseSpec {
            hurst: 0.7,
            q_rule: QRule::Values(Arc::new(vec![])),
            mu: 0.1,
            n_modes: 3,
            time_steps: 16,
            horizon: 1.0,
            seed: 1,
        };
        let f = noise_field(&spec, ScaleIndex(-0.2)).unwrap();
        assert!(f.values().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn q_rule_parsing() {
        assert_eq!(QRule::parse("const").unwrap(), QRule::Constant);
        assert_eq!(QRule::parse("pow:0.5").unwrap(), QRule::Power(0.5));
        assert!(QRule::parse("pow:-1").is_err());
        assert!(QRule::parse("exp:2").is_err());
        assert_eq!(QRule::Power(1.0).q(4), 0.25);
    }

    #[test]
    fn summability_verdicts() {
        assert_eq!(check_summability(&QRule::Constant, 100, 0.6).verdict, Verdict::Convergent);
        assert_eq!(check_summability(&QRule::Constant, 100, 0.5).verdict, Verdict::Divergent);
        assert_eq!(check_summability(&QRule::Power(1.0), 100, 0.1).verdict, Verdict::Convergent);
        assert_eq!(check_summability(&QRule::Constant, 100, 0.52).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn spec_validation() {
        let mut spec = NoiseSpec {
            hurst: 0.7,
            q_rule: QRule::Constant,
            mu: 0.1,
            n_modes: 2,
            time_steps: 12,
            horizon: 1.0,
            seed: 0,
        };
        assert!(spec.validate().is_err());
        spec.time_steps = 16;
        assert!(spec.validate().is_ok());
        spec.hurst = 1.0;
        assert!(spec.validate().is_err());
    }
}
