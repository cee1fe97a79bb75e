//! `run.cfg` files: `key = value` lines with `#` comments.
//!
//! Required keys are the regularity budget (`hurst`, `mu`, `gamma`, `alpha`,
//! `delta`, `kappa`, `rho`, `p`, `p_hat`) and the noise description
//! (`q_rule` or `q_file`, `n_modes`, `time_steps`, `horizon`, `seed`).
//! Optional solver keys: `tol`, `theta`, `max_iter`, `max_window`,
//! `grid_points` and `y0` (comma-separated initial coefficients).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fbm_noise::{NoiseSpec, QRule};
use crate::heat_app::RegularityBudget;
use crate::nonlinear_solver::SolverConfig;
use crate::scale_space::SpectralElement;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "ROUGH_MILD_SEED";

const KNOWN_KEYS: &[&str] = &[
    "hurst", "mu", "gamma", "alpha", "delta", "kappa", "rho", "p", "p_hat", "q_rule", "q_file", "n_modes",
    "time_steps", "horizon", "seed", "tol", "theta", "max_iter", "max_window", "grid_points", "y0",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub budget: RegularityBudget,
    pub noise: NoiseSpec,
    pub tol: Option<f64>,
    pub theta: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_window: Option<f64>,
    pub grid_points: Option<usize>,
    pub y0: Option<Vec<f64>>,
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!("line {}: unknown key `{key}`", i + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(map)
}

fn value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| Error::Parse(format!("`{key} = {v}`: {e}"))))
        .transpose()
}

fn required<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value(map, key)?.ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
}

impl RunConfig {
    /// Parses config text; a relative `q_file` is resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let map = parse_pairs(text)?;
        let q_rule = match (map.get("q_rule"), map.get("q_file")) {
            (Some(_), Some(_)) => return Err(Error::Parse("give either `q_rule` or `q_file`, not both".into())),
            (Some(r), None) => QRule::parse(r)?,
            (None, Some(f)) => {
                let path = Path::new(f);
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.to_path_buf(),
                };
                QRule::from_file(&path)?
            }
            (None, None) => return Err(Error::Parse("missing key `q_rule`".into())),
        };
        let budget = RegularityBudget {
            hurst: required(&map, "hurst")?,
            mu: required(&map, "mu")?,
            gamma: required(&map, "gamma")?,
            alpha: required(&map, "alpha")?,
            delta: required(&map, "delta")?,
            kappa: required(&map, "kappa")?,
            rho: required(&map, "rho")?,
            p: required(&map, "p")?,
            p_hat: required(&map, "p_hat")?,
        };
        let noise = NoiseSpec {
            hurst: budget.hurst,
            q_rule,
            mu: budget.mu,
            n_modes: required(&map, "n_modes")?,
            time_steps: required(&map, "time_steps")?,
            horizon: required(&map, "horizon")?,
            seed: required(&map, "seed")?,
        };
        let y0 = map
            .get("y0")
            .map(|v| {
                v.split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("y0 entry `{c}`: {e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        if let Some(y) = &y0 {
            if y.len() > noise.n_modes {
                return Err(Error::InvalidConfig(format!(
                    "y0 has {} coefficients but only {} modes",
                    y.len(),
                    noise.n_modes
                )));
            }
        }
        Ok(RunConfig {
            budget,
            noise,
            tol: value(&map, "tol")?,
            theta: value(&map, "theta")?,
            max_iter: value(&map, "max_iter")?,
            max_window: value(&map, "max_window")?,
            grid_points: value(&map, "grid_points")?,
            y0,
        })
    }

    /// Reads a file and applies the seed override from the environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text, path.parent())?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.noise.seed = seed
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("{SEED_ENV}=`{seed}`: {e}")))?;
        }
        Ok(cfg)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = self.budget.solver_config();
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.max_window {
            cfg.max_window = v;
        }
        cfg
    }

    /// Initial state padded with zeros to `n_modes`.
    pub fn initial_state(&self) -> Result<SpectralElement> {
        let mut c = self.y0.clone().unwrap_or_default();
        c.resize(self.noise.n_modes, 0.0);
        SpectralElement::new(c)
    }

    /// Collocation grid size, at least `2N + 2` and a power of two by default.
    pub fn grid_intervals(&self) -> usize {
        self.grid_points
            .unwrap_or_else(|| (2 * self.noise.n_modes + 2).next_power_of_two())
    }
}
