//! Globally Lipschitz rank-one coefficient b(w)·Id: solutions run to long horizons.
//! With σ(0) = 0 the noise switches off as the state decays.

use rough_mild::fbm_noise::{noise_field, NoiseSpec, QRule};
use rough_mild::heat_app::{RankOneOperator, ScalarNonlinearity};
use rough_mild::nonlinear_solver::{picard_solve, SolverConfig};
use rough_mild::scale_space::{norm_alpha, ScaleIndex, SpectralElement};

fn main() -> rough_mild::Result<()> {
    let n = 8;
    let spec = NoiseSpec {
        hurst: 0.75,
        q_rule: QRule::Power(0.2),
        mu: 0.1,
        n_modes: n,
        time_steps: 2048,
        horizon: 4.0,
        seed: 3,
    };
    let cfg = SolverConfig::new(0.72, 0.15, 0.2, 0.31, -0.15);
    let x = noise_field(&spec, cfg.noise_scale())?;
    let b = RankOneOperator::new(ScalarNonlinearity::sin(), &SpectralElement::basis(n, 1), 32, cfg.delta)?;
    let y0 = SpectralElement::basis(n, 1).scaled(0.8);
    let report = picard_solve(&y0, &x, &b, None, spec.horizon, &cfg)?;
    println!("{} windows, exploded {}", report.windows.len(), report.exploded);
    let delta = ScaleIndex(cfg.delta);
    for (t, y) in report.solution.times().iter().zip(report.solution.values()).step_by(256) {
        println!("t = {t:.3}  |y|_δ = {:.3e}  b(y) = {:+.3e}", norm_alpha(delta, y), b.functional(y));
    }
    Ok(())
}
