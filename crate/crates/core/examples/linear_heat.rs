//! Linear stochastic heat equation with additive fBm noise, driven by a preset.

use rough_mild::config::RunConfig;
use rough_mild::heat_app::solve_linear_heat;
use rough_mild::scale_space::{norm_alpha, ScaleIndex};

fn main() -> rough_mild::Result<()> {
    let cfg = RunConfig::parse(include_str!("../presets/linear.cfg"), None)?;
    let report = solve_linear_heat(&cfg.noise, &cfg.budget)?;
    println!("Hölder-κ seminorm of the solution: {:.4}", report.holder_kappa);
    let delta = ScaleIndex(cfg.budget.delta);
    for (t, y) in report.solution.times().iter().zip(report.solution.values()).step_by(128) {
        println!("t = {t:.4}  |y|_δ = {:.5}  y_1 = {:+.5}", norm_alpha(delta, y), y.coeffs()[0]);
    }
    Ok(())
}
