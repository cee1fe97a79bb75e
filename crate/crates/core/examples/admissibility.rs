//! Regularity bookkeeping: which parameter budgets the linear and nonlinear theory admit.

use rough_mild::config::RunConfig;
use rough_mild::heat_app::check_conditions;

fn main() -> rough_mild::Result<()> {
    let cfg = RunConfig::parse(include_str!("../presets/nonlinear.cfg"), None)?;
    println!("{}", check_conditions(&cfg.budget));

    for hurst in [0.5, 0.6, 0.9] {
        let budget = rough_mild::heat_app::RegularityBudget { hurst, ..cfg.budget };
        let r = check_conditions(&budget);
        println!(
            "H = {hurst}: linear {}, nonlinear {}, run {}",
            r.linear_admissible(),
            r.nonlinear_admissible(),
            r.run_admissible()
        );
    }
    Ok(())
}
