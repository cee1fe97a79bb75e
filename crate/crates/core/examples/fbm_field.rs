//! Spectral fBm noise fields: summability of the mode weights and a covariance audit.

use rough_mild::fbm_noise::{check_summability, covariance_audit, max_abs_z, noise_field, NoiseSpec, QRule};
use rough_mild::holder_paths::holder_seminorm;
use rough_mild::scale_space::ScaleIndex;

fn main() -> rough_mild::Result<()> {
    let spec = NoiseSpec {
        hurst: 0.75,
        q_rule: QRule::Power(0.2),
        mu: 0.1,
        n_modes: 16,
        time_steps: 1024,
        horizon: 1.0,
        seed: 7,
    };
    for probe in [0.2, 0.4, 0.6] {
        let s = check_summability(&spec.q_rule, 10_000, probe);
        println!("Σ (q_n/n^{probe})²: partial {:.4}, tail {:.4}, {:?}", s.partial_n, s.tail_estimate, s.verdict);
    }

    let alpha = ScaleIndex(-0.15);
    let x = noise_field(&spec, alpha)?;
    for gamma in [0.5, 0.7, 0.9] {
        println!("[X]_{gamma} in B_-0.15: {:.3}", holder_seminorm(&x, gamma, alpha)?.seminorm);
    }

    let small = NoiseSpec { n_modes: 2, ..spec };
    let audit = covariance_audit(&small, &[(0.25, 0.5), (0.5, 1.0), (1.0, 1.0)], 4000)?;
    for c in &audit {
        println!(
            "mode {} at {:?}: empirical {:.4}, exact {:.4}, z = {:+.2}",
            c.mode, c.pair, c.empirical, c.theoretical, c.z_score
        );
    }
    println!("largest |z| = {:.2}", max_abs_z(&audit));
    Ok(())
}
