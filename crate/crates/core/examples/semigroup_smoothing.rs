//! Smoothing of the heat semigroup: ‖A^α S(t)‖ against its envelope c_α t^{-α}.

use rough_mild::scale_space::{norm_alpha, semigroup_apply, smoothing_envelope, smoothing_norm, ScaleIndex, SpectralElement};

fn main() -> rough_mild::Result<()> {
    println!("{:>6} {:>10} {:>14} {:>14}", "alpha", "t", "norm", "envelope");
    for alpha in [0.25, 0.5, 1.0] {
        for t in [1e-4, 1e-3, 1e-2, 1e-1] {
            let norm = smoothing_norm(alpha, t, 512)?;
            let bound = smoothing_envelope(alpha) * t.powf(-alpha);
            println!("{alpha:>6} {t:>10.0e} {norm:>14.6e} {bound:>14.6e}");
        }
    }

    // a rough profile with slowly decaying coefficients gains regularity instantly
    let rough = SpectralElement::new((1..=256).map(|n| 1.0 / n as f64).collect())?;
    for t in [0.0, 1e-4, 1e-2] {
        let y = semigroup_apply(t, &rough)?;
        println!("t = {t:<6} |y|_0 = {:.4}  |y|_0.5 = {:.4}", norm_alpha(ScaleIndex(0.0), &y), norm_alpha(ScaleIndex(0.5), &y));
    }
    Ok(())
}
