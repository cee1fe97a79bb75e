//! Dyadic approximation of the convolution ∫ S(t-r) dX(r) against a quadrature oracle.

use rough_mild::mild_convolution::{convolve, separable_driver, smooth_oracle, DyadicConvolutionConfig};
use rough_mild::scale_space::{norm_alpha, ScaleIndex, SpectralElement};

fn main() -> rough_mild::Result<()> {
    let profile = SpectralElement::new(vec![1.0, -0.5, 0.25])?;
    let x = separable_driver(profile.clone(), ScaleIndex(-0.1), |t| t * t);
    let cfg = DyadicConvolutionConfig::new(0.1, 0.9, 0.2, 0.3, 16, 1e-4)?;
    let r = convolve(&x, 1.0, &cfg)?;
    for (n, inc) in r.level_increments.iter().enumerate() {
        println!("level {n:>2}: |A^δ(S^(n+1) - S^n)| = {inc:.3e}");
    }
    let oracle = smooth_oracle(|s| profile.scaled(2.0 * s), 1.0, 16);
    let err = norm_alpha(ScaleIndex(0.2), &(&r.value - &oracle)) / norm_alpha(ScaleIndex(0.2), &oracle);
    println!("stopped at level {} ({:?}), slope {:?}", r.levels_used, r.stop, r.rate_slope);
    println!("relative error against the oracle: {err:.2e}");
    Ok(())
}
