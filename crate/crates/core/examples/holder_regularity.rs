//! Discrete Hölder seminorms and exponent estimates for scalar fBm samples.

use rough_mild::fbm_noise::fbm_sample;
use rough_mild::holder_paths::{holder_exponent_estimate, holder_seminorm, SampledPath};
use rough_mild::scale_space::{ScaleIndex, SpectralElement};

fn main() -> rough_mild::Result<()> {
    for hurst in [0.3, 0.5, 0.75, 0.9] {
        let w = fbm_sample(hurst, 1 << 12, 1.0, 2024)?;
        let path = SampledPath::uniform(1.0, w.into_iter().map(|v| SpectralElement::new(vec![v])).collect::<Result<_, _>>()?, ScaleIndex(0.0))?;
        let fit = holder_exponent_estimate(&path, ScaleIndex(0.0))?;
        let below = holder_seminorm(&path, hurst - 0.1, ScaleIndex(0.0))?;
        println!(
            "H = {hurst:.2}: fitted exponent {:.3}, [x]_(H-0.1) = {:.3} attained on ({:.4}, {:.4})",
            fit.exponent.unwrap_or(f64::NAN),
            below.seminorm,
            below.argmax_pair.0,
            below.argmax_pair.1
        );
    }
    Ok(())
}
