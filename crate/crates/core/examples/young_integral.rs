//! Young integrals ∫ H dX: refinement on a smooth case and an fBm driver.

use rough_mild::fbm_noise::fbm_sample;
use rough_mild::holder_paths::SampledPath;
use rough_mild::scale_space::{ScaleIndex, SpectralElement};
use rough_mild::young::{scalar_rate_study, young_integral, OperatorPath};

fn main() -> rough_mild::Result<()> {
    // ∫₀¹ s ds = 1/2 with left-point sums on 2^level cells
    for row in scalar_rate_study(2..=12)? {
        println!("level {:>2}: error {:.3e}  bound {:.3e}", row.level, row.increment_norm, row.bound_rhs);
    }

    let w = fbm_sample(0.7, 1 << 12, 1.0, 5)?;
    let x = SampledPath::uniform(1.0, w.into_iter().map(|v| SpectralElement::new(vec![v])).collect::<Result<_, _>>()?, ScaleIndex(0.0))?;
    let h = OperatorPath::scalar(x.times(), 1, 0.9, f64::cos);
    let r = young_integral(&h, &x, 0.9, 0.6)?;
    let end = r.path.values().last().map(|v| v.coeffs()[0]).unwrap_or(0.0);
    println!("∫ cos(s) dB^H(s) over [0, 1] = {end:.6} (unresolved-scale estimate {:.2e}, K = {:.2})", r.error_estimate, r.constant_used);
    Ok(())
}
