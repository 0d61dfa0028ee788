//! Quantized kernels and the correction that cancels an additive mask:
//! `K(t + mu) * e^(mu / 2 sigma^2 S^2) = K(t)`.

use ppkde::fixedpoint::{FixedPointConfig, FixedPointParams};
use rug::Integer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let modulus = Integer::from(1) << 3071u32;
    let params = FixedPointParams::new(FixedPointConfig::defaults(4, 3, 200), &modulus)?;
    let (x, y) = (0.3, 0.55);
    let d = params.quantize_feature(x)? - params.quantize_feature(y)?;
    let t = Integer::from(d * d);
    let mu = Integer::from(987_654);

    let plain = params.kernel_of_sq_dist(&t)?;
    let masked = params.kernel_of_sq_dist(&Integer::from(&t + &mu))?;
    let corrected = (&masked * params.correction_factor(&mu)?) >> params.f_corr();
    let diff = Integer::from(&corrected - &plain).abs();
    println!("quantized squared distance t = {t}");
    println!(
        "kernel bits {}, |corrected - plain| = {diff}",
        plain.significant_bits()
    );
    println!(
        "relative error <= 2^-{}",
        plain.significant_bits() - diff.significant_bits()
    );
    println!(
        "garbled-circuit mask bits for n = 200: {}",
        params.gc_mask_bits(200)
    );
    Ok(())
}
