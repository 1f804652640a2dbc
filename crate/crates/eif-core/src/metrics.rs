//! Reconstruction quality and sparsity measures.

use crate::error::{EifError, Result};
use crate::pgm::GrayImage;
use crate::pursuit::SparseRep;

/// Peak signal-to-noise ratio in dB: `10 log10(peak^2 / MSE)` with
/// `peak = 2^bitdepth - 1`. Identical images return `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() || a.bitdepth() != b.bitdepth() {
        return Err(EifError::MetricMismatch(format!(
            "{}x{}@{} vs {}x{}@{}",
            a.width(),
            a.height(),
            a.bitdepth(),
            b.width(),
            b.height(),
            b.bitdepth()
        )));
    }
    let mse: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.samples().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = ((1u64 << a.bitdepth()) - 1) as f64;
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Total pixels over total coefficients across all block representations.
pub fn sparsity_ratio(reps: &[SparseRep]) -> Result<f64> {
    let pixels: usize = reps.iter().map(|r| r.block_side * r.block_side).sum();
    let coeffs: usize = reps.iter().map(|r| r.atom_count()).sum();
    if coeffs == 0 {
        return Err(EifError::NoCoefficients);
    }
    Ok(pixels as f64 / coeffs as f64)
}
