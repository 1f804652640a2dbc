//! Length-`m` DCT-II of zero-padded input, via a single complex FFT.
//!
//! Computes `out[k] = sum_s x[s] * cos(pi*(2s+1)*k/(2m))` for `k = 0..m`,
//! where `x` may be shorter than `m` and is treated as zero beyond its
//! length. Uses the even/odd reordering trick: permute the (padded) input
//! into `v`, take one length-`m` FFT, then recover the DCT from the real
//! part of a twiddled spectrum. Cost is O(m log2 m) per call.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct ZeroPadDct {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    // e^{-i pi k / (2m)} for k = 0..m
    twiddles: Vec<Complex64>,
}

/// Reusable buffers for [`ZeroPadDct::transform_into`]; one per worker.
pub struct DctScratch {
    buf: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
}

impl ZeroPadDct {
    pub fn new(len: usize) -> Self {
        assert!(len > 0);
        let fft = FftPlanner::new().plan_fft_forward(len);
        let twiddles = (0..len)
            .map(|k| {
                let theta = -std::f64::consts::PI * k as f64 / (2.0 * len as f64);
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        ZeroPadDct { len, fft, twiddles }
    }

    /// Planned transform length `m`.
    pub fn output_len(&self) -> usize {
        self.len
    }

    pub fn make_scratch(&self) -> DctScratch {
        DctScratch {
            buf: vec![Complex64::default(); self.len],
            fft_scratch: vec![Complex64::default(); self.fft.get_inplace_scratch_len()],
        }
    }

    /// DCT-II of `input` zero-padded to the planned length, written to `out`.
    pub fn transform_into(&self, input: &[f64], out: &mut [f64], scratch: &mut DctScratch) {
        let m = self.len;
        assert!(input.len() <= m);
        assert_eq!(out.len(), m);

        let buf = &mut scratch.buf;
        buf.fill(Complex64::default());
        // v[t] = x[2t], v[m-1-t] = x[2t+1]; the zero-padded tail never moves.
        for (s, &x) in input.iter().enumerate() {
            if s % 2 == 0 {
                buf[s / 2] = Complex64::new(x, 0.0);
            } else {
                buf[m - 1 - (s - 1) / 2] = Complex64::new(x, 0.0);
            }
        }

        self.fft.process_with_scratch(buf, &mut scratch.fft_scratch);

        for k in 0..m {
            out[k] = (buf[k] * self.twiddles[k]).re;
        }
    }
}
