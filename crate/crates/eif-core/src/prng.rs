//! Fixed 64-bit generator shared by every keyed or seeded step.
//!
//! All randomness in the library (raw embedding matrices, the keyed signed
//! permutation, per-host seed derivation) flows through this one generator so
//! that two independent builds produce bit-identical output for the same
//! seeds. The stream is SplitMix64; floats take the top 53 bits of each
//! output word and map them to uniform [-1, 1).

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1): top 53 bits over 2^53, then affine to [-1, 1).
    pub fn next_unit(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        let u01 = bits as f64 / (1u64 << 53) as f64;
        2.0 * u01 - 1.0
    }

    /// Uniform integer in `0..bound` (`bound > 0`). Modulo-reduced; the bias
    /// at these bounds (permutation lengths up to n^2) is irrelevant and the
    /// reduction keeps the stream consumption fixed at one word per draw.
    pub fn next_below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }
}

/// Derive the per-host public seed from the container's root seed.
///
/// Host blocks each get their own public generator seed; mixing the host's
/// raster index into the root keeps the streams distinct.
pub fn derive_host_seed(seed_root: u64, host_index: u64) -> u64 {
    // Domain tag keeps seed and key derivations disjoint at equal inputs.
    let mut rng = SplitMix64::new(
        seed_root ^ 0x5345_4544_0000_0000 ^ host_index.wrapping_mul(0xD1B5_4A32_D192_ED03),
    );
    rng.next_u64()
}

/// Derive the per-block permutation key from the secret key.
///
/// Identical payloads embedded in different host blocks must encrypt
/// differently, so the signed permutation is keyed per block.
pub fn derive_block_key(secret_key: u64, block_index: u64) -> u64 {
    let mut rng = SplitMix64::new(
        secret_key ^ 0x4B45_5900_0000_0000 ^ block_index.wrapping_mul(0xA24B_AED4_963E_E407),
    );
    rng.next_u64()
}
