//! Keyed orthonormal bases of the orthogonal complement of a sparse span,
//! and the embed/retrieve pair that moves numbers through them.
//!
//! Raw matrices come from a public-seeded stream; their projections onto
//! the host span are removed and the remainders Gram-Schmidt orthonormalized
//! (projection removal alone does not make them mutually orthogonal, and
//! exact retrieval needs a genuinely orthonormal set). A signed permutation
//! drawn from the secret key then reorders and sign-flips the basis; without
//! the key the retrieved numbers come back scrambled.

use crate::error::{EifError, Result};
use crate::mat::Mat;
use crate::prng::SplitMix64;
use crate::pursuit::SparseRep;

/// Public per-host seed plus the per-image secret key.
///
/// The seed may travel in clear (it only fixes the raw matrix stream); the
/// key must not, since the signed permutation drawn from it is what stands
/// between an eavesdropper and the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyMaterial {
    pub public_seed: u64,
    pub secret_key: u64,
}

/// Build the keyed basis for a single host block from its key material.
/// Convenience over [`build_embedding_basis`] for standalone embedding;
/// the folding pipeline derives per-host seeds and keys itself.
pub fn keyed_basis(material: KeyMaterial, host: &SparseRep) -> Result<EmbeddingBasis> {
    let mut stream = RawMatrixStream::new(material.public_seed, host.block_side);
    build_embedding_basis(&mut stream, host, material.secret_key)
}

/// Orthonormal basis of the host block's null space, already keyed.
pub struct EmbeddingBasis {
    vectors: Vec<Mat>,
}

impl EmbeddingBasis {
    /// Number of embeddable values, `n^2 - K`.
    pub fn capacity(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Mat] {
        &self.vectors
    }
}

/// Stream of random matrices with entries uniform in [-1, 1), in row-major
/// draw order.
pub struct RawMatrixStream {
    rng: SplitMix64,
    side: usize,
}

impl RawMatrixStream {
    pub fn new(seed: u64, side: usize) -> Self {
        RawMatrixStream {
            rng: SplitMix64::new(seed),
            side,
        }
    }

    pub fn next_matrix(&mut self) -> Mat {
        let mut m = Mat::square(self.side);
        for v in m.as_mut_slice() {
            *v = self.rng.next_unit();
        }
        m
    }
}

/// The first `count` matrices of the seed's stream.
pub fn gen_raw_matrices(seed: u64, count: usize, side: usize) -> Vec<Mat> {
    let mut stream = RawMatrixStream::new(seed, side);
    (0..count).map(|_| stream.next_matrix()).collect()
}

/// A raw direction whose component outside the occupied span has norm below
/// this is discarded and redrawn from the stream.
const SPAN_TOL: f64 = 1e-10;

/// Build the keyed orthonormal null-space basis for `host`, drawing raw
/// matrices from `stream` (continuing past the first `L` draws when a draw
/// lands inside the span). Fails if `L` independent directions cannot be
/// found within `3L` draws.
pub fn build_embedding_basis(
    stream: &mut RawMatrixStream,
    host: &SparseRep,
    block_key: u64,
) -> Result<EmbeddingBasis> {
    let l = host.null_dim();
    let mut accepted: Vec<Mat> = Vec::with_capacity(l);
    let max_draws = 3 * l.max(1);
    let mut draws = 0;
    while accepted.len() < l {
        if draws >= max_draws {
            return Err(EifError::BasisGeneration {
                needed: l,
                draws: max_draws,
            });
        }
        let mut y = stream.next_matrix();
        draws += 1;
        // Project out the host span, then previously accepted directions.
        // Two sweeps keep the chain orthonormal at machine precision.
        for _ in 0..2 {
            for q in &host.ortho_basis {
                let c = q.dot(&y);
                y.scaled_add(-c, q);
            }
            for u in &accepted {
                let c = u.dot(&y);
                y.scaled_add(-c, u);
            }
        }
        let norm = y.norm();
        if norm < SPAN_TOL {
            continue;
        }
        y.scale(1.0 / norm);
        accepted.push(y);
    }

    // Keyed signed permutation: Fisher-Yates order, then one sign per
    // vector, both from the block key's stream.
    let mut rng = SplitMix64::new(block_key);
    let mut order: Vec<usize> = (0..l).collect();
    for i in (1..l).rev() {
        let j = rng.next_below(i + 1);
        order.swap(i, j);
    }
    let vectors = order
        .into_iter()
        .map(|src| {
            let mut u = accepted[src].clone();
            if rng.next_u64() >> 63 == 1 {
                u.scale(-1.0);
            }
            u
        })
        .collect();
    Ok(EmbeddingBasis { vectors })
}

/// `G = host_recon + sum_i h_i u_i`. Payloads shorter than the capacity are
/// zero-extended; longer ones are an error.
pub fn embed(host_recon: &Mat, basis: &EmbeddingBasis, payload: &[f64]) -> Result<Mat> {
    if payload.len() > basis.capacity() {
        return Err(EifError::PayloadTooLong {
            got: payload.len(),
            capacity: basis.capacity(),
        });
    }
    let mut g = host_recon.clone();
    for (u, &h) in basis.vectors.iter().zip(payload) {
        g.scaled_add(h, u);
    }
    Ok(g)
}

/// Read the embedded numbers back out of `g`: project onto the host span,
/// subtract to isolate the null-space part, then take inner products with
/// the basis.
pub fn retrieve(g: &Mat, basis: &EmbeddingBasis, host: &SparseRep) -> Vec<f64> {
    let projected = host.project(g);
    let f = g.sub(&projected);
    basis.vectors.iter().map(|u| u.dot(&f)).collect()
}
