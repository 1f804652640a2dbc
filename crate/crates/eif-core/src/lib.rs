//! Sparse image representation over a joint redundant-cosine + Dirac
//! dictionary, and encrypted image folding on top of it.
//!
//! The pipeline: cut an image into blocks, sparse-code each block by
//! orthogonal matching pursuit ([`pursuit`]), keep a prefix of blocks as
//! hosts, and store every other block's coefficients inside the hosts'
//! null spaces through a secret-keyed orthonormal basis ([`nullspace`],
//! [`fold`]). The folded result serializes to a compact container
//! ([`container`]); images travel as binary PGM ([`pgm`]).
//!
//! Block coding and per-host embedding are data-parallel; the `parallel`
//! feature (on by default) runs them on rayon, and disabling it yields a
//! dependency-light sequential build with identical output.

pub mod bench;
pub mod container;
pub mod dct;
pub mod dict;
pub mod error;
pub mod fold;
pub mod mat;
pub mod metrics;
pub mod nullspace;
pub mod pgm;
pub mod prng;
pub mod pursuit;
pub mod synth;
mod util;

pub use bench::{bench_table, BenchReport, BenchRow, Coder};
pub use container::{read_container, write_container};
pub use dict::{AtomIndex, CorrelationMap, DictParams, Dictionary, Segment};
pub use error::{EifError, Result};
pub use fold::{fold, plan_fold, quantize_host, unfold, FoldPlan, FoldedImage, QuantParams};
pub use mat::Mat;
pub use metrics::{psnr, sparsity_ratio};
pub use nullspace::{
    build_embedding_basis, embed, gen_raw_matrices, keyed_basis, retrieve, EmbeddingBasis,
    KeyMaterial, RawMatrixStream,
};
pub use pgm::{read_pgm, write_pgm, GrayImage};
pub use pursuit::{omp_decompose, omp_decompose_with_history, reconstruct, SparseRep, StopRule};
