//! Image folding: sparse-code every block, keep a prefix of blocks as
//! hosts, and pack the remaining blocks' coefficients into the hosts' null
//! spaces. The inverse recovers hosts by projection and non-hosts from the
//! retrieved coefficients.
//!
//! Hosts are the first blocks in raster order, so a correctly keyed unfold
//! reproduces the whole image while a wrongly keyed one reproduces only the
//! top strip. Host pixels are stored quantized to the original bit depth;
//! the affine (offset, scale) pair per host rides in the header because the
//! embedded payload routinely pushes pixel sums outside the nominal range
//! and clipping would corrupt it nonlinearly.

use crate::dict::{AtomIndex, DictParams, Dictionary};
use crate::error::{EifError, Result};
use crate::mat::Mat;
use crate::nullspace::{build_embedding_basis, embed, retrieve, EmbeddingBasis, RawMatrixStream};
use crate::pgm::GrayImage;
use crate::prng::{derive_block_key, derive_host_seed};
use crate::pursuit::{omp_decompose, reconstruct, SparseRep, StopRule};
use crate::util::{par_map, par_map_range};

/// Per-host affine dequantization parameters: `pixel = offset + scale * q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub offset: f64,
    pub scale: f64,
}

/// One contiguous copy between a non-host coefficient list and a host's
/// basis slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignRun {
    pub src_block: usize,
    pub coeff_start: usize,
    pub len: usize,
    pub host_block: usize,
    pub slot_start: usize,
}

/// Where every coefficient goes: host prefix size, per-block capacities and
/// payload lengths, and the deterministic run list connecting them.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub q_total: usize,
    pub host_count: usize,
    pub block_side: usize,
    /// Pixel origin (row, col) of each block, raster order.
    pub block_origins: Vec<(u32, u32)>,
    /// Null-space capacity `n^2 - K_q` of each host block (`q < host_count`).
    pub capacities: Vec<usize>,
    /// Coefficient count `K_q` of each non-host block (`q >= host_count`).
    pub payload_lengths: Vec<usize>,
    pub assignment: Vec<AssignRun>,
}

/// Folded image: quantized host pixels plus the clear-text sidecar. The
/// embedded coefficients are unreadable without the secret key; everything
/// else (atom indices, counts, seeds, quantization parameters) is public.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedImage {
    pub width: u32,
    pub height: u32,
    pub bitdepth: u8,
    pub params: DictParams,
    pub stop: StopRule,
    pub host_count: u32,
    pub seed_root: u64,
    pub quant: Vec<QuantParams>,
    /// `K_q` for every block, raster order.
    pub block_ks: Vec<u32>,
    /// Flat 1-based atom indices, concatenated per block in selection order.
    pub atom_flats: Vec<u32>,
    /// Quantized host samples, hosts in raster order, row-major within each.
    pub host_samples: Vec<u16>,
}

impl FoldedImage {
    pub fn q_total(&self) -> usize {
        self.block_ks.len()
    }

    /// Public generator seed of one host block.
    pub fn host_seed(&self, host_index: usize) -> u64 {
        derive_host_seed(self.seed_root, host_index as u64)
    }

    pub fn total_coefficients(&self) -> u64 {
        self.block_ks.iter().map(|&k| k as u64).sum()
    }

    /// Pixels per coefficient across the whole image.
    pub fn sparsity_ratio(&self) -> Option<f64> {
        let coeffs = self.total_coefficients();
        if coeffs == 0 {
            return None;
        }
        Some(self.width as f64 * self.height as f64 / coeffs as f64)
    }
}

/// Cut an image matrix into `n x n` blocks, raster order.
pub fn partition_blocks(image: &Mat, n: usize) -> Vec<Mat> {
    let rows = image.rows() / n;
    let cols = image.cols() / n;
    let mut blocks = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let mut b = Mat::square(n);
            for s in 0..n {
                for r in 0..n {
                    b.set(s, r, image.get(br * n + s, bc * n + r));
                }
            }
            blocks.push(b);
        }
    }
    blocks
}

fn block_origins(width: u32, height: u32, n: usize) -> Vec<(u32, u32)> {
    let n = n as u32;
    let mut origins = Vec::new();
    for br in 0..height / n {
        for bc in 0..width / n {
            origins.push((br * n, bc * n));
        }
    }
    origins
}

/// Choose the host prefix and lay out every coefficient run.
///
/// The host count is the smallest raster prefix whose combined null-space
/// capacity holds all remaining coefficients; feasibility is monotone in
/// the prefix length, so this is the first feasible count. Non-host
/// coefficients are packed in raster order, each block's coefficients in
/// selection order, filling each host's slots before moving to the next.
// The prefix scan runs one step past the block list (the all-host case),
// which an indexed loop states most plainly.
#[allow(clippy::needless_range_loop)]
pub fn plan_fold(reps: &[SparseRep], width: u32, height: u32) -> Result<FoldPlan> {
    if reps.is_empty() {
        return Err(EifError::InvalidParams("no blocks to fold".into()));
    }
    let n = reps[0].block_side;
    let q_total = reps.len();
    if !(width as usize).is_multiple_of(n)
        || !(height as usize).is_multiple_of(n)
        || (width as usize / n) * (height as usize / n) != q_total
    {
        return Err(EifError::BlockGridMismatch {
            width,
            height,
            side: n as u32,
        });
    }

    let ks: Vec<usize> = reps.iter().map(|r| r.atom_count()).collect();
    let total_k: usize = ks.iter().sum();
    let n2 = n * n;

    let mut host_count = q_total;
    let mut prefix_capacity = 0usize;
    let mut suffix_k = total_k;
    for h in 0..=q_total {
        if prefix_capacity >= suffix_k {
            host_count = h;
            break;
        }
        if h < q_total {
            prefix_capacity += n2 - ks[h];
            suffix_k -= ks[h];
        }
    }
    if host_count == q_total && total_k > 0 {
        return Err(EifError::NotFoldable(format!(
            "{total_k} coefficients exceed the null-space capacity of any {} host prefix",
            q_total - 1
        )));
    }

    let capacities: Vec<usize> = ks[..host_count].iter().map(|&k| n2 - k).collect();
    let payload_lengths: Vec<usize> = ks[host_count..].to_vec();
    let assignment = assignment_runs(&ks, host_count, n2);

    Ok(FoldPlan {
        q_total,
        host_count,
        block_side: n,
        block_origins: block_origins(width, height, n),
        capacities,
        payload_lengths,
        assignment,
    })
}

/// Deterministic packing of non-host coefficients into host slots. Also
/// used at unfold time with the container's host count.
fn assignment_runs(ks: &[usize], host_count: usize, n2: usize) -> Vec<AssignRun> {
    let mut runs = Vec::new();
    let mut host = 0usize;
    let mut slot = 0usize;
    for (q, &k) in ks.iter().enumerate().skip(host_count) {
        let mut done = 0usize;
        while done < k {
            debug_assert!(host < host_count, "assignment exceeded host capacity");
            let capacity = n2 - ks[host];
            if slot >= capacity {
                host += 1;
                slot = 0;
                continue;
            }
            let take = (capacity - slot).min(k - done);
            runs.push(AssignRun {
                src_block: q,
                coeff_start: done,
                len: take,
                host_block: host,
                slot_start: slot,
            });
            done += take;
            slot += take;
        }
    }
    runs
}

/// Quantize a host block to `bitdepth` integers with a per-block affine
/// map. The block's minimum maps to 0 and its maximum to the top code, so
/// the full integer range is used; a constant block gets unit scale.
pub fn quantize_host(g: &Mat, bitdepth: u8) -> (Vec<u16>, QuantParams) {
    let levels = ((1u64 << bitdepth) - 1) as f64;
    let offset = g.min();
    let range = g.max() - offset;
    let scale = if range > 0.0 { range / levels } else { 1.0 };
    let samples = g
        .as_slice()
        .iter()
        .map(|&x| {
            let q = ((x - offset) / scale).round();
            q.clamp(0.0, levels) as u16
        })
        .collect();
    (samples, QuantParams { offset, scale })
}

/// Invert [`quantize_host`].
pub fn dequantize_host(samples: &[u16], qp: QuantParams, n: usize) -> Mat {
    let data = samples
        .iter()
        .map(|&q| qp.offset + qp.scale * q as f64)
        .collect();
    Mat::from_vec(n, n, data)
}

/// Sparse-code every block of `image` in raster order.
fn code_blocks(image: &Mat, dict: &Dictionary, stop: &StopRule) -> Result<Vec<SparseRep>> {
    let blocks = partition_blocks(image, dict.params().block_side());
    let coded = par_map(&blocks, |b| omp_decompose(b, dict, stop));
    coded.into_iter().collect()
}

fn image_to_mat(image: &GrayImage) -> Mat {
    let data = image.samples().iter().map(|&s| s as f64).collect();
    Mat::from_vec(image.height() as usize, image.width() as usize, data)
}

/// Real-valued host blocks `G_q` before quantization, with the plan and
/// per-block representations. The quantizing [`fold`] wraps this; tests use
/// it to separate embedding loss (none) from quantization loss.
pub(crate) fn fold_real(
    image: &Mat,
    width: u32,
    height: u32,
    dict: &Dictionary,
    stop: &StopRule,
    secret_key: u64,
    seed_root: u64,
) -> Result<(Vec<SparseRep>, FoldPlan, Vec<Mat>)> {
    let reps = code_blocks(image, dict, stop)?;
    let plan = plan_fold(&reps, width, height)?;

    // Gather each host's payload from the run list.
    let mut payloads: Vec<Vec<f64>> = plan.capacities.iter().map(|&l| vec![0.0; l]).collect();
    for run in &plan.assignment {
        let src = &reps[run.src_block].coeffs[run.coeff_start..run.coeff_start + run.len];
        payloads[run.host_block][run.slot_start..run.slot_start + run.len].copy_from_slice(src);
    }

    let host_blocks = par_map_range(plan.host_count, |h| -> Result<Mat> {
        let basis = host_basis(dict, &reps[h], seed_root, secret_key, h)?;
        let recon = reconstruct(&reps[h], dict)?;
        embed(&recon, &basis, &payloads[h])
    });
    let host_blocks: Result<Vec<Mat>> = host_blocks.into_iter().collect();
    Ok((reps, plan, host_blocks?))
}

fn host_basis(
    dict: &Dictionary,
    host: &SparseRep,
    seed_root: u64,
    secret_key: u64,
    host_index: usize,
) -> Result<EmbeddingBasis> {
    let mut stream = RawMatrixStream::new(
        derive_host_seed(seed_root, host_index as u64),
        dict.params().block_side(),
    );
    let block_key = derive_block_key(secret_key, host_index as u64);
    build_embedding_basis(&mut stream, host, block_key)
}

/// Fold `image`: sparse-code, pack non-host coefficients into host null
/// spaces, quantize hosts back to the image's bit depth. Deterministic for
/// fixed inputs.
pub fn fold(
    image: &GrayImage,
    dict: &Dictionary,
    stop: &StopRule,
    secret_key: u64,
    seed_root: u64,
) -> Result<FoldedImage> {
    let n = dict.params().block_side() as u32;
    if !image.width().is_multiple_of(n) || !image.height().is_multiple_of(n) {
        return Err(EifError::BlockGridMismatch {
            width: image.width(),
            height: image.height(),
            side: n,
        });
    }
    let mat = image_to_mat(image);
    let (reps, plan, host_blocks) = fold_real(
        &mat,
        image.width(),
        image.height(),
        dict,
        stop,
        secret_key,
        seed_root,
    )?;

    let mut quant = Vec::with_capacity(plan.host_count);
    let mut host_samples = Vec::with_capacity(plan.host_count * plan.block_side * plan.block_side);
    for g in &host_blocks {
        let (samples, qp) = quantize_host(g, image.bitdepth());
        quant.push(qp);
        host_samples.extend_from_slice(&samples);
    }

    let block_ks = reps.iter().map(|r| r.atom_count() as u32).collect();
    let atom_flats = reps
        .iter()
        .flat_map(|r| r.indices.iter().map(|i| i.flat))
        .collect();

    Ok(FoldedImage {
        width: image.width(),
        height: image.height(),
        bitdepth: image.bitdepth(),
        params: *dict.params(),
        stop: *stop,
        host_count: plan.host_count as u32,
        seed_root,
        quant,
        block_ks,
        atom_flats,
        host_samples,
    })
}

/// Orthonormal basis of the span of the listed atoms, in list order.
fn span_basis(dict: &Dictionary, indices: &[AtomIndex]) -> Result<Vec<Mat>> {
    let mut basis: Vec<Mat> = Vec::with_capacity(indices.len());
    for idx in indices {
        let mut v = dict.atom_pixels(idx)?;
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.scaled_add(-c, q);
            }
        }
        let norm = v.norm();
        if norm < 1e-10 {
            return Err(EifError::SidecarMismatch(format!(
                "atom {} is dependent on the preceding sidecar atoms",
                idx.flat
            )));
        }
        v.scale(1.0 / norm);
        basis.push(v);
    }
    Ok(basis)
}

/// Per-block sidecar (indices and counts) decoded from the flat lists.
fn sidecar_indices(folded: &FoldedImage, dict: &Dictionary) -> Result<Vec<Vec<AtomIndex>>> {
    let n2 = (folded.params.block_side() * folded.params.block_side()) as u32;
    let total: usize = folded.block_ks.iter().map(|&k| k as usize).sum();
    if total != folded.atom_flats.len() {
        return Err(EifError::SidecarMismatch(format!(
            "sidecar declares {total} indices but holds {}",
            folded.atom_flats.len()
        )));
    }
    let mut cursor = 0usize;
    let mut out = Vec::with_capacity(folded.block_ks.len());
    for &k in &folded.block_ks {
        if k > n2 {
            return Err(EifError::SidecarMismatch(format!(
                "block coefficient count {k} exceeds {n2}"
            )));
        }
        let mut indices = Vec::with_capacity(k as usize);
        for &flat in &folded.atom_flats[cursor..cursor + k as usize] {
            indices.push(dict.atom_index(flat)?);
        }
        cursor += k as usize;
        out.push(indices);
    }
    Ok(out)
}

/// Invert [`fold`]. Host blocks are recovered by projecting their
/// dequantized pixels onto the sidecar span; the leftover component carries
/// the embedded coefficients, which rebuild the non-host blocks. A wrong
/// key scrambles only the embedded coefficients: hosts come back correct,
/// the rest does not.
pub fn unfold(folded: &FoldedImage, dict: &Dictionary, secret_key: u64) -> Result<GrayImage> {
    if folded.params != *dict.params() {
        return Err(EifError::SidecarMismatch(
            "container dictionary parameters do not match".into(),
        ));
    }
    let n = folded.params.block_side();
    let n2 = n * n;
    let q_total = folded.q_total();
    let h = folded.host_count as usize;
    if h > q_total {
        return Err(EifError::SidecarMismatch(format!(
            "host count {h} exceeds block count {q_total}"
        )));
    }
    if folded.quant.len() != h || folded.host_samples.len() != h * n2 {
        return Err(EifError::PayloadLengthMismatch(format!(
            "expected {h} quantized host blocks"
        )));
    }
    let ks: Vec<usize> = folded.block_ks.iter().map(|&k| k as usize).collect();
    let capacity: usize = ks[..h].iter().map(|&k| n2 - k).sum();
    let payload: usize = ks[h..].iter().sum();
    if payload > capacity {
        return Err(EifError::PayloadLengthMismatch(format!(
            "{payload} embedded coefficients exceed host capacity {capacity}"
        )));
    }

    let indices = sidecar_indices(folded, dict)?;

    // Recover each host: projection for its own pixels, retrieval for its
    // share of the embedded payload.
    let host_results = par_map_range(h, |i| -> Result<(Mat, Vec<f64>)> {
        let g = dequantize_host(
            &folded.host_samples[i * n2..(i + 1) * n2],
            folded.quant[i],
            n,
        );
        let mut host_rep = SparseRep::empty(n);
        host_rep.indices = indices[i].clone();
        host_rep.ortho_basis = span_basis(dict, &indices[i])?;
        let recovered = host_rep.project(&g);
        let basis = host_basis(dict, &host_rep, folded.seed_root, secret_key, i)?;
        let slots = retrieve(&g, &basis, &host_rep);
        Ok((recovered, slots))
    });
    let host_results: Result<Vec<(Mat, Vec<f64>)>> = host_results.into_iter().collect();
    let host_results = host_results?;

    // Scatter retrieved slots back into per-block coefficient lists.
    let runs = assignment_runs(&ks, h, n2);
    let mut coeffs: Vec<Vec<f64>> = ks.iter().map(|&k| vec![0.0; k]).collect();
    for run in &runs {
        let src = &host_results[run.host_block].1[run.slot_start..run.slot_start + run.len];
        coeffs[run.src_block][run.coeff_start..run.coeff_start + run.len].copy_from_slice(src);
    }

    let non_host_blocks = par_map_range(q_total - h, |off| -> Result<Mat> {
        let q = h + off;
        let mut rep = SparseRep::empty(n);
        rep.indices = indices[q].clone();
        rep.coeffs = coeffs[q].clone();
        reconstruct(&rep, dict)
    });
    let non_host_blocks: Result<Vec<Mat>> = non_host_blocks.into_iter().collect();
    let non_host_blocks = non_host_blocks?;

    // Reassemble in raster order, rounding and clipping to the bit depth.
    let peak = ((1u64 << folded.bitdepth) - 1) as f64;
    let blocks_per_row = folded.width as usize / n;
    let mut samples = vec![0u16; folded.width as usize * folded.height as usize];
    for q in 0..q_total {
        let block = if q < h {
            &host_results[q].0
        } else {
            &non_host_blocks[q - h]
        };
        let (origin_r, origin_c) = (q / blocks_per_row * n, q % blocks_per_row * n);
        for s in 0..n {
            for r in 0..n {
                let v = block.get(s, r).round().clamp(0.0, peak);
                samples[(origin_r + s) * folded.width as usize + origin_c + r] = v as u16;
            }
        }
    }
    GrayImage::new(folded.width, folded.height, folded.bitdepth, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::Segment;
    use crate::prng::SplitMix64;

    fn dict8() -> Dictionary {
        Dictionary::build(DictParams::rdc_db(8, 2).unwrap())
    }

    fn rep_with_k(n: usize, k: usize) -> SparseRep {
        let mut rep = SparseRep::empty(n);
        rep.indices = vec![
            AtomIndex {
                flat: 1,
                segment: Segment::CosCos,
                i: 1,
                j: 1
            };
            k
        ];
        rep.coeffs = vec![0.0; k];
        rep
    }

    #[test]
    fn plan_uniform_blocks_matches_capacity_inequality() {
        // Q = 10 blocks, K = 16 each, n = 8: hosts hold 48 values apiece,
        // so 3 hosts cover the 7 remaining blocks' 112 coefficients.
        let reps: Vec<SparseRep> = (0..10).map(|_| rep_with_k(8, 16)).collect();
        let plan = plan_fold(&reps, 80, 8).unwrap();
        assert_eq!(plan.host_count, 3);
        assert_eq!(plan.capacities, vec![48, 48, 48]);
        assert_eq!(plan.payload_lengths, vec![16; 7]);
    }

    #[test]
    fn plan_zero_image_needs_no_hosts() {
        let reps: Vec<SparseRep> = (0..4).map(|_| rep_with_k(8, 0)).collect();
        let plan = plan_fold(&reps, 16, 16).unwrap();
        assert_eq!(plan.host_count, 0);
        assert!(plan.assignment.is_empty());
    }

    #[test]
    fn plan_full_rank_blocks_are_not_foldable() {
        let reps: Vec<SparseRep> = (0..4).map(|_| rep_with_k(8, 64)).collect();
        assert!(matches!(
            plan_fold(&reps, 16, 16),
            Err(EifError::NotFoldable(_))
        ));
    }

    #[test]
    fn plan_256_image_has_1024_blocks() {
        let reps: Vec<SparseRep> = (0..1024).map(|_| rep_with_k(8, 8)).collect();
        let plan = plan_fold(&reps, 256, 256).unwrap();
        assert_eq!(plan.q_total, 1024);
        assert_eq!(plan.block_origins.len(), 1024);
        assert_eq!(plan.block_origins[0], (0, 0));
        assert_eq!(plan.block_origins[32], (8, 0));
    }

    #[test]
    fn plan_host_count_is_minimal_and_within_estimate() {
        let mut rng = SplitMix64::new(1);
        for _ in 0..50 {
            let q = 4 + rng.next_below(60);
            let reps: Vec<SparseRep> = (0..q).map(|_| rep_with_k(8, rng.next_below(64))).collect();
            let total_k: usize = reps.iter().map(|r| r.atom_count()).sum();
            let width = 8 * q as u32;
            match plan_fold(&reps, width, 8) {
                Ok(plan) => {
                    let h = plan.host_count;
                    let cap = |h: usize| -> i64 {
                        reps[..h].iter().map(|r| 64 - r.atom_count() as i64).sum()
                    };
                    let need =
                        |h: usize| -> i64 { reps[h..].iter().map(|r| r.atom_count() as i64).sum() };
                    assert!(cap(h) >= need(h), "h={h} infeasible");
                    if h > 0 {
                        assert!(cap(h - 1) < need(h - 1), "h={h} not minimal");
                    }
                    if total_k > 0 {
                        // Closed-form estimate: ceil(Q / SR) = ceil(total_k / n^2).
                        let estimate = total_k.div_ceil(64);
                        assert!(h <= estimate + 1, "h={h} above estimate {estimate}");
                    }
                }
                Err(EifError::NotFoldable(_)) => {
                    // Legal outcome for dense K draws; minimality has no
                    // meaning here.
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn assignment_covers_every_coefficient_once() {
        let ks = vec![10, 30, 0, 25, 64, 3];
        let h = 3;
        let runs = assignment_runs(&ks, h, 64);
        let mut seen = vec![vec![false; 64]; ks.len()];
        let mut slot_used = vec![vec![false; 64]; h];
        for run in &runs {
            assert!(run.src_block >= h);
            assert!(run.host_block < h);
            assert!(run.slot_start + run.len <= 64 - ks[run.host_block]);
            for c in run.coeff_start..run.coeff_start + run.len {
                assert!(!seen[run.src_block][c], "coefficient covered twice");
                seen[run.src_block][c] = true;
            }
            for s in run.slot_start..run.slot_start + run.len {
                assert!(!slot_used[run.host_block][s], "slot used twice");
                slot_used[run.host_block][s] = true;
            }
        }
        for (q, &k) in ks.iter().enumerate().skip(h) {
            assert_eq!(seen[q].iter().filter(|&&x| x).count(), k);
        }
    }

    #[test]
    fn quantize_constant_block_round_trips_exactly() {
        let g = Mat::from_vec(4, 4, vec![100.0; 16]);
        let (samples, qp) = quantize_host(&g, 8);
        assert!(samples.iter().all(|&q| q == 0));
        assert_eq!(qp.offset, 100.0);
        assert_eq!(qp.scale, 1.0);
        let back = dequantize_host(&samples, qp, 4);
        assert_eq!(back, g);
    }

    #[test]
    fn quantize_error_is_bounded_by_half_step() {
        let mut rng = SplitMix64::new(3);
        let mut g = Mat::square(8);
        for v in g.as_mut_slice() {
            *v = rng.next_unit() * 158.0 + 154.0; // roughly [-3.7, 312.2]
        }
        let (samples, qp) = quantize_host(&g, 8);
        let back = dequantize_host(&samples, qp, 8);
        let half_step = qp.scale / 2.0;
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= half_step + 1e-12);
        }
        // Full range is used.
        assert!(samples.contains(&0));
        assert!(samples.contains(&255));
    }

    #[test]
    fn quantize_relative_error_is_small() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..20 {
            let mut g = Mat::square(8);
            for v in g.as_mut_slice() {
                *v = rng.next_unit() * 200.0 + 300.0;
            }
            let (samples, qp) = quantize_host(&g, 8);
            let back = dequantize_host(&samples, qp, 8);
            let rel = g.sub(&back).norm() / g.norm();
            assert!(rel < 0.005, "relative error {rel}");
        }
    }

    /// Deterministic smooth test image.
    pub(crate) fn synth_image(width: u32, height: u32, seed: u64) -> GrayImage {
        crate::synth::natural_image(width, height, seed)
    }

    #[test]
    fn fold_is_deterministic() {
        let dict = dict8();
        let img = synth_image(64, 64, 9);
        let stop = StopRule::from_psnr_target(40.0, 8);
        let a = fold(&img, &dict, &stop, 111, 222).unwrap();
        let b = fold(&img, &dict, &stop, 111, 222).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fold_unfold_round_trip_reaches_target() {
        let dict = dict8();
        let img = synth_image(64, 64, 10);
        let stop = StopRule::from_psnr_target(40.0, 8);
        let folded = fold(&img, &dict, &stop, 0xABCD, 0x1234).unwrap();
        assert!(folded.host_count > 0);
        assert!((folded.host_count as usize) < folded.q_total());
        let back = unfold(&folded, &dict, 0xABCD).unwrap();
        let psnr = crate::metrics::psnr(&img, &back).unwrap();
        assert!(psnr >= 39.5, "psnr {psnr}");
    }

    #[test]
    fn fold_of_atom_union_recovers_sharply() {
        // Image stitched from dictionary atoms block by block; folding and
        // unfolding reproduces it at high fidelity.
        let dict = dict8();
        let n = 8usize;
        let (w, h) = (32u32, 32u32);
        let mut mat = Mat::zeros(h as usize, w as usize);
        let mut rng = SplitMix64::new(77);
        for bq in 0..16usize {
            let (or, oc) = ((bq / 4) * n, (bq % 4) * n);
            for _ in 0..3 {
                let flat = rng.next_below(dict.atom_count()) as u32 + 1;
                let atom = dict.atom_pixels(&dict.atom_index(flat).unwrap()).unwrap();
                let c = 40.0 + rng.next_unit() * 20.0;
                for s in 0..n {
                    for r in 0..n {
                        let v = mat.get(or + s, oc + r) + c * atom.get(s, r);
                        mat.set(or + s, oc + r, v);
                    }
                }
            }
        }
        let samples: Vec<u16> = mat
            .as_slice()
            .iter()
            .map(|&v| (v + 128.0).round().clamp(0.0, 255.0) as u16)
            .collect();
        let img = GrayImage::new(w, h, 8, samples).unwrap();
        let stop = StopRule::from_psnr_target(40.0, 8);
        let folded = fold(&img, &dict, &stop, 5, 6).unwrap();
        let back = unfold(&folded, &dict, 5).unwrap();
        let psnr = crate::metrics::psnr(&img, &back).unwrap();
        assert!(psnr >= 40.0 - 0.5, "psnr {psnr}");
    }

    #[test]
    fn wrong_key_preserves_hosts_and_destroys_the_rest() {
        let dict = dict8();
        let img = synth_image(64, 64, 11);
        let stop = StopRule::from_psnr_target(40.0, 8);
        let folded = fold(&img, &dict, &stop, 42, 43).unwrap();
        let good = unfold(&folded, &dict, 42).unwrap();
        let bad = unfold(&folded, &dict, 24).unwrap();

        let n = 8usize;
        let h = folded.host_count as usize;
        let blocks_per_row = 64 / n;
        // Host strip identical between keys.
        for q in 0..h {
            let (or, oc) = (q / blocks_per_row * n, q % blocks_per_row * n);
            for s in 0..n {
                for r in 0..n {
                    let at = |img: &GrayImage| img.samples()[(or + s) * 64 + oc + r];
                    assert_eq!(at(&good), at(&bad));
                }
            }
        }
        // Non-host region badly damaged without the key.
        let mut good_err = 0.0f64;
        let mut bad_err = 0.0f64;
        let mut count = 0usize;
        for q in h..folded.q_total() {
            let (or, oc) = (q / blocks_per_row * n, q % blocks_per_row * n);
            for s in 0..n {
                for r in 0..n {
                    let o = img.samples()[(or + s) * 64 + oc + r] as f64;
                    let g = good.samples()[(or + s) * 64 + oc + r] as f64;
                    let b = bad.samples()[(or + s) * 64 + oc + r] as f64;
                    good_err += (o - g) * (o - g);
                    bad_err += (o - b) * (o - b);
                    count += 1;
                }
            }
        }
        let psnr = |mse: f64| 10.0 * (255.0f64 * 255.0 / mse).log10();
        let good_psnr = psnr(good_err / count as f64);
        let bad_psnr = psnr(bad_err / count as f64);
        assert!(
            good_psnr - bad_psnr >= 15.0,
            "key gate too weak: {good_psnr} vs {bad_psnr}"
        );
    }

    #[test]
    fn unquantized_pipeline_is_lossless() {
        // Fold without the quantization step, then run the retrieval path
        // on the real-valued hosts; every block's approximation returns
        // exactly.
        let dict = dict8();
        let img = synth_image(32, 32, 13);
        let mat = image_to_mat(&img);
        let stop = StopRule::from_psnr_target(40.0, 8);
        let (reps, plan, hosts) = fold_real(&mat, 32, 32, &dict, &stop, 7, 8).unwrap();

        let ks: Vec<usize> = reps.iter().map(|r| r.atom_count()).collect();
        let runs = assignment_runs(&ks, plan.host_count, 64);
        let mut coeffs: Vec<Vec<f64>> = ks.iter().map(|&k| vec![0.0; k]).collect();
        for (h, g) in hosts.iter().enumerate() {
            let basis = host_basis(&dict, &reps[h], 8, 7, h).unwrap();
            let slots = retrieve(g, &basis, &reps[h]);
            for run in runs.iter().filter(|r| r.host_block == h) {
                coeffs[run.src_block][run.coeff_start..run.coeff_start + run.len]
                    .copy_from_slice(&slots[run.slot_start..run.slot_start + run.len]);
            }
            // Host projection returns its own approximation exactly.
            let recon = reconstruct(&reps[h], &dict).unwrap();
            let recovered = reps[h].project(g);
            assert!(recovered.sub(&recon).norm() <= 1e-6 * recon.norm().max(1.0));
        }
        for q in plan.host_count..reps.len() {
            for (a, b) in coeffs[q].iter().zip(&reps[q].coeffs) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn capacity_law_is_monotone_in_fidelity() {
        let dict = dict8();
        let img = synth_image(64, 64, 15);
        let mut hosts = Vec::new();
        for target in [32.0, 38.0, 44.0] {
            let stop = StopRule::from_psnr_target(target, 8);
            let folded = fold(&img, &dict, &stop, 1, 2).unwrap();
            hosts.push(folded.host_count);
        }
        assert!(hosts[0] <= hosts[1] && hosts[1] <= hosts[2], "{hosts:?}");
    }

    #[test]
    fn degenerate_all_host_container_unfolds_to_quantized_identity() {
        // H = Q container built by hand: every block is a host, nothing is
        // embedded.
        let dict = dict8();
        let img = synth_image(32, 32, 17);
        let mat = image_to_mat(&img);
        let stop = StopRule::from_psnr_target(42.0, 8);
        let reps = code_blocks(&mat, &dict, &stop).unwrap();
        let blocks = partition_blocks(&mat, 8);

        let mut quant = Vec::new();
        let mut host_samples = Vec::new();
        for (rep, _block) in reps.iter().zip(&blocks) {
            let g = reconstruct(rep, &dict).unwrap();
            let (samples, qp) = quantize_host(&g, 8);
            quant.push(qp);
            host_samples.extend_from_slice(&samples);
        }
        let folded = FoldedImage {
            width: 32,
            height: 32,
            bitdepth: 8,
            params: *dict.params(),
            stop,
            host_count: reps.len() as u32,
            seed_root: 0,
            quant,
            block_ks: reps.iter().map(|r| r.atom_count() as u32).collect(),
            atom_flats: reps
                .iter()
                .flat_map(|r| r.indices.iter().map(|i| i.flat))
                .collect(),
            host_samples,
        };
        let back = unfold(&folded, &dict, 999).unwrap();
        let psnr = crate::metrics::psnr(&img, &back).unwrap();
        assert!(psnr >= 41.0, "psnr {psnr}");
    }

    #[test]
    fn indivisible_dimensions_are_rejected() {
        let dict = dict8();
        let img = GrayImage::new(60, 64, 8, vec![0; 60 * 64]).unwrap();
        let stop = StopRule::from_psnr_target(40.0, 8);
        assert!(matches!(
            fold(&img, &dict, &stop, 1, 2),
            Err(EifError::BlockGridMismatch { .. })
        ));
    }

    #[test]
    fn unfold_rejects_mismatched_dictionary() {
        let dict = dict8();
        let img = synth_image(32, 32, 19);
        let stop = StopRule::from_psnr_target(40.0, 8);
        let folded = fold(&img, &dict, &stop, 1, 2).unwrap();
        let other = Dictionary::build(DictParams::dc_db(8).unwrap());
        assert!(matches!(
            unfold(&folded, &other, 1),
            Err(EifError::SidecarMismatch(_))
        ));
    }

    #[test]
    fn host_transparency_within_quantization_budget() {
        // Natural-statistics image at the working scale; toy images
        // concentrate too much payload energy in too few hosts.
        let dict = dict8();
        let img = crate::synth::class_image(crate::synth::ImageClass::Still, 256, 256, 1003);
        let stop = StopRule::from_psnr_target(40.0, 8);
        let mat = image_to_mat(&img);
        let (reps, plan, hosts) = fold_real(&mat, 256, 256, &dict, &stop, 3, 4).unwrap();
        assert!(plan.host_count > 10);
        for (h, g) in hosts.iter().enumerate().take(plan.host_count) {
            let (samples, qp) = quantize_host(g, 8);
            let g_tilde = dequantize_host(&samples, qp, 8);
            let ideal = reconstruct(&reps[h], &dict).unwrap();
            let recovered = reps[h].project(&g_tilde);
            let rel = recovered.sub(&ideal).norm() / ideal.norm().max(1e-12);
            assert!(rel <= 0.03, "host {h}: relative error {rel}");
        }
    }
}
