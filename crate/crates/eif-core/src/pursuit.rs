//! Orthogonal matching pursuit over the block dictionary.
//!
//! Greedy selection by largest absolute Frobenius correlation, with the
//! selected span tracked two ways at once: a Gram-Schmidt orthonormal set
//! `q_i` (drives residual updates and projections) and the biorthogonal
//! duals `b_i` with `<b_i, d_j> = delta_ij` (read off the least-squares
//! coefficients directly). Both are updated incrementally per selection, so
//! every intermediate coefficient set is least-squares optimal over the
//! atoms chosen so far.

use crate::dict::{AtomIndex, Dictionary};
use crate::error::{EifError, Result};
use crate::mat::Mat;

/// A candidate atom whose component orthogonal to the current span falls
/// below this multiple of its own (unit) norm is numerically dependent; it
/// is banned and never selected.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Termination rule for the pursuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the block mean squared error is at or below this bound
    /// (pixel^2 units).
    TargetBlockMse(f64),
    /// Stop after selecting this many atoms.
    MaxAtoms(usize),
    /// Stop once the residual Frobenius norm is at or below this bound.
    ResidualTol(f64),
}

impl StopRule {
    /// Per-block MSE bound that guarantees a global reconstruction PSNR of
    /// at least `psnr_db` for `bitdepth`-bit pixels: every block meeting
    /// `mse <= peak^2 / 10^(psnr/10)` keeps the image average under the
    /// same bound.
    pub fn from_psnr_target(psnr_db: f64, bitdepth: u8) -> StopRule {
        let peak = ((1u64 << bitdepth) - 1) as f64;
        StopRule::TargetBlockMse(peak * peak / 10f64.powf(psnr_db / 10.0))
    }

    pub fn validate(&self) -> Result<()> {
        // NaN bounds must fail too, so the checks are written to accept
        // only the valid range.
        match *self {
            StopRule::TargetBlockMse(t) if !(t.is_finite() && t > 0.0) => Err(
                EifError::InvalidStopRule(format!("target MSE must be positive, got {t}")),
            ),
            StopRule::ResidualTol(t) if !(t.is_finite() && t >= 0.0) => {
                Err(EifError::InvalidStopRule(format!(
                    "residual tolerance must be non-negative, got {t}"
                )))
            }
            _ => Ok(()),
        }
    }

    fn satisfied(&self, residual_norm: f64, selected: usize, block_side: usize) -> bool {
        match *self {
            StopRule::TargetBlockMse(target) => {
                let n2 = (block_side * block_side) as f64;
                residual_norm * residual_norm / n2 <= target
            }
            StopRule::MaxAtoms(k) => selected >= k,
            StopRule::ResidualTol(tol) => residual_norm <= tol,
        }
    }
}

/// Sparse representation of one block: selected atoms, their least-squares
/// coefficients, and the orthonormalized/biorthogonal span state.
#[derive(Debug, Clone)]
pub struct SparseRep {
    pub indices: Vec<AtomIndex>,
    pub coeffs: Vec<f64>,
    pub block_side: usize,
    /// Gram-Schmidt orthonormal basis of the selected span, in selection
    /// order.
    pub ortho_basis: Vec<Mat>,
    /// Biorthogonal duals: `<duals[i], atom[j]> = delta_ij`.
    pub duals: Vec<Mat>,
}

impl SparseRep {
    pub fn empty(block_side: usize) -> Self {
        SparseRep {
            indices: Vec::new(),
            coeffs: Vec::new(),
            block_side,
            ortho_basis: Vec::new(),
            duals: Vec::new(),
        }
    }

    pub fn atom_count(&self) -> usize {
        self.indices.len()
    }

    /// Null-space dimension left by this representation: `n^2 - K`.
    pub fn null_dim(&self) -> usize {
        self.block_side * self.block_side - self.atom_count()
    }

    /// Orthogonal projection of `pixels` onto the selected span,
    /// `sum_i <q_i, X> q_i`. Idempotent; annihilates anything embedded in
    /// the orthogonal complement.
    pub fn project(&self, pixels: &Mat) -> Mat {
        let mut out = Mat::square(self.block_side);
        for q in &self.ortho_basis {
            out.scaled_add(q.dot(pixels), q);
        }
        out
    }
}

/// Remove the span of `basis` from `v`, twice. The second sweep clears the
/// first-order cancellation error classical Gram-Schmidt leaves behind and
/// keeps long chains orthonormal to ~1e-14.
fn orthogonalize_against(v: &mut Mat, basis: &[Mat]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            if c != 0.0 {
                v.scaled_add(-c, q);
            }
        }
    }
}

/// Greedy decomposition of `block` until `stop` is satisfied.
///
/// Returns the representation and the residual norm after each selection
/// (index 0 is the norm of the input block itself).
pub fn omp_decompose_with_history(
    block: &Mat,
    dict: &Dictionary,
    stop: &StopRule,
) -> Result<(SparseRep, Vec<f64>)> {
    let n = dict.params().block_side();
    if block.rows() != n || block.cols() != n {
        return Err(EifError::ShapeMismatch {
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", block.rows(), block.cols()),
        });
    }
    stop.validate()?;

    let mut rep = SparseRep::empty(n);
    let mut residual = block.clone();
    let mut banned = vec![false; dict.atom_count()];
    let mut history = vec![residual.norm()];

    'outer: while !stop.satisfied(*history.last().unwrap(), rep.atom_count(), n)
        && rep.atom_count() < n * n
    {
        let map = dict.correlate(&residual);
        let (idx, atom, ortho, norm) = loop {
            let Some((idx, _value)) = map.argmax_excluding(dict, &banned) else {
                // Zero residual (or nothing selectable): done.
                break 'outer;
            };
            let atom = dict.atom_pixels(&idx)?;
            let mut ortho = atom.clone();
            orthogonalize_against(&mut ortho, &rep.ortho_basis);
            let norm = ortho.norm();
            if norm < DEPENDENCE_TOL {
                // Numerically inside the current span: skip for good.
                banned[idx.flat as usize - 1] = true;
                continue;
            }
            break (idx, atom, ortho, norm);
        };

        let mut q = ortho;
        q.scale(1.0 / norm);
        // <q, atom> equals the post-projection norm, so q / norm is dual to
        // the new atom; existing duals then shed their components along it.
        let mut b_new = q.clone();
        b_new.scale(1.0 / norm);
        for b in &mut rep.duals {
            let t = b.dot(&atom);
            if t != 0.0 {
                b.scaled_add(-t, &b_new);
            }
        }

        let along = q.dot(&residual);
        residual.scaled_add(-along, &q);

        banned[idx.flat as usize - 1] = true;
        rep.indices.push(idx);
        rep.ortho_basis.push(q);
        rep.duals.push(b_new);
        rep.coeffs = rep.duals.iter().map(|b| b.dot(block)).collect();
        history.push(residual.norm());
    }

    Ok((rep, history))
}

/// Greedy decomposition of `block` until `stop` is satisfied.
pub fn omp_decompose(block: &Mat, dict: &Dictionary, stop: &StopRule) -> Result<SparseRep> {
    omp_decompose_with_history(block, dict, stop).map(|(rep, _)| rep)
}

/// Expand a representation back to pixels: `sum_i c_i d_i`.
pub fn reconstruct(rep: &SparseRep, dict: &Dictionary) -> Result<Mat> {
    let mut out = Mat::square(rep.block_side);
    for (idx, &c) in rep.indices.iter().zip(&rep.coeffs) {
        let atom = dict.atom_pixels(idx)?;
        out.scaled_add(c, &atom);
    }
    Ok(out)
}
