//! Joint redundant-cosine + Dirac dictionary over square pixel blocks.
//!
//! The 1-D set holds `m` cosine atoms `v_i` (rows of the type-II cosine
//! kernel sampled at `n` points, unit-normalized) and, when the Dirac side
//! is enabled, the `n` standard basis vectors `e_i`. The 2-D atoms are the
//! Kronecker pairs of these, giving `(m+n)^2` atoms in four segments:
//! cos(x)cos, cos(x)dirac, dirac(x)cos, dirac(x)dirac. Only the 1-D tables
//! are materialized; 2-D atoms are expanded on demand.
//!
//! Inner products of a residual against the whole dictionary reduce to
//! zero-padded fast cosine transforms of its rows and columns, so a full
//! sweep costs O(m^2 log2 m) instead of O(m^2 n^2).

use crate::dct::ZeroPadDct;
use crate::error::{EifError, Result};
use crate::mat::Mat;

/// Which Kronecker pair a flat atom index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    /// `v_i (x) v_j`, both factors cosine atoms.
    CosCos,
    /// `v_i (x) e_j`: cosine column profile placed in pixel column `j`.
    CosDirac,
    /// `e_i (x) v_j`: cosine row profile placed in pixel row `i`.
    DiracCos,
    /// `e_i (x) e_j`: a single unit pixel.
    DiracDirac,
}

/// Position of one atom, both as a flat 1-based index and as
/// (segment, i, j) with 1-based within-segment coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomIndex {
    pub flat: u32,
    pub segment: Segment,
    pub i: u32,
    pub j: u32,
}

/// Block side length, cosine count, and redundancy factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DictParams {
    n: usize,
    m: usize,
    redundancy: usize,
    include_dirac: bool,
}

impl DictParams {
    /// Redundant cosine + Dirac parameters with `m = redundancy * n`.
    /// The redundancy factor must be even and at least 2.
    pub fn rdc_db(n: usize, redundancy: usize) -> Result<Self> {
        Self::new(n, redundancy * n, true)
    }

    /// Orthonormal cosine basis (`m = n`) joined with the Dirac basis.
    pub fn dc_db(n: usize) -> Result<Self> {
        Self::new(n, n, true)
    }

    /// Plain block-DCT basis: `m = n`, Dirac segment disabled. This is the
    /// baseline coder; the pursuit machinery is shared unchanged.
    pub fn dct_basis(n: usize) -> Result<Self> {
        Self::new(n, n, false)
    }

    pub fn new(n: usize, m: usize, include_dirac: bool) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(EifError::InvalidParams(
                "block side and cosine count must be positive".into(),
            ));
        }
        let redundancy = if m == n {
            1
        } else {
            if !m.is_multiple_of(n) {
                return Err(EifError::InvalidParams(format!(
                    "cosine count {m} is not a multiple of block side {n}"
                )));
            }
            let r = m / n;
            if r < 2 || !r.is_multiple_of(2) {
                return Err(EifError::InvalidParams(format!(
                    "redundancy factor {r} must be even and at least 2"
                )));
            }
            r
        };
        Ok(DictParams {
            n,
            m,
            redundancy,
            include_dirac,
        })
    }

    pub fn block_side(&self) -> usize {
        self.n
    }

    pub fn cosine_count(&self) -> usize {
        self.m
    }

    pub fn redundancy(&self) -> usize {
        self.redundancy
    }

    pub fn include_dirac(&self) -> bool {
        self.include_dirac
    }

    /// Total number of 2-D atoms: `(m+n)^2`, or `m^2` without the Dirac side.
    pub fn atom_count(&self) -> usize {
        if self.include_dirac {
            (self.m + self.n) * (self.m + self.n)
        } else {
            self.m * self.m
        }
    }
}

/// Immutable dictionary state: cosine kernel table, per-atom normalization,
/// and the planned fast transform. Shareable across threads.
pub struct Dictionary {
    params: DictParams,
    /// psi[s][i] = cos(pi*(2s+1)*i/(2m)), s = 0..n, i = 0..m (0-based).
    psi: Mat,
    /// norms[i] = 1 / ||psi column i||, so every cosine atom has unit norm.
    norms: Vec<f64>,
    dct: ZeroPadDct,
}

/// The four inner-product planes of one residual against the dictionary.
///
/// `cc` is m x m, `cd` is m x n, `dc` is n x m, `dd` is n x n. Entry
/// layouts follow the 1-based (i, j) coordinates of [`AtomIndex`]. Without
/// the Dirac side only `cc` is populated.
pub struct CorrelationMap {
    params: DictParams,
    pub cc: Mat,
    pub cd: Mat,
    pub dc: Mat,
    pub dd: Mat,
}

impl Dictionary {
    /// Build the dictionary tables for the given parameters.
    pub fn build(params: DictParams) -> Self {
        let (n, m) = (params.n, params.m);
        let mut psi = Mat::zeros(n, m);
        for s in 0..n {
            for i in 0..m {
                let theta = std::f64::consts::PI * (2 * s + 1) as f64 * i as f64 / (2.0 * m as f64);
                psi.set(s, i, theta.cos());
            }
        }
        let norms = (0..m)
            .map(|i| {
                let sq: f64 = (0..n).map(|s| psi.get(s, i) * psi.get(s, i)).sum();
                1.0 / sq.sqrt()
            })
            .collect();
        Dictionary {
            params,
            psi,
            norms,
            dct: ZeroPadDct::new(m),
        }
    }

    pub fn params(&self) -> &DictParams {
        &self.params
    }

    pub fn atom_count(&self) -> usize {
        self.params.atom_count()
    }

    /// Value of the `i`-th (1-based) unit-norm 1-D cosine atom at sample `s`
    /// (1-based).
    pub fn cosine_atom(&self, i: u32, s: u32) -> f64 {
        let i0 = (i - 1) as usize;
        let s0 = (s - 1) as usize;
        self.norms[i0] * self.psi.get(s0, i0)
    }

    /// Resolve a flat 1-based index into its segment and coordinates.
    pub fn atom_index(&self, flat: u32) -> Result<AtomIndex> {
        let (n, m) = (self.params.n as u64, self.params.m as u64);
        let j_count = self.params.atom_count() as u64;
        let f = flat as u64;
        if f == 0 || f > j_count {
            return Err(EifError::AtomIndexOutOfRange {
                index: f,
                count: j_count,
            });
        }
        let z = f - 1;
        let (segment, i, j) = if z < m * m {
            (Segment::CosCos, z / m + 1, z % m + 1)
        } else if z < m * m + m * n {
            let z = z - m * m;
            (Segment::CosDirac, z / n + 1, z % n + 1)
        } else if z < m * m + 2 * m * n {
            let z = z - m * m - m * n;
            (Segment::DiracCos, z / m + 1, z % m + 1)
        } else {
            let z = z - m * m - 2 * m * n;
            (Segment::DiracDirac, z / n + 1, z % n + 1)
        };
        Ok(AtomIndex {
            flat,
            segment,
            i: i as u32,
            j: j as u32,
        })
    }

    /// Flat 1-based index of (segment, i, j) with 1-based coordinates.
    pub fn flat_index(&self, segment: Segment, i: u32, j: u32) -> u32 {
        let (n, m) = (self.params.n as u64, self.params.m as u64);
        let (i, j) = (i as u64, j as u64);
        let f = match segment {
            Segment::CosCos => (i - 1) * m + j,
            Segment::CosDirac => m * m + (i - 1) * n + j,
            Segment::DiracCos => m * m + m * n + (i - 1) * m + j,
            Segment::DiracDirac => m * m + 2 * m * n + (i - 1) * n + j,
        };
        f as u32
    }

    /// Expand one atom to its `n x n` pixel matrix. Unit Frobenius norm.
    pub fn atom_pixels(&self, idx: &AtomIndex) -> Result<Mat> {
        let n = self.params.n;
        if idx.flat == 0 || idx.flat as usize > self.atom_count() {
            return Err(EifError::AtomIndexOutOfRange {
                index: idx.flat as u64,
                count: self.atom_count() as u64,
            });
        }
        let mut out = Mat::square(n);
        match idx.segment {
            Segment::CosCos => {
                for s in 0..n {
                    let a = self.cosine_atom(idx.i, s as u32 + 1);
                    for r in 0..n {
                        out.set(s, r, a * self.cosine_atom(idx.j, r as u32 + 1));
                    }
                }
            }
            Segment::CosDirac => {
                let col = (idx.j - 1) as usize;
                for s in 0..n {
                    out.set(s, col, self.cosine_atom(idx.i, s as u32 + 1));
                }
            }
            Segment::DiracCos => {
                let row = (idx.i - 1) as usize;
                for r in 0..n {
                    out.set(row, r, self.cosine_atom(idx.j, r as u32 + 1));
                }
            }
            Segment::DiracDirac => {
                out.set((idx.i - 1) as usize, (idx.j - 1) as usize, 1.0);
            }
        }
        Ok(out)
    }

    /// All inner products of `residual` against the dictionary, via
    /// zero-padded fast cosine transforms of its rows and columns.
    pub fn correlate(&self, residual: &Mat) -> CorrelationMap {
        let (n, m) = (self.params.n, self.params.m);
        assert!(
            residual.rows() == n && residual.cols() == n,
            "residual must be {n}x{n}"
        );
        let mut scratch = self.dct.make_scratch();
        let mut line = vec![0.0; n];
        let mut spectrum = vec![0.0; m];

        // Column transforms: v(i, j) = sum_s psi(s, i) * R(s, j). The
        // cos(x)dirac plane is this up to normalization, and it is also the
        // first separable stage of the cos(x)cos plane.
        let mut v = Mat::zeros(m, n);
        let mut cd = Mat::zeros(m, n);
        for j in 0..n {
            for (s, slot) in line.iter_mut().enumerate() {
                *slot = residual.get(s, j);
            }
            self.dct.transform_into(&line, &mut spectrum, &mut scratch);
            for (i, &sp) in spectrum.iter().enumerate() {
                v.set(i, j, sp);
                cd.set(i, j, self.norms[i] * sp);
            }
        }

        // Second stage: transform the rows of v to finish the 2-D plane.
        let mut cc = Mat::zeros(m, m);
        for i in 0..m {
            for (r, slot) in line.iter_mut().enumerate() {
                *slot = v.get(i, r);
            }
            self.dct.transform_into(&line, &mut spectrum, &mut scratch);
            for (j, &sp) in spectrum.iter().enumerate() {
                cc.set(i, j, self.norms[i] * self.norms[j] * sp);
            }
        }

        if !self.params.include_dirac {
            return CorrelationMap {
                params: self.params,
                cc,
                cd: Mat::zeros(0, 0),
                dc: Mat::zeros(0, 0),
                dd: Mat::zeros(0, 0),
            };
        }

        // Row transforms: dirac(x)cos plane.
        let mut dc = Mat::zeros(n, m);
        for i in 0..n {
            for (r, slot) in line.iter_mut().enumerate() {
                *slot = residual.get(i, r);
            }
            self.dct.transform_into(&line, &mut spectrum, &mut scratch);
            for (j, &sp) in spectrum.iter().enumerate() {
                dc.set(i, j, self.norms[j] * sp);
            }
        }

        CorrelationMap {
            params: self.params,
            cc,
            cd,
            dc,
            dd: residual.clone(),
        }
    }
}

impl CorrelationMap {
    pub fn params(&self) -> &DictParams {
        &self.params
    }

    /// Atom with the largest absolute inner product, with its signed value.
    /// Ties break toward the smaller flat index. `None` when every entry is
    /// zero (a zero residual).
    pub fn argmax_atom(&self, dict: &Dictionary) -> Option<(AtomIndex, f64)> {
        self.argmax_excluding(dict, &[])
    }

    /// Same as [`Self::argmax_atom`] but skipping flats marked in `banned`
    /// (0-based, may be shorter than the atom count).
    pub fn argmax_excluding(&self, dict: &Dictionary, banned: &[bool]) -> Option<(AtomIndex, f64)> {
        let mut best: Option<(u32, f64)> = None;
        let mut offset = 0u32;
        let scan = |plane: &Mat, best: &mut Option<(u32, f64)>, offset: &mut u32| {
            for (k, &value) in plane.as_slice().iter().enumerate() {
                let flat = *offset + k as u32 + 1;
                if banned.get(flat as usize - 1).copied().unwrap_or(false) {
                    continue;
                }
                match best {
                    Some((_, b)) if value.abs() <= b.abs() => {}
                    _ if value == 0.0 => {}
                    _ => *best = Some((flat, value)),
                }
            }
            *offset += plane.as_slice().len() as u32;
        };
        scan(&self.cc, &mut best, &mut offset);
        scan(&self.cd, &mut best, &mut offset);
        scan(&self.dc, &mut best, &mut offset);
        scan(&self.dd, &mut best, &mut offset);
        best.map(|(flat, value)| {
            let idx = dict
                .atom_index(flat)
                .expect("plane scan stays within atom count");
            (idx, value)
        })
    }
}
