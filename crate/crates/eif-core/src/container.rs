//! The `.eif` container: a versioned little-endian binary carrying the
//! folded image. Layout, in order:
//!
//! ```text
//! magic "EIF1" | version u16 | flags u16 (reserved, 0)
//! width u32 | height u32 | bitdepth u8 | dirac u8
//! n u16 | m u32 | redundancy u16 | Q u32 | H u32
//! stop rule: mode u8 | value f64 | atoms u32
//! seed_root u64
//! per host: offset f64 | scale f64
//! per block: K u32
//! atom indices: sum(K) x u32 (flat, 1-based)
//! host samples: H * n^2 x (u8 | u16, by bit depth)
//! ```
//!
//! Every section length is implied by the header, lengths are verified
//! before any allocation, trailing bytes are an error, and reals round-trip
//! bit-exactly.

use crate::dict::DictParams;
use crate::error::{EifError, Result};
use crate::fold::{FoldedImage, QuantParams};
use crate::pursuit::StopRule;

pub const MAGIC: [u8; 4] = *b"EIF1";
pub const VERSION: u16 = 1;

fn stop_record(stop: &StopRule) -> (u8, f64, u32) {
    match *stop {
        StopRule::TargetBlockMse(v) => (0, v, 0),
        StopRule::MaxAtoms(k) => (1, 0.0, k as u32),
        StopRule::ResidualTol(v) => (2, v, 0),
    }
}

fn stop_from_record(mode: u8, value: f64, atoms: u32) -> Result<StopRule> {
    let rule = match mode {
        0 => StopRule::TargetBlockMse(value),
        1 => StopRule::MaxAtoms(atoms as usize),
        2 => StopRule::ResidualTol(value),
        other => {
            return Err(EifError::ContainerFormat(format!(
                "unknown stop rule mode {other}"
            )))
        }
    };
    rule.validate()
        .map_err(|e| EifError::ContainerFormat(e.to_string()))?;
    Ok(rule)
}

/// Serialize a folded image.
pub fn write_container(folded: &FoldedImage) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes()); // reserved flags
    out.extend_from_slice(&folded.width.to_le_bytes());
    out.extend_from_slice(&folded.height.to_le_bytes());
    out.push(folded.bitdepth);
    out.push(folded.params.include_dirac() as u8);
    out.extend_from_slice(&(folded.params.block_side() as u16).to_le_bytes());
    out.extend_from_slice(&(folded.params.cosine_count() as u32).to_le_bytes());
    out.extend_from_slice(&(folded.params.redundancy() as u16).to_le_bytes());
    out.extend_from_slice(&(folded.q_total() as u32).to_le_bytes());
    out.extend_from_slice(&folded.host_count.to_le_bytes());
    let (mode, value, atoms) = stop_record(&folded.stop);
    out.push(mode);
    out.extend_from_slice(&value.to_le_bytes());
    out.extend_from_slice(&atoms.to_le_bytes());
    out.extend_from_slice(&folded.seed_root.to_le_bytes());
    for qp in &folded.quant {
        out.extend_from_slice(&qp.offset.to_le_bytes());
        out.extend_from_slice(&qp.scale.to_le_bytes());
    }
    for &k in &folded.block_ks {
        out.extend_from_slice(&k.to_le_bytes());
    }
    for &flat in &folded.atom_flats {
        out.extend_from_slice(&flat.to_le_bytes());
    }
    if folded.bitdepth == 8 {
        out.extend(folded.host_samples.iter().map(|&s| s as u8));
    } else {
        for &s in &folded.host_samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < len {
            return Err(EifError::ContainerFormat(format!("truncated {what}")));
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Parse and fully validate a container. Arbitrary input yields structured
/// errors, never a panic or an unbounded allocation.
pub fn read_container(bytes: &[u8]) -> Result<FoldedImage> {
    let mut r = Reader { bytes, pos: 0 };

    if r.take(4, "magic")? != MAGIC {
        return Err(EifError::ContainerFormat("bad magic".into()));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(EifError::ContainerVersion(version));
    }
    let flags = r.u16("flags")?;
    if flags != 0 {
        return Err(EifError::ContainerFormat(format!(
            "unsupported flags {flags:#06x}"
        )));
    }

    let width = r.u32("width")?;
    let height = r.u32("height")?;
    let bitdepth = r.u8("bitdepth")?;
    if bitdepth != 8 && bitdepth != 16 {
        return Err(EifError::ContainerFormat(format!("bit depth {bitdepth}")));
    }
    let dirac = match r.u8("dirac flag")? {
        0 => false,
        1 => true,
        other => {
            return Err(EifError::ContainerFormat(format!(
                "dirac flag must be 0 or 1, got {other}"
            )))
        }
    };
    let n = r.u16("block side")? as usize;
    let m = r.u32("cosine count")? as usize;
    let redundancy = r.u16("redundancy")? as usize;
    let params =
        DictParams::new(n, m, dirac).map_err(|e| EifError::ContainerFormat(e.to_string()))?;
    if params.redundancy() != redundancy {
        return Err(EifError::ContainerFormat(format!(
            "declared redundancy {redundancy} does not match m/n"
        )));
    }

    let q = r.u32("block count")? as u64;
    let h = r.u32("host count")? as u64;
    if n == 0
        || !(width as u64).is_multiple_of(n as u64)
        || !(height as u64).is_multiple_of(n as u64)
    {
        return Err(EifError::ContainerFormat(format!(
            "dimensions {width}x{height} not divisible by block side {n}"
        )));
    }
    let grid = (width as u64 / n as u64) * (height as u64 / n as u64);
    if q != grid {
        return Err(EifError::ContainerFormat(format!(
            "block count {q} does not match {grid} grid cells"
        )));
    }
    if h > q {
        return Err(EifError::ContainerFormat(format!(
            "host count {h} exceeds block count {q}"
        )));
    }

    let stop_mode = r.u8("stop mode")?;
    let stop_value = r.f64("stop value")?;
    let stop_atoms = r.u32("stop atoms")?;
    let stop = stop_from_record(stop_mode, stop_value, stop_atoms)?;
    let seed_root = r.u64("seed root")?;

    // Length checks precede every allocation; sizes come from checked
    // 64-bit arithmetic on header fields already bounded by the grid check.
    let quant_bytes = (h as usize)
        .checked_mul(16)
        .ok_or_else(|| EifError::ContainerFormat("host table overflow".into()))?;
    if r.remaining() < quant_bytes {
        return Err(EifError::ContainerFormat("truncated host table".into()));
    }
    let mut quant = Vec::with_capacity(h as usize);
    for i in 0..h {
        let offset = r.f64("quant offset")?;
        let scale = r.f64("quant scale")?;
        if !offset.is_finite() || !scale.is_finite() || scale == 0.0 {
            return Err(EifError::ContainerFormat(format!(
                "bad quantization parameters for host {i}"
            )));
        }
        quant.push(QuantParams { offset, scale });
    }

    let ks_bytes = (q as usize)
        .checked_mul(4)
        .ok_or_else(|| EifError::ContainerFormat("sidecar overflow".into()))?;
    if r.remaining() < ks_bytes {
        return Err(EifError::ContainerFormat(
            "truncated coefficient counts".into(),
        ));
    }
    let n2 = (n * n) as u32;
    let mut block_ks = Vec::with_capacity(q as usize);
    let mut total_k: u64 = 0;
    for _ in 0..q {
        let k = r.u32("coefficient count")?;
        if k > n2 {
            return Err(EifError::ContainerFormat(format!(
                "coefficient count {k} exceeds {n2}"
            )));
        }
        total_k += k as u64;
        block_ks.push(k);
    }

    let idx_bytes = (total_k as usize)
        .checked_mul(4)
        .ok_or_else(|| EifError::ContainerFormat("index section overflow".into()))?;
    if r.remaining() < idx_bytes {
        return Err(EifError::ContainerFormat("truncated atom indices".into()));
    }
    let atom_count = params.atom_count() as u32;
    let mut atom_flats = Vec::with_capacity(total_k as usize);
    for _ in 0..total_k {
        let flat = r.u32("atom index")?;
        if flat == 0 || flat > atom_count {
            return Err(EifError::AtomIndexOutOfRange {
                index: flat as u64,
                count: atom_count as u64,
            });
        }
        atom_flats.push(flat);
    }

    let sample_count = (h as usize)
        .checked_mul(n * n)
        .ok_or_else(|| EifError::ContainerFormat("sample section overflow".into()))?;
    let bytes_per = if bitdepth == 8 { 1 } else { 2 };
    if r.remaining() < sample_count * bytes_per {
        return Err(EifError::ContainerFormat("truncated host samples".into()));
    }
    let host_samples: Vec<u16> = if bitdepth == 8 {
        r.take(sample_count, "host samples")?
            .iter()
            .map(|&b| b as u16)
            .collect()
    } else {
        r.take(sample_count * 2, "host samples")?
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };

    if r.remaining() != 0 {
        return Err(EifError::ContainerFormat(format!(
            "{} trailing bytes",
            r.remaining()
        )));
    }

    Ok(FoldedImage {
        width,
        height,
        bitdepth,
        params,
        stop,
        host_count: h as u32,
        seed_root,
        quant,
        block_ks,
        atom_flats,
        host_samples,
    })
}
