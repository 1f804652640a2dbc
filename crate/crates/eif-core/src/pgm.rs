//! Binary PGM (P5) reader and writer.
//!
//! Supports 8-bit (maxval 255) and 16-bit (maxval 65535, big-endian
//! samples, per the format) grayscale. The writer emits a canonical header
//! (`P5\n<w> <h>\n<maxval>\n`); reading such a file and writing it back is
//! byte-identical. Readers return structured errors on anything malformed
//! and never panic on arbitrary input.

use crate::error::{EifError, Result};

/// Row-major grayscale image at 8 or 16 bits per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    bitdepth: u8,
    samples: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, bitdepth: u8, samples: Vec<u16>) -> Result<Self> {
        if bitdepth != 8 && bitdepth != 16 {
            return Err(EifError::PgmUnsupported(format!(
                "bit depth {bitdepth} (only 8 and 16 are supported)"
            )));
        }
        if samples.len() != width as usize * height as usize {
            return Err(EifError::PgmFormat(format!(
                "{} samples for {width}x{height}",
                samples.len()
            )));
        }
        if bitdepth == 8 && samples.iter().any(|&s| s > 255) {
            return Err(EifError::PgmFormat("8-bit sample above 255".into()));
        }
        Ok(GrayImage {
            width,
            height,
            bitdepth,
            samples,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bitdepth(&self) -> u8 {
        self.bitdepth
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    /// Skip whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.pos += 1;
                }
                Some(b'#') => {
                    while let Some(b) = self.bump() {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_separators();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start || self.pos - start > 10 {
            return Err(EifError::PgmFormat(format!("missing or oversized {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<u64>()
            .map_err(|_| EifError::PgmFormat(format!("bad {what}")))
    }
}

/// Parse a binary P5 file.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P2") {
        return Err(EifError::PgmUnsupported(
            "ASCII (P2) PGM; only binary P5 is supported".into(),
        ));
    }
    if !bytes.starts_with(b"P5") {
        return Err(EifError::PgmFormat("missing P5 magic".into()));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    let maxval = cur.read_uint("maxval")?;
    // Exactly one whitespace byte separates the header from the raster.
    match cur.bump() {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(EifError::PgmFormat("missing raster separator".into())),
    }

    if width == 0 || height == 0 || width > 1 << 20 || height > 1 << 20 {
        return Err(EifError::PgmFormat(format!(
            "bad dimensions {width}x{height}"
        )));
    }
    let bitdepth = match maxval {
        255 => 8u8,
        65535 => 16u8,
        other => {
            return Err(EifError::PgmUnsupported(format!(
                "maxval {other} (only 255 and 65535 are supported)"
            )))
        }
    };
    let count = (width * height) as usize;
    let bytes_per = if bitdepth == 8 { 1 } else { 2 };
    let raster = &bytes[cur.pos..];
    if raster.len() < count * bytes_per {
        return Err(EifError::PgmFormat("truncated raster".into()));
    }
    if raster.len() > count * bytes_per {
        return Err(EifError::PgmFormat("trailing bytes after raster".into()));
    }
    let samples = if bitdepth == 8 {
        raster.iter().map(|&b| b as u16).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    GrayImage::new(width as u32, height as u32, bitdepth, samples)
}

/// Serialize to canonical binary P5.
pub fn write_pgm(image: &GrayImage) -> Vec<u8> {
    let maxval: u32 = if image.bitdepth == 8 { 255 } else { 65535 };
    let mut out = format!("P5\n{} {}\n{}\n", image.width, image.height, maxval).into_bytes();
    if image.bitdepth == 8 {
        out.extend(image.samples.iter().map(|&s| s as u8));
    } else {
        for &s in &image.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}
