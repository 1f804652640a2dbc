//! Procedural grayscale test photographs.
//!
//! Deterministic generators with the broad statistics of natural images:
//! multi-octave value noise down to two-pixel cells, soft curved edges,
//! and film-grain speckle. Class recipes are calibrated so that, at a
//! 40 dB target with 16x16 blocks, the sparsity ratios of the bundled
//! corpus span the range canonical test photographs produce. The corpus is
//! seeded and reproducible bit-exactly; canonical photographs can be
//! dropped in alongside when available.

use crate::pgm::GrayImage;
use crate::prng::SplitMix64;

/// Cosine-interpolated value noise with grid spacing `cell`, added into
/// `field` with weight `amp`.
fn add_value_noise(
    field: &mut [f64],
    width: usize,
    height: usize,
    cell: usize,
    amp: f64,
    rng: &mut SplitMix64,
) {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.next_unit()).collect();
    let ease = |t: f64| (1.0 - (std::f64::consts::PI * t).cos()) / 2.0;
    for y in 0..height {
        let gy = y / cell;
        let ty = ease((y % cell) as f64 / cell as f64);
        for x in 0..width {
            let gx = x / cell;
            let tx = ease((x % cell) as f64 / cell as f64);
            let v00 = grid[gy * gw + gx];
            let v01 = grid[gy * gw + gx + 1];
            let v10 = grid[(gy + 1) * gw + gx];
            let v11 = grid[(gy + 1) * gw + gx + 1];
            let top = v00 + (v01 - v00) * tx;
            let bottom = v10 + (v11 - v10) * tx;
            field[y * width + x] += amp * (top + (bottom - top) * ty);
        }
    }
}

/// Soft sigmoid transition across a randomly placed, gently curved line.
fn add_edge(field: &mut [f64], width: usize, height: usize, amp: f64, rng: &mut SplitMix64) {
    let cx = (rng.next_unit() * 0.5 + 0.5) * width as f64;
    let cy = (rng.next_unit() * 0.5 + 0.5) * height as f64;
    let theta = rng.next_unit() * std::f64::consts::PI;
    let (dx, dy) = (theta.cos(), theta.sin());
    let signed_amp = amp * rng.next_unit().signum() * (0.6 + 0.4 * rng.next_unit().abs());
    let curvature = rng.next_unit() * 0.004;
    let softness = 1.0 + (rng.next_unit() * 0.5 + 0.5) * 2.0;
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 - cx) * dx + (y as f64 - cy) * dy;
            let v = -(x as f64 - cx) * dy + (y as f64 - cy) * dx;
            let d = u + curvature * v * v;
            field[y * width + x] += signed_amp / (1.0 + (-d / softness).exp());
        }
    }
}

/// Character presets for the generated corpus, from smooth portrait
/// statistics down to dense foliage texture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageClass {
    /// Smooth shading with a few contours; the sparsest class.
    Portrait,
    /// Broad structures over moderate detail.
    Landscape,
    /// Mid-scale patterned content.
    Still,
    /// Busy mixed scales.
    Street,
    /// Heavy fine-grain texture; the densest class.
    Foliage,
}

struct Recipe {
    /// Amplitude per octave, cells 64/32/16/8/4/2.
    octaves: [f64; 6],
    edges: usize,
    edge_amp: f64,
    grain: f64,
}

impl ImageClass {
    fn recipe(self) -> Recipe {
        match self {
            ImageClass::Portrait => Recipe {
                octaves: [50.0, 34.0, 28.0, 20.0, 12.5, 8.5],
                edges: 6,
                edge_amp: 40.0,
                grain: 4.3,
            },
            ImageClass::Landscape => Recipe {
                octaves: [46.0, 33.0, 27.0, 21.0, 14.0, 9.5],
                edges: 7,
                edge_amp: 36.0,
                grain: 5.0,
            },
            ImageClass::Still => Recipe {
                octaves: [44.0, 32.0, 27.0, 21.0, 14.0, 9.0],
                edges: 8,
                edge_amp: 34.0,
                grain: 4.8,
            },
            ImageClass::Street => Recipe {
                octaves: [44.0, 32.0, 26.5, 22.0, 15.5, 11.0],
                edges: 6,
                edge_amp: 32.0,
                grain: 5.5,
            },
            ImageClass::Foliage => Recipe {
                octaves: [34.0, 27.0, 25.0, 23.0, 19.0, 14.5],
                edges: 4,
                edge_amp: 24.0,
                grain: 8.5,
            },
        }
    }
}

/// Deterministic synthetic photograph of the given class.
pub fn class_image(class: ImageClass, width: u32, height: u32, seed: u64) -> GrayImage {
    let (w, h) = (width as usize, height as usize);
    let mut rng = SplitMix64::new(seed);
    let recipe = class.recipe();

    let mut field = vec![0.0f64; w * h];
    for (cell, amp) in [64usize, 32, 16, 8, 4, 2].into_iter().zip(recipe.octaves) {
        if amp > 0.0 {
            add_value_noise(&mut field, w, h, cell.min(w).min(h), amp, &mut rng);
        }
    }
    for _ in 0..recipe.edges {
        add_edge(&mut field, w, h, recipe.edge_amp, &mut rng);
    }
    if recipe.grain > 0.0 {
        for f in field.iter_mut() {
            *f += recipe.grain * rng.next_unit();
        }
    }

    // Normalize into a photographic range with headroom at both ends.
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let samples: Vec<u16> = field
        .iter()
        .map(|&f| (8.0 + (f - lo) / span * 239.0).round() as u16)
        .collect();
    GrayImage::new(width, height, 8, samples).expect("generated samples are in range")
}

/// General-purpose natural-statistics test image.
pub fn natural_image(width: u32, height: u32, seed: u64) -> GrayImage {
    class_image(ImageClass::Still, width, height, seed)
}

/// The bundled benchmark corpus: five 256x256 8-bit images of distinct
/// character, with fixed seeds. The portrait image is the calibrated
/// stand-in for canonical smooth-portrait statistics.
pub fn standard_corpus() -> Vec<(String, GrayImage)> {
    [
        ("portrait", ImageClass::Portrait, 4242u64),
        ("landscape", ImageClass::Landscape, 1002),
        ("still", ImageClass::Still, 1003),
        ("street", ImageClass::Street, 1004),
        ("foliage", ImageClass::Foliage, 1005),
    ]
    .into_iter()
    .map(|(name, class, seed)| (name.to_string(), class_image(class, 256, 256, seed)))
    .collect()
}
