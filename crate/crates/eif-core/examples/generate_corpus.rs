//! Regenerates the bundled benchmark corpus under assets/images.
//!
//! The corpus is deterministic; running this reproduces the committed
//! files byte for byte.

use std::path::PathBuf;

use eif_core::synth::standard_corpus;
use eif_core::write_pgm;

fn main() -> std::io::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("assets/images"));
    std::fs::create_dir_all(&out_dir)?;
    for (name, image) in standard_corpus() {
        let path = out_dir.join(format!("{name}.pgm"));
        std::fs::write(&path, write_pgm(&image))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
