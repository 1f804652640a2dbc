//! `eif` — fold images into encrypted containers and back, and benchmark
//! the sparse coders behind the scheme.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use eif_core::dict::{DictParams, Dictionary};
use eif_core::pursuit::StopRule;
use eif_core::{
    bench_table, fold, read_container, read_pgm, unfold, write_container, write_pgm, Coder,
    FoldedImage,
};

#[derive(Parser)]
#[command(
    name = "eif",
    about = "Encrypted image folding over sparse block representations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoderArg {
    /// Redundant cosine + Dirac dictionary.
    Rdcdb,
    /// Plain block DCT baseline.
    Dct,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse-code a PGM image and fold it into an .eif container.
    Fold(FoldArgs),
    /// Recover an image from an .eif container.
    Unfold {
        input: PathBuf,
        output: PathBuf,
        /// Secret key, 16 hex digits.
        #[arg(long, value_parser = parse_hex64)]
        key: u64,
    },
    /// Sparsity benchmark of both coders over a directory of PGM images.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value_t = 40.0)]
        psnr: f64,
        #[arg(long, default_value_t = 16)]
        block: usize,
        #[arg(long, default_value_t = 2)]
        redundancy: usize,
        /// Also write the report as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the public header of an .eif container.
    Info { input: PathBuf },
}

#[derive(clap::Args)]
struct FoldArgs {
    input: PathBuf,
    output: PathBuf,
    /// Reconstruction target in dB.
    #[arg(long, default_value_t = 40.0)]
    psnr: f64,
    /// Block side length in pixels.
    #[arg(long, default_value_t = 8)]
    block: usize,
    /// Cosine redundancy factor (even, >= 2).
    #[arg(long, default_value_t = 2)]
    redundancy: usize,
    /// Secret key, 16 hex digits. Required: folding without a key would
    /// store the image unprotected.
    #[arg(long, value_parser = parse_hex64)]
    key: u64,
    /// Public root seed, 16 hex digits. Omit for a fresh random seed
    /// (stored in the container; not secret).
    #[arg(long, value_parser = parse_hex64)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = CoderArg::Rdcdb)]
    coder: CoderArg,
}

fn parse_hex64(text: &str) -> std::result::Result<u64, String> {
    if text.len() != 16 || !text.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(format!("expected exactly 16 hex digits, got {:?}", text));
    }
    u64::from_str_radix(text, 16).map_err(|e| e.to_string())
}

fn random_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    std::collections::hash_map::RandomState::new()
        .build_hasher()
        .finish()
}

fn load_image(path: &Path) -> Result<eif_core::GrayImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_pgm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn load_container(path: &Path) -> Result<FoldedImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_container(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn dict_for(coder: CoderArg, block: usize, redundancy: usize) -> Result<Dictionary> {
    let params = match coder {
        CoderArg::Rdcdb => DictParams::rdc_db(block, redundancy)?,
        CoderArg::Dct => DictParams::dct_basis(block)?,
    };
    Ok(Dictionary::build(params))
}

fn cmd_fold(args: &FoldArgs) -> Result<()> {
    let image = load_image(&args.input)?;
    let dict = dict_for(args.coder, args.block, args.redundancy)?;
    let stop = StopRule::from_psnr_target(args.psnr, image.bitdepth());
    let seed_root = args.seed.unwrap_or_else(random_seed);
    let folded = fold(&image, &dict, &stop, args.key, seed_root)?;
    std::fs::write(&args.output, write_container(&folded))
        .with_context(|| format!("writing {}", args.output.display()))?;
    let sr = folded
        .sparsity_ratio()
        .map(|s| format!("{s:.2}"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "folded {} -> {}: Q={} H={} SR={} seed={:016x}",
        args.input.display(),
        args.output.display(),
        folded.q_total(),
        folded.host_count,
        sr,
        folded.seed_root
    );
    Ok(())
}

fn cmd_unfold(input: &Path, output: &Path, key: u64) -> Result<()> {
    let folded = load_container(input)?;
    let dict = Dictionary::build(folded.params);
    let image = unfold(&folded, &dict, key)?;
    std::fs::write(output, write_pgm(&image))
        .with_context(|| format!("writing {}", output.display()))?;
    println!("unfolded {} -> {}", input.display(), output.display());
    Ok(())
}

fn cmd_bench(
    dir: &Path,
    psnr_db: f64,
    block: usize,
    redundancy: usize,
    csv: Option<&Path>,
) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .pgm images found in {}", dir.display());
    }
    let mut images = Vec::new();
    for path in &paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        images.push((name, load_image(path)?));
    }
    let coders = [Coder::RdcDb { redundancy }, Coder::Dct];
    let report = bench_table(&images, &coders, psnr_db, block)?;
    print!("{}", report.to_table());
    if let Some(csv_path) = csv {
        std::fs::write(csv_path, report.to_csv())
            .with_context(|| format!("writing {}", csv_path.display()))?;
        println!("csv written to {}", csv_path.display());
    }
    if !report.failures.is_empty() {
        bail!("{} benchmark cell(s) failed", report.failures.len());
    }
    Ok(())
}

fn cmd_info(input: &Path) -> Result<()> {
    let folded = load_container(input)?;
    let params = folded.params;
    println!("container: {}", input.display());
    println!(
        "image: {}x{} @ {} bit",
        folded.width, folded.height, folded.bitdepth
    );
    println!(
        "dictionary: n={} m={} redundancy={} coder={}",
        params.block_side(),
        params.cosine_count(),
        params.redundancy(),
        if params.include_dirac() {
            "rdcdb"
        } else {
            "dct"
        }
    );
    println!("stop rule: {:?}", folded.stop);
    println!(
        "blocks: Q={} hosts H={}",
        folded.q_total(),
        folded.host_count
    );
    match folded.sparsity_ratio() {
        Some(sr) => println!("sparsity ratio: {sr:.2}"),
        None => println!("sparsity ratio: undefined (no coefficients)"),
    }
    println!("seed root: {:016x}", folded.seed_root);
    let show = (folded.host_count as usize).min(4);
    for i in 0..show {
        println!("host {i} seed: {:016x}", folded.host_seed(i));
    }
    if folded.host_count as usize > show {
        println!("... ({} more hosts)", folded.host_count as usize - show);
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fold(ref args) => cmd_fold(args),
        Command::Unfold {
            ref input,
            ref output,
            key,
        } => cmd_unfold(input, output, key),
        Command::Bench {
            ref dir,
            psnr,
            block,
            redundancy,
            ref csv,
        } => cmd_bench(dir, psnr, block, redundancy, csv.as_deref()),
        Command::Info { ref input } => cmd_info(input),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
