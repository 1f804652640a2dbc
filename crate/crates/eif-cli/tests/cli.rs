//! End-to-end command tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eif_core::synth::{class_image, standard_corpus, ImageClass};
use eif_core::{psnr, read_pgm, write_pgm};

fn eif() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eif"))
}

fn run(args: &[&str]) -> Output {
    eif().args(args).output().expect("binary runs")
}

fn write_test_image(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let img = class_image(ImageClass::Still, 64, 64, seed);
    let path = dir.join(name);
    std::fs::write(&path, write_pgm(&img)).unwrap();
    path
}

const KEY: &str = "00112233445566aa";
const OTHER_KEY: &str = "ffeeddccbbaa0099";
const SEED: &str = "0000000000000042";

#[test]
fn fold_unfold_round_trip_meets_target() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path(), "in.pgm", 5);
    let container = dir.path().join("out.eif");
    let output = dir.path().join("back.pgm");

    let fold = run(&[
        "fold",
        input.to_str().unwrap(),
        container.to_str().unwrap(),
        "--psnr",
        "40",
        "--block",
        "8",
        "--key",
        KEY,
        "--seed",
        SEED,
    ]);
    assert!(
        fold.status.success(),
        "{}",
        String::from_utf8_lossy(&fold.stderr)
    );

    let unfold = run(&[
        "unfold",
        container.to_str().unwrap(),
        output.to_str().unwrap(),
        "--key",
        KEY,
    ]);
    assert!(unfold.status.success());

    let original = read_pgm(&std::fs::read(&input).unwrap()).unwrap();
    let recovered = read_pgm(&std::fs::read(&output).unwrap()).unwrap();
    let quality = psnr(&original, &recovered).unwrap();
    assert!(quality >= 39.5, "psnr {quality}");
}

#[test]
fn wrong_key_unfolds_structurally_but_scrambles_content() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path(), "in.pgm", 6);
    let container = dir.path().join("out.eif");
    let good = dir.path().join("good.pgm");
    let bad = dir.path().join("bad.pgm");

    assert!(run(&[
        "fold",
        input.to_str().unwrap(),
        container.to_str().unwrap(),
        "--block",
        "8",
        "--key",
        KEY,
        "--seed",
        SEED,
    ])
    .status
    .success());
    assert!(run(&[
        "unfold",
        container.to_str().unwrap(),
        good.to_str().unwrap(),
        "--key",
        KEY
    ])
    .status
    .success());
    // Wrong key still succeeds structurally.
    assert!(run(&[
        "unfold",
        container.to_str().unwrap(),
        bad.to_str().unwrap(),
        "--key",
        OTHER_KEY,
    ])
    .status
    .success());

    let original = read_pgm(&std::fs::read(&input).unwrap()).unwrap();
    let good_img = read_pgm(&std::fs::read(&good).unwrap()).unwrap();
    let bad_img = read_pgm(&std::fs::read(&bad).unwrap()).unwrap();
    let good_psnr = psnr(&original, &good_img).unwrap();
    let bad_psnr = psnr(&original, &bad_img).unwrap();
    assert!(good_psnr - bad_psnr >= 15.0, "{good_psnr} vs {bad_psnr}");
}

#[test]
fn fold_requires_an_explicit_key() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path(), "in.pgm", 7);
    let out = run(&[
        "fold",
        input.to_str().unwrap(),
        dir.path().join("out.eif").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--key"), "{stderr}");
}

#[test]
fn malformed_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path(), "in.pgm", 8);
    for bad_key in ["12345", "zz112233445566aa", "00112233445566aa00"] {
        let out = run(&[
            "fold",
            input.to_str().unwrap(),
            dir.path().join("out.eif").to_str().unwrap(),
            "--key",
            bad_key,
            "--seed",
            SEED,
        ]);
        assert!(!out.status.success(), "key {bad_key} accepted");
        assert!(String::from_utf8_lossy(&out.stderr).contains("16 hex digits"));
    }
}

#[test]
fn info_prints_header_and_never_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path(), "in.pgm", 9);
    let container = dir.path().join("out.eif");
    assert!(run(&[
        "fold",
        input.to_str().unwrap(),
        container.to_str().unwrap(),
        "--block",
        "8",
        "--key",
        KEY,
        "--seed",
        SEED,
    ])
    .status
    .success());
    let out = run(&["info", container.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Q=64"));
    assert!(text.contains("hosts H="));
    assert!(text.contains("sparsity ratio:"));
    assert!(text.contains("seed root: 0000000000000042"));
    assert!(!text.contains(KEY), "secret key leaked:\n{text}");
}

#[test]
fn unfold_rejects_garbage_container() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("junk.eif");
    std::fs::write(&garbage, b"not a container").unwrap();
    let out = run(&[
        "unfold",
        garbage.to_str().unwrap(),
        dir.path().join("x.pgm").to_str().unwrap(),
        "--key",
        KEY,
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn dct_coder_flag_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_test_image(dir.path(), "in.pgm", 10);
    let container = dir.path().join("out.eif");
    let output = dir.path().join("back.pgm");
    assert!(run(&[
        "fold",
        input.to_str().unwrap(),
        container.to_str().unwrap(),
        "--block",
        "8",
        "--coder",
        "dct",
        "--key",
        KEY,
        "--seed",
        SEED,
    ])
    .status
    .success());
    let info = run(&["info", container.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&info.stdout).contains("coder=dct"));
    assert!(run(&[
        "unfold",
        container.to_str().unwrap(),
        output.to_str().unwrap(),
        "--key",
        KEY
    ])
    .status
    .success());
    let original = read_pgm(&std::fs::read(&input).unwrap()).unwrap();
    let recovered = read_pgm(&std::fs::read(&output).unwrap()).unwrap();
    assert!(psnr(&original, &recovered).unwrap() >= 39.5);
}

#[test]
fn bench_emits_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    // Two small images; 32x32 with 16-pixel blocks keeps the cells fast.
    for (name, seed) in [("a.pgm", 11u64), ("b.pgm", 12)] {
        let img = class_image(ImageClass::Portrait, 32, 32, seed);
        std::fs::write(dir.path().join(name), write_pgm(&img)).unwrap();
    }
    let csv_path = dir.path().join("report.csv");
    let out = run(&[
        "bench",
        dir.path().to_str().unwrap(),
        "--psnr",
        "38",
        "--block",
        "16",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("RDC-DB"));
    assert!(table.contains("DCT"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "image,coder,psnr_db,sr,q,h,runtime_s"
    );
    assert_eq!(csv.lines().count(), 1 + 4); // header + 2 images x 2 coders
}

#[test]
fn bench_on_empty_directory_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bench", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no .pgm images"));
}

#[test]
fn bundled_corpus_files_match_the_generator() {
    // The committed corpus is the deterministic generator output.
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/images");
    for (name, img) in standard_corpus() {
        let path = assets.join(format!("{name}.pgm"));
        let bytes = std::fs::read(&path)
            .unwrap_or_else(|_| panic!("missing bundled image {}", path.display()));
        assert_eq!(bytes, write_pgm(&img), "{name}.pgm differs from generator");
    }
}
