#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

pub const FIXTURE_SEED: &str = "7";
pub const EDGE_PANELS: [&str; 7] = [
    "y_channel.pgm",
    "pc.pgm",
    "roberts.pgm",
    "prewitt.pgm",
    "sobel.pgm",
    "canny.pgm",
    "laplacian.pgm",
];

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn blessing() -> bool {
    std::env::var("PCSTRUCT_BLESS").is_ok_and(|v| v == "1")
}

/// Runs the binary with `args`, optionally pinning the worker count.
pub fn run(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcstruct"));
    cmd.args(args).env_remove("PCSTRUCT_THREADS");
    if let Some(n) = threads {
        cmd.env("PCSTRUCT_THREADS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args, None);
    assert!(
        out.status.success(),
        "pcstruct {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(args: &[&str]) -> i32 {
    run(args, None).status.code().expect("exited normally")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes of every regular file in `dir`, keyed by file name.
pub fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            out.insert(name, sha256_hex(&fs::read(entry.path()).unwrap()));
        }
    }
    out
}

/// `sha256  name` lines, as written by `sha256sum`.
pub fn read_hashes(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with PCSTRUCT_BLESS=1 to record", path.display()))
        .lines()
        .filter_map(|l| l.split_once("  "))
        .map(|(h, n)| (n.to_string(), h.to_string()))
        .collect()
}

pub fn write_hashes(path: &Path, hashes: &BTreeMap<String, String>) {
    let text: String = hashes.iter().map(|(n, h)| format!("{h}  {n}\n")).collect();
    fs::write(path, text).unwrap();
}

/// Compares `actual` with the recorded file, or records it when blessing.
pub fn check_golden(name: &str, actual: &BTreeMap<String, String>) -> Result<(), String> {
    let path = golden(name);
    if blessing() {
        write_hashes(&path, actual);
        return Ok(());
    }
    let expected = read_hashes(&path);
    if &expected == actual {
        Ok(())
    } else {
        Err(format!("hash mismatch for {name}: expected {expected:?}, got {actual:?}"))
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs `edge-compare` on the bundled frame and hashes the seven panels.
pub fn edge_compare_hashes(out: &Path, threads: Option<usize>) -> BTreeMap<String, String> {
    let frame = fixture("frame.ppm");
    let o = run(&["edge-compare", path_str(&frame), "--out", path_str(out)], threads);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    EDGE_PANELS
        .iter()
        .map(|n| (n.to_string(), sha256_hex(&fs::read(out.join(n)).unwrap())))
        .collect()
}
