#![allow(dead_code)]

pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub struct ReferenceFile {
    pub name: String,
    pub source: String,
    pub token_count: usize,
    pub digest: String,
    pub defs: usize,
}

/// The stdlib-derived fixture files with their CPython reference data.
pub fn reference_files() -> Vec<ReferenceFile> {
    let dir = fixtures().join("pyfiles");
    let defs_table = fs::read_to_string(dir.join("reference_defs.tsv")).unwrap();
    let defs: std::collections::HashMap<&str, usize> = defs_table
        .lines()
        .map(|l| {
            let (name, n) = l.split_once('\t').unwrap();
            (name, n.parse().unwrap())
        })
        .collect();
    fs::read_to_string(dir.join("reference_tokens.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut cols = l.split('\t');
            let name = cols.next().unwrap().to_string();
            let token_count = cols.next().unwrap().parse().unwrap();
            let digest = cols.next().unwrap().to_string();
            let source = fs::read_to_string(dir.join(&name)).unwrap();
            let defs = defs[name.as_str()];
            ReferenceFile { name, source, token_count, digest, defs }
        })
        .collect()
}

/// Same digest the reference generator computes over (kind, text) pairs.
pub fn stream_digest<'a>(stream: impl IntoIterator<Item = (&'a str, &'a str)>) -> (usize, String) {
    let mut h = Sha256::new();
    let mut n = 0;
    for (kind, text) in stream {
        h.update(kind.as_bytes());
        h.update(b"\x1f");
        h.update(text.as_bytes());
        h.update(b"\x1e");
        n += 1;
    }
    let hex = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    (n, hex)
}

pub fn token_digest(source: &str) -> Result<(usize, String), codoc::pytok::TokenizeError> {
    let tokens = codoc::pytok::tokenize(source)?;
    Ok(stream_digest(tokens.iter().map(|t| (t.kind.as_str(), t.text))))
}

/// Rebuild the source from non-synthetic tokens and the whitespace between them.
pub fn reconstruct(source: &str) -> String {
    let tokens = codoc::pytok::tokenize(source).unwrap();
    let mut out = String::new();
    let mut prev = 0;
    for t in tokens.iter().filter(|t| !t.kind.is_synthetic()) {
        let gap = &source[prev..t.offset];
        assert!(
            gap.chars().all(|c| matches!(c, ' ' | '\t' | '\x0c' | '\\' | '\r' | '\n' | '\u{feff}')),
            "non-whitespace gap {gap:?}"
        );
        out.push_str(gap);
        out.push_str(t.text);
        prev = t.end();
    }
    out.push_str(&source[prev..]);
    out
}
