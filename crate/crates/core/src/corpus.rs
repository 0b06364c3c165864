//! Deduplication, repository-level splits, length statistics and JSON-lines I/O.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::extract::MethodRecord;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    BadRatios([f64; 3]),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl CorpusError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    format!("{:x}", Sha256::digest(data))
}

/// Keep one file per distinct byte content, the first path in sorted order.
/// Output is sorted by path.
pub fn dedup(mut files: Vec<(String, Vec<u8>)>) -> Vec<(String, Vec<u8>)> {
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut seen = HashSet::new();
    files.retain(|(_, data)| seen.insert(Sha256::digest(data)));
    files
}

fn file_fingerprint(records: &[&MethodRecord]) -> String {
    match records.first() {
        Some(r) if !r.file_sha256.is_empty() => r.file_sha256.clone(),
        _ => {
            let mut h = Sha256::new();
            for r in records {
                h.update(r.reassemble().as_bytes());
            }
            format!("{:x}", h.finalize())
        }
    }
}

/// Record-level form of [`dedup`]: drop every record whose source file has
/// the same content as a file at an earlier (repo, path). Output is sorted by
/// (repo, path, line).
pub fn dedup_records(records: Vec<MethodRecord>) -> Vec<MethodRecord> {
    let mut by_file: BTreeMap<(String, String), Vec<&MethodRecord>> = BTreeMap::new();
    for r in &records {
        by_file.entry((r.repo.clone(), r.path.clone())).or_default().push(r);
    }
    let mut seen = HashSet::new();
    let keep: HashSet<(String, String)> = by_file
        .iter()
        .filter(|(_, recs)| seen.insert(file_fingerprint(recs)))
        .map(|(k, _)| k.clone())
        .collect();
    let mut out: Vec<MethodRecord> = records
        .into_iter()
        .filter(|r| keep.contains(&(r.repo.clone(), r.path.clone())))
        .collect();
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.90, valid: 0.05, test: 0.05 }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let r = [self.train, self.valid, self.test];
        if r.iter().any(|x| !(*x >= 0.0)) || ((r.iter().sum::<f64>() - 1.0).abs() > 1e-9) {
            return Err(CorpusError::BadRatios(r));
        }
        Ok(())
    }
}

/// Position of a repository in [0, 1), from sha256 of the seed and name.
pub fn split_point(seed: u64, repo: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(repo.as_bytes());
    let d = h.finalize();
    let x = u64::from_be_bytes(d[..8].try_into().unwrap());
    (x >> 11) as f64 / (1u64 << 53) as f64
}

pub fn assign(seed: u64, repo: &str, ratios: &SplitRatios) -> Split {
    let u = split_point(seed, repo);
    if u < ratios.train {
        Split::Train
    } else if u < ratios.train + ratios.valid {
        Split::Valid
    } else {
        Split::Test
    }
}

/// Assign each distinct repository to one split.
pub fn split<S: AsRef<str>>(repos: &[S], seed: u64, ratios: &SplitRatios) -> Result<BTreeMap<String, Split>, CorpusError> {
    ratios.validate()?;
    Ok(repos
        .iter()
        .map(|r| (r.as_ref().to_string(), assign(seed, r.as_ref(), ratios)))
        .collect())
}

/// Group records by the split of their repository, keeping input order.
pub fn partition(records: Vec<MethodRecord>, seed: u64, ratios: &SplitRatios) -> Result<BTreeMap<Split, Vec<MethodRecord>>, CorpusError> {
    ratios.validate()?;
    let mut out: BTreeMap<Split, Vec<MethodRecord>> = Split::ALL.iter().map(|s| (*s, Vec::new())).collect();
    let mut cache: HashMap<String, Split> = HashMap::new();
    for r in records {
        let s = *cache
            .entry(r.repo.clone())
            .or_insert_with(|| assign(seed, &r.repo, ratios));
        out.get_mut(&s).unwrap().push(r);
    }
    Ok(out)
}

pub const MAX_CHAR_EXP: u32 = 20;
pub const MAX_LINES: usize = 200;

/// Character counts in bins with lower bounds 0, 1, 2, 4, ..., 2^20 (the
/// last bin is open-ended) and line counts in unit bins 0..=200 (200 holds
/// everything longer).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histograms {
    pub chars: Vec<u64>,
    pub lines: Vec<u64>,
}

impl Default for Histograms {
    fn default() -> Self {
        Histograms {
            chars: vec![0; MAX_CHAR_EXP as usize + 2],
            lines: vec![0; MAX_LINES + 1],
        }
    }
}

impl Histograms {
    pub fn char_bin_lower(i: usize) -> u64 {
        if i == 0 {
            0
        } else {
            1 << (i - 1)
        }
    }

    pub fn add(&mut self, text: &str) {
        let n = text.chars().count();
        let bin = if n == 0 { 0 } else { (n.ilog2().min(MAX_CHAR_EXP) + 1) as usize };
        self.chars[bin] += 1;
        self.lines[text.lines().count().min(MAX_LINES)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.chars.iter().sum()
    }

    pub fn chars_csv(&self) -> String {
        let mut s = String::from("bin_lower,count\n");
        for (i, c) in self.chars.iter().enumerate() {
            s.push_str(&format!("{},{}\n", Self::char_bin_lower(i), c));
        }
        s
    }

    pub fn lines_csv(&self) -> String {
        let mut s = String::from("bin_lower,count\n");
        for (i, c) in self.lines.iter().enumerate() {
            s.push_str(&format!("{i},{c}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub count: u64,
    pub signature: Histograms,
    /// Only filled for methods that have a docstring.
    pub docstring: Histograms,
    pub body: Histograms,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: u64,
    pub with_docstring: PartitionStats,
    pub without_docstring: PartitionStats,
}

pub fn stats(records: &[MethodRecord]) -> Result<StatsReport, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut rep = StatsReport::default();
    for r in records {
        let part = match &r.docstring {
            Some(d) => {
                rep.with_docstring.docstring.add(d);
                &mut rep.with_docstring
            }
            None => &mut rep.without_docstring,
        };
        part.count += 1;
        part.signature.add(&r.signature);
        part.body.add(&r.body);
        rep.total += 1;
    }
    Ok(rep)
}

impl StatsReport {
    /// One `bin_lower,count` CSV per histogram, named like
    /// `with_docstring.body.chars.csv`.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
        fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        let mut written = Vec::new();
        for (pname, part) in [("with_docstring", &self.with_docstring), ("without_docstring", &self.without_docstring)] {
            let mut feats = vec![("signature", &part.signature), ("body", &part.body)];
            if pname == "with_docstring" {
                feats.insert(1, ("docstring", &part.docstring));
            }
            for (fname, h) in feats {
                for (kind, csv) in [("chars", h.chars_csv()), ("lines", h.lines_csv())] {
                    let p = dir.join(format!("{pname}.{fname}.{kind}.csv"));
                    fs::write(&p, csv).map_err(|e| CorpusError::io(&p, e))?;
                    written.push(p);
                }
            }
        }
        Ok(written)
    }
}

/// Read one JSON value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let f = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("serializable"));
        s.push('\n');
    }
    s
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    let f = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for it in items {
        serde_json::to_writer(&mut w, it).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        w.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}
