//! Configuration and the stage functions behind the command-line tool.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::bpe::{self, BpeVocab};
use crate::clean::{clean_docstring, CleanConfig};
use crate::corpus::{self, CorpusError, Split, SplitRatios};
use crate::embed;
use crate::extract::{extract_methods, MethodRecord};
use crate::multimode::{self, MultiModeExample};
use crate::noise::{self, NoisedExample};
use crate::style::{self, DocstringStyle};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl PipelineError {
    /// 1 for bad input or configuration, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Internal(_) => 2,
            PipelineError::Corpus(CorpusError::Io { source, .. })
                if !matches!(source.kind(), std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied) =>
            {
                2
            }
            _ => 1,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Internal(e.to_string())
}

fn input(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default = "default_mask_rate")]
    pub mask_rate: f64,
    #[serde(default = "default_ratios")]
    pub split_ratios: [f64; 3],
    #[serde(default)]
    pub placeholders: CleanConfig,
    #[serde(default)]
    pub external_validator: Option<String>,
}

fn default_vocab_size() -> usize {
    bpe::DEFAULT_VOCAB_SIZE
}

fn default_mask_rate() -> f64 {
    noise::DEFAULT_MASK_RATE
}

fn default_ratios() -> [f64; 3] {
    [0.90, 0.05, 0.05]
}

pub const REQUIRED_KEYS: [&str; 3] = ["input_dir", "output_dir", "seed"];

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_dir: PathBuf::new(),
            output_dir: PathBuf::new(),
            seed: 0,
            vocab_size: default_vocab_size(),
            mask_rate: default_mask_rate(),
            split_ratios: default_ratios(),
            placeholders: CleanConfig::default(),
            external_validator: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("not valid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| PipelineError::Config("top level must be an object".into()))?;
        if let Some(k) = REQUIRED_KEYS.iter().find(|k| !obj.contains_key(**k)) {
            return Err(PipelineError::MissingKey(k));
        }
        let cfg: PipelineConfig = serde_json::from_value(value).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn ratios(&self) -> SplitRatios {
        let [train, valid, test] = self.split_ratios;
        SplitRatios { train, valid, test }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.ratios()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(0.0..1.0).contains(&self.mask_rate) {
            return Err(PipelineError::Config(format!("mask_rate {} is outside [0, 1)", self.mask_rate)));
        }
        let minimum = 256 + bpe::special_tokens().len();
        if self.vocab_size < minimum {
            return Err(PipelineError::Config(format!("vocab_size must be at least {minimum}")));
        }
        self.placeholders
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

/// A Python file under the input directory. The first path component names
/// the repository; files directly in the input directory belong to `_`.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub repo: String,
    pub path: String,
    pub bytes: Vec<u8>,
}

pub fn collect_sources(dir: &Path) -> Result<Vec<SourceFile>, PipelineError> {
    if !dir.is_dir() {
        return Err(input(format!("{}: not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| input(format!("{}: {e}", dir.display())))?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|x| x != "py") {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).map_err(internal)?;
        let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let (repo, path) = if parts.len() == 1 {
            ("_".to_string(), parts[0].clone())
        } else {
            (parts[0].clone(), parts[1..].join("/"))
        };
        let bytes = fs::read(entry.path()).map_err(|e| CorpusError::io(entry.path(), e))?;
        out.push(SourceFile { repo, path, bytes });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExtractSummary {
    pub files: usize,
    pub skipped: Vec<String>,
    pub records: usize,
}

/// Extract every method from every file; unparseable files are skipped.
pub fn extract_sources(files: &[SourceFile]) -> (Vec<MethodRecord>, ExtractSummary) {
    let results: Vec<Result<Vec<MethodRecord>, String>> = files
        .par_iter()
        .map(|f| {
            let text = std::str::from_utf8(&f.bytes).map_err(|e| format!("{}/{}: {e}", f.repo, f.path))?;
            extract_methods(text, &f.repo, &f.path).map_err(|e| format!("{}/{}: {e}", f.repo, f.path))
        })
        .collect();
    let mut records = Vec::new();
    let mut summary = ExtractSummary { files: files.len(), ..Default::default() };
    for r in results {
        match r {
            Ok(recs) => records.extend(recs),
            Err(e) => {
                warn!("skipping {e}");
                summary.skipped.push(e);
            }
        }
    }
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    summary.records = records.len();
    (records, summary)
}

pub fn clean_records(records: &mut [MethodRecord], cfg: &CleanConfig) {
    records.par_iter_mut().for_each(|r| {
        if let Some(d) = &r.docstring {
            r.docstring = Some(clean_docstring(d, cfg));
        }
    });
}

pub fn classify_records(records: &mut [MethodRecord]) {
    records
        .par_iter_mut()
        .for_each(|r| r.style = r.docstring.as_deref().map(style::classify));
}

/// All multi-mode examples, in record order then mode order. Records that
/// cannot be rendered are skipped with a warning.
pub fn multimode_examples(records: &[MethodRecord]) -> Vec<MultiModeExample> {
    let per: Vec<Vec<MultiModeExample>> = records
        .par_iter()
        .map(|r| match multimode::enumerate_pairs(r) {
            Ok(ex) => ex,
            Err(e) => {
                warn!("{}/{}:{}: {e}", r.repo, r.path, r.line);
                Vec::new()
            }
        })
        .collect();
    per.into_iter().flatten().collect()
}

pub fn train_bpe(records: &[MethodRecord], vocab_size: usize) -> Result<BpeVocab, PipelineError> {
    let texts: Vec<String> = records.iter().map(MethodRecord::reassemble).collect();
    bpe::train(&texts, vocab_size).map_err(input)
}

/// Encode each reassembled method and mask it. Example `i` uses seed
/// `seed + i`. Methods whose text already contains a mask token are skipped.
pub fn pretrain_examples(
    records: &[MethodRecord],
    vocab: &BpeVocab,
    mask_rate: f64,
    seed: u64,
) -> Result<Vec<NoisedExample>, PipelineError> {
    if !(0.0..1.0).contains(&mask_rate) {
        return Err(input(noise::NoiseError::RateOutOfRange(mask_rate)));
    }
    let masks = vocab.mask_ids();
    let per: Vec<Option<NoisedExample>> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let ids = vocab.encode(&r.reassemble());
            match noise::noise(&ids, mask_rate, seed.wrapping_add(i as u64), &masks) {
                Ok(ex) => Some(ex),
                Err(e) => {
                    warn!("{}/{}:{}: {e}", r.repo, r.path, r.line);
                    None
                }
            }
        })
        .collect();
    Ok(per.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingRow {
    pub x: f64,
    pub y: f64,
    pub style: DocstringStyle,
}

/// Two-dimensional PCA layout of docstring embeddings.
pub fn embed_docstrings(records: &[MethodRecord]) -> Result<Vec<EmbeddingRow>, PipelineError> {
    let docs: Vec<(&str, DocstringStyle)> = records
        .iter()
        .filter_map(|r| {
            let d = r.docstring.as_deref().filter(|d| !d.trim().is_empty())?;
            Some((d, r.style.unwrap_or_else(|| style::classify(d))))
        })
        .collect();
    let rows: Vec<Vec<f64>> = docs
        .par_iter()
        .map(|(d, _)| embed::embed(d))
        .collect::<Result<_, _>>()
        .map_err(input)?;
    let k = 2.min(rows.len());
    let projected = embed::pca(&rows, k).map_err(input)?;
    Ok(projected
        .into_iter()
        .zip(docs)
        .map(|(p, (_, style))| EmbeddingRow { x: p[0], y: p.get(1).copied().unwrap_or(0.0), style })
        .collect())
}

pub fn embedding_csv(rows: &[EmbeddingRow]) -> String {
    let mut s = String::from("x,y,style\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.x, r.y, r.style));
    }
    s
}

pub fn split_tsv(assignment: &BTreeMap<String, Split>) -> String {
    let mut s = String::from("repo\tsplit\n");
    for (repo, sp) in assignment {
        s.push_str(&format!("{repo}\t{}\n", sp.as_str()));
    }
    s
}

fn write(path: &Path, data: &str) -> Result<(), PipelineError> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).map_err(|e| CorpusError::io(p, e))?;
    }
    fs::write(path, data).map_err(|e| CorpusError::io(path, e).into())
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub extract: ExtractSummary,
    pub after_dedup: usize,
    pub repos: BTreeMap<String, Split>,
    pub split_records: BTreeMap<Split, usize>,
    pub multimode_examples: BTreeMap<Split, usize>,
    pub style_fractions: BTreeMap<DocstringStyle, f64>,
}

/// extract, clean, classify, dedup, split, make-multimode. Everything is
/// written under `output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary, PipelineError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let files = collect_sources(&cfg.input_dir)?;
    info!("{} python files under {}", files.len(), cfg.input_dir.display());

    let (mut records, extract) = extract_sources(&files);
    info!("extracted {} methods ({} files skipped)", records.len(), extract.skipped.len());
    corpus::write_jsonl(&out.join("extracted.jsonl"), &records)?;

    clean_records(&mut records, &cfg.placeholders);
    corpus::write_jsonl(&out.join("cleaned.jsonl"), &records)?;

    classify_records(&mut records);
    corpus::write_jsonl(&out.join("classified.jsonl"), &records)?;
    let style_fractions = style::style_distribution(&records).unwrap_or_default();
    write(&out.join("style_fractions.json"), &to_json(&style_fractions)?)?;

    let records = corpus::dedup_records(records);
    info!("{} methods after removing duplicate files", records.len());
    corpus::write_jsonl(&out.join("deduped.jsonl"), &records)?;
    let after_dedup = records.len();

    let repos: Vec<&str> = records.iter().map(|r| r.repo.as_str()).collect();
    let assignment = corpus::split(&repos, cfg.seed, &cfg.ratios())?;
    write(&out.join("splits.tsv"), &split_tsv(&assignment))?;
    let parts = corpus::partition(records, cfg.seed, &cfg.ratios())?;

    let mut split_records = BTreeMap::new();
    let mut multimode_examples_n = BTreeMap::new();
    for (sp, recs) in &parts {
        corpus::write_jsonl(&out.join(format!("{}.jsonl", sp.as_str())), recs)?;
        let ex = multimode_examples(recs);
        corpus::write_jsonl(&out.join("multimode").join(format!("{}.jsonl", sp.as_str())), &ex)?;
        info!("{}: {} methods, {} multi-mode examples", sp.as_str(), recs.len(), ex.len());
        split_records.insert(*sp, recs.len());
        multimode_examples_n.insert(*sp, ex.len());
    }
    let summary = PipelineSummary {
        extract,
        after_dedup,
        repos: assignment,
        split_records,
        multimode_examples: multimode_examples_n,
        style_fractions,
    };
    write(&out.join("summary.json"), &to_json(&summary)?)?;
    Ok(summary)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String, PipelineError> {
    let mut s = serde_json::to_string_pretty(v).map_err(internal)?;
    s.push('\n');
    Ok(s)
}
