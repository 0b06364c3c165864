//! Corpus BLEU, ROUGE-1/2/L and syntax validity rate.

use std::collections::HashMap;
use std::io::Write;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pytok;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("nothing to score")]
    Empty,
    #[error("external validator failed to run: {0}")]
    Validator(#[from] std::io::Error),
}

/// Whitespace split after detaching ASCII punctuation and brackets (except
/// `_`) into single-character tokens. Case is kept.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in word.char_indices() {
            if c.is_ascii_punctuation() && c != '_' {
                if start < i {
                    out.push(&word[start..i]);
                }
                out.push(&word[i..i + 1]);
                start = i + 1;
            }
        }
        if start < word.len() {
            out.push(&word[start..]);
        }
    }
    out
}

fn ngram_counts<'t, 'a>(toks: &'t [&'a str], n: usize) -> HashMap<&'t [&'a str], usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped n-gram matches and the hypothesis n-gram total.
fn clipped_matches(hyp: &[&str], reference: &[&str], n: usize) -> (usize, usize) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, hyp.len().saturating_sub(n - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuDetails {
    pub precisions: [f64; 4],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub score: f64,
}

/// Corpus-level BLEU-4 without smoothing, on a 0 to 100 scale.
pub fn bleu_details<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Result<BleuDetails, MetricsError> {
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c, mut r) = (0, 0);
    for (h, rf) in hyps.iter().zip(refs) {
        let ht = tokenize(h.as_ref());
        let rt = tokenize(rf.as_ref());
        c += ht.len();
        r += rt.len();
        for n in 1..=4 {
            let (m, t) = clipped_matches(&ht, &rt, n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
    }
    let mut precisions = [0.0; 4];
    for i in 0..4 {
        precisions[i] = if total[i] == 0 { 0.0 } else { matched[i] as f64 / total[i] as f64 };
    }
    let brevity_penalty = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let score = if precisions.iter().any(|p| *p == 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuDetails { precisions, brevity_penalty, hyp_len: c, ref_len: r, score })
}

pub fn bleu<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Result<f64, MetricsError> {
    bleu_details(hyps, refs).map(|d| d.score)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(overlap: usize, hyp_total: usize, ref_total: usize) -> Prf {
        if hyp_total == 0 || ref_total == 0 || overlap == 0 {
            return Prf::default();
        }
        let p = overlap as f64 / hyp_total as f64;
        let r = overlap as f64 / ref_total as f64;
        Prf { precision: p, recall: r, f1: 2.0 * p * r / (p + r) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rouge {
    pub rouge1: Prf,
    pub rouge2: Prf,
    #[serde(rename = "rougeL")]
    pub rouge_l: Prf,
}

fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-1, ROUGE-2 and ROUGE-L for one pair; degenerate inputs give zeros.
pub fn rouge(hyp: &str, reference: &str) -> Rouge {
    let h = tokenize(hyp);
    let r = tokenize(reference);
    let ngram = |n: usize| {
        let (m, t) = clipped_matches(&h, &r, n);
        Prf::from_counts(m, t, r.len().saturating_sub(n - 1))
    };
    Rouge {
        rouge1: ngram(1),
        rouge2: ngram(2),
        rouge_l: Prf::from_counts(lcs_len(&h, &r), h.len(), r.len()),
    }
}

/// Mean of per-example ROUGE scores.
pub fn rouge_mean<H: AsRef<str> + Sync, R: AsRef<str> + Sync>(hyps: &[H], refs: &[R]) -> Result<Rouge, MetricsError> {
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(MetricsError::Empty);
    }
    let each: Vec<Rouge> = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| rouge(h.as_ref(), r.as_ref()))
        .collect();
    let n = each.len() as f64;
    let avg = |get: fn(&Rouge) -> Prf| {
        let mut s = Prf::default();
        for e in &each {
            let p = get(e);
            s.precision += p.precision;
            s.recall += p.recall;
            s.f1 += p.f1;
        }
        Prf { precision: s.precision / n, recall: s.recall / n, f1: s.f1 / n }
    };
    Ok(Rouge {
        rouge1: avg(|r| r.rouge1),
        rouge2: avg(|r| r.rouge2),
        rouge_l: avg(|r| r.rouge_l),
    })
}

/// Run `command` through `sh -c` with `sample` on stdin; exit status 0 means valid.
pub fn external_valid(command: &str, sample: &str) -> Result<bool, MetricsError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()?;
    if let Some(mut stdin) = child.stdin.take() {
        // A validator that exits without reading stdin closes the pipe early.
        match stdin.write_all(sample.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
    }
    Ok(child.wait()?.success())
}

/// Fraction of texts that pass the structural checker, or the external
/// validator when one is given.
pub fn syntax_rate<S: AsRef<str> + Sync>(texts: &[S], validator: Option<&str>) -> Result<f64, MetricsError> {
    if texts.is_empty() {
        return Err(MetricsError::Empty);
    }
    let valid = match validator {
        None => texts.par_iter().filter(|t| pytok::check_source(t.as_ref()).valid).count(),
        Some(cmd) => {
            let mut n = 0;
            for t in texts {
                n += usize::from(external_valid(cmd, t.as_ref())?);
            }
            n
        }
    };
    Ok(valid as f64 / texts.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n: usize,
    pub bleu: f64,
    pub rouge: Rouge,
    pub syntax_rate: f64,
    pub notes: Vec<String>,
}

pub fn score<H: AsRef<str> + Sync, R: AsRef<str> + Sync>(
    hyps: &[H],
    refs: &[R],
    validator: Option<&str>,
) -> Result<ScoreReport, MetricsError> {
    let bleu = bleu(hyps, refs)?;
    let rouge = rouge_mean(hyps, refs)?;
    let syntax_rate = syntax_rate(hyps, validator)?;
    let checker = match validator {
        Some(cmd) => format!("syntax: external validator `{cmd}`, exit status 0 counts as valid"),
        None => "syntax: built-in structural checker".to_string(),
    };
    Ok(ScoreReport {
        n: hyps.len(),
        bleu,
        rouge,
        syntax_rate,
        notes: vec![
            "tokens: whitespace split, ASCII punctuation except '_' detached, case-sensitive".into(),
            "bleu: corpus-level, n = 1..4, no smoothing".into(),
            "rouge: per-example scores averaged over examples".into(),
            checker,
        ],
    })
}
