//! Docstring normalization: NFKC, ASCII only, placeholders for URLs, paths
//! and commit hashes, no trailing whitespace.

use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    pub url_placeholder: String,
    pub path_placeholder: String,
    pub hash_placeholder: String,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            url_placeholder: "<URL>".to_string(),
            path_placeholder: "<PATH>".to_string(),
            hash_placeholder: "<HASH>".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("placeholder {0:?} must be non-empty printable ASCII without whitespace")]
pub struct BadPlaceholder(pub String);

impl CleanConfig {
    pub fn validate(&self) -> Result<(), BadPlaceholder> {
        for p in [&self.url_placeholder, &self.path_placeholder, &self.hash_placeholder] {
            let ok = !p.is_empty() && p.chars().all(|c| c.is_ascii_graphic());
            // A placeholder that itself looks like a path or hash would be rewritten again.
            let ok = ok && !p.contains('/') && !p.chars().all(|c| c.is_ascii_hexdigit());
            if !ok {
                return Err(BadPlaceholder(p.clone()));
            }
        }
        Ok(())
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:https?|ftp)://\S+").unwrap())
}

fn path_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Group 1 is the boundary character (or start), group 2 the candidate run.
    RE.get_or_init(|| {
        Regex::new(r"(^|[^A-Za-z0-9_.~/\-])((?:~/|/)?[A-Za-z0-9_.\-]+(?:/[A-Za-z0-9_.\-]+)+/?)")
            .unwrap()
    })
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z0-9]+").unwrap())
}

fn is_path(run: &str) -> bool {
    if run.starts_with('/') || run.starts_with("~/") {
        return true;
    }
    run.split('/').any(|seg| seg.contains('.'))
}

fn is_hash(word: &str) -> bool {
    (7..=40).contains(&word.len())
        && word.chars().all(|c| c.is_ascii_hexdigit())
        && word.chars().any(|c| c.is_ascii_digit())
        && word.chars().any(|c| c.is_ascii_alphabetic())
}

/// Clean one docstring.
pub fn clean_docstring(text: &str, config: &CleanConfig) -> String {
    let ascii: String = text.nfkc().filter(char::is_ascii).collect();
    let s = url_re().replace_all(&ascii, config.url_placeholder.as_str());
    let s = path_re().replace_all(&s, |c: &Captures<'_>| {
        if is_path(&c[2]) {
            format!("{}{}", &c[1], config.path_placeholder)
        } else {
            c[0].to_string()
        }
    });
    let s = word_re().replace_all(&s, |c: &Captures<'_>| {
        if is_hash(&c[0]) {
            config.hash_placeholder.clone()
        } else {
            c[0].to_string()
        }
    });
    let mut out = String::with_capacity(s.len());
    for (i, line) in s.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(line.trim_end());
    }
    out
}
