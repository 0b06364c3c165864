//! Docstring style labels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::extract::MethodRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DocstringStyle {
    #[serde(rename = "oneline")]
    OneLine,
    #[serde(rename = "onepara")]
    OneParagraph,
    #[serde(rename = "rest")]
    Rest,
    #[serde(rename = "google")]
    Google,
    #[serde(rename = "numpydoc")]
    Numpydoc,
    #[serde(rename = "javadoc")]
    Javadoc,
    #[serde(rename = "other")]
    Other,
}

impl DocstringStyle {
    pub const ALL: [DocstringStyle; 7] = [
        DocstringStyle::OneLine,
        DocstringStyle::OneParagraph,
        DocstringStyle::Rest,
        DocstringStyle::Google,
        DocstringStyle::Numpydoc,
        DocstringStyle::Javadoc,
        DocstringStyle::Other,
    ];

    /// Serialized name, as used in control prefixes.
    pub fn as_str(self) -> &'static str {
        match self {
            DocstringStyle::OneLine => "oneline",
            DocstringStyle::OneParagraph => "onepara",
            DocstringStyle::Rest => "rest",
            DocstringStyle::Google => "google",
            DocstringStyle::Numpydoc => "numpydoc",
            DocstringStyle::Javadoc => "javadoc",
            DocstringStyle::Other => "other",
        }
    }
}

impl fmt::Display for DocstringStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown docstring style {0:?}")]
pub struct UnknownStyle(pub String);

impl FromStr for DocstringStyle {
    type Err = UnknownStyle;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DocstringStyle::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| UnknownStyle(s.to_string()))
    }
}

const NUMPY_SECTIONS: &[&str] = &[
    "Parameters",
    "Returns",
    "Yields",
    "Raises",
    "Examples",
    "Notes",
    "Attributes",
    "See Also",
];

const JAVADOC_TAGS: &[&str] = &["@param", "@return", "@returns", "@throws", "@raise"];

const REST_FIELDS: &[&str] = &[":param", ":type", ":returns:", ":return:", ":rtype:", ":raises"];

const GOOGLE_SECTIONS: &[&str] = &[
    "Args",
    "Arguments",
    "Returns",
    "Yields",
    "Raises",
    "Attributes",
    "Example",
    "Examples",
    "Note",
    "Notes",
];

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

/// Trim surrounding blank lines and remove the indentation shared by every
/// line after the first (the first line usually follows the opening quotes).
fn normalize(docstring: &str) -> Vec<String> {
    let expanded = docstring.replace('\t', "        ");
    let raw: Vec<&str> = expanded.lines().collect();
    let margin = raw
        .iter()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| indent_of(l))
        .min()
        .unwrap_or(0);
    let mut lines: Vec<String> = raw
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                l.trim().to_string()
            } else if l.trim().is_empty() {
                String::new()
            } else {
                l[margin..].trim_end().to_string()
            }
        })
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let leading = lines.iter().take_while(|l| l.is_empty()).count();
    lines.drain(..leading);
    lines
}

fn starts_with_tag(line: &str, tags: &[&str]) -> bool {
    let t = line.trim_start();
    tags.iter().any(|tag| {
        t.strip_prefix(tag)
            .is_some_and(|rest| tag.ends_with(':') || rest.is_empty() || !rest.starts_with(|c: char| c.is_alphanumeric() || c == '_'))
    })
}

fn is_numpydoc(lines: &[String]) -> bool {
    lines.windows(2).any(|w| {
        let under = w[1].trim();
        under.len() >= 3
            && under.chars().all(|c| c == '-')
            && NUMPY_SECTIONS.contains(&w[0].trim())
    })
}

fn is_google(lines: &[String]) -> bool {
    lines.iter().enumerate().any(|(i, line)| {
        let t = line.trim();
        let is_section = t
            .strip_suffix(':')
            .is_some_and(|word| GOOGLE_SECTIONS.contains(&word));
        is_section
            && lines[i + 1..]
                .iter()
                .find(|l| !l.trim().is_empty())
                .is_some_and(|next| indent_of(next) > indent_of(line))
    })
}

/// Label a (cleaned) docstring. The first matching rule wins: numpydoc
/// section underlines, javadoc tags, reST fields, Google sections, then
/// one line, one paragraph, and other.
pub fn classify(docstring: &str) -> DocstringStyle {
    let lines = normalize(docstring);
    if is_numpydoc(&lines) {
        DocstringStyle::Numpydoc
    } else if lines.iter().any(|l| starts_with_tag(l, JAVADOC_TAGS)) {
        DocstringStyle::Javadoc
    } else if lines.iter().any(|l| starts_with_tag(l, REST_FIELDS)) {
        DocstringStyle::Rest
    } else if is_google(&lines) {
        DocstringStyle::Google
    } else if lines.len() == 1 {
        DocstringStyle::OneLine
    } else if !lines.is_empty() && lines.iter().all(|l| !l.is_empty()) {
        DocstringStyle::OneParagraph
    } else {
        DocstringStyle::Other
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StyleError {
    #[error("no docstrings to summarize")]
    EmptyCorpus,
}

/// Fraction of docstring-bearing records per style. Records without a
/// docstring are ignored; a missing `style` label is computed on the fly.
pub fn style_distribution(
    records: &[MethodRecord],
) -> Result<BTreeMap<DocstringStyle, f64>, StyleError> {
    let mut counts: BTreeMap<DocstringStyle, usize> = BTreeMap::new();
    let mut total = 0usize;
    for r in records {
        let Some(doc) = &r.docstring else { continue };
        let style = r.style.unwrap_or_else(|| classify(doc));
        *counts.entry(style).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(StyleError::EmptyCorpus);
    }
    Ok(counts
        .into_iter()
        .map(|(s, n)| (s, n as f64 / total as f64))
        .collect())
}
