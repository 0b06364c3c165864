//! Multi-mode translation pairs between signature, docstring and body.

use serde::{Deserialize, Serialize};

use crate::extract::MethodRecord;
use crate::pytok::{self, TokenKind};
use crate::style::DocstringStyle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Signature,
    Docstring,
    Body,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Signature, Feature::Docstring, Feature::Body];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Signature => "signature",
            Feature::Docstring => "docstring",
            Feature::Body => "body",
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Feature::Signature => "sig",
            Feature::Docstring => "doc",
            Feature::Body => "body",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Feature::Signature => 1,
            Feature::Docstring => 2,
            Feature::Body => 4,
        }
    }
}

/// A subset of the three features, iterated in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FeatureSet(u8);

impl FeatureSet {
    pub fn of(features: &[Feature]) -> Self {
        FeatureSet(features.iter().fold(0, |acc, f| acc | f.bit()))
    }

    pub fn contains(self, f: Feature) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_disjoint(self, other: FeatureSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |f| self.contains(*f))
    }

    /// Short form used in mode tags, e.g. `sig+doc`.
    pub fn tag(self) -> String {
        self.iter().map(Feature::tag).collect::<Vec<_>>().join("+")
    }
}

/// All ordered pairs of non-empty, disjoint feature sets, in a fixed order.
pub fn all_modes() -> Vec<(FeatureSet, FeatureSet)> {
    use Feature::*;
    let s = FeatureSet::of;
    vec![
        (s(&[Signature]), s(&[Docstring])),
        (s(&[Signature]), s(&[Body])),
        (s(&[Signature]), s(&[Docstring, Body])),
        (s(&[Docstring]), s(&[Signature])),
        (s(&[Docstring]), s(&[Body])),
        (s(&[Docstring]), s(&[Signature, Body])),
        (s(&[Body]), s(&[Signature])),
        (s(&[Body]), s(&[Docstring])),
        (s(&[Signature, Docstring]), s(&[Body])),
        (s(&[Signature, Body]), s(&[Docstring])),
        (s(&[Docstring, Body]), s(&[Signature])),
        (s(&[Body]), s(&[Signature, Docstring])),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MultiModeError {
    #[error("record {0} has an empty {1}")]
    MissingFeature(String, &'static str),
    #[error("docstring targeted without a style label")]
    StyleMissing,
    #[error("prefix needs at least one target feature")]
    NoTarget,
    #[error("docstring of {0} cannot be wrapped in triple quotes")]
    UnquotableDocstring(String),
    #[error("cannot recover features: {0}")]
    Unrecoverable(String),
}

/// Control line such as `# target signature and body` or
/// `# target docstring style oneline`.
pub fn format_prefix(target: FeatureSet, style: Option<DocstringStyle>) -> Result<String, MultiModeError> {
    if target.is_empty() {
        return Err(MultiModeError::NoTarget);
    }
    let names: Vec<&str> = target.iter().map(Feature::name).collect();
    let mut out = format!("# target {}", names.join(" and "));
    if target.contains(Feature::Docstring) {
        let style = style.ok_or(MultiModeError::StyleMissing)?;
        out.push_str(" style ");
        out.push_str(style.as_str());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiModeExample {
    pub prefix: String,
    pub source: String,
    pub target: String,
    pub mode: String,
    pub style: Option<DocstringStyle>,
}

/// Feature texts of one method.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Features {
    pub signature: Option<String>,
    pub docstring: Option<String>,
    pub body: Option<String>,
}

const DELIMITERS: [&str; 2] = ["\"\"\"", "'''"];

fn quote_docstring(doc: &str) -> Option<String> {
    DELIMITERS.iter().find_map(|q| {
        if doc.contains(q) || doc.ends_with(&q[..1]) {
            return None;
        }
        let quoted = format!("{q}{doc}{q}");
        let toks = pytok::tokenize(&quoted).ok()?;
        let strings: Vec<_> = toks.iter().filter(|t| !t.kind.is_synthetic() && t.kind != TokenKind::Newline).collect();
        (strings.len() == 1 && strings[0].kind == TokenKind::String && strings[0].text == quoted).then_some(quoted)
    })
}

/// Render the chosen features in canonical order, one after another on
/// separate lines. A docstring that follows the signature is indented by
/// four spaces.
pub fn render_features(record: &MethodRecord, set: FeatureSet) -> Result<String, MultiModeError> {
    let mut parts = Vec::new();
    for f in set.iter() {
        match f {
            Feature::Signature => parts.push(record.signature.clone()),
            Feature::Docstring => {
                let doc = record
                    .docstring
                    .as_deref()
                    .ok_or(MultiModeError::MissingFeature(record.name.clone(), "docstring"))?;
                let quoted = quote_docstring(doc).ok_or_else(|| MultiModeError::UnquotableDocstring(record.name.clone()))?;
                if set.contains(Feature::Signature) {
                    parts.push(format!("    {quoted}"));
                } else {
                    parts.push(quoted);
                }
            }
            Feature::Body => parts.push(record.body.clone()),
        }
    }
    Ok(parts.join("\n"))
}

/// Every legal (source, target) pair for a record: 12 with a docstring,
/// 2 without.
pub fn enumerate_pairs(record: &MethodRecord) -> Result<Vec<MultiModeExample>, MultiModeError> {
    if record.signature.trim().is_empty() {
        return Err(MultiModeError::MissingFeature(record.name.clone(), "signature"));
    }
    if record.body.trim().is_empty() {
        return Err(MultiModeError::MissingFeature(record.name.clone(), "body"));
    }
    let has_doc = record.docstring.is_some();
    let mut out = Vec::new();
    for (src, tgt) in all_modes() {
        if !has_doc && (src.contains(Feature::Docstring) || tgt.contains(Feature::Docstring)) {
            continue;
        }
        let style = if tgt.contains(Feature::Docstring) { record.style } else { None };
        let prefix = format_prefix(tgt, style)?;
        let source = format!("{prefix}\n{}", render_features(record, src)?);
        out.push(MultiModeExample {
            prefix,
            source,
            target: render_features(record, tgt)?,
            mode: format!("{}->{}", src.tag(), tgt.tag()),
            style,
        });
    }
    Ok(out)
}

/// Inverse of [`render_features`].
pub fn recover_features(text: &str, set: FeatureSet) -> Result<Features, MultiModeError> {
    let bad = |m: &str| MultiModeError::Unrecoverable(m.to_string());
    let mut out = Features::default();
    let mut rest = text;
    if set.contains(Feature::Signature) {
        let toks = pytok::tokenize(text).map_err(|e| MultiModeError::Unrecoverable(e.to_string()))?;
        let mut line_start = true;
        let mut is_def = false;
        let mut end = None;
        for t in &toks {
            match t.kind {
                TokenKind::Comment | TokenKind::Nl | TokenKind::Indent | TokenKind::Dedent => {}
                TokenKind::Newline | TokenKind::EndMarker => {
                    if is_def {
                        end = Some(t.offset);
                        break;
                    }
                    line_start = true;
                }
                _ => {
                    if line_start {
                        is_def = t.is_name("def") || t.is_name("async");
                        line_start = false;
                    }
                }
            }
        }
        let end = end.ok_or_else(|| bad("no def header"))?;
        out.signature = Some(text[..end].to_string());
        rest = text[end..].strip_prefix('\n').unwrap_or(&text[end..]);
    }
    if set.contains(Feature::Docstring) {
        if set.contains(Feature::Signature) {
            rest = rest.strip_prefix("    ").ok_or_else(|| bad("docstring indentation"))?;
        }
        let q = DELIMITERS
            .iter()
            .find(|q| rest.starts_with(**q))
            .ok_or_else(|| bad("docstring quotes"))?;
        let close = rest[3..].find(q).ok_or_else(|| bad("unterminated docstring"))? + 3;
        out.docstring = Some(rest[3..close].to_string());
        let after = &rest[close + 3..];
        rest = if set.contains(Feature::Body) {
            after.strip_prefix('\n').ok_or_else(|| bad("body separator"))?
        } else {
            after
        };
    }
    if set.contains(Feature::Body) {
        out.body = Some(rest.to_string());
    } else if !rest.is_empty() {
        return Err(bad("trailing text"));
    }
    Ok(out)
}
