//! Method extraction.
//!
//! Every `def` (module level, class level, or nested) becomes a
//! [`MethodRecord`] holding its signature, optional docstring, and body.
//! Output text is rebuilt from the token stream: comments are dropped, lines
//! emptied by that are removed, and statement indentation is rewritten to
//! four spaces per level. Continuation lines keep their offset relative to
//! the statement they belong to; string literals are copied verbatim.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::pytok::{self, check_structure, Failure, Token, TokenKind, TokenizeError};
use crate::style::DocstringStyle;

/// One extracted method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub repo: String,
    pub path: String,
    pub name: String,
    /// Decorators and `def` header at column 0, ending with the header colon.
    pub signature: String,
    /// Docstring content without quotes or prefix.
    pub docstring: Option<String>,
    /// Statements after the docstring, first level indented by four spaces.
    pub body: String,
    pub style: Option<DocstringStyle>,
    /// Line of the `def` keyword in the original file.
    #[serde(default)]
    pub line: usize,
    /// Docstring literal as written, quotes and prefix included.
    #[serde(default)]
    pub docstring_raw: Option<String>,
    /// Hex sha256 of the whole source file, used for duplicate detection.
    #[serde(default)]
    pub file_sha256: String,
}

impl MethodRecord {
    /// Rebuild the method as source text.
    pub fn reassemble(&self) -> String {
        let mut out = String::with_capacity(
            self.signature.len() + self.body.len() + self.docstring_raw.as_ref().map_or(0, String::len) + 8,
        );
        out.push_str(&self.signature);
        out.push('\n');
        if let Some(raw) = &self.docstring_raw {
            out.push_str(INDENT);
            out.push_str(raw);
            out.push('\n');
        }
        out.push_str(&self.body);
        out.push('\n');
        out
    }

    /// Ordering key that makes multi-file output deterministic.
    pub fn sort_key(&self) -> (&str, &str, usize) {
        (&self.repo, &self.path, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error("line {line}: structurally invalid source ({failure:?})")]
    Structure { failure: Failure, line: usize },
}

const INDENT: &str = "    ";
const TAB_SIZE: usize = 8;

/// Delete comments. Lines that held only a comment disappear, whitespace
/// left in front of a removed comment is trimmed, everything else is kept.
pub fn strip_comments(source: &str) -> Result<String, TokenizeError> {
    let tokens = pytok::tokenize(source)?;
    let mut out = String::with_capacity(source.len());
    let mut prev = 0;
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Comment) {
        out.push_str(&source[prev..tok.offset]);
        let line_start = out.rfind('\n').map_or(0, |i| i + 1);
        let kept = out[line_start..].trim_end_matches([' ', '\t', '\x0c']).len();
        let whole_line = kept == 0;
        out.truncate(line_start + kept);
        prev = tok.end();
        if whole_line {
            // Drop the line break that ended the comment-only line.
            let rest = &source[prev..];
            prev += if rest.starts_with("\r\n") {
                2
            } else if rest.starts_with('\n') || rest.starts_with('\r') {
                1
            } else {
                0
            };
        }
    }
    out.push_str(&source[prev..]);
    Ok(out)
}

/// One logical line: token indices `start..end`, where `end` is the NEWLINE.
#[derive(Debug, Clone, Copy)]
struct Logical {
    start: usize,
    end: usize,
    depth: usize,
}

fn logical_lines(tokens: &[Token<'_>]) -> Vec<Logical> {
    let mut lines = Vec::new();
    let mut depth = 0usize;
    let mut start: Option<usize> = None;
    for (i, tok) in tokens.iter().enumerate() {
        match tok.kind {
            TokenKind::Indent => depth += 1,
            TokenKind::Dedent => depth = depth.saturating_sub(1),
            TokenKind::Newline => {
                if let Some(s) = start.take() {
                    lines.push(Logical { start: s, end: i, depth });
                }
            }
            TokenKind::Comment | TokenKind::Nl | TokenKind::EndMarker => {}
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
    }
    lines
}

fn visual_width(s: &str) -> usize {
    s.chars().fold(0, |w, c| match c {
        '\t' => (w / TAB_SIZE + 1) * TAB_SIZE,
        '\x0c' => 0,
        _ => w + 1,
    })
}

fn line_prefix<'a>(src: &'a str, offset: usize) -> &'a str {
    let start = src[..offset].rfind(['\n', '\r']).map_or(0, |i| i + 1);
    &src[start..offset]
}

/// Renders token ranges as re-indented text.
struct Renderer<'a, 'src> {
    src: &'src str,
    tokens: &'a [Token<'src>],
}

impl Renderer<'_, '_> {
    /// Render tokens `from..to` (exclusive, within one logical line) with the
    /// first token placed at `indent` spaces. Emits whole output lines.
    fn render(&self, from: usize, to: usize, indent: usize, lines: &mut Vec<String>) {
        let first = &self.tokens[from];
        let base = visual_width(line_prefix(self.src, first.offset));
        let mut cur = " ".repeat(indent);
        let mut prev_end = first.offset;
        let mut fresh_line = false;

        let finish = |cur: &mut String, lines: &mut Vec<String>| {
            let kept = cur.trim_end().len();
            cur.truncate(kept);
            if !cur.trim_start().is_empty() {
                lines.push(std::mem::take(cur));
            } else {
                cur.clear();
            }
        };
        let reindent = |ws: &str| -> String {
            let width = (indent + visual_width(ws)).saturating_sub(base);
            " ".repeat(width)
        };

        for tok in &self.tokens[from..to] {
            let gap = &self.src[prev_end..tok.offset];
            if gap.contains(['\n', '\r']) {
                // Explicit backslash joins.
                let mut parts = gap.split('\n').peekable();
                let mut head = true;
                while let Some(part) = parts.next() {
                    let part = part.trim_end_matches('\r');
                    if parts.peek().is_some() {
                        if head && !fresh_line {
                            cur.push_str(part);
                        } else {
                            cur.push_str(&reindent(part));
                        }
                        finish(&mut cur, lines);
                        head = false;
                    } else {
                        cur.push_str(&reindent(part));
                    }
                }
            } else if fresh_line {
                cur.push_str(&reindent(gap));
            } else {
                cur.push_str(gap);
            }
            fresh_line = false;
            match tok.kind {
                TokenKind::Comment => {}
                TokenKind::Nl => {
                    finish(&mut cur, lines);
                    fresh_line = true;
                }
                _ => cur.push_str(tok.text),
            }
            prev_end = tok.end();
        }
        finish(&mut cur, lines);
    }
}

fn significant(tok: &Token<'_>) -> bool {
    !matches!(
        tok.kind,
        TokenKind::Comment | TokenKind::Nl | TokenKind::Newline
    )
}

fn string_prefix_len(text: &str) -> usize {
    text.find(['\'', '"']).unwrap_or(0)
}

fn is_text_literal(tok: &Token<'_>) -> bool {
    if tok.kind != TokenKind::String {
        return false;
    }
    let prefix = &tok.text[..string_prefix_len(tok.text)];
    !prefix.contains(['b', 'B', 'f', 'F'])
}

/// Literal content between the quotes.
fn literal_content(text: &str) -> &str {
    let body = &text[string_prefix_len(text)..];
    let q = if body.starts_with("\"\"\"") || body.starts_with("'''") {
        3
    } else {
        1
    };
    &body[q..body.len() - q]
}

/// Index of the first depth-0 `;` in `from..to`, if any.
fn first_semicolon(tokens: &[Token<'_>], from: usize, to: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, tok) in tokens.iter().enumerate().take(to).skip(from) {
        if tok.kind == TokenKind::Op {
            match tok.text {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                ";" if depth == 0 => return Some(i),
                _ => {}
            }
        }
    }
    None
}

struct Docstring {
    content: String,
    raw: String,
    /// Token index where the rest of the statement list resumes, if the
    /// docstring was followed by `;` and more statements on its line.
    resume: Option<usize>,
}

/// Docstring check on the statement starting at `from` and ending before `to`.
fn docstring_at(src: &str, tokens: &[Token<'_>], from: usize, to: usize) -> Option<Docstring> {
    let stmt_end = first_semicolon(tokens, from, to).unwrap_or(to);
    let sig: Vec<&Token<'_>> = tokens[from..stmt_end].iter().filter(|t| significant(t)).collect();
    if sig.is_empty() || !sig.iter().all(|t| is_text_literal(t)) {
        return None;
    }
    let content = sig.iter().map(|t| literal_content(t.text)).collect::<String>();
    let raw = src[sig[0].offset..sig[sig.len() - 1].end()].to_string();
    let resume = if stmt_end < to {
        (stmt_end + 1..to)
            .find(|&i| significant(&tokens[i]))
            .filter(|&i| !tokens[i].is_op(";"))
    } else {
        None
    };
    Some(Docstring { content, raw, resume })
}

/// Extract every method in `source`.
pub fn extract_methods(source: &str, repo: &str, path: &str) -> Result<Vec<MethodRecord>, ExtractError> {
    let tokens = pytok::tokenize(source)?;
    let file_hash = format!("{:x}", Sha256::digest(source.as_bytes()));
    let report = check_structure(&tokens);
    if let (Some(failure), Some(line)) = (report.failure, report.line) {
        return Err(ExtractError::Structure { failure, line });
    }
    let lines = logical_lines(&tokens);
    let renderer = Renderer { src: source, tokens: &tokens };
    let mut records = Vec::new();

    for (li, ll) in lines.iter().enumerate() {
        let mut head = ll.start;
        if tokens[head].is_name("async") && tokens[head + 1].is_name("def") {
            head += 1;
        }
        if !tokens[head].is_name("def") {
            continue;
        }
        let name = tokens[head + 1].text.to_string();
        let Some(colon) = pytok::header_colon(&tokens[ll.start..ll.end]).map(|i| i + ll.start) else {
            continue;
        };

        // Decorators are the directly preceding `@` lines at the same depth.
        let mut first_line = li;
        while first_line > 0 {
            let prev = &lines[first_line - 1];
            if prev.depth == ll.depth && tokens[prev.start].is_op("@") {
                first_line -= 1;
            } else {
                break;
            }
        }
        let mut sig_lines = Vec::new();
        for dec in &lines[first_line..li] {
            renderer.render(dec.start, dec.end, 0, &mut sig_lines);
        }
        renderer.render(ll.start, colon + 1, 0, &mut sig_lines);

        let inline_start = (colon + 1..ll.end).find(|&i| significant(&tokens[i]));
        let mut body_lines = Vec::new();
        let docstring;
        match inline_start {
            Some(first) => {
                docstring = docstring_at(source, &tokens, first, ll.end);
                let body_from = match &docstring {
                    Some(d) => d.resume,
                    None => Some(first),
                };
                if let Some(from) = body_from {
                    renderer.render(from, ll.end, INDENT.len(), &mut body_lines);
                }
            }
            None => {
                let suite: Vec<&Logical> = lines[li + 1..]
                    .iter()
                    .take_while(|l| l.depth > ll.depth)
                    .collect();
                let Some(first) = suite.first() else {
                    continue;
                };
                docstring = docstring_at(source, &tokens, first.start, first.end);
                let skip = match &docstring {
                    Some(d) => {
                        if let Some(from) = d.resume {
                            renderer.render(from, first.end, INDENT.len(), &mut body_lines);
                        }
                        1
                    }
                    None => 0,
                };
                for stmt in &suite[skip..] {
                    let indent = INDENT.len() * (stmt.depth - ll.depth);
                    renderer.render(stmt.start, stmt.end, indent, &mut body_lines);
                }
            }
        }
        if body_lines.is_empty() {
            body_lines.push(format!("{INDENT}pass"));
        }

        let (docstring, docstring_raw) = match docstring {
            Some(d) => (Some(d.content), Some(d.raw)),
            None => (None, None),
        };
        records.push(MethodRecord {
            repo: repo.to_string(),
            path: path.to_string(),
            name,
            signature: sig_lines.join("\n"),
            docstring,
            body: body_lines.join("\n"),
            style: None,
            line: tokens[head].line,
            docstring_raw,
            file_sha256: file_hash.clone(),
        });
    }
    Ok(records)
}
