//! Python 3 lexical analysis.
//!
//! [`tokenize`] follows the standard library tokenizer closely enough that the
//! kind/text streams agree on ordinary source: implicit line joining inside
//! brackets, explicit backslash joining, an indentation stack compared at tab
//! stops of 8, and `NL` (not `NEWLINE`) for blank and comment-only lines.
//!
//! [`check_structure`] is a token-level approximation of "does this parse":
//! it verifies bracket balance, indentation, and compound statement headers
//! without a full grammar.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Name,
    Number,
    String,
    Op,
    Comment,
    Newline,
    Nl,
    Indent,
    Dedent,
    EndMarker,
}

impl TokenKind {
    /// Name used by the CPython `tokenize` module for this kind.
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Name => "NAME",
            TokenKind::Number => "NUMBER",
            TokenKind::String => "STRING",
            TokenKind::Op => "OP",
            TokenKind::Comment => "COMMENT",
            TokenKind::Newline => "NEWLINE",
            TokenKind::Nl => "NL",
            TokenKind::Indent => "INDENT",
            TokenKind::Dedent => "DEDENT",
            TokenKind::EndMarker => "ENDMARKER",
        }
    }

    /// INDENT, DEDENT and ENDMARKER carry no source text.
    pub fn is_synthetic(self) -> bool {
        matches!(
            self,
            TokenKind::Indent | TokenKind::Dedent | TokenKind::EndMarker
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One lexical unit. `text` borrows from the tokenized source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'src> {
    pub kind: TokenKind,
    pub text: &'src str,
    /// 1-based line of the first character.
    pub line: usize,
    /// 0-based column, in characters.
    pub col: usize,
    /// Byte offset of the first character.
    pub offset: usize,
}

impl Token<'_> {
    pub fn end(&self) -> usize {
        self.offset + self.text.len()
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == TokenKind::Name && self.text == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error("line {line}: {message}")]
    Lex { line: usize, message: String },
    #[error("line {line}: inconsistent use of tabs and spaces in indentation")]
    InconsistentIndent { line: usize },
    #[error("line {line}: unbalanced brackets")]
    UnbalancedBrackets { line: usize },
    #[error("line {line}: unindent does not match any outer indentation level")]
    DanglingDedent { line: usize },
}

impl TokenizeError {
    pub fn line(&self) -> usize {
        match *self {
            TokenizeError::Lex { line, .. }
            | TokenizeError::InconsistentIndent { line }
            | TokenizeError::UnbalancedBrackets { line }
            | TokenizeError::DanglingDedent { line } => line,
        }
    }

    pub fn failure(&self) -> Failure {
        match self {
            TokenizeError::Lex { .. } => Failure::LexError,
            TokenizeError::InconsistentIndent { .. } => Failure::InconsistentIndent,
            TokenizeError::UnbalancedBrackets { .. } => Failure::UnbalancedBrackets,
            TokenizeError::DanglingDedent { .. } => Failure::DanglingDedent,
        }
    }
}

const TAB_SIZE: usize = 8;

// Longest first so that maximal munch is a linear scan.
const OPERATORS: &[&str] = &[
    "**=", "...", "//=", ">>=", "<<=", "!=", "%=", "&=", "*=", "**", "+=", "-=", "->", "//",
    "/=", ":=", "<<", "<=", "==", ">=", ">>", "@=", "^=", "|=", "(", ")", "[", "]", "{", "}",
    ",", ":", ";", ".", "+", "-", "*", "/", "%", "&", "|", "^", "~", "<", ">", "=", "@",
];

struct Lexer<'src> {
    src: &'src str,
    bytes: &'src [u8],
    pos: usize,
    line_starts: Vec<usize>,
    tokens: Vec<Token<'src>>,
    indents: Vec<(usize, usize)>,
    brackets: Vec<(u8, usize)>,
}

/// Tokenize UTF-8 bytes; invalid UTF-8 is a lexical error.
pub fn tokenize_bytes(data: &[u8]) -> Result<Vec<Token<'_>>, TokenizeError> {
    match std::str::from_utf8(data) {
        Ok(src) => tokenize(src),
        Err(e) => {
            let line = 1 + data[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
            Err(TokenizeError::Lex {
                line,
                message: "invalid UTF-8".to_string(),
            })
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token<'_>>, TokenizeError> {
    let mut line_starts = vec![0];
    line_starts.extend(
        src.bytes()
            .enumerate()
            .filter(|&(_, b)| b == b'\n')
            .map(|(i, _)| i + 1),
    );
    let mut lexer = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line_starts,
        tokens: Vec::new(),
        indents: vec![(0, 0)],
        brackets: Vec::new(),
    };
    if src.starts_with('\u{feff}') {
        lexer.pos = '\u{feff}'.len_utf8();
    }
    lexer.run()?;
    Ok(lexer.tokens)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic() || (!c.is_ascii() && c.is_alphanumeric())
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "r" | "u" | "f" | "b" | "br" | "rb" | "fr" | "rf"
    )
}

impl<'src> Lexer<'src> {
    fn line_of(&self, offset: usize) -> usize {
        self.line_starts.partition_point(|&s| s <= offset)
    }

    fn col_of(&self, offset: usize) -> usize {
        let start = self.line_starts[self.line_of(offset) - 1];
        self.src[start..offset].chars().count()
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        self.tokens.push(Token {
            kind,
            text: &self.src[start..end],
            line: self.line_of(start),
            col: self.col_of(start),
            offset: start,
        });
    }

    fn lex_error(&self, offset: usize, message: impl Into<String>) -> TokenizeError {
        TokenizeError::Lex {
            line: self.line_of(offset),
            message: message.into(),
        }
    }

    fn peek(&self, at: usize) -> Option<u8> {
        self.bytes.get(at).copied()
    }

    fn char_at(&self, at: usize) -> Option<char> {
        self.src[at..].chars().next()
    }

    /// Length of a line break at `at`, if any.
    fn newline_len(&self, at: usize) -> Option<usize> {
        match self.peek(at) {
            Some(b'\n') => Some(1),
            Some(b'\r') if self.peek(at + 1) == Some(b'\n') => Some(2),
            Some(b'\r') => Some(1),
            _ => None,
        }
    }

    fn comment_end(&self, start: usize) -> usize {
        self.bytes[start..]
            .iter()
            .position(|&b| b == b'\n' || b == b'\r')
            .map_or(self.bytes.len(), |n| start + n)
    }

    fn run(&mut self) -> Result<(), TokenizeError> {
        let mut at_line_start = true;
        loop {
            if at_line_start {
                // Measure indentation of a fresh logical line.
                let (mut col, mut altcol) = (0usize, 0usize);
                let mut p = self.pos;
                while let Some(b) = self.peek(p) {
                    match b {
                        b' ' => {
                            col += 1;
                            altcol += 1;
                        }
                        b'\t' => {
                            col = (col / TAB_SIZE + 1) * TAB_SIZE;
                            altcol += 1;
                        }
                        b'\x0c' => {
                            col = 0;
                            altcol = 0;
                        }
                        _ => break,
                    }
                    p += 1;
                }
                if p >= self.bytes.len() {
                    self.pos = p;
                    break;
                }
                if self.peek(p) == Some(b'#') {
                    let end = self.comment_end(p);
                    self.push(TokenKind::Comment, p, end);
                    let nl = self.newline_len(end).unwrap_or(0);
                    self.push(TokenKind::Nl, end, end + nl);
                    self.pos = end + nl;
                    if nl == 0 {
                        break;
                    }
                    continue;
                }
                if let Some(nl) = self.newline_len(p) {
                    self.push(TokenKind::Nl, p, p + nl);
                    self.pos = p + nl;
                    continue;
                }
                self.pos = p;
                self.indent_to(col, altcol, p)?;
                at_line_start = false;
            }

            // Inter-token whitespace.
            while matches!(self.peek(self.pos), Some(b' ' | b'\t' | b'\x0c')) {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(c) = self.char_at(start) else {
                break;
            };

            if let Some(nl) = self.newline_len(start) {
                let kind = if self.brackets.is_empty() {
                    at_line_start = true;
                    TokenKind::Newline
                } else {
                    TokenKind::Nl
                };
                self.push(kind, start, start + nl);
                self.pos = start + nl;
                continue;
            }

            match c {
                '#' => {
                    let end = self.comment_end(start);
                    self.push(TokenKind::Comment, start, end);
                    self.pos = end;
                }
                '\\' => match self.newline_len(start + 1) {
                    Some(nl) => self.pos = start + 1 + nl,
                    None if start + 1 >= self.bytes.len() => {
                        return Err(self.lex_error(start, "unexpected EOF after line continuation"))
                    }
                    None => {
                        return Err(
                            self.lex_error(start, "unexpected character after line continuation")
                        )
                    }
                },
                '"' | '\'' => {
                    let end = self.scan_string(start, false)?;
                    self.push(TokenKind::String, start, end);
                    self.pos = end;
                }
                c if c.is_ascii_digit() => {
                    let end = self.scan_number(start);
                    self.push(TokenKind::Number, start, end);
                    self.pos = end;
                }
                '.' if self.peek(start + 1).is_some_and(|b| b.is_ascii_digit()) => {
                    let end = self.scan_number(start);
                    self.push(TokenKind::Number, start, end);
                    self.pos = end;
                }
                c if is_ident_start(c) => {
                    let mut end = start;
                    for ch in self.src[start..].chars() {
                        if !is_ident_continue(ch) {
                            break;
                        }
                        end += ch.len_utf8();
                    }
                    let quote = matches!(self.peek(end), Some(b'"' | b'\''));
                    let prefix = &self.src[start..end];
                    if quote && is_string_prefix(prefix) {
                        let is_f = prefix.contains(['f', 'F']);
                        let end = self.scan_string(end, is_f)?;
                        self.push(TokenKind::String, start, end);
                        self.pos = end;
                    } else {
                        self.push(TokenKind::Name, start, end);
                        self.pos = end;
                    }
                }
                _ => {
                    let rest = &self.src[start..];
                    let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) else {
                        return Err(self.lex_error(start, format!("invalid character {c:?}")));
                    };
                    self.bracket(op.as_bytes()[0], start)?;
                    self.push(TokenKind::Op, start, start + op.len());
                    self.pos = start + op.len();
                }
            }
        }

        let eof = self.bytes.len();
        if let Some(&(_, line)) = self.brackets.last() {
            return Err(TokenizeError::UnbalancedBrackets { line });
        }
        if !at_line_start {
            self.push(TokenKind::Newline, eof, eof);
        }
        for _ in 1..self.indents.len() {
            self.push(TokenKind::Dedent, eof, eof);
        }
        self.indents.truncate(1);
        self.push(TokenKind::EndMarker, eof, eof);
        Ok(())
    }

    fn indent_to(&mut self, col: usize, altcol: usize, at: usize) -> Result<(), TokenizeError> {
        let line = self.line_of(at);
        let &(top, top_alt) = self.indents.last().expect("indent stack never empty");
        if col == top {
            if altcol != top_alt {
                return Err(TokenizeError::InconsistentIndent { line });
            }
        } else if col > top {
            if altcol <= top_alt {
                return Err(TokenizeError::InconsistentIndent { line });
            }
            self.indents.push((col, altcol));
            self.push(TokenKind::Indent, at, at);
        } else {
            while col < self.indents.last().map_or(0, |t| t.0) {
                self.indents.pop();
                self.push(TokenKind::Dedent, at, at);
            }
            let &(top, top_alt) = self.indents.last().expect("indent stack never empty");
            if col != top {
                return Err(TokenizeError::DanglingDedent { line });
            }
            if altcol != top_alt {
                return Err(TokenizeError::InconsistentIndent { line });
            }
        }
        Ok(())
    }

    fn bracket(&mut self, b: u8, at: usize) -> Result<(), TokenizeError> {
        let line = self.line_of(at);
        match b {
            b'(' | b'[' | b'{' => self.brackets.push((b, line)),
            b')' | b']' | b'}' => {
                let want = match b {
                    b')' => b'(',
                    b']' => b'[',
                    _ => b'{',
                };
                match self.brackets.pop() {
                    Some((open, _)) if open == want => {}
                    _ => return Err(TokenizeError::UnbalancedBrackets { line }),
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn digits(&self, mut p: usize, radix_ok: impl Fn(u8) -> bool) -> usize {
        loop {
            match self.peek(p) {
                Some(b) if radix_ok(b) => p += 1,
                Some(b'_') if self.peek(p + 1).is_some_and(&radix_ok) => p += 2,
                _ => return p,
            }
        }
    }

    fn scan_number(&self, start: usize) -> usize {
        let dec = |b: u8| b.is_ascii_digit();
        if self.peek(start) == Some(b'0') {
            let radix: Option<fn(u8) -> bool> = match self.peek(start + 1) {
                Some(b'x' | b'X') => Some(|b: u8| b.is_ascii_hexdigit()),
                Some(b'o' | b'O') => Some(|b: u8| (b'0'..=b'7').contains(&b)),
                Some(b'b' | b'B') => Some(|b: u8| b == b'0' || b == b'1'),
                _ => None,
            };
            if let Some(radix) = radix {
                let mut p = start + 2;
                if self.peek(p) == Some(b'_') {
                    p += 1;
                }
                let end = self.digits(p, radix);
                if end > p {
                    return end;
                }
            }
        }
        let mut p = self.digits(start, dec);
        let had_int = p > start;
        if self.peek(p) == Some(b'.') {
            let after = self.digits(p + 1, dec);
            if had_int || after > p + 1 {
                p = after;
            }
        }
        if matches!(self.peek(p), Some(b'e' | b'E')) {
            let mut q = p + 1;
            if matches!(self.peek(q), Some(b'+' | b'-')) {
                q += 1;
            }
            if self.peek(q).is_some_and(dec) {
                p = self.digits(q, dec);
            }
        }
        if matches!(self.peek(p), Some(b'j' | b'J')) {
            p += 1;
        }
        p
    }

    /// Scan a string literal whose opening quote is at `q`. Returns the end offset.
    fn scan_string(&self, q: usize, is_f: bool) -> Result<usize, TokenizeError> {
        let quote = self.bytes[q];
        let triple = self.peek(q + 1) == Some(quote) && self.peek(q + 2) == Some(quote);
        let mut p = if triple { q + 3 } else { q + 1 };
        let unterminated = || self.lex_error(q, "unterminated string literal");
        loop {
            let Some(b) = self.peek(p) else {
                return Err(unterminated());
            };
            match b {
                b'\\' => {
                    if p + 1 >= self.bytes.len() {
                        return Err(unterminated());
                    }
                    // Skip the escaped character, which may be multi-byte.
                    p += 1 + self.char_at(p + 1).map_or(1, char::len_utf8);
                }
                b if b == quote => {
                    if !triple {
                        return Ok(p + 1);
                    }
                    if self.peek(p + 1) == Some(quote) && self.peek(p + 2) == Some(quote) {
                        return Ok(p + 3);
                    }
                    p += 1;
                }
                b'\n' | b'\r' if !triple => return Err(unterminated()),
                b'{' if is_f => {
                    if self.peek(p + 1) == Some(b'{') {
                        p += 2;
                    } else {
                        p = self.scan_fstring_expr(p + 1, triple)?;
                    }
                }
                _ => p += 1,
            }
        }
    }

    /// Skip a replacement field body up to and including its closing brace.
    /// Nested brackets are counted and nested string literals skipped whole,
    /// so the field is treated as opaque text.
    fn scan_fstring_expr(&self, mut p: usize, triple: bool) -> Result<usize, TokenizeError> {
        let mut depth = 0usize;
        let start = p;
        loop {
            let Some(b) = self.peek(p) else {
                return Err(self.lex_error(start, "unterminated f-string expression"));
            };
            match b {
                b'(' | b'[' | b'{' => {
                    depth += 1;
                    p += 1;
                }
                b'}' if depth == 0 => return Ok(p + 1),
                b')' | b']' | b'}' => {
                    depth = depth.saturating_sub(1);
                    p += 1;
                }
                b'"' | b'\'' => {
                    let mut k = p;
                    while k > start && self.bytes[k - 1].is_ascii_alphabetic() {
                        k -= 1;
                    }
                    let prefix = &self.src[k..p];
                    let nested_f = is_string_prefix(prefix) && prefix.contains(['f', 'F']);
                    p = self.scan_string(p, nested_f)?;
                }
                b'\n' | b'\r' if !triple => {
                    return Err(self.lex_error(start, "unterminated f-string expression"))
                }
                _ => p += 1,
            }
        }
    }
}

/// Why a token stream failed the structural check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Failure {
    LexError,
    UnbalancedBrackets,
    InconsistentIndent,
    BadSuiteHeader,
    DanglingDedent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub failure: Option<Failure>,
    pub line: Option<usize>,
}

impl ValidityReport {
    pub fn ok() -> Self {
        ValidityReport {
            valid: true,
            failure: None,
            line: None,
        }
    }

    pub fn fail(failure: Failure, line: usize) -> Self {
        ValidityReport {
            valid: false,
            failure: Some(failure),
            line: Some(line),
        }
    }
}

const HEADER_KEYWORDS: &[&str] = &[
    "def", "class", "if", "elif", "else", "for", "while", "try", "except", "finally", "with",
];

fn is_header_keyword(tok: &Token<'_>) -> bool {
    tok.kind == TokenKind::Name && HEADER_KEYWORDS.contains(&tok.text)
}

/// Tokenize `source` and check it; tokenizer errors become failures.
pub fn check_source(source: &str) -> ValidityReport {
    match tokenize(source) {
        Ok(tokens) => check_structure(&tokens),
        Err(e) => ValidityReport::fail(e.failure(), e.line()),
    }
}

/// Index of the colon ending a compound statement header, scanning a logical
/// line from its first token. Colons inside brackets and those belonging to a
/// depth-0 `lambda` are skipped.
pub(crate) fn header_colon(line: &[Token<'_>]) -> Option<usize> {
    let mut depth = 0usize;
    let mut lambdas = 0usize;
    for (i, tok) in line.iter().enumerate() {
        match tok.kind {
            TokenKind::Op => match tok.text {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                ":" if depth == 0 => {
                    if lambdas > 0 {
                        lambdas -= 1;
                    } else {
                        return Some(i);
                    }
                }
                _ => {}
            },
            TokenKind::Name if depth == 0 && tok.text == "lambda" => lambdas += 1,
            _ => {}
        }
    }
    None
}

/// Structural validity of a token stream.
pub fn check_structure(tokens: &[Token<'_>]) -> ValidityReport {
    // Bracket balance.
    let mut stack: Vec<&str> = Vec::new();
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Op) {
        match tok.text {
            "(" | "[" | "{" => stack.push(tok.text),
            ")" | "]" | "}" => {
                let want = match tok.text {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                if stack.pop() != Some(want) {
                    return ValidityReport::fail(Failure::UnbalancedBrackets, tok.line);
                }
            }
            _ => {}
        }
    }
    if !stack.is_empty() {
        let line = tokens.last().map_or(1, |t| t.line);
        return ValidityReport::fail(Failure::UnbalancedBrackets, line);
    }

    // Logical lines, with INDENT/DEDENT bookkeeping between them.
    let mut depth = 0usize;
    // True when the previous logical line ended in a header colon with nothing after it.
    let mut expect_suite: Option<usize> = None;
    let mut line: Vec<Token<'_>> = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::Comment | TokenKind::Nl | TokenKind::EndMarker => {}
            TokenKind::Indent => {
                if expect_suite.take().is_none() {
                    return ValidityReport::fail(Failure::InconsistentIndent, tok.line);
                }
                depth += 1;
            }
            TokenKind::Dedent => {
                if depth == 0 {
                    return ValidityReport::fail(Failure::DanglingDedent, tok.line);
                }
                depth -= 1;
            }
            TokenKind::Newline => {
                if line.is_empty() {
                    continue;
                }
                if let Some(header_line) = expect_suite.take() {
                    return ValidityReport::fail(Failure::BadSuiteHeader, header_line);
                }
                match check_logical_line(&line) {
                    Ok(opens_suite) => {
                        expect_suite = opens_suite.then_some(line[0].line);
                    }
                    Err(report) => return report,
                }
                line.clear();
            }
            _ => line.push(*tok),
        }
    }
    if !line.is_empty() {
        // Stream without a final NEWLINE: still judge the last line.
        match check_logical_line(&line) {
            Ok(true) => return ValidityReport::fail(Failure::BadSuiteHeader, line[0].line),
            Ok(false) => {}
            Err(report) => return report,
        }
    }
    if let Some(header_line) = expect_suite {
        return ValidityReport::fail(Failure::BadSuiteHeader, header_line);
    }
    if depth != 0 {
        let line = tokens.last().map_or(1, |t| t.line);
        return ValidityReport::fail(Failure::DanglingDedent, line);
    }
    ValidityReport::ok()
}

/// Returns whether the line is a header awaiting an indented suite.
fn check_logical_line(line: &[Token<'_>]) -> Result<bool, ValidityReport> {
    let mut first = 0;
    if line[0].is_name("async") && line.len() > 1 {
        first = 1;
    }
    let head = &line[first];
    let is_header = is_header_keyword(head);
    let colon = header_colon(&line[first..]).map(|i| i + first);
    if is_header {
        let Some(colon) = colon else {
            return Err(ValidityReport::fail(Failure::BadSuiteHeader, head.line));
        };
        let rest = &line[colon + 1..];
        if rest.is_empty() {
            return Ok(true);
        }
        // Inline suite: simple statements only.
        let mut inline_first = &rest[0];
        if inline_first.is_name("async") && rest.len() > 1 {
            inline_first = &rest[1];
        }
        if is_header_keyword(inline_first) {
            return Err(ValidityReport::fail(Failure::BadSuiteHeader, head.line));
        }
        return Ok(false);
    }
    // Any other line ending in a bare colon (e.g. `match x:`) may open a suite.
    Ok(line.last().is_some_and(|t| t.is_op(":")) && colon == Some(line.len() - 1))
}
