//! Byte-level BPE.
//!
//! Every byte is first mapped to a visible character (space becomes `Ġ`,
//! U+0120), so merges and vocabulary entries are ordinary printable strings.
//! Reserved tokens (mask sentinels, indentation runs, newline, padding and
//! unknown markers) are matched before merging and are never split.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;

pub type TokenId = u32;

pub const MASK_COUNT: usize = 100;
pub const MAX_WHITESPACE_RUN: usize = 20;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const DEFAULT_VOCAB_SIZE: usize = 50181;

pub fn mask_token(index: usize) -> String {
    format!("[MASK{index}]")
}

/// The reserved token inventory, in id order.
pub fn special_tokens() -> Vec<String> {
    let mut out = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    out.extend((0..MASK_COUNT).map(mask_token));
    out.push("\n".to_string());
    out.extend((1..=MAX_WHITESPACE_RUN).map(|k| "    ".repeat(k)));
    out.extend((1..=MAX_WHITESPACE_RUN).map(|k| "\t".repeat(k)));
    out
}

struct ByteMap {
    to_char: [char; 256],
    from_char: HashMap<char, u8>,
}

fn byte_map() -> &'static ByteMap {
    static MAP: OnceLock<ByteMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let visible = |b: u8| matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        let mut to_char = ['\0'; 256];
        let mut shifted = 0u32;
        for b in 0..=255u8 {
            to_char[b as usize] = if visible(b) {
                char::from(b)
            } else {
                let c = char::from_u32(256 + shifted).expect("valid codepoint");
                shifted += 1;
                c
            };
        }
        let from_char = (0..=255u8).map(|b| (to_char[b as usize], b)).collect();
        ByteMap { to_char, from_char }
    })
}

/// Map bytes to their visible characters.
pub fn byte_encode(data: &[u8]) -> String {
    let map = byte_map();
    data.iter().map(|&b| map.to_char[b as usize]).collect()
}

/// Inverse of [`byte_encode`]; `None` if a character is outside the map.
pub fn byte_decode(text: &str) -> Option<Vec<u8>> {
    let map = byte_map();
    text.chars().map(|c| map.from_char.get(&c).copied()).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary size {requested} is below the minimum {minimum}")]
    VocabTooSmall { requested: usize, minimum: usize },
    #[error("unknown token id {0}")]
    UnknownId(TokenId),
    #[error("decoded bytes are not valid UTF-8")]
    InvalidUtf8,
    #[error("malformed vocabulary: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Letter,
    Digit,
    Newline,
    Space,
    Other,
}

fn class(c: char) -> CharClass {
    if c == '\n' || c == '\r' {
        CharClass::Newline
    } else if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphabetic() {
        CharClass::Letter
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Split text into word pieces: runs of letters, digits, or other symbols,
/// each optionally preceded by one space; newline runs and remaining
/// whitespace runs stand alone.
pub fn pretokenize(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let at = |i: usize| chars.get(i).map_or(text.len(), |&(o, _)| o);
    let run_end = |mut j: usize, cls: CharClass| {
        while j < chars.len() && class(chars[j].1) == cls {
            j += 1;
        }
        j
    };
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let cls = class(chars[i].1);
        match cls {
            CharClass::Newline => {
                let j = run_end(i, cls);
                pieces.push(&text[at(i)..at(j)]);
                i = j;
            }
            CharClass::Space => {
                let j = run_end(i, cls);
                let attaches = j < chars.len()
                    && class(chars[j].1) != CharClass::Newline
                    && chars[j - 1].1 == ' ';
                if attaches {
                    if j - 1 > i {
                        pieces.push(&text[at(i)..at(j - 1)]);
                    }
                    let k = run_end(j, class(chars[j].1));
                    pieces.push(&text[at(j - 1)..at(k)]);
                    i = k;
                } else {
                    pieces.push(&text[at(i)..at(j)]);
                    i = j;
                }
            }
            _ => {
                let j = run_end(i, cls);
                pieces.push(&text[at(i)..at(j)]);
                i = j;
            }
        }
    }
    pieces
}

enum Segment<'a> {
    Special(TokenId),
    Text(&'a str),
}

/// Longest-match lookup of reserved tokens, bucketed by first byte.
#[derive(Debug, Clone, Default)]
struct SpecialMatcher {
    by_first: HashMap<u8, Vec<(String, TokenId)>>,
}

impl SpecialMatcher {
    fn new(specials: &[(String, TokenId)]) -> Self {
        let mut by_first: HashMap<u8, Vec<(String, TokenId)>> = HashMap::new();
        for (text, id) in specials {
            if let Some(&b) = text.as_bytes().first() {
                by_first.entry(b).or_default().push((text.clone(), *id));
            }
        }
        for list in by_first.values_mut() {
            list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        }
        SpecialMatcher { by_first }
    }

    fn split<'a>(&self, text: &'a str) -> Vec<Segment<'a>> {
        let bytes = text.as_bytes();
        let mut out = Vec::new();
        let mut last = 0;
        let mut i = 0;
        while i < bytes.len() {
            let hit = self.by_first.get(&bytes[i]).and_then(|cands| {
                cands
                    .iter()
                    .find(|(s, _)| bytes[i..].starts_with(s.as_bytes()))
            });
            match hit {
                Some((s, id)) => {
                    if last < i {
                        out.push(Segment::Text(&text[last..i]));
                    }
                    out.push(Segment::Special(*id));
                    i += s.len();
                    last = i;
                }
                None => i += 1,
            }
        }
        if last < bytes.len() {
            out.push(Segment::Text(&text[last..]));
        }
        out
    }
}

/// A trained byte-level BPE vocabulary.
#[derive(Debug, Clone)]
pub struct BpeVocab {
    merges: Vec<(String, String)>,
    /// (left id, right id) -> (rank, merged id)
    merge_rank: HashMap<(TokenId, TokenId), (usize, TokenId)>,
    /// id -> token in visible form (specials byte-encoded as well)
    tokens: Vec<String>,
    token_to_id: HashMap<String, TokenId>,
    specials: Vec<(String, TokenId)>,
    matcher: SpecialMatcher,
}

impl BpeVocab {
    /// Build from an ordered merge list and raw special token texts.
    pub fn from_merges(merges: Vec<(String, String)>, specials: &[String]) -> Result<Self, BpeError> {
        let map = byte_map();
        let mut tokens: Vec<String> = map.to_char.iter().map(|c| c.to_string()).collect();
        let mut token_to_id: HashMap<String, TokenId> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        let mut merge_rank = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            let (Some(&li), Some(&ri)) = (token_to_id.get(l), token_to_id.get(r)) else {
                return Err(BpeError::Format(format!("merge {rank} ({l} {r}) uses unknown symbols")));
            };
            let merged = format!("{l}{r}");
            let id = match token_to_id.get(&merged) {
                Some(&id) => id,
                None => {
                    let id = tokens.len() as TokenId;
                    tokens.push(merged.clone());
                    token_to_id.insert(merged, id);
                    id
                }
            };
            merge_rank.entry((li, ri)).or_insert((rank, id));
        }
        let mut special_ids = Vec::with_capacity(specials.len());
        for raw in specials {
            if raw.is_empty() {
                return Err(BpeError::Format("empty special token".into()));
            }
            let id = tokens.len() as TokenId;
            tokens.push(byte_encode(raw.as_bytes()));
            special_ids.push((raw.clone(), id));
        }
        let matcher = SpecialMatcher::new(&special_ids);
        Ok(BpeVocab {
            merges,
            merge_rank,
            tokens,
            token_to_id,
            specials: special_ids,
            matcher,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Visible form of a token.
    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Id of a regular (non-reserved) token given in visible form.
    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    /// Id of a reserved token given as raw text.
    pub fn special_id(&self, raw: &str) -> Option<TokenId> {
        self.specials.iter().find(|(s, _)| s == raw).map(|&(_, id)| id)
    }

    pub fn specials(&self) -> &[(String, TokenId)] {
        &self.specials
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        self.specials.first().is_some_and(|&(_, first)| id >= first) && (id as usize) < self.tokens.len()
    }

    /// Ids of `[MASK0]`, `[MASK1]`, ... in order, as far as they exist.
    pub fn mask_ids(&self) -> Vec<TokenId> {
        (0..)
            .map_while(|i| self.special_id(&mask_token(i)))
            .collect()
    }

    fn encode_piece(&self, piece: &str, out: &mut Vec<TokenId>) {
        let mut syms: Vec<TokenId> = piece.bytes().map(TokenId::from).collect();
        while syms.len() > 1 {
            let best = syms
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.merge_rank.get(&(w[0], w[1])).map(|&(rank, id)| (rank, i, id)))
                .min();
            let Some((rank, _, merged)) = best else { break };
            let mut next = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len()
                    && self.merge_rank.get(&(syms[i], syms[i + 1])).is_some_and(|&(r, _)| r == rank)
                {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(syms[i]);
                    i += 1;
                }
            }
            syms = next;
        }
        out.extend(syms);
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(text.len() / 3);
        let mut cache: HashMap<&str, Vec<TokenId>> = HashMap::new();
        for seg in self.matcher.split(text) {
            match seg {
                Segment::Special(id) => out.push(id),
                Segment::Text(s) => {
                    for piece in pretokenize(s) {
                        if let Some(ids) = cache.get(piece) {
                            out.extend_from_slice(ids);
                            continue;
                        }
                        let mut ids = Vec::new();
                        self.encode_piece(piece, &mut ids);
                        out.extend_from_slice(&ids);
                        cache.insert(piece, ids);
                    }
                }
            }
        }
        out
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<String, BpeError> {
        let mut bytes = Vec::with_capacity(ids.len() * 3);
        for &id in ids {
            let tok = self.token(id).ok_or(BpeError::UnknownId(id))?;
            let decoded = byte_decode(tok).ok_or(BpeError::UnknownId(id))?;
            bytes.extend_from_slice(&decoded);
        }
        String::from_utf8(bytes).map_err(|_| BpeError::InvalidUtf8)
    }

    /// Write `merges` (one `left right` pair per line) and `tokens`
    /// (`token<TAB>id` per line).
    pub fn save(&self, merges_path: &Path, tokens_path: &Path) -> Result<(), BpeError> {
        let mut w = BufWriter::new(fs::File::create(merges_path)?);
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(fs::File::create(tokens_path)?);
        for (id, tok) in self.tokens.iter().enumerate() {
            writeln!(w, "{tok}\t{id}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(merges_path: &Path, tokens_path: &Path) -> Result<Self, BpeError> {
        let mut merges = Vec::new();
        for (n, line) in BufReader::new(fs::File::open(merges_path)?).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (l, r) = line
                .split_once(' ')
                .ok_or_else(|| BpeError::Format(format!("merges line {}: expected a pair", n + 1)))?;
            merges.push((l.to_string(), r.to_string()));
        }
        let mut table = Vec::new();
        for (n, line) in BufReader::new(fs::File::open(tokens_path)?).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (tok, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| BpeError::Format(format!("tokens line {}: expected token<TAB>id", n + 1)))?;
            let id: usize = id
                .parse()
                .map_err(|_| BpeError::Format(format!("tokens line {}: bad id {id:?}", n + 1)))?;
            if id != table.len() {
                return Err(BpeError::Format(format!("tokens line {}: ids must be dense and ordered", n + 1)));
            }
            table.push(tok.to_string());
        }
        let base = BpeVocab::from_merges(merges.clone(), &[])?;
        if table.len() < base.len() || table[..base.len()] != base.tokens[..] {
            return Err(BpeError::Format("token table does not match the merge list".into()));
        }
        let specials = table[base.len()..]
            .iter()
            .map(|t| {
                byte_decode(t)
                    .and_then(|b| String::from_utf8(b).ok())
                    .ok_or_else(|| BpeError::Format(format!("special token {t:?} is not byte-encoded text")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        BpeVocab::from_merges(merges, &specials)
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    count: i64,
    // Ties go to the lexicographically smallest pair.
    pair_text: Reverse<(String, String)>,
    pair: (TokenId, TokenId),
}

/// Learn merges until the vocabulary (bytes + merged tokens + reserved
/// tokens) reaches `vocab_size`, or no adjacent pairs remain.
pub fn train<S: AsRef<str> + Sync>(corpus: &[S], vocab_size: usize) -> Result<BpeVocab, BpeError> {
    let specials = special_tokens();
    let minimum = 256 + specials.len();
    if vocab_size < minimum {
        return Err(BpeError::VocabTooSmall { requested: vocab_size, minimum });
    }
    if corpus.iter().all(|d| d.as_ref().is_empty()) {
        return Err(BpeError::EmptyCorpus);
    }
    let target_tokens = vocab_size - specials.len();
    // Split on reserved tokens exactly as encoding does.
    let matcher = {
        let v = BpeVocab::from_merges(Vec::new(), &specials)?;
        v.matcher
    };

    let word_counts: HashMap<Vec<u8>, u64> = corpus
        .par_iter()
        .map(|doc| {
            let mut local: HashMap<Vec<u8>, u64> = HashMap::new();
            for seg in matcher.split(doc.as_ref()) {
                if let Segment::Text(s) = seg {
                    for piece in pretokenize(s) {
                        *local.entry(piece.as_bytes().to_vec()).or_default() += 1;
                    }
                }
            }
            local
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let mut words: Vec<(Vec<TokenId>, i64)> = word_counts
        .into_iter()
        .map(|(w, c)| (w.into_iter().map(TokenId::from).collect(), c as i64))
        .collect();
    words.sort();

    let mut symbols: Vec<String> = byte_map().to_char.iter().map(|c| c.to_string()).collect();
    let mut symbol_id: HashMap<String, TokenId> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as TokenId))
        .collect();

    let mut pair_counts: HashMap<(TokenId, TokenId), i64> = HashMap::new();
    let mut where_seen: HashMap<(TokenId, TokenId), HashSet<usize>> = HashMap::new();
    for (wi, (syms, count)) in words.iter().enumerate() {
        for w in syms.windows(2) {
            *pair_counts.entry((w[0], w[1])).or_default() += count;
            where_seen.entry((w[0], w[1])).or_default().insert(wi);
        }
    }
    let candidate = |pair: (TokenId, TokenId), count: i64, symbols: &[String]| Candidate {
        count,
        pair_text: Reverse((symbols[pair.0 as usize].clone(), symbols[pair.1 as usize].clone())),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&p, &c)| candidate(p, c, &symbols))
        .collect();

    let mut merges = Vec::new();
    while symbols.len() < target_tokens {
        let Some(top) = heap.pop() else { break };
        let current = pair_counts.get(&top.pair).copied().unwrap_or(0);
        if current != top.count {
            if current > 0 {
                heap.push(candidate(top.pair, current, &symbols));
            }
            continue;
        }
        if current <= 0 {
            continue;
        }
        let (a, b) = top.pair;
        let merged_text = format!("{}{}", symbols[a as usize], symbols[b as usize]);
        let merged = match symbol_id.get(&merged_text) {
            Some(&id) => id,
            None => {
                let id = symbols.len() as TokenId;
                symbols.push(merged_text.clone());
                symbol_id.insert(merged_text, id);
                id
            }
        };
        merges.push((symbols[a as usize].clone(), symbols[b as usize].clone()));

        let mut affected: Vec<usize> = where_seen
            .get(&top.pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut grown: HashSet<(TokenId, TokenId)> = HashSet::new();
        for wi in affected {
            let (syms, count) = &mut words[wi];
            if !syms.windows(2).any(|w| w[0] == a && w[1] == b) {
                continue;
            }
            for w in syms.windows(2) {
                *pair_counts.entry((w[0], w[1])).or_default() -= *count;
            }
            let mut next = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(syms[i]);
                    i += 1;
                }
            }
            *syms = next;
            for w in syms.windows(2) {
                let p = (w[0], w[1]);
                *pair_counts.entry(p).or_default() += *count;
                where_seen.entry(p).or_default().insert(wi);
                if w[0] == merged || w[1] == merged {
                    grown.insert(p);
                }
            }
        }
        let mut grown: Vec<_> = grown.into_iter().collect();
        grown.sort_unstable();
        for p in grown {
            let c = pair_counts[&p];
            if c > 0 {
                heap.push(candidate(p, c, &symbols));
            }
        }
    }
    BpeVocab::from_merges(merges, &specials)
}
