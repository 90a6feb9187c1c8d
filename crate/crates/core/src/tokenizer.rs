//! Vocabulary over flattened level strings: a character-level baseline and a
//! byte-pair encoding trained on the corpus itself.
//!
//! Token ids are assigned deterministically: the 14 tile symbols in canonical
//! order, then the four specials (pad, begin, end, mask), then one id per
//! learned merge in training order.

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::TILE_SYMBOLS;

pub type TokenId = u32;

/// Number of special (non-text) tokens: pad, begin, end, mask.
pub const NUM_SPECIALS: usize = 4;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TokenizerError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("unknown symbol {symbol:?} at position {position}")]
    UnknownSymbol { position: usize, symbol: char },
    #[error("unknown token id {id}")]
    UnknownId { id: TokenId },
    #[error("bad vocab file: {0}")]
    BadVocabFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabMode {
    Char,
    Bpe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Text(String),
    Pad,
    Begin,
    End,
    Mask,
}

impl TokenKind {
    fn as_text(&self) -> &str {
        match self {
            TokenKind::Text(s) => s,
            _ => "",
        }
    }
}

/// An encoded sequence of token ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(pub Vec<TokenId>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(ids: Vec<TokenId>) -> Self {
        TokenSequence(ids)
    }
}

/// Immutable tokenizer state: the symbol table plus ordered merge rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    mode: VocabMode,
    tokens: Vec<TokenKind>,
    /// Merge rules in training order, as token ids: (left, right) -> merged.
    merges: Vec<(TokenId, TokenId, TokenId)>,
    text_ids: HashMap<String, TokenId>,
}

impl Vocab {
    /// The character-level baseline: 14 tile symbols plus the 4 specials.
    pub fn char_vocab() -> Vocab {
        let mut tokens: Vec<TokenKind> = TILE_SYMBOLS
            .iter()
            .map(|&c| TokenKind::Text(c.to_string()))
            .collect();
        tokens.push(TokenKind::Pad);
        tokens.push(TokenKind::Begin);
        tokens.push(TokenKind::End);
        tokens.push(TokenKind::Mask);
        let text_ids = tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| match t {
                TokenKind::Text(s) => Some((s.clone(), i as TokenId)),
                _ => None,
            })
            .collect();
        Vocab {
            mode: VocabMode::Char,
            tokens,
            merges: Vec::new(),
            text_ids,
        }
    }

    /// Train a byte-pair encoding over flattened level strings.
    ///
    /// Each round merges the most frequent adjacent token pair across the
    /// whole corpus; ties pick the lexicographically smallest merged string.
    /// Training stops early only when no adjacent pair remains.
    pub fn train_bpe(corpus: &[String], num_merges: usize) -> Result<Vocab, TokenizerError> {
        if corpus.is_empty() {
            return Err(TokenizerError::EmptyCorpus);
        }
        let mut vocab = Vocab::char_vocab();
        vocab.mode = VocabMode::Bpe;
        let mut work: Vec<Vec<TokenId>> = corpus
            .iter()
            .map(|s| vocab.encode_chars(s))
            .collect::<Result<_, _>>()?;

        for _ in 0..num_merges {
            let mut counts: HashMap<(TokenId, TokenId), usize> = HashMap::new();
            for seq in &work {
                for pair in seq.windows(2) {
                    *counts.entry((pair[0], pair[1])).or_insert(0) += 1;
                }
            }
            let best = counts.into_iter().reduce(|best, cand| {
                let merged = |p: &(TokenId, TokenId)| {
                    format!(
                        "{}{}",
                        vocab.tokens[p.0 .0 as usize].as_text(),
                        vocab.tokens[p.0 .1 as usize].as_text()
                    )
                };
                if cand.1 > best.1 || (cand.1 == best.1 && merged(&cand) < merged(&best)) {
                    cand
                } else {
                    best
                }
            });
            let Some(((left, right), _)) = best else {
                break;
            };
            let merged_text = format!(
                "{}{}",
                vocab.tokens[left as usize].as_text(),
                vocab.tokens[right as usize].as_text()
            );
            let merged_id = vocab.tokens.len() as TokenId;
            vocab.tokens.push(TokenKind::Text(merged_text.clone()));
            vocab.text_ids.insert(merged_text, merged_id);
            vocab.merges.push((left, right, merged_id));
            for seq in &mut work {
                apply_merge(seq, left, right, merged_id);
            }
        }
        Ok(vocab)
    }

    pub fn mode(&self) -> VocabMode {
        self.mode
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    /// Merge rules as (left, right) token strings, in training order.
    pub fn merge_pairs(&self) -> Vec<(String, String)> {
        self.merges
            .iter()
            .map(|&(l, r, _)| {
                (
                    self.tokens[l as usize].as_text().to_string(),
                    self.tokens[r as usize].as_text().to_string(),
                )
            })
            .collect()
    }

    pub fn pad_id(&self) -> TokenId {
        self.special_id(&TokenKind::Pad)
    }

    pub fn begin_id(&self) -> TokenId {
        self.special_id(&TokenKind::Begin)
    }

    pub fn end_id(&self) -> TokenId {
        self.special_id(&TokenKind::End)
    }

    pub fn mask_id(&self) -> TokenId {
        self.special_id(&TokenKind::Mask)
    }

    fn special_id(&self, kind: &TokenKind) -> TokenId {
        self.tokens.iter().position(|t| t == kind).unwrap() as TokenId
    }

    /// Id of a single-character text token.
    pub fn char_id(&self, symbol: char) -> Option<TokenId> {
        self.text_ids.get(&symbol.to_string()).copied()
    }

    /// Token string for an id; specials render as the empty string.
    pub fn token_text(&self, id: TokenId) -> Result<&str, TokenizerError> {
        self.tokens
            .get(id as usize)
            .map(|t| t.as_text())
            .ok_or(TokenizerError::UnknownId { id })
    }

    pub fn is_text_token(&self, id: TokenId) -> bool {
        matches!(self.tokens.get(id as usize), Some(TokenKind::Text(_)))
    }

    fn encode_chars(&self, text: &str) -> Result<Vec<TokenId>, TokenizerError> {
        text.chars()
            .enumerate()
            .map(|(position, symbol)| {
                self.text_ids
                    .get(&symbol.to_string())
                    .copied()
                    .ok_or(TokenizerError::UnknownSymbol { position, symbol })
            })
            .collect()
    }

    /// Encode text by applying the trained merges in order.
    pub fn encode(&self, text: &str) -> Result<TokenSequence, TokenizerError> {
        let mut seq = self.encode_chars(text)?;
        for &(left, right, merged) in &self.merges {
            apply_merge(&mut seq, left, right, merged);
        }
        Ok(TokenSequence(seq))
    }

    /// Concatenate the token strings; specials contribute nothing.
    pub fn decode(&self, tokens: &TokenSequence) -> Result<String, TokenizerError> {
        let mut out = String::new();
        for &id in &tokens.0 {
            out.push_str(self.token_text(id)?);
        }
        Ok(out)
    }

    /// Versioned text serialization; bit-identical across runs.
    pub fn to_file_string(&self) -> String {
        let mode = match self.mode {
            VocabMode::Char => "char",
            VocabMode::Bpe => "bpe",
        };
        let mut out = format!(
            "levelsmith-vocab v1 mode={} tokens={} merges={}\n",
            mode,
            self.tokens.len(),
            self.merges.len()
        );
        for token in &self.tokens {
            match token {
                TokenKind::Text(s) => out.push_str(&format!("t {s}\n")),
                TokenKind::Pad => out.push_str("s pad\n"),
                TokenKind::Begin => out.push_str("s begin\n"),
                TokenKind::End => out.push_str("s end\n"),
                TokenKind::Mask => out.push_str("s mask\n"),
            }
        }
        for &(l, r, _) in &self.merges {
            out.push_str(&format!(
                "m {} {}\n",
                self.tokens[l as usize].as_text(),
                self.tokens[r as usize].as_text()
            ));
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Vocab, TokenizerError> {
        let bad = |m: &str| TokenizerError::BadVocabFile(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("levelsmith-vocab") || fields.next() != Some("v1") {
            return Err(bad("bad header"));
        }
        let mut mode = None;
        let mut n_tokens = None;
        let mut n_merges = None;
        for field in fields {
            match field.split_once('=') {
                Some(("mode", "char")) => mode = Some(VocabMode::Char),
                Some(("mode", "bpe")) => mode = Some(VocabMode::Bpe),
                Some(("tokens", v)) => n_tokens = v.parse().ok(),
                Some(("merges", v)) => n_merges = v.parse().ok(),
                _ => return Err(bad(&format!("bad header field {field:?}"))),
            }
        }
        let (Some(mode), Some(n_tokens), Some(n_merges)): (_, Option<usize>, Option<usize>) =
            (mode, n_tokens, n_merges)
        else {
            return Err(bad("incomplete header"));
        };
        let mut tokens = Vec::with_capacity(n_tokens);
        let mut text_ids = HashMap::new();
        for _ in 0..n_tokens {
            let line = lines.next().ok_or_else(|| bad("truncated token list"))?;
            let kind = match line.split_once(' ') {
                Some(("t", s)) => {
                    text_ids.insert(s.to_string(), tokens.len() as TokenId);
                    TokenKind::Text(s.to_string())
                }
                Some(("s", "pad")) => TokenKind::Pad,
                Some(("s", "begin")) => TokenKind::Begin,
                Some(("s", "end")) => TokenKind::End,
                Some(("s", "mask")) => TokenKind::Mask,
                _ => return Err(bad(&format!("bad token line {line:?}"))),
            };
            tokens.push(kind);
        }
        let mut vocab = Vocab {
            mode,
            tokens,
            merges: Vec::new(),
            text_ids,
        };
        for _ in 0..n_merges {
            let line = lines.next().ok_or_else(|| bad("truncated merge list"))?;
            let rest = line
                .strip_prefix("m ")
                .ok_or_else(|| bad(&format!("bad merge line {line:?}")))?;
            let (l, r) = rest
                .split_once(' ')
                .ok_or_else(|| bad(&format!("bad merge line {line:?}")))?;
            let left = *vocab.text_ids.get(l).ok_or_else(|| bad("merge names unknown token"))?;
            let right = *vocab.text_ids.get(r).ok_or_else(|| bad("merge names unknown token"))?;
            let merged = *vocab
                .text_ids
                .get(&format!("{l}{r}"))
                .ok_or_else(|| bad("merge result missing from token list"))?;
            vocab.merges.push((left, right, merged));
        }
        Ok(vocab)
    }
}

/// Merge every non-overlapping (left, right) occurrence, left to right.
fn apply_merge(seq: &mut Vec<TokenId>, left: TokenId, right: TokenId, merged: TokenId) {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == left && seq[i + 1] == right {
            out.push(merged);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    *seq = out;
}
