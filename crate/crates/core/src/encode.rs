//! Tokenization, vocabulary, sentence matrices and hashed n-gram features.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::hash::Hasher;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

pub const DEFAULT_MAX_LEN: usize = 24;
pub const DEFAULT_BUCKETS: usize = 1 << 18;

const STRIPPED: &[char] = &['.', ',', '?', '!', ';', ':', '"', '\''];

static TRUNCATED: AtomicU64 = AtomicU64::new(0);

/// Number of sentences cut short by [`encode_ids`] since process start.
pub fn truncated_count() -> u64 {
    TRUNCATED.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source: String,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercase, drop `.,?!;:"'` and split on whitespace.
pub fn tokenize(raw: &str) -> TokenSequence {
    let cleaned: String = raw
        .chars()
        .filter(|c| !STRIPPED.contains(c))
        .flat_map(char::to_lowercase)
        .collect();
    TokenSequence {
        tokens: cleaned.split_whitespace().map(str::to_string).collect(),
        source: raw.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabLine {
    token: String,
    index: usize,
}

impl Vocabulary {
    /// Build from raw texts. Tokens are ordered by descending frequency, ties
    /// broken lexicographically, after the reserved PAD and UNK entries.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for text in texts {
            for tok in tokenize(text).tokens {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_tokens(ranked.into_iter().map(|(t, _)| t))
    }

    /// Rebuild from an ordered token list that excludes PAD and UNK.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        all.extend(tokens);
        let index = all.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Self { index, tokens: all }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Tokens after PAD and UNK, in index order.
    pub fn content_tokens(&self) -> &[String] {
        &self.tokens[2..]
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (index, token) in self.tokens.iter().enumerate() {
            let line = VocabLine {
                token: token.clone(),
                index,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines: Vec<VocabLine> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        lines.sort_by_key(|l| l.index);
        let ok = lines.iter().enumerate().all(|(i, l)| l.index == i)
            && lines.len() >= 2
            && lines[PAD].token == PAD_TOKEN
            && lines[UNK].token == UNK_TOKEN;
        if !ok {
            return Err(Error::Data(format!(
                "{}: vocabulary indices must be dense and start with {PAD_TOKEN}, {UNK_TOKEN}",
                path.display()
            )));
        }
        Ok(Self::from_tokens(lines.into_iter().skip(2).map(|l| l.token)))
    }
}

/// Map tokens to vocabulary ids, truncating to `max_len`.
pub fn encode_ids(tokens: &[String], vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    if tokens.len() > max_len {
        TRUNCATED.fetch_add(1, Ordering::Relaxed);
    }
    tokens.iter().take(max_len).map(|t| vocab.id(t)).collect()
}

/// Stacked word vectors of one query, zero-padded to `max_len` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatrix {
    /// Row-major `max_len x dim`.
    pub data: Vec<f64>,
    pub dim: usize,
    pub max_len: usize,
    pub true_length: usize,
    /// Vocabulary ids of the first `true_length` rows.
    pub ids: Vec<usize>,
}

impl SentenceMatrix {
    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    /// Build from token ids and a row-major embedding table of width `dim`.
    pub fn from_ids(ids: &[usize], embeddings: &[f64], dim: usize, max_len: usize) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyQuery);
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        let true_length = ids.len().min(max_len);
        let mut data = vec![0.0; max_len * dim];
        for (n, &id) in ids.iter().take(true_length).enumerate() {
            if id != PAD {
                let src = embeddings
                    .get(id * dim..(id + 1) * dim)
                    .ok_or_else(|| Error::InvalidArgument(format!("token id {id} outside embedding table")))?;
                data[n * dim..(n + 1) * dim].copy_from_slice(src);
            }
        }
        Ok(Self {
            data,
            dim,
            max_len,
            true_length,
            ids: ids[..true_length].to_vec(),
        })
    }
}

pub fn encode_sentence(
    tokens: &[String],
    vocab: &Vocabulary,
    embeddings: &[f64],
    dim: usize,
    max_len: usize,
) -> Result<SentenceMatrix> {
    if tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let ids = encode_ids(tokens, vocab, max_len);
    SentenceMatrix::from_ids(&ids, embeddings, dim, max_len)
}

/// All contiguous grams of length `1..=n_max`, ordered by length then position.
pub fn extract_ngrams(tokens: &[String], n_max: usize) -> Vec<String> {
    let mut grams = Vec::new();
    for n in 1..=n_max.min(tokens.len()) {
        grams.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    grams
}

/// FNV-1a (64-bit) of the gram's UTF-8 bytes.
pub fn fnv1a(gram: &str) -> u64 {
    fnv1a_bytes(gram.as_bytes())
}

pub fn fnv1a_bytes(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedFeatures {
    pub buckets: BTreeMap<usize, u32>,
    pub num_buckets: usize,
}

impl HashedFeatures {
    pub fn total(&self) -> u64 {
        self.buckets.values().map(|&c| u64::from(c)).sum()
    }
}

pub fn hash_features<S: AsRef<str>>(grams: &[S], num_buckets: usize) -> Result<HashedFeatures> {
    if !num_buckets.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "bucket count {num_buckets} is not a power of two"
        )));
    }
    let mask = (num_buckets - 1) as u64;
    let mut buckets = BTreeMap::new();
    for g in grams {
        *buckets.entry((fnv1a(g.as_ref()) & mask) as usize).or_insert(0) += 1;
    }
    Ok(HashedFeatures {
        buckets,
        num_buckets,
    })
}
