//! Labeled query corpus: department lexicon, phrase templates, generation,
//! JSON-lines serialization and seeded train/test splitting.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::{seeded, shuffle};
use crate::{Error, Result};

const ORIGIN_SLOT: &str = "{origin}";
const DEST_SLOT: &str = "{dest}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Department {
    pub id: usize,
    pub name: String,
}

/// Parse a lexicon with one department name per line. Blank lines are skipped;
/// ids follow the order of the remaining lines.
pub fn parse_departments(text: &str) -> Result<Vec<Department>> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut departments = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        let key = name.to_lowercase();
        if let Some(first) = seen.get(&key) {
            return Err(Error::Data(format!(
                "duplicate department {name:?} on lines {first} and {}",
                lineno + 1
            )));
        }
        seen.insert(key, lineno + 1);
        departments.push(Department {
            id: departments.len(),
            name: name.to_string(),
        });
    }
    if departments.is_empty() {
        return Err(Error::Data("department lexicon is empty".into()));
    }
    Ok(departments)
}

pub fn load_departments(path: impl AsRef<Path>) -> Result<Vec<Department>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_departments(&text)
}

/// The shipped 79-department lexicon.
pub fn default_departments() -> Vec<Department> {
    parse_departments(crate::DEFAULT_DEPARTMENTS).expect("shipped lexicon is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleOrder {
    OriginFirst,
    DestinationFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTemplate {
    pattern: String,
    role_order: RoleOrder,
}

impl QueryTemplate {
    pub fn new(pattern: &str) -> Result<Self> {
        let origin = pattern.matches(ORIGIN_SLOT).count();
        let dest = pattern.matches(DEST_SLOT).count();
        if origin != 1 || dest != 1 {
            return Err(Error::Data(format!(
                "template {pattern:?} must contain {ORIGIN_SLOT} and {DEST_SLOT} exactly once \
                 (found {origin} and {dest})"
            )));
        }
        let role_order = if pattern.find(ORIGIN_SLOT) < pattern.find(DEST_SLOT) {
            RoleOrder::OriginFirst
        } else {
            RoleOrder::DestinationFirst
        };
        Ok(Self {
            pattern: pattern.to_string(),
            role_order,
        })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn role_order(&self) -> RoleOrder {
        self.role_order
    }

    pub fn fill(&self, origin: &str, dest: &str) -> String {
        self.pattern
            .replace(ORIGIN_SLOT, origin)
            .replace(DEST_SLOT, dest)
    }
}

pub fn parse_templates(text: &str) -> Result<Vec<QueryTemplate>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            QueryTemplate::new(l).map_err(|e| Error::Data(format!("template {}: {e}", i + 1)))
        })
        .collect()
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<QueryTemplate>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_templates(&text)
}

/// The shipped 46-template set.
pub fn default_templates() -> Vec<QueryTemplate> {
    parse_templates(crate::DEFAULT_TEMPLATES).expect("shipped templates are valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub text: String,
    pub origin_id: usize,
    pub destination_id: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub queries: Vec<LabeledQuery>,
    /// Texts produced by more than one (template, pair) combination. Only the
    /// first occurrence is kept.
    pub collisions: Vec<String>,
}

/// Expand every template over every ordered pair of distinct departments, drop
/// exact-text duplicates, then shuffle the emission order with `seed`.
pub fn generate_corpus(
    departments: &[Department],
    templates: &[QueryTemplate],
    seed: u64,
) -> Result<Corpus> {
    if departments.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two departments are required".into(),
        ));
    }
    if templates.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one template is required".into(),
        ));
    }
    let p = departments.len();
    let mut seen = HashSet::with_capacity(templates.len() * p * (p - 1));
    let mut corpus = Corpus::default();
    corpus.queries.reserve(templates.len() * p * (p - 1));
    for template in templates {
        for origin in departments {
            for dest in departments {
                if origin.id == dest.id {
                    continue;
                }
                let text = template.fill(&origin.name, &dest.name);
                if !seen.insert(text.clone()) {
                    corpus.collisions.push(text);
                    continue;
                }
                corpus.queries.push(LabeledQuery {
                    text,
                    origin_id: origin.id,
                    destination_id: dest.id,
                });
            }
        }
    }
    if !corpus.collisions.is_empty() {
        log::warn!("{} duplicate query texts dropped", corpus.collisions.len());
    }
    shuffle(&mut corpus.queries, &mut seeded(seed));
    Ok(corpus)
}

pub fn write_jsonl(path: impl AsRef<Path>, queries: &[LabeledQuery]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for q in queries {
        serde_json::to_writer(&mut out, q)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<LabeledQuery>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut queries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: LabeledQuery = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        queries.push(q);
    }
    Ok(queries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledQuery>,
    pub test: Vec<LabeledQuery>,
    pub seed: u64,
}

/// Shuffle a copy of `corpus` with `seed`, then cut it after
/// `round(train_fraction * len)` items.
pub fn split_holdout(
    corpus: &[LabeledQuery],
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    if corpus.len() < 2 {
        return Err(Error::InvalidArgument(
            "corpus needs at least two queries to split".into(),
        ));
    }
    let mut items = corpus.to_vec();
    shuffle(&mut items, &mut seeded(seed));
    let cut = (train_fraction * items.len() as f64).round() as usize;
    let test = items.split_off(cut);
    Ok(DatasetSplit {
        train: items,
        test,
        seed,
    })
}

/// Classic k-fold: one seeded shuffle, then fold `i` tests on the `i`-th
/// contiguous block. The first `len % k` blocks are one item longer.
pub fn kfold(corpus: &[LabeledQuery], k: usize, seed: u64) -> Result<Vec<DatasetSplit>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    if k > corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut items = corpus.to_vec();
    shuffle(&mut items, &mut seeded(seed));
    let base = items.len() / k;
    let extra = items.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let end = start + len;
        let test = items[start..end].to_vec();
        let mut train = Vec::with_capacity(items.len() - len);
        train.extend_from_slice(&items[..start]);
        train.extend_from_slice(&items[end..]);
        folds.push(DatasetSplit { train, test, seed });
        start = end;
    }
    Ok(folds)
}
