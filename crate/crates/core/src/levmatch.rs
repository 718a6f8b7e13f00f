//! Edit-distance directory matching and rule-based role assignment.
//!
//! Every query word is compared with every directory keyword, and
//! multi-word department names are matched against aligned token windows.
//! Roles come from the nearest preceding preposition: "from" marks the
//! origin, "to" (and its homophones "two" and "too") the destination.

use serde::Serialize;

use crate::corpus::Department;
use crate::encode::tokenize;

pub const DEFAULT_THRESHOLD: f64 = 0.34;

/// Levenshtein distance over Unicode scalar values, two-row DP.
pub fn levenshtein(s1: &str, s2: &str) -> usize {
    let a: Vec<char> = s1.chars().collect();
    let b: Vec<char> = s2.chars().collect();
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j]
            } else {
                1 + prev[j].min(prev[j + 1]).min(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Full `(|s1|+1) x (|s2|+1)` table of prefix distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditMatrix {
    pub rows: usize,
    pub cols: usize,
    cells: Vec<usize>,
}

impl EditMatrix {
    pub fn new(s1: &str, s2: &str) -> Self {
        let a: Vec<char> = s1.chars().collect();
        let b: Vec<char> = s2.chars().collect();
        let (rows, cols) = (a.len() + 1, b.len() + 1);
        let mut cells = vec![0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                cells[i * cols + j] = if i == 0 {
                    j
                } else if j == 0 {
                    i
                } else if a[i - 1] == b[j - 1] {
                    cells[(i - 1) * cols + j - 1]
                } else {
                    1 + cells[(i - 1) * cols + j]
                        .min(cells[i * cols + j - 1])
                        .min(cells[(i - 1) * cols + j - 1])
                };
            }
        }
        Self { rows, cols, cells }
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.cols + j]
    }

    pub fn distance(&self) -> usize {
        self.get(self.rows - 1, self.cols - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    /// Whole department name aligned with a window of query tokens.
    Name,
    /// Single query word closest to one word of the department name.
    Word,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordMatch {
    pub department_id: usize,
    pub start: usize,
    pub end: usize,
    pub distance: usize,
    pub normalized: f64,
    pub kind: MatchKind,
}

impl KeywordMatch {
    fn covers(&self, token: usize) -> bool {
        (self.start..self.end).contains(&token)
    }

    fn overlaps(&self, other: &KeywordMatch) -> bool {
        self.start < other.end && other.start < self.end
    }

    fn span_len(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RoleAssignment {
    pub origin: Option<usize>,
    pub destination: Option<usize>,
    pub ambiguous: Vec<KeywordMatch>,
}

/// Department names pre-split into lowercase keywords.
#[derive(Debug, Clone)]
pub struct Directory {
    keywords: Vec<Vec<String>>,
    names: Vec<String>,
}

impl Directory {
    pub fn new(departments: &[Department]) -> Self {
        let mut keywords = vec![Vec::new(); departments.len()];
        let mut names = vec![String::new(); departments.len()];
        for d in departments {
            keywords[d.id] = tokenize(&d.name).tokens;
            names[d.id] = d.name.clone();
        }
        Self { keywords, names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }
}

/// Name-window matches for every department plus, for every query word, all
/// departments tied at that word's minimal keyword distance.
pub fn match_directory(tokens: &[String], directory: &Directory, threshold: f64) -> Vec<KeywordMatch> {
    let mut matches = Vec::new();
    for (id, words) in directory.keywords.iter().enumerate() {
        let w = words.len();
        if w == 0 || w > tokens.len() {
            continue;
        }
        let name_len: usize = words.iter().map(|s| s.chars().count()).sum();
        for start in 0..=tokens.len() - w {
            let distance: usize = words
                .iter()
                .zip(&tokens[start..start + w])
                .map(|(k, t)| levenshtein(k, t))
                .sum();
            let normalized = distance as f64 / name_len as f64;
            if normalized <= threshold {
                matches.push(KeywordMatch {
                    department_id: id,
                    start,
                    end: start + w,
                    distance,
                    normalized,
                    kind: MatchKind::Name,
                });
            }
        }
    }

    for (pos, token) in tokens.iter().enumerate() {
        let mut best = f64::INFINITY;
        let mut tied: Vec<(usize, usize)> = Vec::new();
        for (id, words) in directory.keywords.iter().enumerate() {
            let Some((distance, normalized)) = words
                .iter()
                .map(|k| {
                    let d = levenshtein(k, token);
                    (d, d as f64 / k.chars().count() as f64)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                continue;
            };
            if normalized < best {
                best = normalized;
                tied.clear();
            }
            if normalized == best {
                tied.push((id, distance));
            }
        }
        if best <= threshold {
            matches.extend(tied.into_iter().map(|(id, distance)| KeywordMatch {
                department_id: id,
                start: pos,
                end: pos + 1,
                distance,
                normalized: best,
                kind: MatchKind::Word,
            }));
        }
    }
    matches
}

fn is_from(token: &str) -> bool {
    token == "from"
}

fn is_to(token: &str) -> bool {
    matches!(token, "to" | "two" | "too")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Origin,
    Destination,
}

/// Best non-overlapping name matches: lowest normalized distance first, then
/// longer spans, then earlier positions.
fn select_names(matches: &[KeywordMatch]) -> Vec<KeywordMatch> {
    let mut names: Vec<&KeywordMatch> = matches.iter().filter(|m| m.kind == MatchKind::Name).collect();
    names.sort_by(|a, b| {
        a.normalized
            .total_cmp(&b.normalized)
            .then(b.span_len().cmp(&a.span_len()))
            .then(a.start.cmp(&b.start))
            .then(a.department_id.cmp(&b.department_id))
    });
    let mut chosen: Vec<KeywordMatch> = Vec::new();
    for m in names {
        if chosen.iter().all(|c| !c.overlaps(m)) {
            chosen.push(m.clone());
        }
    }
    chosen.sort_by_key(|m| m.start);
    chosen
}

/// Split matches into resolved candidates and word-level leftovers.
fn candidates(matches: &[KeywordMatch], n_tokens: usize) -> (Vec<KeywordMatch>, Vec<KeywordMatch>) {
    let mut chosen = select_names(matches);
    let mut extra = Vec::new();
    for pos in 0..n_tokens {
        let words: Vec<&KeywordMatch> = matches
            .iter()
            .filter(|m| m.kind == MatchKind::Word && m.start == pos)
            .collect();
        if words.is_empty() {
            continue;
        }
        match chosen.iter().find(|c| c.covers(pos)) {
            Some(cover) => {
                let id = cover.department_id;
                extra.extend(words.into_iter().filter(|m| m.department_id != id).cloned());
            }
            None if words.len() == 1 && chosen.iter().all(|c| c.department_id != words[0].department_id) => {
                chosen.push(words[0].clone());
            }
            None => extra.extend(words.into_iter().cloned()),
        }
    }
    chosen.sort_by_key(|m| m.start);
    (chosen, extra)
}

/// Bind candidates to roles by the nearest preceding preposition.
pub fn assign_roles(matches: &[KeywordMatch], tokens: &[String]) -> RoleAssignment {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let (chosen, mut ambiguous) = candidates(matches, lower.len());

    let mut bound: Vec<Option<Role>> = Vec::with_capacity(chosen.len());
    for (i, m) in chosen.iter().enumerate() {
        let floor = if i == 0 { 0 } else { chosen[i - 1].end };
        let role = (floor..m.start).rev().find_map(|p| {
            if is_from(&lower[p]) {
                Some(Role::Origin)
            } else if is_to(&lower[p]) {
                Some(Role::Destination)
            } else {
                None
            }
        });
        bound.push(role);
    }

    let mut out = RoleAssignment::default();
    let mut unbound = Vec::new();
    for (m, role) in chosen.iter().zip(&bound) {
        let slot = match role {
            Some(Role::Origin) => &mut out.origin,
            Some(Role::Destination) => &mut out.destination,
            None => {
                unbound.push(m);
                continue;
            }
        };
        if slot.is_none() {
            *slot = Some(m.department_id);
        } else {
            ambiguous.push(m.clone());
        }
    }

    let mut rest = unbound.into_iter();
    if out.origin.is_none() {
        out.origin = rest.next().map(|m| m.department_id);
    }
    if out.destination.is_none() {
        out.destination = rest.next().map(|m| m.department_id);
    }
    ambiguous.extend(rest.cloned());

    if out.origin.is_some() && out.origin == out.destination {
        out.destination = None;
    }
    ambiguous.sort_by_key(|m| (m.start, m.department_id));
    out.ambiguous = ambiguous;
    out
}

/// Per-token department predictions in the layout of a word-by-word
/// comparison table; empty when a token matched nothing.
pub fn token_predictions(matches: &[KeywordMatch], n_tokens: usize) -> Vec<Vec<usize>> {
    let chosen = select_names(matches);
    (0..n_tokens)
        .map(|pos| {
            let cover = chosen.iter().find(|c| c.covers(pos));
            let mut ids: Vec<usize> = match cover {
                Some(c) if c.start == pos => vec![c.department_id],
                _ => Vec::new(),
            };
            for m in matches.iter().filter(|m| m.kind == MatchKind::Word && m.start == pos) {
                if cover.is_some_and(|c| c.department_id == m.department_id) {
                    continue;
                }
                if !ids.contains(&m.department_id) {
                    ids.push(m.department_id);
                }
            }
            ids
        })
        .collect()
}

/// Directory matcher bundled with its threshold, usable as a predictor.
#[derive(Debug, Clone)]
pub struct LevMatcher {
    pub directory: Directory,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevReport {
    pub tokens: Vec<String>,
    pub matches: Vec<KeywordMatch>,
    pub roles: RoleAssignment,
}

impl LevMatcher {
    pub fn new(departments: &[Department], threshold: f64) -> Self {
        Self {
            directory: Directory::new(departments),
            threshold,
        }
    }

    pub fn analyze(&self, query: &str) -> LevReport {
        let tokens = tokenize(query).tokens;
        let matches = match_directory(&tokens, &self.directory, self.threshold);
        let roles = assign_roles(&matches, &tokens);
        LevReport {
            tokens,
            matches,
            roles,
        }
    }
}
