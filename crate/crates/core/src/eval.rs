//! Accuracy reports, comparison tables and per-query prediction dumps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cnn::CnnModel;
use crate::corpus::LabeledQuery;
use crate::levmatch::{match_directory, token_predictions, LevMatcher};
use crate::linear::LinearModel;
use crate::encode::tokenize;
use crate::{Error, Result};

/// Anything that maps a query to an (origin, destination) guess. A missing
/// role counts as wrong on that head.
pub trait Predictor {
    fn name(&self) -> String;
    fn predict_ids(&self, text: &str) -> Result<(Option<usize>, Option<usize>)>;
}

impl Predictor for CnnModel {
    fn name(&self) -> String {
        "CNN".into()
    }

    fn predict_ids(&self, text: &str) -> Result<(Option<usize>, Option<usize>)> {
        let p = self.predict(text)?;
        Ok((Some(p.origin.id), Some(p.destination.id)))
    }
}

impl Predictor for LinearModel {
    fn name(&self) -> String {
        format!("Linear - {}-gram", self.config.n_max)
    }

    fn predict_ids(&self, text: &str) -> Result<(Option<usize>, Option<usize>)> {
        let p = self.predict(text);
        Ok((Some(p.origin.id), Some(p.destination.id)))
    }
}

impl Predictor for LevMatcher {
    fn name(&self) -> String {
        "LD".into()
    }

    fn predict_ids(&self, text: &str) -> Result<(Option<usize>, Option<usize>)> {
        let roles = self.analyze(text).roles;
        Ok((roles.origin, roles.destination))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub predictor: String,
    pub protocol: String,
    pub n_test: usize,
    pub origin_correct: usize,
    pub destination_correct: usize,
    pub pair_correct: usize,
    pub failures: usize,
    pub origin_acc: f64,
    pub destination_acc: f64,
    /// Mean of the two head accuracies.
    pub total_acc: f64,
    /// Both heads right on the same query. Not part of the head-mean total.
    pub pair_acc: f64,
}

impl AccuracyReport {
    fn from_counts(predictor: String, protocol: String, n: usize, o: usize, d: usize, pair: usize, failures: usize) -> Self {
        let origin_acc = o as f64 / n as f64;
        let destination_acc = d as f64 / n as f64;
        Self {
            predictor,
            protocol,
            n_test: n,
            origin_correct: o,
            destination_correct: d,
            pair_correct: pair,
            failures,
            origin_acc,
            destination_acc,
            total_acc: (origin_acc + destination_acc) / 2.0,
            pair_acc: pair as f64 / n as f64,
        }
    }

    /// Mean over repeated runs (e.g. several holdout seeds).
    pub fn mean(reports: &[AccuracyReport]) -> Option<AccuracyReport> {
        let first = reports.first()?;
        let k = reports.len() as f64;
        let avg = |f: fn(&AccuracyReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
        let origin_acc = avg(|r| r.origin_acc);
        let destination_acc = avg(|r| r.destination_acc);
        Some(AccuracyReport {
            predictor: first.predictor.clone(),
            protocol: format!("mean of {} runs", reports.len()),
            n_test: reports.iter().map(|r| r.n_test).sum(),
            origin_correct: reports.iter().map(|r| r.origin_correct).sum(),
            destination_correct: reports.iter().map(|r| r.destination_correct).sum(),
            pair_correct: reports.iter().map(|r| r.pair_correct).sum(),
            failures: reports.iter().map(|r| r.failures).sum(),
            origin_acc,
            destination_acc,
            total_acc: (origin_acc + destination_acc) / 2.0,
            pair_acc: avg(|r| r.pair_acc),
        })
    }
}

pub fn evaluate<P: Predictor + ?Sized>(predictor: &P, test: &[LabeledQuery], protocol: &str) -> Result<AccuracyReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("test split is empty".into()));
    }
    let (mut o, mut d, mut pair, mut failures) = (0, 0, 0, 0);
    for q in test {
        match predictor.predict_ids(&q.text) {
            Ok((po, pd)) => {
                let ok_o = po == Some(q.origin_id);
                let ok_d = pd == Some(q.destination_id);
                o += usize::from(ok_o);
                d += usize::from(ok_d);
                pair += usize::from(ok_o && ok_d);
            }
            Err(e) => {
                log::warn!("{} failed on {:?}: {e}", predictor.name(), q.text);
                failures += 1;
            }
        }
    }
    Ok(AccuracyReport::from_counts(predictor.name(), protocol.to_string(), test.len(), o, d, pair, failures))
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Plain-text comparison table, one row per report in input order.
pub fn render_table(reports: &[AccuracyReport]) -> String {
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| [r.predictor.clone(), pct(r.origin_acc), pct(r.destination_acc), pct(r.total_acc), pct(r.pair_acc)])
        .collect();
    let header = ["Model", "Origin", "Destination", "Total", "Pair*"].map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", cells.join(" | ").trim_end()).unwrap();
    }
    out.push_str("* pair: both heads correct on the same query\n");
    out
}

pub fn reports_json(reports: &[AccuracyReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRow {
    pub token: String,
    /// Directory terms the edit-distance matcher assigns to this token, joined
    /// by " - ", or "-" when none.
    pub ld: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnPair {
    pub origin: String,
    pub destination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionDump {
    pub query: String,
    pub tokens: Vec<TokenRow>,
    pub ld_origin: Option<String>,
    pub ld_destination: Option<String>,
    pub cnn: Option<CnnPair>,
}

/// Word-by-word edit-distance predictions next to the CNN's pair, per query.
pub fn dump_predictions(lev: &LevMatcher, cnn: Option<&CnnModel>, queries: &[String]) -> Vec<PredictionDump> {
    queries
        .iter()
        .map(|q| {
            let tokens = tokenize(q).tokens;
            let matches = match_directory(&tokens, &lev.directory, lev.threshold);
            let per_token = token_predictions(&matches, tokens.len());
            let roles = crate::levmatch::assign_roles(&matches, &tokens);
            let name = |id: usize| lev.directory.name(id).to_string();
            let rows = tokens
                .iter()
                .zip(per_token)
                .map(|(t, ids)| TokenRow {
                    token: t.clone(),
                    ld: if ids.is_empty() {
                        "-".into()
                    } else {
                        ids.into_iter().map(name).collect::<Vec<_>>().join(" - ")
                    },
                })
                .collect();
            let cnn = cnn.and_then(|m| m.predict(q).ok()).map(|p| CnnPair {
                origin: p.origin.name,
                destination: p.destination.name,
            });
            PredictionDump {
                query: q.clone(),
                tokens: rows,
                ld_origin: roles.origin.map(name),
                ld_destination: roles.destination.map(name),
                cnn,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, parse_departments, parse_templates, kfold};

    struct Oracle(Vec<LabeledQuery>);

    impl Predictor for Oracle {
        fn name(&self) -> String {
            "oracle".into()
        }
        fn predict_ids(&self, text: &str) -> Result<(Option<usize>, Option<usize>)> {
            let q = self.0.iter().find(|q| q.text == text).unwrap();
            Ok((Some(q.origin_id), Some(q.destination_id)))
        }
    }

    struct Constant;

    impl Predictor for Constant {
        fn name(&self) -> String {
            "constant".into()
        }
        fn predict_ids(&self, text: &str) -> Result<(Option<usize>, Option<usize>)> {
            if text.is_empty() {
                return Err(Error::EmptyQuery);
            }
            Ok((Some(0), Some(0)))
        }
    }

    fn corpus(p: usize) -> Vec<LabeledQuery> {
        let names: Vec<String> = (0..p).map(|i| format!("Dept{i}")).collect();
        let d = parse_departments(&names.join("\n")).unwrap();
        let t = parse_templates("from {origin} to {dest}\nto {dest} from {origin}").unwrap();
        generate_corpus(&d, &t, 0).unwrap().queries
    }

    #[test]
    fn oracle_and_constant() {
        let c = corpus(5);
        let r = evaluate(&Oracle(c.clone()), &c, "all").unwrap();
        assert_eq!((r.origin_acc, r.destination_acc, r.total_acc, r.pair_acc), (1.0, 1.0, 1.0, 1.0));
        let r = evaluate(&Constant, &c, "all").unwrap();
        // each department is the origin of (P-1)/(P(P-1)) = 1/P of the queries
        assert_eq!(r.origin_correct * 5, c.len());
        assert_eq!(r.destination_correct * 5, c.len());
        assert_eq!(r.pair_correct, 0);
        assert_eq!(r.total_acc, (r.origin_acc + r.destination_acc) / 2.0);
        assert!(evaluate(&Constant, &[], "x").is_err());
    }

    #[test]
    fn failures_count_as_wrong() {
        let mut c = corpus(3);
        c.push(LabeledQuery { text: String::new(), origin_id: 0, destination_id: 1 });
        let r = evaluate(&Constant, &c, "x").unwrap();
        assert_eq!(r.failures, 1);
        assert_eq!(r.n_test, c.len());
    }

    #[test]
    fn fold_counts_add_up() {
        let c = corpus(6);
        let whole = evaluate(&Constant, &c, "all").unwrap();
        let folds = kfold(&c, 10, 3).unwrap();
        let summed: usize = folds.iter().map(|f| evaluate(&Constant, &f.test, "fold").unwrap().origin_correct).sum();
        assert_eq!(summed, whole.origin_correct);
    }

    #[test]
    fn table_rows() {
        let r = AccuracyReport::from_counts("LD".into(), "t".into(), 4, 2, 1, 1, 0);
        let table = render_table(std::slice::from_ref(&r));
        let row = table.lines().nth(1).unwrap();
        assert!(row.contains("50.00% | 25.00%      | 37.50%"), "{table}");
        let mut other = r.clone();
        other.predictor = "CNN".into();
        let table = render_table(&[other.clone(), r.clone()]);
        assert!(table.lines().nth(1).unwrap().starts_with("CNN"));
        assert!(table.lines().nth(2).unwrap().starts_with("LD"));
        let json = reports_json(&[r.clone(), other.clone()]).unwrap();
        let back: Vec<AccuracyReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![r, other]);
    }

    #[test]
    fn mean_report() {
        let a = AccuracyReport::from_counts("x".into(), "a".into(), 10, 10, 5, 5, 0);
        let b = AccuracyReport::from_counts("x".into(), "b".into(), 10, 0, 5, 0, 0);
        let m = AccuracyReport::mean(&[a, b]).unwrap();
        assert_eq!((m.origin_acc, m.destination_acc, m.total_acc), (0.5, 0.5, 0.5));
        assert!(AccuracyReport::mean(&[]).is_none());
    }

    #[test]
    fn dump_rows() {
        let d = parse_departments("Admitting\nFracture Clinic\nMRI Clinic\nEye Clinic\nSpine Clinic").unwrap();
        let lev = LevMatcher::new(&d, crate::levmatch::DEFAULT_THRESHOLD);
        let dump = dump_predictions(&lev, None, &["I want to go to Admitting from Fracture Clinic".into()]);
        let rows: Vec<(&str, &str)> = dump[0].tokens.iter().map(|r| (r.token.as_str(), r.ld.as_str())).collect();
        assert_eq!(rows[0], ("i", "-"));
        assert_eq!(rows[5], ("admitting", "Admitting"));
        assert_eq!(rows[7], ("fracture", "Fracture Clinic"));
        assert_eq!(rows[8], ("clinic", "MRI Clinic - Eye Clinic - Spine Clinic"));
        assert_eq!(dump[0].ld_origin.as_deref(), Some("Fracture Clinic"));
        assert!(dump_predictions(&lev, None, &[]).is_empty());
    }
}
