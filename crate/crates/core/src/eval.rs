//! Top-k retrieval accuracy harness.
//!
//! A query is a hit at `k` when any of its `k` nearest indexed images shares
//! its class label. Accuracy at `k` is the fraction of queries that hit.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::index::FeatureIndex;
use crate::ingest::{Manifest, DEFAULT_RATIO, DEFAULT_SEED};
use crate::similarity::rank;

pub const DEFAULT_K_VALUES: [usize; 5] = [1, 5, 10, 15, 20];

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub dataset_name: String,
    pub seed: u64,
    pub ratio: f64,
    pub k_values: Vec<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            dataset_name: String::new(),
            seed: DEFAULT_SEED,
            ratio: DEFAULT_RATIO,
            k_values: DEFAULT_K_VALUES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub class_label: String,
    /// 1-based rank of the first same-class result within `k_max`.
    pub hit_rank: Option<usize>,
    /// Set when the query image could not be described; counted as a miss.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl QueryOutcome {
    pub fn is_hit_at(&self, k: usize) -> bool {
        self.hit_rank.is_some_and(|r| r <= k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_name: String,
    pub seed: u64,
    pub ratio: f64,
    pub k_values: Vec<usize>,
    pub accuracies: BTreeMap<usize, f64>,
    pub per_query: Vec<QueryOutcome>,
    /// Query labels that never occur in the index.
    pub unknown_labels: Vec<String>,
    pub wall_time_secs: f64,
}

impl EvalReport {
    pub fn accuracy(&self, k: usize) -> Option<f64> {
        self.accuracies.get(&k).copied()
    }

    pub fn query_count(&self) -> usize {
        self.per_query.len()
    }

    /// `top-1 32.67 | top-5 59.31 | ...` in percent.
    pub fn accuracy_row(&self) -> String {
        self.accuracies
            .iter()
            .map(|(k, a)| format!("top-{k} {:.2}", a * 100.0))
            .collect::<Vec<_>>()
            .join(" | ")
    }

    /// Line-delimited JSON: a header object, one object per query, then one
    /// object per k.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        let mut line = |value: serde_json::Value| -> Result<()> {
            serde_json::to_writer(&mut out, &value).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
            Ok(())
        };
        line(serde_json::json!({
            "record": "header",
            "dataset": self.dataset_name,
            "seed": self.seed,
            "ratio": self.ratio,
            "k_values": self.k_values,
            "queries": self.per_query.len(),
            "unknown_labels": self.unknown_labels,
            "wall_time_secs": self.wall_time_secs,
        }))?;
        for q in &self.per_query {
            line(serde_json::json!({
                "record": "query",
                "query_id": q.query_id,
                "class_label": q.class_label,
                "hit_rank": q.hit_rank,
                "error": q.error,
            }))?;
        }
        for (k, accuracy) in &self.accuracies {
            line(serde_json::json!({ "record": "accuracy", "k": k, "accuracy": accuracy }))?;
        }
        Ok(())
    }
}

/// One labelled query ready for ranking.
pub struct LabeledQuery {
    pub query_id: String,
    pub class_label: String,
    pub feature: Result<FeatureVector>,
}

fn validate_k_values(k_values: &[usize]) -> Result<usize> {
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::InvalidArgument("k values must be non-empty and >= 1".into()));
    }
    Ok(*k_values.iter().max().unwrap())
}

/// Ranks every query against `index` and tabulates top-k accuracy.
pub fn evaluate_queries(index: &FeatureIndex, queries: Vec<LabeledQuery>, options: &EvalOptions) -> Result<EvalReport> {
    let start = Instant::now();
    let k_max = validate_k_values(&options.k_values)?;
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let known: HashSet<&str> = index.class_labels().into_iter().collect();

    let per_query = queries
        .into_par_iter()
        .map(|q| {
            let ranked = q.feature.and_then(|f| rank(&f, index, k_max));
            let (hit_rank, error) = match ranked {
                Ok(result) => (
                    result.hits.iter().position(|h| h.class_label == q.class_label).map(|p| p + 1),
                    None,
                ),
                Err(e @ Error::ConfigMismatch { .. }) => return Err(e),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(QueryOutcome {
                query_id: q.query_id,
                class_label: q.class_label,
                hit_rank,
                error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut unknown_labels: Vec<String> = per_query
        .iter()
        .filter(|q| !known.contains(q.class_label.as_str()))
        .map(|q| q.class_label.clone())
        .collect();
    unknown_labels.sort();
    unknown_labels.dedup();
    for label in &unknown_labels {
        log::warn!("query label {label:?} does not occur in the index");
    }

    let n = per_query.len() as f64;
    let mut k_values = options.k_values.clone();
    k_values.sort_unstable();
    k_values.dedup();
    let accuracies = k_values
        .iter()
        .map(|&k| (k, per_query.iter().filter(|q| q.is_hit_at(k)).count() as f64 / n))
        .collect();

    Ok(EvalReport {
        dataset_name: options.dataset_name.clone(),
        seed: options.seed,
        ratio: options.ratio,
        k_values,
        accuracies,
        per_query,
        unknown_labels,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Describes each query image with the index's own descriptor settings and
/// evaluates. Undecodable queries are counted as misses.
pub fn evaluate(index: &FeatureIndex, queries: &Manifest, options: &EvalOptions) -> Result<EvalReport> {
    let descriptor = index.descriptor();
    let inputs = queries
        .records
        .par_iter()
        .map(|r| LabeledQuery {
            query_id: r.image_id.clone(),
            class_label: r.class_label.clone(),
            feature: descriptor.describe_path(&r.path),
        })
        .collect();
    evaluate_queries(index, inputs, options)
}

/// Third-party accuracy figure, e.g. a baseline method from the literature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalResult {
    pub method: String,
    pub k: usize,
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
}

/// Parses `method,k,accuracy` lines. Blank lines, `#` comments and a
/// `method,k,accuracy` header are skipped.
pub fn read_external_results(input: impl BufRead) -> Result<Vec<ExternalResult>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case("method,k,accuracy") {
            continue;
        }
        let bad = |what: &str| Error::InvalidArgument(format!("external results line {}: {what}", n + 1));
        let mut fields = line.rsplitn(3, ',');
        let accuracy: f64 = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad accuracy"))?;
        let k: usize = fields
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad k"))?;
        let method = fields.next().map(str::trim).filter(|m| !m.is_empty()).ok_or_else(|| bad("missing method"))?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(bad("accuracy must be a fraction in [0, 1]"));
        }
        out.push(ExternalResult {
            method: method.to_string(),
            k,
            accuracy,
        });
    }
    Ok(out)
}

/// Plain-text table of this report's accuracies next to external results,
/// in percent. Missing cells print as `-`.
pub fn comparison_table(report: &EvalReport, method_name: &str, external: &[ExternalResult]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for r in external {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let width = methods.iter().map(|m| m.len()).chain([method_name.len(), 6]).max().unwrap();
    let mut out = format!("{:<width$}", "method");
    for k in &report.k_values {
        out.push_str(&format!(" {:>7}", format!("top-{k}")));
    }
    out.push('\n');
    let mut row = |name: &str, lookup: &dyn Fn(usize) -> Option<f64>| {
        out.push_str(&format!("{name:<width$}"));
        for &k in &report.k_values {
            match lookup(k) {
                Some(a) => out.push_str(&format!(" {:>7.2}", a * 100.0)),
                None => out.push_str(&format!(" {:>7}", "-")),
            }
        }
        out.push('\n');
    };
    for m in methods {
        row(m, &|k| external.iter().find(|r| r.method == m && r.k == k).map(|r| r.accuracy));
    }
    row(method_name, &|k| report.accuracy(k));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::BinConfig;
    use crate::index::IndexEntry;

    fn one_hot(config: BinConfig, bin: usize) -> FeatureVector {
        let mut v = vec![0.0; config.feature_len()];
        v[bin] = 1.0;
        FeatureVector::from_values(config, v).unwrap()
    }

    #[test]
    fn hit_rank_definition() {
        let q = QueryOutcome {
            query_id: "q".into(),
            class_label: "a".into(),
            hit_rank: Some(3),
            error: None,
        };
        assert!(!q.is_hit_at(1));
        for k in [5, 10, 15, 20] {
            assert!(q.is_hit_at(k));
        }
    }

    #[test]
    fn accuracies_and_unknown_labels() {
        let config = BinConfig::new(1, 1, 2).unwrap();
        let mut index = FeatureIndex::new(config);
        for (i, label) in ["a", "b", "c"].iter().enumerate() {
            index
                .push(IndexEntry {
                    image_id: label.to_string(),
                    class_label: label.to_string(),
                    source_path: String::new(),
                    feature: one_hot(config, i),
                })
                .unwrap();
        }
        let query = |id: &str, label: &str, bin: usize| LabeledQuery {
            query_id: id.into(),
            class_label: label.into(),
            feature: Ok(one_hot(config, bin)),
        };
        let queries = vec![
            query("q1", "a", 0),
            query("q2", "b", 0),
            query("q3", "zzz", 2),
            LabeledQuery {
                query_id: "broken".into(),
                class_label: "a".into(),
                feature: Err(Error::UnsupportedFormat),
            },
        ];
        let options = EvalOptions {
            k_values: vec![1, 2],
            ..Default::default()
        };
        let report = evaluate_queries(&index, queries, &options).unwrap();
        assert_eq!(report.accuracy(1), Some(0.25));
        // q2 hits at rank 2 or 3 depending on the id tie-break; b < c
        assert_eq!(report.per_query[1].hit_rank, Some(2));
        assert_eq!(report.accuracy(2), Some(0.5));
        assert_eq!(report.unknown_labels, vec!["zzz".to_string()]);
        assert!(report.per_query[3].error.is_some());
        assert!(report.accuracy_row().starts_with("top-1 25.00"));

        let mut buf = Vec::new();
        report.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 2);
    }

    #[test]
    fn empty_queries() {
        let index = FeatureIndex::new(BinConfig::default());
        assert!(matches!(
            evaluate_queries(&index, vec![], &EvalOptions::default()),
            Err(Error::EmptyQuerySet)
        ));
    }

    #[test]
    fn external_results_table() {
        let input = "method,k,accuracy\n# baselines\nDSSN,1,0.2674\nDSSN,5,0.5717\nVGG16, with tweaks,1,0.1522\n";
        let external = read_external_results(input.as_bytes()).unwrap();
        assert_eq!(external.len(), 3);
        assert_eq!(external[2].method, "VGG16, with tweaks");
        let report = EvalReport {
            dataset_name: "d".into(),
            seed: 42,
            ratio: 0.9,
            k_values: vec![1, 5],
            accuracies: [(1, 0.5), (5, 0.75)].into_iter().collect(),
            per_query: vec![],
            unknown_labels: vec![],
            wall_time_secs: 0.0,
        };
        let table = comparison_table(&report, "ours", &external);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].contains("26.74") && lines[1].contains("57.17"));
        assert!(lines[2].trim_end().ends_with('-'));
        assert!(lines[3].contains("50.00") && lines[3].contains("75.00"));
        assert!(read_external_results("x,1,42".as_bytes()).is_err());
    }
}
