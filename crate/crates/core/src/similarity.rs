//! Chi-square distance and exhaustive top-k ranking.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::index::FeatureIndex;

/// Entries below this count are ranked on the calling thread.
const PARALLEL_SCAN_THRESHOLD: usize = 512;

/// `½ Σ (x − y)² / (x + y)`, skipping components where `x + y = 0`.
pub fn chi_square_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} components", x.len()),
            found: format!("{} components", y.len()),
        });
    }
    Ok(chi_square_unchecked(x, y))
}

fn chi_square_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let sum: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let denom = a + b;
            if denom == 0.0 {
                0.0
            } else {
                let d = a - b;
                d * d / denom
            }
        })
        .sum();
    0.5 * sum
}

pub fn chi_square(x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
    if x.config() != y.config() {
        return Err(Error::ConfigMismatch {
            index: x.config().to_string(),
            query: y.config().to_string(),
        });
    }
    chi_square_slices(x.values(), y.values())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub image_id: String,
    pub distance: f64,
    pub class_label: String,
}

/// Hits ascending by distance, ties broken by image id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub query_id: Option<String>,
    pub hits: Vec<Hit>,
}

impl RankedResult {
    pub fn with_query_id(mut self, id: impl Into<String>) -> Self {
        self.query_id = Some(id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Scores `query` against every entry and keeps the `k` nearest.
pub fn rank(query: &FeatureVector, index: &FeatureIndex, k: usize) -> Result<RankedResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    if query.config() != index.config() {
        return Err(Error::ConfigMismatch {
            index: index.config().to_string(),
            query: query.config().to_string(),
        });
    }
    if query.len() != index.config().feature_len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} components", index.config().feature_len()),
            found: format!("{} components", query.len()),
        });
    }

    let entries = index.entries();
    let score = |i: usize| (i, chi_square_unchecked(query.values(), entries[i].feature.values()));
    let mut scored: Vec<(usize, f64)> = if entries.len() >= PARALLEL_SCAN_THRESHOLD {
        (0..entries.len()).into_par_iter().map(score).collect()
    } else {
        (0..entries.len()).map(score).collect()
    };

    let order = |a: &(usize, f64), b: &(usize, f64)| -> Ordering {
        a.1.total_cmp(&b.1)
            .then_with(|| entries[a.0].image_id.cmp(&entries[b.0].image_id))
    };
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);

    let hits = scored
        .into_iter()
        .map(|(i, distance)| Hit {
            image_id: entries[i].image_id.clone(),
            distance,
            class_label: entries[i].class_label.clone(),
        })
        .collect();
    Ok(RankedResult { query_id: None, hits })
}
