//! The allocation process: score candidate allocations with a value model,
//! select the top-k, and realize them as an ordered feed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Backend};
use crate::ids::{ItemId, PersonId};
use crate::relation::Clustering;
use crate::signals::{smoothed_approval, SignalVector};
use crate::vote::{VoteMatrix, VoteValue};

/// A weighting over signals plus the number of feed slots to fill.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValueModel {
    pub weights: BTreeMap<String, f64>,
    pub top_k: usize,
}

impl ValueModel {
    pub fn new(weights: impl IntoIterator<Item = (&'static str, f64)>, top_k: usize) -> Self {
        ValueModel {
            weights: weights
                .into_iter()
                .map(|(name, w)| (name.to_owned(), w))
                .collect(),
            top_k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_k < 1 {
            return Err(Error::InvalidParameter {
                name: "top_k",
                message: "must be at least 1".into(),
            });
        }
        if !self.weights.values().any(|&w| w != 0.0) {
            return Err(Error::InvalidParameter {
                name: "weights",
                message: "at least one weight must be nonzero".into(),
            });
        }
        if self.weights.values().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "weights",
                message: "weights must be finite".into(),
            });
        }
        Ok(())
    }

    /// Content hash of the canonical JSON encoding, recorded on every feed.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("value model serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Audit data attached to a realized allocation: the component signals that
/// produced the score, free-form context, and the engagement that resulted.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AllocationProperties {
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub context: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized: Option<i8>,
}

/// One slot filled with one object.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicAllocation {
    /// 1-based position in the feed.
    pub slot: usize,
    pub object: ItemId,
    pub score: f64,
    pub properties: AllocationProperties,
}

/// An ordered set of realized allocations for one viewer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankedFeed {
    pub schema_version: u32,
    pub viewer: PersonId,
    pub allocations: Vec<AtomicAllocation>,
    pub value_model_digest: String,
}

/// Predicted engagement: the Laplace-smoothed approval rate of the viewer's
/// own group on the item, `(agrees_g + 1) / (seen_g + 2)`.
pub fn predict_engagement(
    viewer: &PersonId,
    item: &ItemId,
    matrix: &VoteMatrix,
    clustering: &Clustering,
) -> Result<f64> {
    let group = clustering
        .labels
        .get(viewer)
        .copied()
        .ok_or_else(|| Error::UnknownViewer {
            viewer: viewer.clone(),
        })?;
    if !matrix.contains_item(item) {
        return Err(Error::UnknownItem { item: item.clone() });
    }
    let item_idx = matrix.item_index(item).expect("checked above");
    let mut agrees = 0;
    let mut seen = 0;
    for (p, person) in matrix.people().enumerate() {
        if clustering.labels.get(person) != Some(&group) {
            continue;
        }
        if let Some((_, value)) = matrix.row(p as u32).find(|&(i, _)| i == item_idx) {
            seen += 1;
            if value == VoteValue::Agree {
                agrees += 1;
            }
        }
    }
    Ok(smoothed_approval(agrees, seen))
}

/// Evaluates the value model for one candidate: the weighted sum of its
/// signals. Every signal with a nonzero weight must be present.
pub fn score_allocation(signals: &SignalVector, value_model: &ValueModel) -> Result<f64> {
    let mut total = 0.0;
    for (name, &weight) in &value_model.weights {
        if weight == 0.0 {
            continue;
        }
        let value = signals
            .get(name)
            .ok_or_else(|| Error::MissingSignal { name: name.clone() })?;
        total += weight * value;
    }
    Ok(total)
}

/// Ranks candidates for a viewer given already-personalized signal vectors.
///
/// Scores sort descending; ties break on item id ascending, so identical
/// inputs always serialize identically. Fewer candidates than `top_k`
/// returns them all.
pub fn rank(
    viewer: &PersonId,
    candidates: &[ItemId],
    signals: &BTreeMap<ItemId, SignalVector>,
    value_model: &ValueModel,
) -> Result<RankedFeed> {
    value_model.validate()?;
    let unique: BTreeSet<&ItemId> = candidates.iter().collect();
    let mut scored = Vec::with_capacity(unique.len());
    for item in unique {
        let vector = signals.get(item).ok_or_else(|| Error::UnknownItem {
            item: item.clone(),
        })?;
        let score = score_allocation(vector, value_model)?;
        scored.push((item, score, vector));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let allocations = scored
        .into_iter()
        .take(value_model.top_k)
        .enumerate()
        .map(|(i, (item, score, vector))| {
            let mut component_scores = BTreeMap::new();
            for (name, &weight) in &value_model.weights {
                if weight != 0.0 {
                    if let Some(value) = vector.get(name) {
                        component_scores.insert(name.clone(), value);
                    }
                }
            }
            AtomicAllocation {
                slot: i + 1,
                object: item.clone(),
                score,
                properties: AllocationProperties {
                    scores: component_scores,
                    context: BTreeMap::new(),
                    realized: None,
                },
            }
        })
        .collect();

    Ok(RankedFeed {
        schema_version: 1,
        viewer: viewer.clone(),
        allocations,
        value_model_digest: value_model.digest(),
    })
}

/// Ranks candidates for a viewer directly from vote data: item-global
/// signals come from `signals`, and the engagement entry is replaced with
/// the viewer-specific prediction (same formula as [`predict_engagement`],
/// computed from per-group tallies).
pub fn rank_from_votes(
    viewer: &PersonId,
    candidates: &[ItemId],
    matrix: &VoteMatrix,
    clustering: &Clustering,
    signals: &BTreeMap<ItemId, SignalVector>,
    value_model: &ValueModel,
) -> Result<RankedFeed> {
    let tallies = crate::relation::aggregate(matrix, clustering)?;
    rank_with_tallies(viewer, candidates, &tallies, clustering, signals, value_model)
}

fn rank_with_tallies(
    viewer: &PersonId,
    candidates: &[ItemId],
    tallies: &crate::relation::AggregateModel,
    clustering: &Clustering,
    signals: &BTreeMap<ItemId, SignalVector>,
    value_model: &ValueModel,
) -> Result<RankedFeed> {
    let group = clustering
        .labels
        .get(viewer)
        .copied()
        .ok_or_else(|| Error::UnknownViewer {
            viewer: viewer.clone(),
        })?;
    let mut personalized = BTreeMap::new();
    for item in candidates {
        let mut vector = signals
            .get(item)
            .ok_or_else(|| Error::UnknownItem { item: item.clone() })?
            .clone();
        let counts = tallies.item(item)?.per_group[&group];
        vector.engagement = smoothed_approval(counts.agrees, counts.seen);
        personalized.insert(item.clone(), vector);
    }
    rank(viewer, candidates, &personalized, value_model)
}

/// Ranks a batch of viewers over a shared candidate set. Tallies are built
/// once; candidate scoring is independent per viewer, so the batch fans out
/// on the chosen backend. Output order matches `viewers`.
pub fn rank_all(
    viewers: &[PersonId],
    candidates: &[ItemId],
    matrix: &VoteMatrix,
    clustering: &Clustering,
    signals: &BTreeMap<ItemId, SignalVector>,
    value_model: &ValueModel,
    backend: Backend,
) -> Result<Vec<RankedFeed>> {
    let tallies = crate::relation::aggregate(matrix, clustering)?;
    let feeds = map_indexed(backend, viewers.len(), |i| {
        rank_with_tallies(
            &viewers[i],
            candidates,
            &tallies,
            clustering,
            signals,
            value_model,
        )
    });
    feeds.into_iter().collect()
}
