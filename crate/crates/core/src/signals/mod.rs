//! Per-item bridging signals: the predicted impacts a value model aggregates.

pub mod credibility;
pub mod mf;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{GroupId, ItemId};
use crate::ranking::RankedFeed;
use crate::relation::{AggregateModel, Clustering};
use crate::vote::VoteMatrix;

pub use credibility::{credibility_scores, CredibilityScores};
pub use mf::{fit_matrix_factorization, mf_bridging_score, MfHyperParams, MfModel};

/// Sarle's bimodality coefficient threshold above which a distribution is
/// considered polarized (the uniform-distribution benchmark).
pub const BIMODALITY_THRESHOLD: f64 = 5.0 / 9.0;

/// The signal bundle for one item. `engagement` defaults to the overall
/// smoothed approval rate; ranking substitutes a viewer-specific prediction.
/// `bimodality` is absent for items whose rating distribution is degenerate,
/// and `exposure_diversity` only exists in a feed context.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignalVector {
    pub item: ItemId,
    pub engagement: f64,
    pub diverse_approval: f64,
    pub gac: f64,
    pub mf_intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bimodality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposure_diversity: Option<f64>,
}

impl SignalVector {
    /// Looks a signal up by its wire name, as used in value-model weights.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "engagement" => Some(self.engagement),
            "diverse_approval" => Some(self.diverse_approval),
            "gac" => Some(self.gac),
            "mf_intercept" => Some(self.mf_intercept),
            "bimodality" => self.bimodality,
            "exposure_diversity" => self.exposure_diversity,
            _ => None,
        }
    }
}

/// Laplace-smoothed approval rate for a group tally: `(agrees+1)/(seen+2)`.
pub fn smoothed_approval(agrees: u64, seen: u64) -> f64 {
    (agrees + 1) as f64 / (seen + 2) as f64
}

/// Minimum raw per-group approval rate. Groups that never saw the item
/// contribute 0, so an item invisible to any one group scores 0.
pub fn diverse_approval(matrix: &VoteMatrix, clustering: &Clustering, item: &ItemId) -> Result<f64> {
    if clustering.k < 2 {
        return Err(Error::SingleGroup);
    }
    if !matrix.contains_item(item) {
        return Err(Error::UnknownItem { item: item.clone() });
    }
    let item_idx = matrix.item_index(item).expect("checked above");
    let mut agrees = vec![0u64; clustering.k];
    let mut seen = vec![0u64; clustering.k];
    for (p, person) in matrix.people().enumerate() {
        if let Some(value) = matrix.row(p as u32).find(|&(i, _)| i == item_idx) {
            let g = clustering.group_of(person)?.index();
            seen[g] += 1;
            if value.1 == crate::vote::VoteValue::Agree {
                agrees[g] += 1;
            }
        }
    }
    Ok((0..clustering.k)
        .map(|g| {
            if seen[g] == 0 {
                0.0
            } else {
                agrees[g] as f64 / seen[g] as f64
            }
        })
        .fold(f64::INFINITY, f64::min))
}

/// Group-aware consensus: the product over groups of Laplace-smoothed
/// approval rates, `prod_g (agrees_g + 1) / (seen_g + 2)`. Strictly inside
/// (0, 1) by construction.
pub fn group_aware_consensus(aggregate: &AggregateModel, item: &ItemId) -> Result<f64> {
    if aggregate.n_groups < 2 {
        return Err(Error::SingleGroup);
    }
    let tally = aggregate.item(item)?;
    Ok(tally
        .per_group
        .values()
        .map(|c| smoothed_approval(c.agrees, c.seen))
        .product())
}

/// Overall Laplace-smoothed approval over everyone who saw the item.
pub fn engagement_prior(matrix: &VoteMatrix, item: &ItemId) -> Result<f64> {
    let (agrees, _, seen) = matrix.item_counts(item)?;
    Ok(smoothed_approval(agrees, seen))
}

/// Sarle's bimodality coefficient `(skewness^2 + 1) / kurtosis` with
/// population moments and non-excess kurtosis. Values above
/// [`BIMODALITY_THRESHOLD`] flag a polarized (U-shaped) distribution.
pub fn bimodality(ratings: &[f64]) -> Result<f64> {
    if ratings.len() < 4 {
        return Err(Error::InvalidParameter {
            name: "ratings",
            message: format!("need at least 4 ratings, got {}", ratings.len()),
        });
    }
    let n = ratings.len() as f64;
    let mean = ratings.iter().sum::<f64>() / n;
    let m2 = ratings.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    let m3 = ratings.iter().map(|r| (r - mean).powi(3)).sum::<f64>() / n;
    let m4 = ratings.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / n;
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    Ok((skewness * skewness + 1.0) / kurtosis)
}

/// Shannon entropy (bits) of the source-group distribution over feed slots.
pub fn exposure_diversity(
    feed: &RankedFeed,
    source_groups: &BTreeMap<ItemId, GroupId>,
) -> Result<f64> {
    let mut counts: BTreeMap<GroupId, u64> = BTreeMap::new();
    for allocation in &feed.allocations {
        let group = source_groups
            .get(&allocation.object)
            .ok_or_else(|| Error::UnknownItem {
                item: allocation.object.clone(),
            })?;
        *counts.entry(*group).or_insert(0) += 1;
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(counts
        .values()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum())
}

/// Computes the full signal vector for every registered item.
///
/// `engagement` is the viewer-agnostic smoothed overall approval;
/// `mf_intercept` comes from the supplied factorization model (0 for items
/// the model never saw, i.e. items without non-pass votes); `bimodality` is
/// computed over the item's recorded vote values and omitted when degenerate.
pub fn compute_signal_vectors(
    matrix: &VoteMatrix,
    clustering: &Clustering,
    aggregate: &AggregateModel,
    mf: &MfModel,
) -> Result<BTreeMap<ItemId, SignalVector>> {
    let mut out = BTreeMap::new();
    for item in matrix.items() {
        let ratings: Vec<f64> = matrix
            .people()
            .filter_map(|p| matrix.vote(p, item).map(|v| v.as_i8() as f64))
            .collect();
        let bimodality_value = match bimodality(&ratings) {
            Ok(v) => Some(v),
            Err(Error::DegenerateDistribution) | Err(Error::InvalidParameter { .. }) => None,
            Err(e) => return Err(e),
        };
        out.insert(
            item.clone(),
            SignalVector {
                item: item.clone(),
                engagement: engagement_prior(matrix, item)?,
                diverse_approval: diverse_approval(matrix, clustering, item)?,
                gac: group_aware_consensus(aggregate, item)?,
                mf_intercept: mf_bridging_score(mf, item).unwrap_or(0.0),
                bimodality: bimodality_value,
                exposure_diversity: None,
            },
        );
    }
    Ok(out)
}
