//! Aggregate relation model: per-item, per-group approval tallies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{GroupId, ItemId};
use crate::relation::kmeans::Clustering;
use crate::vote::{VoteMatrix, VoteValue};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub agrees: u64,
    pub disagrees: u64,
    /// Any recorded vote, passes included.
    pub seen: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemAggregate {
    /// Raw agreement rate over everyone who saw the item; 0 when unseen.
    pub overall_approval: f64,
    pub per_group: BTreeMap<GroupId, GroupCounts>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateModel {
    pub schema_version: u32,
    pub n_groups: usize,
    pub per_item: BTreeMap<ItemId, ItemAggregate>,
}

impl AggregateModel {
    pub fn item(&self, item: &ItemId) -> Result<&ItemAggregate> {
        self.per_item.get(item).ok_or_else(|| Error::UnknownItem {
            item: item.clone(),
        })
    }
}

/// Tallies votes per item and group. Every registered item gets an entry
/// (all-zero counts when nobody saw it), and every clustering group appears
/// in each item's tally so downstream group products are well defined.
pub fn aggregate(matrix: &VoteMatrix, clustering: &Clustering) -> Result<AggregateModel> {
    let mut per_item: BTreeMap<ItemId, ItemAggregate> = matrix
        .items()
        .map(|item| {
            (
                item.clone(),
                ItemAggregate {
                    overall_approval: 0.0,
                    per_group: (0..clustering.k)
                        .map(|g| (GroupId(g as u32), GroupCounts::default()))
                        .collect(),
                },
            )
        })
        .collect();

    for (person, item, value) in matrix.records() {
        let group = clustering.group_of(person)?;
        let entry = per_item
            .get_mut(item)
            .expect("items pre-registered")
            .per_group
            .get_mut(&group)
            .expect("groups pre-registered");
        entry.seen += 1;
        match value {
            VoteValue::Agree => entry.agrees += 1,
            VoteValue::Disagree => entry.disagrees += 1,
            VoteValue::Pass => {}
        }
    }

    for item in per_item.values_mut() {
        let agrees: u64 = item.per_group.values().map(|c| c.agrees).sum();
        let seen: u64 = item.per_group.values().map(|c| c.seen).sum();
        item.overall_approval = if seen == 0 {
            0.0
        } else {
            agrees as f64 / seen as f64
        };
    }

    Ok(AggregateModel {
        schema_version: 1,
        n_groups: clustering.k,
        per_item,
    })
}
