//! Relation metrics (state snapshots) and bridging metrics (their deltas
//! over time), computed on relation models.

pub mod rwc;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ids::{GroupId, ItemId, PersonId};
use crate::relation::{aggregate, Clustering, EdgeSign, GraphModel};
use crate::signals::{diverse_approval, group_aware_consensus};
use crate::vote::{InteractionEvent, VoteMatrix, VoteValue};

pub use rwc::{random_walk_controversy, RwcEstimate, RwcOptions};

/// Snapshot of relation health at one tick.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationMetricReport {
    pub schema_version: u32,
    pub timestamp: u64,
    pub values: BTreeMap<String, f64>,
    /// Content hash of the models measured.
    pub inputs_digest: String,
}

impl RelationMetricReport {
    pub fn new(timestamp: u64, values: BTreeMap<String, f64>, inputs_digest: String) -> Result<Self> {
        for (name, value) in &values {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "values",
                    message: format!("metric {name} is not finite"),
                });
            }
        }
        Ok(RelationMetricReport {
            schema_version: 1,
            timestamp,
            values,
            inputs_digest,
        })
    }
}

/// Time deltas of relation metrics over a window, the bridging metrics.
/// Prevalence rates are copied from the later snapshot (keys with the
/// `prevalence_` prefix, stripped).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BridgingMetricReport {
    pub schema_version: u32,
    pub window: (u64, u64),
    pub deltas: BTreeMap<String, f64>,
    pub prevalence: BTreeMap<String, f64>,
}

impl BridgingMetricReport {
    pub fn empty(window: (u64, u64)) -> Self {
        BridgingMetricReport {
            schema_version: 1,
            window,
            deltas: BTreeMap::new(),
            prevalence: BTreeMap::new(),
        }
    }
}

/// Digest of the measured inputs: graph plus group labels.
pub fn inputs_digest(graph: &GraphModel, labels: &BTreeMap<PersonId, GroupId>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(graph).expect("graph serializes"));
    hasher.update(serde_json::to_vec(labels).expect("labels serialize"));
    hex::encode(hasher.finalize())
}

fn group_of(labels: &BTreeMap<PersonId, GroupId>, person: &PersonId) -> Result<GroupId> {
    labels
        .get(person)
        .copied()
        .ok_or_else(|| Error::UnlabeledPerson {
            person: person.clone(),
        })
}

/// Newman modularity over edge weights:
/// `Q = sum_g (e_g / M - (d_g / 2M)^2)`.
pub fn modularity(graph: &GraphModel, labels: &BTreeMap<PersonId, GroupId>) -> Result<f64> {
    if graph.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let total: f64 = graph.total_weight();
    let mut intra: BTreeMap<GroupId, f64> = BTreeMap::new();
    let mut degree: BTreeMap<GroupId, f64> = BTreeMap::new();
    for edge in &graph.edges {
        let ga = group_of(labels, &edge.a)?;
        let gb = group_of(labels, &edge.b)?;
        *degree.entry(ga).or_insert(0.0) += edge.weight;
        *degree.entry(gb).or_insert(0.0) += edge.weight;
        if ga == gb {
            *intra.entry(ga).or_insert(0.0) += edge.weight;
        }
    }
    let mut q = 0.0;
    for (group, &d) in &degree {
        let e = intra.get(group).copied().unwrap_or(0.0);
        q += e / total - (d / (2.0 * total)).powi(2);
    }
    Ok(q)
}

/// Krackhardt E-I index: `(external - internal) / (external + internal)`
/// over edge weights, in [-1, 1].
pub fn ei_index(graph: &GraphModel, labels: &BTreeMap<PersonId, GroupId>) -> Result<f64> {
    if graph.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut internal = 0.0;
    let mut external = 0.0;
    for edge in &graph.edges {
        if group_of(labels, &edge.a)? == group_of(labels, &edge.b)? {
            internal += edge.weight;
        } else {
            external += edge.weight;
        }
    }
    Ok((external - internal) / (external + internal))
}

/// Fraction of triangles with an even number of negative edges, enumerated
/// exactly. Requires a fully signed graph with at least one triangle.
pub fn balance_fraction(graph: &GraphModel) -> Result<f64> {
    if graph.edges.iter().any(|e| e.sign.is_none()) {
        return Err(Error::UnsignedEdges);
    }
    let n = graph.nodes.len();
    let mut negative = vec![vec![false; n]; n];
    let mut adjacent = vec![vec![false; n]; n];
    for edge in &graph.edges {
        let a = graph.node_index(&edge.a).expect("validated");
        let b = graph.node_index(&edge.b).expect("validated");
        adjacent[a][b] = true;
        adjacent[b][a] = true;
        let neg = edge.sign == Some(EdgeSign::Negative);
        negative[a][b] = neg;
        negative[b][a] = neg;
    }
    let mut triangles = 0u64;
    let mut balanced = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if !adjacent[i][j] {
                continue;
            }
            for k in (j + 1)..n {
                if adjacent[i][k] && adjacent[j][k] {
                    triangles += 1;
                    let negatives =
                        negative[i][j] as u8 + negative[i][k] as u8 + negative[j][k] as u8;
                    if negatives.is_multiple_of(2) {
                        balanced += 1;
                    }
                }
            }
        }
    }
    if triangles == 0 {
        return Err(Error::NoTriangles);
    }
    Ok(balanced as f64 / triangles as f64)
}

/// A positive interaction pattern whose prevalence can be measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "motif", rename_all = "snake_case")]
pub enum Motif {
    /// Agree votes on items whose diverse approval reaches the threshold.
    DiverseApproval { threshold: f64 },
    /// Agree votes on items whose group-aware consensus reaches the threshold.
    GroupAwareConsensus { threshold: f64 },
}

impl Motif {
    pub fn parse(name: &str, threshold: f64) -> Result<Motif> {
        match name {
            "diverse_approval" => Ok(Motif::DiverseApproval { threshold }),
            "gac" | "group_aware_consensus" => Ok(Motif::GroupAwareConsensus { threshold }),
            other => Err(Error::UnknownMotif {
                name: other.to_owned(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Motif::DiverseApproval { .. } => "diverse_approval",
            Motif::GroupAwareConsensus { .. } => "gac",
        }
    }
}

/// Prevalence of a motif in a window: qualifying participations per active
/// person. The window is inclusive on both ends; the denominator counts
/// people with any recorded interaction in the window.
pub fn signal_prevalence(
    history: &[InteractionEvent],
    clustering: &Clustering,
    motif: &Motif,
    window: (u64, u64),
) -> Result<f64> {
    let (t0, t1) = window;
    if t0 > t1 {
        return Err(Error::InvalidWindow {
            message: format!("window ({t0}, {t1}) is empty"),
        });
    }
    let events: Vec<&InteractionEvent> = history
        .iter()
        .filter(|e| e.tick >= t0 && e.tick <= t1)
        .collect();
    let active: BTreeSet<&PersonId> = events.iter().map(|e| &e.person).collect();
    if active.is_empty() {
        return Ok(0.0);
    }

    let mut matrix = VoteMatrix::new();
    for event in &events {
        matrix.add_vote(event.person.clone(), event.item.clone(), event.value)?;
    }

    let qualifying: BTreeSet<ItemId> = {
        let mut set = BTreeSet::new();
        match motif {
            Motif::DiverseApproval { threshold } => {
                for item in matrix.items() {
                    if diverse_approval(&matrix, clustering, item)? >= *threshold {
                        set.insert(item.clone());
                    }
                }
            }
            Motif::GroupAwareConsensus { threshold } => {
                let agg = aggregate(&matrix, clustering)?;
                for item in matrix.items() {
                    if group_aware_consensus(&agg, item)? >= *threshold {
                        set.insert(item.clone());
                    }
                }
            }
        }
        set
    };

    let instances = events
        .iter()
        .filter(|e| e.value == VoteValue::Agree && qualifying.contains(&e.item))
        .count();
    Ok(instances as f64 / active.len() as f64)
}

/// Element-wise metric deltas between two snapshots. Both reports must
/// measure the same metric set; prevalence entries of the later report are
/// copied through.
pub fn bridging_delta(
    r0: &RelationMetricReport,
    r1: &RelationMetricReport,
) -> Result<BridgingMetricReport> {
    if r0.timestamp > r1.timestamp {
        return Err(Error::InvalidWindow {
            message: format!(
                "baseline timestamp {} is after {}",
                r0.timestamp, r1.timestamp
            ),
        });
    }
    let keys0: BTreeSet<&String> = r0.values.keys().collect();
    let keys1: BTreeSet<&String> = r1.values.keys().collect();
    if keys0 != keys1 {
        let only0: Vec<&str> = keys0.difference(&keys1).map(|k| k.as_str()).collect();
        let only1: Vec<&str> = keys1.difference(&keys0).map(|k| k.as_str()).collect();
        return Err(Error::MismatchedMetrics {
            details: format!("only in baseline: {only0:?}; only in later: {only1:?}"),
        });
    }
    let deltas = r0
        .values
        .iter()
        .map(|(name, &v0)| (name.clone(), r1.values[name] - v0))
        .collect();
    let prevalence = r1
        .values
        .iter()
        .filter_map(|(name, &value)| {
            name.strip_prefix("prevalence_")
                .map(|motif| (motif.to_owned(), value))
        })
        .collect();
    Ok(BridgingMetricReport {
        schema_version: 1,
        window: (r0.timestamp, r1.timestamp),
        deltas,
        prevalence,
    })
}
