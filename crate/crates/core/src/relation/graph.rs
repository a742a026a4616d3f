//! Graph-based relation model: a weighted (optionally signed) person graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::PersonId;
use crate::vote::{VoteMatrix, VoteValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSign {
    Positive,
    Negative,
}

/// An undirected edge. Endpoints are normalized so `a < b`; `weight` is a
/// non-negative magnitude, with the optional sign carried separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: PersonId,
    pub b: PersonId,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<EdgeSign>,
}

impl GraphEdge {
    /// Weight with the sign applied (negative for minus edges).
    pub fn signed_weight(&self) -> f64 {
        match self.sign {
            Some(EdgeSign::Negative) => -self.weight,
            _ => self.weight,
        }
    }
}

/// Weighted person graph. Nodes are kept sorted by id.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphModel {
    pub schema_version: u32,
    pub nodes: Vec<PersonId>,
    pub edges: Vec<GraphEdge>,
}

impl GraphModel {
    /// Validates and normalizes: sorts nodes, orders edge endpoints,
    /// rejects self-loops, duplicate pairs, and negative weights.
    pub fn new(nodes: Vec<PersonId>, edges: Vec<GraphEdge>) -> Result<Self> {
        let mut nodes: Vec<PersonId> = nodes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        nodes.sort();
        let node_set: BTreeSet<&PersonId> = nodes.iter().collect();
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for mut edge in edges {
            if edge.a == edge.b {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    message: format!("self-loop on {}", edge.a),
                });
            }
            if edge.weight < 0.0 || !edge.weight.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    message: format!(
                        "edge ({}, {}) has invalid weight {}; use the sign field for negative relations",
                        edge.a, edge.b, edge.weight
                    ),
                });
            }
            if !node_set.contains(&edge.a) || !node_set.contains(&edge.b) {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    message: format!("edge ({}, {}) references an unknown node", edge.a, edge.b),
                });
            }
            if edge.b < edge.a {
                std::mem::swap(&mut edge.a, &mut edge.b);
            }
            if !seen.insert((edge.a.clone(), edge.b.clone())) {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    message: format!("duplicate edge ({}, {})", edge.a, edge.b),
                });
            }
            normalized.push(edge);
        }
        normalized.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        Ok(GraphModel {
            schema_version: 1,
            nodes,
            edges: normalized,
        })
    }

    pub fn node_index(&self, person: &PersonId) -> Option<usize> {
        self.nodes.binary_search(person).ok()
    }

    /// Adjacency lists as `(neighbor index, weight magnitude)`, ordered by
    /// neighbor index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for edge in &self.edges {
            let a = self.node_index(&edge.a).expect("validated");
            let b = self.node_index(&edge.b).expect("validated");
            adj[a].push((b, edge.weight));
            adj[b].push((a, edge.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|x| x.0);
        }
        adj
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Builds a co-vote agreement graph from a vote matrix.
///
/// For a pair of people, the edge weight is
/// `(matching - mismatching) / co-voted`, computed over items both voted on
/// with a non-pass value. The edge is kept iff the weight is at least `tau`.
/// Negative weights are stored as magnitude plus a negative sign; positive
/// weights carry a positive sign, so thresholds `tau < 0` yield a signed
/// graph. People with no co-votes remain as isolated nodes.
pub fn vote_similarity_graph(matrix: &VoteMatrix, tau: f64) -> Result<GraphModel> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter {
            name: "tau",
            message: format!("threshold {tau} outside [-1, 1]"),
        });
    }
    let people = matrix.sorted_person_indices();
    let rows: Vec<BTreeMap<u32, VoteValue>> = people
        .iter()
        .map(|&p| {
            matrix
                .row(p)
                .filter(|(_, v)| !v.is_pass())
                .collect::<BTreeMap<u32, VoteValue>>()
        })
        .collect();

    let nodes: Vec<PersonId> = people.iter().map(|&p| matrix.person_at(p).clone()).collect();
    let mut edges = Vec::new();
    for i in 0..people.len() {
        for j in (i + 1)..people.len() {
            let (small, large) = if rows[i].len() <= rows[j].len() {
                (&rows[i], &rows[j])
            } else {
                (&rows[j], &rows[i])
            };
            let mut matching = 0i64;
            let mut co_voted = 0i64;
            for (item, value) in small {
                if let Some(other) = large.get(item) {
                    co_voted += 1;
                    if value == other {
                        matching += 1;
                    }
                }
            }
            if co_voted == 0 {
                continue;
            }
            let mismatching = co_voted - matching;
            let weight = (matching - mismatching) as f64 / co_voted as f64;
            if weight >= tau {
                edges.push(GraphEdge {
                    a: nodes[i].clone(),
                    b: nodes[j].clone(),
                    weight: weight.abs(),
                    sign: Some(if weight < 0.0 {
                        EdgeSign::Negative
                    } else {
                        EdgeSign::Positive
                    }),
                });
            }
        }
    }
    GraphModel::new(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement_yields_unit_weight() {
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(("u1".to_owned(), format!("i{i}"), 1i8));
            records.push(("u2".to_owned(), format!("i{i}"), 1i8));
        }
        let m = VoteMatrix::from_records(records).unwrap();
        let g = vote_similarity_graph(&m, 0.0).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert!((g.edges[0].signed_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opposite_votes_fall_below_zero_threshold() {
        let mut records = Vec::new();
        for i in 0..4 {
            records.push(("u1".to_owned(), format!("i{i}"), 1i8));
            records.push(("u2".to_owned(), format!("i{i}"), -1i8));
        }
        let m = VoteMatrix::from_records(records).unwrap();
        let g = vote_similarity_graph(&m, 0.0).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes.len(), 2);
    }

    #[test]
    fn negative_threshold_keeps_signed_edges() {
        let m = VoteMatrix::from_records([
            ("u1", "i1", 1),
            ("u2", "i1", -1),
            ("u1", "i2", 1),
            ("u2", "i2", -1),
        ])
        .unwrap();
        let g = vote_similarity_graph(&m, -1.0).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].sign, Some(EdgeSign::Negative));
        assert!((g.edges[0].signed_weight() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn passes_do_not_count_as_co_votes() {
        let m = VoteMatrix::from_records([
            ("u1", "i1", 1),
            ("u2", "i1", 0),
            ("u1", "i2", 1),
            ("u2", "i2", 1),
        ])
        .unwrap();
        let g = vote_similarity_graph(&m, 0.0).unwrap();
        // Only i2 is co-voted non-pass, so the weight is 1/1.
        assert_eq!(g.edges.len(), 1);
        assert!((g.edges[0].signed_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_loops_are_rejected() {
        let err = GraphModel::new(
            vec!["a".into(), "b".into()],
            vec![GraphEdge {
                a: "a".into(),
                b: "a".into(),
                weight: 1.0,
                sign: None,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }
}
