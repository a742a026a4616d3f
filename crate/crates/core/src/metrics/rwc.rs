//! Random walk controversy: how likely random traversals stay inside their
//! starting group.
//!
//! `RWC = P(start X, end X) * P(start Y, end Y)
//!      - P(start X, end Y) * P(start Y, end X)`
//!
//! estimated by Monte Carlo: walks start uniformly within each group, hop
//! proportionally to edge weight, and are absorbed after a fixed number of
//! steps. A node with no incident edges absorbs the walk in place. Walk
//! seeds derive from (seed, group, walk index), and per-walk outcomes are
//! integer counts, so estimates are identical on either execution backend.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Backend};
use crate::ids::{GroupId, PersonId};
use crate::relation::GraphModel;
use crate::seeds;

#[derive(Clone, Copy, Debug)]
pub struct RwcOptions {
    /// Total walk count, split evenly between the two groups.
    pub walks: u64,
    /// Hops per walk before absorption.
    pub steps: u64,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for RwcOptions {
    fn default() -> Self {
        RwcOptions {
            walks: 10_000,
            steps: 10,
            seed: 42,
            backend: Backend::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RwcEstimate {
    pub value: f64,
    /// Exact binomial standard error of the estimate (the estimator reduces
    /// to `p_xx + p_yy - 1`, a sum of two independent proportions).
    pub std_error: f64,
    pub walks: u64,
    pub steps: u64,
}

/// Monte Carlo RWC estimate for a two-group partition.
pub fn random_walk_controversy(
    graph: &GraphModel,
    labels: &BTreeMap<PersonId, GroupId>,
    opts: &RwcOptions,
) -> Result<RwcEstimate> {
    if opts.walks < 2 {
        return Err(Error::InvalidParameter {
            name: "walks",
            message: "need at least one walk per group".into(),
        });
    }
    let mut node_groups = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        node_groups.push(
            labels
                .get(node)
                .copied()
                .ok_or_else(|| Error::UnlabeledPerson {
                    person: node.clone(),
                })?,
        );
    }
    let mut distinct: Vec<GroupId> = node_groups.clone();
    distinct.sort();
    distinct.dedup();
    match distinct.len() {
        0 | 1 => return Err(Error::SingleGroup),
        2 => {}
        n => {
            return Err(Error::InvalidParameter {
                name: "groups",
                message: format!("expected exactly 2 groups, found {n}"),
            })
        }
    }
    let group_x = distinct[0];

    let adjacency = graph.adjacency();
    let mut members: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (node, &group) in node_groups.iter().enumerate() {
        members[usize::from(group != group_x)].push(node);
    }
    for (side, group) in members.iter().zip(&distinct) {
        if side.iter().all(|&node| adjacency[node].is_empty()) {
            return Err(Error::EmptyGroupGraph { group: group.0 });
        }
    }

    let walks_x = opts.walks / 2;
    let walks_y = opts.walks - walks_x;
    let stayed = map_indexed(opts.backend, opts.walks as usize, |w| {
        let (side, walk_idx) = if (w as u64) < walks_x {
            (0usize, w as u64)
        } else {
            (1usize, w as u64 - walks_x)
        };
        let mut rng = seeds::rng(opts.seed, "rwc-walk", &[side as u64, walk_idx]);
        let start = members[side][rng.random_range(0..members[side].len())];
        let mut node = start;
        for _ in 0..opts.steps {
            let neighbors = &adjacency[node];
            if neighbors.is_empty() {
                break;
            }
            let total: f64 = neighbors.iter().map(|&(_, w)| w).sum();
            let mut target = rng.random::<f64>() * total;
            let mut next = neighbors[neighbors.len() - 1].0;
            for &(candidate, weight) in neighbors {
                target -= weight;
                if target <= 0.0 {
                    next = candidate;
                    break;
                }
            }
            node = next;
        }
        let ended_side = usize::from(node_groups[node] != group_x);
        u64::from(ended_side == side)
    });

    let stayed_x: u64 = stayed[..walks_x as usize].iter().sum();
    let stayed_y: u64 = stayed[walks_x as usize..].iter().sum();
    let p_xx = stayed_x as f64 / walks_x as f64;
    let p_yy = stayed_y as f64 / walks_y as f64;
    let value = p_xx * p_yy - (1.0 - p_xx) * (1.0 - p_yy);
    let std_error = (p_xx * (1.0 - p_xx) / walks_x as f64
        + p_yy * (1.0 - p_yy) / walks_y as f64)
        .sqrt();

    Ok(RwcEstimate {
        value,
        std_error,
        walks: opts.walks,
        steps: opts.steps,
    })
}
