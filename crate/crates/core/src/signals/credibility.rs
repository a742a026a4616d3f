//! Cross-divide credibility: a damped power-iteration reputation score.
//!
//! A person gains credibility when their items are endorsed (agreed with) by
//! people from the *other* side of a divide, weighted by the endorsers' own
//! credibility. Same-group endorsements are discarded, which also removes
//! self-endorsement. The recursion is the usual damped eigenvector problem:
//! each endorser splits one unit of support across the authors they endorse,
//! dangling people spread uniformly, and scores settle at the fixed point of
//! `c = alpha * M c + (1 - alpha) * uniform`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ItemId, PersonId};
use crate::relation::Clustering;
use crate::vote::{VoteMatrix, VoteValue};

const FIXED_POINT_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CredibilityScores {
    /// Non-negative scores summing to 1, keyed by person.
    pub scores: BTreeMap<PersonId, f64>,
    pub iterations: usize,
}

/// Computes credibility scores from cross-group endorsements.
///
/// `authorship` maps items to their authors; votes on unmapped items are
/// ignored, and `None` is an error since the signal is undefined without
/// authorship. `alpha` is the damping factor in (0, 1).
pub fn credibility_scores(
    matrix: &VoteMatrix,
    clustering: &Clustering,
    authorship: Option<&BTreeMap<ItemId, PersonId>>,
    alpha: f64,
) -> Result<CredibilityScores> {
    let authorship = authorship.ok_or(Error::NoAuthorship)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            message: format!("damping {alpha} outside (0, 1)"),
        });
    }
    if clustering.k < 2 {
        return Err(Error::SingleGroup);
    }

    // Scores cover the whole labeled population, voters or not, so authors
    // who never vote are still rankable.
    let population: Vec<&PersonId> = clustering.labels.keys().collect();
    let n = population.len();
    let slot_of: BTreeMap<&PersonId, usize> = population
        .iter()
        .enumerate()
        .map(|(slot, &person)| (person, slot))
        .collect();

    // endorsements[v][u] = count of v's agree votes on items authored by u,
    // cross-group pairs only.
    let mut endorsements = vec![vec![0.0f64; n]; n];
    for (person, item, value) in matrix.records() {
        if value != VoteValue::Agree {
            continue;
        }
        let group = clustering.group_of(person)?;
        let Some(&slot) = slot_of.get(person) else {
            return Err(Error::UnlabeledPerson {
                person: person.clone(),
            });
        };
        let Some(author) = authorship.get(item) else {
            continue;
        };
        let Some(&author_slot) = slot_of.get(author) else {
            continue;
        };
        if clustering.group_of(author)? != group {
            endorsements[slot][author_slot] += 1.0;
        }
    }

    // Column-stochastic transition: column v holds endorser v's distribution
    // over authors; dangling endorsers spread uniformly.
    let out_totals: Vec<f64> = endorsements.iter().map(|row| row.iter().sum()).collect();

    let uniform = 1.0 / n as f64;
    let mut scores = vec![uniform; n];
    let mut iterations = 0;
    loop {
        let mut next = vec![(1.0 - alpha) * uniform; n];
        for (v, row) in endorsements.iter().enumerate() {
            if out_totals[v] == 0.0 {
                let share = alpha * scores[v] * uniform;
                for value in next.iter_mut() {
                    *value += share;
                }
            } else {
                let scale = alpha * scores[v] / out_totals[v];
                for (u, &count) in row.iter().enumerate() {
                    if count > 0.0 {
                        next[u] += scale * count;
                    }
                }
            }
        }
        iterations += 1;
        let delta: f64 = next
            .iter()
            .zip(&scores)
            .map(|(a, b)| (a - b).abs())
            .sum();
        scores = next;
        if delta <= FIXED_POINT_TOL {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS,
            });
        }
    }

    let total: f64 = scores.iter().sum();
    let scores = population
        .iter()
        .enumerate()
        .map(|(slot, &person)| (person.clone(), scores[slot] / total))
        .collect();
    Ok(CredibilityScores { scores, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn authorship(pairs: &[(&str, &str)]) -> BTreeMap<ItemId, PersonId> {
        pairs
            .iter()
            .map(|&(item, person)| (ItemId::new(item), PersonId::new(person)))
            .collect()
    }

    #[test]
    fn missing_authorship_is_an_error() {
        let (m, c) = fixtures::f1();
        assert!(matches!(
            credibility_scores(&m, &c, None, 0.85).unwrap_err(),
            Error::NoAuthorship
        ));
    }

    #[test]
    fn symmetric_cross_endorsements_give_uniform_scores() {
        // p1, p2 in group 0; p3, p4 in group 1. Everyone agrees with every
        // outgroup item, symmetrically.
        let m = VoteMatrix::from_records([
            ("p1", "by_p3", 1),
            ("p1", "by_p4", 1),
            ("p2", "by_p3", 1),
            ("p2", "by_p4", 1),
            ("p3", "by_p1", 1),
            ("p3", "by_p2", 1),
            ("p4", "by_p1", 1),
            ("p4", "by_p2", 1),
        ])
        .unwrap();
        let c = fixtures::clustering(&[("p1", 0), ("p2", 0), ("p3", 1), ("p4", 1)]);
        let authors = authorship(&[
            ("by_p1", "p1"),
            ("by_p2", "p2"),
            ("by_p3", "p3"),
            ("by_p4", "p4"),
        ]);
        let result = credibility_scores(&m, &c, Some(&authors), 0.85).unwrap();
        for &score in result.scores.values() {
            assert!((score - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_group_endorsed_author_is_maximal() {
        // Only p1 earns outgroup endorsements.
        let m = VoteMatrix::from_records([
            ("p3", "by_p1", 1),
            ("p4", "by_p1", 1),
            ("p3", "by_p2", -1),
            ("p4", "by_p2", -1),
            ("p1", "by_p3", -1),
            ("p2", "by_p4", -1),
        ])
        .unwrap();
        let c = fixtures::clustering(&[("p1", 0), ("p2", 0), ("p3", 1), ("p4", 1)]);
        let authors = authorship(&[
            ("by_p1", "p1"),
            ("by_p2", "p2"),
            ("by_p3", "p3"),
            ("by_p4", "p4"),
        ]);
        let result = credibility_scores(&m, &c, Some(&authors), 0.85).unwrap();
        let p1 = result.scores[&PersonId::new("p1")];
        for (person, &score) in &result.scores {
            if person.as_str() != "p1" {
                assert!(p1 > score, "{person} should trail p1");
            }
        }
    }

    #[test]
    fn small_alpha_approaches_uniform() {
        let m = VoteMatrix::from_records([
            ("p3", "by_p1", 1),
            ("p4", "by_p1", 1),
            ("p1", "by_p3", -1),
            ("p2", "by_p4", -1),
        ])
        .unwrap();
        let c = fixtures::clustering(&[("p1", 0), ("p2", 0), ("p3", 1), ("p4", 1)]);
        let authors = authorship(&[("by_p1", "p1"), ("by_p3", "p3"), ("by_p4", "p4")]);
        let result = credibility_scores(&m, &c, Some(&authors), 1e-6).unwrap();
        for &score in result.scores.values() {
            assert!((score - 0.25).abs() < 1e-5);
        }
    }

    #[test]
    fn in_group_endorsements_are_ignored() {
        // p2 showers p1 with agreement but they share a group, so nothing
        // flows and scores stay uniform.
        let m = VoteMatrix::from_records([
            ("p2", "by_p1_a", 1),
            ("p2", "by_p1_b", 1),
            ("p3", "by_p4", 0),
        ])
        .unwrap();
        let c = fixtures::clustering(&[("p1", 0), ("p2", 0), ("p3", 1), ("p4", 1)]);
        let authors = authorship(&[("by_p1_a", "p1"), ("by_p1_b", "p1"), ("by_p4", "p4")]);
        let result = credibility_scores(&m, &c, Some(&authors), 0.85).unwrap();
        for &score in result.scores.values() {
            assert!((score - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn scores_are_invariant_under_person_relabeling() {
        let m = VoteMatrix::from_records([
            ("p3", "by_p1", 1),
            ("p4", "by_p1", 1),
            ("p1", "by_p3", 1),
            ("p2", "by_p4", -1),
        ])
        .unwrap();
        let c = fixtures::clustering(&[("p1", 0), ("p2", 0), ("p3", 1), ("p4", 1)]);
        let authors = authorship(&[("by_p1", "p1"), ("by_p3", "p3"), ("by_p4", "p4")]);
        let base = credibility_scores(&m, &c, Some(&authors), 0.85).unwrap();

        let rename = |p: &str| format!("person_{p}");
        let m2 = VoteMatrix::from_records([
            (rename("p3"), "by_p1".to_owned(), 1i8),
            (rename("p4"), "by_p1".to_owned(), 1),
            (rename("p1"), "by_p3".to_owned(), 1),
            (rename("p2"), "by_p4".to_owned(), -1),
        ])
        .unwrap();
        let c2 = fixtures::clustering(&[
            ("person_p1", 0),
            ("person_p2", 0),
            ("person_p3", 1),
            ("person_p4", 1),
        ]);
        let authors2 = authorship(&[
            ("by_p1", "person_p1"),
            ("by_p3", "person_p3"),
            ("by_p4", "person_p4"),
        ]);
        let relabeled = credibility_scores(&m2, &c2, Some(&authors2), 0.85).unwrap();
        for (person, &score) in &base.scores {
            let renamed = PersonId::new(rename(person.as_str()));
            assert!((relabeled.scores[&renamed] - score).abs() < 1e-12);
        }
    }
}
