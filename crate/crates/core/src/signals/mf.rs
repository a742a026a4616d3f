//! Matrix factorization with person and item intercepts.
//!
//! Approval is modeled as `r ≈ mu + b_person + b_item + p · q`. Viewpoint
//! structure gets absorbed by the factor terms, so the item intercept is the
//! share of approval *not* explained by viewpoint. Items approved across
//! factions earn a high intercept, which is the bridging score.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ItemId, PersonId};
use crate::seeds;
use crate::vote::{VoteMatrix, VoteValue};

/// Last-epoch loss change above which the fit is flagged unconverged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MfHyperParams {
    pub factors: usize,
    pub lambda_intercept: f64,
    pub lambda_factor: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MfHyperParams {
    fn default() -> Self {
        MfHyperParams {
            factors: 2,
            lambda_intercept: 0.15,
            lambda_factor: 0.03,
            learning_rate: 0.05,
            epochs: 500,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MfModel {
    pub mu: f64,
    pub person_intercepts: BTreeMap<PersonId, f64>,
    pub item_intercepts: BTreeMap<ItemId, f64>,
    pub person_factors: BTreeMap<PersonId, Vec<f64>>,
    pub item_factors: BTreeMap<ItemId, Vec<f64>>,
    pub hyperparams: MfHyperParams,
    /// Total loss before training and after every epoch.
    pub loss_trace: Vec<f64>,
    /// False when the final epoch still moved the loss by more than
    /// [`CONVERGENCE_TOL`]; informational, not fatal.
    pub converged: bool,
}

/// The item intercept: predicted approval not explained by viewpoint factors.
pub fn mf_bridging_score(model: &MfModel, item: &ItemId) -> Result<f64> {
    model
        .item_intercepts
        .get(item)
        .copied()
        .ok_or_else(|| Error::UnknownItem { item: item.clone() })
}

/// Fits the model by seeded full-batch gradient descent.
///
/// Pass votes carry no approval information and are excluded; targets are
/// Agree -> 1, Disagree -> 0 so intercepts read as smoothed approval. The
/// descent iterates and sums in sorted person/item order, so results are
/// identical regardless of input record order. After training, person and
/// item intercepts are centered to mean zero (predictions are invariant to
/// this shift; it makes intercepts comparable across fits).
pub fn fit_matrix_factorization(matrix: &VoteMatrix, h: &MfHyperParams) -> Result<MfModel> {
    if h.learning_rate <= 0.0 || !h.learning_rate.is_finite() {
        return Err(Error::InvalidParameter {
            name: "learning_rate",
            message: format!("{} is not a usable step size", h.learning_rate),
        });
    }
    if h.lambda_intercept < 0.0 || h.lambda_factor < 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            message: "regularization weights must be non-negative".into(),
        });
    }

    // Training triples in canonical order.
    let mut people: Vec<PersonId> = Vec::new();
    let mut items: Vec<ItemId> = Vec::new();
    let mut person_slot: BTreeMap<PersonId, usize> = BTreeMap::new();
    let mut item_slot: BTreeMap<ItemId, usize> = BTreeMap::new();
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for &p in &matrix.sorted_person_indices() {
        let person = matrix.person_at(p);
        let mut row: Vec<(&ItemId, VoteValue)> = matrix
            .row(p)
            .filter(|(_, v)| !v.is_pass())
            .map(|(i, v)| (matrix.item_at(i), v))
            .collect();
        row.sort_by(|a, b| a.0.cmp(b.0));
        for (item, value) in row {
            let u = *person_slot.entry(person.clone()).or_insert_with(|| {
                people.push(person.clone());
                people.len() - 1
            });
            let i = *item_slot.entry(item.clone()).or_insert_with(|| {
                items.push(item.clone());
                items.len() - 1
            });
            let target = if value == VoteValue::Agree { 1.0 } else { 0.0 };
            triples.push((u, i, target));
        }
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput);
    }

    let n_people = people.len();
    let n_items = items.len();
    let n = triples.len() as f64;
    let f = h.factors;

    let mut mu = triples.iter().map(|t| t.2).sum::<f64>() / n;
    let mut b_person = vec![0.0; n_people];
    let mut b_item = vec![0.0; n_items];
    let mut p_factors = vec![vec![0.0; f]; n_people];
    let mut q_factors = vec![vec![0.0; f]; n_items];
    if f > 0 {
        let mut rng = seeds::rng(h.seed, "mf-init", &[]);
        let normal = Normal::new(0.0, 0.1).expect("valid stddev");
        for row in p_factors.iter_mut().chain(q_factors.iter_mut()) {
            for value in row.iter_mut() {
                *value = normal.sample(&mut rng);
            }
        }
        let _ = rng.random::<u64>();
    }

    let loss = |mu: f64,
                b_person: &[f64],
                b_item: &[f64],
                p_factors: &[Vec<f64>],
                q_factors: &[Vec<f64>]|
     -> f64 {
        let mut total = 0.0;
        for &(u, i, r) in &triples {
            let dot: f64 = p_factors[u].iter().zip(&q_factors[i]).map(|(a, b)| a * b).sum();
            let e = r - mu - b_person[u] - b_item[i] - dot;
            total += e * e;
        }
        total += h.lambda_intercept
            * (b_person.iter().map(|b| b * b).sum::<f64>()
                + b_item.iter().map(|b| b * b).sum::<f64>());
        total += h.lambda_factor
            * (p_factors.iter().flatten().map(|v| v * v).sum::<f64>()
                + q_factors.iter().flatten().map(|v| v * v).sum::<f64>());
        total
    };

    let mut loss_trace = Vec::with_capacity(h.epochs + 1);
    loss_trace.push(loss(mu, &b_person, &b_item, &p_factors, &q_factors));

    // Descent on (total loss) / n; gradients accumulate in triple order.
    let mut g_mu;
    let mut g_bp = vec![0.0; n_people];
    let mut g_bi = vec![0.0; n_items];
    let mut g_p = vec![vec![0.0; f]; n_people];
    let mut g_q = vec![vec![0.0; f]; n_items];
    for _ in 0..h.epochs {
        g_mu = 0.0;
        g_bp.iter_mut().for_each(|g| *g = 0.0);
        g_bi.iter_mut().for_each(|g| *g = 0.0);
        g_p.iter_mut().flatten().for_each(|g| *g = 0.0);
        g_q.iter_mut().flatten().for_each(|g| *g = 0.0);

        for &(u, i, r) in &triples {
            let dot: f64 = p_factors[u].iter().zip(&q_factors[i]).map(|(a, b)| a * b).sum();
            let e = r - mu - b_person[u] - b_item[i] - dot;
            g_mu -= 2.0 * e;
            g_bp[u] -= 2.0 * e;
            g_bi[i] -= 2.0 * e;
            for k in 0..f {
                g_p[u][k] -= 2.0 * e * q_factors[i][k];
                g_q[i][k] -= 2.0 * e * p_factors[u][k];
            }
        }
        for (g, b) in g_bp.iter_mut().zip(&b_person) {
            *g += 2.0 * h.lambda_intercept * b;
        }
        for (g, b) in g_bi.iter_mut().zip(&b_item) {
            *g += 2.0 * h.lambda_intercept * b;
        }
        for (grow, prow) in g_p.iter_mut().zip(&p_factors) {
            for (g, v) in grow.iter_mut().zip(prow) {
                *g += 2.0 * h.lambda_factor * v;
            }
        }
        for (grow, qrow) in g_q.iter_mut().zip(&q_factors) {
            for (g, v) in grow.iter_mut().zip(qrow) {
                *g += 2.0 * h.lambda_factor * v;
            }
        }

        let step = h.learning_rate / n;
        mu -= step * g_mu;
        for (b, g) in b_person.iter_mut().zip(&g_bp) {
            *b -= step * g;
        }
        for (b, g) in b_item.iter_mut().zip(&g_bi) {
            *b -= step * g;
        }
        for (row, grow) in p_factors.iter_mut().zip(&g_p) {
            for (v, g) in row.iter_mut().zip(grow) {
                *v -= step * g;
            }
        }
        for (row, grow) in q_factors.iter_mut().zip(&g_q) {
            for (v, g) in row.iter_mut().zip(grow) {
                *v -= step * g;
            }
        }

        loss_trace.push(loss(mu, &b_person, &b_item, &p_factors, &q_factors));
    }

    let last_change = if loss_trace.len() >= 2 {
        (loss_trace[loss_trace.len() - 2] - loss_trace[loss_trace.len() - 1]).abs()
    } else {
        0.0
    };
    let converged = last_change <= CONVERGENCE_TOL;

    // Gauge fix: predictions are invariant to shifting intercept means into mu.
    let mean_bp = b_person.iter().sum::<f64>() / n_people as f64;
    let mean_bi = b_item.iter().sum::<f64>() / n_items as f64;
    mu += mean_bp + mean_bi;
    b_person.iter_mut().for_each(|b| *b -= mean_bp);
    b_item.iter_mut().for_each(|b| *b -= mean_bi);

    Ok(MfModel {
        mu,
        person_intercepts: people.iter().cloned().zip(b_person).collect(),
        item_intercepts: items.iter().cloned().zip(b_item).collect(),
        person_factors: people.iter().cloned().zip(p_factors).collect(),
        item_factors: items.iter().cloned().zip(q_factors).collect(),
        hyperparams: *h,
        loss_trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn exact_hypers() -> MfHyperParams {
        MfHyperParams {
            factors: 0,
            lambda_intercept: 0.0,
            lambda_factor: 0.0,
            learning_rate: 0.3,
            epochs: 20_000,
            seed: 1,
        }
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let m = VoteMatrix::from_records([
            ("u1", "i1", 1),
            ("u1", "i2", -1),
            ("u2", "i1", 1),
            ("u2", "i2", 1),
        ])
        .unwrap();
        let model = fit_matrix_factorization(&m, &exact_hypers()).unwrap();
        let b1 = model.item_intercepts[&ItemId::new("i1")];
        let b2 = model.item_intercepts[&ItemId::new("i2")];
        assert!((b1 - b2 - 0.5).abs() < 1e-6, "b1={b1} b2={b2}");
        assert!(model.converged);
    }

    #[test]
    fn constant_targets_shrink_intercepts() {
        let m = VoteMatrix::from_records([
            ("u1", "i1", 1),
            ("u1", "i2", 1),
            ("u2", "i1", 1),
            ("u2", "i2", 1),
        ])
        .unwrap();
        let mut previous_max = f64::INFINITY;
        for lambda in [0.1, 1.0, 10.0] {
            let h = MfHyperParams {
                factors: 0,
                lambda_intercept: lambda,
                lambda_factor: 0.0,
                learning_rate: 0.2,
                epochs: 5_000,
                seed: 1,
            };
            let model = fit_matrix_factorization(&m, &h).unwrap();
            assert!(model.mu > 0.0 && model.mu <= 1.0 + 1e-9);
            let max_b = model
                .person_intercepts
                .values()
                .chain(model.item_intercepts.values())
                .fold(0.0f64, |acc, b| acc.max(b.abs()));
            assert!(max_b <= previous_max + 1e-12);
            previous_max = max_b;
        }
    }

    #[test]
    fn loss_trace_is_monotone_in_the_tail() {
        let (m, _) = fixtures::f3();
        let model = fit_matrix_factorization(&m, &MfHyperParams::default()).unwrap();
        let trace = &model.loss_trace;
        for w in trace[trace.len().saturating_sub(10)..].windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "tail loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn faction_fixture_orders_consensus_above_partisan() {
        let (m, _) = fixtures::f3();
        let model = fit_matrix_factorization(&m, &MfHyperParams::default()).unwrap();
        let x = mf_bridging_score(&model, &"x_consensus".into()).unwrap();
        let y = mf_bridging_score(&model, &"y_partisan_probe".into()).unwrap();
        assert!(x > y, "expected consensus item above partisan probe: {x} vs {y}");
    }

    #[test]
    fn pass_votes_are_excluded_from_training() {
        let m = VoteMatrix::from_records([
            ("u1", "i1", 1),
            ("u2", "i1", 0),
            ("u1", "i2", -1),
            ("u2", "i2", -1),
        ])
        .unwrap();
        let model = fit_matrix_factorization(&m, &exact_hypers()).unwrap();
        // u2's only non-pass votes are on i2; the model still covers both items.
        assert_eq!(model.item_intercepts.len(), 2);
        assert_eq!(model.person_intercepts.len(), 2);
    }

    #[test]
    fn all_pass_matrix_has_no_targets() {
        let m = VoteMatrix::from_records([("u1", "i1", 0), ("u2", "i1", 0)]).unwrap();
        assert!(matches!(
            fit_matrix_factorization(&m, &MfHyperParams::default()).unwrap_err(),
            Error::EmptyInput
        ));
    }

    #[test]
    fn unknown_item_is_reported() {
        let m = VoteMatrix::from_records([("u1", "i1", 1), ("u2", "i1", -1)]).unwrap();
        let model = fit_matrix_factorization(&m, &MfHyperParams::default()).unwrap();
        assert!(matches!(
            mf_bridging_score(&model, &"ghost".into()).unwrap_err(),
            Error::UnknownItem { .. }
        ));
    }

    #[test]
    fn record_order_does_not_change_the_fit() {
        let (m, _) = fixtures::f3();
        let mut records: Vec<(PersonId, ItemId, i8)> = m
            .records()
            .map(|(p, i, v)| (p.clone(), i.clone(), v.as_i8()))
            .collect();
        records.reverse();
        let m2 = VoteMatrix::from_records(records).unwrap();
        let a = fit_matrix_factorization(&m, &MfHyperParams::default()).unwrap();
        let b = fit_matrix_factorization(&m2, &MfHyperParams::default()).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.item_intercepts, b.item_intercepts);
    }
}
