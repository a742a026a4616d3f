//! Space-based relation model: PCA projection of the vote matrix.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ItemId, PersonId};
use crate::vote::VoteMatrix;

const ZERO_VARIANCE_EPS: f64 = 1e-12;

/// People (and items) embedded in a low-dimensional opinion space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceModel {
    pub schema_version: u32,
    pub dimension: usize,
    /// Fraction of total variance captured per retained component,
    /// non-increasing. Empty when the matrix is degenerate.
    pub explained_variance: Vec<f64>,
    /// Set when total variance is zero (all rows identical); positions are
    /// all at the origin in that case.
    pub degenerate: bool,
    pub person_positions: BTreeMap<PersonId, Vec<f64>>,
    /// Component loadings per item (unit-norm principal axes).
    pub item_positions: BTreeMap<ItemId, Vec<f64>>,
}

impl SpaceModel {
    /// Positions ordered by person id, as a matrix row per person.
    pub fn sorted_positions(&self) -> (Vec<&PersonId>, Vec<&[f64]>) {
        let mut people = Vec::with_capacity(self.person_positions.len());
        let mut rows = Vec::with_capacity(self.person_positions.len());
        for (person, pos) in &self.person_positions {
            people.push(person);
            rows.push(pos.as_slice());
        }
        (people, rows)
    }
}

/// Projects people onto the top `d` principal components of the vote matrix.
///
/// Missing votes are imputed as 0 (the pass encoding), columns are mean
/// centered, and the covariance uses the population convention (divide by n).
/// Each component is sign-fixed so that its largest-magnitude loading is
/// positive, which pins the output for fixtures and reruns.
pub fn pca_project(matrix: &VoteMatrix, d: usize) -> Result<SpaceModel> {
    if d < 1 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            message: "must be at least 1".into(),
        });
    }
    let n_people = matrix.n_people();
    let n_items = matrix.n_items();
    if n_people < 2 {
        return Err(Error::InvalidParameter {
            name: "matrix",
            message: format!("need at least 2 people, got {n_people}"),
        });
    }
    if d > n_people.min(n_items) {
        return Err(Error::InvalidParameter {
            name: "dimension",
            message: format!(
                "d={d} exceeds min(people, items) = {}",
                n_people.min(n_items)
            ),
        });
    }

    let people = matrix.sorted_person_indices();
    let items = matrix.sorted_item_indices();
    // Column index of each item in the dense working matrix.
    let col_of: BTreeMap<u32, usize> = items.iter().enumerate().map(|(c, &i)| (i, c)).collect();

    let mut dense = DMatrix::<f64>::zeros(n_people, n_items);
    for (r, &p) in people.iter().enumerate() {
        for (item_idx, value) in matrix.row(p) {
            dense[(r, col_of[&item_idx])] = value.as_i8() as f64;
        }
    }

    // Mean-center columns.
    for c in 0..n_items {
        let mean = dense.column(c).sum() / n_people as f64;
        for r in 0..n_people {
            dense[(r, c)] -= mean;
        }
    }

    let covariance = dense.transpose() * &dense / n_people as f64;
    let total_variance = covariance.trace();

    let person_ids: Vec<PersonId> = people
        .iter()
        .map(|&p| matrix.person_at(p).clone())
        .collect();
    let item_ids: Vec<ItemId> = items.iter().map(|&i| matrix.item_at(i).clone()).collect();

    if total_variance <= ZERO_VARIANCE_EPS {
        return Ok(SpaceModel {
            schema_version: 1,
            dimension: d,
            explained_variance: Vec::new(),
            degenerate: true,
            person_positions: person_ids
                .into_iter()
                .map(|p| (p, vec![0.0; d]))
                .collect(),
            item_positions: item_ids.into_iter().map(|i| (i, vec![0.0; d])).collect(),
        });
    }

    let eigen = covariance.symmetric_eigen();
    let mut order: Vec<usize> = (0..n_items).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let mut components = Vec::with_capacity(d);
    let mut explained = Vec::with_capacity(d);
    for &j in order.iter().take(d) {
        let mut axis: DVector<f64> = eigen.eigenvectors.column(j).into_owned();
        // Sign convention: largest-|loading| entry positive; first index wins ties.
        let pivot = (0..axis.len())
            .max_by(|&a, &b| {
                axis[a]
                    .abs()
                    .total_cmp(&axis[b].abs())
                    .then(b.cmp(&a))
            })
            .expect("non-empty axis");
        if axis[pivot] < 0.0 {
            axis.neg_mut();
        }
        explained.push(eigen.eigenvalues[j].max(0.0) / total_variance);
        components.push(axis);
    }

    let mut person_positions = BTreeMap::new();
    for (r, person) in person_ids.into_iter().enumerate() {
        let pos: Vec<f64> = components
            .iter()
            .map(|axis| dense.row(r).transpose().dot(axis))
            .collect();
        person_positions.insert(person, pos);
    }
    let mut item_positions = BTreeMap::new();
    for (c, item) in item_ids.into_iter().enumerate() {
        let pos: Vec<f64> = components.iter().map(|axis| axis[c]).collect();
        item_positions.insert(item, pos);
    }

    Ok(SpaceModel {
        schema_version: 1,
        dimension: d,
        explained_variance: explained,
        degenerate: false,
        person_positions,
        item_positions,
    })
}
