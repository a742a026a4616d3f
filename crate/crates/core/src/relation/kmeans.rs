//! Opinion-space clustering: seeded k-means++ with silhouette model selection.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Backend};
use crate::ids::{GroupId, PersonId};
use crate::relation::pca::SpaceModel;
use crate::seeds;

/// Group labels over a population, with the fit quality that selected them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Clustering {
    pub schema_version: u32,
    pub k: usize,
    pub labels: BTreeMap<PersonId, GroupId>,
    pub centroids: Vec<Vec<f64>>,
    /// Mean silhouette coefficient of the selected clustering, in [-1, 1].
    pub silhouette: f64,
    /// Set when the positions carry no usable cluster structure
    /// (silhouette <= 0, e.g. all positions identical).
    pub degenerate: bool,
}

impl Clustering {
    /// Builds a clustering directly from known labels (no fit statistics).
    /// Used where ground-truth groups exist, e.g. synthetic populations.
    pub fn from_labels(labels: BTreeMap<PersonId, GroupId>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let k = labels
            .values()
            .map(|g| g.index())
            .max()
            .expect("non-empty labels")
            + 1;
        let mut seen = vec![false; k];
        for group in labels.values() {
            seen[group.index()] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidConfig {
                message: "group labels must be dense 0..k with every group non-empty".into(),
            });
        }
        Ok(Clustering {
            schema_version: 1,
            k,
            labels,
            centroids: Vec::new(),
            silhouette: 0.0,
            degenerate: false,
        })
    }

    /// Checks the invariants a deserialized clustering must satisfy: labels
    /// present, group ids dense in `0..k` with every group non-empty, and
    /// centroids (when present) matching k.
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() || self.k == 0 {
            return Err(Error::EmptyInput);
        }
        let mut seen = vec![false; self.k];
        for group in self.labels.values() {
            if group.index() >= self.k {
                return Err(Error::InvalidConfig {
                    message: format!("group {} out of range for k={}", group, self.k),
                });
            }
            seen[group.index()] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidConfig {
                message: "every group in 0..k must be non-empty".into(),
            });
        }
        if !self.centroids.is_empty() && self.centroids.len() != self.k {
            return Err(Error::InvalidConfig {
                message: format!(
                    "{} centroids for k={}",
                    self.centroids.len(),
                    self.k
                ),
            });
        }
        Ok(())
    }

    pub fn group_of(&self, person: &PersonId) -> Result<GroupId> {
        self.labels
            .get(person)
            .copied()
            .ok_or_else(|| Error::UnlabeledPerson {
                person: person.clone(),
            })
    }

    /// Members of each group, ordered by person id within groups.
    pub fn members_by_group(&self) -> Vec<Vec<&PersonId>> {
        let mut groups = vec![Vec::new(); self.k];
        for (person, group) in &self.labels {
            groups[group.index()].push(person);
        }
        groups
    }
}

/// Options for [`cluster_people`].
#[derive(Clone, Copy, Debug)]
pub struct ClusterOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the largest centroid shift.
    pub tolerance: f64,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            k_min: 2,
            k_max: 5,
            restarts: 10,
            max_iters: 300,
            tolerance: 1e-6,
            seed: 42,
            backend: Backend::default(),
        }
    }
}

/// Clusters people in opinion space, selecting k within `[k_min, k_max]` by
/// mean silhouette. Ties in silhouette go to the smaller k. Group ids are
/// renumbered so that group 0 holds the lexicographically smallest person,
/// which makes the labeling independent of restart order.
pub fn cluster_people(space: &SpaceModel, opts: &ClusterOptions) -> Result<Clustering> {
    if opts.k_min < 2 || opts.k_min > opts.k_max {
        return Err(Error::InvalidParameter {
            name: "k_range",
            message: format!("invalid range [{}, {}]", opts.k_min, opts.k_max),
        });
    }
    let n = space.person_positions.len();
    if n <= opts.k_max {
        return Err(Error::TooFewPeople {
            people: n,
            max_k: opts.k_max,
        });
    }

    let (people, points): (Vec<&PersonId>, Vec<&[f64]>) = {
        let (p, r) = space.sorted_positions();
        (p, r)
    };

    let ks: Vec<usize> = (opts.k_min..=opts.k_max).collect();
    let jobs = ks.len() * opts.restarts;
    let fits = map_indexed(opts.backend, jobs, |job| {
        let k = ks[job / opts.restarts];
        let restart = job % opts.restarts;
        let mut rng = seeds::rng(opts.seed, "kmeans", &[k as u64, restart as u64]);
        kmeans_once(&points, k, opts.max_iters, opts.tolerance, &mut rng)
    });

    let mut best: Option<(usize, f64, KmeansFit)> = None;
    for (ki, &k) in ks.iter().enumerate() {
        let start = ki * opts.restarts;
        let fit = fits[start..start + opts.restarts]
            .iter()
            .min_by(|a, b| a.inertia.total_cmp(&b.inertia))
            .expect("at least one restart")
            .clone();
        let score = mean_silhouette(&points, &fit.labels, k);
        let better = match &best {
            None => true,
            // Strictly greater: ties resolve toward the smaller k seen first.
            Some((_, best_score, _)) => score > *best_score,
        };
        if better {
            best = Some((k, score, fit));
        }
    }
    let (k, silhouette, fit) = best.expect("k range is non-empty");

    // Canonical group numbering: order clusters by their smallest member.
    let mut first_member = vec![usize::MAX; k];
    for (i, &label) in fit.labels.iter().enumerate() {
        first_member[label] = first_member[label].min(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&g| first_member[g]);
    let mut rename = vec![0u32; k];
    for (new, &old) in order.iter().enumerate() {
        rename[old] = new as u32;
    }

    let labels: BTreeMap<PersonId, GroupId> = people
        .iter()
        .zip(&fit.labels)
        .map(|(&person, &label)| (person.clone(), GroupId(rename[label])))
        .collect();
    let mut centroids = vec![Vec::new(); k];
    for (old, centroid) in fit.centroids.into_iter().enumerate() {
        centroids[rename[old] as usize] = centroid;
    }

    Ok(Clustering {
        schema_version: 1,
        k,
        labels,
        centroids,
        silhouette,
        degenerate: silhouette <= 0.0,
    })
}

#[derive(Clone)]
struct KmeansFit {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    inertia: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once(
    points: &[&[f64]],
    k: usize,
    max_iters: usize,
    tolerance: f64,
    rng: &mut impl Rng,
) -> KmeansFit {
    let n = points.len();
    let dim = points[0].len();

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].to_vec());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[next].to_vec());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, centroids.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; n];
    let assign_and_refill = |labels: &mut Vec<usize>, centroids: &mut Vec<Vec<f64>>| {
        for (i, p) in points.iter().enumerate() {
            labels[i] = nearest_centroid(p, centroids);
        }
        // Refill empty clusters with the point farthest from its centroid.
        loop {
            let mut counts = vec![0usize; k];
            for &l in labels.iter() {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    squared_distance(points[a], &centroids[labels[a]])
                        .total_cmp(&squared_distance(points[b], &centroids[labels[b]]))
                        .then(b.cmp(&a))
                })
                .expect("k <= n so a donor cluster exists");
            labels[farthest] = empty;
            centroids[empty] = points[farthest].to_vec();
        }
    };

    for _ in 0..max_iters {
        assign_and_refill(&mut labels, &mut centroids);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, &x) in sums[labels[i]].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        let mut max_shift = 0.0f64;
        for g in 0..k {
            let new: Vec<f64> = sums[g].iter().map(|s| s / counts[g] as f64).collect();
            max_shift = max_shift.max(squared_distance(&new, &centroids[g]).sqrt());
            centroids[g] = new;
        }
        if max_shift < tolerance {
            break;
        }
    }
    assign_and_refill(&mut labels, &mut centroids);

    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| squared_distance(p, &centroids[l]))
        .sum();
    KmeansFit {
        labels,
        centroids,
        inertia,
    }
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (g, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = g;
        }
    }
    best
}

/// Mean silhouette coefficient. Points in singleton clusters score 0, and a
/// point with zero distance to both its own and the nearest other cluster
/// scores 0 (the degenerate all-identical case).
pub fn mean_silhouette(points: &[&[f64]], labels: &[usize], k: usize) -> f64 {
    let n = points.len();
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if counts[own] <= 1 {
            continue; // contributes 0
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[labels[j]] += squared_distance(points[i], points[j]).sqrt();
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&g| g != own && counts[g] > 0)
            .map(|g| sums[g] / counts[g] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 && denom.is_finite() {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}
