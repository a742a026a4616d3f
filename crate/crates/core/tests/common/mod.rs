//! Independent oracles shared by the integration suites. Everything here is
//! deliberately written from first principles (dense linear algebra, direct
//! enumeration, closed forms) so it shares no code path with the library
//! implementations it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;

use bridgerank_core::ids::{GroupId, PersonId};
use bridgerank_core::relation::{EdgeSign, GraphEdge, GraphModel};
use bridgerank_core::vote::{VoteMatrix, VoteValue};

/// Dense symmetric eigen-decomposition by power iteration with deflation.
/// Returns `(eigenvalues, eigenvectors)` sorted by decreasing eigenvalue.
pub fn eigen_by_power_iteration(matrix: &[Vec<f64>], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut work: Vec<Vec<f64>> = matrix.to_vec();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for component in 0..count {
        // Deterministic non-degenerate start vector.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i + component) as f64).sin())
            .collect();
        normalize(&mut v);
        for _ in 0..20_000 {
            let mut next = vec![0.0; n];
            for (i, row) in work.iter().enumerate() {
                next[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            normalize(&mut next);
            let delta: f64 = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .sum();
            let flipped: f64 = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a + b).abs())
                .sum();
            v = next;
            if delta.min(flipped) < 1e-14 {
                break;
            }
        }
        let lambda: f64 = (0..n)
            .map(|i| {
                v[i] * work[i]
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum();
        for i in 0..n {
            for j in 0..n {
                work[i][j] -= lambda * v[i] * v[j];
            }
        }
        values.push(lambda);
        vectors.push(v);
    }
    (values, vectors)
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Exact RWC by dense transition-matrix powers: row-stochastic hops
/// proportional to edge weight, isolated nodes absorb in place, start
/// distributions uniform within each group.
pub fn rwc_exact(
    graph: &GraphModel,
    labels: &BTreeMap<PersonId, GroupId>,
    steps: u64,
) -> f64 {
    let n = graph.nodes.len();
    let mut transition = vec![vec![0.0f64; n]; n];
    let adjacency = graph.adjacency();
    for (i, neighbors) in adjacency.iter().enumerate() {
        if neighbors.is_empty() {
            transition[i][i] = 1.0;
        } else {
            let total: f64 = neighbors.iter().map(|&(_, w)| w).sum();
            for &(j, w) in neighbors {
                transition[i][j] = w / total;
            }
        }
    }
    let node_groups: Vec<GroupId> = graph.nodes.iter().map(|p| labels[p]).collect();
    let mut distinct: Vec<GroupId> = node_groups.clone();
    distinct.sort();
    distinct.dedup();
    assert_eq!(distinct.len(), 2, "oracle requires exactly two groups");

    let stay_probability = |group: GroupId| -> f64 {
        let members: Vec<usize> = (0..n).filter(|&i| node_groups[i] == group).collect();
        let mut dist = vec![0.0f64; n];
        for &m in &members {
            dist[m] = 1.0 / members.len() as f64;
        }
        for _ in 0..steps {
            let mut next = vec![0.0f64; n];
            for i in 0..n {
                if dist[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[j] += dist[i] * transition[i][j];
                }
            }
            dist = next;
        }
        (0..n)
            .filter(|&i| node_groups[i] == group)
            .map(|i| dist[i])
            .sum::<f64>()
    };

    let p_xx = stay_probability(distinct[0]);
    let p_yy = stay_probability(distinct[1]);
    p_xx * p_yy - (1.0 - p_xx) * (1.0 - p_yy)
}

/// Exact least-squares fit of `r = mu + b_row + b_col` on a fully observed
/// table, gauge-fixed so row and column effects have zero mean.
pub fn two_way_least_squares(table: &[Vec<f64>]) -> (f64, Vec<f64>, Vec<f64>) {
    let rows = table.len();
    let cols = table[0].len();
    let grand: f64 = table.iter().flatten().sum::<f64>() / (rows * cols) as f64;
    let row_effects: Vec<f64> = table
        .iter()
        .map(|row| row.iter().sum::<f64>() / cols as f64 - grand)
        .collect();
    let col_effects: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|row| row[c]).sum::<f64>() / rows as f64 - grand)
        .collect();
    (grand, row_effects, col_effects)
}

/// Brute-force credibility fixed point: solves `(I - alpha * M) c =
/// (1 - alpha)/n * 1` by Gaussian elimination, where column v of `M` is
/// endorser v's distribution over authors (uniform for dangling endorsers).
pub fn credibility_fixed_point(
    endorsements: &[Vec<f64>], // endorsements[v][u]
    alpha: f64,
) -> Vec<f64> {
    let n = endorsements.len();
    let mut m = vec![vec![0.0f64; n]; n];
    for v in 0..n {
        let total: f64 = endorsements[v].iter().sum();
        if total == 0.0 {
            for u in 0..n {
                m[u][v] = 1.0 / n as f64;
            }
        } else {
            for u in 0..n {
                m[u][v] = endorsements[v][u] / total;
            }
        }
    }
    // A = I - alpha M, b = (1-alpha)/n.
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().take(n).enumerate() {
            *cell = if i == j { 1.0 } else { 0.0 } - alpha * m[i][j];
        }
        row[n] = (1.0 - alpha) / n as f64;
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let lead = a[col][col];
        for j in col..=n {
            a[col][j] /= lead;
        }
        for row in 0..n {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col];
                for j in col..=n {
                    a[row][j] -= factor * a[col][j];
                }
            }
        }
    }
    let mut c: Vec<f64> = (0..n).map(|i| a[i][n]).collect();
    let total: f64 = c.iter().sum();
    c.iter_mut().for_each(|x| *x /= total);
    c
}

/// Seeded Erdős–Rényi-style random graph over two non-empty groups.
pub fn random_two_group_graph(
    seed: u64,
    n: usize,
    edge_probability: f64,
    signed: bool,
) -> (GraphModel, BTreeMap<PersonId, GroupId>) {
    use rand::Rng;
    let mut rng = bridgerank_core::seeds::rng(seed, "test-graph", &[]);
    let nodes: Vec<PersonId> = (0..n).map(|i| PersonId::new(format!("n{i:02}"))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < edge_probability {
                edges.push(GraphEdge {
                    a: nodes[i].clone(),
                    b: nodes[j].clone(),
                    weight: 0.1 + 0.9 * rng.random::<f64>(),
                    sign: signed.then(|| {
                        if rng.random::<f64>() < 0.5 {
                            EdgeSign::Positive
                        } else {
                            EdgeSign::Negative
                        }
                    }),
                });
            }
        }
    }
    let labels: BTreeMap<PersonId, GroupId> = nodes
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), GroupId((i % 2) as u32)))
        .collect();
    (GraphModel::new(nodes, edges).unwrap(), labels)
}

/// Renames every node `p` to `zz_<p>` (a pure relabeling).
pub fn relabel_graph(
    graph: &GraphModel,
    labels: &BTreeMap<PersonId, GroupId>,
) -> (GraphModel, BTreeMap<PersonId, GroupId>) {
    let rename = |p: &PersonId| PersonId::new(format!("zz_{p}"));
    let nodes = graph.nodes.iter().map(&rename).collect();
    let edges = graph
        .edges
        .iter()
        .map(|e| GraphEdge {
            a: rename(&e.a),
            b: rename(&e.b),
            weight: e.weight,
            sign: e.sign,
        })
        .collect();
    let relabeled = labels.iter().map(|(p, &g)| (rename(p), g)).collect();
    (GraphModel::new(nodes, edges).unwrap(), relabeled)
}

/// Builds a fully observed vote matrix from a ±1 table.
pub fn matrix_from_table(table: &[Vec<i8>]) -> VoteMatrix {
    let mut records = Vec::new();
    for (r, row) in table.iter().enumerate() {
        for (c, &value) in row.iter().enumerate() {
            records.push((format!("u{r}"), format!("i{c}"), value));
        }
    }
    VoteMatrix::from_records(records).unwrap()
}

/// Targets (1 for agree, 0 for disagree) from a fully observed matrix, rows
/// and columns in sorted id order.
pub fn target_table(matrix: &VoteMatrix) -> Vec<Vec<f64>> {
    let people: Vec<&PersonId> = {
        let mut v: Vec<&PersonId> = matrix.people().collect();
        v.sort();
        v
    };
    let items: Vec<_> = {
        let mut v: Vec<_> = matrix.items().collect();
        v.sort();
        v
    };
    people
        .iter()
        .map(|p| {
            items
                .iter()
                .map(|i| match matrix.vote(p, i).unwrap() {
                    VoteValue::Agree => 1.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}
