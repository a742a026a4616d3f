//! Canonical synthetic fixtures used by tests, benches, and the checked-in
//! CLI example files. Kept in the library so every consumer sees the same
//! data.

use std::collections::BTreeMap;

use rand::Rng;

use crate::ids::{GroupId, ItemId, PersonId};
use crate::relation::Clustering;
use crate::seeds;
use crate::vote::VoteMatrix;

/// Partisan item approved only by group A.
pub const PARTISAN_A: &str = "i_partisan";
/// Partisan item approved only by group B.
pub const PARTISAN_B: &str = "i_partisan_b";
/// Consensus item approved by majorities of both groups.
pub const BRIDGE: &str = "i_bridge";
/// Item everyone disagrees with.
pub const UNPOPULAR: &str = "i_unpopular";

/// Builds a clustering from explicit `(person, group)` pairs.
pub fn clustering(groups: &[(&str, u32)]) -> Clustering {
    Clustering::from_labels(
        groups
            .iter()
            .map(|&(p, g)| (PersonId::new(p), GroupId(g)))
            .collect(),
    )
    .expect("valid fixture labels")
}

/// Two-faction fixture: u1..u3 in group A, u4..u6 in group B, four items.
///
/// Per-group tallies (agrees / seen):
/// - `i_partisan`:   A 3/3, B 0/3 (B all disagree)
/// - `i_partisan_b`: A 0/3, B 3/3
/// - `i_bridge`:     A 2/3, B 2/3 (u3 and u6 pass)
/// - `i_unpopular`:  A 0/3, B 0/3 (all disagree)
pub fn f1() -> (VoteMatrix, Clustering) {
    let records: Vec<(&str, &str, i8)> = vec![
        ("u1", PARTISAN_A, 1),
        ("u2", PARTISAN_A, 1),
        ("u3", PARTISAN_A, 1),
        ("u4", PARTISAN_A, -1),
        ("u5", PARTISAN_A, -1),
        ("u6", PARTISAN_A, -1),
        ("u1", PARTISAN_B, -1),
        ("u2", PARTISAN_B, -1),
        ("u3", PARTISAN_B, -1),
        ("u4", PARTISAN_B, 1),
        ("u5", PARTISAN_B, 1),
        ("u6", PARTISAN_B, 1),
        ("u1", BRIDGE, 1),
        ("u2", BRIDGE, 1),
        ("u3", BRIDGE, 0),
        ("u4", BRIDGE, 1),
        ("u5", BRIDGE, 1),
        ("u6", BRIDGE, 0),
        ("u1", UNPOPULAR, -1),
        ("u2", UNPOPULAR, -1),
        ("u3", UNPOPULAR, -1),
        ("u4", UNPOPULAR, -1),
        ("u5", UNPOPULAR, -1),
        ("u6", UNPOPULAR, -1),
    ];
    let matrix = VoteMatrix::from_records(records).expect("valid fixture");
    let labels = clustering(&[
        ("u1", 0),
        ("u2", 0),
        ("u3", 0),
        ("u4", 1),
        ("u5", 1),
        ("u6", 1),
    ]);
    (matrix, labels)
}

/// F1 vote records, for writing the fixture to CSV.
pub fn f1_records() -> Vec<(PersonId, ItemId, i8)> {
    let (matrix, _) = f1();
    matrix
        .records()
        .map(|(p, i, v)| (p.clone(), i.clone(), v.as_i8()))
        .collect()
}

/// Two-blob vote fixture: `blob_a*` people agree with items 1-5, `blob_b*`
/// disagree with them. Noise comes from five extra low-signal items that
/// people vote on sparsely and randomly, which spreads each blob out in the
/// projection instead of stacking people on identical points.
pub fn f2(seed: u64) -> (VoteMatrix, BTreeMap<PersonId, GroupId>) {
    let mut rng = seeds::rng(seed, "f2-noise", &[]);
    let mut records = Vec::new();
    let mut truth = BTreeMap::new();
    for blob in 0..2u32 {
        for p in 0..10 {
            let person = PersonId::new(format!("blob_{}{:02}", ['a', 'b'][blob as usize], p));
            truth.insert(person.clone(), GroupId(blob));
            let base: i8 = if blob == 0 { 1 } else { -1 };
            for item in 1..=5 {
                records.push((person.clone(), ItemId::new(format!("item{item}")), base));
            }
            for noise in 1..=5 {
                if rng.random::<f64>() < 0.25 {
                    let value: i8 = if rng.random::<f64>() < 0.5 { 1 } else { -1 };
                    records.push((
                        person.clone(),
                        ItemId::new(format!("noise{noise}")),
                        value,
                    ));
                }
            }
        }
    }
    (VoteMatrix::from_records(records).expect("valid fixture"), truth)
}

/// Faction fixture for matrix factorization: two factions of four people,
/// two partisan probe items per faction plus a universally approved item
/// `x_consensus` and a faction-A-only item `y_partisan_probe`.
pub fn f3() -> (VoteMatrix, Clustering) {
    let faction_a = ["u1", "u2", "u3", "u4"];
    let faction_b = ["u5", "u6", "u7", "u8"];
    let mut records: Vec<(&str, &str, i8)> = Vec::new();
    for &p in &faction_a {
        records.push((p, "pa1", 1));
        records.push((p, "pa2", 1));
        records.push((p, "pb1", -1));
        records.push((p, "pb2", -1));
        records.push((p, "x_consensus", 1));
        records.push((p, "y_partisan_probe", 1));
    }
    for &p in &faction_b {
        records.push((p, "pa1", -1));
        records.push((p, "pa2", -1));
        records.push((p, "pb1", 1));
        records.push((p, "pb2", 1));
        records.push((p, "x_consensus", 1));
        records.push((p, "y_partisan_probe", -1));
    }
    let matrix = VoteMatrix::from_records(records).expect("valid fixture");
    let labels = clustering(&[
        ("u1", 0),
        ("u2", 0),
        ("u3", 0),
        ("u4", 0),
        ("u5", 1),
        ("u6", 1),
        ("u7", 1),
        ("u8", 1),
    ]);
    (matrix, labels)
}
