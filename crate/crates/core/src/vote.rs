//! Vote data: the people × items relation table.
//!
//! A [`VoteMatrix`] is a sparse table of agree / disagree / pass relations.
//! Absence of an entry means the person never saw the item, which is distinct
//! from an explicit pass. People and items iterate in insertion order (first
//! appearance); model construction elsewhere in the crate works on views
//! sorted by id, so permuting the input records never changes model outputs.

use std::collections::BTreeMap;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{ItemId, PersonId};

/// One agree / disagree / pass relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteValue {
    Agree,
    Disagree,
    Pass,
}

impl VoteValue {
    pub fn from_i8(value: i8) -> Result<Self> {
        match value {
            1 => Ok(VoteValue::Agree),
            -1 => Ok(VoteValue::Disagree),
            0 => Ok(VoteValue::Pass),
            other => Err(Error::InvalidValue {
                value: other as i64,
            }),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            VoteValue::Agree => 1,
            VoteValue::Disagree => -1,
            VoteValue::Pass => 0,
        }
    }

    pub fn is_pass(self) -> bool {
        matches!(self, VoteValue::Pass)
    }
}

/// A single vote record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub person: PersonId,
    pub item: ItemId,
    pub value: VoteValue,
}

/// A timestamped vote, as recorded in an interaction history.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub tick: u64,
    pub person: PersonId,
    pub item: ItemId,
    pub value: VoteValue,
}

/// Sparse people × items vote table.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "VoteMatrixRecords", into = "VoteMatrixRecords")]
pub struct VoteMatrix {
    people: IndexSet<PersonId>,
    items: IndexSet<ItemId>,
    // Person-major sparse storage, keyed by item index.
    rows: Vec<BTreeMap<u32, VoteValue>>,
    n_votes: usize,
}

impl VoteMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a matrix from `(person, item, value)` records with values in
    /// `{-1, 0, 1}`. People and items are registered in order of first
    /// appearance.
    pub fn from_records<P, I>(records: impl IntoIterator<Item = (P, I, i8)>) -> Result<Self>
    where
        P: Into<PersonId>,
        I: Into<ItemId>,
    {
        let mut matrix = VoteMatrix::new();
        for (person, item, value) in records {
            matrix.add_vote(person.into(), item.into(), VoteValue::from_i8(value)?)?;
        }
        if matrix.people.is_empty() || matrix.items.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(matrix)
    }

    /// Registers a person without any votes. Idempotent.
    pub fn register_person(&mut self, person: PersonId) -> u32 {
        let (idx, inserted) = self.people.insert_full(person);
        if inserted {
            self.rows.push(BTreeMap::new());
        }
        idx as u32
    }

    /// Registers an item without any votes. Idempotent.
    pub fn register_item(&mut self, item: ItemId) -> u32 {
        self.items.insert_full(item).0 as u32
    }

    /// Records a vote, registering the person and item if needed.
    pub fn add_vote(&mut self, person: PersonId, item: ItemId, value: VoteValue) -> Result<()> {
        let p = self.register_person(person);
        let i = self.register_item(item);
        match self.rows[p as usize].entry(i) {
            std::collections::btree_map::Entry::Occupied(_) => Err(Error::DuplicateVote {
                person: self.people[p as usize].clone(),
                item: self.items[i as usize].clone(),
            }),
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(value);
                self.n_votes += 1;
                Ok(())
            }
        }
    }

    pub fn n_people(&self) -> usize {
        self.people.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Number of stored votes, passes included.
    pub fn n_votes(&self) -> usize {
        self.n_votes
    }

    /// People in insertion order.
    pub fn people(&self) -> impl Iterator<Item = &PersonId> {
        self.people.iter()
    }

    /// Items in insertion order.
    pub fn items(&self) -> impl Iterator<Item = &ItemId> {
        self.items.iter()
    }

    pub fn person_index(&self, person: &PersonId) -> Option<u32> {
        self.people.get_index_of(person).map(|i| i as u32)
    }

    pub fn item_index(&self, item: &ItemId) -> Option<u32> {
        self.items.get_index_of(item).map(|i| i as u32)
    }

    pub fn person_at(&self, index: u32) -> &PersonId {
        &self.people[index as usize]
    }

    pub fn item_at(&self, index: u32) -> &ItemId {
        &self.items[index as usize]
    }

    pub fn contains_item(&self, item: &ItemId) -> bool {
        self.items.contains(item)
    }

    pub fn contains_person(&self, person: &PersonId) -> bool {
        self.people.contains(person)
    }

    pub fn vote(&self, person: &PersonId, item: &ItemId) -> Option<VoteValue> {
        let p = self.person_index(person)?;
        let i = self.item_index(item)?;
        self.rows[p as usize].get(&i).copied()
    }

    pub fn has_vote(&self, person: &PersonId, item: &ItemId) -> bool {
        self.vote(person, item).is_some()
    }

    /// A person's votes as `(item index, value)`, ordered by item index.
    pub fn row(&self, person_index: u32) -> impl Iterator<Item = (u32, VoteValue)> + '_ {
        self.rows[person_index as usize]
            .iter()
            .map(|(&i, &v)| (i, v))
    }

    /// All votes in insertion order of people, item-index order within a row.
    pub fn records(&self) -> impl Iterator<Item = (&PersonId, &ItemId, VoteValue)> {
        self.people.iter().enumerate().flat_map(move |(p, person)| {
            self.rows[p]
                .iter()
                .map(move |(&i, &v)| (person, &self.items[i as usize], v))
        })
    }

    /// Person indices ordered by person id. Model construction iterates this
    /// view so that outputs do not depend on record order.
    pub fn sorted_person_indices(&self) -> Vec<u32> {
        let mut idx: Vec<u32> = (0..self.people.len() as u32).collect();
        idx.sort_by(|&a, &b| self.people[a as usize].cmp(&self.people[b as usize]));
        idx
    }

    /// Item indices ordered by item id.
    pub fn sorted_item_indices(&self) -> Vec<u32> {
        let mut idx: Vec<u32> = (0..self.items.len() as u32).collect();
        idx.sort_by(|&a, &b| self.items[a as usize].cmp(&self.items[b as usize]));
        idx
    }

    /// Per-item vote counts: (agrees, disagrees, seen). Seen counts any
    /// recorded vote, passes included.
    pub fn item_counts(&self, item: &ItemId) -> Result<(u64, u64, u64)> {
        let i = self.item_index(item).ok_or_else(|| Error::UnknownItem {
            item: item.clone(),
        })?;
        let mut agrees = 0;
        let mut disagrees = 0;
        let mut seen = 0;
        for row in &self.rows {
            if let Some(&v) = row.get(&i) {
                seen += 1;
                match v {
                    VoteValue::Agree => agrees += 1,
                    VoteValue::Disagree => disagrees += 1,
                    VoteValue::Pass => {}
                }
            }
        }
        Ok((agrees, disagrees, seen))
    }
}

/// Serialization mirror: a matrix is stored as its record list plus any
/// vote-less people and items, preserving insertion order.
#[derive(Serialize, Deserialize)]
struct VoteMatrixRecords {
    people: Vec<PersonId>,
    items: Vec<ItemId>,
    votes: Vec<(PersonId, ItemId, i8)>,
}

impl From<VoteMatrix> for VoteMatrixRecords {
    fn from(m: VoteMatrix) -> Self {
        let votes = m
            .records()
            .map(|(p, i, v)| (p.clone(), i.clone(), v.as_i8()))
            .collect();
        VoteMatrixRecords {
            people: m.people.into_iter().collect(),
            items: m.items.into_iter().collect(),
            votes,
        }
    }
}

impl TryFrom<VoteMatrixRecords> for VoteMatrix {
    type Error = Error;

    fn try_from(records: VoteMatrixRecords) -> Result<Self> {
        let mut m = VoteMatrix::new();
        for person in records.people {
            m.register_person(person);
        }
        for item in records.items {
            m.register_item(item);
        }
        for (person, item, value) in records.votes {
            m.add_vote(person, item, VoteValue::from_i8(value)?)?;
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_rejected() {
        let err = VoteMatrix::from_records(Vec::<(&str, &str, i8)>::new()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput));
    }

    #[test]
    fn single_vote_matrix() {
        let m = VoteMatrix::from_records([("u1", "i1", 1)]).unwrap();
        assert_eq!(m.n_people(), 1);
        assert_eq!(m.n_items(), 1);
        assert_eq!(m.n_votes(), 1);
        assert_eq!(
            m.vote(&"u1".into(), &"i1".into()),
            Some(VoteValue::Agree)
        );
    }

    #[test]
    fn duplicate_votes_are_rejected() {
        let err = VoteMatrix::from_records([("u1", "i1", 1), ("u1", "i1", -1)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateVote { .. }));
    }

    #[test]
    fn out_of_range_value_is_rejected() {
        let err = VoteMatrix::from_records([("u1", "i1", 2)]).unwrap_err();
        assert!(matches!(err, Error::InvalidValue { value: 2 }));
    }

    #[test]
    fn pass_is_stored_and_counts_as_seen() {
        let m = VoteMatrix::from_records([("u1", "i1", 0), ("u2", "i1", 1)]).unwrap();
        assert_eq!(m.n_votes(), 2);
        assert_eq!(m.item_counts(&"i1".into()).unwrap(), (1, 0, 2));
    }

    #[test]
    fn insertion_order_is_preserved() {
        let m = VoteMatrix::from_records([("b", "y", 1), ("a", "x", -1)]).unwrap();
        let people: Vec<_> = m.people().map(|p| p.as_str()).collect();
        assert_eq!(people, ["b", "a"]);
        let sorted: Vec<_> = m
            .sorted_person_indices()
            .into_iter()
            .map(|i| m.person_at(i).as_str())
            .collect();
        assert_eq!(sorted, ["a", "b"]);
    }

    #[test]
    fn serde_round_trip_preserves_everything() {
        let mut m = VoteMatrix::from_records([("u1", "i1", 1), ("u2", "i1", 0)]).unwrap();
        m.register_item(ItemId::new("fresh"));
        let json = serde_json::to_string(&m).unwrap();
        let back: VoteMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n_people(), 2);
        assert_eq!(back.n_items(), 2);
        assert_eq!(back.n_votes(), 2);
        assert!(back.contains_item(&"fresh".into()));
    }
}
