//! File formats: vote CSV ingestion and the CSV/JSON export schemas.
//!
//! Vote CSV: header `person_id,item_id,vote` with vote in {-1, 0, 1}, UTF-8,
//! LF line endings. Schema violations report the offending 1-based line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ids::{ItemId, PersonId};
use crate::signals::SignalVector;
use crate::vote::VoteMatrix;

fn schema_error(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Schema {
        file: file.display().to_string(),
        line,
        message: message.into(),
    }
}

fn check_id(file: &Path, line: u64, field: &str, value: &str) -> Result<()> {
    if value.is_empty() {
        return Err(schema_error(file, line, format!("empty {field}")));
    }
    if value.contains([',', '\n', '\r']) {
        return Err(schema_error(
            file,
            line,
            format!("{field} {value:?} contains a separator character"),
        ));
    }
    Ok(())
}

/// Parses a vote CSV from a string. `source` is used in error messages.
pub fn parse_votes_csv(content: &str, source: &Path) -> Result<VoteMatrix> {
    let mut lines = content.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| schema_error(source, 1, "empty file"))?;
    if header.1.trim_end() != "person_id,item_id,vote" {
        return Err(schema_error(
            source,
            1,
            format!("expected header person_id,item_id,vote, got {:?}", header.1),
        ));
    }
    let mut matrix = VoteMatrix::new();
    let mut saw_record = false;
    for (idx, raw) in lines {
        let line_no = idx as u64 + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (person, item, vote) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(p), Some(i), Some(v), None) => (p, i, v),
            _ => {
                return Err(schema_error(
                    source,
                    line_no,
                    format!("expected 3 fields, got {:?}", line),
                ))
            }
        };
        check_id(source, line_no, "person_id", person)?;
        check_id(source, line_no, "item_id", item)?;
        let value: i8 = vote.trim().parse().map_err(|_| {
            schema_error(source, line_no, format!("invalid vote value {vote:?}"))
        })?;
        let value = crate::vote::VoteValue::from_i8(value)
            .map_err(|e| schema_error(source, line_no, e.to_string()))?;
        matrix
            .add_vote(person.into(), item.into(), value)
            .map_err(|e| schema_error(source, line_no, e.to_string()))?;
        saw_record = true;
    }
    if !saw_record {
        return Err(schema_error(source, 1, "no vote records (EmptyInput)"));
    }
    Ok(matrix)
}

/// Reads a vote CSV file.
pub fn read_votes_csv(path: &Path) -> Result<VoteMatrix> {
    let content = std::fs::read_to_string(path)?;
    parse_votes_csv(&content, path)
}

/// Serializes a matrix to vote CSV (insertion order, LF line endings).
pub fn write_votes_csv(matrix: &VoteMatrix) -> String {
    let mut out = String::from("person_id,item_id,vote\n");
    for (person, item, value) in matrix.records() {
        let _ = writeln!(out, "{person},{item},{}", value.as_i8());
    }
    out
}

/// Parses an authorship CSV with header `item_id,person_id`.
pub fn parse_authors_csv(content: &str, source: &Path) -> Result<BTreeMap<ItemId, PersonId>> {
    let mut lines = content.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| schema_error(source, 1, "empty file"))?;
    if header.1.trim_end() != "item_id,person_id" {
        return Err(schema_error(
            source,
            1,
            format!("expected header item_id,person_id, got {:?}", header.1),
        ));
    }
    let mut authors = BTreeMap::new();
    for (idx, raw) in lines {
        let line_no = idx as u64 + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (item, person) = match (fields.next(), fields.next(), fields.next()) {
            (Some(i), Some(p), None) => (i, p),
            _ => {
                return Err(schema_error(
                    source,
                    line_no,
                    format!("expected 2 fields, got {:?}", line),
                ))
            }
        };
        check_id(source, line_no, "item_id", item)?;
        check_id(source, line_no, "person_id", person)?;
        if authors.insert(ItemId::new(item), PersonId::new(person)).is_some() {
            return Err(schema_error(
                source,
                line_no,
                format!("duplicate author entry for item {item}"),
            ));
        }
    }
    Ok(authors)
}

/// Signal export, CSV flavor: `item_id,engagement,diverse_approval,gac,`
/// `mf_intercept,bimodality` sorted by item id. An unavailable bimodality
/// (degenerate rating distribution) leaves the field empty.
pub fn write_signals_csv(signals: &BTreeMap<ItemId, SignalVector>) -> String {
    let mut out = String::from("item_id,engagement,diverse_approval,gac,mf_intercept,bimodality\n");
    for (item, vector) in signals {
        let bimodality = vector
            .bimodality
            .map(|b| format!("{b}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{item},{},{},{},{},{bimodality}",
            vector.engagement, vector.diverse_approval, vector.gac, vector.mf_intercept
        );
    }
    out
}
