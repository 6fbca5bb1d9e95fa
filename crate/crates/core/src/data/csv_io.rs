use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;

use super::{DatabaseName, VowelDatabase, VowelRecord};
use crate::error::{Error, Result};
use crate::model::Category;

pub(crate) const HEADER: [&str; 7] = [
    "speaker_id",
    "category",
    "vowel",
    "repetition",
    "F1",
    "F2",
    "F3",
];

/// A data row left out of the database.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: usize,
    pub speaker_id: String,
    pub vowel: String,
    pub reason: String,
}

/// A parsed database plus everything that was left out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub database: VowelDatabase,
    /// Rows with a zero formant.
    pub rejected_rows: Vec<RejectedRow>,
    /// Speakers dropped because a rejection left them without some vowel.
    pub dropped_speakers: Vec<String>,
}

/// Parses the normalized schema
/// `speaker_id,category,vowel,repetition,F1,F2,F3`.
///
/// Lines starting with `#` are comments. Rows with a formant equal to
/// zero (unmeasured) are rejected and reported; a speaker who loses a
/// vowel that way is dropped entirely.
pub fn parse_database<R: Read>(reader: R, name: DatabaseName) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header_line = rdr.position().line().max(1) as usize;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: header_line,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            line: header_line,
            message: format!(
                "expected header `{}`, got `{}`",
                HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    let mut rejected_rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let perr = |message: String| Error::Parse { line, message };
        if row.len() != HEADER.len() {
            return Err(perr(format!(
                "expected {} fields, found {}",
                HEADER.len(),
                row.len()
            )));
        }
        let speaker_id = row[0].to_string();
        let category: Category = row[1].parse().map_err(|e: Error| perr(e.to_string()))?;
        let vowel = row[2].to_string();
        let repetition: u32 = row[3]
            .parse()
            .map_err(|_| perr(format!("bad repetition `{}`", &row[3])))?;
        let mut formants = [0.0; 3];
        for k in 0..3 {
            let v: f64 = row[4 + k]
                .parse()
                .map_err(|_| perr(format!("bad F{} value `{}`", k + 1, &row[4 + k])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(perr(format!(
                    "F{} must be a non-negative number, got `{}`",
                    k + 1,
                    &row[4 + k]
                )));
            }
            formants[k] = v;
        }
        if let Some(k) = formants.iter().position(|&f| f == 0.0) {
            let reason = format!("F{} is zero", k + 1);
            warn!("line {line}: rejected speaker `{speaker_id}` vowel `{vowel}`: {reason}");
            rejected_rows.push(RejectedRow {
                line,
                speaker_id,
                vowel,
                reason,
            });
            continue;
        }
        records.push(VowelRecord {
            speaker_id,
            category,
            vowel,
            repetition,
            formants,
        });
    }

    // speakers who lost a vowel to a rejection no longer cover the set
    let vowels: BTreeSet<&str> = records.iter().map(|r| r.vowel.as_str()).collect();
    let mut covered: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &records {
        covered
            .entry(r.speaker_id.as_str())
            .or_default()
            .insert(r.vowel.as_str());
    }
    let mut dropped: BTreeSet<String> = covered
        .iter()
        .filter(|(_, vs)| vs.len() < vowels.len())
        .map(|(s, _)| s.to_string())
        .collect();
    for r in &rejected_rows {
        if !covered.contains_key(r.speaker_id.as_str()) {
            dropped.insert(r.speaker_id.clone());
        }
    }
    for s in &dropped {
        warn!("dropped speaker `{s}`: incomplete vowel set");
    }
    records.retain(|r| !dropped.contains(&r.speaker_id));
    let database = VowelDatabase::new(name, records)?;
    Ok(LoadReport {
        database,
        rejected_rows,
        dropped_speakers: dropped.into_iter().collect(),
    })
}

/// [`parse_database`] on a file.
pub fn load_database_report(path: &Path, name: DatabaseName) -> Result<LoadReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_database(std::io::BufReader::new(file), name)
}

/// Loads a database, logging (not returning) rejections.
pub fn load_database(path: &Path, name: DatabaseName) -> Result<VowelDatabase> {
    Ok(load_database_report(path, name)?.database)
}

/// Writes the normalized schema with shortest round-trip float output.
pub fn write_database<W: Write>(mut w: W, db: &VowelDatabase) -> std::io::Result<()> {
    writeln!(w, "{}", HEADER.join(","))?;
    for r in db.records() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.speaker_id,
            r.category,
            r.vowel,
            r.repetition,
            r.formants[0],
            r.formants[1],
            r.formants[2]
        )?;
    }
    Ok(())
}
