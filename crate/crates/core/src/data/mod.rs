//! Vowel formant databases: the normalized CSV schema, formant-vector
//! construction and synthetic data.

mod csv_io;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub use csv_io::{
    load_database, load_database_report, parse_database, write_database, LoadReport, RejectedRow,
};
pub use synthetic::{
    generate_synthetic, read_truth_sidecar, synthetic_vowel_database, template_vector,
    write_truth_sidecar, SyntheticDatabaseConfig, SyntheticTruth, TEMPLATE_FORMANTS,
};

use crate::error::{Error, Result};
use crate::model::{Category, FormantVector, MAX_FORMANT_HZ};

/// Which corpus a database holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatabaseName {
    PnB,
    Hil,
    Synthetic,
}

impl fmt::Display for DatabaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatabaseName::PnB => "PnB",
            DatabaseName::Hil => "Hil",
            DatabaseName::Synthetic => "Synthetic",
        })
    }
}

impl FromStr for DatabaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pnb" => Ok(DatabaseName::PnB),
            "hil" => Ok(DatabaseName::Hil),
            "synthetic" => Ok(DatabaseName::Synthetic),
            _ => Err(Error::invalid(format!(
                "unknown database `{s}` (expected pnb, hil or synthetic)"
            ))),
        }
    }
}

/// One vowel token: a row of the CSV schema.
#[derive(Debug, Clone, PartialEq)]
pub struct VowelRecord {
    pub speaker_id: String,
    pub category: Category,
    pub vowel: String,
    pub repetition: u32,
    /// F1, F2, F3 in Hz.
    pub formants: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct VowelDatabase {
    pub name: DatabaseName,
    records: Vec<VowelRecord>,
}

/// How repeated tokens of a vowel enter a speaker's formant vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepetitionPolicy {
    /// Average the repetitions of each vowel.
    #[default]
    MeanOfRepetitions,
    /// Keep every repetition, labelled `vowel#rep`.
    EachRepetition,
}

impl FromStr for RepetitionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(RepetitionPolicy::MeanOfRepetitions),
            "each" => Ok(RepetitionPolicy::EachRepetition),
            _ => Err(Error::invalid(format!(
                "unknown repetition policy `{s}` (expected mean or each)"
            ))),
        }
    }
}

impl VowelDatabase {
    /// Validates every record: positive plausible formants, non-empty ids,
    /// one category per speaker and no duplicate `(speaker, vowel, rep)`.
    pub fn new(name: DatabaseName, records: Vec<VowelRecord>) -> Result<Self> {
        let mut cats: BTreeMap<&str, Category> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.speaker_id.is_empty() || r.vowel.is_empty() {
                return Err(Error::invalid(
                    "speaker id and vowel label must be non-empty",
                ));
            }
            if r.vowel.contains('#') || r.vowel.contains('/') {
                return Err(Error::invalid(format!(
                    "vowel label `{}` may not contain `#` or `/`",
                    r.vowel
                )));
            }
            for (k, &f) in r.formants.iter().enumerate() {
                if !(f > 0.0 && f <= MAX_FORMANT_HZ) {
                    return Err(Error::invalid(format!(
                        "speaker `{}` vowel `{}` F{} = {f} Hz is outside (0, {MAX_FORMANT_HZ}]",
                        r.speaker_id,
                        r.vowel,
                        k + 1
                    )));
                }
            }
            if let Some(c) = cats.insert(&r.speaker_id, r.category) {
                if c != r.category {
                    return Err(Error::invalid(format!(
                        "speaker `{}` appears with two categories",
                        r.speaker_id
                    )));
                }
            }
            if !seen.insert((&r.speaker_id, &r.vowel, r.repetition)) {
                return Err(Error::invalid(format!(
                    "duplicate record for speaker `{}` vowel `{}` repetition {}",
                    r.speaker_id, r.vowel, r.repetition
                )));
            }
        }
        Ok(VowelDatabase { name, records })
    }

    pub fn records(&self) -> &[VowelRecord] {
        &self.records
    }

    /// Speakers in order of first appearance.
    pub fn speakers(&self) -> Vec<(String, Category)> {
        let mut seen = BTreeSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.speaker_id.as_str()))
            .map(|r| (r.speaker_id.clone(), r.category))
            .collect()
    }

    pub fn speaker_count(&self, category: Category) -> usize {
        self.speakers()
            .iter()
            .filter(|(_, c)| *c == category)
            .count()
    }

    /// Sorted vowel labels present anywhere in the database.
    pub fn vowels(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| r.vowel.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn records_of<'a>(
        &'a self,
        speaker_id: &'a str,
    ) -> impl Iterator<Item = &'a VowelRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.speaker_id == speaker_id)
    }

    /// Only the listed speakers.
    pub fn subset(&self, keep: impl Fn(&str, Category) -> bool) -> VowelDatabase {
        VowelDatabase {
            name: self.name,
            records: self
                .records
                .iter()
                .filter(|r| keep(&r.speaker_id, r.category))
                .cloned()
                .collect(),
        }
    }
}

/// One formant vector per speaker, in speaker order.
///
/// Every speaker must cover every vowel of the database (and, for
/// [`RepetitionPolicy::EachRepetition`], every repetition index seen in
/// the database).
pub fn build_formant_vectors(
    db: &VowelDatabase,
    policy: RepetitionPolicy,
) -> Result<Vec<FormantVector>> {
    let vowels = db.vowels();
    let reps: BTreeSet<u32> = db.records().iter().map(|r| r.repetition).collect();
    db.speakers()
        .into_iter()
        .map(|(id, cat)| speaker_vector(db, &id, cat, &vowels, &reps, policy))
        .collect()
}

/// Inverse of [`build_formant_vectors`]: one record per vowel (labels of
/// the form `vowel#rep` give the repetition, otherwise 1).
pub fn vectors_to_database(name: DatabaseName, vectors: &[FormantVector]) -> Result<VowelDatabase> {
    let mut records = Vec::new();
    for v in vectors {
        let mut by_label: BTreeMap<&str, [f64; 3]> = BTreeMap::new();
        for (slot, &f) in v.slots().iter().zip(v.values()) {
            by_label.entry(&slot.vowel).or_insert([0.0; 3])[slot.formant as usize - 1] = f;
        }
        for (label, formants) in by_label {
            if let Some(k) = formants.iter().position(|&f| f == 0.0) {
                return Err(Error::MissingVowel {
                    speaker: v.speaker_id().to_string(),
                    vowel: format!("{label}/F{}", k + 1),
                });
            }
            let (vowel, repetition) = match label.split_once('#') {
                Some((vw, rep)) => (
                    vw,
                    rep.parse().map_err(|_| {
                        Error::invalid(format!("bad repetition suffix in `{label}`"))
                    })?,
                ),
                None => (label, 1),
            };
            records.push(VowelRecord {
                speaker_id: v.speaker_id().to_string(),
                category: v.category(),
                vowel: vowel.to_string(),
                repetition,
                formants,
            });
        }
    }
    VowelDatabase::new(name, records)
}

fn speaker_vector(
    db: &VowelDatabase,
    id: &str,
    cat: Category,
    vowels: &[String],
    reps: &BTreeSet<u32>,
    policy: RepetitionPolicy,
) -> Result<FormantVector> {
    let mut by_vowel: BTreeMap<&str, Vec<&VowelRecord>> = BTreeMap::new();
    for r in db.records_of(id) {
        by_vowel.entry(r.vowel.as_str()).or_default().push(r);
    }
    let mut entries = Vec::with_capacity(vowels.len() * 3);
    for v in vowels {
        let tokens = by_vowel
            .get(v.as_str())
            .ok_or_else(|| Error::MissingVowel {
                speaker: id.to_string(),
                vowel: v.clone(),
            })?;
        match policy {
            RepetitionPolicy::MeanOfRepetitions => {
                let m = tokens.len() as f64;
                for k in 0..3 {
                    let mean = tokens.iter().map(|t| t.formants[k]).sum::<f64>() / m;
                    entries.push((v.clone(), k as u8 + 1, mean));
                }
            }
            RepetitionPolicy::EachRepetition => {
                for &rep in reps {
                    let t = tokens.iter().find(|t| t.repetition == rep).ok_or_else(|| {
                        Error::MissingVowel {
                            speaker: id.to_string(),
                            vowel: format!("{v}#{rep}"),
                        }
                    })?;
                    for k in 0..3 {
                        entries.push((format!("{v}#{rep}"), k as u8 + 1, t.formants[k]));
                    }
                }
            }
        }
    }
    FormantVector::new(id, cat, entries)
}
