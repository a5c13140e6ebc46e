//! Author-mention records, record pairs, and labeled pair sets.
//!
//! A corpus is a [`RecordSet`] of author mentions loaded from JSONL or CSV.
//! Pairs of records are the unit of supervision: a [`LabeledPairSet`] holds
//! the positive (same author) and negative (different author) pairs, either
//! read from a labels file or derived from a truth attribute.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// One author mention: a (paper, author slot) observation.
///
/// Only `id` and `last_name` are mandatory in input files; every other
/// attribute may be empty or absent. `truth_id` identifies the real author
/// when ground truth is known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    #[serde(default)]
    pub first_name: String,
    #[serde(default)]
    pub middle_name: String,
    pub last_name: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub affiliation: String,
    #[serde(default)]
    pub coauthors: Vec<String>,
    #[serde(default = "default_position")]
    pub author_position: u32,
    #[serde(default = "default_position")]
    pub author_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub venue: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_id: Option<String>,
}

fn default_position() -> u32 {
    1
}

/// Input file layout for [`load_records`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

/// How loaded attribute text is normalized before comparison.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Apply NFC normalization, trimming, and case folding to every text
    /// attribute. On by default; comparisons elsewhere assume it ran.
    pub normalize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { normalize: true }
    }
}

/// NFC-normalize, trim, and case-fold one attribute value.
pub fn normalize_text(s: &str) -> String {
    s.nfc().collect::<String>().trim().to_lowercase()
}

/// Attribute coverage of a corpus: what fraction of mentions carry each
/// field, plus the share of first names that are bare initials. Rates are
/// `NaN` for an empty corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordStats {
    pub total: usize,
    pub first_name_coverage: f64,
    pub first_initial_only_rate: f64,
    pub middle_name_coverage: f64,
    pub affiliation_coverage: f64,
    pub year_coverage: f64,
    pub title_coverage: f64,
    pub venue_coverage: f64,
    pub coauthors_coverage: f64,
}

impl RecordStats {
    fn compute(records: &[Record]) -> RecordStats {
        let total = records.len();
        let frac = |count: usize| {
            if total == 0 {
                f64::NAN
            } else {
                count as f64 / total as f64
            }
        };
        RecordStats {
            total,
            first_name_coverage: frac(records.iter().filter(|r| !r.first_name.is_empty()).count()),
            first_initial_only_rate: frac(
                records
                    .iter()
                    .filter(|r| r.first_name.chars().count() == 1)
                    .count(),
            ),
            middle_name_coverage: frac(
                records.iter().filter(|r| !r.middle_name.is_empty()).count(),
            ),
            affiliation_coverage: frac(
                records.iter().filter(|r| !r.affiliation.is_empty()).count(),
            ),
            year_coverage: frac(records.iter().filter(|r| r.year.is_some()).count()),
            title_coverage: frac(records.iter().filter(|r| !r.title.is_empty()).count()),
            venue_coverage: frac(records.iter().filter(|r| !r.venue.is_empty()).count()),
            coauthors_coverage: frac(records.iter().filter(|r| !r.coauthors.is_empty()).count()),
        }
    }

    /// Human-readable coverage report.
    pub fn render(&self) -> String {
        let pct = |v: f64| {
            if v.is_nan() {
                "n/a".to_string()
            } else {
                format!("{:.1}%", v * 100.0)
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "records:            {}", self.total);
        let _ = writeln!(out, "first name present: {}", pct(self.first_name_coverage));
        let _ = writeln!(
            out,
            "first initial only: {}",
            pct(self.first_initial_only_rate)
        );
        let _ = writeln!(out, "middle name present:{}", pct(self.middle_name_coverage));
        let _ = writeln!(out, "affiliation present:{}", pct(self.affiliation_coverage));
        let _ = writeln!(out, "year present:       {}", pct(self.year_coverage));
        let _ = writeln!(out, "title present:      {}", pct(self.title_coverage));
        let _ = writeln!(out, "venue present:      {}", pct(self.venue_coverage));
        let _ = writeln!(out, "coauthors present:  {}", pct(self.coauthors_coverage));
        out
    }
}

/// An indexed, validated corpus of author mentions.
///
/// Record order is the load order; pairs and tf-idf rows refer to records by
/// their position in that order.
#[derive(Debug, Clone)]
pub struct RecordSet {
    records: Vec<Record>,
    index: HashMap<String, u32>,
    stats: RecordStats,
}

impl RecordSet {
    /// Validate and index a list of records.
    ///
    /// Rejects duplicate or empty ids, empty last names, and author
    /// positions outside `1..=author_count`.
    pub fn from_records(records: Vec<Record>) -> Result<RecordSet> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.id.is_empty() {
                return Err(Error::InvalidRecord {
                    id: format!("#{i}"),
                    msg: "empty id".into(),
                });
            }
            if r.last_name.is_empty() {
                return Err(Error::InvalidRecord {
                    id: r.id.clone(),
                    msg: "empty last name".into(),
                });
            }
            if r.author_position == 0 || r.author_count == 0 || r.author_position > r.author_count
            {
                return Err(Error::InvalidRecord {
                    id: r.id.clone(),
                    msg: format!(
                        "author position {} out of range 1..={}",
                        r.author_position, r.author_count
                    ),
                });
            }
            if index.insert(r.id.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        let stats = RecordStats::compute(&records);
        Ok(RecordSet {
            records,
            index,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn get(&self, idx: u32) -> &Record {
        &self.records[idx as usize]
    }

    pub fn id_of(&self, idx: u32) -> &str {
        &self.records[idx as usize].id
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn stats(&self) -> &RecordStats {
        &self.stats
    }

    /// All unordered record pairs, streamed in canonical `(i, j)` order with
    /// `i < j`. Yields exactly `n (n - 1) / 2` pairs.
    pub fn enumerate_pairs(&self) -> impl Iterator<Item = RecordPair> + '_ {
        let n = self.records.len() as u32;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| RecordPair { left: i, right: j }))
    }

    /// Serialize the corpus back to JSONL, one record per line in set order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            // In-memory records always serialize cleanly.
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

/// Number of unordered pairs over `n` records.
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * (n.saturating_sub(1)) / 2
}

fn normalize_record(mut r: Record) -> Record {
    r.first_name = normalize_text(&r.first_name);
    r.middle_name = normalize_text(&r.middle_name);
    r.last_name = normalize_text(&r.last_name);
    r.title = normalize_text(&r.title);
    r.affiliation = normalize_text(&r.affiliation);
    r.venue = normalize_text(&r.venue);
    r.coauthors = r
        .coauthors
        .iter()
        .map(|c| normalize_text(c))
        .filter(|c| !c.is_empty())
        .collect();
    r
}

/// Load a corpus from `path` with default normalization.
pub fn load_records(path: &Path, format: RecordFormat) -> Result<RecordSet> {
    load_records_opts(path, format, &LoadOptions::default())
}

/// Load a corpus, controlling text normalization explicitly.
pub fn load_records_opts(
    path: &Path,
    format: RecordFormat,
    opts: &LoadOptions,
) -> Result<RecordSet> {
    let raw = fs::read_to_string(path)?;
    let records = match format {
        RecordFormat::Jsonl => parse_jsonl(&raw, path)?,
        RecordFormat::Csv => parse_csv(&raw, path)?,
    };
    let records = if opts.normalize {
        records.into_iter().map(normalize_record).collect()
    } else {
        records
    };
    RecordSet::from_records(records)
}

fn parse_jsonl(raw: &str, path: &Path) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

/// CSV record rows use the same keys as JSONL for headers; `coauthors` is a
/// `;`-joined list, and an empty `year`/`truth_id` cell means absent.
fn parse_csv(raw: &str, path: &Path) -> Result<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: format!("missing column `{name}`"),
        })
    };
    let c_id = need("id")?;
    let c_last = need("last_name")?;
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let lineno = i + 2;
        let row = row.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg: e.to_string(),
        })?;
        let cell = |c: Option<usize>| c.and_then(|c| row.get(c)).unwrap_or("").to_string();
        let parse_u32 = |c: Option<usize>, name: &str| -> Result<u32> {
            let v = c.and_then(|c| row.get(c)).unwrap_or("");
            if v.is_empty() {
                return Ok(1);
            }
            v.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno,
                msg: format!("invalid `{name}`: {v}"),
            })
        };
        let year_raw = cell(col("year"));
        let year = if year_raw.is_empty() {
            None
        } else {
            Some(year_raw.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno,
                msg: format!("invalid `year`: {year_raw}"),
            })?)
        };
        let truth_raw = cell(col("truth_id"));
        records.push(Record {
            id: row.get(c_id).unwrap_or("").to_string(),
            first_name: cell(col("first_name")),
            middle_name: cell(col("middle_name")),
            last_name: row.get(c_last).unwrap_or("").to_string(),
            title: cell(col("title")),
            affiliation: cell(col("affiliation")),
            coauthors: cell(col("coauthors"))
                .split(';')
                .map(str::to_string)
                .filter(|s| !s.is_empty())
                .collect(),
            author_position: parse_u32(col("author_position"), "author_position")?,
            author_count: parse_u32(col("author_count"), "author_count")?,
            year,
            venue: cell(col("venue")),
            truth_id: if truth_raw.is_empty() {
                None
            } else {
                Some(truth_raw)
            },
        });
    }
    Ok(records)
}

/// An unordered pair of records, stored as canonical set indices with
/// `left < right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordPair {
    left: u32,
    right: u32,
}

impl RecordPair {
    /// Canonicalize two distinct indices into a pair; `None` when equal.
    pub fn new(a: u32, b: u32) -> Option<RecordPair> {
        if a == b {
            None
        } else {
            Some(RecordPair {
                left: a.min(b),
                right: a.max(b),
            })
        }
    }

    pub fn left(&self) -> u32 {
        self.left
    }

    pub fn right(&self) -> u32 {
        self.right
    }
}

/// Positive and negative record pairs over one corpus.
///
/// Both lists are sorted and deduplicated, and never overlap. Indices refer
/// to the bound [`RecordSet`]'s order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPairSet {
    positives: Vec<RecordPair>,
    negatives: Vec<RecordPair>,
}

impl LabeledPairSet {
    /// Sort, deduplicate, and validate the two pair lists against a corpus
    /// of `n_records` records.
    pub fn new(
        mut positives: Vec<RecordPair>,
        mut negatives: Vec<RecordPair>,
        n_records: usize,
    ) -> Result<LabeledPairSet> {
        positives.sort_unstable();
        positives.dedup();
        negatives.sort_unstable();
        negatives.dedup();
        for p in positives.iter().chain(negatives.iter()) {
            if p.right as usize >= n_records {
                return Err(Error::UnknownId(format!("#{}", p.right)));
            }
        }
        // The lists are sorted, so one merge pass finds any overlap.
        let (mut i, mut j) = (0, 0);
        while i < positives.len() && j < negatives.len() {
            match positives[i].cmp(&negatives[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    return Err(Error::ConflictingLabel(
                        format!("#{}", positives[i].left),
                        format!("#{}", positives[i].right),
                    ))
                }
            }
        }
        Ok(LabeledPairSet {
            positives,
            negatives,
        })
    }

    pub fn positives(&self) -> &[RecordPair] {
        &self.positives
    }

    pub fn negatives(&self) -> &[RecordPair] {
        &self.negatives
    }

    pub fn is_positive(&self, p: &RecordPair) -> bool {
        self.positives.binary_search(p).is_ok()
    }

    pub fn is_negative(&self, p: &RecordPair) -> bool {
        self.negatives.binary_search(p).is_ok()
    }

    /// Keep all positives and a deterministic sample of `fraction` of the
    /// negatives. The result is for learner scalability only; evaluation
    /// should still use the full set.
    pub fn subsample_negatives(&self, fraction: f64, seed: u64) -> LabeledPairSet {
        use rand::SeedableRng;
        let fraction = fraction.clamp(0.0, 1.0);
        let keep = ((self.negatives.len() as f64) * fraction).round() as usize;
        if keep >= self.negatives.len() {
            return self.clone();
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, self.negatives.len(), keep).into_vec();
        idx.sort_unstable();
        LabeledPairSet {
            positives: self.positives.clone(),
            negatives: idx.into_iter().map(|i| self.negatives[i]).collect(),
        }
    }
}

/// Parse a `left_id,right_id,label` CSV into a labeled pair set.
///
/// Duplicate lines with the same label collapse; the same pair under both
/// labels is an error, as are unknown ids and self pairs. An optional
/// header line is skipped.
pub fn load_labeled_pairs(path: &Path, records: &RecordSet) -> Result<LabeledPairSet> {
    let raw = fs::read_to_string(path)?;
    let mut labels: HashMap<RecordPair, bool> = HashMap::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "left_id,right_id,label") {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b, l) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(l), None) => (a.trim(), b.trim(), l.trim()),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: "expected `left_id,right_id,label`".into(),
                })
            }
        };
        let label = match l {
            "0" => false,
            "1" => true,
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("label must be 0 or 1, got `{l}`"),
                })
            }
        };
        let ia = records
            .index_of(a)
            .ok_or_else(|| Error::UnknownId(a.to_string()))?;
        let ib = records
            .index_of(b)
            .ok_or_else(|| Error::UnknownId(b.to_string()))?;
        let pair = RecordPair::new(ia, ib).ok_or_else(|| Error::SelfPair(a.to_string()))?;
        if let Some(prev) = labels.insert(pair, label) {
            if prev != label {
                return Err(Error::ConflictingLabel(a.to_string(), b.to_string()));
            }
        }
    }
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (pair, label) in labels {
        if label {
            positives.push(pair);
        } else {
            negatives.push(pair);
        }
    }
    LabeledPairSet::new(positives, negatives, records.len())
}

/// Label every pair of the corpus by agreement on a truth attribute.
///
/// `truth_key` is usually `truth_id`; any schema field with a non-empty
/// rendering works (useful for smoke tests). Every record must carry the
/// field.
pub fn labels_from_truth(records: &RecordSet, truth_key: &str) -> Result<LabeledPairSet> {
    let truth: Vec<&str> = records
        .records()
        .iter()
        .map(|r| -> Result<&str> {
            let v: Option<&str> = match truth_key {
                "truth_id" => r.truth_id.as_deref(),
                "id" => Some(r.id.as_str()),
                "first_name" => Some(r.first_name.as_str()),
                "middle_name" => Some(r.middle_name.as_str()),
                "last_name" => Some(r.last_name.as_str()),
                "title" => Some(r.title.as_str()),
                "affiliation" => Some(r.affiliation.as_str()),
                "venue" => Some(r.venue.as_str()),
                _ => return Err(Error::UnknownTruthKey(truth_key.to_string())),
            };
            match v {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::MissingTruth {
                    id: r.id.clone(),
                    key: truth_key.to_string(),
                }),
            }
        })
        .collect::<Result<_>>()?;

    let n = records.len();
    let total = pair_count(n) as usize;
    let mut positives = Vec::new();
    let mut negatives = Vec::with_capacity(total);
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            let pair = RecordPair { left: i, right: j };
            if truth[i as usize] == truth[j as usize] {
                positives.push(pair);
            } else {
                negatives.push(pair);
            }
        }
    }
    // Enumeration order is already sorted and unique.
    Ok(LabeledPairSet {
        positives,
        negatives,
    })
}

/// Write candidate pairs as `left_id,right_id` CSV (with header).
pub fn write_pairs_csv(path: &Path, pairs: &[RecordPair], records: &RecordSet) -> Result<()> {
    let mut out = String::from("left_id,right_id\n");
    for p in pairs {
        let _ = writeln!(out, "{},{}", records.id_of(p.left()), records.id_of(p.right()));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a `left_id,right_id` CSV (optional header) into canonical pairs.
pub fn load_pairs_csv(path: &Path, records: &RecordSet) -> Result<Vec<RecordPair>> {
    let raw = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "left_id,right_id") {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: "expected `left_id,right_id`".into(),
                })
            }
        };
        let ia = records
            .index_of(a)
            .ok_or_else(|| Error::UnknownId(a.to_string()))?;
        let ib = records
            .index_of(b)
            .ok_or_else(|| Error::UnknownId(b.to_string()))?;
        let pair = RecordPair::new(ia, ib).ok_or_else(|| Error::SelfPair(a.to_string()))?;
        pairs.push(pair);
    }
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs)
}
