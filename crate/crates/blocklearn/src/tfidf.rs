//! Corpus-level TF-IDF vectors for the textual attributes that cosine
//! predicates compare.
//!
//! Vectors are built once per record set and looked up by record id during
//! evaluation. Term weights use raw term frequency times a smoothed,
//! non-negative inverse document frequency, and every non-empty vector is
//! L2-normalized so the cosine of two vectors is a plain sparse dot
//! product in `[0, 1]`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RecordSet;
use crate::predicate::AttrKey;

/// Attributes that carry a tf-idf vector.
pub const VECTOR_KEYS: [AttrKey; 4] = [
    AttrKey::Title,
    AttrKey::Affiliation,
    AttrKey::Coauthors,
    AttrKey::Venue,
];

/// Sparse vector: strictly increasing term ids with their weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub terms: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product by merging the two sorted term lists.
    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.terms.len() && j < other.terms.len() {
            let (ta, wa) = self.terms[i];
            let (tb, wb) = other.terms[j];
            match ta.cmp(&tb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Split free text into lowercase alphanumeric runs.
///
/// Input is already normalized at load time; this only segments it.
pub fn tokenize_text(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct KeyModel {
    /// term -> id, ids assigned in first-encounter order over the corpus.
    vocab: HashMap<String, u32>,
    /// record id -> normalized vector.
    rows: HashMap<String, SparseVec>,
}

/// TF-IDF vectors for every record and vector-bearing attribute of one
/// corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfModel {
    keys: HashMap<AttrKey, KeyModel>,
    n_docs: usize,
}

impl TfidfModel {
    /// Build vectors for all of [`VECTOR_KEYS`] over a record set.
    pub fn build(records: &RecordSet) -> TfidfModel {
        let n = records.len();
        let mut keys = HashMap::new();
        for key in VECTOR_KEYS {
            // Tokenize every document once; coauthor lists keep each name
            // as a single token so "j smith" cannot collide with a title
            // word.
            let docs: Vec<Vec<String>> = records
                .records()
                .iter()
                .map(|r| match key {
                    AttrKey::Coauthors => {
                        r.coauthors.iter().filter(|c| !c.is_empty()).cloned().collect()
                    }
                    AttrKey::Title => tokenize_text(&r.title),
                    AttrKey::Affiliation => tokenize_text(&r.affiliation),
                    AttrKey::Venue => tokenize_text(&r.venue),
                    _ => unreachable!("non-vector key"),
                })
                .collect();

            let mut vocab: HashMap<String, u32> = HashMap::new();
            let mut df: Vec<u32> = Vec::new();
            for doc in &docs {
                let mut seen_in_doc: Vec<u32> = Vec::new();
                for tok in doc {
                    let next = vocab.len() as u32;
                    let id = *vocab.entry(tok.clone()).or_insert_with(|| {
                        df.push(0);
                        next
                    });
                    if !seen_in_doc.contains(&id) {
                        seen_in_doc.push(id);
                        df[id as usize] += 1;
                    }
                }
            }

            // Smoothed idf, clamped at zero: a term in every document is
            // uninformative, not negatively weighted, which keeps cosines
            // inside [0, 1].
            let idf: Vec<f64> = df
                .iter()
                .map(|&d| (n as f64 / (d as f64 + 1.0)).ln().max(0.0))
                .collect();

            let mut rows = HashMap::new();
            for (r, doc) in records.records().iter().zip(&docs) {
                let mut tf: HashMap<u32, f64> = HashMap::new();
                for tok in doc {
                    *tf.entry(vocab[tok]).or_insert(0.0) += 1.0;
                }
                let mut terms: Vec<(u32, f64)> = tf
                    .into_iter()
                    .map(|(id, f)| (id, f * idf[id as usize]))
                    .filter(|&(_, w)| w > 0.0)
                    .collect();
                terms.sort_unstable_by_key(|&(id, _)| id);
                let mut vec = SparseVec { terms };
                let norm = vec.norm();
                if norm > 0.0 {
                    for (_, w) in &mut vec.terms {
                        *w /= norm;
                    }
                } else {
                    vec.terms.clear();
                }
                rows.insert(r.id.clone(), vec);
            }
            keys.insert(key, KeyModel { vocab, rows });
        }
        TfidfModel { keys, n_docs: n }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn vocab_size(&self, key: AttrKey) -> usize {
        self.keys.get(&key).map_or(0, |k| k.vocab.len())
    }

    pub fn vector(&self, key: AttrKey, record_id: &str) -> Result<&SparseVec> {
        let key_model = self
            .keys
            .get(&key)
            .ok_or_else(|| Error::MissingTfidfKey(key.to_string()))?;
        key_model
            .rows
            .get(record_id)
            .ok_or_else(|| Error::UnknownId(record_id.to_string()))
    }

    /// Cosine similarity of two records on one attribute. Vectors are unit
    /// length, so this is their dot product; an all-empty or
    /// all-uninformative document has a zero vector and cosine 0 with
    /// everything, including itself.
    pub fn cosine(&self, key: AttrKey, id_a: &str, id_b: &str) -> Result<f64> {
        let va = self.vector(key, id_a)?;
        let vb = self.vector(key, id_b)?;
        Ok(va.dot(vb).clamp(0.0, 1.0))
    }
}
