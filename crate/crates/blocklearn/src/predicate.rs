//! Blocking predicates: similarity criteria applied to record attributes.
//!
//! A [`BlockingPredicate`] pairs an attribute key with a similarity
//! criterion and evaluates to a boolean on a record pair. Predicates whose
//! criterion induces an equivalence relation ("non-relative" ones) also map
//! each record to a [`canonical_key`], so equal keys and pairwise truth
//! coincide — the property that makes hash-partition blocking possible.

use std::cell::Cell;
use std::collections::HashSet;
use std::fmt;

use ordered_float::NotNan;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Record;
use crate::tfidf::TfidfModel;

/// Record attribute a predicate reads. `Order` is derived from the author
/// position and count rather than stored text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKey {
    FirstName,
    MiddleName,
    LastName,
    Title,
    Affiliation,
    Coauthors,
    Order,
    Year,
    Venue,
}

impl AttrKey {
    pub fn short_name(&self) -> &'static str {
        match self {
            AttrKey::FirstName => "fn",
            AttrKey::MiddleName => "mn",
            AttrKey::LastName => "ln",
            AttrKey::Title => "title",
            AttrKey::Affiliation => "affil",
            AttrKey::Coauthors => "coauth",
            AttrKey::Order => "order",
            AttrKey::Year => "year",
            AttrKey::Venue => "venue",
        }
    }

    pub fn from_short_name(s: &str) -> Option<AttrKey> {
        Some(match s {
            "fn" => AttrKey::FirstName,
            "mn" => AttrKey::MiddleName,
            "ln" => AttrKey::LastName,
            "title" => AttrKey::Title,
            "affil" => AttrKey::Affiliation,
            "coauth" => AttrKey::Coauthors,
            "order" => AttrKey::Order,
            "year" => AttrKey::Year,
            "venue" => AttrKey::Venue,
            _ => return None,
        })
    }

    pub fn is_name(&self) -> bool {
        matches!(
            self,
            AttrKey::FirstName | AttrKey::MiddleName | AttrKey::LastName
        )
    }

    /// Keys whose value is a plain text field.
    pub fn is_text(&self) -> bool {
        !matches!(self, AttrKey::Coauthors | AttrKey::Order | AttrKey::Year)
    }

    fn text_value<'r>(&self, r: &'r Record) -> &'r str {
        match self {
            AttrKey::FirstName => &r.first_name,
            AttrKey::MiddleName => &r.middle_name,
            AttrKey::LastName => &r.last_name,
            AttrKey::Title => &r.title,
            AttrKey::Affiliation => &r.affiliation,
            AttrKey::Venue => &r.venue,
            _ => "",
        }
    }
}

impl fmt::Display for AttrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// How two attribute values are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimilarityCriterion {
    /// Full equality. On the year key, absent years never match.
    Exact,
    /// Equality of the first `n` characters; strings shorter than `n`
    /// contribute their full text.
    FirstN { n: u32 },
    /// Equality of the last `n` characters, same short-string rule.
    LastN { n: u32 },
    /// Same author-slot class: first author, last author, or interior.
    Order,
    /// Equality of the first `n` digits of the year; false when either year
    /// is absent.
    DigitN { n: u32 },
    /// Years within `max` of each other; false when either is absent.
    YearDiff { max: u32 },
    /// True when either value is empty, else exact equality.
    Compatible,
    /// Name-aware compatibility: empty always matches; two full names must
    /// be equal; a bare initial matches on the first character.
    NameCompatible,
    /// TF-IDF cosine similarity at or above the threshold.
    CosineTfidf { threshold: NotNan<f64> },
}

impl fmt::Display for SimilarityCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityCriterion::Exact => write!(f, "exact"),
            SimilarityCriterion::FirstN { n } => write!(f, "first({n})"),
            SimilarityCriterion::LastN { n } => write!(f, "last({n})"),
            SimilarityCriterion::Order => write!(f, "order"),
            SimilarityCriterion::DigitN { n } => write!(f, "digit({n})"),
            SimilarityCriterion::YearDiff { max } => write!(f, "diff({max})"),
            // Both compatibility flavors print as `compatible`; the parser
            // picks the name-aware variant back on name keys.
            SimilarityCriterion::Compatible | SimilarityCriterion::NameCompatible => {
                write!(f, "compatible")
            }
            SimilarityCriterion::CosineTfidf { threshold } => {
                write!(f, "cos({})", threshold.into_inner())
            }
        }
    }
}

/// Threshold helper that panics only on NaN, which callers never produce.
pub fn cos_threshold(t: f64) -> SimilarityCriterion {
    SimilarityCriterion::CosineTfidf {
        threshold: NotNan::new(t).expect("cosine threshold must not be NaN"),
    }
}

/// An attribute/criterion pair, optionally negated.
///
/// Negated predicates only arise inside the CNF learner; catalogued
/// predicate sets and learned formulas hold positive ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockingPredicate {
    pub key: AttrKey,
    pub criterion: SimilarityCriterion,
    #[serde(default, skip_serializing_if = "is_false")]
    pub negated: bool,
}

fn is_false(b: &bool) -> bool {
    !b
}

impl BlockingPredicate {
    pub fn new(key: AttrKey, criterion: SimilarityCriterion) -> BlockingPredicate {
        BlockingPredicate {
            key,
            criterion,
            negated: false,
        }
    }

    pub fn negate(&self) -> BlockingPredicate {
        BlockingPredicate {
            negated: !self.negated,
            ..*self
        }
    }

    /// Check that the criterion applies to the key (e.g. `digit` only makes
    /// sense on the year, `order` on the author slot).
    pub fn validate(&self) -> Result<()> {
        use SimilarityCriterion::*;
        let ok = match self.criterion {
            Exact => self.key.is_text() || self.key == AttrKey::Year,
            FirstN { n } | LastN { n } => n > 0 && self.key.is_text(),
            Order => self.key == AttrKey::Order,
            DigitN { n } => n > 0 && self.key == AttrKey::Year,
            YearDiff { .. } => self.key == AttrKey::Year,
            Compatible => self.key.is_text(),
            NameCompatible => self.key.is_name(),
            CosineTfidf { threshold } => {
                (0.0..=1.0).contains(&threshold.into_inner())
                    && matches!(
                        self.key,
                        AttrKey::Title | AttrKey::Affiliation | AttrKey::Coauthors | AttrKey::Venue
                    )
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPredicate(self.to_string()))
        }
    }
}

impl fmt::Display for BlockingPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "NOT ")?;
        }
        write!(f, "({},{})", self.key, self.criterion)
    }
}

/// Which predicate catalogue to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateFlavor {
    /// Non-relative predicates only, usable for hash-partition blocking.
    Disjoint,
    /// The full catalogue including compatibility, cosine, and year-window
    /// criteria.
    Full,
}

/// An ordered, duplicate-free catalogue of predicates. The position of a
/// predicate in the set is its canonical tie-breaking rank in the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSet {
    predicates: Vec<BlockingPredicate>,
    flavor: PredicateFlavor,
}

const NAME_WINDOW_SIZES: [u32; 4] = [1, 3, 5, 7];
const COSINE_THRESHOLDS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
const YEAR_DIGITS: [u32; 3] = [1, 2, 3];
const YEAR_DIFFS: [u32; 3] = [2, 5, 10];

/// Expand the predicate catalogue for a flavor.
///
/// The disjoint catalogue has 34 predicates, the full one 57; both counts
/// are pinned by tests.
pub fn generate_predicate_set(flavor: PredicateFlavor) -> PredicateSet {
    use AttrKey::*;
    use SimilarityCriterion::*;
    let mut preds = Vec::new();
    let mut push = |key: AttrKey, crit: SimilarityCriterion| {
        preds.push(BlockingPredicate::new(key, crit));
    };
    let name_windows = |push: &mut dyn FnMut(AttrKey, SimilarityCriterion), key: AttrKey| {
        push(key, Exact);
        for n in NAME_WINDOW_SIZES {
            push(key, FirstN { n });
        }
        for n in NAME_WINDOW_SIZES {
            push(key, LastN { n });
        }
    };
    match flavor {
        PredicateFlavor::Disjoint => {
            for key in [FirstName, LastName, MiddleName] {
                name_windows(&mut push, key);
            }
            push(Affiliation, Exact);
            push(AttrKey::Order, SimilarityCriterion::Order);
            push(Year, Exact);
            for n in YEAR_DIGITS {
                push(Year, DigitN { n });
            }
            push(Venue, Exact);
        }
        PredicateFlavor::Full => {
            for key in [FirstName, LastName, MiddleName] {
                name_windows(&mut push, key);
                push(key, NameCompatible);
            }
            for t in COSINE_THRESHOLDS {
                push(Title, cos_threshold(t));
            }
            push(Affiliation, Exact);
            for t in COSINE_THRESHOLDS {
                push(Affiliation, cos_threshold(t));
            }
            push(Affiliation, Compatible);
            for t in COSINE_THRESHOLDS {
                push(Coauthors, cos_threshold(t));
            }
            push(AttrKey::Order, SimilarityCriterion::Order);
            push(Year, Exact);
            for n in YEAR_DIGITS {
                push(Year, DigitN { n });
            }
            for max in YEAR_DIFFS {
                push(Year, YearDiff { max });
            }
            push(Venue, Exact);
            for t in COSINE_THRESHOLDS {
                push(Venue, cos_threshold(t));
            }
        }
    }
    PredicateSet::new(preds, flavor).expect("catalogue is valid by construction")
}

impl PredicateSet {
    /// Build a set from explicit predicates, rejecting duplicates, invalid
    /// key/criterion combinations, and relative predicates in a disjoint
    /// set.
    pub fn new(predicates: Vec<BlockingPredicate>, flavor: PredicateFlavor) -> Result<PredicateSet> {
        let mut seen = HashSet::new();
        for p in &predicates {
            p.validate()?;
            if p.negated {
                return Err(Error::InvalidPredicate(format!(
                    "{p} (catalogues hold positive predicates)"
                )));
            }
            if flavor == PredicateFlavor::Disjoint && !is_non_relative(p) {
                return Err(Error::InvalidPredicate(format!(
                    "{p} (relative predicate in disjoint set)"
                )));
            }
            if !seen.insert(*p) {
                return Err(Error::DuplicatePredicate(p.to_string()));
            }
        }
        Ok(PredicateSet { predicates, flavor })
    }

    pub fn flavor(&self) -> PredicateFlavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn get(&self, i: usize) -> &BlockingPredicate {
        &self.predicates[i]
    }

    pub fn predicates(&self) -> &[BlockingPredicate] {
        &self.predicates
    }

    pub fn iter(&self) -> impl Iterator<Item = &BlockingPredicate> {
        self.predicates.iter()
    }

    pub fn position(&self, p: &BlockingPredicate) -> Option<usize> {
        self.predicates.iter().position(|q| q == p)
    }

    /// One `key,criterion` row per line, in set order.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        for p in &self.predicates {
            out.push_str(&format!("{},{}\n", p.key, p.criterion));
        }
        out
    }
}

/// Shared evaluation context: the optional tf-idf model cosine predicates
/// need, plus a predicate-evaluation counter.
///
/// The counter makes evaluation-cost comparisons possible (how many
/// predicate evaluations a formula spends before accepting or rejecting a
/// pair). It is a `Cell`, so a context is cheap but single-threaded; give
/// each worker its own context and merge the counts.
pub struct EvalContext<'a> {
    tfidf: Option<&'a TfidfModel>,
    evals: Cell<u64>,
}

impl<'a> EvalContext<'a> {
    pub fn new(tfidf: Option<&'a TfidfModel>) -> EvalContext<'a> {
        EvalContext {
            tfidf,
            evals: Cell::new(0),
        }
    }

    pub fn without_tfidf() -> EvalContext<'static> {
        EvalContext {
            tfidf: None,
            evals: Cell::new(0),
        }
    }

    pub fn tfidf(&self) -> Option<&'a TfidfModel> {
        self.tfidf
    }

    /// Predicate evaluations counted so far.
    pub fn evals(&self) -> u64 {
        self.evals.get()
    }

    pub fn reset_evals(&self) {
        self.evals.set(0);
    }

    fn bump(&self) {
        self.evals.set(self.evals.get() + 1);
    }

    fn cosine(&self, key: AttrKey, a: &Record, b: &Record) -> Result<f64> {
        let model = self.tfidf.ok_or(Error::MissingTfidf)?;
        model.cosine(key, &a.id, &b.id)
    }
}

/// First `n` characters of `s` (whole string when shorter).
fn first_n(s: &str, n: u32) -> &str {
    match s.char_indices().nth(n as usize) {
        Some((byte, _)) => &s[..byte],
        None => s,
    }
}

/// Last `n` characters of `s` (whole string when shorter).
fn last_n(s: &str, n: u32) -> &str {
    let chars = s.chars().count();
    if chars <= n as usize {
        return s;
    }
    let skip = chars - n as usize;
    match s.char_indices().nth(skip) {
        Some((byte, _)) => &s[byte..],
        None => s,
    }
}

fn order_class(r: &Record) -> &'static str {
    if r.author_position == 1 {
        "FIRST"
    } else if r.author_position == r.author_count {
        "LAST"
    } else {
        "MIDDLE"
    }
}

fn year_digits(year: i32, n: u32) -> String {
    let s = year.to_string();
    first_n(&s, n).to_string()
}

/// Evaluate one predicate on a record pair. Symmetric in `a`/`b`; the
/// context counter increases by one per call.
pub fn eval_predicate(
    p: &BlockingPredicate,
    a: &Record,
    b: &Record,
    ctx: &EvalContext,
) -> Result<bool> {
    ctx.bump();
    let base = eval_base(p, a, b, ctx)?;
    Ok(base != p.negated)
}

fn eval_base(p: &BlockingPredicate, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
    use SimilarityCriterion::*;
    match p.criterion {
        Exact => {
            if p.key == AttrKey::Year {
                // Absent years never match, so missing data cannot merge
                // blocks.
                Ok(match (a.year, b.year) {
                    (Some(ya), Some(yb)) => ya == yb,
                    _ => false,
                })
            } else if p.key.is_text() {
                Ok(p.key.text_value(a) == p.key.text_value(b))
            } else {
                Err(Error::InvalidPredicate(p.to_string()))
            }
        }
        FirstN { n } => {
            if !p.key.is_text() {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            Ok(first_n(p.key.text_value(a), n) == first_n(p.key.text_value(b), n))
        }
        LastN { n } => {
            if !p.key.is_text() {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            Ok(last_n(p.key.text_value(a), n) == last_n(p.key.text_value(b), n))
        }
        Order => {
            if p.key != AttrKey::Order {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            Ok(order_class(a) == order_class(b))
        }
        DigitN { n } => {
            if p.key != AttrKey::Year {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            Ok(match (a.year, b.year) {
                (Some(ya), Some(yb)) => year_digits(ya, n) == year_digits(yb, n),
                _ => false,
            })
        }
        YearDiff { max } => {
            if p.key != AttrKey::Year {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            Ok(match (a.year, b.year) {
                (Some(ya), Some(yb)) => (ya - yb).unsigned_abs() <= max,
                _ => false,
            })
        }
        Compatible => {
            if !p.key.is_text() {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            let (va, vb) = (p.key.text_value(a), p.key.text_value(b));
            Ok(va.is_empty() || vb.is_empty() || va == vb)
        }
        NameCompatible => {
            if !p.key.is_name() {
                return Err(Error::InvalidPredicate(p.to_string()));
            }
            let (va, vb) = (p.key.text_value(a), p.key.text_value(b));
            if va.is_empty() || vb.is_empty() {
                return Ok(true);
            }
            // A single character is a bare initial; anything longer counts
            // as a full name.
            let initial = |s: &str| s.chars().count() == 1;
            if !initial(va) && !initial(vb) {
                Ok(va == vb)
            } else {
                Ok(first_n(va, 1) == first_n(vb, 1))
            }
        }
        CosineTfidf { threshold } => Ok(ctx.cosine(p.key, a, b)? >= threshold.into_inner()),
    }
}

/// Whether the criterion induces an equivalence relation over canonical
/// keys (so the predicate can drive disjoint hash blocking).
pub fn is_non_relative(p: &BlockingPredicate) -> bool {
    matches!(
        p.criterion,
        SimilarityCriterion::Exact
            | SimilarityCriterion::FirstN { .. }
            | SimilarityCriterion::LastN { .. }
            | SimilarityCriterion::Order
            | SimilarityCriterion::DigitN { .. }
    )
}

/// The hash key a non-relative predicate assigns to a record: two distinct
/// records satisfy the predicate exactly when their keys are equal.
///
/// Year criteria give records with an absent year a per-record sentinel
/// key, so missing years form singleton classes instead of one merged
/// block. Negated or relative predicates have no key and error.
pub fn canonical_key(p: &BlockingPredicate, r: &Record) -> Result<String> {
    use SimilarityCriterion::*;
    if !is_non_relative(p) || p.negated {
        return Err(Error::NotPartitionable(p.to_string()));
    }
    p.validate()?;
    let absent = || format!("\u{1}absent\u{1}{}", r.id);
    Ok(match p.criterion {
        Exact => {
            if p.key == AttrKey::Year {
                match r.year {
                    Some(y) => y.to_string(),
                    None => absent(),
                }
            } else {
                p.key.text_value(r).to_string()
            }
        }
        FirstN { n } => first_n(p.key.text_value(r), n).to_string(),
        LastN { n } => last_n(p.key.text_value(r), n).to_string(),
        Order => order_class(r).to_string(),
        DigitN { n } => match r.year {
            Some(y) => year_digits(y, n),
            None => absent(),
        },
        _ => unreachable!("relative criteria rejected above"),
    })
}

/// Convenience constructor used across tests and fixtures.
pub fn pred(key: AttrKey, criterion: SimilarityCriterion) -> BlockingPredicate {
    BlockingPredicate::new(key, criterion)
}
