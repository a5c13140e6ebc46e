//! Learning boolean blocking functions for author-name disambiguation.
//!
//! Record linkage over bibliographic author mentions needs a cheap filter
//! — a *blocking function* — that keeps candidate pairs worth comparing
//! and discards the rest. This crate learns such functions from labeled
//! pairs as boolean combinations of attribute-level similarity predicates:
//!
//! * [`learner::learn_dnf`] — the classic disjunction-of-conjunctions
//!   learner (union of blocking keys) via sequential covering of the
//!   positive pairs;
//! * [`learner::learn_cnf`] — a conjunction-of-disjunctions learner that
//!   covers the *negative* pairs with negated predicates under an explicit
//!   budget of sacrificed positives, giving a per-run guarantee on pair
//!   completeness;
//! * [`learner::learn_disjoint_cnf`] — a two-stage variant whose first
//!   stage is a conjunction of equality-style predicates, so it doubles as
//!   a hash-partitioning key over the whole corpus, refined by a CNF on
//!   the pairs the partition keeps.
//!
//! Supporting pieces: the predicate catalogue ([`predicate`]), TF-IDF
//! cosine similarity for text fields ([`tfidf`]), formula types with text
//! and JSON round-trips ([`formula`]), covering gain functions ([`gain`]),
//! corpus and label handling ([`model`]), hash blocking and candidate
//! generation ([`blocker`]), reduction-ratio/pairs-completeness evaluation
//! with cross-validation ([`evaluation`]), a synthetic corpus generator
//! ([`datagen`]), and string similarity for the canopy baseline
//! ([`similarity`]).

pub mod bitset;
pub mod blocker;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod formula;
pub mod gain;
pub mod learner;
pub mod model;
pub mod predicate;
pub mod similarity;
pub mod tfidf;

pub use error::{Error, Result};
