//! Boolean blocking formulas over predicates: DNF, CNF, and the two-stage
//! disjoint form.
//!
//! Formulas evaluate on record pairs with short-circuiting, so the
//! [`EvalContext`](crate::predicate::EvalContext) counter measures how many
//! predicate evaluations a formula actually spends. The text rendering and
//! parser live in [`text`].

pub mod text;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Record;
use crate::predicate::{eval_predicate, BlockingPredicate, EvalContext};

/// A non-empty conjunction of predicates: the building block of a DNF.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctionTerm {
    predicates: Vec<BlockingPredicate>,
}

/// A non-empty disjunction of predicates: the building block of a CNF.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjunctionClause {
    predicates: Vec<BlockingPredicate>,
}

fn check_group(predicates: &[BlockingPredicate]) -> Result<()> {
    if predicates.is_empty() {
        return Err(Error::EmptyTerm);
    }
    let mut seen = BTreeSet::new();
    for p in predicates {
        p.validate()?;
        if !seen.insert(*p) {
            return Err(Error::DuplicatePredicate(p.to_string()));
        }
    }
    Ok(())
}

impl ConjunctionTerm {
    pub fn new(predicates: Vec<BlockingPredicate>) -> Result<ConjunctionTerm> {
        check_group(&predicates)?;
        Ok(ConjunctionTerm { predicates })
    }

    pub fn predicates(&self) -> &[BlockingPredicate] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Order-insensitive identity, used to deduplicate candidate pools.
    pub fn as_set(&self) -> BTreeSet<BlockingPredicate> {
        self.predicates.iter().copied().collect()
    }

    /// The term extended by one more predicate (error on duplicates).
    pub fn extended(&self, p: BlockingPredicate) -> Result<ConjunctionTerm> {
        let mut preds = self.predicates.clone();
        preds.push(p);
        ConjunctionTerm::new(preds)
    }

    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        for p in &self.predicates {
            if !eval_predicate(p, a, b, ctx)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl DisjunctionClause {
    pub fn new(predicates: Vec<BlockingPredicate>) -> Result<DisjunctionClause> {
        check_group(&predicates)?;
        Ok(DisjunctionClause { predicates })
    }

    pub fn predicates(&self) -> &[BlockingPredicate] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn as_set(&self) -> BTreeSet<BlockingPredicate> {
        self.predicates.iter().copied().collect()
    }

    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        for p in &self.predicates {
            if eval_predicate(p, a, b, ctx)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Disjunction of conjunction terms. Empty means FALSE (blocks nothing
/// together).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DnfFormula {
    terms: Vec<ConjunctionTerm>,
}

impl DnfFormula {
    pub fn new(terms: Vec<ConjunctionTerm>) -> Result<DnfFormula> {
        let mut seen: Vec<BTreeSet<BlockingPredicate>> = Vec::new();
        for t in &terms {
            let set = t.as_set();
            if seen.contains(&set) {
                return Err(Error::DuplicateTerm(t.to_string()));
            }
            seen.push(set);
        }
        Ok(DnfFormula { terms })
    }

    pub fn empty() -> DnfFormula {
        DnfFormula { terms: vec![] }
    }

    pub fn terms(&self) -> &[ConjunctionTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total number of predicate slots across all terms.
    pub fn size(&self) -> usize {
        self.terms.iter().map(ConjunctionTerm::len).sum()
    }

    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        for t in &self.terms {
            if t.eval(a, b, ctx)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Conjunction of disjunction clauses. Empty means TRUE (blocks everything
/// together).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CnfFormula {
    clauses: Vec<DisjunctionClause>,
}

impl CnfFormula {
    pub fn new(clauses: Vec<DisjunctionClause>) -> Result<CnfFormula> {
        let mut seen: Vec<BTreeSet<BlockingPredicate>> = Vec::new();
        for c in &clauses {
            let set = c.as_set();
            if seen.contains(&set) {
                return Err(Error::DuplicateTerm(c.to_string()));
            }
            seen.push(set);
        }
        Ok(CnfFormula { clauses })
    }

    pub fn empty() -> CnfFormula {
        CnfFormula { clauses: vec![] }
    }

    pub fn clauses(&self) -> &[DisjunctionClause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn size(&self) -> usize {
        self.clauses.iter().map(DisjunctionClause::len).sum()
    }

    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        for c in &self.clauses {
            if !c.eval(a, b, ctx)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A possibly-empty conjunction of positive predicates, used as the
/// hash-blocking stage of the disjoint form. Empty means TRUE: a single
/// block holding every record.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conjunction {
    predicates: Vec<BlockingPredicate>,
}

impl Conjunction {
    pub fn new(predicates: Vec<BlockingPredicate>) -> Result<Conjunction> {
        let mut seen = BTreeSet::new();
        for p in &predicates {
            p.validate()?;
            if !seen.insert(*p) {
                return Err(Error::DuplicatePredicate(p.to_string()));
            }
        }
        Ok(Conjunction { predicates })
    }

    pub fn empty() -> Conjunction {
        Conjunction { predicates: vec![] }
    }

    pub fn predicates(&self) -> &[BlockingPredicate] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        for p in &self.predicates {
            if !eval_predicate(p, a, b, ctx)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Two-stage disjoint blocking formula: a hash-partitionable conjunction
/// that assigns each record to exactly one block, refined by a CNF applied
/// to pairs inside a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointFormula {
    pub stage1: Conjunction,
    pub refine: CnfFormula,
}

impl DisjointFormula {
    pub fn new(stage1: Conjunction, refine: CnfFormula) -> Result<DisjointFormula> {
        for p in stage1.predicates() {
            if !crate::predicate::is_non_relative(p) || p.negated {
                return Err(Error::NotPartitionable(p.to_string()));
            }
        }
        Ok(DisjointFormula { stage1, refine })
    }

    /// Pairwise semantics: co-blocked and kept by the refinement.
    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        Ok(self.stage1.eval(a, b, ctx)? && self.refine.eval(a, b, ctx)?)
    }
}

/// Any learned blocking formula, tagged by form. This is the on-disk model
/// type the CLI reads and writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BlockingFormula {
    Dnf(DnfFormula),
    Cnf(CnfFormula),
    DisjointCnf(DisjointFormula),
}

impl BlockingFormula {
    pub fn eval(&self, a: &Record, b: &Record, ctx: &EvalContext) -> Result<bool> {
        match self {
            BlockingFormula::Dnf(f) => f.eval(a, b, ctx),
            BlockingFormula::Cnf(f) => f.eval(a, b, ctx),
            BlockingFormula::DisjointCnf(f) => f.eval(a, b, ctx),
        }
    }

    /// Total predicate slots, a crude complexity measure.
    pub fn size(&self) -> usize {
        match self {
            BlockingFormula::Dnf(f) => f.size(),
            BlockingFormula::Cnf(f) => f.size(),
            BlockingFormula::DisjointCnf(f) => f.stage1.len() + f.refine.size(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("formula serializes")
    }

    pub fn from_json(s: &str) -> Result<BlockingFormula> {
        serde_json::from_str(s).map_err(|e| Error::FormulaParse {
            pos: 0,
            msg: e.to_string(),
        })
    }
}

/// De Morgan dual of a DNF: ¬(∨ terms) as a CNF over negated predicates.
pub fn negate_dnf(dnf: &DnfFormula) -> CnfFormula {
    let clauses = dnf
        .terms()
        .iter()
        .map(|t| DisjunctionClause {
            predicates: t.predicates().iter().map(BlockingPredicate::negate).collect(),
        })
        .collect();
    CnfFormula { clauses }
}

/// De Morgan dual of a CNF: ¬(∧ clauses) as a DNF over negated predicates.
pub fn negate_cnf(cnf: &CnfFormula) -> DnfFormula {
    let terms = cnf
        .clauses()
        .iter()
        .map(|c| ConjunctionTerm {
            predicates: c.predicates().iter().map(BlockingPredicate::negate).collect(),
        })
        .collect();
    DnfFormula { terms }
}

impl fmt::Display for ConjunctionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_group(f, &self.predicates, " AND ")
    }
}

impl fmt::Display for DisjunctionClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_group(f, &self.predicates, " OR ")
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.predicates.is_empty() {
            return f.write_str("TRUE");
        }
        text::write_group(f, &self.predicates, " AND ")
    }
}

impl fmt::Display for DnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_dnf_body(f, self)
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_cnf_body(f, self)
    }
}

impl fmt::Display for BlockingFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write_formula(f, self)
    }
}
