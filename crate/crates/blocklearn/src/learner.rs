//! Sequential-covering learners for DNF, CNF, and two-stage disjoint
//! blocking formulas.
//!
//! The DNF learner greedily covers positive pairs with conjunction terms;
//! the CNF learner is its exact dual, covering negative pairs with negated
//! predicates under a budget of sacrificed positives, then applying
//! De Morgan. Both run on a [`CoverageMatrix`] of per-predicate bitsets so
//! the covering loops reduce to popcount passes, and both are fully
//! deterministic: every argmax breaks ties by a total order.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::formula::{negate_dnf, CnfFormula, Conjunction, ConjunctionTerm, DisjointFormula, DnfFormula};
use crate::gain::{calc_gain, CoverageCounts, GainKind, Polarity};
use crate::model::{LabeledPairSet, RecordSet};
use crate::predicate::{
    eval_predicate, is_non_relative, BlockingPredicate, EvalContext, PredicateSet,
};
use crate::tfidf::TfidfModel;

/// Safety cap on formula length.
pub const DEFAULT_MAX_TERMS: usize = 32;

/// Knobs shared by all learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Maximum predicates per conjunction term.
    pub k: usize,
    /// Fraction of training positives the formula may sacrifice.
    pub epsilon: f64,
    pub gain: GainKind,
    /// Cap on accepted terms/clauses.
    pub max_terms: usize,
}

impl Default for LearnerConfig {
    fn default() -> LearnerConfig {
        LearnerConfig {
            k: 3,
            epsilon: 0.01,
            gain: GainKind::InfoGain,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0,1], got {}",
                self.epsilon
            )));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidConfig("max_terms must be at least 1".into()));
        }
        self.gain.validate()
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> LearnerConfig {
        self.epsilon = epsilon;
        self
    }

    pub fn with_k(mut self, k: usize) -> LearnerConfig {
        self.k = k;
        self
    }
}

/// Per-predicate coverage bitsets over one labeled pair sample: row `i`
/// marks which positive (resp. negative) pairs predicate `i` satisfies.
#[derive(Debug, Clone)]
pub struct CoverageMatrix {
    pos_rows: Vec<BitSet>,
    neg_rows: Vec<BitSet>,
    n_pos: usize,
    n_neg: usize,
}

impl CoverageMatrix {
    /// Evaluate every catalogue predicate on every labeled pair,
    /// parallelized over predicates.
    pub fn build(
        records: &RecordSet,
        pairs: &LabeledPairSet,
        preds: &PredicateSet,
        tfidf: Option<&TfidfModel>,
    ) -> Result<CoverageMatrix> {
        let eval_row = |p: &BlockingPredicate, side: &[crate::model::RecordPair]| -> Result<BitSet> {
            let ctx = EvalContext::new(tfidf);
            let mut row = BitSet::with_len(side.len());
            for (i, pair) in side.iter().enumerate() {
                let (a, b) = (records.get(pair.left()), records.get(pair.right()));
                if eval_predicate(p, a, b, &ctx)? {
                    row.set(i);
                }
            }
            Ok(row)
        };
        let rows: Vec<(BitSet, BitSet)> = preds
            .predicates()
            .par_iter()
            .map(|p| Ok((eval_row(p, pairs.positives())?, eval_row(p, pairs.negatives())?)))
            .collect::<Result<_>>()?;
        let (pos_rows, neg_rows) = rows.into_iter().unzip();
        Ok(CoverageMatrix {
            pos_rows,
            neg_rows,
            n_pos: pairs.positives().len(),
            n_neg: pairs.negatives().len(),
        })
    }

    pub fn n_predicates(&self) -> usize {
        self.pos_rows.len()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn pos_row(&self, i: usize) -> &BitSet {
        &self.pos_rows[i]
    }

    pub fn neg_row(&self, i: usize) -> &BitSet {
        &self.neg_rows[i]
    }

    /// Rows of the negated predicates (bitwise complement of each row).
    pub fn complemented(&self) -> CoverageMatrix {
        CoverageMatrix {
            pos_rows: self.pos_rows.iter().map(BitSet::flipped).collect(),
            neg_rows: self.neg_rows.iter().map(BitSet::flipped).collect(),
            n_pos: self.n_pos,
            n_neg: self.n_neg,
        }
    }

    /// The same coverage with positive and negative classes exchanged.
    pub fn swapped(&self) -> CoverageMatrix {
        CoverageMatrix {
            pos_rows: self.neg_rows.clone(),
            neg_rows: self.pos_rows.clone(),
            n_pos: self.n_neg,
            n_neg: self.n_pos,
        }
    }
}

/// One candidate conjunction with its materialized coverage.
struct PoolTerm {
    /// Predicate indices in learned order (seed first).
    idxs: Vec<usize>,
    /// Sorted indices: the deterministic final tie-break key.
    sorted: Vec<usize>,
    cov_t: BitSet,
    cov_o: BitSet,
}

/// The covering machinery, expressed over a "target" class to cover and an
/// "other" class to avoid. DNF learning covers positives; CNF learning
/// runs the same core over flipped rows with the classes swapped.
struct Core {
    preds: Vec<BlockingPredicate>,
    rows_t: Vec<BitSet>,
    rows_o: Vec<BitSet>,
    mask_t: BitSet,
    mask_o: BitSet,
    total_t: u64,
    total_o: u64,
    gain: GainKind,
    k: usize,
    max_terms: usize,
    pool: Vec<PoolTerm>,
}

/// A scored candidate during a covering scan.
struct Cand<'a> {
    gain: f64,
    covered_t: u64,
    covered_o: u64,
    term: &'a PoolTerm,
}

/// Total-order comparison: higher gain wins; infinite-gain ties prefer
/// more covered target pairs; then fewer predicates; then lexicographic
/// predicate order. The last key is unique per pool term, so the order is
/// strict and any reduction over it is deterministic.
fn better<'a>(a: Cand<'a>, b: Cand<'a>) -> Cand<'a> {
    let ord = a
        .gain
        .total_cmp(&b.gain)
        .then_with(|| {
            if a.gain.is_infinite() {
                a.covered_t.cmp(&b.covered_t)
            } else {
                Ordering::Equal
            }
        })
        .then_with(|| b.term.idxs.len().cmp(&a.term.idxs.len()))
        .then_with(|| b.term.sorted.cmp(&a.term.sorted));
    if ord == Ordering::Less {
        b
    } else {
        a
    }
}

impl Core {
    fn new(
        preds: Vec<BlockingPredicate>,
        rows_t: Vec<BitSet>,
        rows_o: Vec<BitSet>,
        mask_t: BitSet,
        mask_o: BitSet,
        cfg: &LearnerConfig,
    ) -> Result<Core> {
        cfg.validate()?;
        if preds.is_empty() {
            return Err(Error::EmptyPredicateSet);
        }
        let total_t = mask_t.count_ones();
        let total_o = mask_o.count_ones();
        if total_t == 0 || total_o == 0 {
            return Err(Error::DegenerateLabels);
        }
        Ok(Core {
            preds,
            rows_t,
            rows_o,
            mask_t,
            mask_o,
            total_t,
            total_o,
            gain: cfg.gain,
            k: cfg.k,
            max_terms: cfg.max_terms,
            pool: Vec::new(),
        })
    }

    fn gain_of(&self, covered_t: u64, covered_o: u64) -> Result<f64> {
        calc_gain(
            self.gain,
            Polarity::Dnf,
            CoverageCounts::new(self.total_t, self.total_o, covered_t, covered_o),
        )
    }

    /// The nested candidate terms grown from one seed: the seed alone,
    /// then each previous term extended by the predicate with the best
    /// gain on the full sample. The extension is unconditional — a seed
    /// with no helpful partner still grows — so exactly
    /// `min(k, |preds|)` prefixes come back.
    fn conj_prefixes(&self, seed: usize) -> Result<Vec<Vec<usize>>> {
        let n = self.preds.len();
        let mut cur = vec![seed];
        let mut cov_t = self.rows_t[seed].clone();
        cov_t.and_assign(&self.mask_t);
        let mut cov_o = self.rows_o[seed].clone();
        cov_o.and_assign(&self.mask_o);
        let mut out = vec![cur.clone()];
        for _ in 1..self.k {
            if cur.len() == n {
                break;
            }
            let mut best: Option<(f64, u64, usize)> = None;
            for cand in 0..n {
                if cur.contains(&cand) {
                    continue;
                }
                let t = cov_t.and_count(&self.rows_t[cand]);
                let o = cov_o.and_count(&self.rows_o[cand]);
                let g = self.gain_of(t, o)?;
                let wins = match &best {
                    None => true,
                    Some((bg, bt, _)) => match g.total_cmp(bg) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        // Ascending scan: on plain ties the earlier
                        // (lexicographically first) predicate stays.
                        Ordering::Equal => g.is_infinite() && t > *bt,
                    },
                };
                if wins {
                    best = Some((g, t, cand));
                }
            }
            let Some((_, _, chosen)) = best else { break };
            cur.push(chosen);
            cov_t.and_assign(&self.rows_t[chosen]);
            cov_o.and_assign(&self.rows_o[chosen]);
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Candidate pool: prefixes from every seed, deduplicated as predicate
    /// sets, coverage materialized once.
    fn build_pool(&mut self) -> Result<()> {
        let prefix_lists: Vec<Vec<Vec<usize>>> = (0..self.preds.len())
            .into_par_iter()
            .map(|seed| self.conj_prefixes(seed))
            .collect::<Result<_>>()?;
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        for idxs in prefix_lists.into_iter().flatten() {
            let mut sorted = idxs.clone();
            sorted.sort_unstable();
            if !seen.insert(sorted.clone()) {
                continue;
            }
            let mut cov_t = self.mask_t.clone();
            let mut cov_o = self.mask_o.clone();
            for &i in &idxs {
                cov_t.and_assign(&self.rows_t[i]);
                cov_o.and_assign(&self.rows_o[i]);
            }
            self.pool.push(PoolTerm {
                idxs,
                sorted,
                cov_t,
                cov_o,
            });
        }
        Ok(())
    }

    /// Greedy covering: repeatedly accept the best-gain pool term over the
    /// samples not yet covered, until the remaining target class is within
    /// `target_eps` of its original size, no candidate fits the
    /// `budget_eps` allowance on the other class, the best gain is
    /// non-positive, or `max_terms` is hit.
    fn cover(&self, target_eps: f64, budget_eps: f64) -> Result<Vec<ConjunctionTerm>> {
        if !(0.0..=1.0).contains(&target_eps) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0,1], got {target_eps}"
            )));
        }
        if budget_eps < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "budget must be nonnegative, got {budget_eps}"
            )));
        }
        // Exact integer thresholds; the nudge keeps ε·total from landing
        // just below an integer it mathematically equals.
        let keep_t = (target_eps * self.total_t as f64 + 1e-9).floor() as u64;
        let budget = if budget_eps.is_finite() {
            (budget_eps * self.total_o as f64 + 1e-9).floor() as u64
        } else {
            u64::MAX
        };

        let mut rem_t = self.mask_t.clone();
        let mut rem_o = self.mask_o.clone();
        let mut spent: u64 = 0;
        let mut chosen: Vec<&PoolTerm> = Vec::new();
        while rem_t.count_ones() > keep_t && chosen.len() < self.max_terms {
            let best = self
                .pool
                .par_iter()
                .map(|term| -> Result<Option<Cand>> {
                    let covered_t = term.cov_t.and_count(&rem_t);
                    let covered_o = term.cov_o.and_count(&rem_o);
                    // A term that would blow the budget is skipped in
                    // favor of the next-best, keeping the guarantee
                    // unconditional.
                    if spent.saturating_add(covered_o) > budget {
                        return Ok(None);
                    }
                    Ok(Some(Cand {
                        gain: self.gain_of(covered_t, covered_o)?,
                        covered_t,
                        covered_o,
                        term,
                    }))
                })
                .try_reduce(
                    || None,
                    |a, b| {
                        Ok(match (a, b) {
                            (Some(a), Some(b)) => Some(better(a, b)),
                            (x, None) | (None, x) => x,
                        })
                    },
                )?;
            let Some(cand) = best else { break };
            if cand.gain <= 0.0 {
                break;
            }
            rem_t.and_not_assign(&cand.term.cov_t);
            rem_o.and_not_assign(&cand.term.cov_o);
            spent += cand.covered_o;
            chosen.push(cand.term);
        }
        chosen
            .into_iter()
            .map(|t| ConjunctionTerm::new(t.idxs.iter().map(|&i| self.preds[i]).collect()))
            .collect()
    }
}

fn full_masks(cov: &CoverageMatrix) -> (BitSet, BitSet) {
    let mut mp = BitSet::with_len(cov.n_pos);
    mp.fill_ones();
    let mut mn = BitSet::with_len(cov.n_neg);
    mn.fill_ones();
    (mp, mn)
}

/// A reusable DNF learning session: the candidate pool is built once and
/// can be covered under many `epsilon` values (the pool does not depend on
/// them).
pub struct DnfSession {
    core: Core,
}

impl DnfSession {
    pub fn new(cov: &CoverageMatrix, preds: &PredicateSet, cfg: &LearnerConfig) -> Result<DnfSession> {
        let (mask_t, mask_o) = full_masks(cov);
        let mut core = Core::new(
            preds.predicates().to_vec(),
            cov.pos_rows.clone(),
            cov.neg_rows.clone(),
            mask_t,
            mask_o,
            cfg,
        )?;
        core.build_pool()?;
        Ok(DnfSession { core })
    }

    pub fn learn(&self, epsilon: f64) -> Result<DnfFormula> {
        self.learn_budgeted(epsilon, f64::INFINITY)
    }

    /// Covering with an explicit cumulative budget on covered negatives;
    /// plain DNF learning uses an infinite budget.
    pub fn learn_budgeted(&self, target_eps: f64, budget_eps: f64) -> Result<DnfFormula> {
        DnfFormula::new(self.core.cover(target_eps, budget_eps)?)
    }
}

/// A reusable CNF learning session (see [`DnfSession`]).
pub struct CnfSession {
    core: Core,
}

impl CnfSession {
    pub fn new(cov: &CoverageMatrix, preds: &PredicateSet, cfg: &LearnerConfig) -> Result<CnfSession> {
        let (mask_pos, mask_neg) = full_masks(cov);
        CnfSession::new_masked(cov, preds, cfg, mask_pos, mask_neg)
    }

    /// Restrict learning to the sub-sample marked by the masks; used by
    /// the disjoint learner's second stage. Totals, epsilon, and budget
    /// are all relative to the sub-sample.
    fn new_masked(
        cov: &CoverageMatrix,
        preds: &PredicateSet,
        cfg: &LearnerConfig,
        mask_pos: BitSet,
        mask_neg: BitSet,
    ) -> Result<CnfSession> {
        // Negated predicates, covering the negative class: rows flip and
        // classes swap. The gain computed in this view on (n, p) equals
        // the CNF-polarity gain on the original labeling.
        let neg_preds: Vec<BlockingPredicate> =
            preds.predicates().iter().map(BlockingPredicate::negate).collect();
        let rows_t: Vec<BitSet> = cov.neg_rows.iter().map(BitSet::flipped).collect();
        let rows_o: Vec<BitSet> = cov.pos_rows.iter().map(BitSet::flipped).collect();
        let mut core = Core::new(neg_preds, rows_t, rows_o, mask_neg, mask_pos, cfg)?;
        core.build_pool()?;
        Ok(CnfSession { core })
    }

    pub fn learn(&self, epsilon: f64) -> Result<CnfFormula> {
        // Cover every negative (target ε = 0) while sacrificing at most
        // ε of the positives, then return the De Morgan negation.
        let neg_dnf = DnfFormula::new(self.core.cover(0.0, epsilon)?)?;
        Ok(negate_dnf(&neg_dnf))
    }
}

/// Candidate conjunctions grown from one seed predicate against the full
/// labeled sample.
pub fn learn_conj_terms(
    cov: &CoverageMatrix,
    preds: &PredicateSet,
    seed: &BlockingPredicate,
    k: usize,
    gain: GainKind,
) -> Result<Vec<ConjunctionTerm>> {
    let seed_idx = preds
        .position(seed)
        .ok_or_else(|| Error::InvalidPredicate(format!("{seed} is not in the predicate set")))?;
    let cfg = LearnerConfig {
        k,
        gain,
        ..LearnerConfig::default()
    };
    let (mask_t, mask_o) = full_masks(cov);
    let core = Core::new(
        preds.predicates().to_vec(),
        cov.pos_rows.clone(),
        cov.neg_rows.clone(),
        mask_t,
        mask_o,
        &cfg,
    )?;
    core.conj_prefixes(seed_idx)?
        .into_iter()
        .map(|idxs| ConjunctionTerm::new(idxs.iter().map(|&i| *preds.get(i)).collect()))
        .collect()
}

/// Learn a DNF blocking formula by sequential covering of the positives.
pub fn learn_dnf(cov: &CoverageMatrix, preds: &PredicateSet, cfg: &LearnerConfig) -> Result<DnfFormula> {
    DnfSession::new(cov, preds, cfg)?.learn(cfg.epsilon)
}

/// The DNF covering core with both knobs exposed: `target_eps` bounds the
/// positives left uncovered, `budget_eps` caps cumulative covered
/// negatives. CNF learning is exactly this machinery on complemented,
/// class-swapped coverage.
pub fn learn_dnf_budgeted(
    cov: &CoverageMatrix,
    preds: &PredicateSet,
    cfg: &LearnerConfig,
    target_eps: f64,
    budget_eps: f64,
) -> Result<DnfFormula> {
    DnfSession::new(cov, preds, cfg)?.learn_budgeted(target_eps, budget_eps)
}

/// Learn a CNF blocking formula: cover the negatives with negated
/// predicates under an `epsilon` budget of sacrificed positives, then
/// negate.
pub fn learn_cnf(cov: &CoverageMatrix, preds: &PredicateSet, cfg: &LearnerConfig) -> Result<CnfFormula> {
    CnfSession::new(cov, preds, cfg)?.learn(cfg.epsilon)
}

/// Learn the two-stage disjoint formula.
///
/// Stage 1 runs the CNF learner with `k = 1` over the non-relative
/// catalogue — a 1-CNF is a pure conjunction — spending `eps1` of the
/// positives. Stage 2 learns an ordinary CNF over the full catalogue on
/// the pairs stage 1 keeps, spending `eps2` of *those* positives, so the
/// combined formula sacrifices at most `eps1 + eps2` of the training
/// positives. Both matrices must cover the same labeled sample.
///
/// An empty stage-1 conjunction (every record in one block) is legal and
/// left to the caller to warn about; a stage-2 sub-sample missing a class
/// yields an empty (always-true) refinement.
pub fn learn_disjoint_cnf(
    cov_disjoint: &CoverageMatrix,
    cov_full: &CoverageMatrix,
    p_disjoint: &PredicateSet,
    p_full: &PredicateSet,
    cfg: &LearnerConfig,
    eps1: f64,
    eps2: f64,
) -> Result<DisjointFormula> {
    if cov_disjoint.n_pos != cov_full.n_pos || cov_disjoint.n_neg != cov_full.n_neg {
        return Err(Error::InvalidConfig(
            "stage-1 and stage-2 coverage matrices describe different samples".into(),
        ));
    }
    if let Some(p) = p_disjoint.iter().find(|p| !is_non_relative(p)) {
        return Err(Error::NotPartitionable(p.to_string()));
    }

    let stage1_cfg = LearnerConfig {
        k: 1,
        epsilon: eps1,
        ..*cfg
    };
    let stage1_cnf = learn_cnf(cov_disjoint, p_disjoint, &stage1_cfg)?;
    // A 1-CNF is singleton clauses; flatten it to a conjunction.
    let stage1 = Conjunction::new(
        stage1_cnf
            .clauses()
            .iter()
            .map(|c| {
                debug_assert_eq!(c.len(), 1);
                c.predicates()[0]
            })
            .collect(),
    )?;

    // Restrict the sample to pairs stage 1 keeps, straight from the
    // stage-1 coverage rows.
    let (mut mask_pos, mut mask_neg) = full_masks(cov_full);
    for p in stage1.predicates() {
        let i = p_disjoint
            .position(p)
            .expect("stage-1 predicates come from the disjoint catalogue");
        mask_pos.and_assign(cov_disjoint.pos_row(i));
        mask_neg.and_assign(cov_disjoint.neg_row(i));
    }

    // With a one-sided sub-sample there is nothing to learn from: refine
    // with the always-true CNF rather than failing.
    let refine = if !mask_pos.any() || !mask_neg.any() {
        CnfFormula::empty()
    } else {
        let stage2_cfg = LearnerConfig {
            epsilon: eps2,
            ..*cfg
        };
        CnfSession::new_masked(cov_full, p_full, &stage2_cfg, mask_pos, mask_neg)?
            .learn(eps2)?
    };

    DisjointFormula::new(stage1, refine)
}
