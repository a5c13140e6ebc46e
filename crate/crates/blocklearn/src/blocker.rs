//! Applying blocking functions to corpora.
//!
//! Disjoint blocking hashes every record on the canonical keys of a
//! stage-1 conjunction — one pass, no pairwise work — then filters
//! within-block pairs through the refining CNF. Non-disjoint formulas are
//! applied by scanning all pairs with short-circuit evaluation counters,
//! which is also how the early-rejection behaviour of CNF versus DNF is
//! measured. The first-initial/surname heuristic and canopy clustering
//! baselines live here too.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::{BlockingFormula, CnfFormula, Conjunction};
use crate::model::{pair_count, RecordPair, RecordSet};
use crate::predicate::{canonical_key, pred, AttrKey, EvalContext, SimilarityCriterion};
use crate::similarity::jaro_winkler;
use crate::tfidf::TfidfModel;

/// One disjoint block: records sharing every canonical key of the stage-1
/// conjunction. The key string joins those canonical keys with an
/// unprintable separator so composite keys cannot collide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub key: String,
    /// Record indices, ascending.
    pub members: Vec<u32>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pair_count(&self) -> u64 {
        pair_count(self.members.len())
    }
}

/// Work accounting for one blocking run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockCounters {
    /// Within-block (or all) pairs enumerated: Σ_b |b|·(|b|−1)/2.
    pub pairs_generated: u64,
    pub pairs_kept: u64,
    pub pairs_filtered: u64,
    /// Predicate evaluations spent, split by the fate of the pair.
    pub evals_on_kept: u64,
    pub evals_on_filtered: u64,
}

impl BlockCounters {
    pub fn predicate_evals(&self) -> u64 {
        self.evals_on_kept + self.evals_on_filtered
    }

    /// Mean predicate evaluations spent per rejected pair — the
    /// early-rejection figure of merit.
    pub fn mean_evals_per_filtered(&self) -> f64 {
        if self.pairs_filtered == 0 {
            0.0
        } else {
            self.evals_on_filtered as f64 / self.pairs_filtered as f64
        }
    }

    pub fn mean_evals_per_kept(&self) -> f64 {
        if self.pairs_kept == 0 {
            0.0
        } else {
            self.evals_on_kept as f64 / self.pairs_kept as f64
        }
    }

    fn absorb(&mut self, other: &BlockCounters) {
        self.pairs_generated += other.pairs_generated;
        self.pairs_kept += other.pairs_kept;
        self.pairs_filtered += other.pairs_filtered;
        self.evals_on_kept += other.evals_on_kept;
        self.evals_on_filtered += other.evals_on_filtered;
    }
}

/// Candidate pairs plus the counters of the run that produced them.
#[derive(Debug, Clone)]
pub struct BlockingResult {
    /// Sorted, deduplicated candidate pairs.
    pub pairs: Vec<RecordPair>,
    pub counters: BlockCounters,
}

const KEY_SEP: char = '\u{1f}';

/// Partition the corpus on a non-relative conjunction in one hashing pass:
/// records agreeing on every predicate's canonical key share a block. The
/// blocks are exactly the equivalence classes of pairwise satisfaction —
/// no pair is ever evaluated. An empty conjunction yields one block.
pub fn apply_conjunction_blocks(conj: &Conjunction, records: &RecordSet) -> Result<Vec<Block>> {
    let mut groups: HashMap<String, Vec<u32>> = HashMap::new();
    for (i, r) in records.records().iter().enumerate() {
        let mut key = String::new();
        for (pi, p) in conj.predicates().iter().enumerate() {
            if pi > 0 {
                key.push(KEY_SEP);
            }
            key.push_str(&canonical_key(p, r)?);
        }
        groups.entry(key).or_default().push(i as u32);
    }
    let mut blocks: Vec<Block> = groups
        .into_iter()
        .map(|(key, members)| Block { key, members })
        .collect();
    blocks.sort_unstable_by(|a, b| a.key.cmp(&b.key));
    Ok(blocks)
}

/// The classic first-initial + exact-surname blocking. Identical to
/// [`apply_conjunction_blocks`] on that two-predicate conjunction:
/// mentions with an empty first name key on the surname alone (the empty
/// initial), so "J Smith" and "John Smith" share a block while "Jane
/// Smith" and "John Smyth" do not.
pub fn heuristic_blocks(records: &RecordSet) -> Vec<Block> {
    let conj = Conjunction::new(vec![
        pred(AttrKey::FirstName, SimilarityCriterion::FirstN { n: 1 }),
        pred(AttrKey::LastName, SimilarityCriterion::Exact),
    ])
    .expect("heuristic conjunction is valid");
    apply_conjunction_blocks(&conj, records).expect("heuristic predicates are non-relative")
}

/// Enumerate within-block pairs and keep those satisfying the refining
/// CNF. Blocks are processed in parallel; the output is independent of
/// worker count.
pub fn filter_pairs(
    blocks: &[Block],
    records: &RecordSet,
    refine: &CnfFormula,
    tfidf: Option<&TfidfModel>,
) -> Result<BlockingResult> {
    let per_block: Vec<(Vec<RecordPair>, BlockCounters)> = blocks
        .par_iter()
        .map(|block| -> Result<(Vec<RecordPair>, BlockCounters)> {
            let ctx = EvalContext::new(tfidf);
            let mut kept = Vec::new();
            let mut c = BlockCounters {
                pairs_generated: block.pair_count(),
                ..BlockCounters::default()
            };
            for (ai, &a) in block.members.iter().enumerate() {
                for &b in &block.members[ai + 1..] {
                    let before = ctx.evals();
                    let ok = refine.eval(records.get(a), records.get(b), &ctx)?;
                    let spent = ctx.evals() - before;
                    if ok {
                        c.pairs_kept += 1;
                        c.evals_on_kept += spent;
                        kept.push(RecordPair::new(a, b).expect("distinct members"));
                    } else {
                        c.pairs_filtered += 1;
                        c.evals_on_filtered += spent;
                    }
                }
            }
            Ok((kept, c))
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut counters = BlockCounters::default();
    for (kept, c) in per_block {
        pairs.extend(kept);
        counters.absorb(&c);
    }
    pairs.sort_unstable();
    Ok(BlockingResult { pairs, counters })
}

/// Apply a (possibly non-disjoint) blocking formula by scanning every
/// record pair, recording how many predicate evaluations the
/// short-circuit evaluator spends on kept versus filtered pairs.
/// Quadratic — meant for desk-scale corpora and counter studies.
pub fn candidate_pairs_nondisjoint(
    records: &RecordSet,
    f: &BlockingFormula,
    tfidf: Option<&TfidfModel>,
) -> Result<BlockingResult> {
    let n = records.len() as u32;
    let per_row: Vec<(Vec<RecordPair>, BlockCounters)> = (0..n)
        .into_par_iter()
        .map(|a| -> Result<(Vec<RecordPair>, BlockCounters)> {
            let ctx = EvalContext::new(tfidf);
            let mut kept = Vec::new();
            let mut c = BlockCounters::default();
            for b in a + 1..n {
                c.pairs_generated += 1;
                let before = ctx.evals();
                let ok = f.eval(records.get(a), records.get(b), &ctx)?;
                let spent = ctx.evals() - before;
                if ok {
                    c.pairs_kept += 1;
                    c.evals_on_kept += spent;
                    kept.push(RecordPair::new(a, b).expect("distinct indices"));
                } else {
                    c.pairs_filtered += 1;
                    c.evals_on_filtered += spent;
                }
            }
            Ok((kept, c))
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut counters = BlockCounters::default();
    for (kept, c) in per_row {
        pairs.extend(kept);
        counters.absorb(&c);
    }
    debug_assert_eq!(counters.pairs_generated, pair_count(records.len()));
    Ok(BlockingResult { pairs, counters })
}

/// Mean Jaro–Winkler similarity over the name attributes, skipping any
/// attribute empty on either side (a missing middle name should not drag
/// the mean down). Returns 0 when nothing is comparable.
pub fn name_similarity(records: &RecordSet, a: u32, b: u32) -> f64 {
    let (ra, rb) = (records.get(a), records.get(b));
    let fields = [
        (&ra.first_name, &rb.first_name),
        (&ra.middle_name, &rb.middle_name),
        (&ra.last_name, &rb.last_name),
    ];
    let mut sum = 0.0;
    let mut used = 0;
    for (x, y) in fields {
        if !x.is_empty() && !y.is_empty() {
            sum += jaro_winkler(x, y);
            used += 1;
        }
    }
    if used == 0 {
        0.0
    } else {
        sum / used as f64
    }
}

/// Canopy clustering baseline: repeatedly seed a canopy from the
/// lowest-indexed record still in the pool, pull in every pool record
/// whose name similarity reaches `loose`, and retire from the pool those
/// reaching `tight`. Candidate pairs are all within-canopy pairs,
/// deduplicated across overlapping canopies. Thresholds are similarity
/// floors, so `loose <= tight` (tight is the stricter one).
pub fn canopy_pairs(records: &RecordSet, loose: f64, tight: f64) -> Result<BlockingResult> {
    if !(0.0..=1.0).contains(&loose) || !(0.0..=1.0).contains(&tight) || loose > tight {
        return Err(Error::InvalidConfig(format!(
            "canopy thresholds need 0 <= loose <= tight <= 1, got loose={loose} tight={tight}"
        )));
    }
    let n = records.len() as u32;
    let mut in_pool = vec![true; records.len()];
    let mut seen = std::collections::HashSet::new();
    let mut counters = BlockCounters::default();
    for seed in 0..n {
        if !in_pool[seed as usize] {
            continue;
        }
        let mut canopy = Vec::new();
        for other in 0..n {
            if !in_pool[other as usize] {
                continue;
            }
            let sim = if other == seed {
                1.0
            } else {
                name_similarity(records, seed, other)
            };
            if sim >= loose {
                canopy.push(other);
            }
            if sim >= tight {
                in_pool[other as usize] = false;
            }
        }
        counters.pairs_generated += pair_count(canopy.len());
        for (ai, &a) in canopy.iter().enumerate() {
            for &b in &canopy[ai + 1..] {
                seen.insert(RecordPair::new(a, b).expect("distinct members"));
            }
        }
    }
    let mut pairs: Vec<RecordPair> = seen.into_iter().collect();
    pairs.sort_unstable();
    counters.pairs_kept = pairs.len() as u64;
    Ok(BlockingResult { pairs, counters })
}

/// Block sizes, for histograms.
pub fn block_sizes(blocks: &[Block]) -> Vec<u64> {
    blocks.iter().map(|b| b.members.len() as u64).collect()
}

/// Render blocks as `key<TAB>id,id,...` lines, one per block.
pub fn render_blocks(blocks: &[Block], records: &RecordSet) -> String {
    let mut out = String::new();
    for b in blocks {
        out.push_str(&b.key);
        out.push('\t');
        let ids: Vec<&str> = b.members.iter().map(|&m| records.id_of(m)).collect();
        out.push_str(&ids.join(","));
        out.push('\n');
    }
    out
}
