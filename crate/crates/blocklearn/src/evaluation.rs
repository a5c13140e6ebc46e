//! Blocking quality metrics, block-size histograms, ε-sweep PC–RR curves,
//! and cross-validation.
//!
//! Reduction ratio measures how much of the pair universe a blocking
//! function discards; pairs completeness measures how many true matches it
//! keeps. Both are computed from exact pair counts, either by intersecting
//! a candidate list with labeled truth or — far faster during sweeps — by
//! pushing a formula through a prebuilt [`CoverageMatrix`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::formula::{BlockingFormula, CnfFormula, Conjunction, DnfFormula};
use crate::learner::{
    learn_cnf, learn_disjoint_cnf, learn_dnf, CnfSession, CoverageMatrix, DnfSession,
    LearnerConfig,
};
use crate::model::{LabeledPairSet, RecordPair, RecordSet};
use crate::predicate::{BlockingPredicate, PredicateSet};
use crate::tfidf::TfidfModel;

/// Blocking quality: reduction ratio, pairs completeness, and their
/// harmonic mean, plus the exact counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub rr: f64,
    pub pc: f64,
    pub f: f64,
    pub total_pos: u64,
    pub total_neg: u64,
    pub covered_pos: u64,
    pub covered_neg: u64,
}

/// Metrics from raw counts: `rr = 1 − (p+n)/(P+N)`, `pc = p/P`,
/// `f = 2·rr·pc/(rr+pc)` (0 when the denominator vanishes).
pub fn metrics_from_counts(
    total_pos: u64,
    total_neg: u64,
    covered_pos: u64,
    covered_neg: u64,
) -> Result<Metrics> {
    if total_pos == 0 {
        return Err(Error::DegenerateLabels);
    }
    if covered_pos > total_pos || covered_neg > total_neg {
        return Err(Error::InvalidConfig(format!(
            "covered counts ({covered_pos}, {covered_neg}) exceed totals ({total_pos}, {total_neg})"
        )));
    }
    let kept = (covered_pos + covered_neg) as f64 / (total_pos + total_neg) as f64;
    let rr = 1.0 - kept;
    let pc = covered_pos as f64 / total_pos as f64;
    let f = if rr + pc > 0.0 { 2.0 * rr * pc / (rr + pc) } else { 0.0 };
    Ok(Metrics {
        rr,
        pc,
        f,
        total_pos,
        total_neg,
        covered_pos,
        covered_neg,
    })
}

impl Metrics {
    pub fn render(&self) -> String {
        format!(
            "pairs: {}+ / {}-  kept: {}+ / {}-\nRR = {:.6}\nPC = {:.6}\nF  = {:.6}\n",
            self.total_pos, self.total_neg, self.covered_pos, self.covered_neg,
            self.rr, self.pc, self.f
        )
    }
}

/// Score a candidate pair list against labeled truth. Every candidate must
/// appear in the truth set — blocking never invents pairs, so an unlabeled
/// candidate means the universes differ.
pub fn compute_metrics(candidates: &[RecordPair], truth: &LabeledPairSet) -> Result<Metrics> {
    let mut covered_pos = 0u64;
    let mut covered_neg = 0u64;
    for p in candidates {
        if truth.is_positive(p) {
            covered_pos += 1;
        } else if truth.is_negative(p) {
            covered_neg += 1;
        } else {
            return Err(Error::UnlabeledPair(
                p.left().to_string(),
                p.right().to_string(),
            ));
        }
    }
    metrics_from_counts(
        truth.positives().len() as u64,
        truth.negatives().len() as u64,
        covered_pos,
        covered_neg,
    )
}

/// Default block-size bin boundaries: [2,10), [10,100), [100,1k),
/// [1k,10k), [10k,50k), [50k,∞).
pub const DEFAULT_HIST_BOUNDS: [u64; 6] = [2, 10, 100, 1_000, 10_000, 50_000];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistBin {
    pub lo: u64,
    /// Exclusive upper bound; `None` for the open last bin.
    pub hi: Option<u64>,
    pub count: u64,
}

/// Block-size distribution over blocks of size ≥ 2; singleton blocks are
/// counted separately since they generate no pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bins: Vec<HistBin>,
    pub singletons: u64,
    /// Blocks of size ≥ 2 (the percentage denominator).
    pub total: u64,
}

/// Bin block sizes by the given ascending boundaries (first boundary is
/// the smallest counted size; sizes below it count as singletons).
pub fn block_size_histogram(sizes: &[u64], bounds: &[u64]) -> Histogram {
    assert!(
        !bounds.is_empty() && bounds.windows(2).all(|w| w[0] < w[1]),
        "bin boundaries must be ascending"
    );
    let mut bins: Vec<HistBin> = bounds
        .iter()
        .enumerate()
        .map(|(i, &lo)| HistBin {
            lo,
            hi: bounds.get(i + 1).copied(),
            count: 0,
        })
        .collect();
    let mut singletons = 0u64;
    let mut total = 0u64;
    for &s in sizes {
        if s < bounds[0] {
            singletons += 1;
            continue;
        }
        total += 1;
        let i = match bounds.binary_search(&s) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        bins[i].count += 1;
    }
    Histogram {
        bins,
        singletons,
        total,
    }
}

impl Histogram {
    /// Percentage label for one bin: two decimals, with a `<0.01` sentinel
    /// for nonzero bins that would otherwise print as 0.00.
    pub fn percentage_label(&self, bin: &HistBin) -> String {
        if self.total == 0 {
            return "0.00".to_string();
        }
        let pct = 100.0 * bin.count as f64 / self.total as f64;
        let label = format!("{pct:.2}");
        if label == "0.00" && bin.count > 0 {
            "<0.01".to_string()
        } else {
            label
        }
    }

    /// Aligned text table: size range, frequency with thousands
    /// separators, percentage column, and a total row.
    pub fn render(&self) -> String {
        let mut rows: Vec<(String, String, String)> = self
            .bins
            .iter()
            .map(|b| {
                let range = match b.hi {
                    Some(hi) => format!("{} <= n < {}", b.lo, hi),
                    None => format!("n >= {}", b.lo),
                };
                (range, group_thousands(b.count), format!("{}%", self.percentage_label(b)))
            })
            .collect();
        rows.push((
            "Total".to_string(),
            group_thousands(self.total),
            "100.0%".to_string(),
        ));
        let head = ("Block Size", "Frequency", "Percentage");
        let w0 = rows.iter().map(|r| r.0.len()).chain([head.0.len()]).max().unwrap();
        let w1 = rows.iter().map(|r| r.1.len()).chain([head.1.len()]).max().unwrap();
        let w2 = rows.iter().map(|r| r.2.len()).chain([head.2.len()]).max().unwrap();
        let mut out = format!(
            "{:<w0$}  {:>w1$}  {:>w2$}\n",
            head.0, head.1, head.2
        );
        for (a, b, c) in rows {
            out.push_str(&format!("{a:<w0$}  {b:>w1$}  {c:>w2$}\n"));
        }
        out
    }
}

/// `1586677` → `1,586,677`.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Which formula shape to learn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Dnf,
    Cnf,
    DisjointCnf,
}

fn row_for<'a>(
    p: &BlockingPredicate,
    preds: &PredicateSet,
    rows: impl Fn(usize) -> &'a BitSet,
) -> Result<BitSet> {
    if p.negated {
        let base = p.negate();
        let i = preds
            .position(&base)
            .ok_or_else(|| Error::InvalidPredicate(format!("{base} is not in the predicate set")))?;
        Ok(rows(i).flipped())
    } else {
        let i = preds
            .position(p)
            .ok_or_else(|| Error::InvalidPredicate(format!("{p} is not in the predicate set")))?;
        Ok(rows(i).clone())
    }
}

fn conj_bits<'a>(
    preds_in_term: &[BlockingPredicate],
    len: usize,
    preds: &PredicateSet,
    rows: &impl Fn(usize) -> &'a BitSet,
) -> Result<BitSet> {
    let mut acc = BitSet::with_len(len);
    acc.fill_ones();
    for p in preds_in_term {
        acc.and_assign(&row_for(p, preds, rows)?);
    }
    Ok(acc)
}

fn dnf_bits<'a>(
    f: &DnfFormula,
    len: usize,
    preds: &PredicateSet,
    rows: &impl Fn(usize) -> &'a BitSet,
) -> Result<BitSet> {
    let mut acc = BitSet::with_len(len);
    for term in f.terms() {
        acc.or_assign(&conj_bits(term.predicates(), len, preds, rows)?);
    }
    Ok(acc)
}

fn cnf_bits<'a>(
    f: &CnfFormula,
    len: usize,
    preds: &PredicateSet,
    rows: &impl Fn(usize) -> &'a BitSet,
) -> Result<BitSet> {
    let mut acc = BitSet::with_len(len);
    acc.fill_ones();
    for clause in f.clauses() {
        let mut cl = BitSet::with_len(len);
        for p in clause.predicates() {
            cl.or_assign(&row_for(p, preds, rows)?);
        }
        acc.and_assign(&cl);
    }
    Ok(acc)
}

fn stage1_bits<'a>(
    conj: &Conjunction,
    len: usize,
    preds: &PredicateSet,
    rows: &impl Fn(usize) -> &'a BitSet,
) -> Result<BitSet> {
    conj_bits(conj.predicates(), len, preds, rows)
}

/// Evaluate a formula over every pair of a coverage matrix at bitset
/// speed: the returned sets mark which positive and negative samples the
/// formula keeps. Exactly equivalent to pairwise evaluation; the formula's
/// predicates must all come from the matrix's predicate set.
pub fn formula_coverage(
    f: &BlockingFormula,
    cov: &CoverageMatrix,
    preds: &PredicateSet,
) -> Result<(BitSet, BitSet)> {
    let pos = eval_side(f, preds, cov.n_pos(), &|i| cov.pos_row(i))?;
    let neg = eval_side(f, preds, cov.n_neg(), &|i| cov.neg_row(i))?;
    Ok((pos, neg))
}

fn eval_side<'a>(
    f: &BlockingFormula,
    preds: &PredicateSet,
    len: usize,
    rows: &impl Fn(usize) -> &'a BitSet,
) -> Result<BitSet> {
    match f {
        BlockingFormula::Dnf(d) => dnf_bits(d, len, preds, rows),
        BlockingFormula::Cnf(c) => cnf_bits(c, len, preds, rows),
        BlockingFormula::DisjointCnf(dc) => {
            let mut acc = stage1_bits(&dc.stage1, len, preds, rows)?;
            acc.and_assign(&cnf_bits(&dc.refine, len, preds, rows)?);
            Ok(acc)
        }
    }
}

/// Covered-pair counts of a formula over a coverage matrix.
pub fn formula_counts(
    f: &BlockingFormula,
    cov: &CoverageMatrix,
    preds: &PredicateSet,
) -> Result<(u64, u64)> {
    let (pos, neg) = formula_coverage(f, cov, preds)?;
    Ok((pos.count_ones(), neg.count_ones()))
}

/// A train/test fold with coverage matrices prebuilt, so learning and
/// evaluation inside sweeps cost bitset passes instead of pair scans.
pub struct FoldEval<'a> {
    pub train: &'a LabeledPairSet,
    pub test: &'a LabeledPairSet,
    preds_full: &'a PredicateSet,
    preds_disjoint: Option<&'a PredicateSet>,
    train_full: CoverageMatrix,
    test_full: CoverageMatrix,
    train_disjoint: Option<CoverageMatrix>,
}

impl<'a> FoldEval<'a> {
    pub fn build(
        records: &RecordSet,
        train: &'a LabeledPairSet,
        test: &'a LabeledPairSet,
        preds_full: &'a PredicateSet,
        preds_disjoint: Option<&'a PredicateSet>,
        tfidf: Option<&TfidfModel>,
    ) -> Result<FoldEval<'a>> {
        Ok(FoldEval {
            train,
            test,
            preds_full,
            preds_disjoint,
            train_full: CoverageMatrix::build(records, train, preds_full, tfidf)?,
            test_full: CoverageMatrix::build(records, test, preds_full, tfidf)?,
            train_disjoint: match preds_disjoint {
                Some(pd) => Some(CoverageMatrix::build(records, train, pd, tfidf)?),
                None => None,
            },
        })
    }

    pub fn train_matrix(&self) -> &CoverageMatrix {
        &self.train_full
    }

    /// Learn one formula on the training fold. The disjoint form splits
    /// the epsilon budget evenly between its two stages.
    pub fn learn(&self, form: FormKind, cfg: &LearnerConfig) -> Result<BlockingFormula> {
        Ok(match form {
            FormKind::Dnf => {
                BlockingFormula::Dnf(learn_dnf(&self.train_full, self.preds_full, cfg)?)
            }
            FormKind::Cnf => {
                BlockingFormula::Cnf(learn_cnf(&self.train_full, self.preds_full, cfg)?)
            }
            FormKind::DisjointCnf => {
                let pd = self.preds_disjoint.ok_or_else(|| {
                    Error::InvalidConfig(
                        "disjoint learning needs the non-relative predicate set".into(),
                    )
                })?;
                let cd = self.train_disjoint.as_ref().expect("built with preds_disjoint");
                let half = cfg.epsilon / 2.0;
                BlockingFormula::DisjointCnf(learn_disjoint_cnf(
                    cd,
                    &self.train_full,
                    pd,
                    self.preds_full,
                    cfg,
                    half,
                    half,
                )?)
            }
        })
    }

    pub fn train_metrics(&self, f: &BlockingFormula) -> Result<Metrics> {
        let (p, n) = formula_counts(f, &self.train_full, self.preds_full)?;
        metrics_from_counts(
            self.train.positives().len() as u64,
            self.train.negatives().len() as u64,
            p,
            n,
        )
    }

    pub fn test_metrics(&self, f: &BlockingFormula) -> Result<Metrics> {
        let (p, n) = formula_counts(f, &self.test_full, self.preds_full)?;
        metrics_from_counts(
            self.test.positives().len() as u64,
            self.test.negatives().len() as u64,
            p,
            n,
        )
    }
}

/// One swept operating point.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub epsilon: f64,
    /// Test-fold metrics (train metrics are reported separately when
    /// needed — curves are about generalization).
    pub metrics: Metrics,
    /// Text serialization of the learned formula.
    pub formula: String,
}

/// The default epsilon grid, densified near zero where the high-PC action
/// is.
pub const DEFAULT_EPSILON_GRID: [f64; 8] =
    [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2];

/// Sweep epsilon over one fold: learn at each grid value on the training
/// half, score on the test half. Candidate pools are built once per form
/// and reused across the grid.
pub fn pc_rr_curve(
    fold: &FoldEval,
    form: FormKind,
    cfg: &LearnerConfig,
    grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    let mut eps: Vec<f64> = grid.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut points = Vec::with_capacity(eps.len());
    match form {
        FormKind::Dnf => {
            let session = DnfSession::new(&fold.train_full, fold.preds_full, cfg)?;
            for &e in &eps {
                let f = BlockingFormula::Dnf(session.learn(e)?);
                points.push(CurvePoint {
                    epsilon: e,
                    metrics: fold.test_metrics(&f)?,
                    formula: f.to_string(),
                });
            }
        }
        FormKind::Cnf => {
            let session = CnfSession::new(&fold.train_full, fold.preds_full, cfg)?;
            for &e in &eps {
                let f = BlockingFormula::Cnf(session.learn(e)?);
                points.push(CurvePoint {
                    epsilon: e,
                    metrics: fold.test_metrics(&f)?,
                    formula: f.to_string(),
                });
            }
        }
        FormKind::DisjointCnf => {
            for &e in &eps {
                let f = fold.learn(form, &cfg.with_epsilon(e))?;
                points.push(CurvePoint {
                    epsilon: e,
                    metrics: fold.test_metrics(&f)?,
                    formula: f.to_string(),
                });
            }
        }
    }
    Ok(points)
}

/// Render curve points as `epsilon,rr,pc,f` CSV.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("epsilon,rr,pc,f\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.epsilon, p.metrics.rr, p.metrics.pc, p.metrics.f
        ));
    }
    out
}

/// How cross-validation partitions the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Stratified split of the labeled pairs. The default; note that both
    /// folds can see pairs touching the same record.
    Pairs,
    /// Split the records; a fold's pairs are those with both endpoints in
    /// the fold (cross-fold pairs are unused). Avoids record leakage.
    Records,
}

#[derive(Debug, Clone, Copy)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for CvConfig {
    fn default() -> CvConfig {
        CvConfig {
            folds: 2,
            seed: 0,
            mode: SplitMode::Pairs,
        }
    }
}

/// Seeded (train, test) label splits, one per fold.
pub fn cv_splits(
    records: &RecordSet,
    labels: &LabeledPairSet,
    cv: &CvConfig,
) -> Result<Vec<(LabeledPairSet, LabeledPairSet)>> {
    if cv.folds < 2 {
        return Err(Error::InvalidConfig("cross-validation needs >= 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cv.seed);
    let n = records.len();
    let mut splits = Vec::with_capacity(cv.folds);
    match cv.mode {
        SplitMode::Pairs => {
            let deal = |pairs: &[RecordPair], rng: &mut ChaCha8Rng| -> Vec<Vec<RecordPair>> {
                let mut shuffled: Vec<RecordPair> = pairs.to_vec();
                shuffled.shuffle(rng);
                let mut out = vec![Vec::new(); cv.folds];
                for (i, p) in shuffled.into_iter().enumerate() {
                    out[i % cv.folds].push(p);
                }
                out
            };
            let pos_folds = deal(labels.positives(), &mut rng);
            let neg_folds = deal(labels.negatives(), &mut rng);
            for k in 0..cv.folds {
                let test = LabeledPairSet::new(pos_folds[k].clone(), neg_folds[k].clone(), n)?;
                let (mut tp, mut tn) = (Vec::new(), Vec::new());
                for j in 0..cv.folds {
                    if j != k {
                        tp.extend_from_slice(&pos_folds[j]);
                        tn.extend_from_slice(&neg_folds[j]);
                    }
                }
                splits.push((LabeledPairSet::new(tp, tn, n)?, test));
            }
        }
        SplitMode::Records => {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.shuffle(&mut rng);
            let mut fold_of = vec![0usize; n];
            for (i, &r) in order.iter().enumerate() {
                fold_of[r as usize] = i % cv.folds;
            }
            for k in 0..cv.folds {
                let select = |want_test: bool| -> (Vec<RecordPair>, Vec<RecordPair>) {
                    let keep = |p: &&RecordPair| {
                        let (fa, fb) = (fold_of[p.left() as usize], fold_of[p.right() as usize]);
                        if want_test {
                            fa == k && fb == k
                        } else {
                            fa != k && fb != k
                        }
                    };
                    (
                        labels.positives().iter().filter(keep).copied().collect(),
                        labels.negatives().iter().filter(keep).copied().collect(),
                    )
                };
                let (tp, tn) = select(false);
                let (sp, sn) = select(true);
                splits.push((
                    LabeledPairSet::new(tp, tn, n)?,
                    LabeledPairSet::new(sp, sn, n)?,
                ));
            }
        }
    }
    for (train, test) in &splits {
        if train.positives().is_empty()
            || train.negatives().is_empty()
            || test.positives().is_empty()
        {
            return Err(Error::DegenerateLabels);
        }
    }
    Ok(splits)
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub formula: BlockingFormula,
    pub train_metrics: Metrics,
    pub test_metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub folds: Vec<FoldOutcome>,
    pub mean_rr: f64,
    pub mean_pc: f64,
    pub mean_f: f64,
}

/// K-fold cross-validation: learn on each training split, score its test
/// split, and average the test metrics.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    records: &RecordSet,
    labels: &LabeledPairSet,
    preds_full: &PredicateSet,
    preds_disjoint: Option<&PredicateSet>,
    tfidf: Option<&TfidfModel>,
    form: FormKind,
    cfg: &LearnerConfig,
    cv: &CvConfig,
) -> Result<CvOutcome> {
    let splits = cv_splits(records, labels, cv)?;
    let mut folds = Vec::with_capacity(splits.len());
    for (k, (train, test)) in splits.iter().enumerate() {
        let fold = FoldEval::build(records, train, test, preds_full, preds_disjoint, tfidf)?;
        let formula = fold.learn(form, cfg)?;
        folds.push(FoldOutcome {
            fold: k,
            train_metrics: fold.train_metrics(&formula)?,
            test_metrics: fold.test_metrics(&formula)?,
            formula,
        });
    }
    let m = folds.len() as f64;
    let mean = |f: fn(&FoldOutcome) -> f64| folds.iter().map(f).sum::<f64>() / m;
    Ok(CvOutcome {
        mean_rr: mean(|o| o.test_metrics.rr),
        mean_pc: mean(|o| o.test_metrics.pc),
        mean_f: mean(|o| o.test_metrics.f),
        folds,
    })
}
