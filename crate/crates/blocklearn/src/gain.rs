//! Gain functions scoring candidate terms during sequential covering.
//!
//! Each function reads four coverage counts: the labeled totals `P`/`N`
//! and the covered counts `p`/`n` of the term under consideration. The CNF
//! polarity is the exact label-swap dual of the DNF polarity — covering
//! negatives with negated predicates — so `calc_gain(kind, Cnf, c)` equals
//! `calc_gain(kind, Dnf, c.swapped())` by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coverage of one candidate term against a labeled pair sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageCounts {
    /// Total positive pairs in the sample.
    pub total_pos: u64,
    /// Total negative pairs in the sample.
    pub total_neg: u64,
    /// Positive pairs the term covers.
    pub pos: u64,
    /// Negative pairs the term covers.
    pub neg: u64,
}

impl CoverageCounts {
    pub fn new(total_pos: u64, total_neg: u64, pos: u64, neg: u64) -> CoverageCounts {
        CoverageCounts {
            total_pos,
            total_neg,
            pos,
            neg,
        }
    }

    /// Swap the roles of positives and negatives.
    pub fn swapped(&self) -> CoverageCounts {
        CoverageCounts {
            total_pos: self.total_neg,
            total_neg: self.total_pos,
            pos: self.neg,
            neg: self.pos,
        }
    }
}

/// Whether the learner is covering positives (DNF) or negatives (CNF).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Dnf,
    Cnf,
}

/// The three scoring heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainKind {
    /// `p · [ln(p/(p+n)) − ln(P/(P+N))]`: covered mass weighted by the
    /// lift of the term's precision over the base rate.
    InfoGain,
    /// Plain covered ratio `p/n`; `+∞` when a term covers positives and no
    /// negatives.
    PosNegRatio,
    /// Covered fraction of all pairs, admitted only above a completeness
    /// floor: `(p+n)/(P+N)` if `p/P > threshold`, else 0.
    ReductionRatio { threshold: f64 },
}

impl GainKind {
    /// Reduction-ratio gain with a validated completeness threshold.
    pub fn reduction_ratio(threshold: f64) -> Result<GainKind> {
        if !(0.0..1.0).contains(&threshold) || threshold <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "reduction-ratio threshold must lie in (0,1), got {threshold}"
            )));
        }
        Ok(GainKind::ReductionRatio { threshold })
    }

    pub fn validate(&self) -> Result<()> {
        if let GainKind::ReductionRatio { threshold } = self {
            GainKind::reduction_ratio(*threshold)?;
        }
        Ok(())
    }
}

/// Default completeness floor for the reduction-ratio gain.
pub const DEFAULT_RR_THRESHOLD: f64 = 0.9;

/// Score one candidate term. Errors when the sample lacks either class,
/// since every gain is undefined without both.
pub fn calc_gain(kind: GainKind, polarity: Polarity, c: CoverageCounts) -> Result<f64> {
    let c = match polarity {
        Polarity::Dnf => c,
        Polarity::Cnf => c.swapped(),
    };
    if c.total_pos == 0 || c.total_neg == 0 {
        return Err(Error::DegenerateCounts(c.total_pos, c.total_neg));
    }
    let (cap_p, cap_n) = (c.total_pos as f64, c.total_neg as f64);
    let (p, n) = (c.pos as f64, c.neg as f64);
    Ok(match kind {
        GainKind::InfoGain => {
            if c.pos == 0 {
                0.0
            } else {
                p * ((p / (p + n)).ln() - (cap_p / (cap_p + cap_n)).ln())
            }
        }
        GainKind::PosNegRatio => {
            if c.pos == 0 {
                0.0
            } else if c.neg == 0 {
                f64::INFINITY
            } else {
                p / n
            }
        }
        GainKind::ReductionRatio { threshold } => {
            if p / cap_p > threshold {
                (p + n) / (cap_p + cap_n)
            } else {
                0.0
            }
        }
    })
}
