//! Line-oriented text format for blocking formulas.
//!
//! The first line names the form (`DNF`, `CNF`, `DISJOINT-CNF`); each
//! following line holds one brace-wrapped group, with continuation lines
//! led by the outer connective:
//!
//! ```text
//! CNF
//! { (fn,first(1)) OR (coauth,cos(0.4)) }
//! AND { (ln,exact) }
//! ```
//!
//! An empty DNF prints as `FALSE`, an empty CNF as `TRUE`. The disjoint
//! form lists its hash-stage conjunction (or `TRUE`), a `REFINE` line, and
//! then a CNF body. `compatible` parses as the name-aware variant on name
//! keys and the plain one elsewhere.

use std::fmt;

use ordered_float::NotNan;

use crate::error::{Error, Result};
use crate::predicate::{AttrKey, BlockingPredicate, SimilarityCriterion};

use super::{
    BlockingFormula, CnfFormula, Conjunction, ConjunctionTerm, DisjointFormula, DisjunctionClause,
    DnfFormula,
};

pub(crate) fn write_group(
    f: &mut fmt::Formatter<'_>,
    preds: &[BlockingPredicate],
    joiner: &str,
) -> fmt::Result {
    f.write_str("{ ")?;
    for (i, p) in preds.iter().enumerate() {
        if i > 0 {
            f.write_str(joiner)?;
        }
        write!(f, "{p}")?;
    }
    f.write_str(" }")
}

pub(crate) fn write_dnf_body(f: &mut fmt::Formatter<'_>, dnf: &DnfFormula) -> fmt::Result {
    if dnf.is_empty() {
        return f.write_str("FALSE");
    }
    for (i, t) in dnf.terms().iter().enumerate() {
        if i > 0 {
            f.write_str("\nOR ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

pub(crate) fn write_cnf_body(f: &mut fmt::Formatter<'_>, cnf: &CnfFormula) -> fmt::Result {
    if cnf.is_empty() {
        return f.write_str("TRUE");
    }
    for (i, c) in cnf.clauses().iter().enumerate() {
        if i > 0 {
            f.write_str("\nAND ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

pub(crate) fn write_formula(f: &mut fmt::Formatter<'_>, formula: &BlockingFormula) -> fmt::Result {
    match formula {
        BlockingFormula::Dnf(d) => {
            f.write_str("DNF\n")?;
            write_dnf_body(f, d)
        }
        BlockingFormula::Cnf(c) => {
            f.write_str("CNF\n")?;
            write_cnf_body(f, c)
        }
        BlockingFormula::DisjointCnf(d) => {
            f.write_str("DISJOINT-CNF\n")?;
            write!(f, "{}", d.stage1)?;
            f.write_str("\nREFINE\n")?;
            write_cnf_body(f, &d.refine)
        }
    }
}

fn perr(pos: usize, msg: impl Into<String>) -> Error {
    Error::FormulaParse {
        pos,
        msg: msg.into(),
    }
}

/// Parse one predicate like `(fn,first(3))` or `NOT (year,exact)`.
pub fn parse_predicate(s: &str) -> Result<BlockingPredicate> {
    parse_predicate_at(0, s)
}

fn parse_predicate_at(pos: usize, tok: &str) -> Result<BlockingPredicate> {
    let tok = tok.trim();
    let (negated, rest) = match tok.strip_prefix("NOT ") {
        Some(r) => (true, r.trim_start()),
        None => (false, tok),
    };
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| perr(pos, format!("expected `(key,criterion)`, got `{tok}`")))?;
    let (key_s, crit_s) = inner
        .split_once(',')
        .ok_or_else(|| perr(pos, format!("missing `,` in predicate `{tok}`")))?;
    let key = AttrKey::from_short_name(key_s.trim())
        .ok_or_else(|| perr(pos, format!("unknown attribute `{}`", key_s.trim())))?;
    let criterion = parse_criterion(pos, key, crit_s.trim())?;
    let p = BlockingPredicate {
        key,
        criterion,
        negated,
    };
    p.validate().map_err(|e| perr(pos, e.to_string()))?;
    Ok(p)
}

fn parse_criterion(pos: usize, key: AttrKey, s: &str) -> Result<SimilarityCriterion> {
    if let Some((name, rest)) = s.split_once('(') {
        let arg = rest
            .strip_suffix(')')
            .ok_or_else(|| perr(pos, format!("unterminated criterion `{s}`")))?;
        let uint = || {
            arg.parse::<u32>()
                .map_err(|_| perr(pos, format!("`{name}` needs an integer, got `{arg}`")))
        };
        Ok(match name {
            "first" => SimilarityCriterion::FirstN { n: uint()? },
            "last" => SimilarityCriterion::LastN { n: uint()? },
            "digit" => SimilarityCriterion::DigitN { n: uint()? },
            "diff" => SimilarityCriterion::YearDiff { max: uint()? },
            "cos" => {
                let t: f64 = arg
                    .parse()
                    .map_err(|_| perr(pos, format!("`cos` needs a number, got `{arg}`")))?;
                SimilarityCriterion::CosineTfidf {
                    threshold: NotNan::new(t)
                        .map_err(|_| perr(pos, "cosine threshold is NaN"))?,
                }
            }
            _ => return Err(perr(pos, format!("unknown criterion `{name}`"))),
        })
    } else {
        Ok(match s {
            "exact" => SimilarityCriterion::Exact,
            "order" => SimilarityCriterion::Order,
            "compatible" => {
                if key.is_name() {
                    SimilarityCriterion::NameCompatible
                } else {
                    SimilarityCriterion::Compatible
                }
            }
            _ => return Err(perr(pos, format!("unknown criterion `{s}`"))),
        })
    }
}

fn parse_group(pos: usize, s: &str, joiner: &str) -> Result<Vec<BlockingPredicate>> {
    let inner = s
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| perr(pos, format!("expected `{{ ... }}`, got `{s}`")))?
        .trim();
    if inner.is_empty() {
        return Err(perr(pos, "empty group"));
    }
    inner
        .split(joiner)
        .map(|tok| parse_predicate_at(pos, tok))
        .collect()
}

type Line<'a> = (usize, &'a str);

fn parse_dnf_body(body: &[Line]) -> Result<DnfFormula> {
    let Some(&(first_pos, first)) = body.first() else {
        return Err(perr(0, "missing DNF body"));
    };
    if first == "FALSE" {
        if body.len() > 1 {
            return Err(perr(body[1].0, "unexpected text after FALSE"));
        }
        return Ok(DnfFormula::empty());
    }
    let mut terms = Vec::new();
    for (i, &(pos, line)) in body.iter().enumerate() {
        let group = if i == 0 {
            line
        } else {
            line.strip_prefix("OR ")
                .ok_or_else(|| perr(pos, format!("expected `OR {{ ... }}`, got `{line}`")))?
        };
        let preds = parse_group(pos, group.trim(), " AND ")?;
        terms.push(ConjunctionTerm::new(preds).map_err(|e| perr(pos, e.to_string()))?);
    }
    DnfFormula::new(terms).map_err(|e| perr(first_pos, e.to_string()))
}

fn parse_cnf_body(body: &[Line]) -> Result<CnfFormula> {
    let Some(&(first_pos, first)) = body.first() else {
        return Err(perr(0, "missing CNF body"));
    };
    if first == "TRUE" {
        if body.len() > 1 {
            return Err(perr(body[1].0, "unexpected text after TRUE"));
        }
        return Ok(CnfFormula::empty());
    }
    let mut clauses = Vec::new();
    for (i, &(pos, line)) in body.iter().enumerate() {
        let group = if i == 0 {
            line
        } else {
            line.strip_prefix("AND ")
                .ok_or_else(|| perr(pos, format!("expected `AND {{ ... }}`, got `{line}`")))?
        };
        let preds = parse_group(pos, group.trim(), " OR ")?;
        clauses.push(DisjunctionClause::new(preds).map_err(|e| perr(pos, e.to_string()))?);
    }
    CnfFormula::new(clauses).map_err(|e| perr(first_pos, e.to_string()))
}

fn parse_disjoint_body(body: &[Line]) -> Result<DisjointFormula> {
    let Some(&(s1_pos, s1_line)) = body.first() else {
        return Err(perr(0, "missing blocking stage"));
    };
    let stage1 = if s1_line == "TRUE" {
        Conjunction::empty()
    } else {
        let preds = parse_group(s1_pos, s1_line, " AND ")?;
        Conjunction::new(preds).map_err(|e| perr(s1_pos, e.to_string()))?
    };
    let Some(&(r_pos, r_line)) = body.get(1) else {
        return Err(perr(s1_pos, "missing REFINE line"));
    };
    if r_line != "REFINE" {
        return Err(perr(r_pos, format!("expected `REFINE`, got `{r_line}`")));
    }
    let refine = parse_cnf_body(&body[2..]).map_err(|e| match e {
        Error::FormulaParse { pos: 0, msg } => perr(r_pos, msg),
        e => e,
    })?;
    DisjointFormula::new(stage1, refine).map_err(|e| perr(s1_pos, e.to_string()))
}

/// Parse the text form of any formula. Positions in errors are 1-based
/// line numbers.
pub fn parse_formula(s: &str) -> Result<BlockingFormula> {
    let lines: Vec<Line> = s
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let Some(&(hpos, header)) = lines.first() else {
        return Err(perr(0, "empty formula text"));
    };
    let body = &lines[1..];
    // Body parsers report `pos: 0` when the body is missing entirely;
    // rewrite that to the header's line so the message points somewhere.
    let fix = |e: Error| match e {
        Error::FormulaParse { pos: 0, msg } => perr(hpos, msg),
        e => e,
    };
    match header {
        "DNF" => Ok(BlockingFormula::Dnf(parse_dnf_body(body).map_err(fix)?)),
        "CNF" => Ok(BlockingFormula::Cnf(parse_cnf_body(body).map_err(fix)?)),
        "DISJOINT-CNF" => Ok(BlockingFormula::DisjointCnf(
            parse_disjoint_body(body).map_err(fix)?,
        )),
        other => Err(perr(hpos, format!("unknown formula header `{other}`"))),
    }
}
