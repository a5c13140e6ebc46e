//! String similarity for the canopy-clustering baseline.
//!
//! The baseline blocks on full author names with Jaro–Winkler similarity,
//! so that is what lives here; everything the learners need is in
//! [`crate::predicate`] and [`crate::tfidf`].

/// Jaro similarity in `[0, 1]`: the classic matching-window formula with
/// transposition counting. Empty-vs-empty compares as 1; empty-vs-nonempty
/// as 0.
pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    // Characters match when equal and within half the longer length
    // (minus one) of each other.
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_taken = vec![false; b.len()];
    let mut a_matches: Vec<char> = Vec::new();
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_taken[j] && b[j] == ca {
                b_taken[j] = true;
                a_matches.push(ca);
                break;
            }
        }
    }
    let m = a_matches.len();
    if m == 0 {
        return 0.0;
    }
    // Transpositions: matched characters from `b` in order, compared
    // against the matched characters from `a`.
    let b_matches: Vec<char> = b
        .iter()
        .zip(b_taken.iter())
        .filter(|(_, &taken)| taken)
        .map(|(&c, _)| c)
        .collect();
    let transpositions = a_matches
        .iter()
        .zip(b_matches.iter())
        .filter(|(x, y)| x != y)
        .count()
        / 2;
    let m = m as f64;
    let t = transpositions as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro–Winkler similarity with the standard prefix scale of 0.1 and a
/// prefix cap of four characters.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let j = jaro(a, b);
    let prefix = a
        .chars()
        .zip(b.chars())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count() as f64;
    j + prefix * 0.1 * (1.0 - j)
}
