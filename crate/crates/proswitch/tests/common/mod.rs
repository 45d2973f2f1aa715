//! Brute-force reference implementations ("oracles") and fixture helpers
//! shared by the integration tests. These deliberately use different
//! mechanics than the production code: substring scans instead of an
//! automaton, joined-string n-gram keys instead of slice maps, line
//! scanning instead of an XML reader.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

/// Whitespace tokenization after punctuation detachment, done by padding
/// every symbol with spaces first.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() * 2);
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch.is_whitespace() {
            spaced.push(ch);
        } else {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

fn gram_counts(tokens: &[String], n: usize) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for start in 0..=tokens.len() - n {
        let key = tokens[start..start + n].join("\u{1}");
        *counts.entry(key).or_insert(0u64) += 1;
    }
    counts
}

fn oracle_precision(cand: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    if cand.len() < n {
        return 0.0;
    }
    let cand_counts = gram_counts(cand, n);
    let mut clipped = 0u64;
    for (gram, &count) in &cand_counts {
        let allowed = refs
            .iter()
            .map(|r| *gram_counts(r, n).get(gram).unwrap_or(&0))
            .max()
            .unwrap_or(0);
        clipped += count.min(allowed);
    }
    clipped as f64 / (cand.len() - n + 1) as f64
}

/// Length-ratio-penalized geometric mean of clipped 1..=m gram precisions,
/// against the closest-length reference (ties to the shorter one).
pub fn oracle_bleu(candidate: &str, references: &[&str], m: usize) -> f64 {
    let cand = oracle_tokens(candidate);
    if cand.is_empty() {
        return 0.0;
    }
    let refs: Vec<Vec<String>> = references.iter().map(|r| oracle_tokens(r)).collect();

    let mut best = (usize::MAX, usize::MAX);
    for r in &refs {
        let key = (r.len().abs_diff(cand.len()), r.len());
        if key < best {
            best = key;
        }
    }
    let closest = best.1;
    let brevity = if closest == 0 {
        1.0
    } else {
        (cand.len() as f64 / closest as f64).min(1.0)
    };

    let mut product = 1.0f64;
    for n in 1..=m {
        let p = oracle_precision(&cand, &refs, n);
        if p == 0.0 {
            return 0.0;
        }
        product *= p;
    }
    brevity * product.powf(1.0 / m as f64)
}

fn word_boundary(hay: &str, pos: usize) -> bool {
    if pos == 0 || pos == hay.len() {
        return true;
    }
    let prev = hay[..pos].chars().next_back().expect("pos > 0");
    let next = hay[pos..].chars().next().expect("pos < len");
    !(prev.is_alphanumeric() && next.is_alphanumeric())
}

/// Naive longest-match-first whole-word scan. `terms` must already be
/// canonical (lowercase, single-spaced); the text may be mixed case but
/// must lowercase without changing byte offsets (ASCII does).
pub fn oracle_match(terms: &[String], text: &str) -> Vec<(String, usize)> {
    let hay = text.to_lowercase();
    let mut candidates: Vec<(usize, usize, String)> = Vec::new();
    for term in terms {
        if term.is_empty() {
            continue;
        }
        let mut from = 0;
        while from <= hay.len() {
            let Some(found) = hay[from..].find(term.as_str()) else {
                break;
            };
            let start = from + found;
            let end = start + term.len();
            if word_boundary(&hay, start) && word_boundary(&hay, end) {
                candidates.push((start, end, term.clone()));
            }
            from = start + 1;
        }
    }
    candidates.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));

    let mut accepted: Vec<(usize, usize)> = Vec::new();
    let mut hits = Vec::new();
    for (s, e, term) in candidates {
        if accepted.iter().all(|&(a, b)| e <= a || b <= s) {
            accepted.push((s, e));
            hits.push((term, s));
        }
    }
    hits.sort_by_key(|h| h.1);
    hits
}

/// Extract QualifierName texts from XML where each element occupies one
/// line (the shape the test fixtures generate).
pub fn oracle_qualifier_texts(xml: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in xml.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("<QualifierName>") {
            if let Some(inner) = rest.strip_suffix("</QualifierName>") {
                out.push(inner.trim().to_string());
            }
        }
    }
    out
}

/// Write a mock gateway script: a JSON object mapping prompt substrings
/// to canned replies.
pub fn write_mock_script(path: &Path, entries: &[(&str, &str)]) {
    let map: BTreeMap<&str, &str> = entries.iter().copied().collect();
    std::fs::write(path, serde_json::to_string_pretty(&map).unwrap()).unwrap();
}

/// Path of the compiled CLI binary.
pub fn cli_bin() -> &'static str {
    env!("CARGO_BIN_EXE_proswitch")
}
