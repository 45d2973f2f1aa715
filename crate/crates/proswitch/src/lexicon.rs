//! Domain-term lexicons and phrase-level term matching.
//!
//! A [`TermLexicon`] holds a normalized set of domain terms plus a compiled
//! multi-pattern automaton. [`TermLexicon::match_terms`] reports every
//! case-insensitive, word-boundary-aligned occurrence, resolving overlaps
//! longest-match-first then leftmost. Offsets refer to the normalized form
//! of the input text (NFC, lowercased).

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use aho_corasick::AhoCorasick;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::{normalize_for_matching, normalize_term};

/// Source file format for [`build_lexicon`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconFormat {
    /// XML containing `QualifierName` elements; the text content of each
    /// element (including nested children such as `<String>`) becomes a term.
    MeshXml,
    /// UTF-8 text, one term per line; blank lines ignored.
    PlainList,
}

impl std::str::FromStr for LexiconFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mesh-xml" => Ok(LexiconFormat::MeshXml),
            "plain-list" => Ok(LexiconFormat::PlainList),
            other => Err(format!("unknown lexicon format: {other}")),
        }
    }
}

/// Immutable domain-term set with a compiled matcher.
#[derive(Clone)]
pub struct TermLexicon {
    domain_id: String,
    terms: BTreeSet<String>,
    matcher: AhoCorasick,
    /// Pattern index -> term, in the order the automaton was built.
    patterns: Vec<String>,
    source_digest: String,
}

impl fmt::Debug for TermLexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TermLexicon")
            .field("domain_id", &self.domain_id)
            .field("terms", &self.terms.len())
            .field("source_digest", &self.source_digest)
            .finish()
    }
}

/// All selected term occurrences in one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMatchResult {
    /// `(term, byte_offset)` pairs, non-overlapping, sorted by offset.
    /// Offsets index the normalized (NFC, lowercased) text.
    pub hits: Vec<(String, usize)>,
    /// Number of occurrences; a term appearing twice counts twice.
    pub hit_count: usize,
}

impl TermLexicon {
    /// Build a lexicon from raw term strings. Terms are normalized
    /// (lowercase, single-space-collapsed) and deduplicated.
    pub fn from_terms<I, S>(domain_id: &str, raw_terms: I, source_digest: String) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<String> = raw_terms
            .into_iter()
            .map(|t| normalize_term(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::EmptyLexicon(domain_id.to_string()));
        }
        let patterns: Vec<String> = terms.iter().cloned().collect();
        let matcher = AhoCorasick::new(&patterns)
            .map_err(|e| Error::Input(format!("failed to compile term matcher: {e}")))?;
        Ok(TermLexicon {
            domain_id: domain_id.to_string(),
            terms,
            matcher,
            patterns,
            source_digest,
        })
    }

    pub fn domain_id(&self) -> &str {
        &self.domain_id
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(&normalize_term(term))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|s| s.as_str())
    }

    /// Find all term occurrences in `text`.
    ///
    /// Matching is case-insensitive and word-boundary-aligned; overlapping
    /// candidates are resolved longest-match-first, then leftmost. A term
    /// occurring twice produces two hits.
    pub fn match_terms(&self, text: &str) -> TermMatchResult {
        let normalized = normalize_for_matching(text);
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new(); // (start, end, pattern)
        for m in self.matcher.find_overlapping_iter(&normalized) {
            if is_word_aligned(&normalized, m.start(), m.end()) {
                candidates.push((m.start(), m.end(), m.pattern().as_usize()));
            }
        }
        // Longest first, then leftmost.
        candidates.sort_by(|a, b| {
            let len_a = a.1 - a.0;
            let len_b = b.1 - b.0;
            len_b.cmp(&len_a).then(a.0.cmp(&b.0))
        });

        let mut taken: Vec<(usize, usize)> = Vec::new();
        let mut hits: Vec<(usize, String)> = Vec::new();
        for (start, end, pat) in candidates {
            let idx = taken.partition_point(|&(s, _)| s < end);
            let overlaps_prev = idx > 0 && taken[idx - 1].1 > start;
            if overlaps_prev {
                continue;
            }
            taken.insert(idx, (start, end));
            hits.push((start, self.patterns[pat].clone()));
        }
        hits.sort_by_key(|&(offset, _)| offset);
        let hits: Vec<(String, usize)> = hits.into_iter().map(|(o, t)| (t, o)).collect();
        let hit_count = hits.len();
        TermMatchResult { hits, hit_count }
    }

    /// Write the lexicon to a stable, line-oriented cache file.
    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("#proswitch-lexicon v1\n");
        out.push_str(&format!("#domain={}\n", self.domain_id));
        out.push_str(&format!("#digest={}\n", self.source_digest));
        for term in &self.terms {
            out.push_str(term);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Load a lexicon from a cache file written by [`save_cache`].
    pub fn load_cache(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut lines = content.lines();
        match lines.next() {
            Some("#proswitch-lexicon v1") => {}
            _ => {
                return Err(Error::Input(format!(
                    "{}: not a v1 lexicon cache file",
                    path.display()
                )))
            }
        }
        let mut domain_id = String::new();
        let mut digest = String::new();
        let mut terms = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("#domain=") {
                domain_id = rest.to_string();
            } else if let Some(rest) = line.strip_prefix("#digest=") {
                digest = rest.to_string();
            } else if !line.starts_with('#') && !line.trim().is_empty() {
                terms.push(line.to_string());
            }
        }
        TermLexicon::from_terms(&domain_id, terms, digest)
    }
}

/// True when both edges of `[start, end)` fall on a word boundary: the
/// string edge, or a transition between alphanumeric and non-alphanumeric.
fn is_word_aligned(text: &str, start: usize, end: usize) -> bool {
    boundary_at(text, start) && boundary_at(text, end)
}

fn boundary_at(text: &str, pos: usize) -> bool {
    if pos == 0 || pos == text.len() {
        return true;
    }
    let before = text[..pos].chars().next_back();
    let after = text[pos..].chars().next();
    match (before, after) {
        (Some(b), Some(a)) => b.is_alphanumeric() != a.is_alphanumeric(),
        _ => true,
    }
}

/// Build a lexicon from a source file.
///
/// `mesh-xml` extracts the text content of every `QualifierName` element;
/// `plain-list` takes each nonblank line. Terms are normalized and
/// deduplicated; the source digest is the SHA-256 of the file bytes.
pub fn build_lexicon(path: &Path, format: LexiconFormat, domain_id: &str) -> Result<TermLexicon> {
    let bytes = std::fs::read(path)?;
    let digest = hex_digest(&bytes);
    let raw_terms = match format {
        LexiconFormat::MeshXml => extract_qualifier_names(&bytes)?,
        LexiconFormat::PlainList => {
            let mut terms = Vec::new();
            for line in bytes.lines() {
                let line = line.map_err(Error::Io)?;
                if !line.trim().is_empty() {
                    terms.push(line);
                }
            }
            terms
        }
    };
    if raw_terms.is_empty() {
        return Err(Error::EmptyLexicon(path.display().to_string()));
    }
    TermLexicon::from_terms(domain_id, raw_terms, digest)
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Pull the text content of every `QualifierName` element, including text
/// nested in child elements.
fn extract_qualifier_names(bytes: &[u8]) -> Result<Vec<String>> {
    use quick_xml::events::Event;
    use quick_xml::Reader;

    const TAG: &[u8] = b"QualifierName";

    let mut reader = Reader::from_reader(bytes);
    let mut buf = Vec::new();
    let mut terms = Vec::new();
    // Depth of QualifierName nesting; text accumulates only while > 0.
    let mut depth = 0usize;
    let mut current = String::new();

    loop {
        let pos = reader.buffer_position() as usize;
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => {
                if e.local_name().as_ref() == TAG {
                    if depth == 0 {
                        current.clear();
                    }
                    depth += 1;
                }
            }
            Ok(Event::End(e)) => {
                if e.local_name().as_ref() == TAG && depth > 0 {
                    depth -= 1;
                    if depth == 0 {
                        terms.push(std::mem::take(&mut current));
                    }
                }
            }
            Ok(Event::Text(t)) if depth > 0 => {
                let unescaped = t
                    .unescape()
                    .map_err(|e| xml_error(bytes, pos, &e.to_string()))?;
                current.push_str(&unescaped);
            }
            Ok(Event::CData(t)) if depth > 0 => {
                current.push_str(&String::from_utf8_lossy(&t));
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(xml_error(bytes, pos, &e.to_string())),
        }
        buf.clear();
    }
    Ok(terms)
}

fn xml_error(bytes: &[u8], pos: usize, message: &str) -> Error {
    let line = bytes[..pos.min(bytes.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1;
    Error::XmlParse {
        line,
        message: message.to_string(),
    }
}
