//! Reference-based quality scores: a ratio-clamped BLEU variant and
//! BERTScore over a pluggable embedding provider.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::tokenize;

/// Brevity penalty for [`bleu_with_penalty`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrevityPenalty {
    /// min(1, len_cand / len_closest_ref); the default.
    RatioClamp,
    /// Standard exponential penalty: 1 if cand longer, else exp(1 - r/c).
    Exponential,
}

/// Per-candidate quality bundle (BLEU vs all references, BERTScore vs one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityScores {
    pub bleu: f64,
    pub bert_precision: f64,
    pub bert_recall: f64,
    pub bert_f: f64,
}

/// BLEU with the ratio-clamp brevity term:
/// min(1, len_cand/len_closest_ref) × (∏_{i=1..m} P_i)^{1/m}.
///
/// P_i is i-gram precision clipped against per-gram max counts over all
/// references; any P_i = 0 zeroes the score (no smoothing). Lengths are
/// token counts after punctuation detachment. Closest reference = nearest
/// token count, ties to the shorter.
pub fn bleu<S: AsRef<str>>(candidate: &str, references: &[S], m: usize) -> Result<f64> {
    bleu_with_penalty(candidate, references, m, BrevityPenalty::RatioClamp)
}

pub fn bleu_with_penalty<S: AsRef<str>>(
    candidate: &str,
    references: &[S],
    m: usize,
    penalty: BrevityPenalty,
) -> Result<f64> {
    if m < 1 {
        return Err(Error::Input("bleu order m must be >= 1".into()));
    }
    if references.is_empty() {
        return Err(Error::Input("bleu needs at least one reference".into()));
    }
    let cand = tokenize(candidate);
    if cand.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r.as_ref())).collect();

    let closest_len = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| {
            let diff = len.abs_diff(cand.len());
            (diff, len)
        })
        .expect("non-empty references");

    let brevity = match penalty {
        BrevityPenalty::RatioClamp => {
            if closest_len == 0 {
                1.0
            } else {
                (cand.len() as f64 / closest_len as f64).min(1.0)
            }
        }
        BrevityPenalty::Exponential => {
            if cand.len() >= closest_len {
                1.0
            } else {
                (1.0 - closest_len as f64 / cand.len() as f64).exp()
            }
        }
    };

    let mut product = 1.0f64;
    for i in 1..=m {
        let p = ngram_precision(&cand, &refs, i);
        if p == 0.0 {
            return Ok(0.0);
        }
        product *= p;
    }
    Ok(brevity * product.powf(1.0 / m as f64))
}

/// Clipped i-gram precision of `cand` against the union-max counts over
/// `refs`. Zero when the candidate has no i-grams.
fn ngram_precision(cand: &[String], refs: &[Vec<String>], i: usize) -> f64 {
    use std::collections::HashMap;

    if cand.len() < i {
        return 0.0;
    }
    let mut cand_counts: HashMap<&[String], u64> = HashMap::new();
    for gram in cand.windows(i) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let mut ref_max: HashMap<&[String], u64> = HashMap::new();
    for r in refs {
        let mut counts: HashMap<&[String], u64> = HashMap::new();
        for gram in r.windows(i) {
            *counts.entry(gram).or_insert(0) += 1;
        }
        for (gram, c) in counts {
            let entry = ref_max.entry(gram).or_insert(0);
            *entry = (*entry).max(c);
        }
    }
    let clipped: u64 = cand_counts
        .iter()
        .map(|(gram, &c)| c.min(*ref_max.get(gram).unwrap_or(&0)))
        .sum();
    let total = (cand.len() - i + 1) as u64;
    clipped as f64 / total as f64
}

/// Source of per-token embeddings. Implementations must be deterministic
/// (same text, same vectors) and use one fixed dimension >= 8.
pub trait EmbeddingProvider {
    fn embed(&self, text: &str) -> Result<Vec<Vec<f64>>>;
}

/// Greedy-matching BERTScore components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BertScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// P = mean over candidate tokens of the max cosine similarity to any
/// reference token; R symmetric; F = 2PR/(P+R), 0 when P+R = 0.
pub fn bert_score(
    candidate: &str,
    reference: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<BertScores> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::Input("bert_score needs non-empty texts".into()));
    }
    let cand = provider.embed(candidate)?;
    let refr = provider.embed(reference)?;
    if cand.is_empty() || refr.is_empty() {
        return Err(Error::Input(
            "embedding provider returned no tokens for non-empty text".into(),
        ));
    }
    let dim = cand[0].len();
    if cand.iter().chain(refr.iter()).any(|v| v.len() != dim) {
        return Err(Error::Input("embedding dimension mismatch".into()));
    }

    let precision = mean_max_cosine(&cand, &refr);
    let recall = mean_max_cosine(&refr, &cand);
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BertScores {
        precision,
        recall,
        f,
    })
}

fn mean_max_cosine(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let sum: f64 = from
        .iter()
        .map(|a| {
            to.iter()
                .map(|b| cosine(a, b))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    sum / from.len() as f64
}

/// Cosine similarity; bitwise-equal vectors score exactly 1 so identical
/// texts produce P = R = F = 1 under any provider.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Deterministic test provider: each token embeds to a signed count vector
/// of its hashed character trigrams (token padded with ^ and $).
#[derive(Debug, Clone)]
pub struct TrigramHashProvider {
    pub dim: usize,
}

impl Default for TrigramHashProvider {
    fn default() -> Self {
        TrigramHashProvider { dim: 16 }
    }
}

impl TrigramHashProvider {
    fn token_vector(&self, token: &str) -> Vec<f64> {
        let padded = format!("^{token}$");
        let chars: Vec<char> = padded.chars().collect();
        let mut v = vec![0.0; self.dim];
        for window in chars.windows(3) {
            let h = fnv1a(window);
            let idx = (h % self.dim as u64) as usize;
            let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        }
        v
    }
}

impl EmbeddingProvider for TrigramHashProvider {
    fn embed(&self, text: &str) -> Result<Vec<Vec<f64>>> {
        Ok(tokenize(text)
            .iter()
            .map(|t| self.token_vector(t))
            .collect())
    }
}

fn fnv1a(chars: &[char]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut buf = [0u8; 4];
    for &c in chars {
        for &byte in c.encode_utf8(&mut buf).as_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    hash
}

/// Embedding client for an HTTP endpoint accepting `{"text": ...}` and
/// returning `{"vectors": [[...], ...]}`.
pub struct RemoteEmbeddingProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteEmbeddingProvider {
    pub fn new(endpoint: String, api_key: Option<String>) -> Self {
        RemoteEmbeddingProvider {
            endpoint,
            api_key,
            client: reqwest::blocking::Client::new(),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(serde::Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn embed(&self, text: &str) -> Result<Vec<Vec<f64>>> {
        let mut req = self.client.post(&self.endpoint).json(&EmbedRequest { text });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Transport(format!("embedding request failed: {e}")))?;
        if !resp.status().is_success() {
            return Err(Error::Transport(format!(
                "embedding endpoint returned {}",
                resp.status()
            )));
        }
        let body: EmbedResponse = resp
            .json()
            .map_err(|e| Error::Transport(format!("bad embedding response: {e}")))?;
        Ok(body.vectors)
    }
}
