//! Professionalism-discrimination indicators.
//!
//! Terminology hit gap (THG) and reasoning step gap (RSG) are absolute
//! differences of per-style means; Pro F1 scores threshold classification of
//! generated answers against their requested style; reasoning density is
//! average steps over average length. Reasoning step counts come from an
//! LLM decomposition parsed by [`parse_step_count`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{Gateway, GatewayRequest};
use crate::prompts;
use crate::text::LengthUnit;

/// Requested or classified answer style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleLabel {
    Professional,
    NonProfessional,
}

impl StyleLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StyleLabel::Professional => "professional",
            StyleLabel::NonProfessional => "non_professional",
        }
    }

    pub fn opposite(&self) -> StyleLabel {
        match self {
            StyleLabel::Professional => StyleLabel::NonProfessional,
            StyleLabel::NonProfessional => StyleLabel::Professional,
        }
    }
}

impl std::fmt::Display for StyleLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StyleLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "professional" | "pro" => Ok(StyleLabel::Professional),
            "non_professional" | "non-professional" | "nonpro" | "np" => {
                Ok(StyleLabel::NonProfessional)
            }
            other => Err(format!("unknown style label: {other}")),
        }
    }
}

/// How a step count was recovered from a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseMode {
    /// Explicit "Total steps: N" marker.
    Marker,
    /// Counted "<digit>." enumeration lines; no marker present.
    FallbackEnumeration,
}

/// One parsed reasoning decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningTrace {
    pub raw_decomposition: String,
    pub step_count: u32,
    pub parse_mode: ParseMode,
}

impl ReasoningTrace {
    /// Render the trace with an explicit trailing marker. Parsing the
    /// rendered text recovers the same step count.
    pub fn with_marker(&self) -> String {
        match self.parse_mode {
            ParseMode::Marker => self.raw_decomposition.clone(),
            ParseMode::FallbackEnumeration => {
                format!("{}\nTotal steps: {}", self.raw_decomposition, self.step_count)
            }
        }
    }
}

/// How term-hit and reasoning-step conditions combine in classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Combiner {
    And,
    Or,
}

impl std::str::FromStr for Combiner {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(Combiner::And),
            "OR" => Ok(Combiner::Or),
            other => Err(format!("unknown combiner: {other}")),
        }
    }
}

/// Evaluation knobs. Positive class for Pro F1 is always professional.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub th_threshold: u32,
    pub rs_threshold: u32,
    pub combiner: Combiner,
    pub runs: u32,
    pub length_unit: LengthUnit,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            th_threshold: 1,
            rs_threshold: 4,
            combiner: Combiner::And,
            runs: 3,
            length_unit: LengthUnit::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Input("runs must be >= 1".into()));
        }
        Ok(())
    }
}

/// One generated answer with its measured indicators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    pub requested_style: StyleLabel,
    pub generated_text: String,
    pub term_hits: u32,
    /// None when the decomposition stayed unparseable after retries; such
    /// records are excluded from RSG/RD/classification but keep their
    /// term hits for THG.
    pub reasoning_steps: Option<u32>,
    pub text_length: u32,
    pub run_index: u32,
}

/// Extract a step count from a decomposition text.
///
/// Reads the integer after the last "Total steps:" marker; without a usable
/// marker, counts enumeration lines beginning "<digits>.". Neither present
/// is an unparseable-trace error (callers may retry the LLM call).
pub fn parse_step_count(decomposition_text: &str) -> Result<ReasoningTrace> {
    const MARKER: &str = "Total steps:";
    let mut search_from = 0;
    let mut last: Option<u32> = None;
    while let Some(found) = decomposition_text[search_from..].find(MARKER) {
        let after = search_from + found + MARKER.len();
        let rest = decomposition_text[after..].trim_start_matches([' ', '\t']);
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if !digits.is_empty() {
            if let Ok(n) = digits.parse::<u32>() {
                last = Some(n);
            }
        }
        search_from = after;
    }
    if let Some(step_count) = last {
        return Ok(ReasoningTrace {
            raw_decomposition: decomposition_text.to_string(),
            step_count,
            parse_mode: ParseMode::Marker,
        });
    }

    let enumerated = decomposition_text
        .lines()
        .filter(|line| {
            let t = line.trim_start();
            let digits: String = t.chars().take_while(|c| c.is_ascii_digit()).collect();
            !digits.is_empty() && t[digits.len()..].starts_with('.')
        })
        .count();
    if enumerated > 0 {
        return Ok(ReasoningTrace {
            raw_decomposition: decomposition_text.to_string(),
            step_count: enumerated as u32,
            parse_mode: ParseMode::FallbackEnumeration,
        });
    }
    Err(Error::UnparseableTrace(
        decomposition_text.chars().take(120).collect(),
    ))
}

/// Ask the gateway to decompose an answer's reasoning and parse the steps.
/// Unparseable completions are retried at most twice.
pub fn decompose_reasoning(
    question: &str,
    answer: &str,
    gateway: &Gateway,
) -> Result<ReasoningTrace> {
    let prompt = prompts::decomposition_prompt(question, answer);
    let mut last_err = None;
    for _attempt in 0..3 {
        let response = gateway.complete(&GatewayRequest::new(&prompt))?;
        match parse_step_count(&response.text) {
            Ok(trace) => return Ok(trace),
            Err(e @ Error::UnparseableTrace(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("retry loop ran"))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// THG and RSG over a pool of records (all runs together).
///
/// THG = |mean term hits professional − mean term hits non-professional|;
/// RSG the same on reasoning steps, skipping records without a parsed count.
pub fn compute_gaps(records: &[EvalRecord]) -> Result<(f64, f64)> {
    let style_mean = |style: StyleLabel, field: &dyn Fn(&EvalRecord) -> Option<f64>| {
        mean(
            records
                .iter()
                .filter(|r| r.requested_style == style)
                .filter_map(field),
        )
    };
    let hits = |r: &EvalRecord| Some(f64::from(r.term_hits));
    let steps = |r: &EvalRecord| r.reasoning_steps.map(f64::from);

    let th_pro = style_mean(StyleLabel::Professional, &hits)
        .ok_or_else(|| Error::MissingStyle("no professional records".into()))?;
    let th_np = style_mean(StyleLabel::NonProfessional, &hits)
        .ok_or_else(|| Error::MissingStyle("no non_professional records".into()))?;
    let rs_pro = style_mean(StyleLabel::Professional, &steps).ok_or_else(|| {
        Error::MissingStyle("no professional records with parsed reasoning steps".into())
    })?;
    let rs_np = style_mean(StyleLabel::NonProfessional, &steps).ok_or_else(|| {
        Error::MissingStyle("no non_professional records with parsed reasoning steps".into())
    })?;

    Ok(((th_pro - th_np).abs(), (rs_pro - rs_np).abs()))
}

/// Threshold rule: professional iff the term-hit and reasoning-step
/// conditions hold under the configured combiner.
pub fn classify_professionalism(
    term_hits: u32,
    reasoning_steps: u32,
    config: &EvalConfig,
) -> StyleLabel {
    let th_ok = term_hits >= config.th_threshold;
    let rs_ok = reasoning_steps >= config.rs_threshold;
    let professional = match config.combiner {
        Combiner::And => th_ok && rs_ok,
        Combiner::Or => th_ok || rs_ok,
    };
    if professional {
        StyleLabel::Professional
    } else {
        StyleLabel::NonProfessional
    }
}

/// F1 with professional as the positive class; 0 when no true or predicted
/// positives exist.
pub fn pro_f1(predictions: &[StyleLabel], gold: &[StyleLabel]) -> Result<f64> {
    if predictions.len() != gold.len() {
        return Err(Error::Input(format!(
            "prediction/gold length mismatch: {} vs {}",
            predictions.len(),
            gold.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Input("empty prediction list".into()));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (p, g) in predictions.iter().zip(gold) {
        match (p, g) {
            (StyleLabel::Professional, StyleLabel::Professional) => tp += 1,
            (StyleLabel::Professional, StyleLabel::NonProfessional) => fp += 1,
            (StyleLabel::NonProfessional, StyleLabel::Professional) => fn_ += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// RD = average reasoning steps / average answer length, rounded to the
/// 3 decimals it is reported at.
pub fn reasoning_density(avg_length: f64, avg_steps: f64) -> Result<f64> {
    if avg_length.is_nan() || avg_length <= 0.0 {
        return Err(Error::Input(format!(
            "average length must be positive, got {avg_length}"
        )));
    }
    Ok((avg_steps / avg_length * 1000.0).round() / 1000.0)
}

/// Average score and success rate of 1-to-5 human ratings.
/// AS = mean; SR = fraction of ratings of 4 or 5.
pub fn human_eval_stats(ratings: &[u32]) -> Result<(f64, f64)> {
    if ratings.is_empty() {
        return Err(Error::Input("empty ratings list".into()));
    }
    if let Some(bad) = ratings.iter().find(|&&r| !(1..=5).contains(&r)) {
        return Err(Error::Input(format!("rating out of range 1..5: {bad}")));
    }
    let n = ratings.len() as f64;
    let sum: u64 = ratings.iter().map(|&r| u64::from(r)).sum();
    let successes = ratings.iter().filter(|&&r| r >= 4).count() as f64;
    Ok((sum as f64 / n, successes / n))
}

/// Result of the exhaustive threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdFit {
    pub th_threshold: u32,
    pub rs_threshold: u32,
    pub agreement_auc: f64,
}

/// Exhaustively sweep integer threshold pairs and return the pair with
/// maximum label agreement. Among tied pairs the largest wins, so the
/// thresholds hug the observed professional minima (a single professional
/// point (1,4) against a non-professional (0,0) fits (1,4), not (0,1)).
/// AUC is balanced accuracy of the fitted rule: (TPR + TNR) / 2.
pub fn fit_thresholds(labeled: &[(u32, u32, StyleLabel)]) -> Result<ThresholdFit> {
    let pos = labeled
        .iter()
        .filter(|(_, _, l)| *l == StyleLabel::Professional)
        .count();
    let neg = labeled.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateData(
            "threshold fitting needs both style labels".into(),
        ));
    }

    let max_th = labeled.iter().map(|&(t, _, _)| t).max().unwrap_or(0);
    let max_rs = labeled.iter().map(|&(_, r, _)| r).max().unwrap_or(0);

    let mut best = (0u32, 0u32);
    let mut best_agree = 0usize;
    for th in 0..=max_th + 1 {
        for rs in 0..=max_rs + 1 {
            let agree = labeled
                .iter()
                .filter(|&&(t, r, label)| {
                    let predicted = if t >= th && r >= rs {
                        StyleLabel::Professional
                    } else {
                        StyleLabel::NonProfessional
                    };
                    predicted == label
                })
                .count();
            if agree >= best_agree {
                best_agree = agree;
                best = (th, rs);
            }
        }
    }

    let (th, rs) = best;
    let mut tp = 0usize;
    let mut tn = 0usize;
    for &(t, r, label) in labeled {
        let predicted_pro = t >= th && r >= rs;
        match (predicted_pro, label) {
            (true, StyleLabel::Professional) => tp += 1,
            (false, StyleLabel::NonProfessional) => tn += 1,
            _ => {}
        }
    }
    let auc = (tp as f64 / pos as f64 + tn as f64 / neg as f64) / 2.0;
    Ok(ThresholdFit {
        th_threshold: th,
        rs_threshold: rs,
        agreement_auc: auc,
    })
}
