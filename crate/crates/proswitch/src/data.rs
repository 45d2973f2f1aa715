//! QA corpus preparation: ingest sources, classify question types through
//! the gateway, augment answers into the missing style, balance per
//! (style × type) cell, and emit Alpaca-format instruction datasets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{Gateway, GatewayRequest};
use crate::prompts::{FewShotExample, InstructionLevel, Templates};
use crate::style::StyleLabel;

/// Closed set of question forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    List,
    Summary,
    #[serde(rename = "yesno")]
    YesNo,
    Factoid,
}

impl QuestionType {
    pub const ALL: [QuestionType; 4] = [
        QuestionType::List,
        QuestionType::Summary,
        QuestionType::YesNo,
        QuestionType::Factoid,
    ];

    /// Canonical label used in files and template keys.
    pub fn as_label(&self) -> &'static str {
        match self {
            QuestionType::List => "list",
            QuestionType::Summary => "summary",
            QuestionType::YesNo => "yesno",
            QuestionType::Factoid => "factoid",
        }
    }

    /// Prose form used inside prompts.
    pub fn display_name(&self) -> &'static str {
        match self {
            QuestionType::YesNo => "yes/no",
            other => other.as_label(),
        }
    }

    /// Map a raw label (classifier reply or source field) into the closed
    /// set; anything unrecognized is None. "summarize" and "yes/no" are
    /// accepted spellings.
    pub fn normalize(label: &str) -> Option<QuestionType> {
        let lower = label.trim().to_lowercase();
        let rest = lower.strip_prefix("output:").unwrap_or(&lower);
        match rest.trim().trim_end_matches('.').trim() {
            "list" => Some(QuestionType::List),
            "summary" | "summarize" => Some(QuestionType::Summary),
            "yesno" | "yes/no" | "yes-no" => Some(QuestionType::YesNo),
            "factoid" => Some(QuestionType::Factoid),
            _ => None,
        }
    }
}

impl std::fmt::Display for QuestionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_label())
    }
}

impl std::str::FromStr for QuestionType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        QuestionType::normalize(s).ok_or_else(|| format!("unknown question type: {s}"))
    }
}

/// Where a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Bioasq,
    Pubmedqa,
    Icliniq,
    Techqa,
    Synthetic,
}

impl std::str::FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "bioasq" => Ok(SourceKind::Bioasq),
            "pubmedqa" => Ok(SourceKind::Pubmedqa),
            "icliniq" => Ok(SourceKind::Icliniq),
            "techqa" => Ok(SourceKind::Techqa),
            "synthetic" => Ok(SourceKind::Synthetic),
            other => Err(format!("unknown source kind: {other}")),
        }
    }
}

/// One question/answer pair with style and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub style: StyleLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qtype: Option<QuestionType>,
    pub source: SourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
}

/// Input file layout for [`ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    /// `{"questions": [{id, body, ideal_answer, type, snippets}]}`
    Bioasq,
    /// `{"<id>": {"QUESTION", "LONG_ANSWER", "CONTEXTS"}}`
    Pubmedqa,
    /// One `{id?, question, answer, style?, qtype?, source?, snippet?}`
    /// object per line.
    Jsonl,
}

impl std::str::FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "bioasq" => Ok(SourceFormat::Bioasq),
            "pubmedqa" => Ok(SourceFormat::Pubmedqa),
            "jsonl" | "generic" => Ok(SourceFormat::Jsonl),
            other => Err(format!("unknown source format: {other}")),
        }
    }
}

/// Ingest result: usable records plus per-record failures.
#[derive(Debug, Clone, Serialize)]
pub struct IngestOutcome {
    pub records: Vec<QARecord>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedRecord {
    pub locator: String,
    pub reason: String,
}

/// Read one source file. Bad records are collected, not fatal; a file whose
/// every record fails is an ingest error. Academic sources are labeled
/// professional.
pub fn ingest(path: &Path, format: SourceFormat) -> Result<IngestOutcome> {
    let content = std::fs::read_to_string(path)?;
    let mut out = IngestOutcome {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut push = |record: std::result::Result<QARecord, (String, String)>,
                    out: &mut IngestOutcome| match record {
        Ok(r) => {
            if seen_ids.insert(r.id.clone()) {
                out.records.push(r);
            } else {
                out.skipped.push(SkippedRecord {
                    locator: r.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
        }
        Err((locator, reason)) => out.skipped.push(SkippedRecord { locator, reason }),
    };

    match format {
        SourceFormat::Bioasq => {
            let root: serde_json::Value = serde_json::from_str(&content)?;
            let questions = root
                .get("questions")
                .and_then(|q| q.as_array())
                .ok_or_else(|| Error::Ingest("bioasq file has no questions array".into()))?;
            for (i, q) in questions.iter().enumerate() {
                push(parse_bioasq_row(q, i), &mut out);
            }
        }
        SourceFormat::Pubmedqa => {
            let root: serde_json::Value = serde_json::from_str(&content)?;
            let map = root
                .as_object()
                .ok_or_else(|| Error::Ingest("pubmedqa file is not a JSON object".into()))?;
            for (id, row) in map {
                push(parse_pubmedqa_row(id, row), &mut out);
            }
        }
        SourceFormat::Jsonl => {
            for (i, line) in content.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                push(parse_generic_row(line, i), &mut out);
            }
        }
    }

    if out.records.is_empty() && !out.skipped.is_empty() {
        return Err(Error::Ingest(format!(
            "all {} records failed; first: {}: {}",
            out.skipped.len(),
            out.skipped[0].locator,
            out.skipped[0].reason
        )));
    }
    Ok(out)
}

type RowResult = std::result::Result<QARecord, (String, String)>;

fn nonempty(value: Option<&str>, what: &str, locator: &str) -> std::result::Result<String, (String, String)> {
    match value {
        Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
        _ => Err((locator.to_string(), format!("missing or empty {what}"))),
    }
}

fn parse_bioasq_row(row: &serde_json::Value, index: usize) -> RowResult {
    let locator = format!("questions[{index}]");
    let id = row
        .get("id")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .unwrap_or_else(|| format!("bioasq-{index}"));
    let question = nonempty(row.get("body").and_then(|v| v.as_str()), "body", &locator)?;
    let answer_value = row.get("ideal_answer");
    let answer_str = match answer_value {
        Some(serde_json::Value::String(s)) => Some(s.as_str()),
        Some(serde_json::Value::Array(items)) => items
            .iter()
            .filter_map(|v| v.as_str())
            .find(|s| !s.trim().is_empty()),
        _ => None,
    };
    let answer = nonempty(answer_str, "ideal_answer", &locator)?;
    let qtype = row
        .get("type")
        .and_then(|v| v.as_str())
        .and_then(QuestionType::normalize);
    let snippet = row
        .get("snippets")
        .and_then(|v| v.as_array())
        .and_then(|arr| arr.first())
        .and_then(|s| s.get("text"))
        .and_then(|v| v.as_str())
        .map(str::to_string);
    Ok(QARecord {
        id,
        question,
        answer,
        style: StyleLabel::Professional,
        qtype,
        source: SourceKind::Bioasq,
        snippet,
    })
}

fn parse_pubmedqa_row(id: &str, row: &serde_json::Value) -> RowResult {
    let question = nonempty(row.get("QUESTION").and_then(|v| v.as_str()), "QUESTION", id)?;
    let answer = nonempty(
        row.get("LONG_ANSWER").and_then(|v| v.as_str()),
        "LONG_ANSWER",
        id,
    )?;
    let snippet = row
        .get("CONTEXTS")
        .and_then(|v| v.as_array())
        .and_then(|arr| arr.first())
        .and_then(|v| v.as_str())
        .map(str::to_string);
    Ok(QARecord {
        id: id.to_string(),
        question,
        answer,
        style: StyleLabel::Professional,
        qtype: None,
        source: SourceKind::Pubmedqa,
        snippet,
    })
}

fn parse_generic_row(line: &str, index: usize) -> RowResult {
    let locator = format!("line {}", index + 1);
    let row: serde_json::Value =
        serde_json::from_str(line).map_err(|e| (locator.clone(), format!("bad JSON: {e}")))?;
    let id = row
        .get("id")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .unwrap_or_else(|| format!("row-{}", index + 1));
    let question = nonempty(row.get("question").and_then(|v| v.as_str()), "question", &locator)?;
    let answer = nonempty(row.get("answer").and_then(|v| v.as_str()), "answer", &locator)?;
    let style = match row.get("style").and_then(|v| v.as_str()) {
        Some(s) => s
            .parse::<StyleLabel>()
            .map_err(|e| (locator.clone(), e))?,
        None => StyleLabel::Professional,
    };
    let qtype = match row.get("qtype").and_then(|v| v.as_str()) {
        Some(q) => Some(
            QuestionType::normalize(q).ok_or_else(|| (locator.clone(), format!("unknown qtype: {q}")))?,
        ),
        None => None,
    };
    let source = match row.get("source").and_then(|v| v.as_str()) {
        Some(s) => s
            .parse::<SourceKind>()
            .map_err(|e| (locator.clone(), e))?,
        None => SourceKind::Synthetic,
    };
    let snippet = row
        .get("snippet")
        .and_then(|v| v.as_str())
        .map(str::to_string);
    Ok(QARecord {
        id,
        question,
        answer,
        style,
        qtype,
        source,
        snippet,
    })
}

/// LLM-classify one untyped question into the closed type set. Replies
/// outside the set are retried twice, then a classification error.
pub fn classify_question_type(
    record: &QARecord,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<QuestionType> {
    if record.qtype.is_some() {
        return Err(Error::Input(format!(
            "record {} already has a question type",
            record.id
        )));
    }
    let prompt = templates.classification_prompt(&record.question);
    let mut last_reply = String::new();
    for _attempt in 0..3 {
        let response = gateway.complete(&GatewayRequest::new(&prompt))?;
        if let Some(qtype) = QuestionType::normalize(&response.text) {
            return Ok(qtype);
        }
        last_reply = response.text;
    }
    Err(Error::Classification(format!(
        "record {}: reply {:?} is not a known question type",
        record.id,
        last_reply.chars().take(60).collect::<String>()
    )))
}

/// Record that stays untyped after retries; destined for manual review.
#[derive(Debug, Clone, Serialize)]
pub struct ManualReviewEntry {
    pub id: String,
    pub question: String,
    pub reason: String,
}

/// Classification results over a corpus.
#[derive(Debug)]
pub struct ClassifyOutcome {
    pub classified: Vec<QARecord>,
    pub manual_review: Vec<ManualReviewEntry>,
}

/// Classify every untyped record, with at most `workers` concurrent gateway
/// calls. Classification failures are routed to manual review; transport
/// failures abort.
pub fn classify_corpus(
    records: &[QARecord],
    gateway: &Gateway,
    templates: &Templates,
    workers: usize,
) -> Result<ClassifyOutcome> {
    let results = parallel_map(records, workers, |record| {
        if record.qtype.is_some() {
            return Ok(None);
        }
        classify_question_type(record, gateway, templates).map(Some)
    });

    let mut out = ClassifyOutcome {
        classified: Vec::with_capacity(records.len()),
        manual_review: Vec::new(),
    };
    for (record, result) in records.iter().zip(results) {
        match result {
            Ok(None) => out.classified.push(record.clone()),
            Ok(Some(qtype)) => {
                let mut r = record.clone();
                r.qtype = Some(qtype);
                out.classified.push(r);
            }
            Err(Error::Classification(reason)) => out.manual_review.push(ManualReviewEntry {
                id: record.id.clone(),
                question: record.question.clone(),
                reason,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Rephrase a record's answer into the target style via the gateway. The
/// twin keeps question/type/source; its id gains a style suffix.
pub fn augment(
    record: &QARecord,
    target_style: StyleLabel,
    gateway: &Gateway,
    templates: &Templates,
    few_shot: &[FewShotExample],
) -> Result<QARecord> {
    let qtype = record.qtype.ok_or_else(|| {
        Error::Input(format!("record {} has no question type yet", record.id))
    })?;
    let prompt = templates.augmentation_prompt(
        &record.question,
        &record.answer,
        record.style,
        target_style,
        qtype,
        few_shot,
    )?;
    let response = gateway.complete(&GatewayRequest::new(&prompt))?;
    let answer = response.text.trim().to_string();
    if answer.is_empty() {
        return Err(Error::Augmentation(format!(
            "empty completion for record {}",
            record.id
        )));
    }
    Ok(QARecord {
        id: format!("{}-{}", record.id, style_suffix(target_style)),
        question: record.question.clone(),
        answer,
        style: target_style,
        qtype: Some(qtype),
        source: record.source,
        snippet: record.snippet.clone(),
    })
}

fn style_suffix(style: StyleLabel) -> &'static str {
    match style {
        StyleLabel::Professional => "pro",
        StyleLabel::NonProfessional => "nonpro",
    }
}

/// One pending rephrase produced by [`balance_corpus`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationRequest {
    pub source_id: String,
    pub target_style: StyleLabel,
    pub qtype: QuestionType,
    pub new_id: String,
}

/// Plan for one (style × qtype) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellPlan {
    pub style: StyleLabel,
    pub qtype: QuestionType,
    pub have: usize,
    /// Original record ids kept after any down-sampling.
    pub kept_ids: Vec<String>,
    pub requests: Vec<AugmentationRequest>,
}

/// Whole-corpus balance plan; executing all requests yields exactly
/// `quota` records per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalancePlan {
    pub target_total: usize,
    pub quota: usize,
    pub seed: u64,
    pub cells: Vec<CellPlan>,
}

impl BalancePlan {
    pub fn requests(&self) -> impl Iterator<Item = &AugmentationRequest> {
        self.cells.iter().flat_map(|c| c.requests.iter())
    }
}

/// Plan per-cell down-sampling and augmentation so each of the 8
/// (style × qtype) cells ends at target_total / 8 records.
///
/// Surplus cells are down-sampled with a seeded shuffle (seed recorded in
/// the plan); deficit cells cycle over the twin cell's records emitting
/// rephrase requests. A cell with no records and an empty twin cell cannot
/// be filled.
pub fn balance_corpus(records: &[QARecord], target_total: usize, seed: u64) -> Result<BalancePlan> {
    if target_total == 0 || !target_total.is_multiple_of(8) {
        return Err(Error::Input(format!(
            "target_total must be a positive multiple of 8, got {target_total}"
        )));
    }
    if let Some(untyped) = records.iter().find(|r| r.qtype.is_none()) {
        return Err(Error::Input(format!(
            "record {} has no question type; classify before balancing",
            untyped.id
        )));
    }
    let quota = target_total / 8;

    let mut cells: BTreeMap<(StyleLabel, QuestionType), Vec<&QARecord>> = BTreeMap::new();
    for style in [StyleLabel::Professional, StyleLabel::NonProfessional] {
        for qtype in QuestionType::ALL {
            cells.insert((style, qtype), Vec::new());
        }
    }
    for r in records {
        cells
            .get_mut(&(r.style, r.qtype.expect("checked above")))
            .expect("all cells pre-inserted")
            .push(r);
    }

    let used_ids: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let mut issued_ids: HashSet<String> = HashSet::new();
    let mut plan_cells = Vec::new();

    for (cell_index, ((style, qtype), members)) in cells.iter().enumerate() {
        let have = members.len();
        let mut kept_ids: Vec<String> = members.iter().map(|r| r.id.clone()).collect();
        let mut requests = Vec::new();

        if have > quota {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(cell_index as u64));
            kept_ids.shuffle(&mut rng);
            kept_ids.truncate(quota);
            kept_ids.sort();
        } else if have < quota {
            let twin = &cells[&(style.opposite(), *qtype)];
            if members.is_empty() && twin.is_empty() {
                return Err(Error::UnsatisfiablePlan(format!(
                    "no {style} or {} records of type {qtype} to fill the cell",
                    style.opposite()
                )));
            }
            if twin.is_empty() {
                return Err(Error::UnsatisfiablePlan(format!(
                    "cell ({style}, {qtype}) is short {} records and the twin cell is empty",
                    quota - have
                )));
            }
            for i in 0..quota - have {
                let source = twin[i % twin.len()];
                let base = format!("{}-{}", source.id, style_suffix(*style));
                let mut new_id = base.clone();
                let mut counter = 2;
                while used_ids.contains(new_id.as_str()) || issued_ids.contains(&new_id) {
                    new_id = format!("{base}-{counter}");
                    counter += 1;
                }
                issued_ids.insert(new_id.clone());
                requests.push(AugmentationRequest {
                    source_id: source.id.clone(),
                    target_style: *style,
                    qtype: *qtype,
                    new_id,
                });
            }
        }

        plan_cells.push(CellPlan {
            style: *style,
            qtype: *qtype,
            have,
            kept_ids,
            requests,
        });
    }

    Ok(BalancePlan {
        target_total,
        quota,
        seed,
        cells: plan_cells,
    })
}

/// Run every augmentation request of a plan through the gateway and return
/// the balanced corpus (kept originals + generated twins), sorted by id.
pub fn execute_plan(
    plan: &BalancePlan,
    records: &[QARecord],
    gateway: &Gateway,
    templates: &Templates,
    workers: usize,
) -> Result<Vec<QARecord>> {
    let by_id: HashMap<&str, &QARecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut balanced = Vec::with_capacity(plan.quota * plan.cells.len());
    for cell in &plan.cells {
        for id in &cell.kept_ids {
            let record = by_id.get(id.as_str()).ok_or_else(|| {
                Error::Input(format!("plan references unknown record id {id}"))
            })?;
            balanced.push((*record).clone());
        }
    }

    let all_requests: Vec<&AugmentationRequest> = plan.requests().collect();
    let results = parallel_map(&all_requests, workers, |request| {
        let source = by_id.get(request.source_id.as_str()).ok_or_else(|| {
            Error::Input(format!(
                "plan references unknown source id {}",
                request.source_id
            ))
        })?;
        let mut twin = augment(source, request.target_style, gateway, templates, &[])?;
        twin.id = request.new_id.clone();
        Ok::<QARecord, Error>(twin)
    });
    for result in results {
        balanced.push(result?);
    }

    balanced.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(balanced)
}

/// One Alpaca-shaped training row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstructionExample {
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub meta: ExampleMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleMeta {
    pub level: InstructionLevel,
    pub style: StyleLabel,
    pub qtype: QuestionType,
    pub source_id: String,
    pub source: SourceKind,
}

/// Render records into instruction examples at one level, sorted by id.
pub fn build_training_set(
    records: &[QARecord],
    level: InstructionLevel,
    templates: &Templates,
) -> Result<Vec<InstructionExample>> {
    let mut sorted: Vec<&QARecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut examples = Vec::with_capacity(sorted.len());
    for record in sorted {
        let qtype = record.qtype.ok_or_else(|| {
            Error::Input(format!("record {} has no question type", record.id))
        })?;
        let type_arg = (level == InstructionLevel::TypeBased).then_some(qtype);
        let snippet_arg = if level == InstructionLevel::KnowledgeEnriched
            && record.style == StyleLabel::Professional
        {
            Some(record.snippet.as_deref().ok_or_else(|| {
                Error::Input(format!(
                    "record {} needs an article snippet for the knowledge-enriched level",
                    record.id
                ))
            })?)
        } else {
            None
        };
        let instruction = templates.instruction(record.style, level, type_arg, snippet_arg)?;
        examples.push(InstructionExample {
            instruction,
            input: record.question.clone(),
            output: record.answer.clone(),
            meta: ExampleMeta {
                level,
                style: record.style,
                qtype,
                source_id: record.id.clone(),
                source: record.source,
            },
        });
    }
    Ok(examples)
}

/// Write instruction examples for `records` as UTF-8 JSON Lines at `out`.
/// Output is deterministic: records sorted by id, one JSON object per line.
pub fn emit_training_set(
    records: &[QARecord],
    level: InstructionLevel,
    templates: &Templates,
    out: &Path,
) -> Result<usize> {
    let examples = build_training_set(records, level, templates)?;
    let mut buf = String::new();
    for ex in &examples {
        buf.push_str(&serde_json::to_string(ex)?);
        buf.push('\n');
    }
    std::fs::write(out, buf)?;
    Ok(examples.len())
}

/// Split off a seeded, type-stratified test set of `n` questions. Each
/// qtype contributes as evenly as possible; the remainder comes from the
/// largest leftover buckets.
pub fn split_test_set(
    records: &[QARecord],
    n: usize,
    seed: u64,
) -> Result<(Vec<QARecord>, Vec<QARecord>)> {
    if n > records.len() {
        return Err(Error::Input(format!(
            "cannot take a {n}-record test split from {} records",
            records.len()
        )));
    }
    let mut buckets: BTreeMap<Option<QuestionType>, Vec<&QARecord>> = BTreeMap::new();
    for r in records {
        buckets.entry(r.qtype).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in buckets.values_mut() {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        members.shuffle(&mut rng);
    }

    let mut test_ids: HashSet<String> = HashSet::new();
    let mut cursors: BTreeMap<Option<QuestionType>, usize> =
        buckets.keys().map(|k| (*k, 0)).collect();
    // Round-robin across type buckets until n records are drawn.
    while test_ids.len() < n {
        let mut progressed = false;
        for (key, members) in &buckets {
            if test_ids.len() >= n {
                break;
            }
            let cursor = cursors.get_mut(key).expect("cursor per bucket");
            if *cursor < members.len() {
                test_ids.insert(members[*cursor].id.clone());
                *cursor += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in records {
        if test_ids.contains(&r.id) {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    Ok((train, test))
}

/// Run `f` over `items` with at most `workers` threads, preserving input
/// order in the result.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> =
        (0..items.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect()
}
