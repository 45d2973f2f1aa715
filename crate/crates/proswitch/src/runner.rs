//! Evaluation orchestration: generate (or load) paired professional and
//! non-professional answers per question over R runs, measure term hits,
//! reasoning steps and length per answer, dump per-record JSON Lines, and
//! aggregate the report.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use crate::data::{parallel_map, QuestionType};
use crate::error::{Error, Result};
use crate::gateway::{Gateway, GatewayRequest};
use crate::lexicon::TermLexicon;
use crate::prompts::{InstructionLevel, ModelProfile, Templates};
use crate::quality::{bert_score, bleu, EmbeddingProvider};
use crate::report::{EvalReport, QualityScope, ReportConfig};
use crate::style::{
    classify_professionalism, compute_gaps, decompose_reasoning, pro_f1, reasoning_density,
    EvalConfig, EvalRecord, StyleLabel,
};

/// One evaluation question, optionally with the fields the higher
/// instruction levels and reference-based scores need.
#[derive(Debug, Clone, Deserialize)]
pub struct EvalQuestion {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub qtype: Option<QuestionType>,
    #[serde(default)]
    pub snippet: Option<String>,
    #[serde(default)]
    pub reference: Option<String>,
}

/// Pre-generated answers keyed by (question, style, run).
#[derive(Debug, Default)]
pub struct AnswerSet {
    map: HashMap<(String, StyleLabel, u32), String>,
}

#[derive(Deserialize)]
struct AnswerRow {
    question_id: String,
    style: StyleLabel,
    #[serde(default = "default_run")]
    run: u32,
    text: String,
}

fn default_run() -> u32 {
    1
}

impl AnswerSet {
    /// Load `{question_id, style, run?, text}` JSON Lines; `run` defaults
    /// to 1 and run 1 serves as the fallback for higher run indices.
    pub fn from_jsonl(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut map = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: AnswerRow = serde_json::from_str(line)
                .map_err(|e| Error::Input(format!("answers line {}: {e}", i + 1)))?;
            map.insert((row.question_id, row.style, row.run), row.text);
        }
        Ok(AnswerSet { map })
    }

    fn lookup(&self, id: &str, style: StyleLabel, run: u32) -> Result<&str> {
        self.map
            .get(&(id.to_string(), style, run))
            .or_else(|| self.map.get(&(id.to_string(), style, 1)))
            .map(String::as_str)
            .ok_or_else(|| {
                Error::MissingStyle(format!("no {style} answer for question {id} (run {run})"))
            })
    }
}

/// Where generated answers come from.
pub enum AnswerSource<'a> {
    Gateway(&'a Gateway),
    Answers(AnswerSet),
}

/// Run-level settings beyond [`EvalConfig`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub model_name: String,
    pub dataset_name: String,
    pub config: EvalConfig,
    pub level: InstructionLevel,
    pub profile: ModelProfile,
    pub seed: u64,
    pub concurrency: usize,
    pub quality_scope: QualityScope,
    pub bleu_m: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            model_name: "model".into(),
            dataset_name: "dataset".into(),
            config: EvalConfig::default(),
            level: InstructionLevel::Basic,
            profile: ModelProfile::ChatBaseline,
            seed: 0,
            concurrency: 4,
            quality_scope: QualityScope::ProfessionalOnly,
            bleu_m: 4,
        }
    }
}

/// Evaluate all questions in both styles over `config.runs` runs.
///
/// Per-record measurements are always dumped to `records_out` (JSON Lines)
/// before aggregation so indicator values can be audited or recomputed
/// offline. With a scripted gateway the whole pipeline is deterministic.
#[allow(clippy::too_many_arguments)]
pub fn run_evaluation(
    questions: &[EvalQuestion],
    source: &AnswerSource,
    lexicon: &TermLexicon,
    judge: &Gateway,
    embedder: &dyn EmbeddingProvider,
    templates: &Templates,
    options: &RunOptions,
    records_out: &Path,
) -> Result<EvalReport> {
    if questions.is_empty() {
        return Err(Error::Input("no evaluation questions".into()));
    }
    options.config.validate()?;
    let with_reference = questions.iter().filter(|q| q.reference.is_some()).count();
    if with_reference != 0 && with_reference != questions.len() {
        return Err(Error::Input(format!(
            "reference count mismatch: {} of {} questions have references",
            with_reference,
            questions.len()
        )));
    }

    let mut tasks = Vec::new();
    for q in questions {
        for style in [StyleLabel::Professional, StyleLabel::NonProfessional] {
            for run in 1..=options.config.runs {
                tasks.push((q, style, run));
            }
        }
    }

    let results = parallel_map(&tasks, options.concurrency, |&(q, style, run)| {
        evaluate_one(q, style, run, source, lexicon, judge, templates, options)
    });
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }

    write_record_dump(&records, records_out)?;

    let references: Option<BTreeMap<String, String>> = if with_reference > 0 {
        Some(
            questions
                .iter()
                .map(|q| (q.id.clone(), q.reference.clone().expect("checked above")))
                .collect(),
        )
    } else {
        None
    };
    aggregate_records(&records, references.as_ref(), embedder, options)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_one(
    q: &EvalQuestion,
    style: StyleLabel,
    run: u32,
    source: &AnswerSource,
    lexicon: &TermLexicon,
    judge: &Gateway,
    templates: &Templates,
    options: &RunOptions,
) -> Result<EvalRecord> {
    let text = match source {
        AnswerSource::Answers(set) => set.lookup(&q.id, style, run)?.to_string(),
        AnswerSource::Gateway(gateway) => {
            let qtype = match options.level {
                InstructionLevel::TypeBased => Some(q.qtype.ok_or_else(|| {
                    Error::Input(format!(
                        "question {} has no qtype for the type_based level",
                        q.id
                    ))
                })?),
                _ => None,
            };
            let snippet = if options.level == InstructionLevel::KnowledgeEnriched
                && style == StyleLabel::Professional
            {
                Some(q.snippet.as_deref().ok_or_else(|| {
                    Error::Input(format!(
                        "question {} has no snippet for the knowledge_enriched level",
                        q.id
                    ))
                })?)
            } else {
                None
            };
            let guide = templates.instruction(style, options.level, qtype, snippet)?;
            let prompt = templates.compose_prompt(&guide, &q.question, options.profile)?;
            gateway
                .complete(&GatewayRequest::new(&prompt.rendered).with_model(&options.model_name))?
                .text
        }
    };

    let term_hits = lexicon.match_terms(&text).hit_count as u32;
    let reasoning_steps = match decompose_reasoning(&q.question, &text, judge) {
        Ok(trace) => Some(trace.step_count),
        Err(Error::UnparseableTrace(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalRecord {
        question_id: q.id.clone(),
        requested_style: style,
        generated_text: text.clone(),
        term_hits,
        reasoning_steps,
        text_length: options.config.length_unit.measure(&text) as u32,
        run_index: run,
    })
}

/// Write the per-record dump, one JSON object per line, in task order.
pub fn write_record_dump(records: &[EvalRecord], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r)?);
        buf.push('\n');
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Read a per-record dump back.
pub fn read_record_dump(path: &Path) -> Result<Vec<EvalRecord>> {
    let content = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: EvalRecord = serde_json::from_str(line)
            .map_err(|e| Error::Input(format!("record dump line {}: {e}", i + 1)))?;
        records.push(r);
    }
    Ok(records)
}

/// Aggregate pooled records into a report. `references` maps question id
/// to reference text; absent means a reference-free dataset and the BLEU /
/// BERT fields stay empty.
pub fn aggregate_records(
    records: &[EvalRecord],
    references: Option<&BTreeMap<String, String>>,
    embedder: &dyn EmbeddingProvider,
    options: &RunOptions,
) -> Result<EvalReport> {
    let (thg, rsg) = compute_gaps(records)?;

    let mut predictions = Vec::new();
    let mut gold = Vec::new();
    for r in records {
        if let Some(steps) = r.reasoning_steps {
            predictions.push(classify_professionalism(r.term_hits, steps, &options.config));
            gold.push(r.requested_style);
        }
    }
    let pro_f1 = pro_f1(&predictions, &gold)?;

    let pro: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.requested_style == StyleLabel::Professional)
        .collect();
    let avg_len =
        pro.iter().map(|r| f64::from(r.text_length)).sum::<f64>() / pro.len() as f64;
    let parsed_pro: Vec<f64> = pro
        .iter()
        .filter_map(|r| r.reasoning_steps.map(f64::from))
        .collect();
    if parsed_pro.is_empty() {
        return Err(Error::DegenerateData(
            "no professional record has a parsed reasoning trace".into(),
        ));
    }
    let avg_rs = parsed_pro.iter().sum::<f64>() / parsed_pro.len() as f64;
    let rd_professional = reasoning_density(avg_len, avg_rs)?;

    let (bleu_score, bert_f) = match references {
        None => (None, None),
        Some(refs) => {
            let scoped: Vec<&EvalRecord> = records
                .iter()
                .filter(|r| {
                    options.quality_scope == QualityScope::Both
                        || r.requested_style == StyleLabel::Professional
                })
                .collect();
            let mut bleu_sum = 0.0;
            let mut bert_sum = 0.0;
            for r in &scoped {
                let reference = refs.get(&r.question_id).ok_or_else(|| {
                    Error::Input(format!("no reference for question {}", r.question_id))
                })?;
                bleu_sum += bleu(
                    &r.generated_text,
                    std::slice::from_ref(reference),
                    options.bleu_m as usize,
                )?;
                if r.generated_text.is_empty() {
                    // BLEU scores empty candidates 0; mirror that here
                    // rather than erroring the whole aggregation.
                    continue;
                }
                bert_sum += bert_score(&r.generated_text, reference, embedder)?.f;
            }
            let n = scoped.len() as f64;
            (Some(bleu_sum / n), Some(bert_sum / n))
        }
    };

    let excluded = records
        .iter()
        .filter(|r| r.reasoning_steps.is_none())
        .count() as u32;

    let report = EvalReport {
        model_name: options.model_name.clone(),
        dataset_name: options.dataset_name.clone(),
        thg,
        rsg,
        pro_f1,
        bleu: bleu_score,
        bert_f,
        rd_professional,
        avg_len,
        avg_rs,
        runs: options.config.runs,
        excluded,
        config: ReportConfig {
            eval: options.config.clone(),
            seed: options.seed,
            model_profile: options.profile,
            quality_scope: options.quality_scope,
            bleu_m: options.bleu_m,
        },
    };
    report.validate()?;
    Ok(report)
}

/// Load evaluation questions from `{id, question, qtype?, snippet?,
/// reference?}` JSON Lines.
pub fn load_questions(path: &Path) -> Result<Vec<EvalQuestion>> {
    let content = std::fs::read_to_string(path)?;
    let mut questions = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: EvalQuestion = serde_json::from_str(line)
            .map_err(|e| Error::Input(format!("questions line {}: {e}", i + 1)))?;
        questions.push(q);
    }
    if questions.is_empty() {
        return Err(Error::Input(format!(
            "no questions in {}",
            path.display()
        )));
    }
    Ok(questions)
}

/// Load `{question_id, text}` JSON Lines and attach each reference to its
/// question. Every question must get exactly one reference.
pub fn attach_references(questions: &mut [EvalQuestion], path: &Path) -> Result<()> {
    #[derive(Deserialize)]
    struct RefRow {
        question_id: String,
        text: String,
    }
    let content = std::fs::read_to_string(path)?;
    let mut refs: BTreeMap<String, String> = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: RefRow = serde_json::from_str(line)
            .map_err(|e| Error::Input(format!("references line {}: {e}", i + 1)))?;
        refs.insert(row.question_id, row.text);
    }
    if refs.len() != questions.len() {
        return Err(Error::Input(format!(
            "reference count mismatch: {} references for {} questions",
            refs.len(),
            questions.len()
        )));
    }
    for q in questions.iter_mut() {
        let text = refs.remove(&q.id).ok_or_else(|| {
            Error::Input(format!("no reference for question {}", q.id))
        })?;
        q.reference = Some(text);
    }
    Ok(())
}
