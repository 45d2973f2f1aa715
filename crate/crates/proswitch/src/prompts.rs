//! Instruction texts and prompt templates.
//!
//! Three instruction levels (basic, type-based, knowledge-enriched) in two
//! styles, per-model restrictive suffixes, and the classification /
//! augmentation / decomposition prompt templates with their embedded
//! demonstrations. Built-in texts can be overridden per key from a template
//! file (see [`Templates::with_overrides_file`]).

use std::collections::BTreeMap;
use std::path::Path;

use crate::data::QuestionType;
use crate::error::{Error, Result};
use crate::style::StyleLabel;

pub const LIMIT_CHAT_BASELINE: &str = "Answer the question directly with a single paragraph.";
pub const LIMIT_TUNED: &str = "And why?";

pub const INSTRUCTION_BASIC_PROFESSIONAL: &str = "Answer the question and explain the reason \
with detailed steps using technical professional expressions.";
pub const INSTRUCTION_BASIC_NON_PROFESSIONAL: &str = "Answer the question and explain the \
reason with a simple explanation using casual non-professional expressions.";

pub const INSTRUCTION_KNOWLEDGE_NON_PROFESSIONAL: &str = "Knowledge: A non-professional answer \
is prone to use analogies and phrasal verbs to explain the question with fewer technological \
and organizational expressions. Answer the question following the knowledge using \
non-professional expressions.";

/// Professional knowledge-enriched instruction; `<article_snippet>` is the
/// injected question-related snippet. The text after "and" completes the
/// canonical opening in house style.
pub const INSTRUCTION_KNOWLEDGE_PROFESSIONAL: &str = "Knowledge: <article_snippet>. Answer the \
question following the style of the knowledge provided and explain the reason with detailed \
steps using technical professional expressions.";

pub const CLASSIFICATION_TEMPLATE: &str = r#"You are tasked to classify a question into four types, following these guidelines:
1. Output the type of the question based on its form of asking. Possible types are: yesno, list, factoid, summary.
2. Just output one type without any descriptive information.
3. Summary questions are usually more general, but factoid questions are more specific.
4. You can infer the type according to the display forms of possible answers.
Here are some examples:
Question: Which DNA sequences are more prone for the formation of R-loops?
Output: list
Question: Are ultraconserved elements often transcribed?
Output: yesno
Question: What is clathrin?
Output: summary
Question: Which signaling pathway does sonidegib inhibit?
Output: factoid
Please output the type of the following question:
Question: <question>
Output:"#;

/// Anchor line before which caller-supplied few-shot examples are spliced.
const AUGMENTATION_ANCHOR: &str = "Please give a <aim_style> answer for the following question:";

pub const AUGMENTATION_TEMPLATE: &str = r#"You are tasked to answer the question with <aim_style> language, following these guidelines:
1. You can refer to the provided examples to learn the differences between professional and non-professional answers.
2. You can refer to the original <style> answer and rephrase into a different <aim_style> answer.
3. For a <type> question, the <aim_style> answer usually <answer_style>.

Here are examples of professional and non-professional answers:

Question: What is gingipain?
Professional answer: Porphyromonas gingivalis is a keystone periodontal pathogen that has been associated with autoimmune disorders. The cell surface proteases Lys-gingipain (Kgp) and Arg-gingipains (RgpA and RgpB) are major virulence factors, and their proteolytic activity is enhanced by small peptides such as glycylglycine (GlyGly).

Question: Are reduced-nicotine cigarettes effective for smoking cessation?
Non-professional answer: Yes, reduced-nicotine cigarettes are effective for smoking cessation.

Please give a <aim_style> answer for the following question:
Question: <question>
Original <style> answer: <original_answer>
Output:"#;

pub const DECOMPOSITION_TEMPLATE: &str = r#"You are an assistant to explain the reasoning path of the answer. Here are some requirements:
1. Explain the reasoning path of the answer step by step with the content in both question and answer.
2. Provide the total steps at the last line, with the format: Total steps: <number>.
Here is the question and the answer:
Question: <question>
Answer: <answer>"#;

/// Instruction specificity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionLevel {
    Basic,
    TypeBased,
    KnowledgeEnriched,
}

impl std::str::FromStr for InstructionLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "basic" => Ok(InstructionLevel::Basic),
            "type_based" | "type-based" | "type" => Ok(InstructionLevel::TypeBased),
            "knowledge_enriched" | "knowledge-enriched" | "knowledge" => {
                Ok(InstructionLevel::KnowledgeEnriched)
            }
            other => Err(format!("unknown instruction level: {other}")),
        }
    }
}

impl InstructionLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstructionLevel::Basic => "basic",
            InstructionLevel::TypeBased => "type_based",
            InstructionLevel::KnowledgeEnriched => "knowledge_enriched",
        }
    }
}

/// Which restrictive suffix a model receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelProfile {
    /// Chat-tuned baseline models: keep answers to one paragraph.
    ChatBaseline,
    /// Models tuned on these prompts: ask for the explanation.
    Tuned,
    /// No suffix.
    NoLimit,
}

impl std::str::FromStr for ModelProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "chat_baseline" | "chat-baseline" | "baseline" => Ok(ModelProfile::ChatBaseline),
            "tuned" => Ok(ModelProfile::Tuned),
            "none" | "no_limit" | "no-limit" => Ok(ModelProfile::NoLimit),
            other => Err(format!("unknown model profile: {other}")),
        }
    }
}

/// A guide + question + limit concatenation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub guide: String,
    pub question: String,
    pub limit: String,
    /// guide "\n" question ["\n" limit]; no trailing separator when the
    /// limit is empty.
    pub rendered: String,
}

/// One caller-supplied demonstration for the augmentation prompt.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FewShotExample {
    pub question: String,
    pub answer: String,
    pub style: StyleLabel,
}

fn style_word(style: StyleLabel) -> &'static str {
    match style {
        StyleLabel::Professional => "professional",
        StyleLabel::NonProfessional => "non-professional",
    }
}

fn style_heading(style: StyleLabel) -> &'static str {
    match style {
        StyleLabel::Professional => "Professional",
        StyleLabel::NonProfessional => "Non-professional",
    }
}

/// Template store: built-in texts plus optional per-key overrides.
#[derive(Debug, Clone, Default)]
pub struct Templates {
    overrides: BTreeMap<String, String>,
}

fn builtin_text(key: &str) -> Option<&'static str> {
    let text = match key {
        "instruction.basic.professional" => INSTRUCTION_BASIC_PROFESSIONAL,
        "instruction.basic.non_professional" => INSTRUCTION_BASIC_NON_PROFESSIONAL,
        "instruction.knowledge_enriched.professional" => INSTRUCTION_KNOWLEDGE_PROFESSIONAL,
        "instruction.knowledge_enriched.non_professional" => {
            INSTRUCTION_KNOWLEDGE_NON_PROFESSIONAL
        }
        "instruction.type_based.list.professional" => {
            "Answer the question with a list of items and explain each item with detailed \
             steps using technical professional expressions."
        }
        "instruction.type_based.list.non_professional" => {
            "Answer the question with a list of items and explain each item with a simple \
             explanation using casual non-professional expressions."
        }
        "instruction.type_based.summary.professional" => {
            "Answer the question with a general summary and explain the reason with detailed \
             steps using technical professional expressions."
        }
        "instruction.type_based.summary.non_professional" => {
            "Answer the question with a general summary and explain the reason with a simple \
             explanation using casual non-professional expressions."
        }
        "instruction.type_based.yesno.professional" => {
            "Answer the question with yes or no and explain the reason with detailed steps \
             using technical professional expressions."
        }
        "instruction.type_based.yesno.non_professional" => {
            "Answer the question with yes or no and explain the reason with a simple \
             explanation using casual non-professional expressions."
        }
        "instruction.type_based.factoid.professional" => {
            "Answer the question with a specific fact and explain the reason with detailed \
             steps using technical professional expressions."
        }
        "instruction.type_based.factoid.non_professional" => {
            "Answer the question with a specific fact and explain the reason with a simple \
             explanation using casual non-professional expressions."
        }
        "limit.chat_baseline" => LIMIT_CHAT_BASELINE,
        "limit.tuned" => LIMIT_TUNED,
        "prompt.classification" => CLASSIFICATION_TEMPLATE,
        "prompt.augmentation" => AUGMENTATION_TEMPLATE,
        "prompt.decomposition" => DECOMPOSITION_TEMPLATE,
        "answer_style.list.professional" => {
            "has a list of items and explains each item with reasons in detailed steps using \
             technical professional expressions"
        }
        "answer_style.list.non_professional" => {
            "has a list of items and explains each item with a simple explanation using \
             casual non-professional expressions"
        }
        "answer_style.summary.professional" => {
            "has a general summary and explains it with reasons in detailed steps using \
             technical professional expressions"
        }
        "answer_style.summary.non_professional" => {
            "has a general summary and explains it with a simple explanation using casual \
             non-professional expressions"
        }
        "answer_style.yesno.professional" => {
            "has a yes or no statement and explains it with reasons in detailed steps using \
             technical professional expressions"
        }
        "answer_style.yesno.non_professional" => {
            "has a yes or no statement and explains it with a simple explanation using \
             casual non-professional expressions"
        }
        "answer_style.factoid.professional" => {
            "has a specific fact and explains it with reasons in detailed steps using \
             technical professional expressions"
        }
        "answer_style.factoid.non_professional" => {
            "has a specific fact and explains it with a simple explanation using casual \
             non-professional expressions"
        }
        _ => return None,
    };
    Some(text)
}

impl Templates {
    pub fn builtin() -> Self {
        Templates::default()
    }

    /// Load per-key overrides. Format: `[key]` lines start a section; the
    /// lines until the next section are the replacement text (final newline
    /// dropped). Unknown keys are rejected.
    pub fn with_overrides_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut overrides = BTreeMap::new();
        let mut key: Option<String> = None;
        let mut body = String::new();
        let mut flush = |key: &mut Option<String>, body: &mut String| -> Result<()> {
            if let Some(k) = key.take() {
                if builtin_text(&k).is_none() {
                    return Err(Error::Input(format!("unknown template key: {k}")));
                }
                let text = body.strip_suffix('\n').unwrap_or(body).to_string();
                overrides.insert(k, text);
            }
            body.clear();
            Ok(())
        };
        for line in content.lines() {
            if let Some(k) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                flush(&mut key, &mut body)?;
                key = Some(k.to_string());
            } else if key.is_some() {
                body.push_str(line);
                body.push('\n');
            } else if !line.trim().is_empty() {
                return Err(Error::Input(format!(
                    "template file text before any [key] section: {line}"
                )));
            }
        }
        flush(&mut key, &mut body)?;
        Ok(Templates { overrides })
    }

    fn get(&self, key: &str) -> &str {
        self.overrides
            .get(key)
            .map(String::as_str)
            .or_else(|| builtin_text(key))
            .unwrap_or_else(|| panic!("unknown builtin template key: {key}"))
    }

    /// Instruction text for a style/level/type request.
    ///
    /// `qtype` is accepted only for the type-based level; `snippet` only for
    /// the professional knowledge-enriched instruction (one trailing period
    /// is stripped so the template's own period does not double).
    pub fn instruction(
        &self,
        style: StyleLabel,
        level: InstructionLevel,
        qtype: Option<QuestionType>,
        snippet: Option<&str>,
    ) -> Result<String> {
        if level != InstructionLevel::TypeBased && qtype.is_some() {
            return Err(Error::Input(format!(
                "question type given for {} instruction",
                level.as_str()
            )));
        }
        let needs_snippet =
            level == InstructionLevel::KnowledgeEnriched && style == StyleLabel::Professional;
        if !needs_snippet && snippet.is_some() {
            return Err(Error::Input(format!(
                "article snippet given for {} {} instruction",
                style, level.as_str()
            )));
        }
        match level {
            InstructionLevel::Basic => {
                Ok(self.get(&format!("instruction.basic.{style}")).to_string())
            }
            InstructionLevel::TypeBased => {
                let qtype = qtype.ok_or_else(|| {
                    Error::Input("type_based instruction needs a question type".into())
                })?;
                Ok(self
                    .get(&format!("instruction.type_based.{}.{style}", qtype.as_label()))
                    .to_string())
            }
            InstructionLevel::KnowledgeEnriched => {
                if style == StyleLabel::NonProfessional {
                    return Ok(self
                        .get("instruction.knowledge_enriched.non_professional")
                        .to_string());
                }
                let snippet = snippet.ok_or_else(|| {
                    Error::Input(
                        "professional knowledge_enriched instruction needs an article snippet"
                            .into(),
                    )
                })?;
                let snippet = snippet.trim().trim_end_matches('.');
                Ok(self
                    .get("instruction.knowledge_enriched.professional")
                    .replace("<article_snippet>", snippet))
            }
        }
    }

    pub fn limit(&self, profile: ModelProfile) -> &str {
        match profile {
            ModelProfile::ChatBaseline => self.get("limit.chat_baseline"),
            ModelProfile::Tuned => self.get("limit.tuned"),
            ModelProfile::NoLimit => "",
        }
    }

    /// guide ∥ "\n" ∥ question ∥ "\n" ∥ limit.
    pub fn compose_prompt(
        &self,
        guide: &str,
        question: &str,
        profile: ModelProfile,
    ) -> Result<PromptBundle> {
        if guide.is_empty() || question.is_empty() {
            return Err(Error::Input("guide and question must be non-empty".into()));
        }
        let limit = self.limit(profile).to_string();
        let rendered = if limit.is_empty() {
            format!("{guide}\n{question}")
        } else {
            format!("{guide}\n{question}\n{limit}")
        };
        Ok(PromptBundle {
            guide: guide.to_string(),
            question: question.to_string(),
            limit,
            rendered,
        })
    }

    pub fn classification_prompt(&self, question: &str) -> String {
        self.get("prompt.classification")
            .replace("<question>", question)
    }

    pub fn answer_style(&self, qtype: QuestionType, style: StyleLabel) -> &str {
        self.get(&format!("answer_style.{}.{style}", qtype.as_label()))
    }

    /// Fill the augmentation template. `original_style` is the style of the
    /// existing answer; caller few-shot examples are spliced before the
    /// final task statement.
    pub fn augmentation_prompt(
        &self,
        question: &str,
        original_answer: &str,
        original_style: StyleLabel,
        target_style: StyleLabel,
        qtype: QuestionType,
        few_shot: &[FewShotExample],
    ) -> Result<String> {
        if target_style == StyleLabel::Professional && original_answer.trim().is_empty() {
            return Err(Error::Input(
                "professional augmentation rephrases an existing answer; none given".into(),
            ));
        }
        let mut template = self.get("prompt.augmentation").to_string();
        if !few_shot.is_empty() {
            let mut block = String::new();
            for ex in few_shot {
                block.push_str(&format!(
                    "Question: {}\n{} answer: {}\n\n",
                    ex.question,
                    style_heading(ex.style),
                    ex.answer
                ));
            }
            let anchor_pos = template.find(AUGMENTATION_ANCHOR).ok_or_else(|| {
                Error::Input(
                    "augmentation template override lost the task-statement anchor line".into(),
                )
            })?;
            template.insert_str(anchor_pos, &block);
        }
        Ok(template
            .replace("<aim_style>", style_word(target_style))
            .replace("<style>", style_word(original_style))
            .replace("<type>", qtype.display_name())
            .replace("<answer_style>", self.answer_style(qtype, target_style))
            .replace("<question>", question)
            .replace("<original_answer>", original_answer))
    }

    pub fn decomposition_prompt(&self, question: &str, answer: &str) -> String {
        self.get("prompt.decomposition")
            .replace("<question>", question)
            .replace("<answer>", answer)
    }
}

/// [`Templates::instruction`] over the built-in texts.
pub fn build_instruction(
    style: StyleLabel,
    level: InstructionLevel,
    qtype: Option<QuestionType>,
    snippet: Option<&str>,
) -> Result<String> {
    Templates::builtin().instruction(style, level, qtype, snippet)
}

/// [`Templates::compose_prompt`] over the built-in texts.
pub fn compose_prompt(guide: &str, question: &str, profile: ModelProfile) -> Result<PromptBundle> {
    Templates::builtin().compose_prompt(guide, question, profile)
}

/// [`Templates::classification_prompt`] over the built-in texts.
pub fn classification_prompt(question: &str) -> String {
    Templates::builtin().classification_prompt(question)
}

/// [`Templates::decomposition_prompt`] over the built-in texts.
pub fn decomposition_prompt(question: &str, answer: &str) -> String {
    Templates::builtin().decomposition_prompt(question, answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn instruction_grid_is_total() {
        use InstructionLevel::*;
        for style in [StyleLabel::Professional, StyleLabel::NonProfessional] {
            for level in [Basic, TypeBased, KnowledgeEnriched] {
                match level {
                    TypeBased => {
                        for qtype in QuestionType::ALL {
                            build_instruction(style, level, Some(qtype), None).unwrap();
                        }
                    }
                    KnowledgeEnriched if style == StyleLabel::Professional => {
                        build_instruction(style, level, None, Some("RNA folds")).unwrap();
                    }
                    _ => {
                        build_instruction(style, level, None, None).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn slot_preconditions_enforced() {
        assert!(build_instruction(
            StyleLabel::Professional,
            InstructionLevel::TypeBased,
            None,
            None
        )
        .is_err());
        assert!(build_instruction(
            StyleLabel::Professional,
            InstructionLevel::KnowledgeEnriched,
            None,
            None
        )
        .is_err());
        assert!(build_instruction(
            StyleLabel::Professional,
            InstructionLevel::Basic,
            Some(QuestionType::List),
            None
        )
        .is_err());
        assert!(build_instruction(
            StyleLabel::NonProfessional,
            InstructionLevel::KnowledgeEnriched,
            None,
            Some("snippet")
        )
        .is_err());
    }

    #[test]
    fn knowledge_snippet_embeds_without_double_period() {
        let text = build_instruction(
            StyleLabel::Professional,
            InstructionLevel::KnowledgeEnriched,
            None,
            Some("Clathrin coats vesicles."),
        )
        .unwrap();
        assert!(text.starts_with("Knowledge: Clathrin coats vesicles. Answer the question"));
        assert!(!text.contains(".."));
    }

    #[test]
    fn type_based_list_mentions_items() {
        let text = build_instruction(
            StyleLabel::Professional,
            InstructionLevel::TypeBased,
            Some(QuestionType::List),
            None,
        )
        .unwrap();
        assert!(text.contains("a list of items"));
        assert!(text.ends_with("technical professional expressions."));
    }

    #[test]
    fn composed_prompt_layout() {
        let p = compose_prompt("G", "Q", ModelProfile::ChatBaseline).unwrap();
        assert_eq!(p.rendered, format!("G\nQ\n{LIMIT_CHAT_BASELINE}"));
        let p = compose_prompt("G", "Q", ModelProfile::Tuned).unwrap();
        assert!(p.rendered.ends_with("And why?"));
        let p = compose_prompt("G", "Q", ModelProfile::NoLimit).unwrap();
        assert_eq!(p.rendered, "G\nQ");
        assert!(compose_prompt("", "Q", ModelProfile::Tuned).is_err());
    }

    #[test]
    fn classification_prompt_fills_question() {
        let p = classification_prompt("What is clathrin?");
        assert!(p.contains("Question: What is clathrin?\nOutput:"));
        assert!(p.contains("Which DNA sequences are more prone for the formation of R-loops?"));
        assert!(p.ends_with("Output:"));
    }

    #[test]
    fn augmentation_prompt_fills_all_slots() {
        let p = Templates::builtin()
            .augmentation_prompt(
                "Is aspirin an anticoagulant?",
                "Aspirin irreversibly inhibits cyclooxygenase-1.",
                StyleLabel::Professional,
                StyleLabel::NonProfessional,
                QuestionType::YesNo,
                &[],
            )
            .unwrap();
        assert!(p.contains("answer the question with non-professional language"));
        assert!(p.contains("the original professional answer"));
        assert!(p.contains("For a yes/no question"));
        assert!(p.contains("What is gingipain?"));
        assert!(p.contains("reduced-nicotine cigarettes"));
        assert!(p.contains("Question: Is aspirin an anticoagulant?"));
        assert!(p.contains("Original professional answer: Aspirin irreversibly"));
        assert!(!p.contains('<'));
    }

    #[test]
    fn augmentation_few_shot_splices_before_task() {
        let few = [FewShotExample {
            question: "What is a ribosome?".into(),
            answer: "It reads mRNA.".into(),
            style: StyleLabel::NonProfessional,
        }];
        let p = Templates::builtin()
            .augmentation_prompt(
                "Q",
                "A",
                StyleLabel::Professional,
                StyleLabel::NonProfessional,
                QuestionType::Summary,
                &few,
            )
            .unwrap();
        let spliced = p.find("What is a ribosome?").unwrap();
        let task = p.find("Please give a non-professional answer").unwrap();
        let demo = p.find("reduced-nicotine").unwrap();
        assert!(demo < spliced && spliced < task);
    }

    #[test]
    fn professional_target_requires_original_answer() {
        let err = Templates::builtin().augmentation_prompt(
            "Q",
            "  ",
            StyleLabel::NonProfessional,
            StyleLabel::Professional,
            QuestionType::List,
            &[],
        );
        assert!(err.is_err());
    }

    #[test]
    fn decomposition_prompt_embeds_both_texts() {
        let p = decomposition_prompt("Why is the sky blue?", "Rayleigh scattering.");
        assert!(p.contains("Question: Why is the sky blue?"));
        assert!(p.ends_with("Answer: Rayleigh scattering."));
        assert!(p.contains("Total steps: <number>"));
    }

    #[test]
    fn override_file_replaces_single_key() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[limit.tuned]").unwrap();
        writeln!(f, "Say more.").unwrap();
        let t = Templates::with_overrides_file(f.path()).unwrap();
        assert_eq!(t.limit(ModelProfile::Tuned), "Say more.");
        assert_eq!(t.limit(ModelProfile::ChatBaseline), LIMIT_CHAT_BASELINE);
    }

    #[test]
    fn override_file_rejects_unknown_key() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[no.such.key]\nx").unwrap();
        assert!(Templates::with_overrides_file(f.path()).is_err());
    }
}
