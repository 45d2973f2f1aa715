//! Aggregate evaluation report and its rendered forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompts::ModelProfile;
use crate::style::EvalConfig;

/// Which styles feed the reference-based quality scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityScope {
    /// Score professional generations only (the default).
    ProfessionalOnly,
    /// Score both styles.
    Both,
}

impl std::str::FromStr for QualityScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "professional_only" | "professional-only" | "pro" => Ok(QualityScope::ProfessionalOnly),
            "both" => Ok(QualityScope::Both),
            other => Err(format!("unknown quality scope: {other}")),
        }
    }
}

/// Everything that shaped a run, snapshotted into the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfig {
    pub eval: EvalConfig,
    pub seed: u64,
    pub model_profile: ModelProfile,
    pub quality_scope: QualityScope,
    pub bleu_m: u32,
}

/// Aggregate indicators for one model on one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_name: String,
    pub dataset_name: String,
    pub thg: f64,
    pub rsg: f64,
    pub pro_f1: f64,
    /// Absent for reference-free datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bert_f: Option<f64>,
    /// Reasoning density of the professional generations (3 decimals).
    pub rd_professional: f64,
    /// Professional-side averages feeding the density.
    pub avg_len: f64,
    pub avg_rs: f64,
    pub runs: u32,
    /// Records without a parseable reasoning trace after retries.
    pub excluded: u32,
    pub config: ReportConfig,
}

impl EvalReport {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.thg,
            self.rsg,
            self.pro_f1,
            self.rd_professional,
            self.avg_len,
            self.avg_rs,
            self.bleu.unwrap_or(0.0),
            self.bert_f.unwrap_or(0.0),
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("report contains a non-finite value".into()));
        }
        Ok(())
    }
}

/// Output form for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Json,
    Csv,
    TableText,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(RenderFormat::Json),
            "csv" => Ok(RenderFormat::Csv),
            "table-text" | "table" | "text" => Ok(RenderFormat::TableText),
            other => Err(format!("unknown report format: {other}")),
        }
    }
}

fn opt2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Render a report. JSON is the canonical full-precision schema; CSV and
/// table text round to the presentation precision (2 decimals for
/// THG/RSG/Pro F1, 4 for BLEU/BERT, 3 for RD).
pub fn render_report(report: &EvalReport, format: RenderFormat) -> Result<String> {
    report.validate()?;
    match format {
        RenderFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            Ok(text)
        }
        RenderFormat::Csv => {
            let header = "model,dataset,thg,rsg,pro_f1,bleu,bert_score,rd,avg_len,avg_rs,runs,excluded";
            let row = format!(
                "{},{},{:.2},{:.2},{:.2},{},{},{:.3},{:.2},{:.2},{},{}",
                csv_field(&report.model_name),
                csv_field(&report.dataset_name),
                report.thg,
                report.rsg,
                report.pro_f1,
                opt2(report.bleu),
                opt2(report.bert_f),
                report.rd_professional,
                report.avg_len,
                report.avg_rs,
                report.runs,
                report.excluded,
            );
            Ok(format!("{header}\n{row}\n"))
        }
        RenderFormat::TableText => {
            let bleu = report
                .bleu
                .map(|x| format!("{x:.4}"))
                .unwrap_or_else(|| "-".into());
            let bert = report
                .bert_f
                .map(|x| format!("{x:.4}"))
                .unwrap_or_else(|| "-".into());
            let mut out = String::new();
            let width = report.model_name.len().max("Model".len());
            out.push_str(&format!(
                "{:width$}  {:>6}  {:>6}  {:>6}  {:>10}  {:>10}\n",
                "Model", "THG", "RSG", "Pro F1", "BLEU Score", "BERT Score",
            ));
            out.push_str(&format!(
                "{:width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>10}  {:>10}\n",
                report.model_name, report.thg, report.rsg, report.pro_f1, bleu, bert,
            ));
            Ok(out)
        }
    }
}

/// Quote a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
