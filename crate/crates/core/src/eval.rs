//! Retrieval-only evaluation.
//!
//! No model answers the questions. A multiple-choice item counts as correct
//! when the gold choice is the one best covered by the retrieved context
//! (highest ROUGE-L recall); for close-ended items the ROUGE-L recall of the
//! gold answer against the context is reported.
//!
//! QA files hold one JSON object per line:
//!
//! ```text
//! {"question": "...", "answer": "..."}
//! {"question": "...", "choices": ["...", "..."], "gold": 1}
//! ```
//!
//! `gold` is a zero-based index or the text of one of the choices.

use serde::{Deserialize, Serialize};

use crate::chunker::word_tokens;
use crate::query::RetrievalMode;
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn normalized_tokens(text: &str) -> Vec<String> {
    word_tokens(text).into_iter().map(|t| t.to_lowercase()).collect()
}

/// Length of the longest common subsequence, in `O(|a|·|b|)` time and
/// `O(|b|)` memory.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L over lowercased tokens of the default splitter.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&normalized_tokens(candidate), &normalized_tokens(reference))
}

pub fn rouge_l_tokens<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeScore {
    let l = lcs_len(candidate, reference) as f64;
    let ratio = |n: usize| if n == 0 { 0.0 } else { l / n as f64 };
    let (precision, recall) = (ratio(candidate.len()), ratio(reference.len()));
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RougeScore { precision, recall, f1 }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Index(usize),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    question: String,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    choices: Option<Vec<String>>,
    #[serde(default)]
    gold: Option<Gold>,
    #[serde(default)]
    id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QaKind {
    CloseEnded { answer: String },
    MultipleChoice { choices: Vec<String>, gold: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaItem {
    pub id: Option<String>,
    pub question: String,
    pub kind: QaKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    /// One-based line number.
    pub line: usize,
    pub reason: String,
}

fn parse_item(line: &str) -> std::result::Result<QaItem, String> {
    let raw: RawItem = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let kind = match (raw.answer, raw.choices, raw.gold) {
        (Some(answer), None, None) => QaKind::CloseEnded { answer },
        (None, Some(choices), Some(gold)) => {
            if choices.is_empty() {
                return Err("choices is empty".into());
            }
            let gold = match gold {
                Gold::Index(i) if i < choices.len() => i,
                Gold::Index(i) => return Err(format!("gold index {i} out of range")),
                Gold::Text(t) => choices
                    .iter()
                    .position(|c| *c == t)
                    .ok_or_else(|| format!("gold '{t}' is not one of the choices"))?,
            };
            QaKind::MultipleChoice { choices, gold }
        }
        _ => return Err("expected either `answer` or `choices` with `gold`".into()),
    };
    Ok(QaItem {
        id: raw.id,
        question: raw.question,
        kind,
    })
}

/// Parses a JSON-lines QA file. Blank lines are ignored; malformed lines are
/// skipped and reported.
pub fn parse_qa(text: &str) -> (Vec<QaItem>, Vec<SkippedLine>) {
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_item(line) {
            Ok(item) => items.push(item),
            Err(reason) => skipped.push(SkippedLine { line: i + 1, reason }),
        }
    }
    (items, skipped)
}

/// Index of the choice with the highest ROUGE-L recall against `context`;
/// ties go to the earlier choice.
pub fn best_choice(context: &str, choices: &[String]) -> Option<usize> {
    let ctx = normalized_tokens(context);
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in choices.iter().enumerate() {
        let r = rouge_l_tokens(&ctx, &normalized_tokens(c)).recall;
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub id: Option<String>,
    pub question: String,
    pub mode: RetrievalMode,
    pub retrieval_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_l: Option<RougeScore>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl LatencySummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            count: s.len(),
            mean_ms: if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 },
            p50_ms: percentile(&s, 50.0),
            p90_ms: percentile(&s, 90.0),
            p99_ms: percentile(&s, 99.0),
            max_ms: s.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Always `"retrieval-proxy"`: scores measure what the retrieved
    /// context covers, not answers produced by a model.
    pub scoring: String,
    pub items: usize,
    pub skipped: Vec<SkippedLine>,
    pub multiple_choice: usize,
    pub multiple_choice_correct: usize,
    pub accuracy: Option<f64>,
    pub close_ended: usize,
    pub mean_rouge_l_recall: Option<f64>,
    pub mean_rouge_l_f1: Option<f64>,
    pub modes: std::collections::BTreeMap<String, usize>,
    pub latency: LatencySummary,
    pub results: Vec<ItemResult>,
}

/// What a retrieval run hands to the scorer.
pub struct Retrieved {
    pub mode: RetrievalMode,
    pub context: String,
    pub retrieval_ms: f64,
}

pub fn evaluate(
    items: &[QaItem],
    skipped: Vec<SkippedLine>,
    mut retrieve: impl FnMut(&str) -> Result<Retrieved>,
) -> Result<EvalReport> {
    let mut report = EvalReport {
        scoring: "retrieval-proxy".into(),
        items: items.len(),
        skipped,
        ..EvalReport::default()
    };
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut latencies = Vec::with_capacity(items.len());
    for item in items {
        let r = retrieve(&item.question)?;
        latencies.push(r.retrieval_ms);
        *report.modes.entry(format!("{:?}", r.mode)).or_default() += 1;
        let mut res = ItemResult {
            id: item.id.clone(),
            question: item.question.clone(),
            mode: r.mode,
            retrieval_ms: r.retrieval_ms,
            predicted: None,
            correct: None,
            rouge_l: None,
        };
        match &item.kind {
            QaKind::MultipleChoice { choices, gold } => {
                report.multiple_choice += 1;
                let predicted = best_choice(&r.context, choices);
                let correct = predicted == Some(*gold);
                report.multiple_choice_correct += usize::from(correct);
                res.predicted = predicted;
                res.correct = Some(correct);
            }
            QaKind::CloseEnded { answer } => {
                report.close_ended += 1;
                let score = rouge_l(&r.context, answer);
                recall_sum += score.recall;
                f1_sum += score.f1;
                res.rouge_l = Some(score);
            }
        }
        report.results.push(res);
    }
    if report.multiple_choice > 0 {
        report.accuracy = Some(report.multiple_choice_correct as f64 / report.multiple_choice as f64);
    }
    if report.close_ended > 0 {
        report.mean_rouge_l_recall = Some(recall_sum / report.close_ended as f64);
        report.mean_rouge_l_f1 = Some(f1_sum / report.close_ended as f64);
    }
    report.latency = LatencySummary::from_samples(&latencies);
    Ok(report)
}
