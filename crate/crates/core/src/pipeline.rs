//! Corpus-level plumbing: JSONL import/export, statistics, and
//! difficulty-based sample selection.
//!
//! JSONL records serialize with a pinned (alphabetical) field order so
//! exports are byte-stable for a given input and seed.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::{QAPair, QaFamily, TaskType};
use crate::util::grid_index;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sink failed after {written} records: {source}")]
    Sink {
        written: usize,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A line that failed to import, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Default)]
pub struct ImportOutcome {
    pub pairs: Vec<QAPair>,
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Writes one record per line; returns the number written.
pub fn export_jsonl<W: Write>(pairs: &[QAPair], mut sink: W) -> Result<usize, PipelineError> {
    let mut written = 0;
    for pair in pairs {
        let line = serde_json::to_string(pair).expect("QA record serialization cannot fail");
        sink.write_all(line.as_bytes())
            .and_then(|_| sink.write_all(b"\n"))
            .map_err(|source| PipelineError::Sink { written, source })?;
        written += 1;
    }
    sink.flush().map_err(|source| PipelineError::Sink { written, source })?;
    Ok(written)
}

/// Reads records line by line; invalid lines become diagnostics, valid
/// records are returned in input order.
pub fn import_jsonl<R: BufRead>(source: R) -> Result<ImportOutcome, PipelineError> {
    let mut out = ImportOutcome::default();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<QAPair>(&line) {
            Ok(pair) => {
                let errs = pair.validate();
                if errs.is_empty() {
                    out.pairs.push(pair);
                } else {
                    out.diagnostics.push(LineDiagnostic {
                        line: number,
                        message: errs.join("; "),
                    });
                }
            }
            Err(e) => out.diagnostics.push(LineDiagnostic {
                line: number,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Task-correctness indicators for the G responses to one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedSample {
    /// One indicator in {0, 1} per response.
    pub group_rewards: Vec<u8>,
    pub qa_id: String,
}

impl GradedSample {
    pub fn validate(&self) -> Result<(), String> {
        if self.group_rewards.is_empty() {
            return Err(format!("{}: empty indicator group", self.qa_id));
        }
        if self.group_rewards.iter().any(|r| *r > 1) {
            return Err(format!("{}: indicators must be 0 or 1", self.qa_id));
        }
        Ok(())
    }
}

/// Exhaustive, disjoint difficulty partition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DifficultyPartition {
    /// Mixed correctness: the samples worth training on.
    pub kept: Vec<GradedSample>,
    /// All responses correct: low learning value.
    pub dropped_easy: Vec<GradedSample>,
    /// All responses wrong: potential noise.
    pub dropped_hard: Vec<GradedSample>,
}

/// Splits samples by response consistency: all-correct samples are
/// dropped as easy, all-wrong as hard, mixed ones kept.
pub fn difficulty_sample(graded: Vec<GradedSample>) -> DifficultyPartition {
    let mut partition = DifficultyPartition::default();
    for sample in graded {
        let correct = sample.group_rewards.iter().filter(|r| **r == 1).count();
        if correct == sample.group_rewards.len() {
            partition.dropped_easy.push(sample);
        } else if correct == 0 {
            partition.dropped_hard.push(sample);
        } else {
            partition.kept.push(sample);
        }
    }
    partition
}

/// One scored response, as written by the scoring pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    /// The question this response answered.
    pub id: String,
    pub r_format: f64,
    pub r_length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_map: Option<f64>,
    pub r_task: f64,
    pub total: f64,
}

/// Input record for the scoring pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRecord {
    pub qa_id: String,
    pub response_text: String,
}

/// Groups score records by question id (first-seen order) into
/// task-correctness indicator groups.
pub fn grade_from_scores(scores: &[ScoreRecord]) -> Vec<GradedSample> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for record in scores {
        let entry = groups.entry(&record.id).or_insert_with(|| {
            order.push(&record.id);
            Vec::new()
        });
        entry.push(u8::from(record.r_task == 1.0));
    }
    order
        .into_iter()
        .map(|id| GradedSample {
            group_rewards: groups.remove(id).expect("group recorded"),
            qa_id: id.to_string(),
        })
        .collect()
}

/// Corpus-level counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Per-task equal-width histograms of numeric answers.
    pub numeric_histograms: BTreeMap<TaskType, Vec<usize>>,
    /// Correct-option position counts over multi-choice pairs.
    pub per_answer_position: Vec<usize>,
    pub per_task: BTreeMap<TaskType, usize>,
    pub total: usize,
}

/// Exact corpus counts; histogram bins are equal-width over each task's
/// observed value range.
pub fn corpus_stats(pairs: &[QAPair], value_bins: usize) -> CorpusStats {
    let bins = value_bins.max(1);
    let mut per_task: BTreeMap<TaskType, usize> = BTreeMap::new();
    let mut positions: Vec<usize> = Vec::new();
    let mut values: BTreeMap<TaskType, Vec<f64>> = BTreeMap::new();
    for pair in pairs {
        *per_task.entry(pair.task).or_default() += 1;
        if pair.task.family() == QaFamily::MultiChoice {
            if let Some(c) = pair.answer_choice {
                if positions.len() <= c {
                    positions.resize(c + 1, 0);
                }
                positions[c] += 1;
            }
        }
        if let Some(av) = &pair.answer_value {
            values.entry(pair.task).or_default().push(av.value);
        }
    }
    let mut numeric_histograms = BTreeMap::new();
    for (task, vals) in values {
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut hist = vec![0usize; bins];
        for v in vals {
            let b = if max > min { grid_index(v, min, max, bins) } else { 0 };
            hist[b] += 1;
        }
        numeric_histograms.insert(task, hist);
    }
    CorpusStats {
        numeric_histograms,
        per_answer_position: positions,
        per_task,
        total: pairs.len(),
    }
}
