//! Verifiable reward functions and their combination.
//!
//! Components: a binary format reward, a task reward dispatched by QA
//! family (exact match for multi-choice, threshold-counted relative
//! accuracy for numeric answers, WER / ROUGE / relative distance for
//! the general types), a map reward comparing the predicted cognitive
//! map against ground truth, and a length bonus gated on correctness.
//! The combined scalar adds the map term only when the task reward is
//! exactly 1 and a parsed map exists.

use serde::{Deserialize, Serialize};

use crate::qa::{QAPair, QaFamily, TaskType};
use crate::response::{extract_choice, extract_number, ParsedResponse};
use crate::scene::{GridMap, DEFAULT_MAP_SIZE};
use crate::text_metrics::{rouge_l, rouge_n, word_error_rate, TokenSeq};

/// Confidence thresholds of the numeric reward, written out so the
/// boundary arithmetic is bit-stable.
pub const DEFAULT_THRESHOLDS: [f64; 10] =
    [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Strictly increasing confidence thresholds in (0, 1).
    pub thresholds: Vec<f64>,
    /// Inclusive think-length range (whitespace tokens) for the bonus.
    pub l_min: usize,
    pub l_max: usize,
    /// Bonus granted for a correct answer with in-range think length.
    pub length_bonus: f64,
    /// Cognitive-map resolution used when parsing model maps.
    pub map_size: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            l_min: 360,
            l_max: 512,
            length_bonus: 0.5,
            map_size: DEFAULT_MAP_SIZE,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.thresholds.is_empty() {
            return Err("thresholds must be non-empty".into());
        }
        for w in self.thresholds.windows(2) {
            if !(w[0] < w[1]) {
                return Err(format!("thresholds not strictly increasing at {w:?}"));
            }
        }
        if !self
            .thresholds
            .iter()
            .all(|t| (0.0..1.0).contains(t) && *t > 0.0)
        {
            return Err("thresholds must lie in (0, 1)".into());
        }
        if self.l_min > self.l_max {
            return Err(format!("l_min {} > l_max {}", self.l_min, self.l_max));
        }
        if !(self.length_bonus >= 0.0) {
            return Err("length bonus must be non-negative".into());
        }
        if self.map_size == 0 {
            return Err("map_size must be positive".into());
        }
        Ok(())
    }
}

/// Per-component rewards for one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_format: f64,
    pub r_task: f64,
    /// Present only when the task reward is exactly 1 and both a parsed
    /// and a ground-truth map existed.
    pub r_map: Option<f64>,
    pub r_length: f64,
    /// Exactly `r_format + r_task + r_map.unwrap_or(0) + r_length`.
    pub total: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// 1 iff the response carries exactly one think and one answer pair in
/// order.
pub fn reward_format(resp: &ParsedResponse) -> f64 {
    if resp.well_formed {
        1.0
    } else {
        0.0
    }
}

/// Exact-match reward for multi-choice answers.
pub fn reward_multi_choice(predicted: usize, truth: usize) -> f64 {
    if predicted == truth {
        1.0
    } else {
        0.0
    }
}

/// Fraction of confidence thresholds theta for which the relative error
/// `|pred - truth| / truth` stays within `1 - theta`.
///
/// The denominator is the signed truth value; `truth == 0` falls back
/// to exact match (1 if `pred == 0`, else 0).
pub fn reward_numerical(predicted: f64, truth: f64, cfg: &RewardConfig) -> f64 {
    if truth == 0.0 {
        return if predicted == 0.0 { 1.0 } else { 0.0 };
    }
    let rel = (predicted - truth).abs() / truth;
    let hits = cfg
        .thresholds
        .iter()
        .filter(|&&theta| rel <= 1.0 - theta)
        .count();
    hits as f64 / cfg.thresholds.len() as f64
}

/// `max(0, 1 - WER)` between normalized token sequences.
pub fn reward_ocr(predicted: &str, truth: &str) -> Result<f64, crate::text_metrics::TextMetricError> {
    let hyp = TokenSeq::normalize(predicted);
    let reference = TokenSeq::normalize(truth);
    Ok((1.0 - word_error_rate(&hyp, &reference)?).max(0.0))
}

/// Mean of ROUGE-1, ROUGE-2, and ROUGE-L F1 scores.
pub fn reward_free_form(predicted: &str, truth: &str) -> f64 {
    let hyp = TokenSeq::normalize(predicted);
    let reference = TokenSeq::normalize(truth);
    (rouge_n(&hyp, &reference, 1) + rouge_n(&hyp, &reference, 2) + rouge_l(&hyp, &reference)) / 3.0
}

/// `max(0, 1 - |pred - truth| / max(|truth|, eps))`.
pub fn reward_regression(predicted: f64, truth: f64) -> f64 {
    (1.0 - (predicted - truth).abs() / truth.abs().max(1e-9)).max(0.0)
}

/// Instance-count-weighted mean of `1 - centroid distance / sqrt(2 M^2)`
/// over ground-truth categories; categories missing from the prediction
/// contribute zero while keeping their weight.
pub fn reward_map(predicted: &GridMap, truth: &GridMap, m: usize) -> f64 {
    let total: usize = truth.cells.values().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let denom = (2.0 * (m * m) as f64).sqrt();
    // accumulate n_i * accuracy_i and divide once, so a perfect match is
    // exactly 1 regardless of how instance counts split
    let mut acc = 0.0;
    for (category, cells) in &truth.cells {
        let (gx, gy) = truth.centroid(category).expect("category present");
        if let Some((px, py)) = predicted.centroid(category) {
            let dist = ((px - gx).powi(2) + (py - gy).powi(2)).sqrt();
            acc += cells.len() as f64 * (1.0 - dist / denom);
        }
    }
    (acc / total as f64).clamp(0.0, 1.0)
}

/// Length bonus, granted only for a correct answer whose think segment
/// falls within `[l_min, l_max]`.
pub fn reward_length(think_length: usize, task_correct: bool, cfg: &RewardConfig) -> f64 {
    if task_correct && (cfg.l_min..=cfg.l_max).contains(&think_length) {
        cfg.length_bonus
    } else {
        0.0
    }
}

fn task_reward(resp: &ParsedResponse, qa: &QAPair, cfg: &RewardConfig) -> (f64, Vec<String>) {
    let mut diagnostics = Vec::new();
    let Some(answer) = resp.answer_text.as_deref() else {
        diagnostics.push("no answer segment".to_string());
        return (0.0, diagnostics);
    };
    let score = match qa.task.family() {
        QaFamily::MultiChoice => {
            let (Some(options), Some(truth)) = (&qa.options, qa.answer_choice) else {
                diagnostics.push("multi-choice pair lacks options or answer".to_string());
                return (0.0, diagnostics);
            };
            match extract_choice(answer, options) {
                Ok(choice) => reward_multi_choice(choice, truth),
                Err(e) => {
                    diagnostics.push(e.to_string());
                    0.0
                }
            }
        }
        QaFamily::Numerical => {
            let Some(truth) = qa.answer_value.as_ref() else {
                diagnostics.push("numeric pair lacks answer_value".to_string());
                return (0.0, diagnostics);
            };
            match extract_number(answer) {
                Ok(predicted) => {
                    if qa.task == TaskType::Regression {
                        reward_regression(predicted, truth.value)
                    } else {
                        reward_numerical(predicted, truth.value, cfg)
                    }
                }
                Err(e) => {
                    diagnostics.push(e.to_string());
                    0.0
                }
            }
        }
        QaFamily::Text => {
            let Some(truth) = qa.answer_text.as_deref() else {
                diagnostics.push("text pair lacks answer_text".to_string());
                return (0.0, diagnostics);
            };
            match qa.task {
                TaskType::Ocr => match reward_ocr(answer, truth) {
                    Ok(s) => s,
                    Err(e) => {
                        diagnostics.push(e.to_string());
                        0.0
                    }
                },
                _ => reward_free_form(answer, truth),
            }
        }
    };
    (score, diagnostics)
}

/// Scores one response against its question: format + task (+ map when
/// the answer is exactly right and a map was produced) + length bonus.
/// Extraction failures never error; they produce a zero task reward
/// with a diagnostic.
pub fn score_response(resp: &ParsedResponse, qa: &QAPair, cfg: &RewardConfig) -> RewardBreakdown {
    let r_format = reward_format(resp);
    let (r_task, mut diagnostics) = task_reward(resp, qa, cfg);

    let r_map = if r_task == 1.0 {
        match (&resp.parsed_map, &qa.gt_map) {
            (Some(predicted), Some(truth)) => {
                if predicted.size == truth.size {
                    Some(reward_map(predicted, truth, truth.size))
                } else {
                    diagnostics.push(format!(
                        "map size mismatch: predicted {} vs ground truth {}",
                        predicted.size, truth.size
                    ));
                    None
                }
            }
            _ => None,
        }
    } else {
        None
    };
    let r_length = reward_length(resp.think_length, r_task == 1.0, cfg);
    let total = r_format + r_task + r_map.unwrap_or(0.0) + r_length;
    RewardBreakdown {
        r_format,
        r_task,
        r_map,
        r_length,
        total,
        diagnostics,
    }
}
