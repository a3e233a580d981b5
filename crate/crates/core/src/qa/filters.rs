//! Corpus filtering: noisy-category removal, per-scene caps,
//! answer-position balancing, and numeric histogram balancing.
//!
//! Every random decision is a pure function of `(seed, record id)`, not
//! of the record's current state, which makes the whole filter
//! idempotent for a fixed seed: applying it twice equals applying it
//! once.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::qa::{QaFamily, QAPair, TaskType};
use crate::util::{derive_seed, fnv1a64, grid_index, splitmix64};

/// Maximum deviation of any answer position's frequency from uniform.
pub const POSITION_BALANCE_TOL: f64 = 0.02;

const MAX_SHUFFLE_ROUNDS: u64 = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Per-scene, per-task cap on retained QA pairs.
    pub max_qa_per_video: usize,
    /// Categories whose questions are dropped outright.
    pub noisy_categories: BTreeSet<String>,
    /// Minimum object size for size questions, centimeters.
    pub min_object_size_cm: f64,
    /// Number of equal-width bins for numeric balancing.
    pub value_bins: usize,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_qa_per_video: 10,
            noisy_categories: ["wall", "floor", "ceiling"]
                .into_iter()
                .map(str::to_string)
                .collect(),
            min_object_size_cm: 15.0,
            value_bins: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub pairs: Vec<QAPair>,
    pub diagnostics: Vec<String>,
}

fn references_noisy(pair: &QAPair, noisy: &BTreeSet<String>) -> bool {
    if let Some(objects) = pair.meta.get("objects") {
        if objects
            .split(';')
            .any(|c| noisy.contains(&c.to_lowercase()))
        {
            return true;
        }
        return false;
    }
    // no provenance: fall back to a word scan of the question text
    let normalized: String = pair
        .question
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let padded = format!(" {} ", normalized.split_whitespace().collect::<Vec<_>>().join(" "));
    noisy.iter().any(|term| padded.contains(&format!(" {term} ")))
}

/// Stable per-record rank used for every seeded selection.
fn record_rank(seed: u64, label: &str, id: &str) -> u64 {
    splitmix64(derive_seed(seed, label, fnv1a64(id.as_bytes())))
}

/// Runs the four filtering stages in order. Diagnostics describe
/// best-effort outcomes; they never abort the pipeline.
pub fn apply_filters(pairs: Vec<QAPair>, cfg: &FilterConfig) -> FilterOutcome {
    let mut diagnostics = Vec::new();

    // (a) drop pairs touching noisy categories
    let before = pairs.len();
    let pairs: Vec<QAPair> = pairs
        .into_iter()
        .filter(|p| !references_noisy(p, &cfg.noisy_categories))
        .collect();
    if pairs.len() != before {
        diagnostics.push(format!(
            "noisy-category filter dropped {} of {before} pairs",
            before - pairs.len()
        ));
    }

    // (b) per-(scene, task) cap via seeded rank
    let mut groups: BTreeMap<(String, TaskType), Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        groups
            .entry((p.scene_id.clone(), p.task))
            .or_default()
            .push(i);
    }
    let mut drop = vec![false; pairs.len()];
    let mut capped = 0usize;
    for ((_, _), members) in &groups {
        if members.len() <= cfg.max_qa_per_video {
            continue;
        }
        let mut ranked: Vec<usize> = members.clone();
        ranked.sort_by_key(|&i| record_rank(cfg.seed, "cap", &pairs[i].id));
        for &i in &ranked[cfg.max_qa_per_video..] {
            drop[i] = true;
            capped += 1;
        }
    }
    if capped > 0 {
        diagnostics.push(format!(
            "per-scene cap ({}) dropped {capped} pairs",
            cfg.max_qa_per_video
        ));
    }
    let mut pairs: Vec<QAPair> = pairs
        .into_iter()
        .zip(drop)
        .filter(|(_, d)| !*d)
        .map(|(p, _)| p)
        .collect();

    // (c) balance correct-answer positions of multi-choice pairs
    shuffle_answer_positions(&mut pairs, cfg, &mut diagnostics);

    // (d) histogram-balance numeric answers per task
    let keep = balance_numeric(&pairs, cfg, &mut diagnostics);
    let pairs: Vec<QAPair> = pairs
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p)
        .collect();

    FilterOutcome { pairs, diagnostics }
}

/// Assigns each multi-choice pair's correct option to a position drawn
/// from `(seed, round, id)`. Rounds are re-drawn until every position's
/// frequency is within [`POSITION_BALANCE_TOL`] of uniform; each
/// option-count class picks its round independently, keeping whichever
/// round deviates least when none passes. The assignment depends only
/// on the record id, never on the current option order, so
/// re-application reproduces the same layout.
fn shuffle_answer_positions(
    pairs: &mut [QAPair],
    cfg: &FilterConfig,
    diagnostics: &mut Vec<String>,
) {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.task.family() != QaFamily::MultiChoice {
            continue;
        }
        if let (Some(options), Some(choice)) = (&p.options, p.answer_choice) {
            if options.len() >= 2 && choice < options.len() {
                classes.entry(options.len()).or_default().push(i);
            }
        }
    }

    let target_position = |round: u64, id: &str, k: usize| -> usize {
        (splitmix64(derive_seed(cfg.seed, "answer_position", round) ^ fnv1a64(id.as_bytes()))
            % k as u64) as usize
    };

    for (&k, members) in &classes {
        let mut best: Option<(f64, u64)> = None;
        for round in 0..MAX_SHUFFLE_ROUNDS {
            let mut counts = vec![0usize; k];
            for &i in members {
                counts[target_position(round, &pairs[i].id, k)] += 1;
            }
            let deviation = counts
                .iter()
                .map(|&c| (c as f64 / members.len() as f64 - 1.0 / k as f64).abs())
                .fold(0.0, f64::max);
            if best.is_none_or(|(d, _)| deviation < d) {
                best = Some((deviation, round));
            }
            if deviation <= POSITION_BALANCE_TOL {
                break;
            }
        }
        let (deviation, round) = best.expect("at least one round evaluated");
        if deviation > POSITION_BALANCE_TOL {
            diagnostics.push(format!(
                "answer-position balance ({k} options, {} pairs): best effort after \
                 {MAX_SHUFFLE_ROUNDS} rounds, max deviation {deviation:.3}",
                members.len()
            ));
        }
        for &i in members {
            let pair = &mut pairs[i];
            let options = pair.options.as_mut().unwrap();
            let target = target_position(round, &pair.id, k);
            let correct = options.remove(pair.answer_choice.unwrap());
            options.insert(target, correct);
            pair.answer_choice = Some(target);
        }
    }
}

/// Equal-width histogram balance: every non-empty bin is down-sampled
/// to the smallest non-empty bin's count. The value-range extremes are
/// always retained so the bin edges — and with them the whole decision —
/// are stable under re-application.
fn balance_numeric(pairs: &[QAPair], cfg: &FilterConfig, diagnostics: &mut Vec<String>) -> Vec<bool> {
    let mut keep = vec![true; pairs.len()];
    let mut by_task: BTreeMap<TaskType, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.answer_value.is_some() {
            by_task.entry(p.task).or_default().push(i);
        }
    }

    for (task, members) in by_task {
        if members.len() < 2 {
            continue;
        }
        let value = |i: usize| pairs[i].answer_value.as_ref().unwrap().value;
        let min = members.iter().map(|&i| value(i)).fold(f64::INFINITY, f64::min);
        let max = members
            .iter()
            .map(|&i| value(i))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            continue; // all answers equal: already balanced
        }
        let bins = cfg.value_bins.max(2);
        let mut bin_members: Vec<Vec<usize>> = vec![Vec::new(); bins];
        for &i in &members {
            bin_members[grid_index(value(i), min, max, bins)].push(i);
        }
        let target = bin_members
            .iter()
            .filter(|b| !b.is_empty())
            .map(Vec::len)
            .min()
            .unwrap_or(0);

        // indices whose values realize the range extremes (stable pick:
        // first in input order)
        let min_holder = members.iter().copied().find(|&i| value(i) == min);
        let max_holder = members.iter().copied().find(|&i| value(i) == max);

        let mut dropped = 0usize;
        for bin in &bin_members {
            if bin.len() <= target {
                continue;
            }
            let mut ranked: Vec<usize> = bin.clone();
            ranked.sort_by_key(|&i| {
                let forced = Some(i) == min_holder || Some(i) == max_holder;
                (!forced, record_rank(cfg.seed, "value_bin", &pairs[i].id))
            });
            for &i in &ranked[target..] {
                keep[i] = false;
                dropped += 1;
            }
        }
        if dropped > 0 {
            diagnostics.push(format!(
                "numeric balance for {}: dropped {dropped} of {} pairs ({} bins, target {target})",
                task.slug(),
                members.len(),
                bins
            ));
        }
    }
    keep
}
