//! Command-line entry point for the spatial QA toolkit.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Every
//! subcommand is a pure function of its input files, flags, and seed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand};

use spaqa_core::config::AppConfig;
use spaqa_core::grpo::{ToyScenario, ToyTrainer};
use spaqa_core::pipeline::{
    corpus_stats, difficulty_sample, export_jsonl, grade_from_scores, import_jsonl, GradedSample,
    ResponseRecord, ScoreRecord,
};
use spaqa_core::qa::{apply_filters, QaGenerator, TaskType};
use spaqa_core::response::parse_response_sized;
use spaqa_core::reward::score_response;
use spaqa_core::scene::parse_scene;

#[derive(Parser)]
#[command(
    name = "spaqa",
    version,
    about = "Synthesize spatial-reasoning QA from scene metadata, score tagged responses with verifiable rewards, and run a toy policy trainer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate QA pairs from scene metadata files.
    Gen {
        /// Scene JSON file, or a directory of them (read in name order).
        #[arg(long)]
        scenes: PathBuf,
        /// Output QA JSONL path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON config overriding generator defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Filter a QA corpus: noisy categories, per-scene caps, answer
    /// position balance, numeric histogram balance.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the filter seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score model responses against their QA ground truths.
    Score {
        /// QA JSONL with ground truths.
        #[arg(long)]
        qa: PathBuf,
        /// Responses JSONL: {"qa_id": ..., "response_text": ...}.
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Partition graded samples by difficulty (drop all-correct and
    /// all-wrong).
    #[command(group(ArgGroup::new("input").required(true).args(["graded", "scores"])))]
    Sample {
        /// Graded JSONL: {"group_rewards": [0,1,...], "qa_id": ...}.
        #[arg(long)]
        graded: Option<PathBuf>,
        /// Alternatively, score JSONL; records are grouped by qa id.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Output for the kept (mixed-correctness) samples.
        #[arg(long)]
        kept: PathBuf,
        /// Optional output for all-correct samples.
        #[arg(long)]
        easy: Option<PathBuf>,
        /// Optional output for all-wrong samples.
        #[arg(long)]
        hard: Option<PathBuf>,
    },
    /// Run the toy group-relative trainer on a bandit scenario.
    TrainToy {
        /// Scenario JSON; defaults to the built-in 4-action spatial
        /// bandit.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        group_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace JSONL output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Corpus statistics: totals, per-task counts, answer positions,
    /// numeric histograms.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        bins: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<AppConfig> {
    match path {
        None => Ok(AppConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            AppConfig::from_json(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn scene_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading scene directory {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .json scene files under {}", path.display());
    }
    Ok(files)
}

fn create_sink(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("creating output {}", path.display())
    })?))
}

fn open_source(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("opening {}", path.display())
    })?))
}

/// Stable per-(scene, task, attempt) seed derivation.
fn attempt_seed(base: u64, scene_id: &str, task: TaskType, attempt: u64) -> u64 {
    // mix the scene and task into the label so streams never collide
    let label = format!("{scene_id}/{}", task.slug());
    spaqa_core::seed::derive(base, &label, attempt)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen { scenes, out, seed, config } => {
            let cfg = load_config(&config)?;
            let generator = QaGenerator::new(cfg.generator.clone());
            let per_task = cfg.pairs_per_task();
            let max_attempts = cfg.max_attempts_per_task();

            let mut pairs = Vec::new();
            let mut failures = 0usize;
            let mut seen = std::collections::BTreeSet::new();
            let files = scene_files(&scenes)?;
            for file in &files {
                let text = std::fs::read_to_string(file)
                    .with_context(|| format!("reading scene {}", file.display()))?;
                let scene = parse_scene(&text)
                    .with_context(|| format!("parsing scene {}", file.display()))?;
                for task in TaskType::spatial() {
                    let mut kept = 0usize;
                    for attempt in 0..max_attempts as u64 {
                        if kept == per_task {
                            break;
                        }
                        match generator.generate(
                            &scene,
                            task,
                            attempt_seed(seed, &scene.scene_id, task, attempt),
                        ) {
                            Ok(pair) => {
                                // different attempt seeds can reproduce the
                                // same question; keep distinct content only
                                let key = serde_json::to_string(&(
                                    &pair.scene_id,
                                    pair.task,
                                    &pair.question,
                                    &pair.options,
                                    pair.answer_choice,
                                    &pair.answer_value,
                                ))
                                .expect("key serializes");
                                if seen.insert(key) {
                                    pairs.push(pair);
                                    kept += 1;
                                }
                            }
                            Err(_) => failures += 1,
                        }
                    }
                }
            }
            let written = export_jsonl(&pairs, create_sink(&out)?)?;
            eprintln!(
                "generated {written} pairs from {} scenes ({failures} failed attempts)",
                files.len()
            );
            Ok(())
        }

        Command::Filter { input, out, seed, config } => {
            let mut cfg = load_config(&config)?.filter;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let imported = import_jsonl(open_source(&input)?)?;
            for d in &imported.diagnostics {
                eprintln!("skipping {}", d);
            }
            let outcome = apply_filters(imported.pairs, &cfg);
            for d in &outcome.diagnostics {
                eprintln!("{d}");
            }
            let written = export_jsonl(&outcome.pairs, create_sink(&out)?)?;
            eprintln!("kept {written} pairs");
            Ok(())
        }

        Command::Score { qa, responses, out, config } => {
            let cfg = load_config(&config)?.reward;
            cfg.validate().map_err(anyhow::Error::msg)?;
            let imported = import_jsonl(open_source(&qa)?)?;
            for d in &imported.diagnostics {
                eprintln!("skipping {}", d);
            }
            let by_id: BTreeMap<&str, &spaqa_core::qa::QAPair> = imported
                .pairs
                .iter()
                .map(|p| (p.id.as_str(), p))
                .collect();

            let mut sink = create_sink(&out)?;
            let mut written = 0usize;
            let mut unmatched = 0usize;
            for (idx, line) in open_source(&responses)?.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: ResponseRecord = serde_json::from_str(&line)
                    .with_context(|| format!("responses line {}", idx + 1))?;
                let Some(pair) = by_id.get(record.qa_id.as_str()) else {
                    eprintln!("line {}: unmatched qa_id {}", idx + 1, record.qa_id);
                    unmatched += 1;
                    continue;
                };
                let resp = parse_response_sized(&record.response_text, cfg.map_size);
                let b = score_response(&resp, pair, &cfg);
                let score = ScoreRecord {
                    diagnostics: b.diagnostics,
                    id: record.qa_id,
                    r_format: b.r_format,
                    r_length: b.r_length,
                    r_map: b.r_map,
                    r_task: b.r_task,
                    total: b.total,
                };
                serde_json::to_writer(&mut sink, &score)?;
                sink.write_all(b"\n")?;
                written += 1;
            }
            sink.flush()?;
            eprintln!("scored {written} responses ({unmatched} unmatched)");
            Ok(())
        }

        Command::Sample { graded, scores, kept, easy, hard } => {
            let samples: Vec<GradedSample> = if let Some(path) = graded {
                let mut out = Vec::new();
                for (idx, line) in open_source(&path)?.lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let sample: GradedSample = serde_json::from_str(&line)
                        .with_context(|| format!("graded line {}", idx + 1))?;
                    sample.validate().map_err(anyhow::Error::msg)?;
                    out.push(sample);
                }
                out
            } else {
                let path = scores.expect("clap guarantees one input");
                let mut records = Vec::new();
                for (idx, line) in open_source(&path)?.lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    records.push(
                        serde_json::from_str::<ScoreRecord>(&line)
                            .with_context(|| format!("scores line {}", idx + 1))?,
                    );
                }
                grade_from_scores(&records)
            };

            let total = samples.len();
            let partition = difficulty_sample(samples);
            write_graded(&kept, &partition.kept)?;
            if let Some(path) = easy {
                write_graded(&path, &partition.dropped_easy)?;
            }
            if let Some(path) = hard {
                write_graded(&path, &partition.dropped_hard)?;
            }
            eprintln!(
                "kept {} of {total} (dropped {} all-correct, {} all-wrong)",
                partition.kept.len(),
                partition.dropped_easy.len(),
                partition.dropped_hard.len()
            );
            Ok(())
        }

        Command::TrainToy { scenario, steps, group_size, seed, out } => {
            let scenario = match scenario {
                None => ToyScenario::spatial_bandit(),
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading scenario {}", path.display()))?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("parsing scenario {}", path.display()))?
                }
            };
            let trainer = ToyTrainer::new(scenario)?;
            let trace = trainer.run(steps, group_size, seed)?;
            let mut sink = create_sink(&out)?;
            for step in &trace {
                serde_json::to_writer(&mut sink, step)?;
                sink.write_all(b"\n")?;
            }
            sink.flush()?;
            if let Some(last) = trace.last() {
                eprintln!(
                    "{} steps; final best-action probability {:.4}, expected reward {:.4}",
                    trace.len(),
                    last.best_action_prob,
                    last.expected_reward
                );
            }
            Ok(())
        }

        Command::Stats { input, out, bins } => {
            let imported = import_jsonl(open_source(&input)?)?;
            for d in &imported.diagnostics {
                eprintln!("skipping {}", d);
            }
            let stats = corpus_stats(&imported.pairs, bins);
            let rendered = serde_json::to_string_pretty(&stats)?;
            match out {
                Some(path) => {
                    let mut sink = create_sink(&path)?;
                    sink.write_all(rendered.as_bytes())?;
                    sink.write_all(b"\n")?;
                    sink.flush()?;
                }
                None => println!("{rendered}"),
            }
            Ok(())
        }
    }
}

fn write_graded(path: &Path, samples: &[GradedSample]) -> Result<()> {
    let mut sink = create_sink(path)?;
    for sample in samples {
        serde_json::to_writer(&mut sink, sample)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
