//! Spatial QA generation: task types, the QA record, the six
//! generators, and corpus filtering.
//!
//! Generators are deterministic per `(scene, seed)`. Categories are
//! referenced in question text only when they are unique within the
//! scene (counting uses all instances). Preconditions that fail —
//! too few unique categories, answer ties, collinear triples — are
//! reported as errors so a pipeline can resample with another seed.

mod filters;
mod templates;

pub use filters::{apply_filters, FilterConfig, FilterOutcome, POSITION_BALANCE_TOL};
pub use templates::{render_question, TemplateTable};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, longest_dimension, min_box_distance, relative_direction, room_area_alpha_shape,
    sampled_min_distance, GeometryError,
};
use crate::scene::{GridMap, ObjectInstance, SceneMeta, SceneError, DEFAULT_MAP_SIZE};
use crate::util::{derive_seed, round_to};

/// Current QA record schema version, written into every JSONL record.
pub const QA_SCHEMA_VERSION: u32 = 1;

/// Minimum separation between best and second-best candidate distances.
pub const DISTANCE_TIE_TOL_M: f64 = 0.01;

#[derive(Debug, Error)]
pub enum QaError {
    #[error("scene has {found} unique categories, need at least {needed}")]
    TooFewUniqueCategories { needed: usize, found: usize },
    #[error("tie: best and second-best candidate distances within {DISTANCE_TIE_TOL_M} m")]
    AnswerTie,
    #[error("sampled categories do not have pairwise-distinct first frames")]
    EqualFirstFrames,
    #[error("no non-collinear triple found after {attempts} attempts")]
    CollinearTriple { attempts: usize },
    #[error("no object at least {min_cm} cm across")]
    NoEligibleObject { min_cm: f64 },
    #[error("scene has no objects")]
    EmptyScene,
    #[error("unknown template id: {0}")]
    UnknownTemplate(String),
    #[error("missing template slot: {0}")]
    MissingSlot(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// All QA answer categories. The six spatial tasks are generated from
/// scenes; OCR, free-form, regression, and general multi-choice exist
/// for scoring imported general-understanding data.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    RelativeDistance,
    RelativeDirection,
    AppearanceOrder,
    ObjectSize,
    RoomSize,
    AbsoluteDistance,
    Counting,
    Ocr,
    FreeForm,
    Regression,
    GeneralMultiChoice,
}

/// Shape of a task's ground-truth answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QaFamily {
    MultiChoice,
    Numerical,
    Text,
}

impl TaskType {
    pub fn family(self) -> QaFamily {
        match self {
            TaskType::RelativeDistance
            | TaskType::RelativeDirection
            | TaskType::AppearanceOrder
            | TaskType::GeneralMultiChoice => QaFamily::MultiChoice,
            TaskType::ObjectSize
            | TaskType::RoomSize
            | TaskType::AbsoluteDistance
            | TaskType::Counting
            | TaskType::Regression => QaFamily::Numerical,
            TaskType::Ocr | TaskType::FreeForm => QaFamily::Text,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            TaskType::RelativeDistance => "relative_distance",
            TaskType::RelativeDirection => "relative_direction",
            TaskType::AppearanceOrder => "appearance_order",
            TaskType::ObjectSize => "object_size",
            TaskType::RoomSize => "room_size",
            TaskType::AbsoluteDistance => "absolute_distance",
            TaskType::Counting => "counting",
            TaskType::Ocr => "ocr",
            TaskType::FreeForm => "free_form",
            TaskType::Regression => "regression",
            TaskType::GeneralMultiChoice => "general_multi_choice",
        }
    }

    /// The six scene-generated spatial tasks, in pipeline order.
    pub fn spatial() -> [TaskType; 7] {
        [
            TaskType::RelativeDistance,
            TaskType::RelativeDirection,
            TaskType::AppearanceOrder,
            TaskType::ObjectSize,
            TaskType::RoomSize,
            TaskType::AbsoluteDistance,
            TaskType::Counting,
        ]
    }
}

/// Unit tag of a numeric ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "cm")]
    Centimeters,
    #[serde(rename = "m2")]
    SquareMeters,
    #[serde(rename = "m")]
    Meters,
    #[serde(rename = "count")]
    Count,
    /// Unitless, for imported regression data.
    #[serde(rename = "raw")]
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerValue {
    pub unit: Unit,
    pub value: f64,
}

impl AnswerValue {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { unit, value }
    }
}

/// One question with its verifiable ground truth.
///
/// Exactly one of `answer_choice` / `answer_value` / `answer_text` is
/// present, matching the task family. Fields are declared in the
/// serialized (alphabetical) order so JSONL output is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QAPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_choice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_value: Option<AnswerValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_map: Option<GridMap>,
    pub id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    pub question: String,
    pub scene_id: String,
    pub schema_version: u32,
    pub task: TaskType,
}

impl QAPair {
    /// Checks every QA-record invariant; empty result means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.id.is_empty() {
            errs.push("id is empty".to_string());
        }
        if self.schema_version != QA_SCHEMA_VERSION {
            errs.push(format!(
                "unsupported schema_version {} (expected {QA_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let present = [
            self.answer_choice.is_some(),
            self.answer_value.is_some(),
            self.answer_text.is_some(),
        ]
        .iter()
        .filter(|p| **p)
        .count();
        if present != 1 {
            errs.push(format!(
                "exactly one of answer_choice/answer_value/answer_text must be present, got {present}"
            ));
        }
        match self.task.family() {
            QaFamily::MultiChoice => {
                if self.answer_choice.is_none() {
                    errs.push(format!("{} requires answer_choice", self.task.slug()));
                }
                match &self.options {
                    None => errs.push("multi-choice pair has no options".to_string()),
                    Some(options) => {
                        if options.len() < 2 || options.len() > 5 {
                            errs.push(format!("need 2-5 options, got {}", options.len()));
                        }
                        for (i, a) in options.iter().enumerate() {
                            if options[..i].contains(a) {
                                errs.push(format!("duplicate option text {a:?}"));
                            }
                        }
                        if let Some(c) = self.answer_choice {
                            if c >= options.len() {
                                errs.push(format!(
                                    "answer_choice {c} out of range for {} options",
                                    options.len()
                                ));
                            }
                        }
                    }
                }
            }
            QaFamily::Numerical => {
                if self.answer_value.is_none() {
                    errs.push(format!("{} requires answer_value", self.task.slug()));
                }
                if self.options.is_some() {
                    errs.push("numeric pair must not carry options".to_string());
                }
            }
            QaFamily::Text => {
                if self.answer_text.is_none() {
                    errs.push(format!("{} requires answer_text", self.task.slug()));
                }
                if self.options.is_some() {
                    errs.push("text pair must not carry options".to_string());
                }
            }
        }
        if let Some(av) = &self.answer_value {
            if !av.value.is_finite() {
                errs.push(format!("answer_value {} is not finite", av.value));
            }
            match av.unit {
                Unit::Centimeters | Unit::SquareMeters | Unit::Meters => {
                    if !(av.value > 0.0) {
                        errs.push(format!(
                            "answer_value {} must be positive for its unit",
                            av.value
                        ));
                    }
                }
                Unit::Count => {
                    if !(av.value > 0.0 && av.value.fract() == 0.0) {
                        errs.push(format!("count answer {} must be a positive integer", av.value));
                    }
                }
                Unit::Raw => {}
            }
        }
        if let Some(map) = &self.gt_map {
            if let Err(e) = map.check() {
                errs.push(format!("invalid gt_map: {e}"));
            }
        }
        errs
    }
}

/// Knobs for the generators; defaults follow the documented conventions
/// (10x10 map, 512 samples per object, 15 cm minimum object size).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub map_size: usize,
    pub samples_per_object: usize,
    pub min_object_size_cm: f64,
    pub direction_resample_attempts: usize,
    /// Alpha-shape parameter override; `None` selects twice the median
    /// nearest-neighbor spacing of the floor points.
    pub alpha: Option<f64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            map_size: DEFAULT_MAP_SIZE,
            samples_per_object: geometry::DEFAULT_SAMPLES_PER_OBJECT,
            min_object_size_cm: 15.0,
            direction_resample_attempts: 8,
            alpha: None,
        }
    }
}

/// The six spatial QA generators over one scene.
#[derive(Debug, Clone, Default)]
pub struct QaGenerator {
    pub cfg: GenConfig,
}

impl QaGenerator {
    pub fn new(cfg: GenConfig) -> Self {
        Self { cfg }
    }

    fn base_pair(
        &self,
        scene: &SceneMeta,
        task: TaskType,
        seed: u64,
        question: String,
        meta: BTreeMap<String, String>,
    ) -> Result<QAPair, QaError> {
        Ok(QAPair {
            answer_choice: None,
            answer_text: None,
            answer_value: None,
            gt_map: Some(crate::scene::build_grid_map(scene, self.cfg.map_size)?),
            id: format!("{}:{}:{seed:016x}", scene.scene_id, task.slug()),
            meta,
            options: None,
            question,
            scene_id: scene.scene_id.clone(),
            schema_version: QA_SCHEMA_VERSION,
            task,
        })
    }

    fn meta(
        seed: u64,
        template_id: &str,
        objects: &[&str],
        extra: &[(&str, String)],
    ) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("seed".to_string(), seed.to_string());
        m.insert("template_id".to_string(), template_id.to_string());
        m.insert("objects".to_string(), objects.join(";"));
        for (k, v) in extra {
            m.insert((*k).to_string(), v.clone());
        }
        m
    }

    /// Multi-choice: which of four candidates is closest (minimum box
    /// distance) to the target.
    pub fn gen_relative_distance(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        let uniq = scene.unique_categories();
        if uniq.len() < 5 {
            return Err(QaError::TooFewUniqueCategories {
                needed: 5,
                found: uniq.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks = rand::seq::index::sample(&mut rng, uniq.len(), 5);
        let (target_cat, target) = uniq[picks.index(0)];
        let candidates: Vec<(&str, &ObjectInstance)> =
            (1..5).map(|i| uniq[picks.index(i)]).collect();

        let distances: Vec<f64> = candidates
            .iter()
            .map(|(_, obj)| min_box_distance(&target.bbox, &obj.bbox))
            .collect();
        let best = (0..4)
            .min_by(|&a, &b| distances[a].total_cmp(&distances[b]))
            .expect("four candidates");
        let mut others: Vec<f64> = distances
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, d)| *d)
            .collect();
        others.sort_by(f64::total_cmp);
        if others[0] - distances[best] < DISTANCE_TIE_TOL_M {
            return Err(QaError::AnswerTie);
        }

        let template_id = "relative_distance.v1";
        let mut slots = BTreeMap::new();
        slots.insert("target".to_string(), target_cat.to_string());
        for (i, (cat, _)) in candidates.iter().enumerate() {
            slots.insert(format!("c{}", i + 1), cat.to_string());
        }
        let question = render_question(template_id, &slots)?;

        let names: Vec<&str> = std::iter::once(target_cat)
            .chain(candidates.iter().map(|(c, _)| *c))
            .collect();
        let meta = Self::meta(
            seed,
            template_id,
            &names,
            &[
                ("target", target_cat.to_string()),
                (
                    "candidates",
                    candidates.iter().map(|(c, _)| *c).collect::<Vec<_>>().join(";"),
                ),
            ],
        );
        let mut pair = self.base_pair(scene, TaskType::RelativeDistance, seed, question, meta)?;
        pair.options = Some(candidates.iter().map(|(c, _)| c.to_string()).collect());
        pair.answer_choice = Some(best);
        Ok(pair)
    }

    /// Multi-choice: standing at one object facing another, is the third
    /// to the left or to the right.
    pub fn gen_relative_direction(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        let uniq = scene.unique_categories();
        if uniq.len() < 3 {
            return Err(QaError::TooFewUniqueCategories {
                needed: 3,
                found: uniq.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attempts = self.cfg.direction_resample_attempts.max(1);
        for _ in 0..attempts {
            let picks = rand::seq::index::sample(&mut rng, uniq.len(), 3);
            let (standing_cat, standing) = uniq[picks.index(0)];
            let (facing_cat, facing) = uniq[picks.index(1)];
            let (query_cat, query) = uniq[picks.index(2)];
            let dir = match relative_direction(
                standing.bbox.center,
                facing.bbox.center,
                query.bbox.center,
                scene.up_axis,
            ) {
                Ok(d) => d,
                Err(GeometryError::AmbiguousDirection) => continue,
                Err(e) => return Err(e.into()),
            };

            let template_id = "relative_direction.v1";
            let mut slots = BTreeMap::new();
            slots.insert("standing".to_string(), standing_cat.to_string());
            slots.insert("facing".to_string(), facing_cat.to_string());
            slots.insert("query".to_string(), query_cat.to_string());
            let question = render_question(template_id, &slots)?;

            let mut options = vec!["Left".to_string(), "Right".to_string()];
            if rng.random::<bool>() {
                options.swap(0, 1);
            }
            let answer = options
                .iter()
                .position(|o| o == dir.label())
                .expect("direction label present");

            let meta = Self::meta(
                seed,
                template_id,
                &[standing_cat, facing_cat, query_cat],
                &[
                    ("standing", standing_cat.to_string()),
                    ("facing", facing_cat.to_string()),
                    ("query", query_cat.to_string()),
                ],
            );
            let mut pair =
                self.base_pair(scene, TaskType::RelativeDirection, seed, question, meta)?;
            pair.options = Some(options);
            pair.answer_choice = Some(answer);
            return Ok(pair);
        }
        Err(QaError::CollinearTriple { attempts })
    }

    /// Multi-choice: order four categories by first appearance.
    pub fn gen_appearance_order(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        let uniq = scene.unique_categories();
        if uniq.len() < 4 {
            return Err(QaError::TooFewUniqueCategories {
                needed: 4,
                found: uniq.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks = rand::seq::index::sample(&mut rng, uniq.len(), 4);
        let mut sampled: Vec<(&str, &ObjectInstance)> =
            (0..4).map(|i| uniq[picks.index(i)]).collect();
        let mut frames: Vec<u64> = sampled.iter().map(|(_, o)| o.first_frame).collect();
        frames.sort_unstable();
        frames.dedup();
        if frames.len() != 4 {
            return Err(QaError::EqualFirstFrames);
        }

        let template_id = "appearance_order.v1";
        let mut slots = BTreeMap::new();
        for (i, (cat, _)) in sampled.iter().enumerate() {
            slots.insert(format!("c{}", i + 1), cat.to_string());
        }
        let question = render_question(template_id, &slots)?;
        let names: Vec<&str> = sampled.iter().map(|(c, _)| *c).collect();

        sampled.sort_by_key(|(_, o)| o.first_frame);
        let correct = sampled
            .iter()
            .map(|(c, _)| c.to_string())
            .collect::<Vec<_>>()
            .join(", ");

        // three distractor permutations, pairwise distinct and != truth
        let mut options = vec![correct.clone()];
        let mut base: Vec<&str> = sampled.iter().map(|(c, _)| *c).collect();
        while options.len() < 4 {
            base.shuffle(&mut rng);
            let text = base.join(", ");
            if !options.contains(&text) {
                options.push(text);
            }
        }
        options.shuffle(&mut rng);
        let answer = options.iter().position(|o| *o == correct).expect("present");

        let meta = Self::meta(
            seed,
            template_id,
            &names,
            &[("categories", names.join(";"))],
        );
        let mut pair = self.base_pair(scene, TaskType::AppearanceOrder, seed, question, meta)?;
        pair.options = Some(options);
        pair.answer_choice = Some(answer);
        Ok(pair)
    }

    /// Numeric: longest dimension of a unique object, centimeters.
    pub fn gen_object_size(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        let eligible: Vec<(&str, &ObjectInstance)> = scene
            .unique_categories()
            .into_iter()
            .filter(|(_, o)| longest_dimension(o) >= self.cfg.min_object_size_cm)
            .collect();
        if eligible.is_empty() {
            return Err(QaError::NoEligibleObject {
                min_cm: self.cfg.min_object_size_cm,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cat, obj) = eligible[rng.random_range(0..eligible.len())];
        let size_cm = round_to(longest_dimension(obj), 0.1);

        let template_id = "object_size.v1";
        let mut slots = BTreeMap::new();
        slots.insert("object".to_string(), cat.to_string());
        let question = render_question(template_id, &slots)?;
        let meta = Self::meta(seed, template_id, &[cat], &[("object", cat.to_string())]);
        let mut pair = self.base_pair(scene, TaskType::ObjectSize, seed, question, meta)?;
        pair.answer_value = Some(AnswerValue::new(size_cm, Unit::Centimeters));
        Ok(pair)
    }

    /// Numeric: alpha-shape area of the floor points, square meters.
    pub fn gen_room_size(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        let alpha = match self.cfg.alpha {
            Some(a) => a,
            None => geometry::default_alpha(&scene.floor_points)?,
        };
        let area = room_area_alpha_shape(&scene.floor_points, alpha)?;
        // floor at one rounding step so the stored answer stays positive
        let area = round_to(area, 0.1).max(0.1);

        let template_id = "room_size.v1";
        let question = render_question(template_id, &BTreeMap::new())?;
        let meta = Self::meta(seed, template_id, &[], &[("alpha", format!("{alpha}"))]);
        let mut pair = self.base_pair(scene, TaskType::RoomSize, seed, question, meta)?;
        pair.answer_value = Some(AnswerValue::new(area, Unit::SquareMeters));
        Ok(pair)
    }

    /// Numeric: sampled minimum distance between two unique objects,
    /// meters.
    pub fn gen_absolute_distance(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        let uniq = scene.unique_categories();
        if uniq.len() < 2 {
            return Err(QaError::TooFewUniqueCategories {
                needed: 2,
                found: uniq.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks = rand::seq::index::sample(&mut rng, uniq.len(), 2);
        let (cat_a, a) = uniq[picks.index(0)];
        let (cat_b, b) = uniq[picks.index(1)];
        let d = sampled_min_distance(
            a,
            b,
            self.cfg.samples_per_object,
            derive_seed(seed, "absolute_distance", 0),
        );
        let d = round_to(d, 0.01).max(0.01);

        let template_id = "absolute_distance.v1";
        let mut slots = BTreeMap::new();
        slots.insert("a".to_string(), cat_a.to_string());
        slots.insert("b".to_string(), cat_b.to_string());
        let question = render_question(template_id, &slots)?;
        let meta = Self::meta(
            seed,
            template_id,
            &[cat_a, cat_b],
            &[("a", cat_a.to_string()), ("b", cat_b.to_string())],
        );
        let mut pair = self.base_pair(scene, TaskType::AbsoluteDistance, seed, question, meta)?;
        pair.answer_value = Some(AnswerValue::new(d, Unit::Meters));
        Ok(pair)
    }

    /// Numeric: how many instances of a category the scene contains.
    pub fn gen_counting(&self, scene: &SceneMeta, seed: u64) -> Result<QAPair, QaError> {
        if scene.objects.is_empty() {
            return Err(QaError::EmptyScene);
        }
        let counts = scene.category_counts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = rng.random_range(0..counts.len());
        let (cat, count) = counts.into_iter().nth(idx).expect("index in range");

        let template_id = "counting.v1";
        let mut slots = BTreeMap::new();
        slots.insert("category".to_string(), cat.to_string());
        let question = render_question(template_id, &slots)?;
        let meta = Self::meta(seed, template_id, &[cat], &[("category", cat.to_string())]);
        let mut pair = self.base_pair(scene, TaskType::Counting, seed, question, meta)?;
        pair.answer_value = Some(AnswerValue::new(count as f64, Unit::Count));
        Ok(pair)
    }

    /// Dispatches to the task's generator.
    pub fn generate(&self, scene: &SceneMeta, task: TaskType, seed: u64) -> Result<QAPair, QaError> {
        match task {
            TaskType::RelativeDistance => self.gen_relative_distance(scene, seed),
            TaskType::RelativeDirection => self.gen_relative_direction(scene, seed),
            TaskType::AppearanceOrder => self.gen_appearance_order(scene, seed),
            TaskType::ObjectSize => self.gen_object_size(scene, seed),
            TaskType::RoomSize => self.gen_room_size(scene, seed),
            TaskType::AbsoluteDistance => self.gen_absolute_distance(scene, seed),
            TaskType::Counting => self.gen_counting(scene, seed),
            other => Err(QaError::UnknownTemplate(format!(
                "{} is not a generated task",
                other.slug()
            ))),
        }
    }
}
