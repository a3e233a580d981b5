//! Indoor-scene metadata schema and ground-truth cognitive grid maps.
//!
//! A scene document is a single JSON object; field names are normative
//! and unknown fields are rejected. See the repository README for the
//! schema reference. All geometry is metric: axis-aligned boxes with
//! full side lengths, a configurable up axis (default `y`), and floor
//! points sampled in the ground plane.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::grid_index;

/// Default slack (meters) when checking surface points against their box.
pub const DEFAULT_SURFACE_SLACK_M: f64 = 0.05;

/// Default cognitive-map resolution.
pub const DEFAULT_MAP_SIZE: usize = 10;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation: {message}")]
    Schema { message: String },
    #[error("invalid scene: {}", format_diagnostics(.diagnostics))]
    Invalid { diagnostics: Vec<Diagnostic> },
    #[error("degenerate scene bounds: all ground-plane coordinates coincide on the {axis} axis")]
    DegenerateBounds { axis: char },
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(Diagnostic::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One violated invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Short identifier of the violated invariant, e.g. `extent_positive`.
    pub invariant: String,
    /// The entity at fault (scene id, object instance id, point index).
    pub entity: String,
    pub detail: String,
}

impl Diagnostic {
    fn new(invariant: &str, entity: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            invariant: invariant.to_string(),
            entity: entity.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.invariant, self.entity, self.detail)
    }
}

/// Which world axis points up; the other two form the 2D ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpAxis {
    /// Ground plane is (x, z).
    #[default]
    Y,
    /// Ground plane is (x, y).
    Z,
}

impl UpAxis {
    /// Projects a 3D point onto the ground plane.
    pub fn project(self, p: [f64; 3]) -> [f64; 2] {
        match self {
            UpAxis::Y => [p[0], p[2]],
            UpAxis::Z => [p[0], p[1]],
        }
    }
}

/// Axis-aligned box: `center` plus full side lengths `extents`, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub center: [f64; 3],
    pub extents: [f64; 3],
}

impl BoundingBox {
    pub fn new(center: [f64; 3], extents: [f64; 3]) -> Self {
        Self { center, extents }
    }

    pub fn min_corner(&self) -> [f64; 3] {
        [
            self.center[0] - self.extents[0] / 2.0,
            self.center[1] - self.extents[1] / 2.0,
            self.center[2] - self.extents[2] / 2.0,
        ]
    }

    pub fn max_corner(&self) -> [f64; 3] {
        [
            self.center[0] + self.extents[0] / 2.0,
            self.center[1] + self.extents[1] / 2.0,
            self.center[2] + self.extents[2] / 2.0,
        ]
    }

    /// True if `p` lies inside the box expanded by `slack` on every side.
    pub fn contains_with_slack(&self, p: [f64; 3], slack: f64) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        (0..3).all(|i| p[i] >= lo[i] - slack && p[i] <= hi[i] + slack)
    }
}

/// One object in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectInstance {
    pub bbox: BoundingBox,
    /// Category label, e.g. `chair`.
    pub category: String,
    /// Frame index at which the object first appears.
    pub first_frame: u64,
    /// Unique identifier within the scene.
    pub instance_id: String,
    /// Optional points sampled from the object surface, meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_points: Option<Vec<[f64; 3]>>,
}

/// One indoor scene in the neutral metadata format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMeta {
    /// Room footprint samples in the ground plane, meters.
    pub floor_points: Vec<[f64; 2]>,
    pub fps: f64,
    pub frame_count: u64,
    pub objects: Vec<ObjectInstance>,
    pub scene_id: String,
    #[serde(default)]
    pub up_axis: UpAxis,
}

impl SceneMeta {
    /// Ground-plane coordinates of an object's box center.
    pub fn ground_center(&self, obj: &ObjectInstance) -> [f64; 2] {
        self.up_axis.project(obj.bbox.center)
    }

    /// Categories with exactly one instance, sorted by name.
    ///
    /// Only these can be referenced unambiguously in question text;
    /// counting questions use all instances instead.
    pub fn unique_categories(&self) -> Vec<(&str, &ObjectInstance)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for obj in &self.objects {
            *counts.entry(obj.category.as_str()).or_default() += 1;
        }
        self.objects
            .iter()
            .filter(|o| counts[o.category.as_str()] == 1)
            .map(|o| (o.category.as_str(), o))
            .collect::<BTreeMap<_, _>>()
            .into_iter()
            .collect()
    }

    /// Instance counts per category, sorted by name.
    pub fn category_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for obj in &self.objects {
            *counts.entry(obj.category.as_str()).or_default() += 1;
        }
        counts
    }
}

/// M×M cognitive map: category label to occupied integer cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMap {
    /// Occupied cells (x, y) per category; one entry per object instance.
    pub cells: BTreeMap<String, Vec<(u32, u32)>>,
    /// Grid resolution M; cells range over `[0, M-1]`.
    pub size: usize,
}

impl GridMap {
    /// Validates the grid-map invariants, returning the map on success.
    pub fn new(size: usize, cells: BTreeMap<String, Vec<(u32, u32)>>) -> Result<Self, String> {
        let map = Self { cells, size };
        map.check()?;
        Ok(map)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.size == 0 {
            return Err("grid size must be positive".into());
        }
        if self.cells.is_empty() {
            return Err("empty map".into());
        }
        for (category, cells) in &self.cells {
            if category.is_empty() {
                return Err("empty category key".into());
            }
            if cells.is_empty() {
                return Err(format!("category {category:?} has no cells"));
            }
            for &(x, y) in cells {
                if x as usize >= self.size || y as usize >= self.size {
                    return Err(format!(
                        "cell [{x}, {y}] of category {category:?} outside {0}x{0} grid",
                        self.size
                    ));
                }
            }
        }
        Ok(())
    }

    /// Total number of cells across all categories.
    pub fn total_cells(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    /// Mean cell coordinate per category.
    pub fn centroid(&self, category: &str) -> Option<(f64, f64)> {
        let cells = self.cells.get(category)?;
        let n = cells.len() as f64;
        let (sx, sy) = cells
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x as f64, sy + y as f64));
        Some((sx / n, sy / n))
    }
}

/// Parses and validates one scene document.
pub fn parse_scene(serialized: &str) -> Result<SceneMeta, SceneError> {
    let scene: SceneMeta = serde_json::from_str(serialized).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            SceneError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        } else {
            SceneError::Schema {
                message: e.to_string(),
            }
        }
    })?;
    let diagnostics = validate_scene(&scene);
    if diagnostics.is_empty() {
        Ok(scene)
    } else {
        Err(SceneError::Invalid { diagnostics })
    }
}

/// Serializes a scene back to its document form.
pub fn serialize_scene(scene: &SceneMeta) -> String {
    serde_json::to_string_pretty(scene).expect("scene serialization cannot fail")
}

/// Checks every scene invariant; an empty result means the scene is valid.
pub fn validate_scene(scene: &SceneMeta) -> Vec<Diagnostic> {
    validate_scene_with_slack(scene, DEFAULT_SURFACE_SLACK_M)
}

pub fn validate_scene_with_slack(scene: &SceneMeta, surface_slack_m: f64) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let sid = scene.scene_id.as_str();
    if sid.is_empty() {
        diags.push(Diagnostic::new("scene_id_nonempty", "<scene>", "scene_id is empty"));
    }
    if scene.frame_count == 0 {
        diags.push(Diagnostic::new("frame_count_positive", sid, "frame_count is 0"));
    }
    if !(scene.fps > 0.0 && scene.fps.is_finite()) {
        diags.push(Diagnostic::new(
            "fps_positive",
            sid,
            format!("fps = {}", scene.fps),
        ));
    }
    if scene.objects.is_empty() {
        diags.push(Diagnostic::new("objects_nonempty", sid, "scene has no objects"));
    }
    if scene.floor_points.len() < 3 {
        diags.push(Diagnostic::new(
            "floor_points_min",
            sid,
            format!("need at least 3 floor points, got {}", scene.floor_points.len()),
        ));
    }
    for (i, p) in scene.floor_points.iter().enumerate() {
        if !p.iter().all(|c| c.is_finite()) {
            diags.push(Diagnostic::new(
                "floor_point_finite",
                format!("floor_points[{i}]"),
                format!("{p:?}"),
            ));
        }
    }

    let mut seen_ids = BTreeSet::new();
    for obj in &scene.objects {
        let id = obj.instance_id.as_str();
        if !seen_ids.insert(id) {
            diags.push(Diagnostic::new(
                "instance_id_unique",
                id,
                "duplicate instance_id",
            ));
        }
        if obj.category.is_empty() {
            diags.push(Diagnostic::new("category_nonempty", id, "empty category"));
        }
        if !obj.bbox.center.iter().all(|c| c.is_finite()) {
            diags.push(Diagnostic::new(
                "center_finite",
                id,
                format!("center = {:?}", obj.bbox.center),
            ));
        }
        for (axis, &e) in ["x", "y", "z"].iter().zip(&obj.bbox.extents) {
            if !(e > 0.0 && e.is_finite()) {
                diags.push(Diagnostic::new(
                    "extent_positive",
                    id,
                    format!("extent on {axis} axis = {e}"),
                ));
            }
        }
        if obj.first_frame >= scene.frame_count {
            diags.push(Diagnostic::new(
                "first_frame_in_range",
                id,
                format!(
                    "first_frame {} >= frame_count {}",
                    obj.first_frame, scene.frame_count
                ),
            ));
        }
        if let Some(points) = &obj.surface_points {
            for (i, &p) in points.iter().enumerate() {
                if !p.iter().all(|c| c.is_finite()) {
                    diags.push(Diagnostic::new(
                        "surface_point_finite",
                        id,
                        format!("surface_points[{i}] = {p:?}"),
                    ));
                } else if !obj.bbox.contains_with_slack(p, surface_slack_m) {
                    diags.push(Diagnostic::new(
                        "surface_point_in_bbox",
                        id,
                        format!(
                            "surface_points[{i}] = {p:?} outside bbox expanded by {surface_slack_m} m"
                        ),
                    ));
                }
            }
        }
    }
    diags
}

/// Builds the ground-truth M×M map for a scene.
///
/// Object centers are projected onto the ground plane and affinely
/// mapped from the scene's bounding rectangle (object centers union
/// floor points, so the grid covers the whole room) to `[0, M-1]^2`,
/// flooring to integer cells with the exact upper boundary clamped
/// down. Each instance contributes one cell under its category key.
pub fn build_grid_map(scene: &SceneMeta, m: usize) -> Result<GridMap, SceneError> {
    if m < 2 {
        return Err(SceneError::GridTooSmall(m));
    }
    let mut ground: Vec<[f64; 2]> = scene
        .objects
        .iter()
        .map(|o| scene.ground_center(o))
        .collect();
    ground.extend(scene.floor_points.iter().copied());

    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &ground {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    if !(max_x > min_x) {
        return Err(SceneError::DegenerateBounds { axis: 'x' });
    }
    if !(max_y > min_y) {
        return Err(SceneError::DegenerateBounds { axis: 'y' });
    }

    let mut cells: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    for obj in &scene.objects {
        let c = scene.ground_center(obj);
        let gx = grid_index(c[0], min_x, max_x, m) as u32;
        let gy = grid_index(c[1], min_y, max_y, m) as u32;
        cells.entry(obj.category.clone()).or_default().push((gx, gy));
    }
    Ok(GridMap { cells, size: m })
}
