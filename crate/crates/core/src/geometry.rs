//! Geometric kernels backing QA answer computation.
//!
//! Everything here is a pure function; sampling-based routines are
//! deterministic per `(inputs, seed)`. Distances are meters, sizes are
//! centimeters, areas square meters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scene::{BoundingBox, ObjectInstance, UpAxis};
use crate::util::derive_seed;

/// Scale-free collinearity tolerance for direction tests.
pub const COLLINEAR_REL_TOL: f64 = 1e-9;

/// Default number of uniform samples per object for sampled distances.
pub const DEFAULT_SAMPLES_PER_OBJECT: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate point set: {0}")]
    DegenerateInput(String),
    #[error("empty shape: no triangle has circumradius <= alpha = {alpha}")]
    EmptyShape { alpha: f64 },
    #[error("ambiguous direction: query is collinear with the facing line")]
    AmbiguousDirection,
}

/// Binary relative direction in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Left => "Left",
            Direction::Right => "Right",
        }
    }
}

/// Euclidean distance between box centers.
pub fn center_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let mut sum = 0.0;
    for i in 0..3 {
        let d = a.center[i] - b.center[i];
        sum += d * d;
    }
    sum.sqrt()
}

/// Exact minimum distance between two axis-aligned boxes; zero when
/// they overlap. Per-axis gap `max(0, |dc| - (ea + eb) / 2)`, combined
/// Euclidean.
pub fn min_box_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let mut sum = 0.0;
    for i in 0..3 {
        let gap = (a.center[i] - b.center[i]).abs() - (a.extents[i] + b.extents[i]) / 2.0;
        if gap > 0.0 {
            sum += gap * gap;
        }
    }
    sum.sqrt()
}

/// True when the closed boxes share at least one point.
pub fn boxes_intersect(a: &BoundingBox, b: &BoundingBox) -> bool {
    (0..3).all(|i| (a.center[i] - b.center[i]).abs() <= (a.extents[i] + b.extents[i]) / 2.0)
}

fn point_distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    let mut sum = 0.0;
    for i in 0..3 {
        let d = p[i] - q[i];
        sum += d * d;
    }
    sum.sqrt()
}

fn object_samples(obj: &ObjectInstance, samples: usize, seed: u64) -> Vec<[f64; 3]> {
    if let Some(points) = &obj.surface_points {
        return points.clone();
    }
    // The sample stream is keyed by (seed, instance id) so that the same
    // object always yields the same set within one call — two references
    // to one object have distance exactly zero.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &obj.instance_id, 0));
    let lo = obj.bbox.min_corner();
    let hi = obj.bbox.max_corner();
    (0..samples)
        .map(|_| {
            let mut p = [0.0; 3];
            for i in 0..3 {
                p[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
            }
            p
        })
        .collect()
}

/// Minimum pairwise distance over points sampled uniformly within each
/// box (or the object's surface points, when present). Deterministic
/// per `(objects, samples_per_object, seed)`.
pub fn sampled_min_distance(
    a: &ObjectInstance,
    b: &ObjectInstance,
    samples_per_object: usize,
    seed: u64,
) -> f64 {
    assert!(samples_per_object >= 1);
    let pa = object_samples(a, samples_per_object, seed);
    let pb = object_samples(b, samples_per_object, seed);
    let mut best = f64::INFINITY;
    for &p in &pa {
        for &q in &pb {
            let d = point_distance(p, q);
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Longest dimension of an object in centimeters.
///
/// Surface points take precedence over the box: the maximum axis extent
/// of their bounding box is used when they are present.
pub fn longest_dimension(obj: &ObjectInstance) -> f64 {
    let meters = match &obj.surface_points {
        Some(points) if !points.is_empty() => {
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for p in points {
                for i in 0..3 {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
            (0..3).map(|i| hi[i] - lo[i]).fold(0.0, f64::max)
        }
        _ => obj.bbox.extents.iter().copied().fold(0.0, f64::max),
    };
    meters * 100.0
}

fn tri_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs() / 2.0
}

fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let la = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
    let lb = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
    let lc = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let area = tri_area(a, b, c);
    if area == 0.0 {
        f64::INFINITY
    } else {
        la * lb * lc / (4.0 * area)
    }
}

/// Area of the 2D alpha shape of a point set: Delaunay triangles whose
/// circumradius is at most `alpha`, summed.
pub fn room_area_alpha_shape(points: &[[f64; 2]], alpha: f64) -> Result<f64, GeometryError> {
    assert!(alpha > 0.0, "alpha must be positive");
    if points.len() < 3 {
        return Err(GeometryError::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let pts: Vec<delaunator::Point> = points
        .iter()
        .map(|p| delaunator::Point { x: p[0], y: p[1] })
        .collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(GeometryError::DegenerateInput(
            "points are collinear or coincident".into(),
        ));
    }
    let mut area = 0.0;
    let mut kept = 0usize;
    for t in tri.triangles.chunks_exact(3) {
        let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
        if circumradius(a, b, c) <= alpha {
            area += tri_area(a, b, c);
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(GeometryError::EmptyShape { alpha });
    }
    Ok(area)
}

/// Scale-adaptive default alpha: twice the median nearest-neighbor
/// spacing of the point set.
pub fn default_alpha(points: &[[f64; 2]]) -> Result<f64, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::DegenerateInput(
            "need at least 2 points for spacing estimate".into(),
        ));
    }
    let mut nearest: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nearest.sort_by(|a, b| a.total_cmp(b));
    let median = nearest[nearest.len() / 2];
    if !(median > 0.0 && median.is_finite()) {
        return Err(GeometryError::DegenerateInput(
            "coincident points give zero nearest-neighbor spacing".into(),
        ));
    }
    Ok(2.0 * median)
}

/// Decides whether `query` lies left or right of the ray from
/// `standing_at` through `facing`, after projecting all three onto the
/// ground plane. Positive 2D cross product is Left, negative is Right;
/// magnitudes below `COLLINEAR_REL_TOL * |u||v|` are ambiguous.
pub fn relative_direction(
    standing_at: [f64; 3],
    facing: [f64; 3],
    query: [f64; 3],
    plane: UpAxis,
) -> Result<Direction, GeometryError> {
    let s = plane.project(standing_at);
    let f = plane.project(facing);
    let q = plane.project(query);
    let u = [f[0] - s[0], f[1] - s[1]];
    let v = [q[0] - s[0], q[1] - s[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let norm = (u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt();
    if cross.abs() < COLLINEAR_REL_TOL * norm || norm == 0.0 {
        return Err(GeometryError::AmbiguousDirection);
    }
    Ok(if cross > 0.0 {
        Direction::Left
    } else {
        Direction::Right
    })
}
