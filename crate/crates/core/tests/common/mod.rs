//! Shared helpers for the integration suites: deterministic synthetic
//! scenes rich enough for every generator.
//!
//! Compiled into each test target; not every target uses every helper.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spaqa_core::scene::{BoundingBox, ObjectInstance, SceneMeta, UpAxis};

const CATEGORY_POOL: [&str; 14] = [
    "bed", "sofa", "table", "lamp", "stove", "sink", "fridge", "desk", "shelf", "mirror",
    "plant", "television", "rug", "cabinet",
];

/// Deterministic synthetic scene: 8 unique-category objects plus a few
/// duplicated clutter instances, spread over a rectangular room.
pub fn synth_scene(seed: u64) -> SceneMeta {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_w = rng.random_range(3.0..7.0);
    let half_d = rng.random_range(3.0..7.0);

    let uniques = 8;
    let clutter = rng.random_range(0..4usize);
    let mut objects = Vec::new();
    let mut frame = 0u64;
    for i in 0..uniques + clutter {
        let category = if i < uniques {
            CATEGORY_POOL[i].to_string()
        } else {
            "chair".to_string()
        };
        frame += 3 + rng.random_range(0..40u64);
        objects.push(ObjectInstance {
            bbox: BoundingBox::new(
                [
                    rng.random_range(-half_w * 0.9..half_w * 0.9),
                    rng.random_range(0.2..1.4),
                    rng.random_range(-half_d * 0.9..half_d * 0.9),
                ],
                [
                    rng.random_range(0.2..1.8),
                    rng.random_range(0.2..1.8),
                    rng.random_range(0.2..1.8),
                ],
            ),
            category,
            first_frame: frame,
            instance_id: format!("obj-{i}"),
            surface_points: None,
        });
    }

    // room footprint: corners plus jittered boundary and interior points
    let mut floor_points = vec![
        [-half_w, -half_d],
        [half_w, -half_d],
        [half_w, half_d],
        [-half_w, half_d],
    ];
    for _ in 0..12 {
        floor_points.push([
            rng.random_range(-half_w..half_w),
            rng.random_range(-half_d..half_d),
        ]);
    }

    SceneMeta {
        floor_points,
        fps: 24.0,
        frame_count: frame + 100,
        objects,
        scene_id: format!("synth-{seed:04}"),
        up_axis: UpAxis::Y,
    }
}

/// Independent shoelace-of-convex-hull area (monotone chain), used as
/// the oracle against the alpha-shape implementation.
pub fn convex_hull_area(points: &[[f64; 2]]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let hull: Vec<[f64; 2]> = lower.into_iter().chain(upper).collect();
    let mut area2 = 0.0;
    for i in 0..hull.len() {
        let j = (i + 1) % hull.len();
        area2 += hull[i][0] * hull[j][1] - hull[j][0] * hull[i][1];
    }
    area2.abs() / 2.0
}
