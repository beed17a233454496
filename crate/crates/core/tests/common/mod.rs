#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::path::PathBuf;

use contactplan::bench::default_costs_path;
use contactplan::geometry::{Polygon, Vec2};
use contactplan::planner::{Planner, PlannerState};
use contactplan::scene::{Gripper, Pose2, Scene, SceneObject, Workspace};
use contactplan::semantics::{load_fixture, CostAssignment};
use rand::Rng;

pub fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets")
}

pub fn scene_path(name: &str) -> PathBuf {
    assets().join("scenes").join(format!("{name}.json"))
}

pub fn load(name: &str) -> (Scene, CostAssignment) {
    let path = scene_path(name);
    let scene = Scene::load(&path).unwrap();
    let costs = load_fixture(default_costs_path(&path), &scene.target().name).unwrap();
    (scene, costs)
}

pub fn boxed(name: &str, min: (f64, f64), max: (f64, f64), height: f64, target: bool) -> SceneObject {
    SceneObject {
        name: name.into(),
        footprint: Polygon::rectangle(Vec2::new(min.0, min.1), Vec2::new(max.0, max.1)).unwrap(),
        height,
        is_target: target,
    }
}

pub fn costs(entries: &[(&str, i32)], target: &str) -> CostAssignment {
    CostAssignment::new(entries.iter().map(|&(n, c)| (n.to_string(), c)), target).unwrap()
}

/// A scene on an `n×n` grid of 2 cm cells with a small gripper.
pub fn small_scene(n: usize, objects: Vec<SceneObject>, start: (f64, f64, f64)) -> Scene {
    let side = n as f64 * 0.02;
    Scene::new(
        "small",
        Workspace { w: side, h: side },
        0.02,
        Gripper {
            width: 0.03,
            depth: 0.015,
        },
        Pose2 {
            x: start.0,
            y: start.1,
            theta_deg: start.2,
        },
        objects,
        Vec::new(),
    )
    .unwrap()
}

/// Random 8×8 scene: a target, one low-cost and one high-cost block on
/// cell boundaries, start in the bottom interior row.
pub fn random_small_scene(rng: &mut impl Rng) -> (Scene, CostAssignment) {
    let cell = 0.02;
    loop {
        let mut taken: Vec<(usize, usize, usize, usize)> = Vec::new();
        let mut objects = Vec::new();
        let specs = [("target", 1usize, true), ("low", 2, false), ("high", 1, false)];
        let mut ok = true;
        for (name, size, target) in specs {
            let placed = (0..50).find_map(|_| {
                let w = size + usize::from(rng.random_bool(0.5));
                let h = size;
                let i = rng.random_range(1..=7 - w);
                let j = rng.random_range(3..=7 - h);
                let clear = taken
                    .iter()
                    .all(|&(a, b, c, d)| i + w <= a || c <= i || j + h <= b || d <= j);
                clear.then_some((i, j, i + w, j + h))
            });
            let Some(r) = placed else {
                ok = false;
                break;
            };
            taken.push(r);
            objects.push(boxed(
                name,
                (r.0 as f64 * cell, r.1 as f64 * cell),
                (r.2 as f64 * cell, r.3 as f64 * cell),
                0.05,
                target,
            ));
        }
        if !ok {
            continue;
        }
        let low = rng.random_range(0..=5);
        let high = rng.random_range(6..=9);
        let start_x = (rng.random_range(2..=5) as f64 + 0.5) * cell;
        let scene = small_scene(8, objects, (start_x, 0.05, 90.0));
        return (scene, costs(&[("low", low), ("high", high)], "target"));
    }
}

/// Exhaustive Dijkstra over the planner's successor graph; cheapest goal
/// cost in planner units.
pub fn dijkstra(planner: &Planner) -> Option<i64> {
    let start = planner.start_state().ok()?;
    if planner.state_placement(&start) == contactplan::planner::Placement::Invalid {
        return None;
    }
    let mut best: HashMap<PlannerState, i64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(start.clone(), 0);
    heap.push(Reverse((0i64, start)));
    while let Some(Reverse((g, s))) = heap.pop() {
        if best.get(&s).is_some_and(|&b| b < g) {
            continue;
        }
        if planner.is_goal(&s) {
            return Some(g);
        }
        for succ in planner.successors(&s) {
            let ng = g + succ.cost;
            if best.get(&succ.state).is_none_or(|&b| ng < b) {
                best.insert(succ.state.clone(), ng);
                heap.push(Reverse((ng, succ.state)));
            }
        }
    }
    None
}

/// Neumaier-compensated sum.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Weighted mean of `(likelihood, score)` pairs with compensated sums,
/// accumulated largest weight first.
pub fn oracle_safety(pairs: &[(f64, f64)]) -> f64 {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    exact_sum(sorted.iter().map(|&(l, u)| l * u)) / exact_sum(sorted.iter().map(|&(l, _)| l))
}

/// Blend expanded as `10(1−α)(1−f) + αM`.
pub fn oracle_blend(alpha: f64, base: f64, safety: f64) -> f64 {
    10.0 * (1.0 - alpha) * (1.0 - safety) + alpha * base
}

/// Gaussian likelihood as a product of the two one-dimensional factors.
pub fn oracle_likelihood(delta: f64, theta: f64, sd: f64, st: f64) -> f64 {
    (-(delta * delta) / (sd * sd)).exp() * (-(theta * theta) / (st * st)).exp()
}

/// `D·cos(φ)^γ` through logarithms.
pub fn oracle_displacement(d: f64, gamma: f64, phi: f64) -> f64 {
    d * (gamma * phi.cos().ln()).exp()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }
}
