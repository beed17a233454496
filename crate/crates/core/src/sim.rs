//! Quasi-static replay of a trajectory and the evaluation metrics.
//!
//! The gripper is swept along the waypoints at constant speed. A low-cost
//! object the gripper penetrates is translated along the gripper's motion
//! just far enough to clear it; if that object then overlaps another
//! object, the overlap is handed on once (no recursion). High-cost objects
//! never yield to the gripper directly, and the target is never an obstacle.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_distance, polygons_overlap, segment_samples, aabb_gap, Polygon, Vec2};
use crate::planner::{angle_diff_deg, Trajectory, ROTATION_SAMPLE_DEG};
use crate::scene::Scene;
use crate::semantics::CostAssignment;
use crate::world::{ObjectClass, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Seconds per simulation step.
    pub step_dt: f64,
    /// Gripper translation speed (m/s).
    pub speed: f64,
    /// Distance (m) from the target footprint that counts as reached.
    pub reach_threshold: f64,
    /// Gripper-object distance (m) that counts as contact.
    pub contact_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_dt: 0.05,
            speed: 0.1,
            reach_threshold: 0.01,
            contact_tolerance: 1e-3,
        }
    }
}

/// Success thresholds.
pub const MAX_PATH_COST: f64 = 10.0;
pub const MAX_CONTACT_DURATION: f64 = 100.0;
pub const MAX_UNSAFE_DISPLACEMENT: f64 = 0.10;

/// Object-object interpenetration caused by a pushed object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpenetration {
    pub step: usize,
    pub pushed: String,
    pub hit: String,
    pub hit_class: ObjectClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepContact {
    pub step: usize,
    pub t: f64,
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub reach_target: bool,
    /// Sum of costs of contacted non-target objects, each counted once.
    pub path_cost: f64,
    /// Seconds with any non-target contact.
    pub contact_duration: f64,
    /// Centroid displacement per object (m).
    pub displacement: BTreeMap<String, f64>,
    pub contacted: Vec<String>,
    pub contact_log: Vec<StepContact>,
    pub interpenetrations: Vec<Interpenetration>,
    pub final_distance_to_target: f64,
    pub unsafe_objects: Vec<String>,
    pub success: bool,
}

impl ExecutionReport {
    pub fn max_unsafe_displacement(&self) -> f64 {
        self.unsafe_objects
            .iter()
            .filter_map(|n| self.displacement.get(n))
            .fold(0.0, |a, &b| a.max(b))
    }

    pub fn target_interpenetrations(&self) -> usize {
        self.interpenetrations
            .iter()
            .filter(|e| e.hit_class == ObjectClass::Target)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Success rule: reached, path cost < 10, contact < 100 s, every unsafe
/// object moved < 10 cm.
pub fn judge_success(report: &ExecutionReport, unsafe_set: &[String]) -> bool {
    report.reach_target
        && report.path_cost < MAX_PATH_COST
        && report.contact_duration < MAX_CONTACT_DURATION
        && unsafe_set
            .iter()
            .all(|n| report.displacement.get(n).copied().unwrap_or(0.0) < MAX_UNSAFE_DISPLACEMENT)
}

/// Smallest `t ≥ 0` such that `poly + t·dir` no longer overlaps `obstacle`.
fn separation_along(poly: &Polygon, obstacle: &Polygon, dir: Vec2) -> f64 {
    if !polygons_overlap(poly, obstacle) {
        return 0.0;
    }
    let mut hi = {
        let a = poly.aabb();
        let b = obstacle.aabb();
        (a.max - a.min).norm() + (b.max - b.min).norm()
    };
    while polygons_overlap(&poly.translated(dir * hi), obstacle) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..64 {
        if hi - lo < 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if polygons_overlap(&poly.translated(dir * mid), obstacle) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

struct Replay<'a> {
    scene: &'a Scene,
    config: &'a SimConfig,
    world: World,
    contacted: BTreeSet<usize>,
    contact_time: f64,
    step: usize,
    log: Vec<StepContact>,
    events: Vec<Interpenetration>,
}

impl Replay<'_> {
    fn step(&mut self, front: Vec2, heading_deg: f64, motion: Option<Vec2>) {
        self.step += 1;
        let fp = self.scene.gripper.footprint(front, heading_deg);
        let n = self.world.len();
        for j in 0..n {
            if self.world.class(j) != ObjectClass::Low || !polygons_overlap(&fp, self.world.footprint(j)) {
                continue;
            }
            let dir = motion
                .and_then(Vec2::normalized)
                .or_else(|| (self.world.footprint(j).centroid() - fp.centroid()).normalized())
                .unwrap_or(Vec2::new(1.0, 0.0));
            // smallest shift along the motion that clears the gripper
            let t = separation_along(self.world.footprint(j), &fp, dir);
            self.world.translate(j, dir * t);
            self.hand_on(j, dir);
        }
        let mut touching = Vec::new();
        for j in 0..n {
            if self.world.class(j) == ObjectClass::Target {
                continue;
            }
            let other = self.world.footprint(j);
            if aabb_gap(&fp.aabb(), &other.aabb()) >= self.config.contact_tolerance {
                continue;
            }
            if polygon_distance(&fp, other) < self.config.contact_tolerance {
                touching.push(j);
            }
        }
        if !touching.is_empty() {
            self.contact_time += self.config.step_dt;
            self.contacted.extend(touching.iter().copied());
            self.log.push(StepContact {
                step: self.step,
                t: self.step as f64 * self.config.step_dt,
                objects: touching.iter().map(|&j| self.world.name(j).to_string()).collect(),
            });
        }
    }

    /// One-level transfer of a pushed object's overlap to its neighbors.
    fn hand_on(&mut self, pushed: usize, dir: Vec2) {
        for k in 0..self.world.len() {
            if k == pushed || !polygons_overlap(self.world.footprint(pushed), self.world.footprint(k)) {
                continue;
            }
            self.events.push(Interpenetration {
                step: self.step,
                pushed: self.world.name(pushed).to_string(),
                hit: self.world.name(k).to_string(),
                hit_class: self.world.class(k),
            });
            let t = separation_along(self.world.footprint(k), self.world.footprint(pushed), dir);
            self.world.translate(k, dir * t);
        }
    }
}

/// Replays `trajectory` from its first waypoint and scores it.
pub fn execute(scene: &Scene, costs: &CostAssignment, trajectory: &Trajectory, config: &SimConfig) -> ExecutionReport {
    let mut replay = Replay {
        scene,
        config,
        world: World::new(scene, costs),
        contacted: BTreeSet::new(),
        contact_time: 0.0,
        step: 0,
        log: Vec::new(),
        events: Vec::new(),
    };
    let step_len = config.speed * config.step_dt;
    let mut last = trajectory
        .waypoints
        .first()
        .map(|w| (w.position(), w.theta_deg))
        .unwrap_or((scene.start.position(), scene.start.theta_deg));
    for w in trajectory.waypoints.iter().skip(1) {
        let (p0, h0) = last;
        let p1 = w.position();
        let turn = angle_diff_deg(h0, w.theta_deg);
        let dist = p0.distance(p1);
        if dist > 0.0 {
            let motion = p1 - p0;
            for t in segment_samples(dist, step_len) {
                replay.step(p0 + motion * t, h0 + turn * t, Some(motion));
            }
        } else if turn != 0.0 {
            for t in segment_samples(turn.abs(), ROTATION_SAMPLE_DEG) {
                replay.step(p0, h0 + turn * t, None);
            }
        }
        last = (p1, w.theta_deg);
    }

    let world = &replay.world;
    let target = scene.target_index();
    let final_distance = world.footprint(target).distance_to_point(last.0);
    let displacement: BTreeMap<String, f64> = (0..world.len())
        .map(|j| (world.name(j).to_string(), world.offset(j).norm()))
        .collect();
    let path_cost: f64 = replay.contacted.iter().map(|&j| f64::from(world.cost(j).max(0))).fold(0.0, |acc, c| acc + c);
    let unsafe_objects = scene.unsafe_set(costs);
    let mut report = ExecutionReport {
        reach_target: final_distance < config.reach_threshold,
        path_cost,
        contact_duration: replay.contact_time,
        displacement,
        contacted: replay.contacted.iter().map(|&j| world.name(j).to_string()).collect(),
        contact_log: replay.log,
        interpenetrations: replay.events,
        final_distance_to_target: final_distance,
        unsafe_objects,
        success: false,
    };
    report.success = judge_success(&report, &report.unsafe_objects);
    report
}
