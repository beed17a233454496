//! Contact-aware A* over end-effector pose and displaced-world states.
//!
//! A state is the gripper front cell, a discrete heading and the cumulative
//! displacement of every pushed low-cost object. Three primitives expand it:
//!
//! * Move to one of eight neighbor cells, cost `λ_m·d(p, p′)`.
//! * Rotate by up to ±45° in fixed steps, cost `λ_r`.
//! * Push: advance along the heading until the front face meets a low-cost
//!   object, shove it by `D·cos(φ)^γ` and retract, cost `λ_p + λ_s·M′[contact]`.
//!   The object stays displaced in every descendant state.
//!
//! Every successor also pays the placement penalty `P(s′)`; invalid
//! placements are pruned. Costs are accumulated in integer micro-units so
//! search results do not depend on summation order.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::rc::Rc;

use rustc_hash::FxHashMap as HashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::{AnisotropicCostMap, PushModel};
use crate::geometry::{
    aabb_gap, polygon_distance, polygons_overlap, segment_samples, swept_translation, wrap_deg, GridSpec,
    Polygon, Vec2,
};
use crate::scene::{BaseCostMap, CellOwner, Scene};
use crate::semantics::CostAssignment;
use crate::world::{ObjectClass, World};

/// Cost units per unit of planner cost.
pub const COST_SCALE: f64 = 1e6;
/// Displacements are stored in micrometers.
const OFFSET_SCALE: f64 = 1e6;
/// Angular spacing of swept-rotation checks, shared with the simulator.
pub const ROTATION_SAMPLE_DEG: f64 = 5.0;
const HEURISTIC_SHRINK: f64 = 0.99999;

pub fn to_units(cost: f64) -> i64 {
    (cost * COST_SCALE).round() as i64
}

pub fn from_units(units: i64) -> f64 {
    units as f64 / COST_SCALE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyWeights {
    /// Weight of the mean covered cell cost.
    pub mean_cost: f64,
    /// Charged when the gripper touches a low-cost object.
    pub contact: f64,
    /// Weight of the high-cost proximity ramp.
    pub proximity: f64,
    /// Distance (m) at which the proximity ramp reaches zero.
    pub safe_distance: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            mean_cost: 1.0,
            contact: 0.5,
            proximity: 2.0,
            safe_distance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub lambda_move: f64,
    pub lambda_rotate: f64,
    pub lambda_push: f64,
    pub lambda_safety: f64,
    pub push: PushModel,
    /// Furthest a Push may travel before meeting the object (m).
    pub push_radius: f64,
    pub rotation_step_deg: f64,
    pub max_rotation_deg: f64,
    pub allow_rotation: bool,
    pub allow_push: bool,
    pub penalty: PenaltyWeights,
    /// Placements covering a cell at or above this cost are invalid.
    pub max_cell_cost: f64,
    pub max_expansions: usize,
    /// Gripper-object distance (m) that counts as contact.
    pub contact_tolerance: f64,
    /// Minimum gap (m) a pushed object must keep from everything else.
    pub push_clearance: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            lambda_move: 1.0,
            lambda_rotate: 1.8,
            lambda_push: 8.0,
            lambda_safety: 10.0,
            push: PushModel::default(),
            push_radius: 0.05,
            rotation_step_deg: 15.0,
            max_rotation_deg: 45.0,
            allow_rotation: true,
            allow_push: true,
            penalty: PenaltyWeights::default(),
            max_cell_cost: 10.0,
            max_expansions: 200_000,
            contact_tolerance: 1e-3,
            push_clearance: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    ContactAware,
    CollisionFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoPathReason {
    Exhausted,
    Budget,
    InvalidStart,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no path ({reason:?}) after {expansions} expansions")]
    NoPath { reason: NoPathReason, expansions: usize },
    #[error("start pose lies outside the grid")]
    StartOutsideGrid,
}

struct Node {
    state: PlannerState,
    g: i64,
    parent: Option<(usize, Action)>,
    closed: bool,
}

/// Search state. Ordering is the deterministic tie-break key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlannerState {
    pub cell: (i32, i32),
    /// Heading in millidegrees, `[0, 360000)`.
    pub heading: i64,
    /// `(object, dx µm, dy µm)` sorted by object, pushed objects only.
    pub displacements: Vec<(u16, i64, i64)>,
}

impl PlannerState {
    pub fn heading_deg(&self) -> f64 {
        self.heading as f64 / 1000.0
    }

    pub fn offset_of(&self, obj: usize) -> Option<Vec2> {
        self.displacements
            .iter()
            .find(|d| d.0 as usize == obj)
            .map(|&(_, x, y)| Vec2::new(x as f64 / OFFSET_SCALE, y as f64 / OFFSET_SCALE))
    }
}

fn heading_key(deg: f64) -> i64 {
    ((wrap_deg(deg) * 1000.0).round() as i64).rem_euclid(360_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Start,
    Move,
    Rotate,
    Push,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Move,
    Rotate,
    Push {
        object: usize,
        contact: Vec2,
        /// Front position at full extension.
        extended: Vec2,
        displacement: Vec2,
    },
}

impl Action {
    pub fn primitive(&self) -> Primitive {
        match self {
            Action::Move => Primitive::Move,
            Action::Rotate => Primitive::Rotate,
            Action::Push { .. } => Primitive::Push,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub state: PlannerState,
    /// `C(a) + P(s′)` in cost units.
    pub cost: i64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub theta_deg: f64,
    pub primitive: Primitive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pushed_object: Option<String>,
    pub planned_cost_so_far: f64,
}

impl Waypoint {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub total_cost: f64,
    #[serde(default)]
    pub expansions: usize,
}

impl Trajectory {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn count(&self, primitive: Primitive) -> usize {
        self.waypoints.iter().filter(|w| w.primitive == primitive).count()
    }

    /// Names of pushed objects in push order.
    pub fn pushed_objects(&self) -> Vec<&str> {
        self.waypoints.iter().filter_map(|w| w.pushed_object.as_deref()).collect()
    }
}

/// Placement outcome of a gripper pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Invalid,
    Valid(f64),
}

/// Quantized object offsets identifying a world state.
type WorldKey = Vec<(u16, i64, i64)>;
/// World id, cell and quantized heading.
type PoseKey = (u32, (i32, i32), i64);

/// Successor generator and A* driver over one scene and cost map.
pub struct Planner<'a> {
    scene: &'a Scene,
    map: &'a AnisotropicCostMap,
    params: &'a PlannerParams,
    mode: PlanMode,
    prune_push_outcomes: bool,
    grid: GridSpec,
    base_owner: Vec<CellOwner>,
    world0: World,
    workspace: Polygon,
    heuristic_cells: Vec<f64>,
    worlds: RefCell<HashMap<WorldKey, (u32, Rc<World>)>>,
    placements: RefCell<HashMap<PoseKey, Placement>>,
    clear_poses: RefCell<HashMap<PoseKey, bool>>,
    outlines: RefCell<HashMap<i64, Polygon>>,
}

impl<'a> Planner<'a> {
    pub fn new(
        scene: &'a Scene,
        costs: &CostAssignment,
        base: &BaseCostMap,
        map: &'a AnisotropicCostMap,
        params: &'a PlannerParams,
        mode: PlanMode,
    ) -> Self {
        let grid = map.grid;
        let target = scene.target_index();
        let target_cells: Vec<Vec2> = base
            .owners()
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == CellOwner::Object(target))
            .map(|(k, _)| {
                let (i, j) = grid.coords(k);
                Vec2::new(i as f64, j as f64)
            })
            .collect();
        let heuristic_cells = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let p = Vec2::new(i as f64, j as f64);
                target_cells
                    .iter()
                    .map(|t| t.distance(p))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Self {
            scene,
            map,
            params,
            mode,
            prune_push_outcomes: true,
            grid,
            base_owner: base.owners().to_vec(),
            world0: World::new(scene, costs),
            workspace: scene.workspace_polygon(),
            heuristic_cells,
            worlds: RefCell::new(HashMap::default()),
            placements: RefCell::new(HashMap::default()),
            clear_poses: RefCell::new(HashMap::default()),
            outlines: RefCell::new(HashMap::default()),
        }
    }

    /// Disables outcome checks on pushes (the isotropic variant has no
    /// directional push analysis).
    pub fn without_push_outcome_checks(mut self) -> Self {
        self.prune_push_outcomes = false;
        self
    }

    pub fn mode(&self) -> PlanMode {
        self.mode
    }

    pub fn start_state(&self) -> Result<PlannerState, PlanError> {
        let (i, j) = self
            .grid
            .cell_of(self.scene.start.position())
            .ok_or(PlanError::StartOutsideGrid)?;
        Ok(PlannerState {
            cell: (i as i32, j as i32),
            heading: heading_key(self.scene.start.theta_deg),
            displacements: Vec::new(),
        })
    }

    pub fn position(&self, state: &PlannerState) -> Vec2 {
        self.grid.cell_center(state.cell.0 as usize, state.cell.1 as usize)
    }

    pub fn world(&self, state: &PlannerState) -> Rc<World> {
        self.world_entry(&state.displacements).1
    }

    fn world_entry(&self, displacements: &[(u16, i64, i64)]) -> (u32, Rc<World>) {
        if let Some(e) = self.worlds.borrow().get(displacements) {
            return e.clone();
        }
        let mut w = self.world0.clone();
        for &(obj, x, y) in displacements {
            w.set_offset(obj as usize, Vec2::new(x as f64 / OFFSET_SCALE, y as f64 / OFFSET_SCALE));
        }
        let mut worlds = self.worlds.borrow_mut();
        let entry = (worlds.len() as u32, Rc::new(w));
        worlds.insert(displacements.to_vec(), entry.clone());
        entry
    }

    /// [`Planner::placement`] of the gripper in `state`, memoized.
    pub fn state_placement(&self, state: &PlannerState) -> Placement {
        let (id, world) = self.world_entry(&state.displacements);
        let key = (id, state.cell, state.heading);
        if let Some(&p) = self.placements.borrow().get(&key) {
            return p;
        }
        let p = self.placement(&world, self.position(state), state.heading_deg());
        self.placements.borrow_mut().insert(key, p);
        p
    }

    pub fn is_goal(&self, state: &PlannerState) -> bool {
        let k = self.grid.index(state.cell.0 as usize, state.cell.1 as usize);
        self.base_owner[k] == CellOwner::Object(self.scene.target_index())
    }

    /// Scaled Euclidean distance (cells) to the nearest target cell, in cost
    /// units. Consistent for `λ_m`-weighted moves.
    pub fn heuristic(&self, state: &PlannerState) -> i64 {
        let k = self.grid.index(state.cell.0 as usize, state.cell.1 as usize);
        let d = self.heuristic_cells[k];
        if !d.is_finite() {
            return 0;
        }
        (d * self.params.lambda_move * HEURISTIC_SHRINK * COST_SCALE).floor().max(0.0) as i64
    }

    /// Cost of the cell in the displaced world: pushed objects carry their
    /// map values with them and leave free cells behind.
    pub fn cell_cost(&self, world: &World, i: usize, j: usize) -> f64 {
        let c = self.grid.cell_center(i, j);
        for obj in 0..world.len() {
            let off = world.offset(obj);
            if off == Vec2::ZERO {
                continue;
            }
            if world.footprint(obj).contains(c) {
                let src = c - off;
                return match self.grid.cell_of(src) {
                    Some((si, sj)) if self.base_owner[self.grid.index(si, sj)] == CellOwner::Object(obj) => {
                        self.map.value(si, sj)
                    }
                    _ => world.cost(obj) as f64,
                };
            }
        }
        let k = self.grid.index(i, j);
        if let CellOwner::Object(obj) = self.base_owner[k] {
            if world.offset(obj) != Vec2::ZERO {
                return 0.0;
            }
        }
        self.map.value(i, j)
    }

    fn object_check(&self, world: &World, fp: &Polygon, skip: Option<usize>) -> Option<(bool, f64)> {
        let tol = self.params.contact_tolerance;
        let safe = self.params.penalty.safe_distance;
        let mut touching = false;
        let mut high_dist = f64::INFINITY;
        let fb = fp.aabb();
        for j in 0..world.len() {
            if Some(j) == skip {
                continue;
            }
            let class = world.class(j);
            if class == ObjectClass::Target {
                continue;
            }
            let gap = aabb_gap(&fb, &world.footprint(j).aabb());
            let reach = if class == ObjectClass::High { safe.max(tol) } else { tol };
            if gap >= reach {
                continue;
            }
            match (self.mode, class) {
                (PlanMode::CollisionFree, _) | (PlanMode::ContactAware, ObjectClass::High) => {
                    let d = polygon_distance(fp, world.footprint(j));
                    if d < tol {
                        return None;
                    }
                    if class == ObjectClass::High {
                        high_dist = high_dist.min(d);
                    }
                }
                (PlanMode::ContactAware, ObjectClass::Low) => {
                    if polygons_overlap(fp, world.footprint(j)) {
                        return None;
                    }
                    if polygon_distance(fp, world.footprint(j)) < tol {
                        touching = true;
                    }
                }
                (_, ObjectClass::Target) => unreachable!(),
            }
        }
        Some((touching, high_dist))
    }

    /// `P(s)` for the gripper at `front` with `heading_deg` in `world`.
    pub fn placement(&self, world: &World, front: Vec2, heading_deg: f64) -> Placement {
        let fp = self.footprint(front, heading_deg);
        if !self.workspace.aabb().contains_aabb(&fp.aabb()) {
            return Placement::Invalid;
        }
        let cells = self.grid.rasterize(&fp);
        let mut sum = 0.0;
        for &(i, j) in &cells {
            let v = self.cell_cost(world, i, j);
            if v >= self.params.max_cell_cost {
                return Placement::Invalid;
            }
            sum += v.max(0.0);
        }
        let Some((touching, high_dist)) = self.object_check(world, &fp, None) else {
            return Placement::Invalid;
        };
        let w = &self.params.penalty;
        let mean = if cells.is_empty() { 0.0 } else { sum / cells.len() as f64 };
        let proximity = if w.safe_distance > 0.0 {
            (1.0 - high_dist / w.safe_distance).max(0.0)
        } else {
            0.0
        };
        Placement::Valid(w.mean_cost * mean + w.contact * f64::from(u8::from(touching)) + w.proximity * proximity)
    }

    /// Gripper outline with its front at `front`, cached per heading.
    fn footprint(&self, front: Vec2, heading_deg: f64) -> Polygon {
        let key = heading_key(heading_deg);
        if let Some(p) = self.outlines.borrow().get(&key) {
            return p.translated(front);
        }
        let origin = self.scene.gripper.footprint(Vec2::ZERO, key as f64 / 1000.0);
        let fp = origin.translated(front);
        self.outlines.borrow_mut().insert(key, origin);
        fp
    }

    fn translation_clear(&self, world: &World, from: Vec2, to: Vec2, heading_deg: f64, skip: Option<usize>) -> bool {
        let fp = self.footprint(from, heading_deg);
        let a = fp.aabb();
        let d = to - from;
        let bounds = crate::geometry::Aabb {
            min: Vec2::new(a.min.x + d.x.min(0.0), a.min.y + d.y.min(0.0)),
            max: Vec2::new(a.max.x + d.x.max(0.0), a.max.y + d.y.max(0.0)),
        };
        let tol = self.params.contact_tolerance;
        let near = (0..world.len()).any(|j| {
            Some(j) != skip
                && world.class(j) != ObjectClass::Target
                && aabb_gap(&bounds, &world.footprint(j).aabb()) < tol
        });
        if !near {
            return true;
        }
        let swept = swept_translation(&fp, d);
        self.object_check(world, &swept, skip).is_some()
    }

    /// Every 5° sample of the turn from `state`'s heading to `to_deg` is clear.
    fn rotation_clear(&self, state: &PlannerState, to_deg: f64) -> bool {
        let (id, world) = self.world_entry(&state.displacements);
        let front = self.position(state);
        let from_deg = state.heading_deg();
        let span = to_deg - from_deg;
        segment_samples(span.abs(), ROTATION_SAMPLE_DEG).all(|t| {
            let heading = from_deg + span * t;
            let key = (id, state.cell, heading_key(heading));
            if let Some(&c) = self.clear_poses.borrow().get(&key) {
                return c;
            }
            let c = self.object_check(&world, &self.footprint(front, heading), None).is_some();
            self.clear_poses.borrow_mut().insert(key, c);
            c
        })
    }

    pub fn successors(&self, state: &PlannerState) -> Vec<Successor> {
        let mut out = Vec::new();
        self.expand_move(state, &mut out);
        self.expand_rotate(state, &mut out);
        if self.mode == PlanMode::ContactAware && self.params.allow_push {
            self.expand_push(state, &mut out);
        }
        out
    }

    pub fn expand_move(&self, state: &PlannerState, out: &mut Vec<Successor>) {
        let world = self.world(state);
        let p = self.position(state);
        let heading = state.heading_deg();
        for dj in -1i32..=1 {
            for di in -1i32..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (state.cell.0 + di, state.cell.1 + dj);
                if !self.grid.in_bounds(ni.into(), nj.into()) {
                    continue;
                }
                let next = PlannerState {
                    cell: (ni, nj),
                    heading: state.heading,
                    displacements: state.displacements.clone(),
                };
                let q = self.position(&next);
                let Placement::Valid(penalty) = self.state_placement(&next) else {
                    continue;
                };
                if !self.translation_clear(&world, p, q, heading, None) {
                    continue;
                }
                let step = if di != 0 && dj != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                out.push(Successor {
                    state: next,
                    cost: to_units(self.params.lambda_move * step + penalty),
                    action: Action::Move,
                });
            }
        }
    }

    pub fn expand_rotate(&self, state: &PlannerState, out: &mut Vec<Successor>) {
        if !self.params.allow_rotation || self.params.rotation_step_deg <= 0.0 {
            return;
        }
        let from = state.heading_deg();
        let steps = (self.params.max_rotation_deg / self.params.rotation_step_deg + 1e-9).floor() as i32;
        for k in (-steps..=steps).filter(|&k| k != 0) {
            let delta = k as f64 * self.params.rotation_step_deg;
            let next = PlannerState {
                cell: state.cell,
                heading: heading_key(from + delta),
                displacements: state.displacements.clone(),
            };
            let Placement::Valid(penalty) = self.state_placement(&next) else {
                continue;
            };
            if !self.rotation_clear(state, from + delta) {
                continue;
            }
            out.push(Successor {
                state: next,
                cost: to_units(self.params.lambda_rotate + penalty),
                action: Action::Rotate,
            });
        }
    }

    pub fn expand_push(&self, state: &PlannerState, out: &mut Vec<Successor>) {
        if let Some(s) = self.push_successor(state) {
            out.push(s);
        }
    }

    fn push_successor(&self, state: &PlannerState) -> Option<Successor> {
        let world = self.world(state);
        let p = self.position(state);
        let heading = state.heading_deg();
        let u = Vec2::from_angle(heading.to_radians());
        let (fa, fb) = self.scene.gripper.front_face(p, heading);
        let reach = self.params.push_radius + self.params.push.max_displacement;

        // first object met by the front face
        let face_box = crate::geometry::Aabb::from_points(&[fa, fb, fa + u * reach, fb + u * reach]);
        let mut first: Option<(f64, usize, Vec2)> = None;
        for j in 0..world.len() {
            let fp = world.footprint(j);
            if aabb_gap(&face_box, &fp.aabb()) > 0.0 {
                continue;
            }
            if let Some((t, c)) = crate::geometry::sweep_segment(fa, fb, u, fp) {
                if first.is_none_or(|(bt, bj, _)| t < bt || (t == bt && j < bj)) {
                    first = Some((t, j, c));
                }
            }
        }
        let (gap, obj, contact) = first?;
        if world.class(obj) != ObjectClass::Low || gap > self.params.push_radius {
            return None;
        }
        let record = self.map.nearest_record(obj, contact - world.offset(obj))?;
        let phi = u.dot(record.normal).clamp(-1.0, 1.0).acos();
        let d = self.params.push.displacement(phi)?;
        let extended = p + u * (gap + d);

        // gripper path out and back must only touch the pushed object
        let end_fp = self.footprint(extended, heading);
        if !self.workspace.aabb().contains_aabb(&end_fp.aabb()) {
            return None;
        }
        if !self.translation_clear(&world, p, extended, heading, Some(obj)) {
            return None;
        }

        let old = world.offset(obj);
        let new = old + u * d;
        let key = ((new.x * OFFSET_SCALE).round() as i64, (new.y * OFFSET_SCALE).round() as i64);
        let new_q = Vec2::new(key.0 as f64 / OFFSET_SCALE, key.1 as f64 / OFFSET_SCALE);
        let moved = world.initial_footprint(obj).translated(new_q);
        if !self.workspace.aabb().contains_aabb(&moved.aabb()) {
            return None;
        }
        if self.prune_push_outcomes {
            let swept = swept_translation(world.footprint(obj), new_q - old);
            for j in 0..world.len() {
                if j == obj {
                    continue;
                }
                let other = world.footprint(j);
                if aabb_gap(&swept.aabb(), &other.aabb()) >= self.params.push_clearance {
                    continue;
                }
                if polygon_distance(&swept, other) < self.params.push_clearance {
                    return None;
                }
            }
        }

        let mut displacements = state.displacements.clone();
        match displacements.iter_mut().find(|d| d.0 as usize == obj) {
            Some(entry) => {
                entry.1 = key.0;
                entry.2 = key.1;
            }
            None => {
                displacements.push((obj as u16, key.0, key.1));
                displacements.sort_unstable();
            }
        }
        let next = PlannerState {
            cell: state.cell,
            heading: state.heading,
            displacements,
        };
        let Placement::Valid(penalty) = self.state_placement(&next) else {
            return None;
        };
        let action_cost = self.params.lambda_push + self.params.lambda_safety * record.value;
        Some(Successor {
            state: next,
            cost: to_units(action_cost + penalty),
            action: Action::Push {
                object: obj,
                contact,
                extended,
                displacement: new_q - old,
            },
        })
    }

    /// A* from the start state; ties broken by `(f, h, state)`.
    pub fn search(&self) -> Result<Trajectory, PlanError> {
        let start = self.start_state()?;
        if self.state_placement(&start) == Placement::Invalid {
            return Err(PlanError::NoPath {
                reason: NoPathReason::InvalidStart,
                expansions: 0,
            });
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut index: HashMap<PlannerState, usize> = HashMap::default();
        let mut open: BinaryHeap<Reverse<(i64, i64, PlannerState, usize)>> = BinaryHeap::new();
        let h0 = self.heuristic(&start);
        nodes.push(Node {
            state: start.clone(),
            g: 0,
            parent: None,
            closed: false,
        });
        index.insert(start.clone(), 0);
        open.push(Reverse((h0, h0, start, 0)));
        let mut expansions = 0usize;
        while let Some(Reverse((_, _, _, id))) = open.pop() {
            if nodes[id].closed {
                continue;
            }
            nodes[id].closed = true;
            if self.is_goal(&nodes[id].state) {
                return Ok(self.reconstruct(&nodes, id, expansions));
            }
            expansions += 1;
            if expansions > self.params.max_expansions {
                return Err(PlanError::NoPath {
                    reason: NoPathReason::Budget,
                    expansions,
                });
            }
            let g = nodes[id].g;
            let state = nodes[id].state.clone();
            for succ in self.successors(&state) {
                let ng = g + succ.cost;
                match index.get(&succ.state) {
                    Some(&k) if nodes[k].closed || nodes[k].g <= ng => continue,
                    Some(&k) => {
                        nodes[k].g = ng;
                        nodes[k].parent = Some((id, succ.action));
                        let h = self.heuristic(&succ.state);
                        open.push(Reverse((ng + h, h, succ.state, k)));
                    }
                    None => {
                        let k = nodes.len();
                        let h = self.heuristic(&succ.state);
                        nodes.push(Node {
                            state: succ.state.clone(),
                            g: ng,
                            parent: Some((id, succ.action)),
                            closed: false,
                        });
                        index.insert(succ.state.clone(), k);
                        open.push(Reverse((ng + h, h, succ.state, k)));
                    }
                }
            }
        }
        Err(PlanError::NoPath {
            reason: NoPathReason::Exhausted,
            expansions,
        })
    }

    fn reconstruct(&self, nodes: &[Node], goal: usize, expansions: usize) -> Trajectory {
        let mut chain = Vec::new();
        let mut cur = goal;
        loop {
            chain.push(cur);
            match &nodes[cur].parent {
                Some((parent, _)) => cur = *parent,
                None => break,
            }
        }
        chain.reverse();
        let mut waypoints = Vec::new();
        for &id in &chain {
            let Node { state, g, parent, .. } = &nodes[id];
            let p = self.position(state);
            let cost = from_units(*g);
            let heading = state.heading_deg();
            match parent {
                None => waypoints.push(Waypoint {
                    x: p.x,
                    y: p.y,
                    theta_deg: heading,
                    primitive: Primitive::Start,
                    pushed_object: None,
                    planned_cost_so_far: cost,
                }),
                Some((_, Action::Push { object, extended, .. })) => {
                    let name = self.scene.objects[*object].name.clone();
                    waypoints.push(Waypoint {
                        x: extended.x,
                        y: extended.y,
                        theta_deg: heading,
                        primitive: Primitive::Push,
                        pushed_object: Some(name.clone()),
                        planned_cost_so_far: cost,
                    });
                    waypoints.push(Waypoint {
                        x: p.x,
                        y: p.y,
                        theta_deg: heading,
                        primitive: Primitive::Push,
                        pushed_object: None,
                        planned_cost_so_far: cost,
                    });
                }
                Some((_, action)) => waypoints.push(Waypoint {
                    x: p.x,
                    y: p.y,
                    theta_deg: heading,
                    primitive: action.primitive(),
                    pushed_object: None,
                    planned_cost_so_far: cost,
                }),
            }
        }
        Trajectory {
            waypoints,
            total_cost: from_units(nodes[goal].g),
            expansions,
        }
    }
}

/// Plans on `M′` with the contact-aware or collision-free primitive set.
pub fn plan(
    scene: &Scene,
    costs: &CostAssignment,
    base: &BaseCostMap,
    map: &AnisotropicCostMap,
    params: &PlannerParams,
    mode: PlanMode,
) -> Result<Trajectory, PlanError> {
    Planner::new(scene, costs, base, map, params, mode).search()
}

/// End-effector pose in 3D with a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw_deg: f64,
    pub t: f64,
}

/// Fixed planning height: half the shortest non-target object.
pub fn planning_height(scene: &Scene) -> f64 {
    let h = scene
        .objects
        .iter()
        .filter(|o| !o.is_target)
        .map(|o| o.height)
        .fold(f64::INFINITY, f64::min);
    if h.is_finite() {
        0.5 * h
    } else {
        0.5 * scene.target().height
    }
}

/// Lifts a planar trajectory to timed 3D poses at constant `speed` (m/s);
/// in-place rotations advance time at `angular_speed` (deg/s).
pub fn lift_to_3d(traj: &Trajectory, scene: &Scene, speed: f64, angular_speed: f64) -> Vec<Pose3> {
    let z = planning_height(scene);
    let mut t = 0.0;
    let mut out: Vec<Pose3> = Vec::with_capacity(traj.waypoints.len());
    for w in &traj.waypoints {
        if let Some(prev) = out.last() {
            let dist = Vec2::new(prev.x, prev.y).distance(w.position());
            let turn = angle_diff_deg(prev.yaw_deg, w.theta_deg).abs();
            t += dist / speed + if dist == 0.0 { turn / angular_speed } else { 0.0 };
        }
        out.push(Pose3 {
            x: w.x,
            y: w.y,
            z,
            yaw_deg: w.theta_deg,
            t,
        });
    }
    out
}

/// Signed shortest rotation from `a` to `b`, degrees in `(-180, 180]`.
pub fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversion_round_trips() {
        assert_eq!(to_units(1.8), 1_800_000);
        assert_eq!(from_units(to_units(13.0)), 13.0);
    }

    #[test]
    fn heading_keys_wrap() {
        assert_eq!(heading_key(-15.0), 345_000);
        assert_eq!(heading_key(360.0), 0);
        assert_eq!(heading_key(405.0), 45_000);
    }

    #[test]
    fn angle_diff() {
        assert_eq!(angle_diff_deg(350.0, 10.0), 20.0);
        assert_eq!(angle_diff_deg(10.0, 350.0), -20.0);
        assert_eq!(angle_diff_deg(0.0, 180.0), 180.0);
    }
}
