//! Comparison planners: RRT and RRT* over the voxel grid at a fixed
//! end-effector height, and A* on the isotropic map `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costmap::{AnisotropicCostMap, CostMapError};
use crate::geometry::{aabb_gap, polygon_distance, segment_samples, swept_translation, Vec2};
use crate::planner::{
    planning_height, PlanError, PlanMode, Planner, PlannerParams, Primitive, Trajectory, Waypoint,
};
use crate::scene::{BaseCostMap, CellOwner, Scene, VoxelGrid};
use crate::semantics::CostAssignment;
use crate::world::{ObjectClass, World};

/// How sampled planners treat objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Overlap allowed; accumulated voxel cost bounded by `max_path_cost`.
    VlmCost,
    CollisionFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RrtVariant {
    Rrt,
    RrtStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampledPlannerConfig {
    pub max_iterations: usize,
    /// Steering step (m).
    pub step_size: f64,
    pub goal_bias: f64,
    /// RRT* neighborhood radius (m).
    pub rewire_radius: f64,
    pub seed: u64,
    /// Trees whose accumulated voxel cost exceeds this are pruned.
    pub max_path_cost: f64,
    /// Gripper-object distance (m) that counts as contact.
    pub contact_tolerance: f64,
}

impl Default for SampledPlannerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            step_size: 0.02,
            goal_bias: 0.1,
            rewire_radius: 0.06,
            seed: 0,
            max_path_cost: 10.0,
            contact_tolerance: 1e-3,
        }
    }
}

/// RRT result with the tree objective alongside the reported voxel cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPlan {
    pub trajectory: Trajectory,
    /// `Σ V[τ_i]` over waypoints.
    pub voxel_cost: f64,
    pub length: f64,
    /// What the tree minimizes: voxel cost plus path length in meters.
    pub objective: f64,
    pub iterations: usize,
}

struct TreeNode {
    pos: Vec2,
    parent: Option<usize>,
    voxel_cost: f64,
    length: f64,
    children: Vec<usize>,
}

impl TreeNode {
    fn objective(&self) -> f64 {
        self.voxel_cost + self.length
    }
}

struct RrtContext<'a> {
    scene: &'a Scene,
    voxels: &'a VoxelGrid,
    world: World,
    layer: usize,
    heading: f64,
    mode: CostMode,
    config: &'a SampledPlannerConfig,
}

impl RrtContext<'_> {
    /// Obstacle cost of the voxel under `p` at the planning height; the
    /// target and free space read 0.
    fn voxel_cost(&self, p: Vec2) -> f64 {
        match self.voxels.grid.cell_of(p) {
            Some((i, j)) => match self.voxels.owner(i, j, self.layer) {
                CellOwner::Free => 0.0,
                _ => self.voxels.value(i, j, self.layer).max(0.0),
            },
            None => f64::INFINITY,
        }
    }

    /// Points along an edge at grid resolution, excluding `from`.
    fn edge_points(&self, from: Vec2, to: Vec2) -> impl Iterator<Item = Vec2> {
        let d = to - from;
        segment_samples(d.norm(), self.voxels.grid.resolution).map(move |t| from + d * t)
    }

    /// Voxel cost summed over the edge's sample points.
    fn edge_cost(&self, from: Vec2, to: Vec2) -> f64 {
        self.edge_points(from, to).fold(0.0, |acc, p| acc + self.voxel_cost(p))
    }

    fn in_workspace(&self, p: Vec2) -> bool {
        let fp = self.scene.gripper.footprint(p, self.heading);
        let bb = fp.aabb();
        bb.min.x >= 0.0 && bb.min.y >= 0.0 && bb.max.x <= self.scene.workspace.w && bb.max.y <= self.scene.workspace.h
    }

    fn edge_valid(&self, from: Vec2, to: Vec2) -> bool {
        if !self.in_workspace(to) {
            return false;
        }
        if self.mode == CostMode::VlmCost {
            return true;
        }
        let fp = self.scene.gripper.footprint(from, self.heading);
        let swept = swept_translation(&fp, to - from);
        let tol = self.config.contact_tolerance;
        (0..self.world.len()).all(|j| {
            self.world.class(j) == ObjectClass::Target
                || aabb_gap(&swept.aabb(), &self.world.footprint(j).aabb()) >= tol
                || polygon_distance(&swept, self.world.footprint(j)) >= tol
        })
    }

    fn is_goal(&self, p: Vec2) -> bool {
        self.scene.target().footprint.contains(p)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        if rng.random::<f64>() < self.config.goal_bias {
            return self.scene.target().footprint.centroid();
        }
        Vec2::new(
            rng.random_range(0.0..self.scene.workspace.w),
            rng.random_range(0.0..self.scene.workspace.h),
        )
    }
}

fn steer(from: Vec2, toward: Vec2, step: f64) -> Vec2 {
    let d = toward - from;
    let n = d.norm();
    if n <= step {
        toward
    } else {
        from + d * (step / n)
    }
}

fn propagate(nodes: &mut [TreeNode], root: usize, ctx: &RrtContext<'_>) {
    let mut stack = vec![root];
    while let Some(k) = stack.pop() {
        let children = nodes[k].children.clone();
        for c in children {
            let step = nodes[k].pos.distance(nodes[c].pos);
            nodes[c].voxel_cost = nodes[k].voxel_cost + ctx.edge_cost(nodes[k].pos, nodes[c].pos);
            nodes[c].length = nodes[k].length + step;
            stack.push(c);
        }
    }
}

/// RRT / RRT* from the scene start to any point inside the target footprint.
pub fn plan_rrt(
    scene: &Scene,
    costs: &CostAssignment,
    voxels: &VoxelGrid,
    config: &SampledPlannerConfig,
    variant: RrtVariant,
    mode: CostMode,
) -> Result<SampledPlan, PlanError> {
    let ctx = RrtContext {
        scene,
        voxels,
        world: World::new(scene, costs),
        layer: voxels.layer_of(planning_height(scene)),
        heading: scene.start.theta_deg,
        mode,
        config,
    };
    let start = scene.start.position();
    if !ctx.in_workspace(start) || !ctx.edge_valid(start, start) {
        return Err(PlanError::NoPath {
            reason: crate::planner::NoPathReason::InvalidStart,
            expansions: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut nodes = vec![TreeNode {
        pos: start,
        parent: None,
        voxel_cost: ctx.voxel_cost(start),
        length: 0.0,
        children: Vec::new(),
    }];
    let mut best_goal: Option<usize> = ctx.is_goal(start).then_some(0);

    for iter in 0..config.max_iterations {
        let sample = ctx.sample(&mut rng);
        let nearest = (0..nodes.len())
            .min_by(|&a, &b| nodes[a].pos.distance(sample).total_cmp(&nodes[b].pos.distance(sample)))
            .expect("tree is never empty");
        let new_pos = steer(nodes[nearest].pos, sample, config.step_size);
        if new_pos.distance(nodes[nearest].pos) < 1e-9 || !ctx.edge_valid(nodes[nearest].pos, new_pos) {
            continue;
        }
        let mut parent = nearest;
        let mut here = ctx.edge_cost(nodes[nearest].pos, new_pos);
        let mut near: Vec<usize> = Vec::new();
        if variant == RrtVariant::RrtStar {
            near = (0..nodes.len())
                .filter(|&k| nodes[k].pos.distance(new_pos) <= config.rewire_radius)
                .collect();
            let mut best = nodes[nearest].objective() + here + nodes[nearest].pos.distance(new_pos);
            for &k in &near {
                let edge = ctx.edge_cost(nodes[k].pos, new_pos);
                let cand = nodes[k].objective() + edge + nodes[k].pos.distance(new_pos);
                let affordable = mode == CostMode::CollisionFree || nodes[k].voxel_cost + edge <= config.max_path_cost;
                if cand < best - 1e-12 && affordable && ctx.edge_valid(nodes[k].pos, new_pos) {
                    best = cand;
                    parent = k;
                    here = edge;
                }
            }
        }
        let voxel_cost = nodes[parent].voxel_cost + here;
        if mode == CostMode::VlmCost && voxel_cost > config.max_path_cost {
            continue;
        }
        let id = nodes.len();
        let length = nodes[parent].length + nodes[parent].pos.distance(new_pos);
        nodes.push(TreeNode {
            pos: new_pos,
            parent: Some(parent),
            voxel_cost,
            length,
            children: Vec::new(),
        });
        nodes[parent].children.push(id);

        if variant == RrtVariant::RrtStar {
            for &k in &near {
                if k == parent || k == 0 {
                    continue;
                }
                let edge = ctx.edge_cost(new_pos, nodes[k].pos);
                let via = nodes[id].objective() + nodes[id].pos.distance(nodes[k].pos) + edge;
                let current = nodes[k].objective();
                if via < current - 1e-12 && ctx.edge_valid(new_pos, nodes[k].pos) {
                    if let Some(old) = nodes[k].parent {
                        nodes[old].children.retain(|&c| c != k);
                    }
                    nodes[k].parent = Some(id);
                    nodes[id].children.push(k);
                    nodes[k].voxel_cost = nodes[id].voxel_cost + edge;
                    nodes[k].length = nodes[id].length + nodes[id].pos.distance(nodes[k].pos);
                    propagate(&mut nodes, k, &ctx);
                }
            }
        }

        if ctx.is_goal(new_pos) {
            match variant {
                RrtVariant::Rrt => {
                    return Ok(extract(&nodes, id, &ctx, iter + 1));
                }
                RrtVariant::RrtStar => {
                    if best_goal.is_none_or(|g| nodes[id].objective() < nodes[g].objective()) {
                        best_goal = Some(id);
                    }
                }
            }
        }
    }
    // RRT* keeps refining until the iteration budget; goal nodes may have
    // been improved by rewiring, so pick the best at the end.
    let goal = (0..nodes.len())
        .filter(|&k| ctx.is_goal(nodes[k].pos))
        .filter(|&k| mode == CostMode::CollisionFree || nodes[k].voxel_cost <= config.max_path_cost)
        .min_by(|&a, &b| nodes[a].objective().total_cmp(&nodes[b].objective()).then(a.cmp(&b)))
        .or(best_goal);
    match goal {
        Some(g) => Ok(extract(&nodes, g, &ctx, config.max_iterations)),
        None => Err(PlanError::NoPath {
            reason: crate::planner::NoPathReason::Budget,
            expansions: config.max_iterations,
        }),
    }
}

fn extract(nodes: &[TreeNode], goal: usize, ctx: &RrtContext<'_>, iterations: usize) -> SampledPlan {
    let mut chain = vec![goal];
    while let Some(p) = nodes[*chain.last().expect("non-empty")].parent {
        chain.push(p);
    }
    chain.reverse();
    let start = nodes[chain[0]].pos;
    let mut voxel_cost = ctx.voxel_cost(start);
    let mut waypoints = vec![Waypoint {
        x: start.x,
        y: start.y,
        theta_deg: ctx.heading,
        primitive: Primitive::Start,
        pushed_object: None,
        planned_cost_so_far: voxel_cost,
    }];
    for pair in chain.windows(2) {
        for p in ctx.edge_points(nodes[pair[0]].pos, nodes[pair[1]].pos) {
            voxel_cost += ctx.voxel_cost(p);
            waypoints.push(Waypoint {
                x: p.x,
                y: p.y,
                theta_deg: ctx.heading,
                primitive: Primitive::Move,
                pushed_object: None,
                planned_cost_so_far: voxel_cost,
            });
        }
    }
    let length = nodes[goal].length;
    SampledPlan {
        trajectory: Trajectory {
            waypoints,
            total_cost: voxel_cost,
            expansions: iterations,
        },
        voxel_cost,
        length,
        objective: voxel_cost + length,
        iterations,
    }
}

/// `Σ V[τ_i]` recomputed from waypoints at the planning height.
pub fn trajectory_voxel_cost(traj: &Trajectory, scene: &Scene, voxels: &VoxelGrid) -> f64 {
    let layer = voxels.layer_of(planning_height(scene));
    traj.waypoints
        .iter()
        .map(|w| match voxels.grid.cell_of(w.position()) {
            Some((i, j)) if voxels.owner(i, j, layer) != CellOwner::Free => voxels.value(i, j, layer).max(0.0),
            _ => 0.0,
        })
        .fold(0.0, |acc, v| acc + v)
}

/// A* with the same primitives but push costs and placement read from `M`,
/// and no push-outcome checks.
pub fn plan_astar_isotropic(
    scene: &Scene,
    costs: &CostAssignment,
    base: &BaseCostMap,
    params: &PlannerParams,
    mode: PlanMode,
) -> Result<Result<Trajectory, PlanError>, CostMapError> {
    let map = AnisotropicCostMap::isotropic(base, scene, costs)?;
    Ok(Planner::new(scene, costs, base, &map, params, mode)
        .without_push_outcome_checks()
        .search())
}
