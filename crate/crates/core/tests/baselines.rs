mod common;

use contactplan::baselines::{
    plan_astar_isotropic, plan_rrt, trajectory_voxel_cost, CostMode, RrtVariant, SampledPlannerConfig,
};
use contactplan::bench::Prepared;
use contactplan::costmap::{build_anisotropic, CostMapConfig};
use contactplan::planner::{PlanError, PlanMode, Planner, PlannerParams, Primitive};
use contactplan::scene::{Gripper, Pose2, Scene, SceneObject, Workspace};
use contactplan::semantics::CostAssignment;
use contactplan::sim::{execute, SimConfig};
use contactplan::world::ObjectClass;

use common::*;

fn scene(objects: Vec<SceneObject>, start: (f64, f64)) -> Scene {
    Scene::new(
        "baseline",
        Workspace { w: 0.5, h: 0.5 },
        0.01,
        Gripper::default(),
        Pose2 {
            x: start.0,
            y: start.1,
            theta_deg: 90.0,
        },
        objects,
        Vec::new(),
    )
    .unwrap()
}

fn jar() -> SceneObject {
    boxed("jar", (0.23, 0.40), (0.27, 0.44), 0.05, true)
}

/// A cost-8 shelf across the whole table between start and target.
fn walled() -> (Scene, CostAssignment) {
    let s = scene(vec![jar(), boxed("shelf", (0.0, 0.20), (0.5, 0.21), 0.2, false)], (0.25, 0.05));
    (s, costs(&[("shelf", 8)], "jar"))
}

fn rrt(s: &Scene, k: &CostAssignment, seed: u64, variant: RrtVariant, mode: CostMode) -> Result<contactplan::baselines::SampledPlan, PlanError> {
    let prepared = Prepared::new(s, k).unwrap();
    let config = SampledPlannerConfig {
        seed,
        ..SampledPlannerConfig::default()
    };
    plan_rrt(s, k, &prepared.voxels, &config, variant, mode)
}

#[test]
fn free_corridor_costs_nothing() {
    let s = scene(vec![jar()], (0.25, 0.05));
    let k = costs(&[], "jar");
    for variant in [RrtVariant::Rrt, RrtVariant::RrtStar] {
        for mode in [CostMode::VlmCost, CostMode::CollisionFree] {
            let plan = rrt(&s, &k, 3, variant, mode).unwrap();
            assert_eq!(plan.voxel_cost, 0.0);
            let last = plan.trajectory.waypoints.last().unwrap();
            assert!(s.target().footprint.contains(last.position()));
            let first = &plan.trajectory.waypoints[0];
            assert_eq!((first.x, first.y, first.primitive), (0.25, 0.05, Primitive::Start));
        }
    }
}

#[test]
fn blocking_wall_splits_the_modes() {
    let (s, k) = walled();
    for variant in [RrtVariant::Rrt, RrtVariant::RrtStar] {
        let plan = rrt(&s, &k, 1, variant, CostMode::VlmCost).unwrap();
        assert!(plan.voxel_cost >= 8.0, "{variant:?}: {}", plan.voxel_cost);
        assert!(plan.voxel_cost <= 10.0);
        let err = rrt(&s, &k, 1, variant, CostMode::CollisionFree).unwrap_err();
        assert!(matches!(err, PlanError::NoPath { .. }), "{variant:?}");
    }
}

#[test]
fn reported_cost_matches_an_independent_fold() {
    let (s, k) = walled();
    let prepared = Prepared::new(&s, &k).unwrap();
    for seed in 0..5 {
        let plan = rrt(&s, &k, seed, RrtVariant::RrtStar, CostMode::VlmCost).unwrap();
        assert_eq!(plan.voxel_cost, plan.trajectory.total_cost);
        assert_eq!(plan.voxel_cost, trajectory_voxel_cost(&plan.trajectory, &s, &prepared.voxels));
        let last = plan.trajectory.waypoints.last().unwrap();
        assert_eq!(last.planned_cost_so_far, plan.voxel_cost);
    }
}

#[test]
fn fixed_seed_gives_the_same_path() {
    let (s, k) = load("bear_glass");
    for variant in [RrtVariant::Rrt, RrtVariant::RrtStar] {
        let a = rrt(&s, &k, 9, variant, CostMode::VlmCost).unwrap();
        let b = rrt(&s, &k, 9, variant, CostMode::VlmCost).unwrap();
        assert_eq!(a, b);
    }
    let a = rrt(&s, &k, 1, RrtVariant::Rrt, CostMode::VlmCost).unwrap();
    let b = rrt(&s, &k, 2, RrtVariant::Rrt, CostMode::VlmCost).unwrap();
    assert_ne!(a.trajectory, b.trajectory);
}

#[test]
fn rrt_star_is_no_worse_in_free_space() {
    let s = scene(vec![boxed("jar", (0.40, 0.40), (0.44, 0.44), 0.05, true)], (0.05, 0.05));
    let k = costs(&[], "jar");
    let prepared = Prepared::new(&s, &k).unwrap();
    let mut better = 0;
    for seed in 0..50 {
        let config = SampledPlannerConfig {
            seed,
            max_iterations: 1500,
            ..SampledPlannerConfig::default()
        };
        let a = plan_rrt(&s, &k, &prepared.voxels, &config, RrtVariant::Rrt, CostMode::VlmCost).unwrap();
        let b = plan_rrt(&s, &k, &prepared.voxels, &config, RrtVariant::RrtStar, CostMode::VlmCost).unwrap();
        assert_eq!((a.voxel_cost, b.voxel_cost), (0.0, 0.0));
        better += usize::from(b.objective <= a.objective);
    }
    assert!(better >= 45, "RRT* no worse in only {better}/50");
}

#[test]
fn collision_free_rrt_replays_without_contact() {
    for name in ["bear_glass", "bowl_stack", "book_row"] {
        let (s, k) = load(name);
        for variant in [RrtVariant::Rrt, RrtVariant::RrtStar] {
            let Ok(plan) = rrt(&s, &k, 4, variant, CostMode::CollisionFree) else {
                continue;
            };
            let r = execute(&s, &k, &plan.trajectory, &SimConfig::default());
            assert!(r.contact_log.is_empty(), "{name} {variant:?}");
        }
    }
}

#[test]
fn isotropic_matches_contact_aware_when_pushes_are_irrelevant() {
    let params = PlannerParams::default();
    let config = CostMapConfig {
        alpha: 1.0,
        ..CostMapConfig::default()
    };
    // an isolated block in open space: every push lands safely
    let open = (
        scene(vec![jar(), boxed("sponge", (0.06, 0.20), (0.44, 0.24), 0.03, false)], (0.25, 0.05)),
        costs(&[("sponge", 1)], "jar"),
    );
    let cases = [
        ("open", open),
        ("bear_glass", load("bear_glass")),
    ];
    for (name, (s, k)) in cases {
        let prepared = Prepared::new(&s, &k).unwrap();
        let map = build_anisotropic(&prepared.base, &s, &k, &config).unwrap();
        let aware = Planner::new(&s, &k, &prepared.base, &map, &params, PlanMode::ContactAware).search();
        let iso = plan_astar_isotropic(&s, &k, &prepared.base, &params, PlanMode::ContactAware).unwrap();
        assert_eq!(aware, iso, "{name}");
    }
}

#[test]
fn empty_scene_paths_agree() {
    let s = scene(vec![jar()], (0.25, 0.05));
    let k = costs(&[], "jar");
    let prepared = Prepared::new(&s, &k).unwrap();
    let params = PlannerParams::default();
    let map = build_anisotropic(&prepared.base, &s, &k, &CostMapConfig::default()).unwrap();
    let aware = contactplan::plan(&s, &k, &prepared.base, &map, &params, PlanMode::ContactAware).unwrap();
    let iso = plan_astar_isotropic(&s, &k, &prepared.base, &params, PlanMode::ContactAware)
        .unwrap()
        .unwrap();
    assert_eq!(aware, iso);
    let x = aware.waypoints[0].x;
    assert!(aware.waypoints.iter().all(|w| w.x == x));
}

#[test]
fn isotropic_pushes_into_the_target() {
    // a crate fills the corridor right in front of the jar
    let s = scene(
        vec![
            boxed("jar", (0.20, 0.33), (0.30, 0.37), 0.05, true),
            boxed("crate", (0.215, 0.27), (0.285, 0.32), 0.05, false),
            boxed("left", (0.0, 0.10), (0.20, 0.40), 0.2, false),
            boxed("right", (0.30, 0.10), (0.5, 0.40), 0.2, false),
        ],
        (0.25, 0.05),
    );
    let k = costs(&[("crate", 1), ("left", 9), ("right", 9)], "jar");
    let prepared = Prepared::new(&s, &k).unwrap();
    let params = PlannerParams::default();

    let iso = plan_astar_isotropic(&s, &k, &prepared.base, &params, PlanMode::ContactAware)
        .unwrap()
        .unwrap();
    assert_eq!(iso.pushed_objects(), vec!["crate"]);
    let r = execute(&s, &k, &iso, &SimConfig::default());
    assert!(r.interpenetrations.iter().any(|e| e.hit_class == ObjectClass::Target));

    let map = build_anisotropic(&prepared.base, &s, &k, &CostMapConfig::default()).unwrap();
    match Planner::new(&s, &k, &prepared.base, &map, &params, PlanMode::ContactAware).search() {
        Ok(t) => {
            let r = execute(&s, &k, &t, &SimConfig::default());
            assert_eq!(r.target_interpenetrations(), 0);
        }
        Err(e) => assert!(matches!(e, PlanError::NoPath { .. })),
    }
}
