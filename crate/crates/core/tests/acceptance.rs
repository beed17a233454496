//! Acceptance checks, one pass/fail line per criterion. Runs without the
//! libtest harness so the lines always reach stdout.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use contactplan::bench::{aggregate, CostSource, Method, PlannerKind, RunOutcome, RunRecord};
use contactplan::baselines::CostMode;
use contactplan::costmap::{blend, build_anisotropic, likelihood, safety_score, CostMapConfig, PushCategory, PushModel, PushSample};
use contactplan::geometry::polygons_overlap;
use contactplan::planner::{Action, Placement, PlanMode, Planner, PlannerParams, PlannerState, Primitive};
use contactplan::scene::{flatten, rasterize};
use contactplan::sim::{execute, SimConfig};
use contactplan::world::ObjectClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const FORMULA_CASES: usize = 1000;
const FORMULA_REL_TOL: f64 = 1e-9;
const FORMULA_BUDGET: Duration = Duration::from_secs(10);
const OPTIMALITY_SCENES: usize = 100;
const OPTIMALITY_BUDGET: Duration = Duration::from_secs(60);
const SUITE_BUDGET: Duration = Duration::from_secs(300);
const MIN_TABLE_GAP_PCT: f64 = 10.0;
const MIN_ABLATION_GAP_PCT: f64 = 5.0;
const WALLED_SCENE: &str = "walled_pantry";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn formula_fidelity() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let categories = [
        PushCategory::Safe,
        PushCategory::LowContact,
        PushCategory::HighContact,
        PushCategory::TargetContact,
    ];
    let scores_exact = categories.map(PushCategory::score) == [1.0, 0.6, 0.1, 0.025];
    let mut worst: [f64; 4] = [0.0; 4];

    for _ in 0..FORMULA_CASES {
        let m = rng.random_range(1..=64);
        let samples: Vec<PushSample> = (0..m)
            .map(|_| {
                let delta = rng.random_range(20.0..=50.0);
                let theta = rng.random_range(-25.0..=25.0);
                PushSample {
                    delta,
                    theta,
                    likelihood: likelihood(delta, theta, 33.0, 25.0),
                    category: Some(categories[rng.random_range(0..4)]),
                }
            })
            .collect();
        let pairs: Vec<(f64, f64)> = samples
            .iter()
            .map(|s| (oracle_likelihood(s.delta, s.theta, 33.0, 25.0), s.category.unwrap().score()))
            .collect();
        worst[0] = worst[0].max(rel_err(safety_score(&samples).unwrap(), oracle_safety(&pairs)));
    }
    for _ in 0..FORMULA_CASES {
        let alpha = rng.random_range(0.01..=1.0);
        let base = rng.random_range(0.0..=10.0);
        let f = rng.random_range(0.025..=1.0);
        worst[1] = worst[1].max(rel_err(blend(alpha, base, f), oracle_blend(alpha, base, f)));
    }
    for _ in 0..FORMULA_CASES {
        let d = rng.random_range(-60.0..60.0);
        let t = rng.random_range(-40.0..40.0);
        let sd = rng.random_range(10.0..60.0);
        let st = rng.random_range(10.0..60.0);
        worst[2] = worst[2].max(rel_err(likelihood(d, t, sd, st), oracle_likelihood(d, t, sd, st)));
    }
    for _ in 0..FORMULA_CASES {
        let model = PushModel {
            max_displacement: rng.random_range(0.005..0.2),
            gamma: rng.random_range(0.5..3.0),
        };
        let phi = rng.random_range(0.0..1.55);
        let v = model.displacement(phi).unwrap();
        worst[3] = worst[3].max(rel_err(v, oracle_displacement(model.max_displacement, model.gamma, phi)));
    }
    let elapsed = started.elapsed();
    let within = worst.iter().all(|&w| w <= FORMULA_REL_TOL);
    outcome(
        scores_exact && within && elapsed < FORMULA_BUDGET,
        format!(
            "max rel err safety {:.1e} blend {:.1e} likelihood {:.1e} displacement {:.1e}; category scores exact: {scores_exact}; {:.2}s",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            elapsed.as_secs_f64()
        ),
    )
}

fn planner_optimality() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = PlannerParams {
        allow_rotation: false,
        ..PlannerParams::default()
    };
    let (mut agree, mut solvable) = (0, 0);
    for _ in 0..OPTIMALITY_SCENES {
        let (scene, costs) = random_small_scene(&mut rng);
        let base = flatten(&rasterize(&scene, &costs).unwrap());
        let map = build_anisotropic(&base, &scene, &costs, &CostMapConfig::default()).unwrap();
        let planner = Planner::new(&scene, &costs, &base, &map, &params, PlanMode::ContactAware);
        let astar = planner.search().ok().map(|t| contactplan::planner::to_units(t.total_cost));
        let oracle = dijkstra(&planner);
        agree += usize::from(astar == oracle);
        solvable += usize::from(oracle.is_some());
    }
    let elapsed = started.elapsed();
    outcome(
        agree == OPTIMALITY_SCENES && elapsed < OPTIMALITY_BUDGET,
        format!(
            "A* equals Dijkstra in {agree}/{OPTIMALITY_SCENES} scenes ({solvable} solvable); {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn push_ordering() -> Outcome {
    let params = PlannerParams::default();

    // left: the straight push of the chips lands them in the bowls
    let (scene, costs) = load("bowl_stack");
    let base = flatten(&rasterize(&scene, &costs).unwrap());
    let map = build_anisotropic(&base, &scene, &costs, &CostMapConfig::default()).unwrap();
    let pruned = Planner::new(&scene, &costs, &base, &map, &params, PlanMode::ContactAware);
    let unpruned = Planner::new(&scene, &costs, &base, &map, &params, PlanMode::ContactAware).without_push_outcome_checks();
    let chips = scene.object_index("pack of chips").unwrap();
    let stack = scene.object_index("stack of bowls").unwrap();
    let heading = (scene.start.theta_deg * 1000.0).round() as i64;
    let (mut direct, mut blocked) = (0, 0);
    for i in 0..base.grid.nx as i32 {
        for j in 0..base.grid.ny as i32 {
            let state = PlannerState {
                cell: (i, j),
                heading,
                displacements: vec![],
            };
            if !matches!(pruned.state_placement(&state), Placement::Valid(_)) {
                continue;
            }
            let mut raw = Vec::new();
            unpruned.expand_push(&state, &mut raw);
            let Some(push) = raw.iter().find(|s| matches!(s.action, Action::Push { object, .. } if object == chips)) else {
                continue;
            };
            let world = unpruned.world(&push.state);
            if !polygons_overlap(world.footprint(chips), world.footprint(stack))
                && contactplan::geometry::polygon_distance(world.footprint(chips), world.footprint(stack)) >= params.push_clearance
            {
                continue;
            }
            direct += 1;
            let mut kept = Vec::new();
            pruned.expand_push(&state, &mut kept);
            let survived = kept.iter().find(|s| matches!(s.action, Action::Push { object, .. } if object == chips));
            blocked += usize::from(survived.is_none_or(|s| s.cost > push.cost));
        }
    }
    let left = pruned.search();
    let (left_ok, left_detail) = match &left {
        Ok(t) => {
            let report = execute(&scene, &costs, t, &SimConfig::default());
            let rotates = t.count(Primitive::Rotate);
            let into_high = report
                .interpenetrations
                .iter()
                .filter(|e| e.hit_class == ObjectClass::High)
                .count();
            (
                rotates > 0 && into_high == 0 && report.displacement[&scene.objects[stack].name] == 0.0,
                format!("left: {rotates} rotates, {into_high} pushes into high-cost objects"),
            )
        }
        Err(e) => (false, format!("left: {e}")),
    };
    let left_pass = direct > 0 && blocked == direct && left_ok;

    // right: rotate+push beats the best push-free plan
    let (scene, costs) = load("book_row");
    let base = flatten(&rasterize(&scene, &costs).unwrap());
    let map = build_anisotropic(&base, &scene, &costs, &CostMapConfig::default()).unwrap();
    let with_push = Planner::new(&scene, &costs, &base, &map, &params, PlanMode::ContactAware).search();
    let no_push_params = PlannerParams {
        allow_push: false,
        ..params.clone()
    };
    let without = Planner::new(&scene, &costs, &base, &map, &no_push_params, PlanMode::ContactAware).search();
    let (right_pass, right_detail) = match (&with_push, &without) {
        (Ok(a), Ok(b)) => (
            a.total_cost < b.total_cost && a.count(Primitive::Push) > 0 && a.count(Primitive::Rotate) > 0,
            format!(
                "right: rotate+push {:.2} ({} rotates, {} pushes) vs push disabled {:.2}",
                a.total_cost,
                a.count(Primitive::Rotate),
                a.count(Primitive::Push),
                b.total_cost
            ),
        ),
        (Ok(a), Err(_)) => (a.count(Primitive::Push) > 0, format!("right: rotate+push {:.2} vs push disabled: no path", a.total_cost)),
        (Err(e), _) => (false, format!("right: {e}")),
    };
    outcome(
        left_pass && right_pass,
        format!("left: direct pushes into the stack {direct}, pruned or costlier {blocked}; {left_detail}; {right_detail}"),
    )
}

struct SuiteRun {
    runs: Vec<RunRecord>,
    elapsed: Duration,
}

fn bench(out: &Path) -> Result<SuiteRun, String> {
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_contactplan"))
        .args(["bench", "--suite"])
        .arg(assets().join("suite.json"))
        .arg("--out-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let mut runs = Vec::new();
    let mut files: Vec<PathBuf> = std::fs::read_dir(out.join("runs"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|e| e.to_string())?;
        runs.push(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", f.display()))?);
    }
    Ok(SuiteRun { runs, elapsed })
}

fn method(planner: PlannerKind, mode: CostMode) -> Method {
    Method { planner, mode }
}

fn success_pct(runs: &[RunRecord], m: Method, source: CostSource) -> f64 {
    aggregate(runs)
        .into_iter()
        .find(|r| r.method == m && r.cost_source == source)
        .map(|r| r.success_rate_pct)
        .unwrap_or(f64::NAN)
}

fn table_ordering(suite: &SuiteRun) -> Outcome {
    let ca = success_pct(&suite.runs, method(PlannerKind::ContactAwareAstar, CostMode::VlmCost), CostSource::Fixture);
    let iso = success_pct(&suite.runs, method(PlannerKind::IsotropicAstar, CostMode::VlmCost), CostSource::Fixture);
    let cf = success_pct(&suite.runs, method(PlannerKind::ContactAwareAstar, CostMode::CollisionFree), CostSource::Fixture);
    let scenes: std::collections::BTreeSet<&str> = suite.runs.iter().map(|r| r.scene.as_str()).collect();
    let seeds: std::collections::BTreeSet<u64> = suite.runs.iter().map(|r| r.seed).collect();
    let pass = scenes.len() >= 10
        && seeds.len() >= 5
        && ca - iso >= MIN_TABLE_GAP_PCT
        && iso - cf >= MIN_TABLE_GAP_PCT
        && suite.elapsed < SUITE_BUDGET;
    outcome(
        pass,
        format!(
            "success contact-aware {ca:.1}% > isotropic {iso:.1}% > collision-free {cf:.1}% over {} scenes x {} seeds; {:.1}s",
            scenes.len(),
            seeds.len(),
            suite.elapsed.as_secs_f64()
        ),
    )
}

fn ablation_ordering(suite: &SuiteRun) -> Outcome {
    let m = method(PlannerKind::ContactAwareAstar, CostMode::VlmCost);
    let fixture = success_pct(&suite.runs, m, CostSource::Fixture);
    let zero = success_pct(&suite.runs, m, CostSource::UniformZero);
    outcome(
        fixture - zero >= MIN_ABLATION_GAP_PCT,
        format!("contact-aware success with fixture costs {fixture:.1}% vs uniform zero {zero:.1}%"),
    )
}

fn infeasibility(suite: &SuiteRun) -> Outcome {
    let walled: Vec<&RunRecord> = suite
        .runs
        .iter()
        .filter(|r| r.scene == WALLED_SCENE && r.cost_source == CostSource::Fixture)
        .collect();
    let no_path_for = |m: Method| {
        let group: Vec<&&RunRecord> = walled.iter().filter(|r| r.method == m).collect();
        !group.is_empty() && group.iter().all(|r| r.outcome == RunOutcome::NoPath)
    };
    let cf = no_path_for(method(PlannerKind::ContactAwareAstar, CostMode::CollisionFree));
    let rrt = no_path_for(method(PlannerKind::Rrt, CostMode::CollisionFree));
    let rrt_star = no_path_for(method(PlannerKind::RrtStar, CostMode::CollisionFree));
    let ca: Vec<&&RunRecord> = walled
        .iter()
        .filter(|r| r.method == method(PlannerKind::ContactAwareAstar, CostMode::VlmCost))
        .collect();
    let ca_ok = !ca.is_empty() && ca.iter().all(|r| r.success);
    outcome(
        cf && rrt && rrt_star && ca_ok,
        format!(
            "{WALLED_SCENE}: no path collision-free A* {cf}, RRT {rrt}, RRT* {rrt_star}; contact-aware succeeds {}/{}",
            ca.iter().filter(|r| r.success).count(),
            ca.len()
        ),
    )
}

fn safety_invariants(suite: &SuiteRun) -> Outcome {
    let (mut target_hits, mut disjoint, mut cf_contacts, mut ca_runs, mut cf_runs) = (0, 0, 0, 0, 0);
    for r in &suite.runs {
        let Some(report) = &r.report else { continue };
        if r.method.planner == PlannerKind::ContactAwareAstar && r.method.mode == CostMode::VlmCost {
            ca_runs += 1;
            target_hits += report.target_interpenetrations();
            if r.cost_source == CostSource::Fixture {
                disjoint += report
                    .interpenetrations
                    .iter()
                    .filter(|e| e.hit_class != ObjectClass::Low)
                    .count();
            }
        }
        if r.method.mode == CostMode::CollisionFree {
            cf_runs += 1;
            cf_contacts += report.contact_log.len();
        }
    }
    outcome(
        target_hits == 0 && disjoint == 0 && cf_contacts == 0 && ca_runs > 0 && cf_runs > 0,
        format!(
            "{ca_runs} contact-aware replays: {target_hits} target interpenetrations, {disjoint} disjointness violations; {cf_runs} collision-free replays: {cf_contacts} contact steps"
        ),
    )
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (ta, tb) = (tree(a), tree(b));
    let differing = ta
        .iter()
        .zip(&tb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.clone())
        .collect::<Vec<_>>();
    let same = ta.len() == tb.len() && differing.is_empty();
    outcome(
        same && !ta.is_empty(),
        format!("{} files compared, {} differ {:?}", ta.len(), differing.len(), differing.iter().take(3).collect::<Vec<_>>()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "formula fidelity", formula_fidelity()),
        (2, "planner optimality", planner_optimality()),
        (3, "rotate and push ordering", push_ordering()),
    ];
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("first"), dir.path().join("second"));
    match (bench(&a), bench(&b)) {
        (Ok(first), Ok(_)) => {
            results.push((4, "method ordering", table_ordering(&first)));
            results.push((5, "cost source ablation", ablation_ordering(&first)));
            results.push((6, "infeasible scene", infeasibility(&first)));
            results.push((7, "safety invariants", safety_invariants(&first)));
            results.push((8, "determinism", determinism(&a, &b)));
        }
        (Err(e), _) | (_, Err(e)) => {
            for (n, name) in [
                (4, "method ordering"),
                (5, "cost source ablation"),
                (6, "infeasible scene"),
                (7, "safety invariants"),
                (8, "determinism"),
            ] {
                results.push((n, name, outcome(false, format!("bench failed: {e}"))));
            }
        }
    }
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
