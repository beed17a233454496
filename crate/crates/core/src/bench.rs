//! Benchmark harness: scenes × cost sources × methods × seeds, replayed in the
//! simulator against the reference fixture costs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{plan_astar_isotropic, plan_rrt, CostMode, RrtVariant};
use crate::config::Config;
use crate::costmap::{build_anisotropic, AnisotropicCostMap, CostMapError};
use crate::planner::{plan, NoPathReason, PlanError, PlanMode, Trajectory};
use crate::scene::{flatten, rasterize, BaseCostMap, Scene, SceneError, VoxelGrid};
use crate::semantics::{load_fixture, query_vlm, uniform_zero, CostAssignment, CostError, PromptTemplate};
use crate::sim::{execute, ExecutionReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    ContactAwareAstar,
    IsotropicAstar,
    Rrt,
    RrtStar,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::ContactAwareAstar,
        PlannerKind::IsotropicAstar,
        PlannerKind::Rrt,
        PlannerKind::RrtStar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::ContactAwareAstar => "contact_aware_astar",
            PlannerKind::IsotropicAstar => "isotropic_astar",
            PlannerKind::Rrt => "rrt",
            PlannerKind::RrtStar => "rrt_star",
        }
    }
}

fn mode_str(mode: CostMode) -> &'static str {
    match mode {
        CostMode::VlmCost => "vlm_cost",
        CostMode::CollisionFree => "collision_free",
    }
}

/// A planner paired with how it treats objects, written `planner/mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub planner: PlannerKind,
    pub mode: CostMode,
}

impl Method {
    pub const fn new(planner: PlannerKind, mode: CostMode) -> Self {
        Self { planner, mode }
    }

    pub fn all() -> Vec<Method> {
        PlannerKind::ALL
            .iter()
            .flat_map(|&p| [Method::new(p, CostMode::VlmCost), Method::new(p, CostMode::CollisionFree)])
            .collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.planner.as_str(), mode_str(self.mode))
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, m) = s.split_once('/').unwrap_or((s, "vlm_cost"));
        let planner = PlannerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == p)
            .ok_or_else(|| format!("unknown planner `{p}`"))?;
        let mode = match m {
            "vlm_cost" => CostMode::VlmCost,
            "collision_free" => CostMode::CollisionFree,
            _ => return Err(format!("unknown mode `{m}`")),
        };
        Ok(Method::new(planner, mode))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    Fixture,
    UniformZero,
    Vlm,
}

impl CostSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CostSource::Fixture => "fixture",
            CostSource::UniformZero => "uniform_zero",
            CostSource::Vlm => "vlm",
        }
    }
}

impl FromStr for CostSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixture" => Ok(CostSource::Fixture),
            "uniform_zero" => Ok(CostSource::UniformZero),
            "vlm" => Ok(CostSource::Vlm),
            _ => Err(format!("unknown cost source `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read suite {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid suite: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid suite: {0}")]
    Invalid(String),
}

fn default_sources() -> Vec<CostSource> {
    vec![CostSource::Fixture]
}

/// Suite file: scene paths are relative to the suite file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSuite {
    #[serde(default)]
    pub name: String,
    pub scenes: Vec<PathBuf>,
    #[serde(default = "default_sources")]
    pub cost_sources: Vec<CostSource>,
    #[serde(default = "Method::all")]
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
}

impl BenchmarkSuite {
    pub fn validate(&self) -> Result<(), SuiteError> {
        if self.scenes.is_empty() {
            return Err(SuiteError::Invalid("no scenes".into()));
        }
        if self.seeds.is_empty() || self.methods.is_empty() || self.cost_sources.is_empty() {
            return Err(SuiteError::Invalid("seeds, methods and cost_sources must be non-empty".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(SuiteError::Invalid("seeds must be distinct".into()));
        }
        Ok(())
    }

    /// Loads a suite and resolves scene paths against its directory.
    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut suite: BenchmarkSuite = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for s in &mut suite.scenes {
            if s.is_relative() {
                *s = dir.join(&*s);
            }
        }
        suite.validate()?;
        Ok(suite)
    }
}

/// `dir/name.json` → `dir/name.costs.json`.
pub fn default_costs_path(scene_path: &Path) -> PathBuf {
    let file = scene_path.file_name().and_then(|f| f.to_str()).unwrap_or("scene.json");
    let stem = file.strip_suffix(".json").unwrap_or(file);
    scene_path.with_file_name(format!("{stem}.costs.json"))
}

#[derive(Debug, Error)]
pub enum MethodError {
    #[error(transparent)]
    NoPath(#[from] PlanError),
    #[error(transparent)]
    CostMap(#[from] CostMapError),
}

/// Grids shared by every method on one (scene, costs) pair.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub voxels: VoxelGrid,
    pub base: BaseCostMap,
}

impl Prepared {
    pub fn new(scene: &Scene, costs: &CostAssignment) -> Result<Self, SceneError> {
        let voxels = rasterize(scene, costs)?;
        let base = flatten(&voxels);
        Ok(Self { voxels, base })
    }
}

/// Plans with `method`, building the anisotropic map when it is needed.
/// `map` may carry a prebuilt map for the same costs and seed.
pub fn plan_method(
    method: Method,
    scene: &Scene,
    costs: &CostAssignment,
    prepared: &Prepared,
    map: Option<&AnisotropicCostMap>,
    config: &Config,
    seed: u64,
) -> Result<Trajectory, MethodError> {
    let astar_mode = match method.mode {
        CostMode::VlmCost => PlanMode::ContactAware,
        CostMode::CollisionFree => PlanMode::CollisionFree,
    };
    match method.planner {
        PlannerKind::ContactAwareAstar => {
            let built;
            let map = match map {
                Some(m) => m,
                None => {
                    let mut cm = config.costmap.clone();
                    cm.seed = seed;
                    built = build_anisotropic(&prepared.base, scene, costs, &cm)?;
                    &built
                }
            };
            Ok(plan(scene, costs, &prepared.base, map, &config.planner, astar_mode)?)
        }
        PlannerKind::IsotropicAstar => {
            Ok(plan_astar_isotropic(scene, costs, &prepared.base, &config.planner, astar_mode)??)
        }
        PlannerKind::Rrt | PlannerKind::RrtStar => {
            let variant = if method.planner == PlannerKind::Rrt {
                RrtVariant::Rrt
            } else {
                RrtVariant::RrtStar
            };
            let mut rc = config.rrt.clone();
            rc.seed = seed;
            let sp = plan_rrt(scene, costs, &prepared.voxels, &rc, variant, method.mode)?;
            Ok(sp.trajectory)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Executed,
    NoPath,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scene: String,
    pub method: Method,
    pub cost_source: CostSource,
    pub seed: u64,
    pub outcome: RunOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_path_reason: Option<NoPathReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ExecutionReport>,
    pub success: bool,
}

impl RunRecord {
    fn failed(scene: &str, method: Method, source: CostSource, seed: u64, error: String) -> Self {
        Self {
            scene: scene.to_string(),
            method,
            cost_source: source,
            seed,
            outcome: RunOutcome::Error,
            no_path_reason: None,
            error: Some(error),
            trajectory: None,
            report: None,
            success: false,
        }
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}__{}__{}__{}__s{}.json",
            self.scene,
            self.method.planner.as_str(),
            mode_str(self.method.mode),
            self.cost_source.as_str(),
            self.seed
        )
    }
}

/// One Table-1-style row. Means are over executed runs; rates over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub cost_source: CostSource,
    pub runs: usize,
    pub executed: usize,
    pub no_path: usize,
    pub errors: usize,
    pub reach_target_pct: f64,
    pub mean_path_cost: Option<f64>,
    pub mean_contact_duration: Option<f64>,
    pub mean_unsafe_displacement: Option<f64>,
    pub success_rate_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub suite: String,
    pub rows: Vec<AggregateRow>,
    pub runs: Vec<RunRecord>,
}

impl BenchResult {
    pub fn row(&self, method: Method, source: CostSource) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.method == method && r.cost_source == source)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

/// Rows ordered by (method, cost source) in suite order of first appearance.
pub fn aggregate(runs: &[RunRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Method, CostSource)> = Vec::new();
    for r in runs {
        if !keys.contains(&(r.method, r.cost_source)) {
            keys.push((r.method, r.cost_source));
        }
    }
    keys.into_iter()
        .map(|(method, source)| {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.method == method && r.cost_source == source)
                .collect();
            let reports: Vec<&ExecutionReport> = group.iter().filter_map(|r| r.report.as_ref()).collect();
            let n = group.len();
            let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
            AggregateRow {
                method,
                cost_source: source,
                runs: n,
                executed: reports.len(),
                no_path: group.iter().filter(|r| r.outcome == RunOutcome::NoPath).count(),
                errors: group.iter().filter(|r| r.outcome == RunOutcome::Error).count(),
                reach_target_pct: pct(reports.iter().filter(|r| r.reach_target).count()),
                mean_path_cost: mean(reports.iter().map(|r| r.path_cost)),
                mean_contact_duration: mean(reports.iter().map(|r| r.contact_duration)),
                mean_unsafe_displacement: mean(reports.iter().map(|r| r.max_unsafe_displacement())),
                success_rate_pct: pct(group.iter().filter(|r| r.success).count()),
            }
        })
        .collect()
}

/// Planning costs for `source`. The fixture is always the reference.
pub fn provide_costs(
    source: CostSource,
    scene: &Scene,
    fixture: &CostAssignment,
    config: &Config,
) -> Result<CostAssignment, CostError> {
    match source {
        CostSource::Fixture => Ok(fixture.clone()),
        CostSource::UniformZero => Ok(uniform_zero(scene)),
        CostSource::Vlm => query_vlm(&config.vlm, &PromptTemplate::default(), scene),
    }
}

struct SceneInputs {
    name: String,
    scene: Scene,
    fixture: CostAssignment,
}

fn load_inputs(path: &Path) -> Result<SceneInputs, String> {
    let scene = Scene::load(path).map_err(|e| e.to_string())?;
    let fixture = load_fixture(default_costs_path(path), &scene.target().name).map_err(|e| e.to_string())?;
    let name = if scene.name.is_empty() {
        path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene").to_string()
    } else {
        scene.name.clone()
    };
    Ok(SceneInputs { name, scene, fixture })
}

fn scene_label(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene").to_string()
}

/// Runs every (method) for one (scene, source, seed) cell.
fn run_cell(
    inputs: &Result<SceneInputs, String>,
    label: &str,
    source: CostSource,
    seed: u64,
    methods: &[Method],
    config: &Config,
) -> Vec<RunRecord> {
    let inputs = match inputs {
        Ok(i) => i,
        Err(e) => return methods.iter().map(|&m| RunRecord::failed(label, m, source, seed, e.clone())).collect(),
    };
    let name = inputs.name.as_str();
    let fail_all = |e: String| methods.iter().map(|&m| RunRecord::failed(name, m, source, seed, e.clone())).collect();
    let costs = match provide_costs(source, &inputs.scene, &inputs.fixture, config) {
        Ok(c) => c,
        Err(e) => return fail_all(e.to_string()),
    };
    let prepared = match Prepared::new(&inputs.scene, &costs) {
        Ok(p) => p,
        Err(e) => return fail_all(e.to_string()),
    };
    let map = if methods.iter().any(|m| m.planner == PlannerKind::ContactAwareAstar) {
        let mut cm = config.costmap.clone();
        cm.seed = seed;
        match build_anisotropic(&prepared.base, &inputs.scene, &costs, &cm) {
            Ok(m) => Some(m),
            Err(e) => return fail_all(e.to_string()),
        }
    } else {
        None
    };
    methods
        .iter()
        .map(|&method| {
            let mut record = RunRecord::failed(name, method, source, seed, String::new());
            record.error = None;
            match plan_method(method, &inputs.scene, &costs, &prepared, map.as_ref(), config, seed) {
                Ok(traj) => {
                    let report = execute(&inputs.scene, &inputs.fixture, &traj, &config.sim);
                    record.outcome = RunOutcome::Executed;
                    record.success = report.success;
                    record.trajectory = Some(traj);
                    record.report = Some(report);
                }
                Err(MethodError::NoPath(PlanError::NoPath { reason, .. })) => {
                    record.outcome = RunOutcome::NoPath;
                    record.no_path_reason = Some(reason);
                }
                Err(e) => {
                    record.outcome = RunOutcome::Error;
                    record.error = Some(e.to_string());
                }
            }
            record
        })
        .collect()
}

/// Runs the suite on the rayon pool; output order is
/// scene → cost source → seed → method regardless of scheduling.
pub fn run_suite(suite: &BenchmarkSuite, config: &Config) -> BenchResult {
    let inputs: Vec<(String, Result<SceneInputs, String>)> = suite
        .scenes
        .par_iter()
        .map(|p| (scene_label(p), load_inputs(p)))
        .collect();
    let mut cells = Vec::new();
    for (s, _) in inputs.iter().enumerate() {
        for &source in &suite.cost_sources {
            for &seed in &suite.seeds {
                cells.push((s, source, seed));
            }
        }
    }
    let runs: Vec<RunRecord> = cells
        .par_iter()
        .flat_map_iter(|&(s, source, seed)| {
            let (label, inp) = &inputs[s];
            run_cell(inp, label, source, seed, &suite.methods, config)
        })
        .collect();
    BenchResult {
        suite: suite.name.clone(),
        rows: aggregate(&runs),
        runs,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn summary_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "Method,Cost Source,Runs,Executed,No Path,Errors,Reach Target (%),Path Cost,Contact Duration (s),Unsafe Object Displacement (m),Success Rate (%)\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.2},{},{},{},{:.2}\n",
            r.method,
            r.cost_source.as_str(),
            r.runs,
            r.executed,
            r.no_path,
            r.errors,
            r.reach_target_pct,
            opt(r.mean_path_cost),
            opt(r.mean_contact_duration),
            opt(r.mean_unsafe_displacement),
            r.success_rate_pct
        ));
    }
    out
}

/// Writes `runs/*.json`, `summary.csv` and `summary.json` under `out_dir`.
pub fn write_outputs(result: &BenchResult, out_dir: &Path) -> std::io::Result<()> {
    let runs_dir = out_dir.join("runs");
    std::fs::create_dir_all(&runs_dir)?;
    for r in &result.runs {
        let text = serde_json::to_string_pretty(r).map_err(std::io::Error::other)?;
        std::fs::write(runs_dir.join(r.file_name()), text + "\n")?;
    }
    std::fs::write(out_dir.join("summary.csv"), summary_csv(&result.rows))?;
    let summary = serde_json::json!({ "suite": result.suite, "rows": result.rows });
    let text = serde_json::to_string_pretty(&summary).map_err(std::io::Error::other)?;
    std::fs::write(out_dir.join("summary.json"), text + "\n")
}
