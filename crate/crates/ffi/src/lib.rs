//! C ABI for loading scenes, building cost maps, planning and replaying.
//!
//! Every fallible call returns a [`CpStatus`]; on failure the message is
//! available from [`cp_last_error`] on the same thread. Handles returned
//! through out-pointers are owned by the caller and released with the
//! matching `*_free` function. Strings returned by the library are released
//! with [`cp_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use contactplan::bench::{default_costs_path, plan_method, Method, MethodError, Prepared};
use contactplan::config::Config;
use contactplan::costmap::{build_anisotropic, AnisotropicCostMap};
use contactplan::planner::Trajectory;
use contactplan::scene::Scene;
use contactplan::semantics::{load_fixture, parse_fixture, CostAssignment};
use contactplan::sim::{execute, ExecutionReport};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Invalid = 5,
    NoPath = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// A scene with its fixture costs.
pub struct CpScene {
    scene: Scene,
    costs: CostAssignment,
    prepared: Prepared,
    config: Config,
}

pub struct CpCostMap {
    map: AnisotropicCostMap,
}

pub struct CpTrajectory {
    trajectory: Trajectory,
}

pub struct CpReport {
    report: ExecutionReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(CpStatus, String);

type Outcome<T> = Result<T, Failure>;

fn fail<T>(status: CpStatus, msg: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Outcome<()>) -> CpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return fail(CpStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(CpStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Outcome<&'a T> {
    p.as_ref().map_or_else(|| fail(CpStatus::NullArgument, format!("{name} is null")), Ok)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Outcome<()> {
    if out.is_null() {
        return fail(CpStatus::NullArgument, "out is null");
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn build_scene(scene: Scene, costs: CostAssignment) -> Outcome<CpScene> {
    let prepared = Prepared::new(&scene, &costs).or_else(|e| fail(CpStatus::Invalid, e.to_string()))?;
    Ok(CpScene {
        scene,
        costs,
        prepared,
        config: Config::default(),
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a scene file and its cost fixture. A null `costs_path` selects
/// `<scene>.costs.json` beside the scene.
#[no_mangle]
pub unsafe extern "C" fn cp_scene_load(
    scene_path: *const c_char,
    costs_path: *const c_char,
    out: *mut *mut CpScene,
) -> CpStatus {
    guard(|| {
        let scene_path = Path::new(str_arg(scene_path, "scene_path")?);
        let costs_path = if costs_path.is_null() {
            default_costs_path(scene_path)
        } else {
            str_arg(costs_path, "costs_path")?.into()
        };
        let scene = Scene::load(scene_path).or_else(|e| fail(CpStatus::Io, e.to_string()))?;
        let costs = load_fixture(&costs_path, &scene.target().name).or_else(|e| fail(CpStatus::Io, e.to_string()))?;
        put(out, build_scene(scene, costs)?)
    })
}

/// Parses a scene and its cost fixture from JSON text.
#[no_mangle]
pub unsafe extern "C" fn cp_scene_from_json(
    scene_json: *const c_char,
    costs_json: *const c_char,
    out: *mut *mut CpScene,
) -> CpStatus {
    guard(|| {
        let scene =
            Scene::from_json(str_arg(scene_json, "scene_json")?).or_else(|e| fail(CpStatus::Parse, e.to_string()))?;
        let costs = parse_fixture(str_arg(costs_json, "costs_json")?, &scene.target().name)
            .or_else(|e| fail(CpStatus::Parse, e.to_string()))?;
        put(out, build_scene(scene, costs)?)
    })
}

/// Replaces the scene's planner configuration with a TOML document.
#[no_mangle]
pub unsafe extern "C" fn cp_scene_set_config(scene: *mut CpScene, toml: *const c_char) -> CpStatus {
    guard(|| {
        let Some(scene) = scene.as_mut() else {
            return fail(CpStatus::NullArgument, "scene is null");
        };
        scene.config = Config::from_toml(str_arg(toml, "toml")?).or_else(|e| fail(CpStatus::Parse, e.to_string()))?;
        Ok(())
    })
}

/// Number of objects in the scene, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn cp_scene_object_count(scene: *const CpScene) -> usize {
    scene.as_ref().map_or(0, |s| s.scene.objects.len())
}

#[no_mangle]
pub unsafe extern "C" fn cp_scene_free(scene: *mut CpScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Builds the anisotropic cost map with push samples drawn from `seed`.
#[no_mangle]
pub unsafe extern "C" fn cp_costmap_build(scene: *const CpScene, seed: u64, out: *mut *mut CpCostMap) -> CpStatus {
    guard(|| {
        let s = ref_arg(scene, "scene")?;
        let mut config = s.config.costmap.clone();
        config.seed = seed;
        let map = build_anisotropic(&s.prepared.base, &s.scene, &s.costs, &config)
            .or_else(|e| fail(CpStatus::Invalid, e.to_string()))?;
        put(out, CpCostMap { map })
    })
}

/// Grid dimensions in cells.
#[no_mangle]
pub unsafe extern "C" fn cp_costmap_dims(map: *const CpCostMap, nx: *mut usize, ny: *mut usize) -> CpStatus {
    guard(|| {
        let m = ref_arg(map, "map")?;
        if nx.is_null() || ny.is_null() {
            return fail(CpStatus::NullArgument, "nx or ny is null");
        }
        *nx = m.map.grid.nx;
        *ny = m.map.grid.ny;
        Ok(())
    })
}

/// Cost of cell `(i, j)`; target cells are -1.
#[no_mangle]
pub unsafe extern "C" fn cp_costmap_value(map: *const CpCostMap, i: usize, j: usize, value: *mut f64) -> CpStatus {
    guard(|| {
        let m = ref_arg(map, "map")?;
        if value.is_null() {
            return fail(CpStatus::NullArgument, "value is null");
        }
        if i >= m.map.grid.nx || j >= m.map.grid.ny {
            return fail(CpStatus::OutOfRange, format!("cell ({i}, {j}) is outside the grid"));
        }
        *value = m.map.value(i, j);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cp_costmap_free(map: *mut CpCostMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Plans with `method` (`planner/mode`, e.g. `contact_aware_astar/vlm_cost`).
/// Returns [`CpStatus::NoPath`] when the search finds nothing.
#[no_mangle]
pub unsafe extern "C" fn cp_plan(
    scene: *const CpScene,
    method: *const c_char,
    seed: u64,
    out: *mut *mut CpTrajectory,
) -> CpStatus {
    guard(|| {
        let s = ref_arg(scene, "scene")?;
        let method: Method = str_arg(method, "method")?
            .parse()
            .or_else(|e: String| fail(CpStatus::Invalid, e))?;
        let trajectory = plan_method(method, &s.scene, &s.costs, &s.prepared, None, &s.config, seed).or_else(|e| match e {
            MethodError::NoPath(e) => fail(CpStatus::NoPath, e.to_string()),
            e => fail(CpStatus::Invalid, e.to_string()),
        })?;
        put(out, CpTrajectory { trajectory })
    })
}

/// Parses a trajectory from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn cp_trajectory_from_json(json: *const c_char, out: *mut *mut CpTrajectory) -> CpStatus {
    guard(|| {
        let trajectory =
            Trajectory::from_json(str_arg(json, "json")?).or_else(|e| fail(CpStatus::Parse, e.to_string()))?;
        put(out, CpTrajectory { trajectory })
    })
}

/// Number of waypoints, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn cp_trajectory_len(traj: *const CpTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.trajectory.waypoints.len())
}

/// Planned cost, or NaN for null.
#[no_mangle]
pub unsafe extern "C" fn cp_trajectory_cost(traj: *const CpTrajectory) -> f64 {
    traj.as_ref().map_or(f64::NAN, |t| t.trajectory.total_cost)
}

/// Pose of waypoint `index`: front point (m) and heading (degrees).
#[no_mangle]
pub unsafe extern "C" fn cp_trajectory_waypoint(
    traj: *const CpTrajectory,
    index: usize,
    x: *mut f64,
    y: *mut f64,
    theta_deg: *mut f64,
) -> CpStatus {
    guard(|| {
        let t = ref_arg(traj, "trajectory")?;
        if x.is_null() || y.is_null() || theta_deg.is_null() {
            return fail(CpStatus::NullArgument, "output pointer is null");
        }
        let Some(w) = t.trajectory.waypoints.get(index) else {
            return fail(CpStatus::OutOfRange, format!("waypoint {index} out of range"));
        };
        *x = w.x;
        *y = w.y;
        *theta_deg = w.theta_deg;
        Ok(())
    })
}

/// Trajectory JSON; release with [`cp_string_free`]. Null for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cp_trajectory_to_json(traj: *const CpTrajectory) -> *mut c_char {
    traj.as_ref().map_or(ptr::null_mut(), |t| owned_string(t.trajectory.to_json()))
}

#[no_mangle]
pub unsafe extern "C" fn cp_trajectory_free(traj: *mut CpTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Replays `traj` in `scene` and scores it against the fixture costs.
#[no_mangle]
pub unsafe extern "C" fn cp_simulate(
    scene: *const CpScene,
    traj: *const CpTrajectory,
    out: *mut *mut CpReport,
) -> CpStatus {
    guard(|| {
        let s = ref_arg(scene, "scene")?;
        let t = ref_arg(traj, "trajectory")?;
        let report = execute(&s.scene, &s.costs, &t.trajectory, &s.config.sim);
        put(out, CpReport { report })
    })
}

/// 1 if the replay met the success rule, 0 otherwise or for null.
#[no_mangle]
pub unsafe extern "C" fn cp_report_success(report: *const CpReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.report.success))
}

/// 1 if the gripper ended at the target, 0 otherwise or for null.
#[no_mangle]
pub unsafe extern "C" fn cp_report_reached(report: *const CpReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.report.reach_target))
}

/// Summed cost of contacted objects, or NaN for null.
#[no_mangle]
pub unsafe extern "C" fn cp_report_path_cost(report: *const CpReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.path_cost)
}

/// Seconds in contact, or NaN for null.
#[no_mangle]
pub unsafe extern "C" fn cp_report_contact_duration(report: *const CpReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.contact_duration)
}

/// Largest displacement among unsafe objects (m), or NaN for null.
#[no_mangle]
pub unsafe extern "C" fn cp_report_max_unsafe_displacement(report: *const CpReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.max_unsafe_displacement())
}

/// Report JSON; release with [`cp_string_free`]. Null for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cp_report_to_json(report: *const CpReport) -> *mut c_char {
    report.as_ref().map_or(ptr::null_mut(), |r| owned_string(r.report.to_json()))
}

#[no_mangle]
pub unsafe extern "C" fn cp_report_free(report: *mut CpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
