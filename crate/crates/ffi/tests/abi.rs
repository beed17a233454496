use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use contactplan_ffi::*;

fn scenes() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/assets/scenes")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn load(name: &str) -> *mut CpScene {
    let path = c(scenes().join(format!("{name}.json")).to_str().unwrap());
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { cp_scene_load(path.as_ptr(), ptr::null(), &mut scene) }, CpStatus::Ok);
    assert!(!scene.is_null());
    scene
}

#[test]
fn plan_and_simulate_round_trip() {
    unsafe {
        let scene = load("bear_glass");
        assert_eq!(cp_scene_object_count(scene), 3);

        let mut traj = ptr::null_mut();
        let method = c("contact_aware_astar/vlm_cost");
        assert_eq!(cp_plan(scene, method.as_ptr(), 7, &mut traj), CpStatus::Ok);
        let n = cp_trajectory_len(traj);
        assert!(n > 1);
        assert!(cp_trajectory_cost(traj) > 0.0);

        let (mut x, mut y, mut th) = (0.0, 0.0, 0.0);
        assert_eq!(cp_trajectory_waypoint(traj, 0, &mut x, &mut y, &mut th), CpStatus::Ok);
        assert!((x - 0.255).abs() < 0.01 && (th - 90.0).abs() < 1e-9);
        assert_eq!(cp_trajectory_waypoint(traj, n, &mut x, &mut y, &mut th), CpStatus::OutOfRange);
        assert!(last_error().contains("out of range"));

        // JSON round trip gives the same replay
        let json = cp_trajectory_to_json(traj);
        let mut copy = ptr::null_mut();
        assert_eq!(cp_trajectory_from_json(json, &mut copy), CpStatus::Ok);
        cp_string_free(json);

        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(cp_simulate(scene, traj, &mut a), CpStatus::Ok);
        assert_eq!(cp_simulate(scene, copy, &mut b), CpStatus::Ok);
        assert_eq!(cp_report_success(a), 1);
        assert_eq!(cp_report_reached(a), 1);
        assert_eq!(cp_report_path_cost(a), cp_report_path_cost(b));
        assert!(cp_report_contact_duration(a) >= 0.0);
        assert!(cp_report_max_unsafe_displacement(a) < 0.10);
        let report = cp_report_to_json(a);
        assert!(CStr::from_ptr(report).to_str().unwrap().contains("\"success\": true"));
        cp_string_free(report);

        cp_report_free(a);
        cp_report_free(b);
        cp_trajectory_free(copy);
        cp_trajectory_free(traj);
        cp_scene_free(scene);
    }
}

#[test]
fn costmap_access() {
    unsafe {
        let scene = load("bear_glass");
        let mut map = ptr::null_mut();
        assert_eq!(cp_costmap_build(scene, 3, &mut map), CpStatus::Ok);
        let (mut nx, mut ny) = (0, 0);
        assert_eq!(cp_costmap_dims(map, &mut nx, &mut ny), CpStatus::Ok);
        assert_eq!((nx, ny), (50, 50));
        let mut v = 0.0;
        // jar center cell
        assert_eq!(cp_costmap_value(map, 25, 37, &mut v), CpStatus::Ok);
        assert_eq!(v, -1.0);
        assert_eq!(cp_costmap_value(map, 0, 0, &mut v), CpStatus::Ok);
        assert_eq!(v, 10.0);
        assert_eq!(cp_costmap_value(map, nx, 0, &mut v), CpStatus::OutOfRange);
        cp_costmap_free(map);
        cp_scene_free(scene);
    }
}

#[test]
fn walled_scene_reports_no_path() {
    unsafe {
        let scene = load("walled_pantry");
        let mut traj = ptr::null_mut();
        let method = c("contact_aware_astar/collision_free");
        assert_eq!(cp_plan(scene, method.as_ptr(), 0, &mut traj), CpStatus::NoPath);
        assert!(traj.is_null());
        assert!(last_error().contains("no path"));
        cp_scene_free(scene);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut scene = ptr::null_mut();
        assert_eq!(cp_scene_load(ptr::null(), ptr::null(), &mut scene), CpStatus::NullArgument);
        assert!(last_error().contains("scene_path"));

        let missing = c("/nonexistent/scene.json");
        assert_eq!(cp_scene_load(missing.as_ptr(), ptr::null(), &mut scene), CpStatus::Io);

        let bad = c("{not json");
        let costs = c("{}");
        assert_eq!(cp_scene_from_json(bad.as_ptr(), costs.as_ptr(), &mut scene), CpStatus::Parse);

        let invalid = [0xffu8, 0];
        assert_eq!(
            cp_scene_from_json(invalid.as_ptr().cast(), costs.as_ptr(), &mut scene),
            CpStatus::InvalidUtf8
        );
        assert!(scene.is_null());

        let scene = load("bear_glass");
        let mut traj = ptr::null_mut();
        let method = c("teleport/vlm_cost");
        assert_eq!(cp_plan(scene, method.as_ptr(), 0, &mut traj), CpStatus::Invalid);
        let toml = c("[costmap]\nalpha = 2.0\n");
        assert_eq!(cp_scene_set_config(scene, toml.as_ptr()), CpStatus::Parse);
        let ok = c("[planner]\nallow_rotation = false\n");
        assert_eq!(cp_scene_set_config(scene, ok.as_ptr()), CpStatus::Ok);
        assert!(cp_last_error().is_null());
        cp_scene_free(scene);

        // null handles are tolerated by accessors and destructors
        assert_eq!(cp_trajectory_len(ptr::null()), 0);
        assert!(cp_trajectory_cost(ptr::null()).is_nan());
        assert_eq!(cp_report_success(ptr::null()), 0);
        assert!(cp_trajectory_to_json(ptr::null()).is_null());
        cp_scene_free(ptr::null_mut());
        cp_costmap_free(ptr::null_mut());
        cp_trajectory_free(ptr::null_mut());
        cp_report_free(ptr::null_mut());
        cp_string_free(ptr::null_mut());
    }
}

#[test]
fn scene_from_json_text() {
    let scene_json = std::fs::read_to_string(scenes().join("bear_glass.json")).unwrap();
    let costs_json = std::fs::read_to_string(scenes().join("bear_glass.costs.json")).unwrap();
    let (s, k) = (c(&scene_json), c(&costs_json));
    let mut scene = ptr::null_mut();
    unsafe {
        assert_eq!(cp_scene_from_json(s.as_ptr(), k.as_ptr(), &mut scene), CpStatus::Ok);
        assert_eq!(cp_scene_object_count(scene), 3);
        cp_scene_free(scene);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/contactplan.h")).unwrap();
    let version = unsafe { CStr::from_ptr(cp_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
    for name in [
        "cp_last_error",
        "cp_version",
        "cp_scene_load",
        "cp_scene_from_json",
        "cp_scene_set_config",
        "cp_scene_free",
        "cp_costmap_build",
        "cp_costmap_value",
        "cp_plan",
        "cp_trajectory_waypoint",
        "cp_simulate",
        "cp_report_success",
        "cp_string_free",
        "CP_STATUS_NO_PATH",
        "typedef struct CpScene CpScene;",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
