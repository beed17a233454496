#ifndef CONTACTPLAN_H
#define CONTACTPLAN_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_ARGUMENT = 1,
  CP_STATUS_INVALID_UTF8 = 2,
  CP_STATUS_IO = 3,
  CP_STATUS_PARSE = 4,
  CP_STATUS_INVALID = 5,
  CP_STATUS_NO_PATH = 6,
  CP_STATUS_OUT_OF_RANGE = 7,
  CP_STATUS_PANIC = 8,
} CpStatus;

typedef struct CpCostMap CpCostMap;

typedef struct CpReport CpReport;

/**
 * A scene with its fixture costs.
 */
typedef struct CpScene CpScene;

typedef struct CpTrajectory CpTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *cp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * Loads a scene file and its cost fixture. A null `costs_path` selects
 * `<scene>.costs.json` beside the scene.
 */
enum CpStatus cp_scene_load(const char *scene_path, const char *costs_path, struct CpScene **out);

/**
 * Parses a scene and its cost fixture from JSON text.
 */
enum CpStatus cp_scene_from_json(const char *scene_json,
                                 const char *costs_json,
                                 struct CpScene **out);

/**
 * Replaces the scene's planner configuration with a TOML document.
 */
enum CpStatus cp_scene_set_config(struct CpScene *scene, const char *toml);

/**
 * Number of objects in the scene, or 0 for null.
 */
size_t cp_scene_object_count(const struct CpScene *scene);

void cp_scene_free(struct CpScene *scene);

/**
 * Builds the anisotropic cost map with push samples drawn from `seed`.
 */
enum CpStatus cp_costmap_build(const struct CpScene *scene, uint64_t seed, struct CpCostMap **out);

/**
 * Grid dimensions in cells.
 */
enum CpStatus cp_costmap_dims(const struct CpCostMap *map, size_t *nx, size_t *ny);

/**
 * Cost of cell `(i, j)`; target cells are -1.
 */
enum CpStatus cp_costmap_value(const struct CpCostMap *map, size_t i, size_t j, double *value);

void cp_costmap_free(struct CpCostMap *map);

/**
 * Plans with `method` (`planner/mode`, e.g. `contact_aware_astar/vlm_cost`).
 * Returns [`CpStatus::NoPath`] when the search finds nothing.
 */
enum CpStatus cp_plan(const struct CpScene *scene,
                      const char *method,
                      uint64_t seed,
                      struct CpTrajectory **out);

/**
 * Parses a trajectory from its JSON form.
 */
enum CpStatus cp_trajectory_from_json(const char *json, struct CpTrajectory **out);

/**
 * Number of waypoints, or 0 for null.
 */
size_t cp_trajectory_len(const struct CpTrajectory *traj);

/**
 * Planned cost, or NaN for null.
 */
double cp_trajectory_cost(const struct CpTrajectory *traj);

/**
 * Pose of waypoint `index`: front point (m) and heading (degrees).
 */
enum CpStatus cp_trajectory_waypoint(const struct CpTrajectory *traj,
                                     size_t index,
                                     double *x,
                                     double *y,
                                     double *theta_deg);

/**
 * Trajectory JSON; release with [`cp_string_free`]. Null for a null handle.
 */
char *cp_trajectory_to_json(const struct CpTrajectory *traj);

void cp_trajectory_free(struct CpTrajectory *traj);

/**
 * Replays `traj` in `scene` and scores it against the fixture costs.
 */
enum CpStatus cp_simulate(const struct CpScene *scene,
                          const struct CpTrajectory *traj,
                          struct CpReport **out);

/**
 * 1 if the replay met the success rule, 0 otherwise or for null.
 */
int32_t cp_report_success(const struct CpReport *report);

/**
 * 1 if the gripper ended at the target, 0 otherwise or for null.
 */
int32_t cp_report_reached(const struct CpReport *report);

/**
 * Summed cost of contacted objects, or NaN for null.
 */
double cp_report_path_cost(const struct CpReport *report);

/**
 * Seconds in contact, or NaN for null.
 */
double cp_report_contact_duration(const struct CpReport *report);

/**
 * Largest displacement among unsafe objects (m), or NaN for null.
 */
double cp_report_max_unsafe_displacement(const struct CpReport *report);

/**
 * Report JSON; release with [`cp_string_free`]. Null for a null handle.
 */
char *cp_report_to_json(const struct CpReport *report);

void cp_report_free(struct CpReport *report);

void cp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTACTPLAN_H */
