//! Tabletop scenes, the voxel cost grid and its top-down flattening.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{polygons_overlap, GeometryError, GridSpec, Polygon, Vec2};
use crate::semantics::CostAssignment;

/// Cost written to the outermost ring of tabletop cells.
pub const BORDER_COST: f64 = 10.0;
/// Cost of every target voxel.
pub const TARGET_COST: f64 = -1.0;
/// Objects at or below this cost may be pushed.
pub const LOW_COST_MAX: i32 = 5;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read scene {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse scene: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("object {name:?}: {source}")]
    Polygon {
        name: String,
        source: GeometryError,
    },
    #[error("object {0:?} has non-positive height")]
    BadHeight(String),
    #[error("duplicate object name {0:?}")]
    DuplicateName(String),
    #[error("scene must contain exactly one target, found {0}")]
    TargetCount(usize),
    #[error("object {0:?} lies outside the workspace")]
    OutsideWorkspace(String),
    #[error("objects {0:?} and {1:?} overlap")]
    ObjectOverlap(String, String),
    #[error("resolution must be positive and divide the workspace evenly")]
    BadResolution,
    #[error("gripper dimensions must be positive")]
    BadGripper,
    #[error("start pose lies outside the workspace")]
    BadStart,
    #[error("unsafe object {0:?} is not in the scene")]
    UnknownUnsafe(String),
    #[error("no cost assigned to object {0:?}")]
    MissingCost(String),
    #[error("object {0:?} overlaps the target at shared voxels")]
    TargetOverlap(String),
}

/// Planar end-effector pose; heading in degrees from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta_deg: f64,
}

impl Pose2 {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Gripper footprint: `width` across the fingers, `depth` along the heading.
/// The pose reference point sits at the center of the front face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    #[serde(rename = "w")]
    pub width: f64,
    #[serde(rename = "d")]
    pub depth: f64,
}

impl Gripper {
    pub fn footprint(&self, front: Vec2, heading_deg: f64) -> Polygon {
        let angle = heading_deg.to_radians();
        let center = front - Vec2::from_angle(angle) * (0.5 * self.depth);
        Polygon::oriented_rect(center, 0.5 * self.depth, 0.5 * self.width, angle)
    }

    /// Endpoints of the front face.
    pub fn front_face(&self, front: Vec2, heading_deg: f64) -> (Vec2, Vec2) {
        let lateral = Vec2::from_angle(heading_deg.to_radians()).perp() * (0.5 * self.width);
        (front - lateral, front + lateral)
    }
}

impl Default for Gripper {
    fn default() -> Self {
        Self {
            width: 0.04,
            depth: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub w: f64,
    pub h: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Self { w: 1.0, h: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub name: String,
    pub footprint: Polygon,
    pub height: f64,
    pub is_target: bool,
}

impl SceneObject {
    pub fn position(&self) -> Vec2 {
        self.footprint.centroid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub workspace: Workspace,
    pub resolution: f64,
    pub gripper: Gripper,
    pub start: Pose2,
    pub objects: Vec<SceneObject>,
    /// Annotator-selected objects whose displacement gates success.
    pub unsafe_objects: Vec<String>,
    target: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObjectDoc {
    name: String,
    polygon: Vec<[f64; 2]>,
    height: f64,
    #[serde(default)]
    target: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    workspace: Workspace,
    #[serde(default = "default_resolution")]
    resolution: f64,
    #[serde(default)]
    gripper: Gripper,
    start: Pose2,
    objects: Vec<ObjectDoc>,
    #[serde(default, rename = "unsafe", skip_serializing_if = "Vec::is_empty")]
    unsafe_objects: Vec<String>,
}

fn default_resolution() -> f64 {
    0.01
}

impl Scene {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(
        name: impl Into<String>,
        workspace: Workspace,
        resolution: f64,
        gripper: Gripper,
        start: Pose2,
        objects: Vec<SceneObject>,
        unsafe_objects: Vec<String>,
    ) -> Result<Self, SceneError> {
        if !(resolution > 0.0) {
            return Err(SceneError::BadResolution);
        }
        for extent in [workspace.w, workspace.h] {
            let cells = extent / resolution;
            if !(extent > 0.0) || (cells - cells.round()).abs() > 1e-6 {
                return Err(SceneError::BadResolution);
            }
        }
        if !(gripper.width > 0.0 && gripper.depth > 0.0) {
            return Err(SceneError::BadGripper);
        }
        if !(0.0..=workspace.w).contains(&start.x) || !(0.0..=workspace.h).contains(&start.y) {
            return Err(SceneError::BadStart);
        }
        let mut names = BTreeSet::new();
        for o in &objects {
            if !names.insert(o.name.as_str()) {
                return Err(SceneError::DuplicateName(o.name.clone()));
            }
            if !(o.height > 0.0) {
                return Err(SceneError::BadHeight(o.name.clone()));
            }
            let bb = o.footprint.aabb();
            if bb.min.x < -1e-9 || bb.min.y < -1e-9 || bb.max.x > workspace.w + 1e-9 || bb.max.y > workspace.h + 1e-9 {
                return Err(SceneError::OutsideWorkspace(o.name.clone()));
            }
        }
        let targets: Vec<usize> = objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_target)
            .map(|(i, _)| i)
            .collect();
        if targets.len() != 1 {
            return Err(SceneError::TargetCount(targets.len()));
        }
        for (i, a) in objects.iter().enumerate() {
            for b in objects.iter().skip(i + 1) {
                if !a.is_target && !b.is_target && polygons_overlap(&a.footprint, &b.footprint) {
                    return Err(SceneError::ObjectOverlap(a.name.clone(), b.name.clone()));
                }
            }
        }
        for u in &unsafe_objects {
            if !names.contains(u.as_str()) {
                return Err(SceneError::UnknownUnsafe(u.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            workspace,
            resolution,
            gripper,
            start,
            objects,
            unsafe_objects,
            target: targets[0],
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let doc: SceneDoc = serde_json::from_str(text)?;
        let objects = doc
            .objects
            .into_iter()
            .map(|o| {
                let footprint = Polygon::new(o.polygon.iter().map(|&p| Vec2::from(p)).collect())
                    .map_err(|source| SceneError::Polygon {
                        name: o.name.clone(),
                        source,
                    })?;
                Ok(SceneObject {
                    name: o.name,
                    footprint,
                    height: o.height,
                    is_target: o.target,
                })
            })
            .collect::<Result<Vec<_>, SceneError>>()?;
        Self::new(
            doc.name.unwrap_or_default(),
            doc.workspace,
            doc.resolution,
            doc.gripper,
            doc.start,
            objects,
            doc.unsafe_objects,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut scene = Self::from_json(&text)?;
        if scene.name.is_empty() {
            scene.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        let doc = SceneDoc {
            name: (!self.name.is_empty()).then(|| self.name.clone()),
            workspace: self.workspace,
            resolution: self.resolution,
            gripper: self.gripper,
            start: self.start,
            objects: self
                .objects
                .iter()
                .map(|o| ObjectDoc {
                    name: o.name.clone(),
                    polygon: o.footprint.vertices().iter().map(|v| [v.x, v.y]).collect(),
                    height: o.height,
                    target: o.is_target,
                })
                .collect(),
            unsafe_objects: self.unsafe_objects.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("scene serializes")
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target(&self) -> &SceneObject {
        &self.objects[self.target]
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            nx: (self.workspace.w / self.resolution).round() as usize,
            ny: (self.workspace.h / self.resolution).round() as usize,
            resolution: self.resolution,
        }
    }

    pub fn workspace_polygon(&self) -> Polygon {
        Polygon::rectangle(Vec2::ZERO, Vec2::new(self.workspace.w, self.workspace.h))
            .expect("validated workspace")
    }

    /// Unsafe set for the success rule: the annotated list if present,
    /// otherwise the (at most two) highest-cost objects with cost ≥ 6.
    pub fn unsafe_set(&self, costs: &CostAssignment) -> Vec<String> {
        if !self.unsafe_objects.is_empty() {
            return self.unsafe_objects.clone();
        }
        let mut ranked: Vec<(i32, &str)> = self
            .objects
            .iter()
            .filter(|o| !o.is_target)
            .filter_map(|o| costs.cost(&o.name).map(|c| (c, o.name.as_str())))
            .filter(|(c, _)| *c > LOW_COST_MAX)
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        ranked.into_iter().take(2).map(|(_, n)| n.to_string()).collect()
    }
}

/// What occupies a grid cell or voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellOwner {
    Free,
    Border,
    Object(usize),
}

/// 3D cost grid. Empty voxels are `Free` and read 0.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub grid: GridSpec,
    pub nz: usize,
    values: Vec<f64>,
    owners: Vec<CellOwner>,
}

impl VoxelGrid {
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.grid.ny + j) * self.grid.nx + i
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.grid.nx, self.grid.ny, self.nz)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn owner(&self, i: usize, j: usize, k: usize) -> CellOwner {
        self.owners[self.index(i, j, k)]
    }

    /// Voxel layer containing height `z` (clamped to the grid).
    pub fn layer_of(&self, z: f64) -> usize {
        ((z / self.grid.resolution).floor().max(0.0) as usize).min(self.nz - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Top-down cost map `M` with the object that produced each cell's value.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCostMap {
    pub grid: GridSpec,
    values: Vec<f64>,
    owners: Vec<CellOwner>,
}

impl BaseCostMap {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn owner(&self, i: usize, j: usize) -> CellOwner {
        self.owners[self.grid.index(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn owners(&self) -> &[CellOwner] {
        &self.owners
    }

    /// Cells owned by object `idx`.
    pub fn object_cells(&self, idx: usize) -> Vec<(usize, usize)> {
        self.owners
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == CellOwner::Object(idx))
            .map(|(k, _)| self.grid.coords(k))
            .collect()
    }
}

/// Builds the voxel grid `V`: each object's extruded footprint carries its
/// cost, the target carries −1 and the tabletop border ring carries 10.
pub fn rasterize(scene: &Scene, costs: &CostAssignment) -> Result<VoxelGrid, SceneError> {
    let grid = scene.grid();
    let max_h = scene.objects.iter().map(|o| o.height).fold(0.0, f64::max);
    let nz = ((max_h / scene.resolution) - 1e-9).ceil().max(1.0) as usize;
    let n = grid.len() * nz;
    let mut v = VoxelGrid {
        grid,
        nz,
        values: vec![0.0; n],
        owners: vec![CellOwner::Free; n],
    };
    let object_costs: Vec<f64> = scene
        .objects
        .iter()
        .map(|o| {
            if o.is_target {
                Ok(TARGET_COST)
            } else {
                costs
                    .cost(&o.name)
                    .map(f64::from)
                    .ok_or_else(|| SceneError::MissingCost(o.name.clone()))
            }
        })
        .collect::<Result<_, _>>()?;

    // target first so later overlaps can be detected
    let order = std::iter::once(scene.target_index())
        .chain((0..scene.objects.len()).filter(|&i| i != scene.target_index()));
    for idx in order {
        let obj = &scene.objects[idx];
        let layers = ((obj.height / scene.resolution) - 1e-9).ceil().max(1.0) as usize;
        let cost = object_costs[idx];
        for (i, j) in grid.rasterize(&obj.footprint) {
            for k in 0..layers.min(nz) {
                let at = v.index(i, j, k);
                match v.owners[at] {
                    CellOwner::Object(o) if o == scene.target_index() => {
                        return Err(SceneError::TargetOverlap(obj.name.clone()));
                    }
                    CellOwner::Object(_) if v.values[at] >= cost => {}
                    _ => {
                        v.values[at] = cost;
                        v.owners[at] = CellOwner::Object(idx);
                    }
                }
            }
        }
    }
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny {
                let at = v.index(i, j, 0);
                if v.owners[at] == CellOwner::Free {
                    v.values[at] = BORDER_COST;
                    v.owners[at] = CellOwner::Border;
                }
            }
        }
    }
    Ok(v)
}

/// `M[x,y] = max_z V[x,y,z]` over occupied voxels; empty columns read 0.
pub fn flatten(v: &VoxelGrid) -> BaseCostMap {
    let grid = v.grid;
    let mut values = vec![0.0; grid.len()];
    let mut owners = vec![CellOwner::Free; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let mut best: Option<(f64, CellOwner)> = None;
            for k in 0..v.nz {
                let owner = v.owner(i, j, k);
                if owner == CellOwner::Free {
                    continue;
                }
                let value = v.value(i, j, k);
                if best.is_none_or(|(b, _)| value > b) {
                    best = Some((value, owner));
                }
            }
            if let Some((value, owner)) = best {
                values[grid.index(i, j)] = value;
                owners[grid.index(i, j)] = owner;
            }
        }
    }
    BaseCostMap {
        grid,
        values,
        owners,
    }
}

/// Splits non-target objects into low-cost (≤ 5) and high-cost (≥ 6) names.
pub fn classify_objects(costs: &CostAssignment) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut low = BTreeSet::new();
    let mut high = BTreeSet::new();
    for (name, &cost) in costs.object_costs() {
        if cost <= LOW_COST_MAX {
            low.insert(name.clone());
        } else {
            high.insert(name.clone());
        }
    }
    (low, high)
}
