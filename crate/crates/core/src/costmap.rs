//! Anisotropic cost map `M′`.
//!
//! Every boundary cell of a low-cost object gets a directional safety score
//! from Monte-Carlo push outcomes around its reverse surface normal:
//!
//! ```text
//! l_i  = exp(-((δ_i/σ_δ)² + (θ_i/σ_θ)²))
//! f_s  = Σ l_i·u_i / Σ l_i
//! M′   = α·M + (1-α)·(10 - 10·f_s)
//! ```
//!
//! where `u_i` is the fixed score of the outcome category. Cells off the
//! boundary of a low-cost object copy `M`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GridSpec, Vec2};
use crate::scene::{BaseCostMap, CellOwner, Scene};
use crate::semantics::CostAssignment;
use crate::world::{ObjectClass, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostMapError {
    #[error("object {0:?} is thinner than one cell")]
    DegenerateObject(String),
    #[error("safety score needs at least one sample")]
    EmptySamples,
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("samples_m must be at least 1")]
    BadSampleCount,
}

/// Outcome class of a hypothesized push.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushCategory {
    Safe,
    LowContact,
    HighContact,
    TargetContact,
}

impl PushCategory {
    pub fn score(self) -> f64 {
        match self {
            PushCategory::Safe => 1.0,
            PushCategory::LowContact => 0.6,
            PushCategory::HighContact => 0.1,
            PushCategory::TargetContact => 0.025,
        }
    }
}

/// Translational push model `d = D·cos(φ)^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PushModel {
    /// Displacement for a push straight along the reverse normal (m).
    pub max_displacement: f64,
    pub gamma: f64,
}

impl Default for PushModel {
    fn default() -> Self {
        Self {
            max_displacement: 0.05,
            gamma: 1.3,
        }
    }
}

impl PushModel {
    /// Displacement for angular deviation `phi` (radians) from the inward
    /// normal. `None` for |φ| ≥ 90°.
    pub fn displacement(&self, phi: f64) -> Option<f64> {
        let c = phi.cos();
        (c > 1e-12 && phi.abs() < std::f64::consts::FRAC_PI_2).then(|| self.max_displacement * c.powf(self.gamma))
    }
}

/// `exp(-((δ/σ_δ)² + (θ/σ_θ)²))`.
pub fn likelihood(delta: f64, theta: f64, sigma_delta: f64, sigma_theta: f64) -> f64 {
    let a = delta / sigma_delta;
    let b = theta / sigma_theta;
    (-(a * a + b * b)).exp()
}

/// `α·M + (1−α)·(10 − 10·f_s)`.
pub fn blend(alpha: f64, base: f64, safety: f64) -> f64 {
    alpha * base + (1.0 - alpha) * (10.0 - 10.0 * safety)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushSample {
    /// Push distance variation (mm).
    pub delta: f64,
    /// Angular deviation from the reverse normal (degrees).
    pub theta: f64,
    pub likelihood: f64,
    pub category: Option<PushCategory>,
}

impl PushSample {
    pub fn score(&self) -> Option<f64> {
        self.category.map(PushCategory::score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostMapConfig {
    pub alpha: f64,
    pub samples_m: usize,
    pub sigma_delta: f64,
    pub sigma_theta: f64,
    pub delta_range_mm: [f64; 2],
    pub theta_range_deg: [f64; 2],
    pub seed: u64,
    pub push: PushModel,
}

impl Default for CostMapConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            samples_m: 32,
            sigma_delta: 33.0,
            sigma_theta: 25.0,
            delta_range_mm: [20.0, 50.0],
            theta_range_deg: [-25.0, 25.0],
            seed: 0,
            push: PushModel::default(),
        }
    }
}

/// A boundary cell and its unit inward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNormal {
    pub cell: (usize, usize),
    pub normal: Vec2,
}

/// Boundary cells of object `idx` (cells with a 4-neighbor outside the
/// object) with inward normals from the 3×3 Sobel gradient of occupancy.
pub fn boundary_normals(map: &BaseCostMap, idx: usize, name: &str) -> Result<Vec<BoundaryNormal>, CostMapError> {
    let grid = map.grid;
    let occupied = |i: i64, j: i64| -> i32 {
        (grid.in_bounds(i, j) && map.owner(i as usize, j as usize) == CellOwner::Object(idx)) as i32
    };
    let cells = map.object_cells(idx);
    if cells.len() < 2 {
        return Err(CostMapError::DegenerateObject(name.to_string()));
    }
    let mut out = Vec::new();
    for (i, j) in cells {
        let (x, y) = (i as i64, j as i64);
        let on_boundary = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .any(|(dx, dy)| occupied(x + dx, y + dy) == 0);
        if !on_boundary {
            continue;
        }
        let gx = (occupied(x + 1, y - 1) + 2 * occupied(x + 1, y) + occupied(x + 1, y + 1))
            - (occupied(x - 1, y - 1) + 2 * occupied(x - 1, y) + occupied(x - 1, y + 1));
        let gy = (occupied(x - 1, y + 1) + 2 * occupied(x, y + 1) + occupied(x + 1, y + 1))
            - (occupied(x - 1, y - 1) + 2 * occupied(x, y - 1) + occupied(x + 1, y - 1));
        let normal = Vec2::new(gx as f64, gy as f64)
            .normalized()
            .ok_or_else(|| CostMapError::DegenerateObject(name.to_string()))?;
        out.push(BoundaryNormal { cell: (i, j), normal });
    }
    Ok(out)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell RNG seed derived from the global seed and the cell index.
pub fn cell_seed(seed: u64, cell_index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(cell_index as u64))
}

/// Draws `m` push variations with likelihoods; categories left unset.
pub fn sample_pushes(config: &CostMapConfig, rng_seed: u64, m: usize) -> Vec<PushSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let [d0, d1] = config.delta_range_mm;
    let [t0, t1] = config.theta_range_deg;
    (0..m)
        .map(|_| {
            let delta = rng.random_range(d0..=d1);
            let theta = rng.random_range(t0..=t1);
            PushSample {
                delta,
                theta,
                likelihood: likelihood(delta, theta, config.sigma_delta, config.sigma_theta),
                category: None,
            }
        })
        .collect()
}

/// Worst overlap of object `idx` after translating it by `push`:
/// target beats high-cost beats low-cost beats nothing.
pub fn classify_push(world: &World, idx: usize, push: Vec2) -> PushCategory {
    let moved = world.footprint(idx).translated(push);
    world
        .overlapping(&moved, Some(idx))
        .into_iter()
        .map(|j| match world.class(j) {
            ObjectClass::Target => PushCategory::TargetContact,
            ObjectClass::High => PushCategory::HighContact,
            ObjectClass::Low => PushCategory::LowContact,
        })
        .max()
        .unwrap_or(PushCategory::Safe)
}

/// Likelihood-weighted mean of outcome scores.
pub fn safety_score(samples: &[PushSample]) -> Result<f64, CostMapError> {
    if samples.is_empty() {
        return Err(CostMapError::EmptySamples);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples {
        let u = s.score().unwrap_or(PushCategory::Safe.score());
        num += s.likelihood * u;
        den += s.likelihood;
    }
    Ok(num / den)
}

/// Boundary cell of a pushable object with its directional data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub cell: (usize, usize),
    pub object: usize,
    pub normal: Vec2,
    /// `f_s`, absent on isotropic maps.
    pub safety: Option<f64>,
    pub value: f64,
}

/// 2D cost map with per-boundary-cell push data.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicCostMap {
    pub grid: GridSpec,
    values: Vec<f64>,
    base: Vec<f64>,
    records: Vec<BoundaryRecord>,
    by_object: BTreeMap<usize, Vec<usize>>,
    cell_record: Vec<Option<u32>>,
}

impl AnisotropicCostMap {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn base_value(&self, i: usize, j: usize) -> f64 {
        self.base[self.grid.index(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn records(&self) -> &[BoundaryRecord] {
        &self.records
    }

    pub fn record_at(&self, i: usize, j: usize) -> Option<&BoundaryRecord> {
        self.cell_record[self.grid.index(i, j)].map(|k| &self.records[k as usize])
    }

    /// Boundary records of one object.
    pub fn object_records(&self, idx: usize) -> impl Iterator<Item = &BoundaryRecord> {
        self.by_object
            .get(&idx)
            .into_iter()
            .flat_map(move |v| v.iter().map(move |&k| &self.records[k]))
    }

    /// Record of object `idx` whose cell center is closest to `p`, with `p`
    /// expressed in the object's initial frame.
    pub fn nearest_record(&self, idx: usize, p: Vec2) -> Option<&BoundaryRecord> {
        self.object_records(idx).min_by(|a, b| {
            let da = self.grid.cell_center(a.cell.0, a.cell.1).distance(p);
            let db = self.grid.cell_center(b.cell.0, b.cell.1).distance(p);
            da.total_cmp(&db).then(a.cell.cmp(&b.cell))
        })
    }

    fn assemble(base: &BaseCostMap, records: Vec<BoundaryRecord>) -> Self {
        let grid = base.grid;
        let mut values = base.values().to_vec();
        let mut by_object: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut cell_record = vec![None; grid.len()];
        for (k, r) in records.iter().enumerate() {
            let at = grid.index(r.cell.0, r.cell.1);
            values[at] = r.value;
            cell_record[at] = Some(k as u32);
            by_object.entry(r.object).or_default().push(k);
        }
        Self {
            grid,
            values,
            base: base.values().to_vec(),
            records,
            by_object,
            cell_record,
        }
    }

    /// Same boundary normals but every value copied from `M`; used by the
    /// planner variant without directional analysis.
    pub fn isotropic(base: &BaseCostMap, scene: &Scene, costs: &CostAssignment) -> Result<Self, CostMapError> {
        let world = World::new(scene, costs);
        let mut records = Vec::new();
        for idx in world.indices_of(ObjectClass::Low).collect::<Vec<_>>() {
            for bn in boundary_normals(base, idx, world.name(idx))? {
                records.push(BoundaryRecord {
                    cell: bn.cell,
                    object: idx,
                    normal: bn.normal,
                    safety: None,
                    value: base.value(bn.cell.0, bn.cell.1),
                });
            }
        }
        Ok(Self::assemble(base, records))
    }
}

/// Scores every boundary cell of every low-cost object and blends the
/// result into `M`. Output is independent of thread count.
pub fn build_anisotropic(
    base: &BaseCostMap,
    scene: &Scene,
    costs: &CostAssignment,
    config: &CostMapConfig,
) -> Result<AnisotropicCostMap, CostMapError> {
    if !(config.alpha > 0.0 && config.alpha <= 1.0) {
        return Err(CostMapError::BadAlpha(config.alpha));
    }
    if config.samples_m == 0 {
        return Err(CostMapError::BadSampleCount);
    }
    let world = World::new(scene, costs);
    let mut jobs: Vec<(usize, BoundaryNormal)> = Vec::new();
    for idx in world.indices_of(ObjectClass::Low).collect::<Vec<_>>() {
        for bn in boundary_normals(base, idx, world.name(idx))? {
            jobs.push((idx, bn));
        }
    }
    let grid = base.grid;
    let records: Vec<BoundaryRecord> = jobs
        .par_iter()
        .map(|&(idx, bn)| {
            let seed = cell_seed(config.seed, grid.index(bn.cell.0, bn.cell.1));
            let mut samples = sample_pushes(config, seed, config.samples_m);
            for s in &mut samples {
                let theta = s.theta.to_radians();
                let magnitude = config.push.displacement(theta).unwrap_or(0.0);
                let push = bn.normal.rotated(theta) * magnitude;
                s.category = Some(classify_push(&world, idx, push));
            }
            let safety = safety_score(&samples).expect("samples_m >= 1");
            let m = base.value(bn.cell.0, bn.cell.1);
            BoundaryRecord {
                cell: bn.cell,
                object: idx,
                normal: bn.normal,
                safety: Some(safety),
                value: blend(config.alpha, m, safety),
            }
        })
        .collect();
    Ok(AnisotropicCostMap::assemble(base, records))
}
