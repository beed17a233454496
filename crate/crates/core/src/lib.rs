//! Contact-aware tabletop motion planning on semantic cost maps.

pub mod baselines;
pub mod bench;
pub mod config;
pub mod costmap;
pub mod geometry;
pub mod planner;
pub mod render;
pub mod scene;
pub mod semantics;
pub mod sim;
pub mod world;

pub use costmap::{build_anisotropic, AnisotropicCostMap, CostMapConfig};
pub use planner::{plan, PlanError, PlanMode, Planner, PlannerParams, Trajectory};
pub use scene::{flatten, rasterize, BaseCostMap, Scene, VoxelGrid};
pub use semantics::CostAssignment;
pub use sim::{execute, ExecutionReport, SimConfig};
