//! Run configuration loaded from TOML.
//!
//! ```toml
//! [costmap]
//! alpha = 0.5
//! samples_m = 32
//!
//! [planner]
//! rotation_step_deg = 15.0
//!
//! [rrt]
//! max_iterations = 5000
//!
//! [sim]
//! step_dt = 0.05
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::SampledPlannerConfig;
use crate::costmap::CostMapConfig;
use crate::planner::PlannerParams;
use crate::semantics::VlmConfig;
use crate::sim::SimConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub costmap: CostMapConfig,
    pub planner: PlannerParams,
    pub rrt: SampledPlannerConfig,
    pub sim: SimConfig,
    pub vlm: VlmConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let c = &self.costmap;
        if !(c.alpha > 0.0 && c.alpha < 1.0) {
            return bad("costmap.alpha must lie in (0, 1)");
        }
        if c.samples_m == 0 {
            return bad("costmap.samples_m must be at least 1");
        }
        if c.sigma_delta <= 0.0 || c.sigma_theta <= 0.0 {
            return bad("costmap sigmas must be positive");
        }
        if c.delta_range_mm[0] > c.delta_range_mm[1] || c.theta_range_deg[0] > c.theta_range_deg[1] {
            return bad("costmap sample ranges must be ordered");
        }
        let p = &self.planner;
        if [p.lambda_move, p.lambda_rotate, p.lambda_push, p.lambda_safety].iter().any(|&l| l < 0.0) {
            return bad("planner lambdas must be nonnegative");
        }
        if p.push.max_displacement <= 0.0 || p.push.gamma <= 0.0 {
            return bad("planner.push parameters must be positive");
        }
        let r = &self.rrt;
        if r.step_size <= 0.0 {
            return bad("rrt.step_size must be positive");
        }
        if !(0.0..1.0).contains(&r.goal_bias) {
            return bad("rrt.goal_bias must lie in [0, 1)");
        }
        let s = &self.sim;
        if s.step_dt <= 0.0 || s.speed <= 0.0 {
            return bad("sim.step_dt and sim.speed must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml("[costmap]\nalpha = 0.25\n[planner]\nallow_rotation = false\n").unwrap();
        assert_eq!(c.costmap.alpha, 0.25);
        assert_eq!(c.costmap.samples_m, 32);
        assert!(!c.planner.allow_rotation);
        assert_eq!(c.planner.lambda_push, 8.0);
        assert_eq!(c.sim, SimConfig::default());
    }

    #[test]
    fn round_trip_and_validation() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
        assert!(Config::from_toml("[costmap]\nalpha = 1.0\n").is_err());
        assert!(Config::from_toml("[rrt]\ngoal_bias = 1.0\n").is_err());
        assert!(Config::from_toml("[bogus]\n").is_err());
    }
}
