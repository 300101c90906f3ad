//! System parameters shared by all agents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::state::AgentId;

/// Per-agent parameters that may differ from the flock-wide defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
}

/// Resolved parameters for a single agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    pub alpha: f64,
    pub v_max: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlockConfig {
    /// Number of agents N.
    pub n_agents: usize,
    /// Neighborhood size.
    pub k: usize,
    /// Body radius R; agents must stay at least 2R apart.
    pub body_radius: f64,
    /// Flocking radius D around the neighborhood center.
    pub flock_radius: f64,
    /// Slack weight in the planning objective.
    pub alpha: f64,
    pub v_max: f64,
    pub u_max: f64,
    /// Planning horizon length.
    pub horizon: f64,
    /// Number of piecewise-constant control intervals over the horizon.
    pub plan_steps: usize,
    pub sim_dt: f64,
    pub replan_interval: f64,
    pub total_time: f64,
    pub seed: u64,
    /// Agents closer than this are included in each other's collision constraints
    /// even when they are not k-nearest neighbors. Defaults to `2R + 2 v_max horizon`.
    pub safety_range: Option<f64>,
    pub overrides: BTreeMap<AgentId, AgentOverride>,
}

impl FlockConfig {
    /// Step length of the planning grid.
    pub fn plan_dt(&self) -> f64 {
        self.horizon / self.plan_steps as f64
    }

    pub fn n_sim_steps(&self) -> usize {
        (self.total_time / self.sim_dt).round() as usize
    }

    /// Squared-distance tolerance for the hard safety check, `1e-6 (2R)²`.
    pub fn safety_tolerance(&self) -> f64 {
        1e-6 * (2.0 * self.body_radius).powi(2)
    }

    pub fn agent_params(&self, agent: AgentId) -> AgentParams {
        let ov = self.overrides.get(&agent).copied().unwrap_or_default();
        AgentParams {
            alpha: ov.alpha.unwrap_or(self.alpha),
            v_max: ov.v_max.unwrap_or(self.v_max),
            u_max: ov.u_max.unwrap_or(self.u_max),
        }
    }

    pub fn effective_safety_range(&self) -> f64 {
        self.safety_range.unwrap_or_else(|| {
            let fastest = self
                .overrides
                .values()
                .filter_map(|o| o.v_max)
                .fold(self.v_max, f64::max);
            2.0 * self.body_radius + 2.0 * fastest * self.horizon
        })
    }

    /// Checks every invariant, reporting the first offending key.
    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(FlockError::config(
                    key,
                    format!("must be a positive finite number, got {v}"),
                ));
            }
            Ok(())
        }

        if self.n_agents < 2 {
            return Err(FlockError::config(
                "n_agents",
                "at least two agents are required",
            ));
        }
        if self.k == 0 {
            return Err(FlockError::config(
                "k",
                "neighborhood size must be at least 1",
            ));
        }
        if self.k >= self.n_agents {
            return Err(FlockError::config(
                "k",
                format!(
                    "neighborhood size {} must be below n_agents = {}",
                    self.k, self.n_agents
                ),
            ));
        }
        positive("body_radius", self.body_radius)?;
        positive("flock_radius", self.flock_radius)?;
        if self.flock_radius <= 2.0 * self.body_radius {
            return Err(FlockError::config(
                "flock_radius",
                "must exceed twice the body radius",
            ));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(FlockError::config(
                "alpha",
                "must be a nonnegative finite number",
            ));
        }
        positive("v_max", self.v_max)?;
        positive("u_max", self.u_max)?;
        positive("horizon", self.horizon)?;
        if self.plan_steps == 0 {
            return Err(FlockError::config("plan_steps", "must be at least 1"));
        }
        positive("sim_dt", self.sim_dt)?;
        positive("replan_interval", self.replan_interval)?;
        positive("total_time", self.total_time)?;
        let eps = 1e-12 * self.horizon.max(1.0);
        if self.sim_dt > self.replan_interval + eps {
            return Err(FlockError::config(
                "sim_dt",
                "must not exceed replan_interval",
            ));
        }
        if self.replan_interval > self.horizon + eps {
            return Err(FlockError::config(
                "replan_interval",
                "must not exceed horizon",
            ));
        }
        if let Some(r) = self.safety_range {
            positive("safety_range", r)?;
        }
        for (&id, ov) in &self.overrides {
            if id >= self.n_agents {
                return Err(FlockError::config(
                    format!("overrides.{id}"),
                    format!("agent id out of range 0..{}", self.n_agents),
                ));
            }
            if let Some(a) = ov.alpha {
                if !a.is_finite() || a < 0.0 {
                    return Err(FlockError::config(
                        format!("overrides.{id}.alpha"),
                        "must be nonnegative",
                    ));
                }
            }
            if let Some(v) = ov.v_max {
                positive(&format!("overrides.{id}.v_max"), v)?;
            }
            if let Some(u) = ov.u_max {
                positive(&format!("overrides.{id}.u_max"), u)?;
            }
        }
        Ok(())
    }

    /// Settings that are valid but likely to give misleading results.
    pub fn advisories(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let ratio = self.plan_dt() / self.sim_dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            notes.push(format!(
                "plan_dt = {} is not a multiple of sim_dt = {}; realized motion will deviate from plans",
                self.plan_dt(),
                self.sim_dt
            ));
        }
        if self.v_max * self.plan_dt() > self.body_radius {
            notes.push(format!(
                "v_max * plan_dt = {} exceeds the body radius; collisions between knots may go unseen",
                self.v_max * self.plan_dt()
            ));
        }
        notes
    }
}

#[cfg(test)]
pub(crate) fn test_config() -> FlockConfig {
    FlockConfig {
        n_agents: 5,
        k: 4,
        body_radius: 0.1,
        flock_radius: 2.0,
        alpha: 1.0,
        v_max: 2.0,
        u_max: 2.0,
        horizon: 2.0,
        plan_steps: 20,
        sim_dt: 0.1,
        replan_interval: 0.5,
        total_time: 10.0,
        seed: 1,
        safety_range: None,
        overrides: BTreeMap::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: FlockError) -> String {
        match err {
            FlockError::Config { key, .. } => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn default_is_valid() {
        test_config().validate().unwrap();
    }

    #[test]
    fn names_offending_key() {
        let mut c = test_config();
        c.k = 5;
        assert_eq!(key_of(c.validate().unwrap_err()), "k");

        let mut c = test_config();
        c.flock_radius = 0.2;
        assert_eq!(key_of(c.validate().unwrap_err()), "flock_radius");

        let mut c = test_config();
        c.replan_interval = 3.0;
        assert_eq!(key_of(c.validate().unwrap_err()), "replan_interval");

        let mut c = test_config();
        c.sim_dt = 1.0;
        assert_eq!(key_of(c.validate().unwrap_err()), "sim_dt");

        let mut c = test_config();
        c.overrides.insert(9, AgentOverride::default());
        assert_eq!(key_of(c.validate().unwrap_err()), "overrides.9");
    }

    #[test]
    fn advisories_flag_coarse_knots() {
        let mut c = test_config();
        c.v_max = c.body_radius / c.plan_dt() * 0.5;
        assert!(c.advisories().is_empty());
        c.v_max *= 4.0;
        let notes = c.advisories();
        assert_eq!(notes.len(), 1);
        assert!(notes[0].contains("body radius"));
        c.sim_dt = c.plan_dt() * 0.3;
        assert!(c.advisories().iter().any(|n| n.contains("not a multiple")));
    }

    #[test]
    fn overrides_resolve() {
        let mut c = test_config();
        c.overrides.insert(
            2,
            AgentOverride {
                alpha: Some(10.0),
                ..Default::default()
            },
        );
        assert_eq!(c.agent_params(2).alpha, 10.0);
        assert_eq!(c.agent_params(2).u_max, c.u_max);
        assert_eq!(c.agent_params(1).alpha, 1.0);
    }
}
