//! Constraint-driven flocking.
//!
//! Every agent follows double-integrator dynamics and plans the least-energy trajectory over a
//! finite horizon that keeps it clear of every other agent (a hard constraint) and within a
//! fixed radius of its k-nearest neighbors' center (relaxed by a penalized slack). The crate
//! provides the planner, a priority-ordered receding-horizon simulator, closed-form motion
//! primitives used to validate the planner, and flock-level metrics.

pub mod config;
pub mod constraints;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod neighborhood;
pub mod planner;
pub mod primitives;
pub mod simulator;
pub mod state;

pub use config::{AgentOverride, AgentParams, FlockConfig};
pub use error::{FlockError, Result};
pub use metrics::RunReport;
pub use neighborhood::{NeighborhoodSnapshot, SwitchEvent};
pub use planner::{plan, PlanProblem, PlanSolution, Trajectory};
pub use simulator::{run, ScenarioSpec, SimulationLog, TopologyMode};
pub use state::{AgentId, BoidState, Vec2};
