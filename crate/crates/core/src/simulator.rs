//! Receding-horizon execution of the whole flock.
//!
//! Each step recomputes neighborhoods, lets agents whose neighborhood switched or whose replan
//! timer elapsed plan again in ascending id order, applies the committed controls and advances
//! every agent exactly.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::FlockConfig;
use crate::constraints::ConstraintReport;
use crate::error::{FlockError, Result};
use crate::neighborhood::{self, NeighborhoodSnapshot, SwitchEvent, SYMMETRY_TOL};
use crate::planner::{plan_with, PlanProblem, PlanSolution, PlannerSettings, Trajectory};
use crate::state::{integrate_step, AgentId, BoidState, Vec2};

/// Attempts made by the random placement generator before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyMode {
    /// Neighbor sets are recomputed from positions every step.
    DynamicKnn,
    /// Neighbor sets are frozen at `t = 0`.
    Fixed,
}

impl fmt::Display for TopologyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyMode::DynamicKnn => "dynamic-knn",
            TopologyMode::Fixed => "fixed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementKind {
    /// Square lattice of side `region` centered at the origin.
    Grid,
    /// Uniform in the disk of radius `region` around the origin.
    UniformDisk,
}

/// Random initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub kind: PlacementKind,
    pub region: f64,
    /// Velocities are drawn uniformly from the disk of this radius around `base_velocity`.
    pub speed_max: f64,
    #[serde(default)]
    pub base_velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConditions {
    Explicit(Vec<BoidState>),
    Generated(Placement),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub config: FlockConfig,
    pub initial: InitialConditions,
    pub topology_mode: TopologyMode,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        match &self.initial {
            InitialConditions::Explicit(states) => {
                if states.len() != self.config.n_agents {
                    return Err(FlockError::config(
                        "initial_states",
                        format!(
                            "{} states given for {} agents",
                            states.len(),
                            self.config.n_agents
                        ),
                    ));
                }
                if states.iter().any(|s| !s.is_finite()) {
                    return Err(FlockError::config("initial_states", "non-finite value"));
                }
            }
            InitialConditions::Generated(p) => {
                if !(p.region.is_finite() && p.region > 0.0) {
                    return Err(FlockError::config(
                        "placement.region",
                        "must be a positive finite number",
                    ));
                }
                if !(p.speed_max.is_finite() && p.speed_max >= 0.0) {
                    return Err(FlockError::config(
                        "placement.speed_max",
                        "must be a nonnegative finite number",
                    ));
                }
                if !p.base_velocity.is_finite() {
                    return Err(FlockError::config(
                        "placement.base_velocity",
                        "non-finite value",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Resolves the initial states, drawing them from the seed if they are generated.
    ///
    /// Explicit states are returned as given, even if they overlap; the run reports it.
    pub fn initial_states(&self) -> Result<Vec<BoidState>> {
        match &self.initial {
            InitialConditions::Explicit(states) => Ok(states.clone()),
            InitialConditions::Generated(p) => generate_states(p, &self.config),
        }
    }
}

fn sample_disk(rng: &mut ChaCha8Rng, radius: f64) -> Vec2 {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    Vec2::new(r * theta.cos(), r * theta.sin())
}

fn separated(positions: &[Vec2], body_radius: f64) -> bool {
    let min_sq = 4.0 * body_radius * body_radius;
    positions.iter().enumerate().all(|(i, &p)| {
        positions[i + 1..]
            .iter()
            .all(|&q| (p - q).norm_sq() > min_sq)
    })
}

fn generate_states(p: &Placement, cfg: &FlockConfig) -> Result<Vec<BoidState>> {
    let n = cfg.n_agents;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let positions: Vec<Vec2> = match p.kind {
            PlacementKind::Grid => {
                let side = (n as f64).sqrt().ceil() as usize;
                let spacing = if side > 1 {
                    p.region / (side - 1) as f64
                } else {
                    0.0
                };
                let offset = 0.5 * p.region;
                (0..n)
                    .map(|i| {
                        Vec2::new(
                            (i % side) as f64 * spacing - offset,
                            (i / side) as f64 * spacing - offset,
                        )
                    })
                    .collect()
            }
            PlacementKind::UniformDisk => (0..n).map(|_| sample_disk(&mut rng, p.region)).collect(),
        };
        if !separated(&positions, cfg.body_radius) {
            if p.kind == PlacementKind::Grid {
                break;
            }
            continue;
        }
        return Ok(positions
            .into_iter()
            .map(|pos| BoidState::new(pos, p.base_velocity + sample_disk(&mut rng, p.speed_max)))
            .collect());
    }
    Err(FlockError::config(
        "placement",
        format!("no configuration with all agents more than 2R apart after {MAX_PLACEMENT_ATTEMPTS} attempts"),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplanCause {
    Initial,
    Switch,
    Periodic,
}

impl fmt::Display for ReplanCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReplanCause::Initial => "initial",
            ReplanCause::Switch => "switch",
            ReplanCause::Periodic => "periodic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanEvent {
    pub time: f64,
    pub agent: AgentId,
    pub cause: ReplanCause,
    pub converged: bool,
    /// Whether the new plan was committed; a failed solve keeps the previous plan.
    pub committed: bool,
    pub cost: f64,
}

/// Realized constraint quantities of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentDiagnostics {
    /// Task residual against the current neighborhood center.
    pub g: f64,
    /// Smallest slack that would satisfy the relaxed task constraint, `max(0, g)`.
    pub eta_sq: f64,
    /// Smallest safety margin against any other agent.
    pub min_safety: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSummary {
    pub min_safety_margin: f64,
    pub max_task_residual: f64,
    pub max_slack: f64,
}

/// A logged instant at which two agents were closer than `2R` beyond tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyFailure {
    pub time: f64,
    pub pair: (AgentId, AgentId),
    pub margin: f64,
}

/// Complete history of a run. Index `s` of every per-step sequence refers to `times[s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    pub config: FlockConfig,
    pub topology_mode: TopologyMode,
    pub times: Vec<f64>,
    pub states: Vec<Vec<BoidState>>,
    /// Control applied over `[times[s], times[s] + sim_dt)`; the last row is what the committed
    /// plans would apply next.
    pub applied_controls: Vec<Vec<Vec2>>,
    pub neighbors: Vec<Vec<Vec<AgentId>>>,
    pub switch_events: Vec<SwitchEvent>,
    pub replan_events: Vec<ReplanEvent>,
    pub constraint_history: Vec<ConstraintSummary>,
    pub diagnostics: Vec<Vec<AgentDiagnostics>>,
    pub safety_failures: Vec<SafetyFailure>,
}

impl SimulationLog {
    pub fn n_agents(&self) -> usize {
        self.config.n_agents
    }

    /// Replans whose solve did not converge.
    pub fn degraded_plans(&self) -> impl Iterator<Item = &ReplanEvent> {
        self.replan_events.iter().filter(|e| !e.converged)
    }

    /// Neighborhood center position and velocity of `agent` at step `s`.
    pub fn center_at(&self, s: usize, agent: AgentId) -> Result<(Vec2, Vec2)> {
        neighborhood::center(&self.states[s], &self.neighbors[s][agent])
    }
}

/// Latest committed trajectory of every agent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRegistry {
    plans: BTreeMap<AgentId, (f64, Trajectory)>,
}

impl TrajectoryRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `trajectory` as the agent's plan from `time` on, replacing any earlier one.
    pub fn commit(&mut self, agent: AgentId, time: f64, trajectory: Trajectory) {
        self.plans.insert(agent, (time, trajectory));
    }

    pub fn committed(&self, agent: AgentId) -> Option<&Trajectory> {
        self.plans.get(&agent).map(|(_, tr)| tr)
    }

    pub fn commit_time(&self, agent: AgentId) -> Option<f64> {
        self.plans.get(&agent).map(|(t, _)| *t)
    }

    /// The committed plan, or a coasting trajectory from `current` when none exists.
    pub fn read(
        &self,
        agent: AgentId,
        current: BoidState,
        time: f64,
        cfg: &FlockConfig,
    ) -> Trajectory {
        match self.committed(agent) {
            Some(tr) => tr.clone(),
            None => Trajectory::ballistic(time, cfg.plan_dt(), current, cfg.plan_steps),
        }
    }
}

/// Stores a solved plan in the registry.
pub fn commit_plan(agent: AgentId, solution: &PlanSolution, registry: &mut TrajectoryRegistry) {
    registry.commit(agent, solution.trajectory.t0, solution.trajectory.clone());
}

/// Whether all pairwise velocity differences are within `tol`.
pub fn detect_consensus(states: &[BoidState], tol: f64) -> bool {
    states.iter().enumerate().all(|(i, a)| {
        states[i + 1..]
            .iter()
            .all(|b| (a.velocity - b.velocity).norm() <= tol)
    })
}

/// Runs a scenario with the default planner settings.
pub fn run(spec: &ScenarioSpec) -> Result<SimulationLog> {
    run_with(spec, &PlannerSettings::default())
}

pub fn run_with(spec: &ScenarioSpec, settings: &PlannerSettings) -> Result<SimulationLog> {
    spec.validate()?;
    for note in spec.config.advisories() {
        log::warn!("{note}");
    }
    let cfg = &spec.config;
    let n = cfg.n_agents;
    let dt = cfg.sim_dt;
    let n_steps = cfg.n_sim_steps();
    let tol_hard = cfg.safety_tolerance();
    let range_sq = cfg.effective_safety_range().powi(2);
    // Timer comparisons tolerate accumulated rounding in step times.
    let timer_eps = 1e-9 * dt;

    let mut states = spec.initial_states()?;
    let frozen = match spec.topology_mode {
        TopologyMode::Fixed => {
            let positions: Vec<Vec2> = states.iter().map(|s| s.position).collect();
            let sets = neighborhood::all_knn(&positions, cfg.k)?;
            if !neighborhood::is_connected(&sets) {
                return Err(FlockError::config(
                    "topology_mode",
                    "frozen neighbor graph is not connected",
                ));
            }
            Some(sets)
        }
        TopologyMode::DynamicKnn => None,
    };

    let mut log = SimulationLog {
        config: cfg.clone(),
        topology_mode: spec.topology_mode,
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        applied_controls: Vec::with_capacity(n_steps + 1),
        neighbors: Vec::with_capacity(n_steps + 1),
        switch_events: Vec::new(),
        replan_events: Vec::new(),
        constraint_history: Vec::with_capacity(n_steps + 1),
        diagnostics: Vec::with_capacity(n_steps + 1),
        safety_failures: Vec::new(),
    };
    let mut registry = TrajectoryRegistry::new();
    let mut last_plan_time: Vec<Option<f64>> = vec![None; n];
    let mut controls = vec![Vec2::ZERO; n];
    let mut prev: Option<Vec<NeighborhoodSnapshot>> = None;

    for s in 0..=n_steps {
        let t = s as f64 * dt;
        let sets = match &frozen {
            Some(sets) => sets.clone(),
            None => {
                let positions: Vec<Vec2> = states.iter().map(|st| st.position).collect();
                neighborhood::all_knn(&positions, cfg.k)?
            }
        };
        let snapshots = sets
            .iter()
            .enumerate()
            .map(|(i, m)| NeighborhoodSnapshot::build(i, m.clone(), &states, &controls))
            .collect::<Result<Vec<_>>>()?;

        let mut switched = vec![false; n];
        if let Some(prev) = &prev {
            for (before, after) in prev.iter().zip(&snapshots) {
                if let Some(mut event) = neighborhood::detect_switch(before, after, t)? {
                    event.symmetric =
                        neighborhood::is_symmetric_switch(&event, &states, SYMMETRY_TOL);
                    log::debug!(
                        "t={t:.3}: agent {} switched {:?} -> {:?}",
                        event.agent,
                        event.removed,
                        event.added
                    );
                    switched[event.agent] = true;
                    log.switch_events.push(event);
                }
            }
        }

        for i in 0..n {
            let cause = match last_plan_time[i] {
                None => Some(ReplanCause::Initial),
                Some(_) if switched[i] => Some(ReplanCause::Switch),
                Some(last) if t - last >= cfg.replan_interval - timer_eps => {
                    Some(ReplanCause::Periodic)
                }
                Some(_) => None,
            };
            let Some(cause) = cause else { continue };
            let problem = build_problem(i, t, &states, &sets[i], &registry, cfg, range_sq);
            let warm = registry.committed(i).cloned();
            let solution = plan_with(&problem, warm.as_ref(), settings)?;
            let committed = solution.converged || registry.committed(i).is_none();
            if committed {
                commit_plan(i, &solution, &mut registry);
            }
            if solution.converged {
                last_plan_time[i] = Some(t);
            } else {
                log::warn!(
                    "t={t:.3}: plan for agent {i} did not converge (safety violation {:.3e}); {}",
                    solution.max_safety_violation,
                    if committed {
                        "committing best iterate"
                    } else {
                        "keeping previous plan"
                    }
                );
                last_plan_time[i].get_or_insert(t);
            }
            log.replan_events.push(ReplanEvent {
                time: t,
                agent: i,
                cause,
                converged: solution.converged,
                committed,
                cost: solution.cost,
            });
        }

        for (i, u) in controls.iter_mut().enumerate() {
            *u = registry.read(i, states[i], t, cfg).control_at(t);
        }

        let report = ConstraintReport::evaluate(&states, &sets, cfg.body_radius, cfg.flock_radius);
        for (&pair, &margin) in &report.safety_margins {
            if margin < -tol_hard {
                log.safety_failures.push(SafetyFailure {
                    time: t,
                    pair,
                    margin,
                });
            }
        }
        log.diagnostics.push(
            (0..n)
                .map(|i| {
                    let g = report
                        .task_residuals
                        .get(&i)
                        .copied()
                        .unwrap_or(f64::NEG_INFINITY);
                    AgentDiagnostics {
                        g,
                        eta_sq: g.max(0.0),
                        min_safety: report.min_margin_of(i),
                    }
                })
                .collect(),
        );
        log.constraint_history.push(ConstraintSummary {
            min_safety_margin: report.min_safety_margin(),
            max_task_residual: report.max_task_residual(),
            max_slack: report.max_slack(),
        });
        log.times.push(t);
        log.states.push(states.clone());
        log.applied_controls.push(controls.clone());
        log.neighbors.push(sets);
        prev = Some(snapshots);

        if s < n_steps {
            for (st, &u) in states.iter_mut().zip(&controls) {
                *st = integrate_step(*st, u, dt)?;
            }
        }
    }
    Ok(log)
}

fn build_problem(
    agent: AgentId,
    t: f64,
    states: &[BoidState],
    members: &[AgentId],
    registry: &TrajectoryRegistry,
    cfg: &FlockConfig,
    range_sq: f64,
) -> PlanProblem {
    let mut problem = PlanProblem::new(agent, t, states[agent], cfg.clone());
    for &j in members {
        problem
            .neighbor_trajectories
            .insert(j, registry.read(j, states[j], t, cfg));
    }
    for (j, st) in states.iter().enumerate() {
        if j != agent
            && !members.contains(&j)
            && (st.position - states[agent].position).norm_sq() <= range_sq
        {
            problem
                .nearby_trajectories
                .insert(j, registry.read(j, *st, t, cfg));
        }
    }
    problem
}

#[cfg(test)]
mod tests;
