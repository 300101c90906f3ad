//! Flock-level diagnostics computed from a finished run.

use std::collections::BTreeMap;

use crate::primitives::{check_control_continuity, default_continuity_bound};
use crate::simulator::{detect_consensus, SimulationLog, TopologyMode};
use crate::state::{energy_rate, AgentId, BoidState, Vec2};

/// Largest pairwise velocity difference.
pub fn velocity_disagreement(states: &[BoidState]) -> f64 {
    max_pairwise(states.iter().map(|s| s.velocity))
}

/// Largest pairwise distance.
pub fn flock_diameter(states: &[BoidState]) -> f64 {
    max_pairwise(states.iter().map(|s| s.position))
}

fn max_pairwise(points: impl Iterator<Item = Vec2>) -> f64 {
    let points: Vec<Vec2> = points.collect();
    let mut best = 0.0_f64;
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// Left Riemann sum of `‖u‖²` over the applied controls of one agent.
pub fn total_energy(log: &SimulationLog, agent: AgentId) -> f64 {
    let steps = log.times.len().saturating_sub(1);
    log.applied_controls[..steps]
        .iter()
        .map(|row| energy_rate(row[agent]))
        .sum::<f64>()
        * log.config.sim_dt
}

/// Left Riemann sum of the realized slack `max(0, g)` of one agent.
pub fn integrated_slack(log: &SimulationLog, agent: AgentId) -> f64 {
    let steps = log.times.len().saturating_sub(1);
    log.diagnostics[..steps]
        .iter()
        .map(|row| row[agent].eta_sq)
        .sum::<f64>()
        * log.config.sim_dt
}

/// Bookkeeping of the consensus argument at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusDiagnostics {
    pub time: f64,
    /// Agents moving faster than their neighborhood center, `‖v_i‖ > ‖ċ_i‖`.
    pub faster_than_center: Vec<AgentId>,
    /// Slowest agent; ties go to the lowest id.
    pub slowest: AgentId,
    /// `‖v_i‖ − ‖ċ_i‖` per agent.
    pub speed_gaps: Vec<f64>,
}

/// Per-step speed gaps between each agent and its neighborhood center.
///
/// `gap_tol` absorbs rounding so that an exact consensus reports no agent as faster.
pub fn consensus_diagnostics(log: &SimulationLog, gap_tol: f64) -> Vec<ConsensusDiagnostics> {
    log.times
        .iter()
        .enumerate()
        .map(|(s, &time)| {
            let states = &log.states[s];
            let speed_gaps: Vec<f64> = (0..states.len())
                .map(|i| {
                    let members = &log.neighbors[s][i];
                    let c_dot = members.iter().map(|&j| states[j].velocity).sum::<Vec2>()
                        / members.len() as f64;
                    states[i].velocity.norm() - c_dot.norm()
                })
                .collect();
            let slowest = states
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |(bi, bv), (i, st)| {
                    let v = st.velocity.norm();
                    if v < bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                })
                .0;
            ConsensusDiagnostics {
                time,
                faster_than_center: (0..states.len())
                    .filter(|&i| speed_gaps[i] > gap_tol)
                    .collect(),
                slowest,
                speed_gaps,
            }
        })
        .collect()
}

/// First logged time from which consensus within `tol` holds through the end of the run.
pub fn consensus_time(log: &SimulationLog, tol: f64) -> Option<f64> {
    let mut first = None;
    for (s, states) in log.states.iter().enumerate() {
        if detect_consensus(states, tol) {
            first.get_or_insert(log.times[s]);
        } else {
            first = None;
        }
    }
    first
}

/// Largest value of `series` in each consecutive window of `window` samples; a trailing
/// partial window is included.
pub fn window_maxima(series: &[f64], window: usize) -> Vec<f64> {
    series
        .chunks(window.max(1))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub topology_mode: TopologyMode,
    pub consensus_tol: f64,
    pub consensus_time: Option<f64>,
    pub final_velocity_disagreement: f64,
    pub total_energy: BTreeMap<AgentId, f64>,
    pub min_safety_margin: f64,
    pub max_task_residual: f64,
    pub integrated_slack: BTreeMap<AgentId, f64>,
    pub flock_diameter_final: f64,
    /// `N·D`.
    pub diameter_bound: f64,
    /// Whether every agent's applied controls pass the discrete continuity check.
    pub control_continuity_ok: bool,
    pub safety_failures: usize,
    pub degraded_plans: usize,
    pub switch_events: usize,
    pub replans: usize,
}

impl RunReport {
    pub fn from_log(log: &SimulationLog, consensus_tol: f64) -> Self {
        let n = log.n_agents();
        let cfg = &log.config;
        let last = log.states.last().map(Vec::as_slice).unwrap_or(&[]);
        RunReport {
            topology_mode: log.topology_mode,
            consensus_tol,
            consensus_time: consensus_time(log, consensus_tol),
            final_velocity_disagreement: velocity_disagreement(last),
            total_energy: (0..n).map(|i| (i, total_energy(log, i))).collect(),
            min_safety_margin: log
                .constraint_history
                .iter()
                .map(|c| c.min_safety_margin)
                .fold(f64::INFINITY, f64::min),
            max_task_residual: log
                .constraint_history
                .iter()
                .map(|c| c.max_task_residual)
                .fold(f64::NEG_INFINITY, f64::max),
            integrated_slack: (0..n).map(|i| (i, integrated_slack(log, i))).collect(),
            flock_diameter_final: flock_diameter(last),
            diameter_bound: n as f64 * cfg.flock_radius,
            control_continuity_ok: controls_are_continuous(log),
            safety_failures: log.safety_failures.len(),
            degraded_plans: log.degraded_plans().count(),
            switch_events: log.switch_events.len(),
            replans: log.replan_events.len(),
        }
    }
}

/// Runs the discrete continuity check on every agent's applied control sequence with the
/// default bound `4 u_max / horizon`.
pub fn controls_are_continuous(log: &SimulationLog) -> bool {
    first_control_jump(log).is_none()
}

/// First `(agent, step, jump)` where the applied control moves by more than
/// `4 u_max / horizon · dt` between consecutive steps; `step` is the later sample.
pub fn first_control_jump(log: &SimulationLog) -> Option<(usize, usize, f64)> {
    let cfg = &log.config;
    (0..log.n_agents()).find_map(|i| {
        let u_max = cfg.agent_params(i).u_max;
        let controls: Vec<Vec2> = log.applied_controls.iter().map(|row| row[i]).collect();
        if controls.len() < 2 {
            return None;
        }
        check_control_continuity(
            &controls,
            cfg.sim_dt,
            default_continuity_bound(u_max, cfg.horizon),
        )
        .first_violation
        .map(|k| (i, k + 1, (controls[k + 1] - controls[k]).norm()))
    })
}
