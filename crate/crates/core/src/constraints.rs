//! Safety and task constraint residuals.

use std::collections::BTreeMap;

use crate::state::{AgentId, BoidState, Vec2};

/// `‖s‖² − 4R²`; nonnegative means the pair is separated.
pub fn safety_margin(s_ij: Vec2, body_radius: f64) -> f64 {
    s_ij.norm_sq() - 4.0 * body_radius * body_radius
}

/// Task constraint value `‖p − c‖² − D²`; nonpositive means the agent is within
/// the flocking radius of its neighborhood center.
pub fn task_residual(p_i: Vec2, c_i: Vec2, flock_radius: f64) -> f64 {
    (p_i - c_i).norm_sq() - flock_radius * flock_radius
}

/// The task constraint and half its time derivative, `(‖s‖² − D², s·ṡ)` with `s = p − c`.
///
/// Both vanish on a task-constrained arc.
pub fn tangency_residuals(
    p_i: Vec2,
    v_i: Vec2,
    c_i: Vec2,
    c_dot: Vec2,
    flock_radius: f64,
) -> (f64, f64) {
    let s = p_i - c_i;
    let s_dot = v_i - c_dot;
    (s.norm_sq() - flock_radius * flock_radius, s.dot(s_dot))
}

/// Constraint values of the whole flock at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintReport {
    /// Keyed by `(i, j)` with `i < j`.
    pub safety_margins: BTreeMap<(AgentId, AgentId), f64>,
    pub task_residuals: BTreeMap<AgentId, f64>,
    /// `max(0, g_i)`: the smallest slack consistent with the state.
    pub slack_values: BTreeMap<AgentId, f64>,
}

impl ConstraintReport {
    /// Evaluates every pair and every agent against its neighbor set.
    pub fn evaluate(
        states: &[BoidState],
        neighbors: &[Vec<AgentId>],
        body_radius: f64,
        flock_radius: f64,
    ) -> Self {
        let mut report = ConstraintReport::default();
        for i in 0..states.len() {
            for j in (i + 1)..states.len() {
                let m = safety_margin(states[j].position - states[i].position, body_radius);
                report.safety_margins.insert((i, j), m);
            }
        }
        for (i, members) in neighbors.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let c =
                members.iter().map(|&j| states[j].position).sum::<Vec2>() / members.len() as f64;
            let g = task_residual(states[i].position, c, flock_radius);
            report.task_residuals.insert(i, g);
            report.slack_values.insert(i, g.max(0.0));
        }
        report
    }

    /// Margin of the pair `(i, j)` in either order.
    pub fn margin(&self, i: AgentId, j: AgentId) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.safety_margins.get(&key).copied()
    }

    pub fn min_safety_margin(&self) -> f64 {
        self.safety_margins
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_task_residual(&self) -> f64 {
        self.task_residuals
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_slack(&self) -> f64 {
        self.slack_values.values().copied().fold(0.0, f64::max)
    }

    /// Smallest margin between agent `i` and anyone else.
    pub fn min_margin_of(&self, i: AgentId) -> f64 {
        self.safety_margins
            .iter()
            .filter(|((a, b), _)| *a == i || *b == i)
            .map(|(_, m)| *m)
            .fold(f64::INFINITY, f64::min)
    }
}
