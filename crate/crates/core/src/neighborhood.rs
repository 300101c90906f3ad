//! k-nearest neighborhoods, their centers, and switch detection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::state::{AgentId, BoidState, Vec2};

/// Default tolerance on aggregate position/velocity sums when classifying a switch.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// An agent's neighbor set and the kinematics of its center.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSnapshot {
    pub owner: AgentId,
    /// Sorted ascending.
    pub members: Vec<AgentId>,
    pub center_pos: Vec2,
    pub center_vel: Vec2,
    /// Mean of the members' most recently applied controls.
    pub center_acc: Vec2,
}

impl NeighborhoodSnapshot {
    /// Builds a snapshot from the current states and applied controls of all agents.
    pub fn build(
        owner: AgentId,
        members: Vec<AgentId>,
        states: &[BoidState],
        controls: &[Vec2],
    ) -> Result<Self> {
        if members.contains(&owner) {
            return Err(FlockError::Logic(format!(
                "agent {owner} cannot be its own neighbor"
            )));
        }
        let (center_pos, center_vel) = center(states, &members)?;
        let center_acc = members
            .iter()
            .map(|&j| controls.get(j).copied().unwrap_or_default())
            .sum::<Vec2>()
            / members.len() as f64;
        Ok(NeighborhoodSnapshot {
            owner,
            members,
            center_pos,
            center_vel,
            center_acc,
        })
    }
}

/// A change in an agent's neighbor set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub agent: AgentId,
    pub time: f64,
    pub removed: Vec<AgentId>,
    pub added: Vec<AgentId>,
    pub symmetric: bool,
}

/// The `k` agents closest to agent `i`, sorted by id.
///
/// Ties in distance go to the lower id.
pub fn knn(positions: &[Vec2], i: AgentId, k: usize) -> Result<Vec<AgentId>> {
    let n = positions.len();
    if i >= n {
        return Err(FlockError::Logic(format!("agent {i} out of range 0..{n}")));
    }
    if k >= n {
        return Err(FlockError::config(
            "k",
            format!("neighborhood size {k} must be below the agent count {n}"),
        ));
    }
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(FlockError::NonFinite("positions"));
    }
    let origin = positions[i];
    let mut others: Vec<(f64, AgentId)> = positions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| ((*p - origin).norm_sq(), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut members: Vec<AgentId> = others.into_iter().take(k).map(|(_, j)| j).collect();
    members.sort_unstable();
    Ok(members)
}

/// Mean position and mean velocity of `members`.
pub fn center(states: &[BoidState], members: &[AgentId]) -> Result<(Vec2, Vec2)> {
    if members.is_empty() {
        return Err(FlockError::Logic(
            "neighborhood center of an empty set".into(),
        ));
    }
    let mut pos = Vec2::ZERO;
    let mut vel = Vec2::ZERO;
    for &j in members {
        let s = states
            .get(j)
            .ok_or_else(|| FlockError::Logic(format!("member {j} has no state")))?;
        pos += s.position;
        vel += s.velocity;
    }
    let k = members.len() as f64;
    Ok((pos / k, vel / k))
}

/// Compares two snapshots of the same agent. The returned event is not yet classified.
pub fn detect_switch(
    prev: &NeighborhoodSnapshot,
    next: &NeighborhoodSnapshot,
    time: f64,
) -> Result<Option<SwitchEvent>> {
    if prev.owner != next.owner {
        return Err(FlockError::Logic(format!(
            "snapshot owners differ: {} vs {}",
            prev.owner, next.owner
        )));
    }
    let before: BTreeSet<_> = prev.members.iter().copied().collect();
    let after: BTreeSet<_> = next.members.iter().copied().collect();
    if before == after {
        return Ok(None);
    }
    Ok(Some(SwitchEvent {
        agent: prev.owner,
        time,
        removed: before.difference(&after).copied().collect(),
        added: after.difference(&before).copied().collect(),
        symmetric: false,
    }))
}

/// Whether the removed and added sets carry the same aggregate position and velocity.
pub fn is_symmetric_switch(event: &SwitchEvent, states: &[BoidState], tol: f64) -> bool {
    let sum = |ids: &[AgentId]| -> (Vec2, Vec2) {
        ids.iter().fold((Vec2::ZERO, Vec2::ZERO), |(p, v), &j| {
            (p + states[j].position, v + states[j].velocity)
        })
    };
    let (p_out, v_out) = sum(&event.removed);
    let (p_in, v_in) = sum(&event.added);
    (p_out - p_in).norm() <= tol && (v_out - v_in).norm() <= tol
}

/// Directed k-NN sets for every agent.
pub fn all_knn(positions: &[Vec2], k: usize) -> Result<Vec<Vec<AgentId>>> {
    (0..positions.len()).map(|i| knn(positions, i, k)).collect()
}

/// Whether the undirected closure of a directed neighbor graph is connected.
pub fn is_connected(neighbors: &[Vec<AgentId>]) -> bool {
    let n = neighbors.len();
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (i, members) in neighbors.iter().enumerate() {
        for &j in members {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
