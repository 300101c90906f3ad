use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::state::{energy_rate, propagate, BoidState, Vec2};

/// A piecewise-constant control plan and the states it produces.
///
/// `states[k + 1]` is exactly `states[k]` propagated under `controls[k]` for `dt`;
/// `slacks[k]` is the task-constraint slack assigned to `states[k + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<BoidState>,
    pub controls: Vec<Vec2>,
    pub slacks: Vec<f64>,
}

const TIME_EPS: f64 = 1e-9;

impl Trajectory {
    /// Propagates `x0` under `controls`.
    pub fn from_controls(
        t0: f64,
        dt: f64,
        x0: BoidState,
        controls: Vec<Vec2>,
        slacks: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(controls.len(), slacks.len());
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0);
        for &u in &controls {
            let last = *states.last().unwrap();
            states.push(propagate(last, u, dt));
        }
        Trajectory {
            t0,
            dt,
            states,
            controls,
            slacks,
        }
    }

    /// Zero-input coasting from `x0` for `steps` intervals.
    pub fn ballistic(t0: f64, dt: f64, x0: BoidState, steps: usize) -> Self {
        Self::from_controls(t0, dt, x0, vec![Vec2::ZERO; steps], vec![0.0; steps])
    }

    pub fn steps(&self) -> usize {
        self.controls.len()
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.dt * self.steps() as f64
    }

    pub fn final_state(&self) -> BoidState {
        *self
            .states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Index of the control interval containing `t`, if `t` lies within the plan.
    pub fn interval_at(&self, t: f64) -> Option<usize> {
        let rel = (t - self.t0) / self.dt;
        if rel < -TIME_EPS {
            return None;
        }
        let k = (rel + TIME_EPS).floor().max(0.0) as usize;
        (k < self.steps()).then_some(k)
    }

    /// Control applied at `t`; zero outside the plan.
    pub fn control_at(&self, t: f64) -> Vec2 {
        self.interval_at(t)
            .map(|k| self.controls[k])
            .unwrap_or(Vec2::ZERO)
    }

    /// Exact state at `t`. Times past the end coast ballistically from the final state;
    /// times before the start coast backwards from the initial state.
    pub fn state_at(&self, t: f64) -> BoidState {
        let rel = (t - self.t0) / self.dt;
        if rel <= 0.0 {
            let x = self.states[0];
            let tau = t - self.t0;
            return BoidState::new(x.position + x.velocity * tau, x.velocity);
        }
        let k = (rel + TIME_EPS).floor() as usize;
        if k >= self.steps() {
            let x = self.final_state();
            let tau = t - self.end_time();
            return BoidState::new(x.position + x.velocity * tau, x.velocity);
        }
        let tau = t - (self.t0 + k as f64 * self.dt);
        if tau.abs() <= TIME_EPS * self.dt {
            return self.states[k];
        }
        propagate(self.states[k], self.controls[k], tau)
    }

    /// `Σ ‖u_k‖² dt`.
    pub fn energy(&self) -> f64 {
        self.controls.iter().map(|&u| energy_rate(u)).sum::<f64>() * self.dt
    }

    /// Largest deviation between stored states and re-propagated ones.
    pub fn dynamics_defect(&self) -> f64 {
        self.states
            .windows(2)
            .zip(&self.controls)
            .map(|(w, &u)| {
                let next = propagate(w[0], u, self.dt);
                (next.position - w[1].position)
                    .max_abs()
                    .max((next.velocity - w[1].velocity).max_abs())
            })
            .fold(0.0, f64::max)
    }

    /// Resamples this plan's controls onto a new grid starting at `t0`, padding with zero input.
    /// The states are re-propagated from `x0`.
    pub fn resample(&self, t0: f64, dt: f64, steps: usize, x0: BoidState) -> Trajectory {
        let controls = (0..steps)
            .map(|k| self.control_at(t0 + k as f64 * dt))
            .collect();
        Trajectory::from_controls(t0, dt, x0, controls, vec![0.0; steps])
    }
}

/// Appends zero-input intervals so the plan covers `[t0, until]`.
pub fn extend_ballistic(trajectory: &Trajectory, until: f64) -> Result<Trajectory> {
    let end = trajectory.end_time();
    if until < end - TIME_EPS * trajectory.dt {
        return Err(FlockError::Domain(format!(
            "cannot extend a plan ending at {end} back to {until}"
        )));
    }
    let extra = ((until - end) / trajectory.dt - TIME_EPS).ceil().max(0.0) as usize;
    let mut out = trajectory.clone();
    for _ in 0..extra {
        let last = out.final_state();
        out.states.push(propagate(last, Vec2::ZERO, out.dt));
        out.controls.push(Vec2::ZERO);
        out.slacks.push(0.0);
    }
    Ok(out)
}
