//! Agent state, double-integrator propagation and the energy model.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};

/// Agent identifier; agents are numbered `0..n_agents`.
pub type AgentId = usize;

/// A planar vector (position, velocity, control or displacement).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::iter::Sum for Vec2 {
    fn sum<I: Iterator<Item = Vec2>>(iter: I) -> Vec2 {
        iter.fold(Vec2::ZERO, |acc, v| acc + v)
    }
}

/// Position and velocity of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoidState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl BoidState {
    pub const fn new(position: Vec2, velocity: Vec2) -> Self {
        BoidState { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }
}

/// Zero-order-hold propagation of the double integrator over `dt`.
///
/// The dynamics are linear, so this is exact for a control held constant over the step.
pub fn integrate_step(state: BoidState, u: Vec2, dt: f64) -> Result<BoidState> {
    if !state.is_finite() {
        return Err(FlockError::NonFinite("state"));
    }
    if !u.is_finite() {
        return Err(FlockError::NonFinite("control"));
    }
    if !dt.is_finite() {
        return Err(FlockError::NonFinite("dt"));
    }
    if dt <= 0.0 {
        return Err(FlockError::Domain(format!(
            "step length must be positive, got {dt}"
        )));
    }
    Ok(propagate(state, u, dt))
}

/// Unchecked propagation used on hot paths where inputs are already validated.
#[inline]
pub(crate) fn propagate(state: BoidState, u: Vec2, dt: f64) -> BoidState {
    BoidState {
        position: state.position + state.velocity * dt + u * (0.5 * dt * dt),
        velocity: state.velocity + u * dt,
    }
}

/// Instantaneous energy consumption rate, `‖u‖²`.
pub fn energy_rate(u: Vec2) -> f64 {
    u.norm_sq()
}

/// Relative displacement from agent `i` to agent `j`: `p_j − p_i`.
pub fn displacement(p_i: Vec2, p_j: Vec2) -> Vec2 {
    p_j - p_i
}
