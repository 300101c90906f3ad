//! Closed-form optimal motion primitives of the double integrator.
//!
//! With both the slack and the bounds inactive, an optimal control is pieced together from four
//! arcs: coasting with zero input, a linear-in-time input that steers between two interior
//! states, mirroring a partner's input while riding a safety boundary, and tracking the
//! neighborhood center's acceleration while riding the task boundary.

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::state::{AgentId, BoidState, Vec2};

/// Input `u(t) = a (t − t_start) + b` on `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedArc {
    pub a: Vec2,
    pub b: Vec2,
    pub t_start: f64,
    pub t_end: f64,
}

impl UnconstrainedArc {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn control(&self, t: f64) -> Vec2 {
        self.a * (t - self.t_start) + self.b
    }

    /// State at `t` when starting from `x0` at `t_start`.
    pub fn state_at(&self, x0: BoidState, t: f64) -> BoidState {
        let tau = t - self.t_start;
        BoidState {
            position: x0.position
                + x0.velocity * tau
                + self.a * (tau.powi(3) / 6.0)
                + self.b * (tau * tau / 2.0),
            velocity: x0.velocity + self.a * (tau * tau / 2.0) + self.b * tau,
        }
    }

    /// `½ ∫ ‖u‖² dt` over the arc.
    pub fn cost(&self) -> f64 {
        let t = self.duration();
        0.5 * (self.a.norm_sq() * t.powi(3) / 3.0
            + self.a.dot(self.b) * t * t
            + self.b.norm_sq() * t)
    }
}

/// The four primitive arc types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArcKind {
    ZeroControl,
    InteriorBvp,
    /// Riding the safety boundary against `partner`.
    SafetyRiding(AgentId),
    TaskRiding,
}

/// Signals an arc may need in order to evaluate its control.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArcContext<'a> {
    pub arc: Option<&'a UnconstrainedArc>,
    pub partner_control: Option<Vec2>,
    pub center_acc: Option<Vec2>,
}

/// Minimum-energy input steering `x0` at `t0` to `xf` at `tf`.
pub fn solve_bvp(x0: BoidState, xf: BoidState, t0: f64, tf: f64) -> Result<UnconstrainedArc> {
    if !(x0.is_finite() && xf.is_finite() && t0.is_finite() && tf.is_finite()) {
        return Err(FlockError::NonFinite("boundary conditions"));
    }
    if tf <= t0 {
        return Err(FlockError::Domain(format!(
            "final time {tf} must exceed initial time {t0}"
        )));
    }
    let t = tf - t0;
    let dp = xf.position - x0.position - x0.velocity * t;
    let dv = xf.velocity - x0.velocity;
    // Velocity and position moments of a t + b:
    //   dv = a t²/2 + b t,   dp = a t³/6 + b t²/2
    let a = dv * (6.0 / (t * t)) - dp * (12.0 / t.powi(3));
    let b = dp * (6.0 / (t * t)) - dv * (2.0 / t);
    Ok(UnconstrainedArc {
        a,
        b,
        t_start: t0,
        t_end: tf,
    })
}

/// Control prescribed by a primitive at time `t`.
pub fn arc_control(kind: ArcKind, t: f64, context: &ArcContext<'_>) -> Result<Vec2> {
    match kind {
        ArcKind::ZeroControl => Ok(Vec2::ZERO),
        ArcKind::InteriorBvp => context
            .arc
            .map(|arc| arc.control(t))
            .ok_or_else(|| FlockError::Logic("interior arc requires its coefficients".into())),
        ArcKind::SafetyRiding(partner) => context.partner_control.ok_or_else(|| {
            FlockError::Logic(format!(
                "safety arc requires the control of agent {partner}"
            ))
        }),
        ArcKind::TaskRiding => context.center_acc.ok_or_else(|| {
            FlockError::Logic("task arc requires the neighborhood center acceleration".into())
        }),
    }
}

/// Outcome of a discrete continuity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityCheck {
    pub ok: bool,
    /// Index `k` of the first pair `(k, k+1)` whose jump exceeds `L dt`.
    pub first_violation: Option<usize>,
    pub max_rate: f64,
}

/// Checks `‖u[k+1] − u[k]‖ ≤ L dt` for every consecutive pair.
pub fn check_control_continuity(controls: &[Vec2], dt: f64, lipschitz: f64) -> ContinuityCheck {
    let bound = lipschitz * dt;
    let mut first_violation = None;
    let mut max_rate = 0.0f64;
    for (k, w) in controls.windows(2).enumerate() {
        let jump = (w[1] - w[0]).norm();
        max_rate = max_rate.max(jump / dt);
        if jump > bound && first_violation.is_none() {
            first_violation = Some(k);
        }
    }
    ContinuityCheck {
        ok: first_violation.is_none(),
        first_violation,
        max_rate,
    }
}

/// Default Lipschitz constant for the continuity check: `4 u_max / horizon`.
pub fn default_continuity_bound(u_max: f64, horizon: f64) -> f64 {
    4.0 * u_max / horizon
}
