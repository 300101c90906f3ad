//! Finite-horizon energy-optimal planning for a single agent.
//!
//! The continuous problem is transcribed onto `M` piecewise-constant control intervals and solved
//! by sequential convexification: the non-convex keep-out constraints are replaced by supporting
//! halfspaces at the current iterate, the resulting convex problem is solved with
//! [`admm`](self::admm), and the step is accepted only if it does not increase the merit
//! function. A trust region on the controls keeps successive linearizations close.

mod admm;
mod trajectory;

use std::collections::BTreeMap;

pub use admm::AdmmSettings;
pub use trajectory::{extend_ballistic, Trajectory};

use crate::config::FlockConfig;
use crate::constraints::task_residual;
use crate::error::{FlockError, Result};
use crate::state::{AgentId, BoidState, Vec2};
use admm::{Block, Dynamics, Image, Prox, WarmStart};

/// One agent's planning problem over `[t0, t0 + horizon]`.
#[derive(Debug, Clone)]
pub struct PlanProblem {
    pub agent: AgentId,
    pub t0: f64,
    pub x0: BoidState,
    /// Committed plans of the agent's neighbors; they define the neighborhood center.
    pub neighbor_trajectories: BTreeMap<AgentId, Trajectory>,
    /// Plans of other nearby agents that enter only the collision constraints.
    pub nearby_trajectories: BTreeMap<AgentId, Trajectory>,
    /// Pins the final state. Used by analytic comparisons; flocking plans leave it free.
    pub terminal: Option<BoidState>,
    pub config: FlockConfig,
}

impl PlanProblem {
    pub fn new(agent: AgentId, t0: f64, x0: BoidState, config: FlockConfig) -> Self {
        PlanProblem {
            agent,
            t0,
            x0,
            neighbor_trajectories: BTreeMap::new(),
            nearby_trajectories: BTreeMap::new(),
            terminal: None,
            config,
        }
    }

    pub fn tf(&self) -> f64 {
        self.t0 + self.config.horizon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSolution {
    pub trajectory: Trajectory,
    /// `½ Σ (‖u_k‖² + α η²_k) dt`.
    pub cost: f64,
    pub iterations: usize,
    /// Inner first-order iterations summed over all outer iterations.
    pub admm_iterations: usize,
    pub converged: bool,
    /// Largest `4R² − ‖s‖²` over all knots and all provided trajectories (0 if separated).
    pub max_safety_violation: f64,
    /// Objective value of every accepted iterate.
    pub cost_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct PlannerSettings {
    pub max_iters: usize,
    /// Convergence threshold on the control update, relative to `u_max`.
    pub tol_conv: f64,
    /// Relative inflation of the keep-out radius used while planning.
    pub safety_buffer: f64,
    pub admm: AdmmSettings,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        PlannerSettings {
            max_iters: 30,
            tol_conv: 1e-6,
            safety_buffer: 1e-4,
            admm: AdmmSettings::default(),
        }
    }
}

/// `½ Σ_k (‖u_k‖² + α η²_k) dt`.
pub fn evaluate_objective(trajectory: &Trajectory, alpha: f64) -> f64 {
    0.5 * trajectory
        .controls
        .iter()
        .zip(&trajectory.slacks)
        .map(|(u, &s)| u.norm_sq() + alpha * s)
        .sum::<f64>()
        * trajectory.dt
}

/// Plans with the default settings.
pub fn plan(problem: &PlanProblem, warm_start: Option<&Trajectory>) -> Result<PlanSolution> {
    plan_with(problem, warm_start, &PlannerSettings::default())
}

struct Prepared {
    dynamics: Dynamics,
    /// Neighborhood center at knots `1..=M`; empty when the agent has no neighbors.
    centers: Vec<Vec2>,
    /// Positions of every agent to keep clear of, at knots `1..=M`.
    obstacles: Vec<Vec<Vec2>>,
    obstacle_velocities: Vec<Vec<Vec2>>,
}

fn prepare(problem: &PlanProblem) -> Result<Prepared> {
    let cfg = &problem.config;
    let m = cfg.plan_steps;
    let dt = cfg.plan_dt();
    if !problem.x0.is_finite() {
        return Err(FlockError::NonFinite("initial state"));
    }
    if m == 0 || !dt.is_finite() || dt <= 0.0 {
        return Err(FlockError::config("plan_steps", "planning grid is empty"));
    }
    if problem.neighbor_trajectories.contains_key(&problem.agent)
        || problem.nearby_trajectories.contains_key(&problem.agent)
    {
        return Err(FlockError::Logic(format!(
            "agent {} listed among its own neighbors",
            problem.agent
        )));
    }
    let knot_time = |r: usize| problem.t0 + (r + 1) as f64 * dt;
    let sample =
        |tr: &Trajectory| -> Vec<BoidState> { (0..m).map(|r| tr.state_at(knot_time(r))).collect() };
    let neighbors: Vec<Vec<BoidState>> =
        problem.neighbor_trajectories.values().map(sample).collect();
    let mut others = neighbors.clone();
    others.extend(problem.nearby_trajectories.values().map(sample));
    let positions = |s: &Vec<BoidState>| s.iter().map(|x| x.position).collect::<Vec<_>>();
    let neighbors: Vec<Vec<Vec2>> = neighbors.iter().map(positions).collect();
    let centers = if neighbors.is_empty() {
        Vec::new()
    } else {
        (0..m)
            .map(|r| neighbors.iter().map(|n| n[r]).sum::<Vec2>() / neighbors.len() as f64)
            .collect()
    };
    Ok(Prepared {
        dynamics: Dynamics {
            m,
            dt,
            p0: problem.x0.position,
            v0: problem.x0.velocity,
        },
        centers,
        obstacles: others.iter().map(positions).collect(),
        obstacle_velocities: others
            .iter()
            .map(|s| s.iter().map(|x| x.velocity).collect())
            .collect(),
    })
}

fn slacks_for(positions: &[Vec2], centers: &[Vec2], flock_radius: f64) -> Vec<f64> {
    if centers.is_empty() {
        return vec![0.0; positions.len()];
    }
    positions
        .iter()
        .zip(centers)
        .map(|(&p, &c)| task_residual(p, c, flock_radius).max(0.0))
        .collect()
}

fn objective(u: &[Vec2], slacks: &[f64], alpha: f64, dt: f64) -> f64 {
    0.5 * u
        .iter()
        .zip(slacks)
        .map(|(u, s)| u.norm_sq() + alpha * s)
        .sum::<f64>()
        * dt
}

fn safety_violation(positions: &[Vec2], obstacles: &[Vec<Vec2>], radius: f64) -> f64 {
    let min_sq = 4.0 * radius * radius;
    obstacles
        .iter()
        .flat_map(|o| {
            positions
                .iter()
                .zip(o)
                .map(|(&p, &q)| min_sq - (p - q).norm_sq())
        })
        .fold(0.0, f64::max)
}

/// Plans with explicit solver settings.
pub fn plan_with(
    problem: &PlanProblem,
    warm_start: Option<&Trajectory>,
    settings: &PlannerSettings,
) -> Result<PlanSolution> {
    let prep = prepare(problem)?;
    let cfg = &problem.config;
    let params = cfg.agent_params(problem.agent);
    let m = prep.dynamics.m;
    let dt = prep.dynamics.dt;
    let radius = cfg.body_radius;
    let plan_radius = radius * (1.0 + settings.safety_buffer);
    let flock_radius = cfg.flock_radius;

    let clip = |u: Vec2| {
        let n = u.norm();
        if n > params.u_max {
            u * (params.u_max / n)
        } else {
            u
        }
    };

    let mut u_bar: Vec<Vec2> = match warm_start {
        Some(ws) if ws.steps() == m && (ws.dt - dt).abs() <= 1e-12 * dt => {
            ws.controls.iter().copied().map(clip).collect()
        }
        Some(ws) => ws
            .resample(problem.t0, dt, m, problem.x0)
            .controls
            .into_iter()
            .map(clip)
            .collect(),
        None => vec![Vec2::ZERO; m],
    };

    let penalty = 1e4 / (radius * radius);
    // Infeasibility measure: keep-out penetration (squared units), speed excess and terminal miss.
    let merit_of = |u: &[Vec2]| -> (f64, f64, f64) {
        let (v, p) = prep.dynamics.rollout(u);
        let slacks = slacks_for(&p, &prep.centers, flock_radius);
        let cost = objective(u, &slacks, params.alpha, dt);
        let mut viol = safety_violation(&p, &prep.obstacles, plan_radius);
        viol += v
            .iter()
            .map(|v| (v.norm() - params.v_max).max(0.0))
            .fold(0.0, f64::max)
            * radius;
        if let Some(xf) = problem.terminal {
            viol += (p[m - 1] - xf.position).norm() * radius
                + (v[m - 1] - xf.velocity).norm() * radius * dt;
        }
        (cost + penalty * viol, cost, viol)
    };

    let feasible_tol = 1e-6 * radius * radius;
    let (mut merit, cost0, viol0) = merit_of(&u_bar);
    let mut cost_history = Vec::new();
    if viol0 <= feasible_tol {
        cost_history.push(cost0);
    }
    let mut trust = params.u_max;
    let mut warm: Option<WarmStart> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut admm_iterations = 0;

    for it in 1..=settings.max_iters {
        iterations = it;
        let (v_bar, p_bar) = prep.dynamics.rollout(&u_bar);
        let blocks = build_blocks(
            problem,
            &prep,
            &u_bar,
            &p_bar,
            &v_bar,
            trust,
            plan_radius,
            params.alpha,
            params.v_max,
            params.u_max,
        );
        let out = admm::solve(&prep.dynamics, &blocks, &u_bar, warm.take(), &settings.admm);
        admm_iterations += out.iterations;
        log::trace!(
            "agent {} iteration {it}: admm {} iterations, converged {}",
            problem.agent,
            out.iterations,
            out.converged
        );
        let candidate: Vec<Vec2> = out.u.iter().copied().map(clip).collect();
        let (cand_merit, cand_cost, cand_viol) = merit_of(&candidate);

        if cand_merit <= merit + 1e-12 * (1.0 + merit.abs()) {
            let step = candidate
                .iter()
                .zip(&u_bar)
                .map(|(a, b)| (*a - *b).norm())
                .fold(0.0, f64::max);
            let decrease = merit - cand_merit;
            u_bar = candidate;
            merit = cand_merit;
            if cand_viol <= feasible_tol {
                cost_history.push(cand_cost);
            }
            warm = Some(out.warm);
            let stalled =
                decrease <= settings.tol_conv * (1.0 + merit.abs()) && cand_viol <= feasible_tol;
            if step <= settings.tol_conv * params.u_max || stalled {
                converged = true;
                break;
            }
        } else {
            trust *= 0.5;
            // No improving step left inside a collapsed trust region: a stationary point.
            if trust < settings.tol_conv.sqrt() * params.u_max {
                converged = merit_of(&u_bar).2 <= feasible_tol;
                break;
            }
        }
    }

    let (_, positions) = prep.dynamics.rollout(&u_bar);
    let slacks = slacks_for(&positions, &prep.centers, flock_radius);
    let trajectory = Trajectory::from_controls(problem.t0, dt, problem.x0, u_bar, slacks);
    let knot_positions: Vec<Vec2> = trajectory.states[1..].iter().map(|s| s.position).collect();
    let max_safety_violation = safety_violation(&knot_positions, &prep.obstacles, radius);
    let speed_excess = trajectory.states[1..]
        .iter()
        .map(|s| s.velocity.norm() - params.v_max)
        .fold(0.0, f64::max);
    let terminal_ok = problem.terminal.is_none_or(|xf| {
        let end = trajectory.final_state();
        (end.position - xf.position).max_abs() <= 1e-6
            && (end.velocity - xf.velocity).max_abs() <= 1e-6
    });
    converged = converged
        && max_safety_violation <= cfg.safety_tolerance()
        && speed_excess <= 1e-6 * params.v_max
        && terminal_ok;
    let cost = evaluate_objective(&trajectory, params.alpha);
    Ok(PlanSolution {
        trajectory,
        cost,
        iterations,
        admm_iterations,
        converged,
        max_safety_violation,
        cost_history,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_blocks(
    problem: &PlanProblem,
    prep: &Prepared,
    u_bar: &[Vec2],
    p_bar: &[Vec2],
    v_bar: &[Vec2],
    trust: f64,
    plan_radius: f64,
    alpha: f64,
    v_max: f64,
    u_max: f64,
) -> Vec<Block> {
    let m = prep.dynamics.m;
    let dt = prep.dynamics.dt;
    let mut blocks = vec![
        Block::all_rows(
            Image::Control,
            m,
            Prox::Ball {
                centers: vec![Vec2::ZERO; m],
                radius: u_max,
            },
        ),
        Block::all_rows(
            Image::Control,
            m,
            Prox::Ball {
                centers: u_bar.to_vec(),
                radius: trust,
            },
        ),
        Block::all_rows(
            Image::Velocity,
            m,
            Prox::Ball {
                centers: vec![Vec2::ZERO; m],
                radius: v_max,
            },
        ),
    ];

    // Supporting halfspace of the keep-out disk at the current iterate:
    //   ‖d̄‖² + 2 d̄·(d − d̄) ≥ (2R)²  with d = p − q.
    let min_sq = 4.0 * plan_radius * plan_radius;
    for (obstacle, obstacle_vel) in prep.obstacles.iter().zip(&prep.obstacle_velocities) {
        let mut normals = Vec::with_capacity(m);
        let mut offsets = Vec::with_capacity(m);
        for r in 0..m {
            let q = obstacle[r];
            let d = p_bar[r] - q;
            let n = d.norm();
            let closing = v_bar[r] - obstacle_vel[r];
            let head_on = n < 2.0 * plan_radius
                && d.x * closing.y - d.y * closing.x == 0.0
                && closing.norm() > 0.0;
            if head_on {
                // The iterate passes straight through the obstacle; no linearization can pick a
                // side, so keep right of the relative motion.
                let normal = Vec2::new(closing.y, -closing.x) / closing.norm();
                normals.push(normal);
                offsets.push(2.0 * plan_radius + normal.dot(q));
            } else if n > 1e-9 * plan_radius {
                let normal = d / n;
                normals.push(normal);
                offsets.push((min_sq + n * n) / (2.0 * n) + normal.dot(q));
            } else {
                // Coincident at rest: fall back to the tangent halfspace facing away from
                // the obstacle's initial position.
                let away = problem.x0.position - obstacle[0];
                let normal = if away.norm() > 0.0 {
                    away / away.norm()
                } else {
                    Vec2::new(1.0, 0.0)
                };
                normals.push(normal);
                offsets.push(2.0 * plan_radius + normal.dot(q));
            }
        }
        blocks.push(Block::all_rows(
            Image::Position,
            m,
            Prox::Halfspace { normals, offsets },
        ));
    }

    if !prep.centers.is_empty() {
        blocks.push(Block::all_rows(
            Image::Position,
            m,
            Prox::TaskPenalty {
                centers: prep.centers.clone(),
                radius: problem.config.flock_radius,
                weight: 0.5 * alpha * dt,
            },
        ));
    }

    if let Some(xf) = problem.terminal {
        blocks.push(Block {
            image: Image::Position,
            rows: vec![m - 1],
            prox: Prox::Pin {
                targets: vec![xf.position],
            },
        });
        blocks.push(Block {
            image: Image::Velocity,
            rows: vec![m - 1],
            prox: Prox::Pin {
                targets: vec![xf.velocity],
            },
        });
    }
    blocks
}
