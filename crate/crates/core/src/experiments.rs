//! Built-in scenarios and the property checks run by `verify`, `oracle` and the acceptance
//! suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::FlockConfig;
use crate::error::Result;
use crate::io::trajectory_csv;
use crate::metrics::{first_control_jump, flock_diameter, velocity_disagreement, window_maxima};
use crate::planner::{plan, PlanProblem};
use crate::primitives::{default_continuity_bound, solve_bvp};
use crate::simulator::{
    run, InitialConditions, Placement, PlacementKind, ScenarioSpec, SimulationLog, TopologyMode,
};
use crate::state::{BoidState, Vec2};

/// Outcome of one named property check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

fn state(px: f64, py: f64, vx: f64, vy: f64) -> BoidState {
    BoidState::new(Vec2::new(px, py), Vec2::new(vx, vy))
}

/// Flock parameters shared by the built-in scenarios.
pub fn base_config() -> FlockConfig {
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
        total_time: 50.0,
        seed: 0,
        safety_range: None,
        overrides: Default::default(),
    }
}

// ---------------------------------------------------------------------------------------------
// Analytic oracle

/// Comparison of the planner against the closed-form arc on one pinned-endpoint instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub name: String,
    pub analytic_cost: f64,
    pub planner_cost: f64,
    /// `|planner − analytic| / analytic`, or the absolute gap when the analytic cost vanishes.
    pub cost_gap: f64,
    /// Largest `‖u_k − u(t_k + dt/2)‖` over the planning grid.
    pub control_error: f64,
    pub u_max: f64,
    pub converged: bool,
}

impl OracleCase {
    pub const COST_TOL: f64 = 0.01;
    pub const CONTROL_TOL: f64 = 1e-3;

    pub fn passed(&self) -> bool {
        self.converged
            && self.cost_gap <= Self::COST_TOL
            && self.control_error <= Self::CONTROL_TOL * self.u_max
    }
}

/// Solves one pinned instance over `[0, 1]` with `steps` intervals.
///
/// The bounds are set just above the arc's peak control and speed so that they are inactive
/// without loosening the control tolerance, which scales with `u_max`.
pub fn oracle_case(name: &str, x0: BoidState, xf: BoidState, steps: usize) -> Result<OracleCase> {
    let arc = solve_bvp(x0, xf, 0.0, 1.0)?;
    let samples = 1000;
    let (peak_u, peak_v) = (0..=samples).fold((0.0f64, 0.0f64), |(u, v), i| {
        let t = i as f64 / samples as f64;
        (
            u.max(arc.control(t).norm()),
            v.max(arc.state_at(x0, t).velocity.norm()),
        )
    });
    let config = FlockConfig {
        n_agents: 2,
        k: 1,
        horizon: 1.0,
        plan_steps: steps,
        sim_dt: 1.0 / steps as f64,
        replan_interval: 1.0,
        u_max: (1.25 * peak_u).max(1.0),
        v_max: (1.25 * peak_v).max(1.0),
        ..base_config()
    };
    let mut problem = PlanProblem::new(0, 0.0, x0, config.clone());
    problem.terminal = Some(xf);
    let solution = plan(&problem, None)?;
    let dt = config.plan_dt();
    let control_error = solution
        .trajectory
        .controls
        .iter()
        .enumerate()
        .map(|(k, u)| (*u - arc.control((k as f64 + 0.5) * dt)).norm())
        .fold(0.0, f64::max);
    let analytic_cost = arc.cost();
    let gap = (solution.cost - analytic_cost).abs();
    Ok(OracleCase {
        name: name.to_string(),
        analytic_cost,
        planner_cost: solution.cost,
        cost_gap: if analytic_cost > 1e-12 {
            gap / analytic_cost
        } else {
            gap
        },
        control_error,
        u_max: config.u_max,
        converged: solution.converged,
    })
}

/// Rest-to-rest unit move, a coasting instance, and `n_random` instances with positions and
/// velocities drawn from `[−1, 1]²`.
pub fn oracle_battery(n_random: usize, seed: u64) -> Result<Vec<OracleCase>> {
    let steps = 100;
    let mut cases = vec![
        oracle_case(
            "rest-to-rest",
            state(0.0, 0.0, 0.0, 0.0),
            state(1.0, 0.0, 0.0, 0.0),
            steps,
        )?,
        oracle_case(
            "coasting",
            state(0.2, -0.4, 0.5, 0.3),
            state(0.7, -0.1, 0.5, 0.3),
            steps,
        )?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || rng.random_range(-1.0..=1.0);
    for i in 0..n_random {
        let x0 = state(draw(), draw(), draw(), draw());
        let xf = state(draw(), draw(), draw(), draw());
        cases.push(oracle_case(&format!("random-{i:02}"), x0, xf, steps)?);
    }
    Ok(cases)
}

pub fn check_oracle(cases: &[OracleCase]) -> Check {
    let worst_gap = cases.iter().map(|c| c.cost_gap).fold(0.0, f64::max);
    let worst_err = cases
        .iter()
        .map(|c| c.control_error / c.u_max)
        .fold(0.0, f64::max);
    let failed: Vec<&str> = cases
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name.as_str())
        .collect();
    Check::new(
        "bvp-oracle",
        failed.is_empty(),
        format!(
            "{} cases, worst cost gap {worst_gap:.3e}, worst control error {worst_err:.3e} u_max{}",
            cases.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(", failing: {}", failed.join(" "))
            }
        ),
    )
}

// ---------------------------------------------------------------------------------------------
// Consensus under a fixed topology

/// Window length, in seconds, for the disagreement monotonicity check.
pub const CONSENSUS_WINDOW: f64 = 5.0;
pub const CONSENSUS_TOL: f64 = 1e-2;

/// Five agents, complete neighbor graph, random speeds up to 1.
pub fn consensus_scenario(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        config: FlockConfig {
            seed,
            ..base_config()
        },
        initial: InitialConditions::Generated(Placement {
            kind: PlacementKind::UniformDisk,
            region: 1.0,
            speed_max: 1.0,
            base_velocity: Vec2::ZERO,
        }),
        topology_mode: TopologyMode::Fixed,
    }
}

pub fn disagreement_series(log: &SimulationLog) -> Vec<f64> {
    log.states
        .iter()
        .map(|s| velocity_disagreement(s))
        .collect()
}

/// Disagreement maxima over consecutive windows never increase, and the final value is below
/// `CONSENSUS_TOL`.
pub fn check_consensus(log: &SimulationLog, label: &str) -> Check {
    let series = disagreement_series(log);
    let window = (CONSENSUS_WINDOW / log.config.sim_dt).round() as usize;
    let maxima = window_maxima(&series, window);
    let monotone = maxima.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let last = series.last().copied().unwrap_or(0.0);
    let passed = monotone && last < CONSENSUS_TOL;
    let trace: Vec<String> = maxima.iter().map(|m| format!("{m:.2e}")).collect();
    Check::new(
        format!("consensus[{label}]"),
        passed,
        format!(
            "final disagreement {last:.3e}, window maxima non-increasing: {monotone} [{}]",
            trace.join(" ")
        ),
    )
}

/// After the disagreement first drops below `CONSENSUS_TOL`, the flock fits within `N·D`.
pub fn check_diameter(log: &SimulationLog, label: &str) -> Check {
    let bound = log.n_agents() as f64 * log.config.flock_radius + 1e-3;
    let series = disagreement_series(log);
    let Some(start) = series.iter().position(|&d| d < CONSENSUS_TOL) else {
        return Check::new(
            format!("diameter[{label}]"),
            false,
            "consensus never reached; bound not assessed",
        );
    };
    let worst = log.states[start..]
        .iter()
        .map(|s| flock_diameter(s))
        .fold(0.0, f64::max);
    Check::new(
        format!("diameter[{label}]"),
        worst <= bound,
        format!("max diameter after consensus {worst:.4} vs bound {bound:.4}"),
    )
}

// ---------------------------------------------------------------------------------------------
// Consensus preservation

/// Four agents already moving together at `(1, 0)`, well inside each other's flocking radius.
pub fn consensus_preservation_scenario() -> ScenarioSpec {
    let v = 1.0;
    ScenarioSpec {
        config: FlockConfig {
            n_agents: 4,
            k: 3,
            total_time: 10.0,
            ..base_config()
        },
        initial: InitialConditions::Explicit(vec![
            state(0.0, 0.0, v, 0.0),
            state(1.0, 0.0, v, 0.0),
            state(0.0, 1.0, v, 0.0),
            state(1.0, 1.0, v, 0.0),
        ]),
        topology_mode: TopologyMode::Fixed,
    }
}

pub fn check_preservation(log: &SimulationLog) -> Check {
    let max_u = log
        .applied_controls
        .iter()
        .flatten()
        .map(|u| u.norm())
        .fold(0.0, f64::max);
    let tol = log.config.safety_tolerance();
    let constraints_hold = log
        .constraint_history
        .iter()
        .all(|c| c.max_task_residual <= 0.0 && c.min_safety_margin >= -tol);
    Check::new(
        "consensus-preservation",
        max_u <= 1e-6 && constraints_hold,
        format!(
            "max applied control {max_u:.3e}, constraints hold at every step: {constraints_hold}"
        ),
    )
}

// ---------------------------------------------------------------------------------------------
// Safety and continuity

pub fn check_safety(logs: &[(&str, &SimulationLog)]) -> Check {
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (label, log) in logs {
        let r = 2.0 * log.config.body_radius;
        let min_distance = log
            .states
            .iter()
            .map(|s| min_pairwise_distance(s))
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(min_distance / r);
        if min_distance < r - 1e-6 * r {
            failures.push(format!("{label} ({min_distance:.6})"));
        }
    }
    Check::new(
        "hard-safety",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} runs, smallest separation {worst:.6} x 2R", logs.len())
        } else {
            format!("separation below 2R in {}", failures.join(", "))
        },
    )
}

pub fn min_pairwise_distance(states: &[BoidState]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            best = best.min((a.position - b.position).norm());
        }
    }
    best
}

/// Continuity check on every fixed-topology run.
pub fn check_continuity(logs: &[(&str, &SimulationLog)]) -> Check {
    let failing: Vec<String> = logs
        .iter()
        .filter(|(_, log)| log.topology_mode == TopologyMode::Fixed)
        .filter_map(|(label, log)| {
            first_control_jump(log).map(|(agent, step, jump)| {
                format!(
                    "{label} (agent {agent} at t={:.2}, jump {jump:.3} vs {:.3})",
                    log.times[step],
                    default_continuity_bound(
                        log.config.agent_params(agent).u_max,
                        log.config.horizon
                    ) * log.config.sim_dt
                )
            })
        })
        .collect();
    Check::new(
        "control-continuity",
        failing.is_empty(),
        if failing.is_empty() {
            format!(
                "{} fixed-topology runs within 4 u_max / horizon",
                logs.len()
            )
        } else {
            format!("jump above 4 u_max / horizon in {}", failing.join(", "))
        },
    )
}

// ---------------------------------------------------------------------------------------------
// Neighborhood switches

/// Agent 0 sits between a receding pair on the x axis and an approaching pair, so that its two
/// nearest neighbors are exchanged part-way through a step. With `symmetric` the incoming pair
/// mirrors the outgoing one and the center does not move; otherwise the incoming pair is
/// lopsided and the center jumps.
pub fn switch_scenario(symmetric: bool) -> ScenarioSpec {
    let s = 0.4;
    let far = 1.2;
    let incoming_a = if symmetric {
        state(0.0, far, 0.0, -s)
    } else {
        // Same distance and closing speed as the mirrored partner, displaced sideways.
        let x = 0.6;
        let y = (far * far - x * x).sqrt();
        state(x, y, -s * x / far, -s * y / far)
    };
    ScenarioSpec {
        config: FlockConfig {
            n_agents: 5,
            k: 2,
            v_max: 1.0,
            horizon: 1.0,
            plan_steps: 10,
            replan_interval: 0.5,
            total_time: 1.0,
            ..base_config()
        },
        initial: InitialConditions::Explicit(vec![
            state(0.0, 0.0, 0.0, 0.0),
            state(1.0, 0.0, s, 0.0),
            state(-1.0, 0.0, -s, 0.0),
            incoming_a,
            state(0.0, -far, 0.0, s),
        ]),
        topology_mode: TopologyMode::DynamicKnn,
    }
}

/// Sampled rates `‖Δc‖/dt` and `‖Δċ‖/dt` of one agent's center between consecutive steps.
pub fn center_rates(log: &SimulationLog, agent: usize) -> Result<Vec<(f64, f64)>> {
    let dt = log.config.sim_dt;
    let centers = (0..log.times.len())
        .map(|s| log.center_at(s, agent))
        .collect::<Result<Vec<_>>>()?;
    Ok(centers
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).norm() / dt, (w[1].1 - w[0].1).norm() / dt))
        .collect())
}

fn switch_steps(log: &SimulationLog, agent: usize) -> Vec<(usize, bool)> {
    log.switch_events
        .iter()
        .filter(|e| e.agent == agent)
        .map(|e| ((e.time / log.config.sim_dt).round() as usize, e.symmetric))
        .collect()
}

/// Symmetric exchange: agent 0 switches, the switch is classified symmetric, and its center
/// moves no faster than `v_max` throughout.
pub fn check_symmetric_switch(log: &SimulationLog) -> Result<Check> {
    let bound = log.config.v_max + 1e-6;
    let rates = center_rates(log, 0)?;
    let worst = rates.iter().map(|r| r.0).fold(0.0, f64::max);
    let switches = switch_steps(log, 0);
    let passed = !switches.is_empty() && switches.iter().all(|s| s.1) && worst <= bound;
    Ok(Check::new(
        "symmetric-switch",
        passed,
        format!("switches of agent 0 at steps {switches:?}, max |dc|/dt {worst:.3e} vs bound {bound:.3e}"),
    ))
}

/// Lopsided exchange: the only step at which agent 0's center (or its velocity) moves faster
/// than `v_max` is the step of a non-symmetric switch.
pub fn check_asymmetric_switch(log: &SimulationLog) -> Result<Check> {
    let bound = log.config.v_max + 1e-6;
    let rates = center_rates(log, 0)?;
    // rates[s - 1] compares step s with step s − 1.
    let jumps: Vec<usize> = rates
        .iter()
        .enumerate()
        .filter(|(_, r)| r.0 > bound || r.1 > bound)
        .map(|(i, _)| i + 1)
        .collect();
    let switches = switch_steps(log, 0);
    let asym: Vec<usize> = switches.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let passed = !asym.is_empty() && jumps == asym;
    Ok(Check::new(
        "asymmetric-switch",
        passed,
        format!("center jumps at steps {jumps:?}, non-symmetric switches at steps {asym:?}"),
    ))
}

/// Every center jump above the continuity bound, for every agent, coincides with a
/// non-symmetric switch of that agent.
pub fn check_jumps_imply_switch(logs: &[(&str, &SimulationLog)]) -> Result<Check> {
    let mut unexplained = Vec::new();
    for (label, log) in logs {
        let bound = log.config.v_max + 1e-6;
        for agent in 0..log.n_agents() {
            let asym: Vec<usize> = switch_steps(log, agent)
                .into_iter()
                .filter(|s| !s.1)
                .map(|s| s.0)
                .collect();
            for (i, r) in center_rates(log, agent)?.iter().enumerate() {
                if (r.0 > bound || r.1 > bound) && !asym.contains(&(i + 1)) {
                    unexplained.push(format!("{label}: agent {agent} step {}", i + 1));
                }
            }
        }
    }
    Ok(Check::new(
        "jump-implies-switch",
        unexplained.is_empty(),
        if unexplained.is_empty() {
            format!(
                "{} runs, every center jump matches a non-symmetric switch",
                logs.len()
            )
        } else {
            format!("unexplained jumps: {}", unexplained.join(", "))
        },
    ))
}

// ---------------------------------------------------------------------------------------------
// Slack weight

pub const SLACK_ALPHAS: [f64; 3] = [0.1, 1.0, 10.0];

/// Six agents on a line, three apart; with two neighbors each, the end agents start far outside
/// their flocking radius and the flock regroups through several switches.
pub fn slack_scenario(alpha: f64) -> ScenarioSpec {
    ScenarioSpec {
        config: FlockConfig {
            n_agents: 6,
            k: 2,
            alpha,
            total_time: 10.0,
            ..base_config()
        },
        initial: InitialConditions::Explicit(
            (0..6)
                .map(|i| state(3.0 * i as f64, 0.0, 0.0, 0.0))
                .collect(),
        ),
        topology_mode: TopologyMode::DynamicKnn,
    }
}

/// Integrated slack of every agent is non-increasing along `SLACK_ALPHAS`.
pub fn check_slack_tradeoff(logs: &[SimulationLog]) -> Check {
    let slack: Vec<Vec<f64>> = logs
        .iter()
        .map(|log| {
            (0..log.n_agents())
                .map(|i| crate::metrics::integrated_slack(log, i))
                .collect()
        })
        .collect();
    let n = slack.first().map_or(0, Vec::len);
    let mut offenders = Vec::new();
    for i in 0..n {
        if slack
            .windows(2)
            .any(|w| w[1][i] > w[0][i] * (1.0 + 1e-9) + 1e-12)
        {
            offenders.push(i);
        }
    }
    let switches: Vec<usize> = logs.iter().map(|l| l.switch_events.len()).collect();
    let table: Vec<String> = slack
        .iter()
        .zip(SLACK_ALPHAS)
        .map(|(row, a)| {
            let cells: Vec<String> = row.iter().map(|s| format!("{s:.3e}")).collect();
            format!("alpha {a}: [{}]", cells.join(" "))
        })
        .collect();
    Check::new(
        "slack-vs-alpha",
        offenders.is_empty() && switches.iter().all(|&s| s > 0),
        format!(
            "switches {switches:?}; {}{}",
            table.join("; "),
            if offenders.is_empty() {
                String::new()
            } else {
                format!("; increasing for agents {offenders:?}")
            }
        ),
    )
}

// ---------------------------------------------------------------------------------------------
// Determinism

/// Runs `spec` again and compares the CSV rendering byte for byte with `log`.
pub fn check_reproducible(spec: &ScenarioSpec, log: &SimulationLog, label: &str) -> Result<Check> {
    let again = run(spec)?;
    let same = trajectory_csv(log) == trajectory_csv(&again);
    Ok(Check::new(
        format!("determinism[{label}]"),
        same,
        if same {
            "byte-identical trajectory CSV"
        } else {
            "trajectory CSV differs between runs"
        },
    ))
}

// ---------------------------------------------------------------------------------------------
// Suites

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Continuity,
    Switch,
    Consensus,
    Safety,
    Diameter,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "continuity" => Suite::Continuity,
            "switch" => Suite::Switch,
            "consensus" => Suite::Consensus,
            "safety" => Suite::Safety,
            "diameter" => Suite::Diameter,
            "all" => Suite::All,
            other => return Err(format!("unknown suite `{other}`")),
        })
    }
}

pub const CONSENSUS_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Runs a suite, reporting each check to `progress` as soon as it completes.
pub fn run_suite(suite: Suite, mut progress: impl FnMut(&Check)) -> Result<Vec<Check>> {
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let mut checks = Vec::new();
    let mut push = |c: Check, checks: &mut Vec<Check>| {
        progress(&c);
        checks.push(c);
    };

    let needs_consensus = wants(Suite::Consensus)
        || wants(Suite::Diameter)
        || wants(Suite::Continuity)
        || wants(Suite::Safety);
    let seeds: &[u64] = if wants(Suite::Consensus) || wants(Suite::Diameter) {
        &CONSENSUS_SEEDS
    } else {
        &CONSENSUS_SEEDS[..1]
    };
    let mut consensus_logs = Vec::new();
    if needs_consensus {
        for &seed in seeds {
            consensus_logs.push((format!("seed {seed}"), run(&consensus_scenario(seed))?));
        }
    }
    let preservation =
        if wants(Suite::Consensus) || wants(Suite::Continuity) || wants(Suite::Safety) {
            Some(run(&consensus_preservation_scenario())?)
        } else {
            None
        };
    let switch_logs = if wants(Suite::Switch) || wants(Suite::Safety) {
        Some((run(&switch_scenario(true))?, run(&switch_scenario(false))?))
    } else {
        None
    };

    if wants(Suite::Consensus) {
        for (label, log) in &consensus_logs {
            push(check_consensus(log, label), &mut checks);
        }
        if let Some(log) = &preservation {
            push(check_preservation(log), &mut checks);
        }
    }
    if wants(Suite::Diameter) {
        for (label, log) in &consensus_logs {
            push(check_diameter(log, label), &mut checks);
        }
    }
    if wants(Suite::Continuity) {
        let mut logs: Vec<(&str, &SimulationLog)> = consensus_logs
            .iter()
            .map(|(l, g)| (l.as_str(), g))
            .collect();
        if let Some(log) = &preservation {
            logs.push(("preservation", log));
        }
        push(check_continuity(&logs), &mut checks);
    }
    if wants(Suite::Switch) {
        if let Some((sym, asym)) = &switch_logs {
            push(check_symmetric_switch(sym)?, &mut checks);
            push(check_asymmetric_switch(asym)?, &mut checks);
            push(
                check_jumps_imply_switch(&[("symmetric", sym), ("asymmetric", asym)])?,
                &mut checks,
            );
        }
    }
    if wants(Suite::Safety) {
        let slack = run(&slack_scenario(1.0))?;
        let mut logs: Vec<(&str, &SimulationLog)> = consensus_logs
            .iter()
            .map(|(l, g)| (l.as_str(), g))
            .collect();
        if let Some(log) = &preservation {
            logs.push(("preservation", log));
        }
        if let Some((sym, asym)) = &switch_logs {
            logs.push(("symmetric switch", sym));
            logs.push(("asymmetric switch", asym));
        }
        logs.push(("line regroup", &slack));
        push(check_safety(&logs), &mut checks);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_to_rest_oracle_case() {
        let case = oracle_case(
            "rest-to-rest",
            state(0.0, 0.0, 0.0, 0.0),
            state(1.0, 0.0, 0.0, 0.0),
            100,
        )
        .unwrap();
        assert!((case.analytic_cost - 6.0).abs() < 1e-12);
        assert!(case.passed(), "{case:?}");
    }

    #[test]
    fn coasting_oracle_case_costs_nothing() {
        let case = oracle_case(
            "coasting",
            state(0.0, 0.0, 1.0, 0.0),
            state(1.0, 0.0, 1.0, 0.0),
            100,
        )
        .unwrap();
        assert_eq!(case.analytic_cost, 0.0);
        assert!(case.planner_cost <= 1e-12);
        assert!(case.passed());
    }

    #[test]
    fn switch_scenarios() {
        let sym = run(&switch_scenario(true)).unwrap();
        let asym = run(&switch_scenario(false)).unwrap();
        assert!(
            check_symmetric_switch(&sym).unwrap().passed,
            "{}",
            check_symmetric_switch(&sym).unwrap()
        );
        assert!(
            check_asymmetric_switch(&asym).unwrap().passed,
            "{}",
            check_asymmetric_switch(&asym).unwrap()
        );
        let jumps = check_jumps_imply_switch(&[("s", &sym), ("a", &asym)]).unwrap();
        assert!(jumps.passed, "{jumps}");
    }

    #[test]
    fn preservation_scenario_passes() {
        let log = run(&consensus_preservation_scenario()).unwrap();
        assert!(check_preservation(&log).passed);
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("all".parse::<Suite>(), Ok(Suite::All));
        assert!("nope".parse::<Suite>().is_err());
    }
}
