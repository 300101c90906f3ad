//! Scenario files, trajectory CSV, event log and report serialization.
//!
//! Scenarios are TOML documents: the flock parameters as top-level keys, a `[placement]` table
//! or an `[[initial_states]]` list, and optional `[overrides.<id>]` tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{AgentOverride, FlockConfig};
use crate::error::{FlockError, Result};
use crate::metrics::RunReport;
use crate::simulator::{InitialConditions, Placement, ScenarioSpec, SimulationLog, TopologyMode};
use crate::state::{AgentId, BoidState, Vec2};

pub const TRAJECTORY_HEADER: &str = "t,agent,px,py,vx,vy,ux,uy,g,eta_sq,min_safety";
pub const EVENT_HEADER: &str = "t,agent,kind,detail";

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVENT_FILE: &str = "events.csv";
pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateEntry {
    id: AgentId,
    px: f64,
    py: f64,
    vx: f64,
    vy: f64,
}

/// On-disk layout. Every field is optional so that missing keys can be reported by name.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n_agents: Option<usize>,
    k: Option<usize>,
    body_radius: Option<f64>,
    flock_radius: Option<f64>,
    alpha: Option<f64>,
    v_max: Option<f64>,
    u_max: Option<f64>,
    horizon: Option<f64>,
    plan_steps: Option<usize>,
    sim_dt: Option<f64>,
    replan_interval: Option<f64>,
    total_time: Option<f64>,
    seed: Option<u64>,
    topology_mode: Option<TopologyMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    safety_range: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    placement: Option<Placement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_states: Option<Vec<StateEntry>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    overrides: BTreeMap<String, AgentOverride>,
}

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| FlockError::config(key, "required key is missing"))
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| FlockError::Parse(e.to_string()))?;
    let n_agents = required(file.n_agents, "n_agents")?;
    let mut overrides = BTreeMap::new();
    for (key, ov) in file.overrides {
        let id: AgentId = key.parse().map_err(|_| {
            FlockError::config(
                format!("overrides.{key}"),
                "agent id must be a nonnegative integer",
            )
        })?;
        if id >= n_agents {
            return Err(FlockError::config(
                format!("overrides.{key}"),
                format!("no agent {id} among {n_agents}"),
            ));
        }
        overrides.insert(id, ov);
    }
    let config = FlockConfig {
        n_agents,
        k: required(file.k, "k")?,
        body_radius: required(file.body_radius, "body_radius")?,
        flock_radius: required(file.flock_radius, "flock_radius")?,
        alpha: required(file.alpha, "alpha")?,
        v_max: required(file.v_max, "v_max")?,
        u_max: required(file.u_max, "u_max")?,
        horizon: required(file.horizon, "horizon")?,
        plan_steps: required(file.plan_steps, "plan_steps")?,
        sim_dt: required(file.sim_dt, "sim_dt")?,
        replan_interval: required(file.replan_interval, "replan_interval")?,
        total_time: required(file.total_time, "total_time")?,
        seed: required(file.seed, "seed")?,
        safety_range: file.safety_range,
        overrides,
    };
    let topology_mode = required(file.topology_mode, "topology_mode")?;
    let initial = match (file.initial_states, file.placement) {
        (Some(entries), _) => {
            let mut states = vec![None; n_agents];
            for e in entries {
                let slot = states.get_mut(e.id).ok_or_else(|| {
                    FlockError::config("initial_states", format!("agent id {} out of range", e.id))
                })?;
                if slot.is_some() {
                    return Err(FlockError::config(
                        "initial_states",
                        format!("agent {} listed twice", e.id),
                    ));
                }
                *slot = Some(BoidState::new(Vec2::new(e.px, e.py), Vec2::new(e.vx, e.vy)));
            }
            let states = states
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    s.ok_or_else(|| {
                        FlockError::config("initial_states", format!("agent {i} has no state"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            InitialConditions::Explicit(states)
        }
        (None, Some(p)) => InitialConditions::Generated(p),
        (None, None) => {
            return Err(FlockError::config(
                "placement",
                "required section is missing",
            ))
        }
    };
    let spec = ScenarioSpec {
        config,
        initial,
        topology_mode,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn serialize_scenario(spec: &ScenarioSpec) -> Result<String> {
    let cfg = &spec.config;
    let (placement, initial_states) = match &spec.initial {
        InitialConditions::Generated(p) => (Some(*p), None),
        InitialConditions::Explicit(states) => (
            None,
            Some(
                states
                    .iter()
                    .enumerate()
                    .map(|(id, s)| StateEntry {
                        id,
                        px: s.position.x,
                        py: s.position.y,
                        vx: s.velocity.x,
                        vy: s.velocity.y,
                    })
                    .collect(),
            ),
        ),
    };
    let file = ScenarioFile {
        n_agents: Some(cfg.n_agents),
        k: Some(cfg.k),
        body_radius: Some(cfg.body_radius),
        flock_radius: Some(cfg.flock_radius),
        alpha: Some(cfg.alpha),
        v_max: Some(cfg.v_max),
        u_max: Some(cfg.u_max),
        horizon: Some(cfg.horizon),
        plan_steps: Some(cfg.plan_steps),
        sim_dt: Some(cfg.sim_dt),
        replan_interval: Some(cfg.replan_interval),
        total_time: Some(cfg.total_time),
        seed: Some(cfg.seed),
        topology_mode: Some(spec.topology_mode),
        safety_range: cfg.safety_range,
        placement,
        initial_states,
        overrides: cfg
            .overrides
            .iter()
            .map(|(id, ov)| (id.to_string(), *ov))
            .collect(),
    };
    toml::to_string(&file).map_err(|e| FlockError::Parse(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| FlockError::Parse(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// One row of the trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub agent: AgentId,
    pub state: BoidState,
    pub control: Vec2,
    pub g: f64,
    pub eta_sq: f64,
    pub min_safety: f64,
}

fn num(out: &mut String, v: f64) {
    // Scientific notation with 16 significant digits.
    let _ = write!(out, "{v:.15e}");
}

pub fn trajectory_rows(log: &SimulationLog) -> Vec<TrajectoryRow> {
    let mut rows = Vec::with_capacity(log.times.len() * log.n_agents());
    for (s, &t) in log.times.iter().enumerate() {
        for agent in 0..log.n_agents() {
            let d = log.diagnostics[s][agent];
            rows.push(TrajectoryRow {
                t,
                agent,
                state: log.states[s][agent],
                control: log.applied_controls[s][agent],
                g: d.g,
                eta_sq: d.eta_sq,
                min_safety: d.min_safety,
            });
        }
    }
    rows
}

pub fn trajectory_csv(log: &SimulationLog) -> String {
    let mut out = String::with_capacity(200 * log.times.len() * log.n_agents());
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in trajectory_rows(log) {
        num(&mut out, r.t);
        let _ = write!(out, ",{}", r.agent);
        for v in [
            r.state.position.x,
            r.state.position.y,
            r.state.velocity.x,
            r.state.velocity.y,
            r.control.x,
            r.control.y,
            r.g,
            r.eta_sq,
            r.min_safety,
        ] {
            out.push(',');
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        other => return Err(FlockError::Parse(format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| FlockError::Parse(format!("line {}: {what}", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 11 {
                return Err(bad("expected 11 fields"));
            }
            let f = |j: usize| {
                fields[j]
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("bad number `{}`", fields[j])))
            };
            Ok(TrajectoryRow {
                t: f(0)?,
                agent: fields[1].parse().map_err(|_| bad("bad agent id"))?,
                state: BoidState::new(Vec2::new(f(2)?, f(3)?), Vec2::new(f(4)?, f(5)?)),
                control: Vec2::new(f(6)?, f(7)?),
                g: f(8)?,
                eta_sq: f(9)?,
                min_safety: f(10)?,
            })
        })
        .collect()
}

/// Switch, replan and safety-failure events ordered by time.
pub fn event_log(log: &SimulationLog) -> String {
    let mut events: Vec<(f64, usize, AgentId, &str, String)> = Vec::new();
    let ids = |v: &[AgentId]| {
        v.iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for e in &log.switch_events {
        events.push((
            e.time,
            0,
            e.agent,
            "switch",
            format!(
                "removed={};added={};symmetric={}",
                ids(&e.removed),
                ids(&e.added),
                e.symmetric
            ),
        ));
    }
    for e in &log.replan_events {
        events.push((
            e.time,
            1,
            e.agent,
            "replan",
            format!(
                "cause={};converged={};committed={};cost={:.6e}",
                e.cause, e.converged, e.committed, e.cost
            ),
        ));
    }
    for f in &log.safety_failures {
        events.push((
            f.time,
            2,
            f.pair.0,
            "safety-failure",
            format!("partner={};margin={:.6e}", f.pair.1, f.margin),
        ));
    }
    // Stable: events of one kind keep their generation order.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::from(EVENT_HEADER);
    out.push('\n');
    for (t, _, agent, kind, detail) in events {
        let _ = writeln!(out, "{t:.6},{agent},{kind},{detail}");
    }
    out
}

/// `key: value` lines; per-agent maps are flattened to `key.<id>`.
pub fn report_text(report: &RunReport) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k}: {v}");
    };
    line("topology_mode", report.topology_mode.to_string());
    line("consensus_tol", format!("{:e}", report.consensus_tol));
    line(
        "consensus_time",
        report
            .consensus_time
            .map_or_else(|| "none".to_string(), |t| format!("{t:.6}")),
    );
    line(
        "final_velocity_disagreement",
        format!("{:.6e}", report.final_velocity_disagreement),
    );
    for (i, e) in &report.total_energy {
        line(&format!("total_energy.{i}"), format!("{e:.6e}"));
    }
    line(
        "min_safety_margin",
        format!("{:.6e}", report.min_safety_margin),
    );
    line(
        "max_task_residual",
        format!("{:.6e}", report.max_task_residual),
    );
    for (i, s) in &report.integrated_slack {
        line(&format!("integrated_slack.{i}"), format!("{s:.6e}"));
    }
    line(
        "flock_diameter_final",
        format!("{:.6e}", report.flock_diameter_final),
    );
    line("diameter_bound", format!("{:.6e}", report.diameter_bound));
    line(
        "control_continuity_ok",
        report.control_continuity_ok.to_string(),
    );
    line("safety_failures", report.safety_failures.to_string());
    line("degraded_plans", report.degraded_plans.to_string());
    line("switch_events", report.switch_events.to_string());
    line("replans", report.replans.to_string());
    out
}

/// Writes the trajectory CSV, event log and report into `dir`, creating it if needed.
pub fn write_run_outputs(
    dir: &Path,
    log: &SimulationLog,
    report: &RunReport,
) -> Result<Vec<PathBuf>> {
    let io_err = |p: &Path, e: std::io::Error| FlockError::Parse(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let files = [
        (TRAJECTORY_FILE, trajectory_csv(log)),
        (EVENT_FILE, event_log(log)),
        (REPORT_FILE, report_text(report)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::test_config;
    use crate::simulator::{run, PlacementKind};
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
n_agents = 3
k = 2
body_radius = 0.1
flock_radius = 2.0
alpha = 1.0
v_max = 2.0
u_max = 2.0
horizon = 2.0
plan_steps = 20
sim_dt = 0.1
replan_interval = 0.5
total_time = 1.0
seed = 7
topology_mode = "fixed"

[placement]
kind = "uniform-disk"
region = 1.0
speed_max = 0.5
"#;

    fn key_of(err: FlockError) -> String {
        match err {
            FlockError::Config { key, .. } => key,
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn parses_minimal_scenario() {
        let spec = parse_scenario(MINIMAL).unwrap();
        assert_eq!(spec.config.n_agents, 3);
        assert_eq!(spec.topology_mode, TopologyMode::Fixed);
        match spec.initial {
            InitialConditions::Generated(p) => {
                assert_eq!(p.kind, PlacementKind::UniformDisk);
                assert_eq!(p.base_velocity, Vec2::ZERO);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn missing_and_invalid_keys_are_named() {
        let without_k = MINIMAL.replace("k = 2\n", "");
        assert_eq!(key_of(parse_scenario(&without_k).unwrap_err()), "k");
        let k_too_big = MINIMAL.replace("k = 2", "k = 3");
        assert_eq!(key_of(parse_scenario(&k_too_big).unwrap_err()), "k");
        let bad_radius = MINIMAL.replace("body_radius = 0.1", "body_radius = -0.1");
        assert_eq!(
            key_of(parse_scenario(&bad_radius).unwrap_err()),
            "body_radius"
        );
        let no_placement = MINIMAL.split("[placement]").next().unwrap().to_string();
        assert_eq!(
            key_of(parse_scenario(&no_placement).unwrap_err()),
            "placement"
        );
        let bad_override = format!("{MINIMAL}\n[overrides.9]\nalpha = 2.0\n");
        assert_eq!(
            key_of(parse_scenario(&bad_override).unwrap_err()),
            "overrides.9"
        );
    }

    #[test]
    fn unknown_keys_and_type_errors_are_reported() {
        let err = parse_scenario(&format!("colour = 1\n{MINIMAL}")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err = parse_scenario(&MINIMAL.replace("seed = 7", "seed = \"seven\"")).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn explicit_states_must_cover_every_agent() {
        let doc = MINIMAL.split("[placement]").next().unwrap().to_string()
            + "[[initial_states]]\nid = 0\npx = 0.0\npy = 0.0\nvx = 0.0\nvy = 0.0\n"
            + "[[initial_states]]\nid = 2\npx = 1.0\npy = 0.0\nvx = 0.0\nvy = 0.0\n";
        assert_eq!(key_of(parse_scenario(&doc).unwrap_err()), "initial_states");
    }

    #[test]
    fn csv_round_trip_and_header() {
        let mut cfg = test_config();
        cfg.total_time = 0.5;
        let spec = ScenarioSpec {
            config: cfg,
            initial: InitialConditions::Generated(Placement {
                kind: PlacementKind::UniformDisk,
                region: 1.0,
                speed_max: 0.5,
                base_velocity: Vec2::ZERO,
            }),
            topology_mode: TopologyMode::DynamicKnn,
        };
        let log = run(&spec).unwrap();
        let text = trajectory_csv(&log);
        assert_eq!(text.lines().next(), Some(TRAJECTORY_HEADER));
        let parsed = parse_trajectory_csv(&text).unwrap();
        let rows = trajectory_rows(&log);
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in parsed.iter().zip(&rows) {
            assert_eq!(a.agent, b.agent);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1e-300);
            assert!(
                close(a.t, b.t) && close(a.state.position.x, b.state.position.x) && close(a.g, b.g)
            );
            assert!(close(a.control.y, b.control.y) && close(a.min_safety, b.min_safety));
        }
        let ordered = parsed
            .windows(2)
            .all(|w| (w[0].t, w[0].agent) < (w[1].t, w[1].agent));
        assert!(ordered);
        assert!(event_log(&log).starts_with(EVENT_HEADER));
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = test_config();
        cfg.total_time = 0.2;
        let spec = ScenarioSpec {
            config: cfg,
            initial: InitialConditions::Generated(Placement {
                kind: PlacementKind::Grid,
                region: 1.0,
                speed_max: 0.2,
                base_velocity: Vec2::ZERO,
            }),
            topology_mode: TopologyMode::Fixed,
        };
        let log = run(&spec).unwrap();
        let report = RunReport::from_log(&log, 1e-2);
        let files = write_run_outputs(&dir.path().join("out"), &log, &report).unwrap();
        assert_eq!(files.len(), 3);
        let text = fs::read_to_string(&files[2]).unwrap();
        assert!(text.contains("diameter_bound: "));
        assert!(text.lines().all(|l| l.contains(": ")));
    }

    fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
        lo..hi
    }

    fn spec_strategy() -> impl Strategy<Value = ScenarioSpec> {
        let counts = (2usize..7).prop_flat_map(|n| (Just(n), 1..n));
        let physical = (
            finite(0.01, 0.5),
            finite(1.1, 4.0),
            finite(0.0, 10.0),
            finite(0.1, 5.0),
            finite(0.1, 5.0),
        );
        let timing = (
            finite(0.5, 4.0),
            1usize..60,
            finite(0.01, 0.1),
            finite(1.0, 5.0),
            any::<u64>(),
        );
        let extras = (
            prop::option::of(finite(0.1, 10.0)),
            prop::option::of((finite(0.0, 5.0), finite(0.1, 3.0))),
            any::<bool>(),
            any::<bool>(),
        );
        (counts, physical, timing, extras).prop_map(
            |(
                (n, k),
                (r, d_factor, alpha, v_max, u_max),
                (horizon, m, sim_dt, total, seed),
                (range, ov, explicit, fixed),
            )| {
                let mut overrides = BTreeMap::new();
                if let Some((a, u)) = ov {
                    overrides.insert(
                        n - 1,
                        AgentOverride {
                            alpha: Some(a),
                            v_max: None,
                            u_max: Some(u),
                        },
                    );
                }
                let config = FlockConfig {
                    n_agents: n,
                    k,
                    body_radius: r,
                    flock_radius: 2.0 * r * d_factor,
                    alpha,
                    v_max,
                    u_max,
                    horizon,
                    plan_steps: m,
                    sim_dt,
                    replan_interval: horizon * 0.5,
                    total_time: total,
                    seed,
                    safety_range: range,
                    overrides,
                };
                let initial = if explicit {
                    InitialConditions::Explicit(
                        (0..n)
                            .map(|i| {
                                BoidState::new(
                                    Vec2::new(i as f64 * 0.3 + 0.1, -0.7),
                                    Vec2::new(0.25, i as f64 / 3.0),
                                )
                            })
                            .collect(),
                    )
                } else {
                    InitialConditions::Generated(Placement {
                        kind: PlacementKind::UniformDisk,
                        region: 1.0 + seed as f64 / u64::MAX as f64,
                        speed_max: 0.3,
                        base_velocity: Vec2::new(0.1, -1.0 / 3.0),
                    })
                };
                ScenarioSpec {
                    config,
                    initial,
                    topology_mode: if fixed {
                        TopologyMode::Fixed
                    } else {
                        TopologyMode::DynamicKnn
                    },
                }
            },
        )
    }

    proptest! {
        #[test]
        fn scenario_round_trip(spec in spec_strategy()) {
            let text = serialize_scenario(&spec).unwrap();
            prop_assert_eq!(parse_scenario(&text).unwrap(), spec);
        }
    }
}
