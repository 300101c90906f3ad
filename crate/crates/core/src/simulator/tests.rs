use super::*;
use crate::config::test_config;

fn at_rest(x: f64, y: f64) -> BoidState {
    BoidState::new(Vec2::new(x, y), Vec2::ZERO)
}

fn explicit(config: FlockConfig, states: Vec<BoidState>, mode: TopologyMode) -> ScenarioSpec {
    ScenarioSpec {
        config,
        initial: InitialConditions::Explicit(states),
        topology_mode: mode,
    }
}

#[test]
fn registry_read_falls_back_to_coasting() {
    let cfg = test_config();
    let reg = TrajectoryRegistry::new();
    let x = BoidState::new(Vec2::new(1.0, 0.0), Vec2::new(0.5, 0.0));
    let tr = reg.read(3, x, 2.0, &cfg);
    assert_eq!(tr.t0, 2.0);
    assert!(tr.controls.iter().all(|u| *u == Vec2::ZERO));
    assert!((tr.final_state().position - Vec2::new(1.0 + 0.5 * cfg.horizon, 0.0)).norm() < 1e-12);
}

#[test]
fn registry_keeps_latest_commit() {
    let cfg = test_config();
    let mut reg = TrajectoryRegistry::new();
    let a = Trajectory::ballistic(0.0, cfg.plan_dt(), at_rest(0.0, 0.0), cfg.plan_steps);
    let b = Trajectory::ballistic(0.0, cfg.plan_dt(), at_rest(5.0, 0.0), cfg.plan_steps);
    reg.commit(0, 0.0, a.clone());
    assert_eq!(reg.committed(0), Some(&a));
    reg.commit(0, 0.0, b.clone());
    assert_eq!(reg.committed(0), Some(&b));
    assert_eq!(reg.read(0, at_rest(9.0, 9.0), 0.0, &cfg), b);
}

#[test]
fn consensus_examples() {
    let v = |x, y| BoidState::new(Vec2::ZERO, Vec2::new(x, y));
    assert!(detect_consensus(&[v(1.0, 2.0), v(1.0, 2.0)], 1e-15));
    assert!(!detect_consensus(&[v(1.0, 0.0), v(1.0, 0.5)], 0.1));
    assert!(detect_consensus(
        &[v(1.0, 0.0), v(1.0, 1e-3), v(1.0, -1e-3)],
        0.01
    ));
}

#[test]
fn generated_placement_is_separated_and_seeded() {
    let mut cfg = test_config();
    cfg.n_agents = 12;
    let spec = ScenarioSpec {
        config: cfg.clone(),
        initial: InitialConditions::Generated(Placement {
            kind: PlacementKind::UniformDisk,
            region: 1.0,
            speed_max: 1.0,
            base_velocity: Vec2::new(0.5, 0.0),
        }),
        topology_mode: TopologyMode::DynamicKnn,
    };
    let a = spec.initial_states().unwrap();
    let positions: Vec<Vec2> = a.iter().map(|s| s.position).collect();
    assert!(separated(&positions, cfg.body_radius));
    assert!(a
        .iter()
        .all(|s| (s.velocity - Vec2::new(0.5, 0.0)).norm() <= 1.0));
    assert_eq!(a, spec.initial_states().unwrap());

    let mut other = spec.clone();
    other.config.seed += 1;
    assert_ne!(a, other.initial_states().unwrap());
}

#[test]
fn grid_that_cannot_fit_is_rejected() {
    let spec = ScenarioSpec {
        config: test_config(),
        initial: InitialConditions::Generated(Placement {
            kind: PlacementKind::Grid,
            region: 0.1,
            speed_max: 0.0,
            base_velocity: Vec2::ZERO,
        }),
        topology_mode: TopologyMode::Fixed,
    };
    match spec.initial_states() {
        Err(FlockError::Config { key, .. }) => assert_eq!(key, "placement"),
        other => panic!("expected placement error, got {other:?}"),
    }
}

#[test]
fn explicit_state_count_must_match() {
    let spec = explicit(
        test_config(),
        vec![at_rest(0.0, 0.0)],
        TopologyMode::DynamicKnn,
    );
    match spec.validate() {
        Err(FlockError::Config { key, .. }) => assert_eq!(key, "initial_states"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fixed_mode_requires_connected_graph() {
    let mut cfg = test_config();
    cfg.n_agents = 4;
    cfg.k = 1;
    let states = vec![
        at_rest(0.0, 0.0),
        at_rest(0.5, 0.0),
        at_rest(10.0, 0.0),
        at_rest(10.5, 0.0),
    ];
    match run(&explicit(cfg, states, TopologyMode::Fixed)) {
        Err(FlockError::Config { key, .. }) => assert_eq!(key, "topology_mode"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn agents_in_consensus_coast() {
    let mut cfg = test_config();
    cfg.n_agents = 4;
    cfg.k = 3;
    cfg.total_time = 3.0;
    let v = Vec2::new(1.0, 0.0);
    let states = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        .iter()
        .map(|&(x, y)| BoidState::new(Vec2::new(x, y), v))
        .collect();
    let log = run(&explicit(cfg, states, TopologyMode::Fixed)).unwrap();
    let max_u = log
        .applied_controls
        .iter()
        .flatten()
        .map(|u| u.norm())
        .fold(0.0, f64::max);
    assert!(max_u <= 1e-6, "{max_u}");
    assert!(log.safety_failures.is_empty());
    assert!(log
        .constraint_history
        .iter()
        .all(|c| c.max_task_residual < 0.0));
    assert_eq!(log.times.len(), 31);
    assert!(log.switch_events.is_empty());
}

#[test]
fn distant_pair_closes_in() {
    let mut cfg = test_config();
    cfg.n_agents = 2;
    cfg.k = 1;
    cfg.total_time = 4.0;
    let log = run(&explicit(
        cfg.clone(),
        vec![at_rest(0.0, 0.0), at_rest(3.0, 0.0)],
        TopologyMode::DynamicKnn,
    ))
    .unwrap();
    let g0 = log.diagnostics[0][0].g;
    assert!(g0 > 0.0);
    // The pair enters the flocking radius and stays there.
    let inside = log
        .diagnostics
        .iter()
        .position(|d| d[0].g <= 0.0 && d[1].g <= 0.0)
        .expect("never inside");
    assert!(log.diagnostics[inside..]
        .iter()
        .all(|d| d[0].g <= 1e-6 && d[1].g <= 1e-6));
    assert!(log.safety_failures.is_empty());
    assert_eq!(
        log.replan_events
            .iter()
            .filter(|e| e.cause == ReplanCause::Initial)
            .count(),
        2
    );
}

#[test]
fn runs_are_reproducible() {
    let mut cfg = test_config();
    cfg.total_time = 2.0;
    let spec = ScenarioSpec {
        config: cfg,
        initial: InitialConditions::Generated(Placement {
            kind: PlacementKind::UniformDisk,
            region: 1.5,
            speed_max: 1.0,
            base_velocity: Vec2::ZERO,
        }),
        topology_mode: TopologyMode::DynamicKnn,
    };
    assert_eq!(run(&spec).unwrap(), run(&spec).unwrap());
}

#[test]
fn overlapping_start_is_flagged() {
    let mut cfg = test_config();
    cfg.n_agents = 2;
    cfg.k = 1;
    cfg.total_time = 0.5;
    let log = run(&explicit(
        cfg,
        vec![at_rest(0.0, 0.0), at_rest(0.05, 0.0)],
        TopologyMode::DynamicKnn,
    ))
    .unwrap();
    assert!(!log.safety_failures.is_empty());
    assert_eq!(log.safety_failures[0].pair, (0, 1));
    assert!(log.degraded_plans().count() > 0);
}
