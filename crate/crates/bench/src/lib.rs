//! Fixtures shared by the benchmarks.

use flock_core::experiments::base_config;
use flock_core::simulator::{InitialConditions, Placement, PlacementKind};
use flock_core::{
    BoidState, FlockConfig, PlanProblem, ScenarioSpec, TopologyMode, Trajectory, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Positions drawn uniformly from a square of half-width `half_width`.
pub fn random_positions(n: usize, half_width: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec2::new(
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
            )
        })
        .collect()
}

/// Agent 0 outside the flock radius and moving away, with `neighbors` coasting agents on a
/// ring around the origin, so that the task constraint binds.
pub fn planning_problem(neighbors: usize) -> PlanProblem {
    let config = FlockConfig {
        n_agents: neighbors + 1,
        k: neighbors,
        ..base_config()
    };
    let mut problem = PlanProblem::new(
        0,
        0.0,
        BoidState::new(Vec2::new(2.5, 0.0), Vec2::new(0.8, 0.0)),
        config.clone(),
    );
    for j in 1..=neighbors {
        let angle = std::f64::consts::TAU * j as f64 / neighbors as f64;
        let x0 = BoidState::new(
            Vec2::new(1.5 * angle.cos(), 1.5 * angle.sin()),
            Vec2::new(0.2 * angle.sin(), -0.2 * angle.cos()),
        );
        problem.neighbor_trajectories.insert(
            j,
            Trajectory::ballistic(0.0, config.plan_dt(), x0, config.plan_steps),
        );
    }
    problem
}

/// A short generated-placement scenario.
pub fn scenario(
    n_agents: usize,
    k: usize,
    topology_mode: TopologyMode,
    total_time: f64,
) -> ScenarioSpec {
    ScenarioSpec {
        config: FlockConfig {
            n_agents,
            k,
            total_time,
            seed: 17,
            ..base_config()
        },
        initial: InitialConditions::Generated(Placement {
            kind: PlacementKind::UniformDisk,
            region: (n_agents as f64).sqrt(),
            speed_max: 0.5,
            base_velocity: Vec2::ZERO,
        }),
        topology_mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planning_fixture_needs_control() {
        let solution = flock_core::plan(&planning_problem(4), None).unwrap();
        assert!(solution.converged);
        assert!(solution.cost > 1e-3);
    }

    #[test]
    fn fixtures_are_valid() {
        assert_eq!(random_positions(7, 1.0, 1), random_positions(7, 1.0, 1));
        scenario(6, 3, TopologyMode::Fixed, 1.0).validate().unwrap();
    }
}
