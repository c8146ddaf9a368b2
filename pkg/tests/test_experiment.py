import dataclasses

import numpy as np
import pytest

from goalbabbling.competence import CompetenceConfig, clip_to_gamma, competence_normalized
from goalbabbling.config import EnvironmentSpec, ExperimentConfig
from goalbabbling.experiment import ActuatorRiacPolicy, run_experiment, run_with_memory, strategy_goal
from goalbabbling.rng import RngStreams
from goalbabbling.spaces import Box


def arm_config(**overrides):
    defaults = dict(
        strategy="sagg_riac",
        budget=600,
        seed=1,
        environment=EnvironmentSpec(type="arm", n_dof=3, rest_angle=0.35),
        task_low=(0.0, -60.0),
        task_high=(60.0, 60.0),
        region_capacity=15,
        burn_in_goals=4,
        subgoal_count=3,
        velocity=1.0,
        explore_actions=8,
        regression_neighbors=8,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def map_config(**overrides):
    defaults = dict(
        strategy="sagg_riac",
        budget=400,
        seed=2,
        environment=EnvironmentSpec(type="synergy_map", n_dof=4),
        task_low=(-80.0, -80.0),
        task_high=(80.0, 80.0),
        region_capacity=15,
        burn_in_goals=4,
        subgoals=False,
        explore_actions=6,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def test_zero_budget_gives_empty_log():
    log = run_experiment(arm_config(budget=0))
    assert log.attempts == []
    assert log.goals == []
    assert log.final_memory_size == 0


def test_budget_is_spent_exactly():
    for config in (arm_config(), map_config()):
        log = run_experiment(config)
        assert log.attempts[-1].total_actions == config.budget


def test_sagg_random_mode_log_is_all_random():
    log = run_experiment(arm_config(strategy="sagg_random", budget=300))
    assert log.goals
    assert all(g.mode == "random" for g in log.goals)


def test_sagg_riac_modes_activate_after_burn_in():
    log = run_experiment(arm_config(budget=1500, burn_in_goals=3))
    modes = [g.mode for g in log.goals]
    assert set(modes[:3]) == {"uniform"}
    assert set(modes[3:]) & {"interest", "low_competence"}


def test_memory_growth_matches_budget():
    # Every micro-action is stored exactly once.
    config = arm_config(budget=500)
    log, memory = run_with_memory(config)
    assert len(memory) == 500 == log.final_memory_size


def test_conservation_updates_once_per_micro_action():
    config = arm_config(budget=400, conservation=True)
    log = run_experiment(config)
    assert log.en_route_updates == 400
    off = run_experiment(dataclasses.replace(config, conservation=False))
    assert off.en_route_updates == 0


def test_gamma_consistent_with_competence_module():
    config = arm_config(budget=800)
    log = run_experiment(config)
    competence = CompetenceConfig(config.reached_tolerance, config.min_start_distance, config.dim_scales())
    assert log.attempts
    for row in log.attempts:
        expected = clip_to_gamma(
            competence_normalized(row.goal, row.final, row.start, competence), competence
        )
        assert row.gamma == pytest.approx(expected, abs=1e-12)


def test_determinism_fifteen_dof_thousand_steps():
    config = ExperimentConfig(
        strategy="sagg_riac",
        budget=1000,
        seed=9,
        environment=EnvironmentSpec(type="arm", n_dof=15, rest_angle=0.15),
        task_low=(0.0, -150.0),
        task_high=(150.0, 150.0),
        burn_in_goals=10,
    )
    a = run_experiment(config)
    b = run_experiment(config)
    assert len(a.attempts) == len(b.attempts)
    for ra, rb in zip(a.attempts, b.attempts):
        assert ra.gamma == rb.gamma
        assert ra.actions == rb.actions
        assert np.array_equal(ra.goal, rb.goal)
        assert np.array_equal(ra.final, rb.final)
    assert a.resets == b.resets
    assert [g.mode for g in a.goals] == [g.mode for g in b.goals]


def test_seed_changes_trajectories():
    config = arm_config(budget=300)
    a = run_experiment(config)
    b = run_experiment(dataclasses.replace(config, seed=1234))
    assert any(
        not np.array_equal(ga.point, gb.point) for ga, gb in zip(a.goals, b.goals)
    )


# ------------------------------------------------------------- strategy_goal

def test_strategy_goal_uniform_mean_near_center():
    config = arm_config(strategy="sagg_random")
    rng = RngStreams(5).goals
    draws = np.array([strategy_goal(config, None, rng)[0] for _ in range(100_000)])
    center = config.task_box.center
    span = config.task_box.extent
    assert np.all(np.abs(draws.mean(axis=0) - center) < 0.01 * span)


def test_strategy_goal_rejects_actuator_strategies():
    config = arm_config(strategy="actuator_random")
    with pytest.raises(ValueError):
        strategy_goal(config, None, RngStreams(1).goals)


# --------------------------------------------------------------- actuator runs

def test_actuator_random_reset_cadence():
    config = arm_config(strategy="actuator_random", budget=500)
    log = run_experiment(config)
    assert len(log.resets) >= 2
    gaps = np.diff(log.resets)
    assert len(set(gaps.tolist())) == 1  # reset exactly every max micro-actions


def test_actuator_runs_populate_memory_but_no_goals():
    for strategy in ("actuator_random", "actuator_riac"):
        config = arm_config(strategy=strategy, budget=300)
        log, memory = run_with_memory(config)
        assert log.goals == []
        assert log.attempts == []
        assert len(memory) == 300


def test_actuator_map_strategies_run():
    for strategy in ("actuator_random", "actuator_riac"):
        config = map_config(strategy=strategy, budget=200)
        log, memory = run_with_memory(config)
        assert len(memory) == 200


def test_actuator_riac_selections_track_progress_halfspace():
    # Synthetic landscape: prediction errors decay only where the first
    # coordinate is positive; selections should concentrate there.
    rng = np.random.default_rng(3)
    policy = ActuatorRiacPolicy(
        Box(np.array([-1.0, -0.1]), np.array([1.0, 0.1])),
        state_dim=1,
        window=10,
        capacity=20,
        split_candidates=30,
        rng=rng,
    )
    feed = np.random.default_rng(4)
    progress_count = 0
    for _ in range(600):
        point = policy.tree.bounds.sample(feed)
        if point[0] > 0:
            progress_count += 1
            error = 1.5 * np.exp(-progress_count / 80.0)
        else:
            error = 1.0
        policy.observe(point, error)
    picks = np.array([policy.choose_point(None) for _ in range(500)])
    assert (picks[:, 0] > 0).mean() >= 0.6


def test_checkpoint_snapshots_recorded():
    config = arm_config(budget=400)
    log = run_experiment(config, checkpoints=[100, 400])
    assert [snap.checkpoint for snap in log.snapshots] == [100, 400]
    for snap in log.snapshots:
        area = sum(np.prod(high - low) for low, high, _, _ in snap.leaves)
        assert area == pytest.approx(np.prod(config.task_box.extent))


def test_attempt_counters_are_monotone():
    log = run_experiment(arm_config(budget=700))
    totals = [row.total_actions for row in log.attempts]
    assert totals == sorted(totals)
    attempts = [row.attempt for row in log.attempts]
    assert attempts == sorted(attempts)
