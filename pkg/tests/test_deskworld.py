"""Tests for the desk simulator: scene sampling, dynamics, rendering, scripted experts and the oracle."""

from __future__ import annotations

import unittest

import numpy as np
import pytest

from autodiff.rng import make_stream
from config import EnvConfig
from deskworld.dynamics import step
from deskworld.geometry import shape_mask, shape_params
from deskworld.models import STATE_DIM, EnvState, SceneContractError, Task, clamp_action
from deskworld.oracle import oracle_success
from deskworld.render import quantize, render, to_u8
from deskworld.scenes import (
    TEST_SEED_BASE,
    adjusted_presence_prob,
    prior_scene_seed,
    reset,
    sample_environment,
    sample_test_environment,
    task_feasible,
)
from deskworld.scripted import expert_rollout, scripted_collect

SMALL_ENV = EnvConfig(image_size=16, horizon=4)


def _state_at(spec, **fields) -> EnvState:
    values = {
        "spec_seed": spec.seed,
        "gripper": (0.5, 0.5),
        "gripper_high": True,
        "aperture": 1.0,
        "drawer_extension": 0.0,
        "button_drawer_open": 0,
        "object_position": spec.object_position,
        "held": False,
        "t": 0,
    }
    values.update(fields)
    return EnvState(**values)


class TestSceneSampling(unittest.TestCase):
    def test_same_seed_same_scene(self):
        self.assertEqual(sample_environment(7), sample_environment(7))

    def test_different_seeds_differ(self):
        self.assertNotEqual(sample_environment(7), sample_environment(8))

    def test_every_scene_has_an_interactable(self):
        for seed in range(200):
            self.assertTrue(sample_environment(seed).interactables())

    def test_marginal_presence_matches_target(self):
        q = adjusted_presence_prob(0.7)
        # 빈 장면을 다시 뽑은 뒤의 주변 확률
        self.assertAlmostEqual(q / (1.0 - (1.0 - q) ** 3), 0.7, places=6)

    def test_empirical_presence_near_target(self):
        scenes = [sample_environment(seed) for seed in range(2000)]
        drawer_freq = np.mean([s.drawer_present for s in scenes])
        self.assertAlmostEqual(drawer_freq, 0.7, delta=0.05)

    def test_prior_and_test_seeds_are_disjoint(self):
        for index in range(50):
            self.assertLess(prior_scene_seed(123, index), TEST_SEED_BASE)
        for task in Task:
            spec = sample_test_environment(3, task)
            self.assertGreaterEqual(spec.seed, TEST_SEED_BASE)
            self.assertTrue(task_feasible(spec, task))

    def test_spec_dict_round_trip(self):
        spec = sample_environment(11)
        self.assertEqual(type(spec).from_dict(spec.to_dict()), spec)


class TestReset(unittest.TestCase):
    def test_reset_is_deterministic(self):
        spec = sample_environment(3)
        self.assertEqual(reset(spec, 5), reset(spec, 5))

    def test_open_drawer_reset_starts_closed(self):
        spec = sample_test_environment(0, Task.OPEN_DRAWER)
        for seed in range(10):
            self.assertEqual(reset(spec, seed, task=Task.OPEN_DRAWER).drawer_extension, 0.0)

    def test_infeasible_task_raises(self):
        spec = next(sample_environment(s) for s in range(500) if not sample_environment(s).drawer_present)
        with self.assertRaises(SceneContractError):
            reset(spec, 0, task=Task.OPEN_DRAWER)

    def test_gripper_starts_high_and_open(self):
        state = reset(sample_environment(4), 9)
        self.assertTrue(state.gripper_high)
        self.assertEqual(state.aperture, 1.0)
        self.assertEqual(state.t, 0)


class TestDynamics(unittest.TestCase):
    def test_clamp_action(self):
        np.testing.assert_array_equal(clamp_action([2.0, -3.0, 0.5, np.nan]), [1.0, -1.0, 0.5, 0.0])

    def test_clamp_action_rejects_wrong_size(self):
        with self.assertRaises(ValueError):
            clamp_action([0.0, 0.0])

    def test_step_advances_time_and_moves_gripper(self):
        spec = sample_environment(2)
        state = _state_at(spec, gripper=(0.5, 0.5))
        after = step(spec, state, [1.0, 0.0, 0.0, 0.0])
        self.assertEqual(after.t, 1)
        self.assertAlmostEqual(after.gripper[0], 0.55, places=5)
        self.assertAlmostEqual(after.gripper[1], 0.5, places=5)

    def test_gripper_stays_in_workspace(self):
        spec = sample_environment(2)
        state = _state_at(spec, gripper=(0.99, 0.01))
        after = step(spec, state, [1.0, -1.0, 0.0, 0.0])
        self.assertEqual(after.gripper, (1.0, 0.0))

    def test_state_from_other_scene_raises(self):
        spec = sample_environment(2)
        state = _state_at(sample_environment(5))
        with self.assertRaises(SceneContractError):
            step(spec, state, [0.0, 0.0, 0.0, 0.0])

    def test_button_toggles_on_lowering_only(self):
        spec = sample_test_environment(0, Task.TOGGLE_BUTTON_DRAWER)
        state = _state_at(spec, gripper=spec.button_position)
        lowered = step(spec, state, [0.0, 0.0, 1.0, 0.0])
        self.assertEqual(lowered.button_drawer_open, 1)
        raised = step(spec, lowered, [0.0, 0.0, 1.0, 0.0])
        self.assertEqual(raised.button_drawer_open, 1)
        lowered_again = step(spec, raised, [0.0, 0.0, 1.0, 0.0])
        self.assertEqual(lowered_again.button_drawer_open, 0)

    def test_grasped_object_follows_gripper(self):
        spec = sample_test_environment(0, Task.GRASP_OBJECT)
        state = _state_at(spec, gripper=spec.object_position, gripper_high=False)
        grasped = step(spec, state, [0.0, 0.0, 0.0, 1.0])
        self.assertTrue(grasped.held)
        moved = step(spec, grasped, [0.0, 1.0, 0.0, 1.0])
        self.assertEqual(moved.object_position, moved.gripper)
        released = step(spec, moved, [0.0, 0.0, 0.0, -1.0])
        self.assertFalse(released.held)

    def test_state_array_round_trip(self):
        state = reset(sample_environment(6), 1)
        values = state.as_array()
        self.assertEqual(values.shape, (STATE_DIM,))
        self.assertEqual(EnvState.from_array(state.spec_seed, values), state)


class TestRender(unittest.TestCase):
    def test_image_shape_and_range(self):
        spec = sample_environment(1)
        image = render(spec, reset(spec, 0), SMALL_ENV)
        self.assertEqual(image.shape, (16, 16, 3))
        self.assertEqual(image.dtype, np.float32)
        self.assertGreaterEqual(image.min(), 0.0)
        self.assertLessEqual(image.max(), 1.0)

    def test_render_is_deterministic_and_quantized(self):
        spec = sample_environment(1)
        state = reset(spec, 0)
        first = render(spec, state)
        np.testing.assert_array_equal(first, render(spec, state))
        np.testing.assert_array_equal(quantize(first), first)
        np.testing.assert_array_equal(to_u8(first), np.round(first * 255).astype(np.uint8))

    def test_drawer_state_changes_image(self):
        spec = sample_test_environment(0, Task.OPEN_DRAWER)
        state = _state_at(spec)
        opened = state.evolve(drawer_extension=1.0)
        self.assertFalse(np.array_equal(render(spec, state), render(spec, opened)))


@pytest.mark.parametrize("geometry_id", [0, 1, 2, 3, 4, 5, 17, 83])
def test_shapes_are_point_symmetric(geometry_id):
    half = (np.arange(20) + 0.5) / 20.5
    grid = np.concatenate([-half[::-1], half])
    dy, dx = np.meshgrid(grid, grid, indexing="ij")
    mask = shape_mask(geometry_id, dx, dy)
    np.testing.assert_array_equal(mask, mask[::-1, ::-1])
    assert mask.any()


def test_negative_geometry_id_raises():
    with pytest.raises(ValueError):
        shape_params(-1)


class TestScriptedCollection(unittest.TestCase):
    def test_trajectory_layout(self):
        spec = sample_environment(prior_scene_seed(0, 0), SMALL_ENV)
        record = scripted_collect(spec, 0, env=SMALL_ENV)
        self.assertEqual(record.actions.shape, (4, 4))
        self.assertEqual(record.images.shape, (5, 16, 16, 3))
        self.assertEqual(len(record.ground_truth), 5)

    def test_collection_is_deterministic(self):
        spec = sample_environment(9, SMALL_ENV)
        self.assertTrue(scripted_collect(spec, 2, env=SMALL_ENV).same_as(scripted_collect(spec, 2, env=SMALL_ENV)))

    def test_zero_horizon_rejected(self):
        with self.assertRaises(ValueError):
            scripted_collect(sample_environment(9), 0, horizon=0)

    def test_expert_opens_drawer(self):
        spec = sample_test_environment(0, Task.OPEN_DRAWER)
        result = expert_rollout(spec, 0, Task.OPEN_DRAWER, horizon=120)
        final = result.states[-1]
        self.assertGreater(final.drawer_extension, 0.9)
        goal = final.evolve(drawer_extension=1.0)
        self.assertTrue(oracle_success(spec, final, goal))


class TestOracle(unittest.TestCase):
    def setUp(self):
        self.spec = sample_test_environment(0, Task.OPEN_DRAWER)
        self.state = _state_at(self.spec)

    def test_identical_state_succeeds(self):
        self.assertTrue(oracle_success(self.spec, self.state, self.state))

    def test_drawer_threshold_is_strict(self):
        self.assertFalse(oracle_success(self.spec, self.state, self.state.evolve(drawer_extension=0.1)))
        self.assertTrue(oracle_success(self.spec, self.state, self.state.evolve(drawer_extension=0.05)))

    def test_button_mismatch_fails(self):
        self.assertFalse(oracle_success(self.spec, self.state, self.state.evolve(button_drawer_open=1)))

    def test_other_scene_raises(self):
        other = _state_at(sample_environment(3))
        with self.assertRaises(SceneContractError):
            oracle_success(self.spec, other, self.state)


def test_drawer_scene_resets_closed_for_open_drawer(drawer_scene) -> None:
    assert drawer_scene.seed >= TEST_SEED_BASE
    assert "drawer" in drawer_scene.interactables()
    for seed in range(5):
        assert reset(drawer_scene, seed, Task.OPEN_DRAWER).drawer_extension == 0.0
        assert reset(drawer_scene, seed, Task.CLOSE_DRAWER).drawer_extension == 1.0


def test_prior_scene_survives_dict_round_trip(prior_scene) -> None:
    assert prior_scene.seed < TEST_SEED_BASE
    assert type(prior_scene).from_dict(prior_scene.to_dict()) == prior_scene


@pytest.mark.slow
def test_random_actions_respect_physical_limits() -> None:
    env = EnvConfig()
    actions = make_stream(11, "random-actions").uniform(-1.5, 1.5, size=(100_000, 4))
    state = spec = None
    for index, action in enumerate(actions):
        if index % env.horizon == 0:
            episode = index // env.horizon
            spec = sample_environment(prior_scene_seed(11, episode % 40), env)
            state = reset(spec, episode)
        state = step(spec, state, action, env)

        assert 0.0 <= state.gripper[0] <= 1.0 and 0.0 <= state.gripper[1] <= 1.0, (index, state)
        assert 0.0 <= state.aperture <= 1.0, (index, state)
        assert 0.0 <= state.drawer_extension <= 1.0, (index, state)
        assert state.button_drawer_open in (0, 1), (index, state)
        assert 0.0 <= state.object_position[0] <= 1.0 and 0.0 <= state.object_position[1] <= 1.0, (index, state)
