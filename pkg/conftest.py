"""
Common test configuration and fixtures for the affordance learning suite.

This file provides shared fixtures and configuration that can be used across
all test modules without explicit import statements.
"""

import os
import shutil
import tempfile

import numpy as np
import pytest

from autodiff.tensor import default_dtype
from config import ExperimentConfig, make_profile
from deskworld.models import SceneSpec, Task
from deskworld.scenes import sample_environment, sample_test_environment


@pytest.fixture(scope="function")
def temp_directory():
    """각 테스트 함수마다 임시 디렉토리 제공"""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir

    # 테스트 후 정리
    if os.path.exists(temp_dir):
        shutil.rmtree(temp_dir)


@pytest.fixture(scope="function")
def double_precision():
    """유한 차분 검사용 float64 기본 dtype"""
    with default_dtype(np.float64):
        yield


def tiny_experiment_config() -> ExperimentConfig:
    """Smallest configuration that still runs every stage end to end."""
    cfg = make_profile("desk")
    cfg.env.image_size = 16
    cfg.env.horizon = 6
    cfg.data.num_trajectories = 6
    cfg.data.pairs_per_trajectory = 2
    cfg.data.validation_fraction = 0.2
    cfg.vqvae.codebook_size = 8
    cfg.vqvae.embedding_dim = 2
    cfg.vqvae.conv_hidden = 4
    cfg.vqvae.residual_layers = 1
    cfg.vqvae.residual_hidden = 4
    cfg.vqvae.epochs = 1
    cfg.vqvae.batch_size = 8
    cfg.vqvae.num_images = 16
    cfg.pixelcnn.layers = 2
    cfg.pixelcnn.channels = 4
    cfg.pixelcnn.first_kernel = 3
    cfg.pixelcnn.epochs = 1
    cfg.pixelcnn.batch_size = 8
    cfg.rl.batch_size = 8
    cfg.rl.replay_capacity = 500
    cfg.rl.pretrain_steps = 3
    cfg.rl.log_every = 1
    cfg.rl.policy_hidden = (8,)
    cfg.rl.q_hidden = (8,)
    cfg.rl.online_episodes = 2
    cfg.rl.train_steps_per_episode = 2
    cfg.rl.eval_every = 1
    cfg.rl.affordance_bank_size = 2
    cfg.eval.episodes = 2
    cfg.eval.goal_set_size = 2
    return cfg


@pytest.fixture(scope="function")
def tiny_config() -> ExperimentConfig:
    """테스트용 초소형 실험 설정"""
    return tiny_experiment_config()


@pytest.fixture(scope="session")
def drawer_scene() -> SceneSpec:
    """서랍이 있는 테스트 장면"""
    return sample_test_environment(0, Task.OPEN_DRAWER)


@pytest.fixture(scope="session")
def prior_scene() -> SceneSpec:
    return sample_environment(1)
