"""
Shared fixtures. The backend modules import each other as top-level modules,
so the backend directory goes on sys.path.
"""

import os
import sys

_BACKEND = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "backend")
sys.path.insert(0, _BACKEND)

import numpy as np
import pytest

from config import desk_profiles, desk_sim_config, make_profile, reference_system_config
from lyapunov import QueueState
from system_model import ChannelState, ClientArrays, channel_from_rho

ROOT = os.path.dirname(_BACKEND)


@pytest.fixture
def system():
    return reference_system_config()


@pytest.fixture
def desk_clients():
    return ClientArrays.from_profiles(desk_profiles())


@pytest.fixture
def small_clients():
    """Three clients with distinct data sizes and budgets."""
    profiles = [
        make_profile(0, "a", dataset_size=1000, energy_supply=0.6),
        make_profile(1, "b", dataset_size=4000, energy_supply=0.2, distance=150.0),
        make_profile(2, "b", dataset_size=2500, energy_supply=0.3, distance=250.0),
    ]
    return ClientArrays.from_profiles(profiles)


def make_channel(clients: ClientArrays, system, rho=None) -> ChannelState:
    rho = np.ones(len(clients)) if rho is None else np.asarray(rho, dtype=float)
    return channel_from_rho(rho, clients, system)


def make_queues(values) -> QueueState:
    return QueueState(backlog=np.asarray(values, dtype=float))


@pytest.fixture
def desk_config():
    return desk_sim_config(rounds=5, metric_cadence=1, test_size=200)


@pytest.fixture
def config_dir():
    return os.path.join(ROOT, "config")
