"""Brute-force oracle and its agreement with the round solver on tiny instances."""

import numpy as np
import pytest

from config import make_profile
from errors import OracleBudgetError
from solver import brute_force_round, solve_round
from system_model import ClientArrays

from conftest import make_channel, make_queues


def tiny_clients(n, degenerate=False):
    profiles = []
    for k in range(n):
        fields = dict(dataset_size=1000 * (k + 1), energy_supply=0.3 + 0.1 * k, distance=150.0 + 50.0 * k)
        if degenerate:
            fields.update(f_min=2e9, f_max=2e9, p_min=0.5, p_max=0.5)
        profiles.append(make_profile(k, "a", **fields))
    return ClientArrays.from_profiles(profiles)


def test_degenerate_ranges_agree(system):
    clients = tiny_clients(3, degenerate=True)
    channel = make_channel(clients, system, rho=[0.5, 1.0, 2.0])
    queues = make_queues([0.4, 2.0, 0.05])
    oracle = brute_force_round(channel, queues, clients, system, levels=4)
    report = solve_round(channel, queues, clients, system, rng=np.random.default_rng(0))
    assert oracle.evaluations == 2 ** 3
    assert report.ratio == pytest.approx(oracle.ratio, rel=1e-5)


def test_solver_is_no_worse_than_grid(system):
    clients = tiny_clients(2)
    channel = make_channel(clients, system, rho=[0.7, 1.6])
    queues = make_queues([0.6, 0.1])
    oracle = brute_force_round(channel, queues, clients, system, levels=6)
    report = solve_round(channel, queues, clients, system, rng=np.random.default_rng(0))
    assert report.ratio <= oracle.ratio + 0.02 * abs(oracle.ratio)
    assert oracle.action.is_feasible(clients)


def test_nested_grids_only_improve(system):
    clients = tiny_clients(2)
    channel = make_channel(clients, system, rho=[1.2, 0.4])
    queues = make_queues([1.5, 0.3])
    ratios = [brute_force_round(channel, queues, clients, system, levels=levels).ratio
              for levels in (3, 5, 9)]
    assert ratios[0] >= ratios[1] >= ratios[2]


def test_too_many_clients(system):
    clients = tiny_clients(5)
    with pytest.raises(OracleBudgetError):
        brute_force_round(make_channel(clients, system), make_queues(np.zeros(5)), clients, system)


@pytest.mark.parametrize("n, levels", [(2, 13), (2, 0), (3, 12)])
def test_grid_budget(system, n, levels):
    clients = tiny_clients(n)
    with pytest.raises(OracleBudgetError):
        brute_force_round(make_channel(clients, system), make_queues(np.zeros(n)), clients, system, levels=levels)
