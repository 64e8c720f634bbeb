"""Per-round optimizer: block subproblems, mining frequencies, Dinkelbach/BCD."""

import numpy as np
import pytest

import solver.dinkelbach as dinkelbach
from config import make_profile, reference_system_config
from errors import NonConvergenceError
from lyapunov import QueueState, delta_bounds, drift_penalty_ratio
from solver.dinkelbach import bcd_loop, infimum_u, round_tolerance, solve_round
from solver.mining import best_response, solve_mining_freq
from solver.subproblems import (
    RoundProblem,
    solve_scheduling,
    solve_train_freq,
    solve_tx_power,
    straggler_frequency,
)
from system_model import Action, ClientArrays

from conftest import make_channel, make_queues


def single_client(**fields):
    defaults = dict(dataset_size=2000, energy_supply=0.3)
    defaults.update(fields)
    return ClientArrays.from_profiles([make_profile(0, "a", **defaults)])


def problem_for(clients, backlog, system=None, rho=None):
    system = system or reference_system_config()
    return RoundProblem(make_channel(clients, system, rho), make_queues(backlog), clients, system)


# ============================================================================
# MINING
# ============================================================================

def test_mining_best_response_interior():
    problem = problem_for(single_client(), [1.0])
    freqs = best_response(problem, 55.26)
    assert freqs[0] == pytest.approx(2e9, rel=1e-4)


def test_mining_large_backlog_goes_to_f_min():
    problem = problem_for(single_client(), [1e12])
    solution = solve_mining_freq(problem, eta=-1e4, tol=1e-9)
    assert solution.mine_freq[0] == pytest.approx(1e9)


def test_mining_zero_backlog_goes_to_f_max(desk_clients):
    problem = problem_for(desk_clients, np.zeros(6))
    solution = solve_mining_freq(problem, eta=-1e3, tol=1e-9)
    np.testing.assert_allclose(solution.mine_freq, desk_clients.f_max)
    assert solution.value == pytest.approx(problem.mining_value(desk_clients.f_max, -1e3))


def test_mining_solution_beats_grid(small_clients):
    problem = problem_for(small_clients, [0.8, 2.5, 0.1])
    eta = -5e5
    solution = solve_mining_freq(problem, eta, tol=1e-9)
    grid = np.linspace(1e9, 4e9, 31)
    best_grid = min(problem.mining_value(np.array([a, b, c]), eta)
                    for a in grid for b in grid for c in grid)
    assert solution.value <= best_grid + 1e-9 * abs(best_grid)


# ============================================================================
# BLOCK SUBPROBLEMS
# ============================================================================

def test_straggler_frequency_branches():
    assert straggler_frequency(1.0, 1e-28, 0.5, 1e9, 4e9) == 1e9
    assert straggler_frequency(0.0, 1e-28, -1.0, 1e9, 4e9) == 4e9
    eta = -2 * 1.0 * 1e-28 * (2e9) ** 3
    assert straggler_frequency(1.0, 1e-28, eta, 1e9, 4e9) == pytest.approx(2e9)
    assert straggler_frequency(1.0, 1e-28, -1e9, 1e9, 4e9) == 4e9


def test_scheduling_takes_everyone_with_empty_backlog(desk_clients):
    problem = problem_for(desk_clients, np.zeros(6))
    assert problem.scores(desk_clients.f_max, desk_clients.p_max)[3] == pytest.approx(-4e7)
    schedule = solve_scheduling(problem, desk_clients.f_max, desk_clients.p_max, eta=0.0)
    np.testing.assert_array_equal(schedule, np.ones(6))


def test_scheduling_drops_overloaded_client(desk_clients):
    problem = problem_for(desk_clients, [1e12, 0, 0, 0, 0, 0])
    schedule = solve_scheduling(problem, desk_clients.f_max, desk_clients.p_max, eta=0.0)
    np.testing.assert_array_equal(schedule, [0, 1, 1, 1, 1, 1])


def test_scheduling_matches_exhaustive_search(small_clients):
    problem = problem_for(small_clients, [30.0, 0.5, 200.0], rho=[0.3, 2.0, 0.8])
    f = np.array([1.5e9, 3e9, 2e9])
    p = np.array([0.3, 0.8, 1.0])
    for eta in (-2e6, -1e4, 0.0, 5e3):
        schedule = solve_scheduling(problem, f, p, eta)
        best = min(problem.g_value(np.array(bits), f, p, eta)
                   for bits in np.ndindex(2, 2, 2))
        assert problem.g_value(schedule, f, p, eta) == pytest.approx(best, rel=1e-12, abs=1e-12)


def test_train_freq_single_client_matches_grid():
    clients = single_client(cycles_per_sample=5e4)
    problem = problem_for(clients, [0.05], system=reference_system_config(lyapunov_v=0.0))
    schedule, power = np.ones(1), clients.p_max
    grid = np.linspace(1e9, 4e9, 20001)
    for eta in (-1e5, -0.1, 2.0):
        freqs = solve_train_freq(problem, schedule, power, eta)
        value = problem.g_value(schedule, freqs, power, eta)
        grid_best = min(problem.g_value(schedule, np.array([f]), power, eta) for f in grid)
        assert value <= grid_best + 1e-7 * abs(grid_best)


def test_train_freq_is_feasible_and_improves(small_clients):
    problem = problem_for(small_clients, [0.5, 2.0, 0.1], rho=[0.5, 1.5, 1.0])
    schedule = np.array([1, 1, 1])
    start = np.array([3e9, 2e9, 4e9])
    for eta in (-1e6, -1e3):
        freqs = solve_train_freq(problem, schedule, small_clients.p_max, eta, current=start)
        assert np.all(freqs >= small_clients.f_min) and np.all(freqs <= small_clients.f_max)
        assert problem.g_value(schedule, freqs, small_clients.p_max, eta) <= \
            problem.g_value(schedule, start, small_clients.p_max, eta)


def test_tx_power_single_client_matches_grid():
    clients = single_client()
    problem = problem_for(clients, [0.4], system=reference_system_config(lyapunov_v=0.0), rho=[0.2])
    schedule, freqs = np.ones(1), clients.f_max
    grid = np.linspace(clients.p_min[0], clients.p_max[0], 20001)
    for eta in (-1e5, -3.0, 1.0):
        powers = solve_tx_power(problem, schedule, freqs, eta)
        value = problem.g_value(schedule, freqs, powers, eta)
        grid_best = min(problem.g_value(schedule, freqs, np.array([p]), eta) for p in grid)
        assert value <= grid_best + 1e-7 * abs(grid_best)


def test_tx_power_is_feasible_and_improves(small_clients):
    problem = problem_for(small_clients, [0.5, 2.0, 0.1], rho=[0.5, 1.5, 1.0])
    schedule = np.array([1, 0, 1])
    start = small_clients.p_max.copy()
    powers = solve_tx_power(problem, schedule, small_clients.f_max, -1e4, current=start)
    assert np.all(powers >= small_clients.p_min) and np.all(powers <= small_clients.p_max)
    assert problem.g_value(schedule, small_clients.f_max, powers, -1e4) <= \
        problem.g_value(schedule, small_clients.f_max, start, -1e4)


def test_required_power_meets_budget(desk_clients):
    problem = problem_for(desk_clients, np.zeros(6))
    budget = np.full(6, 0.05)
    power = problem.required_power(budget)
    np.testing.assert_allclose(problem.upload_time(power), budget, rtol=1e-9)


# ============================================================================
# BCD AND DINKELBACH
# ============================================================================

def test_bcd_trace_is_non_increasing(desk_clients):
    problem = problem_for(desk_clients, [0.5, 1.0, 0.0, 3.0, 0.2, 0.8], rho=[0.4, 1.0, 2.0, 0.7, 3.0, 0.2])
    result = bcd_loop(problem, eta=-2e6, rng=np.random.default_rng(0))
    trace = np.asarray(result.trace)
    assert np.all(np.diff(trace) <= 1e-9 * np.abs(trace[:-1]).max())
    assert result.value == pytest.approx(trace[-1])
    assert result.passes <= dinkelbach.MAX_BCD_PASSES


def test_bcd_respects_fixed_schedule(desk_clients):
    problem = problem_for(desk_clients, np.zeros(6))
    fixed = np.array([1, 0, 0, 1, 0, 0])
    result = bcd_loop(problem, eta=-1e6, rng=np.random.default_rng(1), fixed_schedule=fixed)
    np.testing.assert_array_equal(result.schedule, fixed)


@pytest.fixture
def busy_round(desk_clients, system):
    channel = make_channel(desk_clients, system, rho=[0.4, 1.0, 2.0, 0.7, 3.0, 0.2])
    queues = make_queues([0.5, 1.0, 0.0, 3.0, 0.2, 0.8])
    return channel, queues


def test_solve_round_converges(desk_clients, system, busy_round):
    channel, queues = busy_round
    report = solve_round(channel, queues, desk_clients, system, rng=np.random.default_rng(0))
    assert report.residual <= report.tol
    assert report.action.is_feasible(desk_clients)
    assert report.ratio == pytest.approx(drift_penalty_ratio(report.action, channel, queues, desk_clients, system),
                                         rel=1e-9)
    lower, upper = report.initial_bracket
    assert lower <= report.ratio <= upper
    assert report.iterations["L1"] <= report.outer_cap
    widths = np.asarray(report.bracket_widths)
    assert np.all(np.diff(widths) <= 0)


def test_solve_round_beats_simple_actions(desk_clients, system, busy_round):
    channel, queues = busy_round
    report = solve_round(channel, queues, desk_clients, system, rng=np.random.default_rng(0))
    action = Action(np.ones(6), desk_clients.p_max, desk_clients.f_max, desk_clients.f_max)
    ratio = drift_penalty_ratio(action, channel, queues, desk_clients, system)
    assert report.ratio <= ratio + 2 * report.tol


def test_infimum_signs_at_bracket_ends(desk_clients, system, busy_round):
    channel, queues = busy_round
    lower, upper = delta_bounds(queues, desk_clients, system, variant="safe")
    u_low, _ = infimum_u(channel, queues, desk_clients, system, lower)
    u_high, _ = infimum_u(channel, queues, desk_clients, system, upper)
    assert u_low >= 0
    assert u_high <= 0


def test_solve_round_degenerate_zero_objective(desk_clients):
    system = reference_system_config(lyapunov_v=0.0)
    channel = make_channel(desk_clients, system)
    report = solve_round(channel, QueueState.empty(6), desk_clients, system)
    assert report.ratio == 0.0
    assert report.iterations["L1"] == 1


def test_solve_round_is_deterministic(desk_clients, system, busy_round):
    channel, queues = busy_round
    a = solve_round(channel, queues, desk_clients, system, rng=np.random.default_rng(5))
    b = solve_round(channel, queues, desk_clients, system, rng=np.random.default_rng(5))
    assert a.ratio == b.ratio
    np.testing.assert_array_equal(a.action.train_freq, b.action.train_freq)


def test_outer_cap_raises(monkeypatch, desk_clients, system, busy_round):
    channel, queues = busy_round
    monkeypatch.setattr(dinkelbach, "outer_iteration_cap", lambda width, tol: 0)
    with pytest.raises(NonConvergenceError) as info:
        solve_round(channel, queues, desk_clients, system)
    assert info.value.stage == "dinkelbach"


def test_round_tolerance_floor():
    system = reference_system_config()
    assert round_tolerance(0.0, system) == system.dinkelbach_tol
    assert round_tolerance(1e9, system) == pytest.approx(1e3)


def test_argmin_is_stable_under_scaling(desk_clients, system, busy_round):
    channel, queues = busy_round
    scale = 8.0
    scaled_system = system.with_updates(lyapunov_v=system.lyapunov_v * scale)
    base = solve_round(channel, queues, desk_clients, system, rng=np.random.default_rng(3))
    scaled = solve_round(channel, queues.scaled(scale), desk_clients, scaled_system,
                         rng=np.random.default_rng(3))
    assert scaled.ratio == pytest.approx(scale * base.ratio, rel=1e-9)
    np.testing.assert_array_equal(scaled.action.schedule, base.action.schedule)
    for name in ("tx_power", "train_freq", "mine_freq"):
        np.testing.assert_allclose(getattr(scaled.action, name), getattr(base.action, name), rtol=1e-9)


def test_infimum_changes_sign_around_optimum(desk_clients, system, busy_round):
    channel, queues = busy_round
    report = solve_round(channel, queues, desk_clients, system, rng=np.random.default_rng(0))
    step = 10 * report.tol
    u_above, _ = infimum_u(channel, queues, desk_clients, system, report.ratio + step)
    u_below, _ = infimum_u(channel, queues, desk_clients, system, report.ratio - step)
    assert u_above < 0 < u_below


# ============================================================================
# SUB-SOLVERS AGAINST DENSE 1-D GRIDS
# ============================================================================

GRID_POINTS = 10001
GRID_RTOL = 1e-4


def random_eta(rng, backlog, spread):
    if rng.random() < 0.2:
        return float(rng.uniform(0.0, 5.0))
    return -backlog * 10 ** rng.uniform(*spread)


def test_mining_freq_matches_grid_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(50):
        clients = single_client(switch_cap=10 ** rng.uniform(-28.5, -27.5))
        z = 10 ** rng.uniform(-3, 2)
        eta = random_eta(rng, z, (-1.5, 1.5))
        problem = problem_for(clients, [z])
        solution = solve_mining_freq(problem, eta, tol=1e-9)
        freqs = np.linspace(clients.f_min[0], clients.f_max[0], GRID_POINTS)
        values = problem.mining_scale * (z * clients.switch_cap[0] * freqs ** 3 - eta) / freqs
        grid_best = float(values.min())
        assert solution.value <= grid_best + GRID_RTOL * abs(grid_best) + 1e-12


def test_train_freq_matches_grid_on_random_instances():
    rng = np.random.default_rng(12)
    system = reference_system_config(lyapunov_v=0.0)
    for _ in range(50):
        clients = single_client(cycles_per_sample=10 ** rng.uniform(3, 5))
        z = 10 ** rng.uniform(-3, 1)
        eta = random_eta(rng, z, (-1.5, 1.5))
        problem = problem_for(clients, [z], system=system, rho=[rng.uniform(0.1, 10.0)])
        schedule, power = np.ones(1), clients.p_max
        freqs = solve_train_freq(problem, schedule, power, eta)
        value = problem.g_value(schedule, freqs, power, eta)
        grid = np.linspace(clients.f_min[0], clients.f_max[0], GRID_POINTS)
        values = problem.scores(grid, power) - eta * problem.client_times(grid, power)
        grid_best = float(values.min())
        assert value <= grid_best + GRID_RTOL * abs(grid_best) + 1e-12


def test_tx_power_matches_grid_on_random_instances():
    rng = np.random.default_rng(13)
    system = reference_system_config(lyapunov_v=0.0)
    for _ in range(50):
        clients = single_client(model_bits=10 ** rng.uniform(4, 6))
        z = 10 ** rng.uniform(-3, 1)
        eta = random_eta(rng, z, (0.0, 2.5))
        problem = problem_for(clients, [z], system=system, rho=[rng.uniform(0.1, 10.0)])
        schedule, freqs = np.ones(1), clients.f_max
        powers = solve_tx_power(problem, schedule, freqs, eta)
        value = problem.g_value(schedule, freqs, powers, eta)
        grid = np.linspace(clients.p_min[0], clients.p_max[0], GRID_POINTS)
        values = problem.scores(freqs, grid) - eta * problem.client_times(freqs, grid)
        grid_best = float(values.min())
        assert value <= grid_best + GRID_RTOL * abs(grid_best) + 1e-12
