"""
Brute-Force Round Oracle
Exhaustive search of the drift-plus-penalty ratio over a discretized action
grid. Only meant for tiny instances; used to check the Dinkelbach/BCD solver.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from config import SystemConfig
from errors import OracleBudgetError
from lyapunov import QueueState
from solver.subproblems import RoundProblem
from system_model import Action, ChannelState, ClientArrays, uplink_rate

logger = logging.getLogger(__name__)

MAX_ORACLE_CLIENTS = 4
MAX_GRID_LEVELS = 12
MAX_EVALUATIONS = 50_000_000


@dataclass
class OracleResult:
    action: Action
    ratio: float
    evaluations: int


def grid(lo: float, hi: float, levels: int) -> np.ndarray:
    """Evenly spaced levels over [lo, hi]; a degenerate range gives one point."""
    return np.unique(np.linspace(lo, hi, levels))


def brute_force_round(channel: ChannelState, queues: QueueState, clients: ClientArrays,
                      config: SystemConfig, levels: int = 8) -> OracleResult:
    """
    Minimize the ratio by enumeration.

    Every client either stays out (i=0) or takes a (power, frequency) pair
    from the grid; mining frequencies range over the same frequency grid.

    Args:
        levels: Grid points per continuous variable

    Raises:
        OracleBudgetError: too many clients, levels or evaluations
    """
    n = len(clients)
    if n > MAX_ORACLE_CLIENTS:
        raise OracleBudgetError(f"oracle supports at most {MAX_ORACLE_CLIENTS} clients, got {n}")
    if levels < 1 or levels > MAX_GRID_LEVELS:
        raise OracleBudgetError(f"grid levels must lie in [1, {MAX_GRID_LEVELS}], got {levels}")

    problem = RoundProblem(channel, queues, clients, config)
    freq_grids = [grid(clients.f_min[k], clients.f_max[k], levels) for k in range(n)]
    power_grids = [grid(clients.p_min[k], clients.p_max[k], levels) for k in range(n)]

    # Per-client option tables; option 0 is "not scheduled"
    option_values, option_times, option_choices = [], [], []
    for k in range(n):
        powers, freqs = np.meshgrid(power_grids[k], freq_grids[k], indexing="ij")
        powers, freqs = powers.ravel(), freqs.ravel()
        single = _ClientSlice(problem, k)
        values = single.scores(freqs, powers)
        times = single.client_times(freqs, powers)
        option_values.append(np.concatenate(([0.0], values)))
        option_times.append(np.concatenate(([0.0], times)))
        option_choices.append([(0, power_grids[k][0], freq_grids[k][0])]
                              + [(1, p, f) for p, f in zip(powers, freqs)])

    joint_values = option_values[0]
    joint_times = option_times[0]
    for k in range(1, n):
        joint_values = np.add.outer(joint_values, option_values[k]).ravel()
        joint_times = np.maximum.outer(joint_times, option_times[k]).ravel()

    mining_combos = int(np.prod([len(g) for g in freq_grids]))
    evaluations = joint_values.size * mining_combos
    if evaluations > MAX_EVALUATIONS:
        raise OracleBudgetError(f"{evaluations} evaluations exceed the oracle budget of {MAX_EVALUATIONS}")

    best_ratio, best_joint, best_mining = np.inf, 0, None
    for mine_freq in itertools.product(*freq_grids):
        mine_freq = np.asarray(mine_freq, dtype=float)
        tau_bloc = problem.mining_latency(mine_freq)
        mining_cost = tau_bloc * float(np.dot(problem.backlog, clients.switch_cap * mine_freq ** 3))
        ratios = (joint_values + mining_cost) / (joint_times + tau_bloc)
        index = int(np.argmin(ratios))
        if ratios[index] < best_ratio:
            best_ratio, best_joint, best_mining = float(ratios[index]), index, mine_freq

    picks = np.unravel_index(best_joint, [len(v) for v in option_values])
    chosen = [option_choices[k][picks[k]] for k in range(n)]
    action = Action(
        schedule=[c[0] for c in chosen],
        tx_power=[c[1] for c in chosen],
        train_freq=[c[2] for c in chosen],
        mine_freq=best_mining,
    )
    logger.debug("oracle: %d evaluations, ratio %.6g", evaluations, best_ratio)
    return OracleResult(action=action, ratio=best_ratio, evaluations=evaluations)


class _ClientSlice:
    """Scalar view of one client of a RoundProblem over a vector of options."""

    def __init__(self, problem: RoundProblem, k: int):
        self.problem = problem
        self.k = k

    def _upload(self, powers):
        p = self.problem
        return p.clients.model_bits[self.k] / uplink_rate(powers, p.gain[self.k], p.config)

    def client_times(self, freqs, powers):
        return self.problem.workload[self.k] / freqs + self._upload(powers)

    def scores(self, freqs, powers):
        p = self.problem
        k = self.k
        e_tra = p.clients.switch_cap[k] * p.workload[k] * freqs ** 2
        e_up = powers * self._upload(powers)
        return -p.V * p.clients.dataset_size[k] + p.backlog[k] * (e_tra + e_up)
