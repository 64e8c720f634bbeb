"""
Per-Round Subproblems: Client Scheduling, Training Frequency, Transmit Power
Block solvers of the parametric objective
    g = sum_n i_n*(-V*D_n + Z_n*(E_tra + E_up)) - eta * max_n i_n*(tau_tra + tau_up)
each holding the other two blocks fixed.
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from config import SystemConfig
from errors import InfeasibleCaseError
from lyapunov import QueueState
from system_model import Action, ChannelState, ClientArrays, uplink_rate

# Golden-section / Brent termination width, relative to the upper bound
POWER_XATOL = 1e-6
# A new candidate must beat the incumbent by this relative margin to replace it
IMPROVEMENT_RTOL = 1e-12


class RoundProblem:
    """
    Everything fixed within one round: client columns, channel gains,
    backlogs and the weight V. Shared by all subproblem solvers.
    """

    def __init__(self, channel: ChannelState, queues: QueueState, clients: ClientArrays,
                 config: SystemConfig, lyapunov_v: Optional[float] = None):
        self.clients = clients
        self.config = config
        self.gain = np.asarray(channel.gain, dtype=float)
        self.backlog = np.asarray(queues.backlog, dtype=float)
        self.V = config.lyapunov_v if lyapunov_v is None else lyapunov_v
        self.workload = clients.workload(config.local_epochs)
        self.mining_scale = config.mining_difficulty * config.mining_quantile
        self.noise_power = config.bandwidth * config.noise_psd
        self._power_cache = {}

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    # -- per-client quantities -------------------------------------------

    def upload_time(self, tx_power) -> np.ndarray:
        return self.clients.model_bits / uplink_rate(tx_power, self.gain, self.config)

    def required_power(self, budget) -> np.ndarray:
        """Smallest power that uploads within `budget` seconds (inf when impossible)."""
        budget = np.asarray(budget, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            exponent = self.clients.model_bits / (self.config.bandwidth * budget)
            power = np.expm1(exponent * math.log(2.0)) * self.noise_power / self.gain
        return np.where(budget > 0, power, np.inf)

    def client_times(self, train_freq, tx_power) -> np.ndarray:
        return self.workload / train_freq + self.upload_time(tx_power)

    def client_costs(self, train_freq, tx_power) -> np.ndarray:
        """Z_n * (E_tra + E_up) if scheduled."""
        e_tra = self.clients.switch_cap * self.workload * train_freq ** 2
        e_up = tx_power * self.upload_time(tx_power)
        return self.backlog * (e_tra + e_up)

    def scores(self, train_freq, tx_power) -> np.ndarray:
        """Per-client contribution to g when scheduled."""
        return -self.V * self.clients.dataset_size + self.client_costs(train_freq, tx_power)

    # -- objectives -------------------------------------------------------

    def g_value(self, schedule, train_freq, tx_power, eta: float) -> float:
        selected = np.asarray(schedule).astype(bool)
        if not selected.any():
            return 0.0
        scores = self.scores(train_freq, tx_power)
        times = self.client_times(train_freq, tx_power)
        return float(scores[selected].sum()) - eta * float(times[selected].max())

    def mining_latency(self, mine_freq) -> float:
        return self.mining_scale / float(np.sum(mine_freq))

    def mining_value(self, mine_freq, eta: float) -> float:
        """Mining part of U: (alpha*q*sum(Z*v*f^3) - eta*alpha*q) / sum(f)."""
        mine_freq = np.asarray(mine_freq, dtype=float)
        cubic = float(np.dot(self.backlog, self.clients.switch_cap * mine_freq ** 3))
        return self.mining_scale * (cubic - eta) / float(mine_freq.sum())

    def terms(self, action: Action) -> Tuple[float, float]:
        """Numerator and latency of the drift-plus-penalty ratio for an action."""
        selected = action.schedule.astype(bool)
        tau_bloc = self.mining_latency(action.mine_freq)
        mining_energy = self.clients.switch_cap * tau_bloc * action.mine_freq ** 3
        numerator = float(np.dot(self.backlog, mining_energy))
        slowest = 0.0
        if selected.any():
            numerator += float(self.scores(action.train_freq, action.tx_power)[selected].sum())
            slowest = float(self.client_times(action.train_freq, action.tx_power)[selected].max())
        return numerator, slowest + tau_bloc

    def ratio(self, action: Action) -> float:
        numerator, latency = self.terms(action)
        return numerator / latency

    # -- single-client power objective -----------------------------------

    def straggler_power(self, client: int, eta: float) -> float:
        """
        Minimizer over [P_min, P_max] of Z*P*tau_up(P) - eta*tau_up(P) for one client.
        """
        key = (client, eta)
        if key in self._power_cache:
            return self._power_cache[key]

        lo, hi = float(self.clients.p_min[client]), float(self.clients.p_max[client])
        z = float(self.backlog[client])
        if eta >= 0 or lo == hi:
            best = lo
        elif z <= 0:
            best = hi
        else:
            bits = float(self.clients.model_bits[client])
            gain = float(self.gain[client])

            def objective(p):
                return bits * (z * p - eta) / uplink_rate(p, gain, self.config)

            result = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                     options={"xatol": POWER_XATOL * hi})
            candidates = [lo, float(result.x), hi]
            best = min(candidates, key=objective)

        self._power_cache[key] = best
        return best


def _improves(candidate: float, incumbent: float) -> bool:
    return candidate < incumbent - IMPROVEMENT_RTOL * max(1.0, abs(incumbent))


# ============================================================================
# CLIENT SCHEDULING
# ============================================================================

def solve_scheduling(problem: RoundProblem, train_freq, tx_power, eta: float,
                     current: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Case analysis over the straggler: in case j client j is scheduled and is the
    slowest; every other client that fits within its time joins iff its score
    is negative. The empty schedule is the last case.

    Args:
        current: Incumbent schedule; kept unless a case strictly improves on it

    Returns:
        0/1 schedule vector
    """
    n = problem.num_clients
    scores = problem.scores(train_freq, tx_power)
    times = problem.client_times(train_freq, tx_power)

    if current is not None:
        best = np.asarray(current, dtype=int).copy()
        best_value = problem.g_value(best, train_freq, tx_power, eta)
    else:
        best, best_value = None, math.inf

    for j in range(n):
        selected = (times <= times[j]) & (scores < 0)
        selected[j] = True
        value = float(scores[selected].sum()) - eta * float(times[j])
        if best is None or _improves(value, best_value):
            best, best_value = selected.astype(int), value

    if _improves(0.0, best_value):
        best = np.zeros(n, dtype=int)
    return best


# ============================================================================
# TRAINING FREQUENCY
# ============================================================================

def straggler_frequency(backlog: float, switch_cap: float, eta: float, lo: float, hi: float) -> float:
    """
    Minimizer over [lo, hi] of Z*v*w*f^2 - eta*w/f (w cancels):
    lo when eta >= 0, otherwise the clamped cube root of -eta / (2*Z*v).
    """
    if eta >= 0:
        return lo
    if backlog <= 0:
        return hi
    root = (-eta / (2.0 * backlog * switch_cap)) ** (1.0 / 3.0)
    return min(max(root, lo), hi)


def solve_train_freq(problem: RoundProblem, schedule, tx_power, eta: float,
                     current: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Straggler case analysis for the training frequencies.

    For each scheduled client r two candidates are formed: the others at f_min
    with the straggler confined below the frequency at which it would stop
    being the slowest, and the straggler at its own optimum with the others
    running just fast enough to finish within its time. The best case by g wins.

    Returns:
        Training frequency per client (f_min for unscheduled clients)
    """
    clients = problem.clients
    schedule = np.asarray(schedule, dtype=int)
    scheduled = np.flatnonzero(schedule)
    base = clients.f_min.copy()
    if scheduled.size == 0:
        return base

    upload = problem.upload_time(tx_power)
    candidates: List[np.ndarray] = []
    if current is not None:
        candidates.append(np.asarray(current, dtype=float))

    for r in scheduled:
        others = scheduled[scheduled != r]
        z, v = float(problem.backlog[r]), float(clients.switch_cap[r])
        f_lo, f_hi = float(clients.f_min[r]), float(clients.f_max[r])

        # Others idle at f_min, straggler stays the slowest
        cap = f_hi
        if others.size:
            slowest_other = float(np.max(problem.workload[others] / clients.f_min[others] + upload[others]))
            slack = slowest_other - float(upload[r])
            if slack > 0:
                cap = min(cap, float(problem.workload[r]) / slack)
        if cap >= f_lo:
            freqs = base.copy()
            freqs[r] = straggler_frequency(z, v, eta, f_lo, cap)
            candidates.append(freqs)

        # Straggler at its own optimum, others respond
        f_r = straggler_frequency(z, v, eta, f_lo, f_hi)
        deadline = float(problem.workload[r]) / f_r + float(upload[r])
        freqs = base.copy()
        freqs[r] = f_r
        if others.size:
            budget = deadline - upload[others]
            with np.errstate(divide="ignore"):
                needed = np.where(budget > 0, problem.workload[others] / budget, np.inf)
            needed = np.maximum(needed, clients.f_min[others])
            if np.any(needed > clients.f_max[others] * (1 + 1e-12)):
                continue
            freqs[others] = np.minimum(needed, clients.f_max[others])
        candidates.append(freqs)

    return _best_by_g(problem, candidates, lambda f: problem.g_value(schedule, f, tx_power, eta))


# ============================================================================
# TRANSMIT POWER
# ============================================================================

def _power_response(problem: RoundProblem, others: np.ndarray, deadline: float,
                    train_time: np.ndarray) -> np.ndarray:
    """
    Least-energy power of each non-straggler that still finishes by `deadline`.

    Raises:
        InfeasibleCaseError: some client misses the deadline even at P_max
    """
    clients = problem.clients
    budget = np.full(problem.num_clients, -1.0)
    budget[others] = deadline - train_time[others]
    needed = np.maximum(problem.required_power(budget)[others], clients.p_min[others])
    if np.any(needed > clients.p_max[others] * (1 + 1e-9)):
        raise InfeasibleCaseError("non-straggler cannot meet the straggler time at P_max")
    return np.minimum(needed, clients.p_max[others])


def solve_tx_power(problem: RoundProblem, schedule, train_freq, eta: float,
                   current: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Straggler case analysis for the transmit powers.

    In case r the straggler balances its own upload energy against the
    -eta*tau_up reward by a bounded 1-D search; each other scheduled client
    takes the least power (hence least energy, since P/log2(1+P*h/(B*N0)) is
    increasing in P) that keeps it within the straggler's time. Cases whose
    deadline cannot be met are skipped. A second candidate per case keeps the
    others at P_min and caps the straggler so that it stays the slowest.

    Returns:
        Transmit power per client (P_min for unscheduled clients)
    """
    clients = problem.clients
    schedule = np.asarray(schedule, dtype=int)
    scheduled = np.flatnonzero(schedule)
    base = clients.p_min.copy()
    if scheduled.size == 0:
        return base

    train_time = problem.workload / np.asarray(train_freq, dtype=float)
    candidates: List[np.ndarray] = []
    if current is not None:
        candidates.append(np.asarray(current, dtype=float))

    for r in scheduled:
        others = scheduled[scheduled != r]
        p_r = problem.straggler_power(int(r), eta)
        powers = base.copy()
        powers[r] = p_r

        try:
            deadline = float(train_time[r] + problem.upload_time(powers)[r])
            powers[others] = _power_response(problem, others, deadline, train_time)
            candidates.append(powers)
        except InfeasibleCaseError:
            pass

        if others.size:
            slowest_other = float(np.max((train_time + problem.upload_time(base))[others]))
            budget = slowest_other - float(train_time[r])
            cap = float(clients.p_max[r])
            if budget > 0:
                cap = min(cap, float(problem.required_power(np.full(problem.num_clients, budget))[r]))
            if cap >= clients.p_min[r]:
                capped = base.copy()
                capped[r] = min(max(p_r, float(clients.p_min[r])), cap)
                candidates.append(capped)

    return _best_by_g(problem, candidates, lambda p: problem.g_value(schedule, train_freq, p, eta))


def _best_by_g(problem: RoundProblem, candidates: List[np.ndarray], value) -> np.ndarray:
    """First candidate unless a later one strictly improves g (lowest case wins ties)."""
    best, best_value = None, math.inf
    for candidate in candidates:
        candidate_value = value(candidate)
        if best is None or _improves(candidate_value, best_value):
            best, best_value = candidate, candidate_value
    return best.copy()
