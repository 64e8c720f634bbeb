"""
Lyapunov Layer: Virtual Energy Queues and Drift-Plus-Penalty Bounds
Queue dynamics, the per-round ratio objective and the analytic constants
(H, round-time and ratio brackets, trade-off bounds).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from config import SystemConfig
from system_model import (
    Action,
    ChannelState,
    ClientArrays,
    clamped_exp_mean,
    evaluate_action,
    large_scale_gain,
    uplink_rate,
)


@dataclass(frozen=True)
class QueueState:
    """Virtual energy-deficit backlog Z_n(t) per client, in joules."""

    backlog: np.ndarray
    round_index: int = 0

    @classmethod
    def empty(cls, num_clients: int) -> "QueueState":
        return cls(backlog=np.zeros(num_clients))

    def advance(self, energy, energy_supply, latency: float) -> "QueueState":
        return QueueState(
            backlog=queue_update(self.backlog, energy, energy_supply, latency),
            round_index=self.round_index + 1,
        )

    def scaled(self, factor: float) -> "QueueState":
        return QueueState(backlog=self.backlog * factor, round_index=self.round_index)


class TheoremBounds(NamedTuple):
    H: float
    tau_min: float
    tau_max: float
    tau_floor: float
    delta_min: float
    delta_max: float
    G1: float
    G2: float
    C: float


class TheoremGap(NamedTuple):
    optimality_gap: float
    energy_excess: float


def queue_update(backlog, energy, energy_supply, latency):
    """Z(t+1) = max{Z + E - E_sup*tau, 0}."""
    updated = np.maximum(np.asarray(backlog, dtype=float) + energy - np.asarray(energy_supply) * latency, 0.0)
    return updated if np.ndim(updated) else float(updated)


# ============================================================================
# OBJECTIVE
# ============================================================================

def ratio_terms(action: Action, channel: ChannelState, queues: QueueState,
                clients: ClientArrays, config: SystemConfig) -> Tuple[float, float]:
    """Numerator -V*D + sum(Z*E) and denominator tau of the drift-plus-penalty ratio."""
    outcome = evaluate_action(action, channel, clients, config)
    numerator = -config.lyapunov_v * outcome.data_size + float(np.dot(queues.backlog, outcome.energy))
    return numerator, outcome.latency


def drift_penalty_ratio(action: Action, channel: ChannelState, queues: QueueState,
                        clients: ClientArrays, config: SystemConfig) -> float:
    """(-V*D(t) + sum_n Z_n*E_n(t)) / tau(t)."""
    numerator, latency = ratio_terms(action, channel, queues, clients, config)
    return numerator / latency


def u_value(action: Action, channel: ChannelState, queues: QueueState, eta: float,
            clients: ClientArrays, config: SystemConfig) -> float:
    """Parametric objective U = -V*D + sum(Z*E) - eta*tau."""
    numerator, latency = ratio_terms(action, channel, queues, clients, config)
    return numerator - eta * latency


# ============================================================================
# ANALYTIC CONSTANTS
# ============================================================================

def _mining_sums(clients: ClientArrays, config: SystemConfig):
    quantile = config.mining_difficulty * config.mining_quantile
    return quantile, float(clients.f_min.sum()), float(clients.f_max.sum())


def _upload_time(clients: ClientArrays, config: SystemConfig, power, rho):
    gain = large_scale_gain(clients, config) * rho
    return clients.model_bits / uplink_rate(power, gain, config)


def compute_H(clients: ClientArrays, config: SystemConfig) -> float:
    """
    Drift bound constant: one half of the per-client sum of the worst-case
    squared energy and squared budget-times-latency terms.
    """
    aq, sum_fmin, _ = _mining_sums(clients, config)
    rho_bar = clamped_exp_mean(config.rho_min, config.rho_max)
    workload = clients.workload(config.local_epochs)

    slow_upload = _upload_time(clients, config, clients.p_min, rho_bar)
    worst_energy = (
        clients.p_max * slow_upload
        + clients.switch_cap * workload * clients.f_max ** 2
        + clients.switch_cap * aq * clients.f_max ** 3 / sum_fmin
    )
    worst_latency = workload / clients.f_min + aq / sum_fmin + slow_upload
    return 0.5 * float(np.sum(worst_energy ** 2 + (clients.energy_supply * worst_latency) ** 2))


def tau_bounds(clients: ClientArrays, config: SystemConfig) -> Tuple[float, float]:
    """
    Round-duration bounds (tau_min, tau_max).

    tau_min is the fastest round with every client scheduled; tau_max holds
    for any feasible action.
    """
    aq, sum_fmin, sum_fmax = _mining_sums(clients, config)
    workload = clients.workload(config.local_epochs)
    fastest = workload / clients.f_max + _upload_time(clients, config, clients.p_max, config.rho_max)
    slowest = workload / clients.f_min + _upload_time(clients, config, clients.p_min, config.rho_min)
    return float(fastest.max()) + aq / sum_fmax, float(slowest.max()) + aq / sum_fmin


def tau_floor(clients: ClientArrays, config: SystemConfig) -> float:
    """Lower bound on tau(t) valid for every action, the empty schedule included."""
    aq, _, sum_fmax = _mining_sums(clients, config)
    return aq / sum_fmax


def _energy_extremes(clients: ClientArrays, config: SystemConfig):
    aq, sum_fmin, sum_fmax = _mining_sums(clients, config)
    workload = clients.workload(config.local_epochs)
    slow_upload = _upload_time(clients, config, clients.p_min, config.rho_min)
    e_max = (
        clients.switch_cap * workload * clients.f_max ** 2
        + clients.switch_cap * aq * clients.f_max ** 3 / sum_fmin
        + clients.p_max * slow_upload
    )
    e_min = clients.switch_cap * aq * clients.f_min ** 3 / sum_fmax
    return e_min, e_max


def delta_bounds(queues: QueueState, clients: ClientArrays, config: SystemConfig,
                 variant: str = "safe") -> Tuple[float, float]:
    """
    Bracket [delta_min, delta_max] of the drift-plus-penalty ratio.

    Args:
        variant: "printed" evaluates the closed forms over tau_min/tau_max as
            published; "safe" uses tau_floor for the reward term so that the
            bracket contains the ratio of every feasible action

    Returns:
        (delta_min, delta_max)
    """
    V = config.lyapunov_v
    z = queues.backlog
    total_data = float(clients.dataset_size.sum())
    t_min, t_max = tau_bounds(clients, config)
    e_min, e_max = _energy_extremes(clients, config)

    if variant == "printed":
        return (
            -(V * total_data - float(np.dot(z, e_min))) / t_max,
            float(np.dot(z, e_max)) / t_min,
        )
    if variant != "safe":
        raise ValueError(f"unknown bracket variant '{variant}'")

    floor = tau_floor(clients, config)
    lower = -V * total_data / floor + float(np.dot(z, e_min)) / t_max
    upper = float(np.dot(z, e_max)) / floor
    return lower, upper


def theorem_bounds(queues: QueueState, clients: ClientArrays, config: SystemConfig) -> TheoremBounds:
    """All constants entering the trade-off bounds at the given backlog."""
    H = compute_H(clients, config)
    t_min, t_max = tau_bounds(clients, config)
    floor = tau_floor(clients, config)
    d_min, d_max = delta_bounds(queues, clients, config, variant="safe")
    # Utility upper bound: every client every round at the shortest round time
    phi_upper = float(clients.dataset_size.sum()) / floor
    return TheoremBounds(
        H=H,
        tau_min=t_min,
        tau_max=t_max,
        tau_floor=floor,
        delta_min=d_min,
        delta_max=d_max,
        G1=2.0 * (H + t_max),
        G2=2.0 * (t_max * phi_upper - float(clients.dataset_size.min())),
        C=config.additive_slack,
    )


def energy_excess_bound(bounds: TheoremBounds, V: float, T: int, initial_backlog,
                        sign: float = 1.0) -> float:
    """(1/tau_floor)*sqrt((G1 + sign*V*G2)/T + sum Z(0)^2 / T^2), radicand clamped at 0."""
    z0 = np.asarray(initial_backlog, dtype=float)
    radicand = (bounds.G1 + sign * V * bounds.G2) / T + float(np.sum(z0 ** 2)) / T ** 2
    return math.sqrt(max(radicand, 0.0)) / bounds.tau_floor


def theorem_gap_bounds(bounds: TheoremBounds, V: float, T: int, initial_backlog) -> TheoremGap:
    """
    Utility gap (H/tau + C)/V and LTA energy excess over the supply after T rounds.
    """
    gap = (bounds.H / bounds.tau_floor + bounds.C) / V if V > 0 else math.inf
    return TheoremGap(
        optimality_gap=gap,
        energy_excess=energy_excess_bound(bounds, V, T, initial_backlog, sign=1.0),
    )
