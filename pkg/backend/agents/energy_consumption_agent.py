"""
Energy Consumption Agent (EC baseline)
Schedules the k clients with the lowest running long-term average power,
sum_t E_n(t) / sum_t tau(t).
"""

import sys
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).resolve().parent.parent))

from agents.policy_agent import PolicyAgent
from config import SystemConfig
from errors import MissingHintError
from system_model import ChannelState, ClientArrays, RoundOutcome


def bottom_k(values, k: int) -> np.ndarray:
    """0/1 mask of the k smallest values; ties go to the lower index."""
    order = np.argsort(np.asarray(values, dtype=float), kind="stable")
    mask = np.zeros(len(values), dtype=int)
    mask[order[:k]] = 1
    return mask


class EnergyConsumptionAgent(PolicyAgent):
    name = "EnergyConsumptionAgent"
    needs_hint = True

    def __init__(self, num_clients: int, lyapunov_v: Optional[float] = None):
        super().__init__(lyapunov_v=lyapunov_v)
        self.energy_sum = np.zeros(num_clients)
        self.time_sum = 0.0

    @property
    def lta_energy(self) -> np.ndarray:
        if self.time_sum <= 0:
            return np.zeros_like(self.energy_sum)
        return self.energy_sum / self.time_sum

    def select(self, channel: ChannelState, clients: ClientArrays, config: SystemConfig,
               count_hint: Optional[int]) -> Tuple[np.ndarray, str]:
        if count_hint is None:
            raise MissingHintError("energy-consumption scheduling needs the DRACS schedule size")
        schedule = bottom_k(self.lta_energy, count_hint)
        chosen = np.flatnonzero(schedule).tolist()
        return schedule, f"Lowest {count_hint} LTA energy consumers: clients {chosen}"

    def observe(self, outcome: RoundOutcome):
        self.energy_sum += outcome.energy
        self.time_sum += outcome.latency
