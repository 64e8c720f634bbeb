"""
Channel State Agent (CS baseline)
Schedules the k clients with the highest achievable uplink rate at P_max.
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
from system_model import ChannelState, ClientArrays, uplink_rate


def top_k(values, k: int) -> np.ndarray:
    """0/1 mask of the k largest values; ties go to the lower index."""
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    mask = np.zeros(len(values), dtype=int)
    mask[order[:k]] = 1
    return mask


class ChannelStateAgent(PolicyAgent):
    name = "ChannelStateAgent"
    needs_hint = True

    def select(self, channel: ChannelState, clients: ClientArrays, config: SystemConfig,
               count_hint: Optional[int]) -> Tuple[np.ndarray, str]:
        if count_hint is None:
            raise MissingHintError("channel-state scheduling needs the DRACS schedule size")
        rates = uplink_rate(clients.p_max, channel.gain, config)
        schedule = top_k(rates, count_hint)
        chosen = np.flatnonzero(schedule).tolist()
        return schedule, f"Top {count_hint} uplink rates at P_max: clients {chosen}"
