"""
Select-All Agent (SA baseline)
"""

import sys
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).resolve().parent.parent))

from agents.policy_agent import PolicyAgent
from config import SystemConfig
from system_model import ChannelState, ClientArrays


class SelectAllAgent(PolicyAgent):
    name = "SelectAllAgent"

    def select(self, channel: ChannelState, clients: ClientArrays, config: SystemConfig,
               count_hint: Optional[int]) -> Tuple[np.ndarray, str]:
        return np.ones(len(clients), dtype=int), f"All {len(clients)} clients scheduled"
