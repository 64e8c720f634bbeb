"""
Policy Agent Base
Shared interface of the per-round scheduling policies.
"""

import sys
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).resolve().parent.parent))

from config import SystemConfig
from lyapunov import QueueState
from solver.dinkelbach import SolveReport, solve_round
from system_model import Action, ChannelState, ClientArrays, RoundOutcome

Decision = Tuple[Action, str, Dict]


class PolicyAgent:
    """
    A policy maps the observed channel and backlogs to one round's action.

    Subclasses implement `select` (the schedule); the continuous variables
    are optimized by the round solver with that schedule held fixed.
    """

    name = "PolicyAgent"
    needs_hint = False

    def __init__(self, lyapunov_v: Optional[float] = None):
        self.lyapunov_v = lyapunov_v
        self.last_report: Optional[SolveReport] = None

    def select(self, channel: ChannelState, clients: ClientArrays, config: SystemConfig,
               count_hint: Optional[int]) -> Tuple[np.ndarray, str]:
        raise NotImplementedError

    def decide(self, channel: ChannelState, queues: QueueState, clients: ClientArrays,
               config: SystemConfig, rng: np.random.Generator,
               count_hint: Optional[int] = None) -> Decision:
        """
        Returns:
            Tuple of (action, reason, metadata)
        """
        schedule, reason = self.select(channel, clients, config, count_hint)
        report = solve_round(channel, queues, clients, config, rng=rng,
                             fixed_schedule=schedule, lyapunov_v=self.lyapunov_v)
        self.last_report = report
        metadata = report.summary()
        metadata["schedule"] = report.action.schedule.tolist()
        return report.action, reason, metadata

    def observe(self, outcome: RoundOutcome):
        """Feedback after the round is realized; stateless policies ignore it."""
