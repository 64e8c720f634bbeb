"""
DRACS Agent: Joint Scheduling and Resource Allocation
Solves the drift-plus-penalty ratio over schedule, power, training and
mining frequencies every round.
"""

import sys
from pathlib import Path
from typing import Optional

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).resolve().parent.parent))

from agents.policy_agent import Decision, PolicyAgent
from config import SystemConfig
from lyapunov import QueueState
from solver.dinkelbach import solve_round
from system_model import ChannelState, ClientArrays


class DracsAgent(PolicyAgent):
    name = "DracsAgent"

    def decide(self, channel: ChannelState, queues: QueueState, clients: ClientArrays,
               config: SystemConfig, rng: np.random.Generator,
               count_hint: Optional[int] = None) -> Decision:
        report = solve_round(channel, queues, clients, config, rng=rng, lyapunov_v=self.lyapunov_v)
        self.last_report = report
        action = report.action
        reason = (
            f"Scheduled {action.num_scheduled}/{len(clients)} clients at ratio {report.ratio:.6g} "
            f"(L1={report.iterations['L1']}, residual {report.residual:.3g} <= {report.tol:.3g})"
        )
        metadata = report.summary()
        metadata["schedule"] = action.schedule.tolist()
        return action, reason, metadata

    @property
    def scheduled_count(self) -> int:
        """Schedule size of the last solved round (the baselines' count hint)."""
        if self.last_report is None:
            raise RuntimeError("DracsAgent has not solved a round yet")
        return self.last_report.action.num_scheduled
