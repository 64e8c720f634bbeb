"""
Trace Logger: Per-round decision traces of a simulation run.
Appends one JSON object per agent action to a JSONL file.
"""

import json
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np


def _to_json(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


class TraceLogger:
    """
    JSONL trace sink. Every record carries the run's trace_id, the round
    index, the agent, the action, its input/output and the decision reason.
    """

    def __init__(self, log_file: str, trace_id: Optional[str] = None):
        self.log_file = Path(log_file)
        self.log_file.parent.mkdir(exist_ok=True, parents=True)
        self.log_file.touch(exist_ok=True)
        self.trace_id = trace_id or str(uuid.uuid4())

    def log_trace(self, agent_name: str, action: str, input_data: Dict, output_data: Dict,
                  decision_reason: str, status: str = "success",
                  round_index: Optional[int] = None) -> str:
        """
        Append one trace record.

        Args:
            agent_name: Agent taking the action
            action: What it did (decide, observe, queue_update, ...)
            status: "success", "failed" or "error"
            round_index: Simulation round the record belongs to

        Returns:
            trace_id of the run
        """
        trace = {
            "trace_id": self.trace_id,
            "timestamp": datetime.now().isoformat(),
            "round": round_index,
            "agent_name": agent_name,
            "action": action,
            "input": input_data,
            "output": output_data,
            "decision_reason": decision_reason,
            "status": status,
        }
        with open(self.log_file, "a") as f:
            f.write(json.dumps(trace, default=_to_json) + "\n")
        return self.trace_id

    def get_traces(self, limit: int = 100, trace_id: Optional[str] = None,
                   agent_name: Optional[str] = None, round_index: Optional[int] = None) -> List[Dict]:
        """Records in file order, optionally filtered; at most `limit` of them."""
        traces = []
        with open(self.log_file, "r") as f:
            for line in f:
                if not line.strip():
                    continue
                try:
                    trace = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if trace_id and trace.get("trace_id") != trace_id:
                    continue
                if agent_name and trace.get("agent_name") != agent_name:
                    continue
                if round_index is not None and trace.get("round") != round_index:
                    continue
                traces.append(trace)
                if len(traces) >= limit:
                    break
        return traces

    def get_agent_statistics(self) -> Dict[str, Any]:
        """Record counts per agent and per status."""
        stats = {"total_traces": 0, "by_agent": {}, "by_status": {"success": 0, "failed": 0, "error": 0}}
        for trace in self.get_traces(limit=10 ** 9):
            stats["total_traces"] += 1
            agent = trace.get("agent_name", "unknown")
            stats["by_agent"][agent] = stats["by_agent"].get(agent, 0) + 1
            status = trace.get("status")
            if status in stats["by_status"]:
                stats["by_status"][status] += 1
        return stats
