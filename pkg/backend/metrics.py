"""
Run Metrics
Per-round records of one simulation run and the long-term-average (LTA)
report computed from them. LTA ratios are always recomputed from the raw
per-round columns, so a run re-read from CSV yields the same report.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

PHASES = ("tra", "up", "mine")


@dataclass
class MetricsSeries:
    num_clients: int
    client_types: Sequence[str] = ()
    tau: List[float] = field(default_factory=list)
    data_size: List[float] = field(default_factory=list)
    energy: List[np.ndarray] = field(default_factory=list)
    backlog: List[np.ndarray] = field(default_factory=list)
    delta_v: List[float] = field(default_factory=list)
    loss: List[float] = field(default_factory=list)
    accuracy: List[float] = field(default_factory=list)
    scheduled: List[int] = field(default_factory=list)
    phase_energy: Dict[str, List[np.ndarray]] = field(default_factory=lambda: {p: [] for p in PHASES})
    solver_iterations: List[Dict[str, int]] = field(default_factory=list)
    oracle_checks: List[Dict[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tau)

    def record(self, outcome, backlog, delta_v: float, scheduled: int,
               loss: float = math.nan, accuracy: float = math.nan,
               iterations: Optional[Dict[str, int]] = None):
        """Append one round; `backlog` is Z(t+1) after the queue update."""
        self.tau.append(float(outcome.latency))
        self.data_size.append(float(outcome.data_size))
        self.energy.append(np.asarray(outcome.energy, dtype=float).copy())
        self.backlog.append(np.asarray(backlog, dtype=float).copy())
        self.delta_v.append(float(delta_v))
        self.scheduled.append(int(scheduled))
        self.loss.append(float(loss))
        self.accuracy.append(float(accuracy))
        self.phase_energy["tra"].append(np.asarray(outcome.train_energy, dtype=float))
        self.phase_energy["up"].append(np.asarray(outcome.uplink_energy, dtype=float))
        self.phase_energy["mine"].append(np.asarray(outcome.mining_energy, dtype=float))
        self.solver_iterations.append(dict(iterations or {}))

    def energy_matrix(self) -> np.ndarray:
        return np.vstack(self.energy) if self.energy else np.zeros((0, self.num_clients))

    def running_lta_energy(self) -> np.ndarray:
        """E_bar_n(t) for every prefix t, shape (T, N)."""
        return np.cumsum(self.energy_matrix(), axis=0) / np.cumsum(self.tau)[:, None]

    def running_lta_data(self) -> np.ndarray:
        return np.cumsum(self.data_size) / np.cumsum(self.tau)

    def to_frame(self) -> pd.DataFrame:
        n = self.num_clients
        columns = {
            "t": np.arange(1, len(self) + 1),
            "tau": self.tau,
            "D": self.data_size,
            "scheduled": self.scheduled,
        }
        energy = self.energy_matrix()
        backlog = np.vstack(self.backlog) if self.backlog else np.zeros((0, n))
        for k in range(n):
            columns[f"E_{k}"] = energy[:, k]
        for k in range(n):
            columns[f"Z_{k}"] = backlog[:, k]
        for phase in PHASES:
            values = np.vstack(self.phase_energy[phase]) if self.phase_energy[phase] else np.zeros((0, n))
            for k in range(n):
                columns[f"E{phase}_{k}"] = values[:, k]
        columns["delta_V"] = self.delta_v
        columns["loss"] = self.loss
        columns["accuracy"] = self.accuracy
        return pd.DataFrame(columns)

    def summary(self) -> dict:
        return lta_report(self.to_frame(), self.client_types)


def _client_columns(frame: pd.DataFrame, prefix: str) -> List[str]:
    columns = [c for c in frame.columns if c.startswith(prefix) and c[len(prefix):].isdigit()]
    return sorted(columns, key=lambda c: int(c[len(prefix):]))


def _last_valid(series: pd.Series) -> float:
    valid = series.dropna()
    return float(valid.iloc[-1]) if len(valid) else math.nan


def lta_report(frame: pd.DataFrame, client_types: Sequence[str] = ()) -> dict:
    """
    LTA summary of a run: data rate sum(D)/sum(tau), per-client power
    sum(E_n)/sum(tau) overall and per phase, final backlogs and FL metrics.
    """
    total_time = float(frame["tau"].sum())
    energy_cols = _client_columns(frame, "E_")
    lta_energy = [float(frame[c].sum()) / total_time for c in energy_cols]

    report = {
        "rounds": int(len(frame)),
        "total_time": total_time,
        "lta_data": float(frame["D"].sum()) / total_time,
        "lta_energy": lta_energy,
        "final_backlog": [float(frame[c].iloc[-1]) for c in _client_columns(frame, "Z_")],
        "mean_delta_V": float(frame["delta_V"].mean()),
        "mean_scheduled": float(frame["scheduled"].mean()),
        "final_loss": _last_valid(frame["loss"]),
        "final_accuracy": _last_valid(frame["accuracy"]),
        "lta_phase_energy": {
            phase: [float(frame[c].sum()) / total_time for c in _client_columns(frame, f"E{phase}_")]
            for phase in PHASES
        },
    }

    if client_types:
        types = sorted(set(client_types))
        per_type = {}
        for kind in types:
            members = [k for k, t in enumerate(client_types) if t == kind]
            per_type[kind] = {
                phase: float(np.mean([report["lta_phase_energy"][phase][k] for k in members]))
                for phase in PHASES
            }
            per_type[kind]["total"] = float(np.mean([lta_energy[k] for k in members]))
        report["lta_energy_by_type"] = per_type
    return report
