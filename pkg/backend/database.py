"""
Result persistence: per-run CSV series and per-cell JSON summaries.
"""

import json
import math
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from metrics import MetricsSeries, lta_report

# Enough significant digits for a float64 to survive the text round trip
FLOAT_FORMAT = "%.17g"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


class ResultStore:
    """Output directory of one run or sweep."""

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(exist_ok=True, parents=True)

    def series_path(self, cell: str) -> Path:
        return self.output_dir / f"{cell}.csv"

    def summary_path(self, cell: str) -> Path:
        return self.output_dir / f"{cell}.json"

    def save_series(self, cell: str, series: MetricsSeries) -> Path:
        path = self.series_path(cell)
        series.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    def load_series(self, cell: str) -> pd.DataFrame:
        return pd.read_csv(self.series_path(cell), float_precision="round_trip")

    def save_summary(self, cell: str, summary: Dict) -> Path:
        path = self.summary_path(cell)
        with open(path, "w") as f:
            json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
        return path

    def load_summary(self, cell: str) -> Dict:
        with open(self.summary_path(cell), "r") as f:
            return json.load(f)

    def recompute_summary(self, cell: str, client_types=()) -> Dict:
        """LTA report rebuilt from the stored CSV."""
        return lta_report(self.load_series(cell), client_types)

    def list_cells(self) -> List[str]:
        return sorted(p.stem for p in self.output_dir.glob("*.json") if p.stem != "sweep")

    def save_sweep(self, cells: List[Dict], failures: Optional[List[Dict]] = None) -> Path:
        path = self.output_dir / "sweep.json"
        with open(path, "w") as f:
            json.dump(_jsonable({"cells": cells, "failures": failures or []}), f, indent=2)
        return path
