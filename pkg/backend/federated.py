"""
Federated Learning Engine
Squared-SVM clients trained with full-batch gradient steps, weighted model
aggregation over the scheduled clients, and test-set evaluation.

Data is either synthetic (two Gaussian clusters at +/- mu/sqrt(d) * 1 drawn
with scikit-learn) or read from a CSV of feature columns plus a +/-1 label.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.datasets import make_blobs

from errors import ConfigError

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"


@dataclass(frozen=True)
class LocalDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must have the same length")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ModelParams:
    weights: np.ndarray
    bias: float = 0.0

    @classmethod
    def zeros(cls, dim: int) -> "ModelParams":
        return cls(weights=np.zeros(dim), bias=0.0)

    def as_vector(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "ModelParams":
        vector = np.asarray(vector, dtype=float)
        return cls(weights=vector[:-1].copy(), bias=float(vector[-1]))


# ============================================================================
# DATA
# ============================================================================

def _blobs(sizes: Sequence[int], dim: int, cluster_mean: float, seed: int) -> LocalDataset:
    centre = np.full(dim, cluster_mean / np.sqrt(dim))
    features, blob = make_blobs(n_samples=list(sizes), n_features=dim,
                                centers=np.vstack([centre, -centre]), cluster_std=1.0,
                                random_state=seed)
    return LocalDataset(features=features, labels=np.where(blob == 0, 1.0, -1.0))


def _split_counts(size: int) -> List[int]:
    return [size - size // 2, size // 2]


def make_client_datasets(dataset_sizes: Sequence[int], dim: int, cluster_mean: float,
                         rng: np.random.Generator) -> List[LocalDataset]:
    """One i.i.d. synthetic dataset per client, balanced between the two classes."""
    datasets = []
    for size in dataset_sizes:
        seed = int(rng.integers(2 ** 31 - 1))
        datasets.append(_blobs(_split_counts(int(size)), dim, cluster_mean, seed))
    return datasets


def make_test_set(size: int, dim: int, cluster_mean: float, rng: np.random.Generator) -> LocalDataset:
    return _blobs(_split_counts(size), dim, cluster_mean, int(rng.integers(2 ** 31 - 1)))


def load_csv_dataset(path: str, dataset_sizes: Sequence[int],
                     rng: np.random.Generator) -> Tuple[List[LocalDataset], LocalDataset]:
    """
    Partition a CSV (feature columns + a `label` column of +/-1) into client
    datasets of the requested sizes; the remaining rows form the test set.

    Raises:
        ConfigError: missing file, bad labels or too few rows
    """
    csv_path = Path(path)
    if not csv_path.exists():
        raise ConfigError(f"dataset file not found: {path}", field="dataset_csv")

    frame = pd.read_csv(csv_path)
    if LABEL_COLUMN not in frame.columns:
        raise ConfigError(f"dataset needs a '{LABEL_COLUMN}' column", field="dataset_csv")
    labels = frame[LABEL_COLUMN].to_numpy(dtype=float)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ConfigError("labels must be +1 or -1", field="dataset_csv")
    features = frame.drop(columns=[LABEL_COLUMN]).to_numpy(dtype=float)

    needed = int(sum(dataset_sizes))
    if len(frame) < needed + 2:
        raise ConfigError(f"dataset has {len(frame)} rows, clients need {needed} plus a test set",
                          field="dataset_csv")

    order = rng.permutation(len(frame))
    datasets, start = [], 0
    for size in dataset_sizes:
        rows = order[start:start + int(size)]
        datasets.append(LocalDataset(features[rows], labels[rows]))
        start += int(size)
    rest = order[start:]
    logger.info("Loaded %d rows from %s (%d for testing)", len(frame), path, len(rest))
    return datasets, LocalDataset(features[rest], labels[rest])


# ============================================================================
# SQUARED-SVM
# ============================================================================

def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Labels in {-1, +1}; a zero score maps to +1."""
    return np.where(features @ params.weights + params.bias >= 0, 1.0, -1.0)


def loss(params: ModelParams, dataset: LocalDataset, l_reg: float) -> float:
    """mean(max(0, 1 - y*(w.x + b))^2) + l_reg/2 * ||w||^2."""
    margins = np.maximum(0.0, 1.0 - dataset.labels * (dataset.features @ params.weights + params.bias))
    return float(np.mean(margins ** 2) + 0.5 * l_reg * np.dot(params.weights, params.weights))


def gradient(params: ModelParams, dataset: LocalDataset, l_reg: float) -> ModelParams:
    margins = np.maximum(0.0, 1.0 - dataset.labels * (dataset.features @ params.weights + params.bias))
    coeff = -2.0 * margins * dataset.labels / len(dataset)
    return ModelParams(weights=dataset.features.T @ coeff + l_reg * params.weights,
                       bias=float(coeff.sum()))


def local_train(params: ModelParams, dataset: LocalDataset, local_epochs: int,
                step_size: float, l_reg: float) -> ModelParams:
    """K full-batch gradient steps from the global model."""
    weights, bias = params.weights.copy(), params.bias
    for _ in range(local_epochs):
        grad = gradient(ModelParams(weights, bias), dataset, l_reg)
        weights = weights - step_size * grad.weights
        bias = bias - step_size * grad.bias
    return ModelParams(weights=weights, bias=float(bias))


def aggregate(models: Sequence[ModelParams], schedule, dataset_sizes,
              previous: Optional[ModelParams] = None) -> ModelParams:
    """
    Weighted mean of the scheduled local models, weights D_n / D(t).

    An empty schedule returns `previous` unchanged.
    """
    selected = np.asarray(schedule).astype(bool)
    if not selected.any():
        if previous is None:
            raise ValueError("empty schedule needs the previous global model")
        return previous
    weights = np.asarray(dataset_sizes, dtype=float) * selected
    stacked = np.vstack([m.as_vector() for m in models])
    return ModelParams.from_vector(weights @ stacked / weights.sum())


def evaluate(params: ModelParams, test_set: LocalDataset, l_reg: float = 0.0) -> Tuple[float, float]:
    """(loss, accuracy) on the test set."""
    accuracy = float(np.mean(predict(params, test_set.features) == test_set.labels))
    return loss(params, test_set, l_reg), accuracy


class FederatedTrainer:
    """Global model plus client data of one simulation run."""

    def __init__(self, datasets: List[LocalDataset], test_set: LocalDataset,
                 local_epochs: int, step_size: float, l_reg: float):
        self.datasets = datasets
        self.test_set = test_set
        self.local_epochs = local_epochs
        self.step_size = step_size
        self.l_reg = l_reg
        self.sizes = np.array([len(d) for d in datasets], dtype=float)
        self.model = ModelParams.zeros(test_set.features.shape[1])

    @classmethod
    def from_config(cls, sim_config, rng: np.random.Generator) -> "FederatedTrainer":
        system = sim_config.system
        sizes = [p.dataset_size for p in sim_config.clients]
        if sim_config.dataset_csv:
            datasets, test_set = load_csv_dataset(sim_config.dataset_csv, sizes, rng)
        else:
            datasets = make_client_datasets(sizes, sim_config.feature_dim, sim_config.cluster_mean, rng)
            test_set = make_test_set(sim_config.test_size, sim_config.feature_dim, sim_config.cluster_mean, rng)
        return cls(datasets, test_set, system.local_epochs, system.step_size, system.l_reg)

    def run_round(self, schedule) -> ModelParams:
        """Local training on every scheduled client, then aggregation."""
        selected = np.asarray(schedule).astype(bool)
        models = [
            local_train(self.model, data, self.local_epochs, self.step_size, self.l_reg) if chosen else self.model
            for data, chosen in zip(self.datasets, selected)
        ]
        self.model = aggregate(models, selected, self.sizes, previous=self.model)
        return self.model

    def evaluate(self) -> Tuple[float, float]:
        return evaluate(self.model, self.test_set, self.l_reg)
