"""Class-weighted cross-entropy and its gradient with respect to the logits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ClassWeights:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("class weights must be finite and positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])

    def __len__(self) -> int:
        return self.values.shape[0]


def _weights(w, n: int) -> np.ndarray:
    if w is None:
        return np.ones(n)
    v = w.values if isinstance(w, ClassWeights) else np.asarray(w, dtype=np.float64)
    if v.shape != (n,):
        raise ValueError(f"{v.shape[0]} class weights for {n} logits")
    return v


def _check(logits, label: int) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    if not 0 <= label < z.shape[0]:
        raise ValueError(f"label {label} out of range for {z.shape[0]} classes")
    return z


def log_softmax(z: np.ndarray) -> np.ndarray:
    m = z.max()
    return z - (m + np.log(np.exp(z - m).sum()))


def weighted_xent(logits, label: int, w=None) -> float:
    """``-w[label] * log softmax(logits)[label]``."""
    z = _check(logits, label)
    return float(-_weights(w, z.shape[0])[label] * log_softmax(z)[label])


def xent_grad(logits, label: int, w=None) -> np.ndarray:
    z = _check(logits, label)
    g = np.exp(log_softmax(z))
    g[label] -= 1.0
    return _weights(w, z.shape[0])[label] * g


def class_weights_from_counts(counts) -> ClassWeights:
    """Inverse-frequency weights ``total / (n_classes * count)``; balanced data gives all ones."""
    c = np.asarray(counts, dtype=np.float64).reshape(-1)
    if c.size == 0 or np.any(c <= 0):
        raise ValueError("every class needs a positive sample count")
    return ClassWeights(c.sum() / (c.size * c))
