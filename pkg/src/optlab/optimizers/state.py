"""Iterate state and per-iteration trace records."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

TRACE_COLUMNS = ("n", "loss_gap", "dist", "grad_norm", "lr", "beta", "gamma")


@dataclass
class OptimizerState:
    """Everything a single iteration rule may need to carry.

    Only ``w``, ``w_prev`` and ``n`` are used by every method; the remaining
    fields are populated by the methods that need them.
    """

    w: np.ndarray
    w_prev: Optional[np.ndarray] = None
    momentum: Optional[np.ndarray] = None
    n: int = 0
    gamma: float = float("nan")
    lam: float = float("nan")
    z: Optional[np.ndarray] = None
    curvature_memory: list = field(default_factory=list)
    moment1: Optional[np.ndarray] = None
    moment2: Optional[np.ndarray] = None
    accumulated_sq: Optional[np.ndarray] = None
    running_max: Optional[np.ndarray] = None
    delta_rms: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    beta: float = float("nan")

    def __post_init__(self):
        self.w = np.array(self.w, dtype=np.float64)
        if self.w_prev is None:
            self.w_prev = self.w.copy()

    def advance(self, w_new: np.ndarray, **changes) -> "OptimizerState":
        """New state with ``w_prev <- w``, ``w <- w_new`` and ``n <- n+1``."""
        if not np.all(np.isfinite(w_new)):
            raise FloatingPointError(f"non-finite iterate at step {self.n + 1}")
        return replace(self, w=w_new, w_prev=self.w, n=self.n + 1, **changes)


def check_finite(x, name: str = "input") -> None:
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"{name} is not finite")


class Trace:
    """Per-iteration log.

    Columns are ``n, loss_gap, dist, grad_norm, lr, beta, gamma``; methods
    without a learning rate, momentum or gamma store NaN.
    """

    def __init__(self):
        self._rows: List[tuple] = []

    def append(self, n, loss_gap, dist, grad_norm, lr=float("nan"), beta=float("nan"), gamma=float("nan")):
        self._rows.append((int(n), float(loss_gap), float(dist), float(grad_norm), float(lr), float(beta), float(gamma)))

    def record(self, problem, w, n, lr=float("nan"), beta=float("nan"), gamma=float("nan")):
        """Append a row computed from ``problem`` at ``w``."""
        val, g = problem.evaluate(w)
        gap = float(val) - problem.min_value
        dist = float(np.linalg.norm(np.asarray(w) - problem.minimizer))
        self.append(n, gap, dist, np.linalg.norm(g), lr, beta, gamma)

    def __len__(self) -> int:
        return len(self._rows)

    def __getitem__(self, i):
        return self._rows[i]

    @property
    def rows(self) -> List[tuple]:
        return list(self._rows)

    def column(self, name: str) -> np.ndarray:
        j = TRACE_COLUMNS.index(name)
        return np.array([r[j] for r in self._rows], dtype=np.float64)

    @property
    def n(self) -> np.ndarray:
        return self.column("n").astype(int)

    @property
    def loss_gap(self) -> np.ndarray:
        return self.column("loss_gap")

    @property
    def dist(self) -> np.ndarray:
        return self.column("dist")

    @property
    def grad_norm(self) -> np.ndarray:
        return self.column("grad_norm")

    @property
    def lr(self) -> np.ndarray:
        return self.column("lr")

    @property
    def beta(self) -> np.ndarray:
        return self.column("beta")

    @property
    def gamma(self) -> np.ndarray:
        return self.column("gamma")
