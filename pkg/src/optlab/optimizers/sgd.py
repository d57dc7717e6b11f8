"""Replica-ensemble SGD and weight averaging.

All replicas advance in lockstep as rows of one array. Replica ``r`` draws
its noise from ``make_stream(seed, r)``, so a replica's path does not depend
on how many other replicas run next to it, except through schedules that
read the ensemble distance estimate.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError, ContractError
from ..oracles import split_streams
from .schedules import LearningRates, Schedule
from .state import Trace


def thread_cap() -> int:
    """Replica parallelism allowed by ``OPTLAB_THREADS`` (default 1)."""
    raw = os.environ.get("OPTLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class EnsembleResult:
    """Per-replica histories of an SGD ensemble.

    Arrays have shape ``(iters + 1, replicas)`` except ``lr`` which is shared
    and has shape ``(iters + 1,)`` (the rate used to leave step ``n``; NaN on
    the last row).
    """

    loss_gap: np.ndarray
    dist2: np.ndarray
    grad_norm: np.ndarray
    lr: np.ndarray
    final: np.ndarray

    @property
    def replicas(self) -> int:
        return self.loss_gap.shape[1]

    @property
    def iters(self) -> int:
        return self.loss_gap.shape[0] - 1

    def mean_dist2(self) -> np.ndarray:
        return self.dist2.mean(axis=1)

    def mean_loss_gap(self) -> np.ndarray:
        return self.loss_gap.mean(axis=1)

    def trace(self, r: int) -> Trace:
        """Trace of replica ``r``."""
        tr = Trace()
        for n in range(self.iters + 1):
            tr.append(n, self.loss_gap[n, r], np.sqrt(self.dist2[n, r]), self.grad_norm[n, r], self.lr[n])
        return tr

    def traces(self):
        return [self.trace(r) for r in range(self.replicas)]


class _Gradients:
    """Draws ensemble gradients, optionally splitting replicas over threads."""

    def __init__(self, oracle, streams, threads: int):
        self.oracle = oracle
        self.streams = streams
        R = len(streams)
        self.threads = min(threads, R)
        self.chunks = np.array_split(np.arange(R), self.threads) if self.threads > 1 else None
        self.pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None

    def __call__(self, W: np.ndarray) -> np.ndarray:
        if self.pool is None:
            return self.oracle.ensemble(W, self.streams)
        parts = self.pool.map(lambda idx: self.oracle.ensemble(W[idx], [self.streams[i] for i in idx]), self.chunks)
        return np.concatenate(list(parts), axis=0)

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _v_inf_dist2(problem, W: np.ndarray) -> float:
    C = (W - problem.minimizer) @ problem.rotation
    return float(np.max(np.mean(C * C, axis=0)))


def sgd_run(
    problem, oracle, schedule: Schedule, w0, iters: int, replicas: int = 1, seed: int = 0,
    threads: Optional[int] = None,
) -> EnsembleResult:
    """Run ``replicas`` SGD chains ``W <- W - alpha_n g(W)`` in lockstep.

    Parameters
    ----------
    problem : object
        Objective with ``gradient``, ``value``, ``minimizer`` and ``min_value``.
    oracle : object
        Provides ``ensemble(W, streams)``.
    schedule : Schedule
    w0 : ndarray, shape (d,)
        Common starting point.
    iters : int
    replicas : int
    seed : int
        Replica ``r`` uses ``make_stream(seed, r)``.
    threads : int, optional
        Thread cap for noise draws; defaults to ``OPTLAB_THREADS``.

    Returns
    -------
    EnsembleResult
    """
    if replicas < 1:
        raise ContractError("replicas must be >= 1")
    if schedule.needs_ensemble and replicas == 1:
        raise ConfigError(f"schedule {schedule.kind!r} estimates E||W - w*||^2 across replicas; replicas must be > 1")
    if schedule.kind == "optimal-quadratic" and getattr(problem, "rotation", None) is None:
        raise ConfigError("optimal-quadratic schedule needs a problem with a known eigenbasis")
    streams = split_streams(seed, replicas)
    draw = _Gradients(oracle, streams, thread_cap() if threads is None else threads)
    W = np.tile(np.asarray(w0, dtype=np.float64), (replicas, 1))
    ws = problem.minimizer
    rates = LearningRates(schedule)
    gap = np.empty((iters + 1, replicas))
    d2 = np.empty((iters + 1, replicas))
    gn = np.empty((iters + 1, replicas))
    lr = np.full(iters + 1, np.nan)
    try:
        for n in range(iters + 1):
            diff = W - ws
            d2[n] = np.sum(diff * diff, axis=1)
            val, g = problem.evaluate(W)
            gap[n] = val - problem.min_value
            gn[n] = np.linalg.norm(g, axis=1)
            if n == iters:
                break
            if schedule.kind == "optimal-quadratic":
                est = _v_inf_dist2(problem, W)
            else:
                est = float(d2[n].mean())
            a = rates(n, est if schedule.needs_ensemble else None)
            lr[n] = a
            W = W - a * draw(W)
            if not np.all(np.isfinite(W)):
                raise FloatingPointError(f"SGD diverged at step {n + 1}")
    finally:
        draw.close()
    return EnsembleResult(gap, d2, gn, lr, W)


def averaged_sgd_run(
    problem, oracle, w0, N: int, M: float, sigma: float, replicas: int = 1, seed: int = 0,
    threads: Optional[int] = None,
) -> EnsembleResult:
    """SGD with the constant averaging step and running weight averages.

    Uses ``alpha* = ||w0 - w*|| / (sqrt(M^2 + sigma^2) sqrt(N))``. Row ``n``
    (``1 <= n <= N``) of the result describes ``mean(W_0, ..., W_{n-1})``;
    row 0 describes ``w0``.

    Parameters
    ----------
    M : float
        Bound on the true gradient norm along the run.
    sigma : float
        Noise level with ``E||xi||^2 <= sigma^2``.
    """
    if N < 1:
        raise ContractError("N must be >= 1")
    w0 = np.asarray(w0, dtype=np.float64)
    dist0 = float(np.linalg.norm(w0 - problem.minimizer))
    if dist0 == 0:
        raise ContractError("w0 is already the minimizer")
    alpha = dist0 / (np.sqrt(M * M + sigma * sigma) * np.sqrt(N))
    streams = split_streams(seed, replicas)
    draw = _Gradients(oracle, streams, thread_cap() if threads is None else threads)
    W = np.tile(w0, (replicas, 1))
    S = np.zeros_like(W)
    ws = problem.minimizer
    gap = np.empty((N + 1, replicas))
    d2 = np.empty((N + 1, replicas))
    gn = np.empty((N + 1, replicas))
    lr = np.full(N + 1, alpha)
    lr[-1] = np.nan

    def _rec(row, A):
        val, g = problem.evaluate(A)
        gap[row] = val - problem.min_value
        d2[row] = np.sum((A - ws) ** 2, axis=1)
        gn[row] = np.linalg.norm(g, axis=1)

    _rec(0, W)
    try:
        for n in range(1, N + 1):
            S += W
            _rec(n, S / n)
            if n < N:
                W = W - alpha * draw(W)
    finally:
        draw.close()
    return EnsembleResult(gap, d2, gn, lr, S / N)
