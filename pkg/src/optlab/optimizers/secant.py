"""Quasi-Newton (secant) updates: BFGS, DFP and limited-memory BFGS."""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError

KINDS = ("BFGS-inverse", "DFP")


class CurvatureError(ContractError):
    """The pair violates ``<dg, dw> > 0``; the caller should skip the update."""


def bfgs_inverse_update(Hinv: np.ndarray, dw: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``(I - rho dw dg^T) Hinv (I - rho dg dw^T) + rho dw dw^T``, ``rho = 1/<dg, dw>``."""
    c = dg @ dw
    if not c > 0:
        raise CurvatureError(f"curvature condition violated: <dg, dw> = {c}")
    rho = 1.0 / c
    Hg = Hinv @ dg
    gHg = dg @ Hg
    # expanded form, avoids two dense products
    out = (Hinv - rho * (np.outer(dw, Hg) + np.outer(Hg, dw))
           + (rho * rho * gHg + rho) * np.outer(dw, dw))
    return 0.5 * (out + out.T)


def dfp_inverse_update(Hinv: np.ndarray, dw: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """DFP in inverse form: ``Hinv - Hinv dg dg^T Hinv / <dg, Hinv dg> + dw dw^T / <dg, dw>``."""
    c = dg @ dw
    if not c > 0:
        raise CurvatureError(f"curvature condition violated: <dg, dw> = {c}")
    Hg = Hinv @ dg
    out = Hinv - np.outer(Hg, Hg) / (dg @ Hg) + np.outer(dw, dw) / c
    return 0.5 * (out + out.T)


def secant_update(kind: str, Hinv: np.ndarray, dw: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Dispatch to :func:`bfgs_inverse_update` or :func:`dfp_inverse_update`.

    Both return an inverse-Hessian approximation ``B`` with ``B dg = dw``.
    """
    if kind == "BFGS-inverse":
        return bfgs_inverse_update(Hinv, dw, dg)
    if kind == "DFP":
        return dfp_inverse_update(Hinv, dw, dg)
    raise ContractError(f"unknown secant update {kind!r}")


def lbfgs_apply(memory: Sequence[Tuple[np.ndarray, np.ndarray]], v: np.ndarray) -> np.ndarray:
    """Apply the L-BFGS inverse-Hessian to ``v`` (two-loop recursion, ``H_0 = I``).

    Parameters
    ----------
    memory : sequence of (dw, dg)
        Oldest pair first.
    v : ndarray

    Returns
    -------
    ndarray
        Same as applying the dense BFGS-inverse recursion started from the
        identity at the oldest stored pair.
    """
    q = np.array(v, dtype=np.float64)
    if len(memory) == 0:
        return q
    rhos = []
    alphas = []
    for dw, dg in reversed(memory):
        c = dg @ dw
        if not c > 0:
            raise CurvatureError("stored pair violates the curvature condition")
        rho = 1.0 / c
        a = rho * (dw @ q)
        q -= a * dg
        rhos.append(rho)
        alphas.append(a)
    r = q
    for (dw, dg), rho, a in zip(memory, reversed(rhos), reversed(alphas)):
        b = rho * (dg @ r)
        r += (a - b) * dw
    return r


class LBFGSMemory:
    """Bounded memory of curvature pairs; invalid pairs are skipped."""

    def __init__(self, k: int):
        if k < 1:
            raise ContractError("memory size must be >= 1")
        self.pairs = deque(maxlen=k)
        self.skipped = 0

    def push(self, dw: np.ndarray, dg: np.ndarray) -> bool:
        if dg @ dw > 0:
            self.pairs.append((np.array(dw, dtype=np.float64), np.array(dg, dtype=np.float64)))
            return True
        self.skipped += 1
        return False

    def apply(self, v: np.ndarray) -> np.ndarray:
        return lbfgs_apply(list(self.pairs), v)


def quasi_newton_run(p, w0, iters: int, kind: str = "BFGS-inverse", memory: Optional[int] = None,
                     alpha: float = 1.0, tol: float = 1e-10):
    """Quasi-Newton iteration ``w <- w - alpha B g`` with skipped invalid pairs.

    ``memory`` selects L-BFGS with that many pairs; otherwise the dense
    ``kind`` update is used.

    Returns
    -------
    trace : Trace
    """
    from .state import Trace

    w = np.array(w0, dtype=np.float64)
    g = p.gradient(w)
    tr = Trace()
    tr.record(p, w, 0, lr=alpha)
    mem = LBFGSMemory(memory) if memory else None
    B = np.eye(w.size)
    for n in range(1, iters + 1):
        if np.linalg.norm(g) <= tol:
            break
        step = mem.apply(g) if mem else B @ g
        w_new = w - alpha * step
        g_new = p.gradient(w_new)
        dw, dg = w_new - w, g_new - g
        if mem:
            mem.push(dw, dg)
        else:
            try:
                B = secant_update(kind, B, dw, dg)
            except CurvatureError:
                pass
        w, g = w_new, g_new
        tr.record(p, w, n, lr=alpha)
    return tr
