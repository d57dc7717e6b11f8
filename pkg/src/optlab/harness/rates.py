"""Rate and exponent fits on traces."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError

__all__ = ["estimate_rate", "fit_loglog_exponent", "diminishing_contraction"]


def _dist(trace) -> np.ndarray:
    if hasattr(trace, "dist"):
        return np.asarray(trace.dist, dtype=np.float64)
    return np.asarray(trace, dtype=np.float64)


def estimate_rate(trace, window: Optional[Tuple[int, int]] = None) -> float:
    """Per-step contraction ``exp(slope)`` of ``log dist`` against ``n``.

    Parameters
    ----------
    trace : Trace or array_like
        A trace (its ``dist`` column is used) or the distances themselves,
        indexed by iteration.
    window : (n0, n1), optional
        Inclusive iteration range; the whole trace by default.

    Returns
    -------
    float

    Raises
    ------
    ContractError
        If the window is too short or holds non-positive distances.
    """
    d = _dist(trace)
    n0, n1 = (0, d.size - 1) if window is None else window
    if not (0 <= n0 < n1 < d.size):
        raise ContractError(f"window {(n0, n1)} does not fit a trace of length {d.size}")
    seg = d[n0:n1 + 1]
    if not np.all(seg > 0) or not np.all(np.isfinite(seg)):
        raise ContractError("distances in the window must be positive and finite")
    n = np.arange(n0, n1 + 1, dtype=np.float64)
    slope = np.polyfit(n, np.log(seg), 1)[0]
    return float(np.exp(slope))


def fit_loglog_exponent(values: Sequence[float], window: Optional[Tuple[int, int]] = None) -> float:
    """Decay exponent ``p`` of ``values[n] ~ C n^(-p)`` by least squares in log-log.

    The default window is the last half of the sequence (``n >= 1``).
    """
    v = np.asarray(values, dtype=np.float64)
    if window is None:
        window = (max(1, v.size // 2), v.size - 1)
    n0, n1 = window
    if not (1 <= n0 < n1 < v.size):
        raise ContractError(f"window {window} does not fit {v.size} values (needs n0 >= 1)")
    seg = v[n0:n1 + 1]
    if not np.all(seg > 0):
        raise ContractError("values in the window must be positive")
    n = np.arange(n0, n1 + 1, dtype=np.float64)
    return float(-np.polyfit(np.log(n), np.log(seg), 1)[0])


def diminishing_contraction(a0: float, q: float, n: int) -> np.ndarray:
    """The sequence ``a_{k+1} = (1 - q a_k) a_k`` for ``k < n``.

    Parameters
    ----------
    a0 : float
        Start in ``[0, 1/q]``.
    q : float
        Positive contraction constant.
    n : int

    Returns
    -------
    ndarray, shape (n + 1,)
    """
    if not q > 0 or not 0 <= a0 <= 1.0 / q:
        raise ContractError("need q > 0 and 0 <= a0 <= 1/q")
    a = np.empty(n + 1)
    a[0] = a0
    x = a0
    for k in range(n):
        x = (1.0 - q * x) * x
        a[k + 1] = x
    return a
