"""Levenberg-Marquardt step with a Hessian-free inner solver."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ContractError, ConvergenceError


def cg_solve(matvec: Callable[[np.ndarray], np.ndarray], b: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Solve ``A x = b`` for SPD ``A`` given only ``matvec``.

    Stops when ``||b - A x|| <= tol * ||b||``.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` iterations do not reach the tolerance.
    """
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    bn = np.linalg.norm(b)
    if bn == 0:
        return x
    r = b.copy()
    d = r.copy()
    rr = r @ r
    target = tol * bn
    for _ in range(max_iter):
        if np.sqrt(rr) <= target:
            return x
        Ad = matvec(d)
        curv = d @ Ad
        if not curv > 0:
            raise ContractError("shifted Hessian is not positive definite")
        a = rr / curv
        x += a * d
        r -= a * Ad
        rr_new = r @ r
        d = r + (rr_new / rr) * d
        rr = rr_new
    # recompute the true residual before giving up
    res = np.linalg.norm(b - matvec(x))
    if res <= target:
        return x
    raise ConvergenceError("inner CG did not converge", res / bn)


def lm_step(g: np.ndarray, hvp: Callable[[np.ndarray], np.ndarray], M: float,
            inner_tol: float = 1e-12, inner_max: int = 1000) -> np.ndarray:
    """Regularized Newton step ``-(H + M I)^{-1} g``.

    Parameters
    ----------
    g : ndarray
        Gradient at the current point.
    hvp : callable
        Hessian-vector product at the current point.
    M : float
        Non-negative damping.
    inner_tol : float
        Relative residual target of the inner CG.
    inner_max : int
        Inner iteration budget.
    """
    if M < 0:
        raise ContractError("damping must be non-negative")
    g = np.asarray(g, dtype=np.float64)
    return -cg_solve(lambda v: hvp(v) + M * v, g, inner_tol, inner_max)
