"""Armijo backtracking and two-way backtracking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractError, ConvergenceError

__all__ = ["BacktrackResult", "armijo_condition", "armijo_search", "armijo_test_bound", "two_way_search", "run_backtracking_gd"]


@dataclass(frozen=True)
class BacktrackResult:
    """Outcome of a line search.

    Attributes
    ----------
    alpha : float
        Accepted learning rate.
    tests : int
        Number of times the sufficient-decrease condition was evaluated.
    f_new : float
        Objective value at the accepted point.
    """

    alpha: float
    tests: int
    f_new: float


def armijo_condition(f0: float, f_new: float, alpha: float, gnorm2: float) -> bool:
    """``f_new <= f0 - alpha/2 ||g||^2`` (ties accepted)."""
    return f_new <= f0 - 0.5 * alpha * gnorm2


def _check(alpha0, delta, g):
    if not alpha0 > 0:
        raise ContractError("initial learning rate must be positive")
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0, 1)")
    gn2 = float(np.dot(g, g))
    if gn2 == 0:
        raise ContractError("gradient is zero; nothing to search")
    return gn2


def armijo_search(f: Callable[[np.ndarray], float], w: np.ndarray, g: np.ndarray, alpha0: float,
                  delta: float = 0.5, max_tests: int = 100) -> BacktrackResult:
    """Backtrack ``alpha = delta^k alpha0`` until the Armijo condition holds.

    Parameters
    ----------
    f : callable
        Objective value.
    w, g : ndarray
        Current point and its gradient.
    alpha0 : float
        First trial step.
    delta : float
        Shrink factor in ``(0, 1)``.
    max_tests : int
        Maximal number of condition evaluations.

    Returns
    -------
    BacktrackResult
        ``tests = k + 1`` for the accepted ``k``.

    Raises
    ------
    ConvergenceError
        If no step is accepted within ``max_tests`` evaluations.
    """
    w = np.asarray(w, dtype=np.float64)
    gn2 = _check(alpha0, delta, g)
    f0 = float(f(w))
    alpha = alpha0
    for k in range(max_tests):
        fn = float(f(w - alpha * g))
        if armijo_condition(f0, fn, alpha, gn2):
            return BacktrackResult(alpha, k + 1, fn)
        alpha *= delta
    raise ConvergenceError(f"Armijo condition not met after {max_tests} tests", alpha)


def armijo_test_bound(L: float, L0: float, delta: float) -> int:
    """Backtracking bound ``ceil(log(L/L0) / log(1/delta))``, or 1 when ``L0 >= L``.

    For ``L0 < L`` this is the smallest ``k`` with ``delta^k / L0 <= 1/L``,
    the number of reductions needed to reach ``1/L``.
    """
    if not (L > 0 and L0 > 0 and 0 < delta < 1):
        raise ContractError("need L > 0, L0 > 0 and 0 < delta < 1")
    if L0 >= L:
        return 1
    return int(math.ceil(math.log(L / L0) / math.log(1.0 / delta) - 1e-12))


def two_way_search(f: Callable[[np.ndarray], float], w: np.ndarray, g: np.ndarray, alpha_prev: float,
                   delta: float = 0.5, max_tests: int = 100, grow: bool = True) -> BacktrackResult:
    """Backtracking that starts at the previous step and may grow it.

    If ``alpha_prev`` is accepted and ``grow`` is set, the step is multiplied
    by ``1/delta`` while the condition keeps holding; otherwise it shrinks as
    in :func:`armijo_search`.
    """
    w = np.asarray(w, dtype=np.float64)
    gn2 = _check(alpha_prev, delta, g)
    f0 = float(f(w))
    alpha = alpha_prev
    fn = float(f(w - alpha * g))
    tests = 1
    if not armijo_condition(f0, fn, alpha, gn2):
        while tests < max_tests:
            alpha *= delta
            fn = float(f(w - alpha * g))
            tests += 1
            if armijo_condition(f0, fn, alpha, gn2):
                return BacktrackResult(alpha, tests, fn)
        raise ConvergenceError(f"Armijo condition not met after {max_tests} tests", alpha)
    if not grow:
        return BacktrackResult(alpha, tests, fn)
    while tests < max_tests:
        trial = alpha / delta
        ft = float(f(w - trial * g))
        tests += 1
        if not armijo_condition(f0, ft, trial, gn2):
            break
        alpha, fn = trial, ft
    return BacktrackResult(alpha, tests, fn)


def run_backtracking_gd(problem, w0, alpha0: float, iters: int, delta: float = 0.5,
                        two_way: bool = False, tol: float = 1e-10):
    """Gradient descent with Armijo (or two-way) step selection.

    Returns
    -------
    trace : Trace
    tests : list of int
        Condition evaluations per step.
    """
    from .optimizers.state import Trace

    w = np.array(w0, dtype=np.float64)
    tr = Trace()
    tr.record(problem, w, 0, lr=alpha0)
    tests = []
    alpha = alpha0
    for n in range(1, iters + 1):
        g = problem.gradient(w)
        if np.linalg.norm(g) <= tol:
            break
        if two_way:
            res = two_way_search(problem.value, w, g, alpha, delta)
        else:
            res = armijo_search(problem.value, w, g, alpha0, delta)
        alpha = res.alpha
        tests.append(res.tests)
        w = w - alpha * g
        tr.record(problem, w, n, lr=alpha)
    return tr, tests
