"""Gradient descent, heavy ball and the Nesterov family.

Heavy ball uses the flat parametrization
``w' = w + beta (w - w_prev) - h grad(w)``; the friction form
``p' = (1 - alpha f) p - alpha grad(w), w' = w + alpha p'`` maps onto it via
``beta = 1 - alpha f`` and ``h = alpha^2``.
"""

from __future__ import annotations

from typing import Callable, List, Optional

import numpy as np

from ..problems import ContractError
from .state import OptimizerState, Trace, check_finite

GradFn = Callable[[np.ndarray], np.ndarray]


def _grad_fn(p) -> GradFn:
    if callable(p) and not hasattr(p, "gradient"):
        return p
    return p.gradient


def gd_step(w: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    """One gradient descent step ``w - alpha g``."""
    if not alpha > 0:
        raise ContractError("learning rate must be positive")
    check_finite(g, "gradient")
    return np.asarray(w, dtype=np.float64) - alpha * g


def heavy_ball_step(state: OptimizerState, g: np.ndarray, h: float, beta: float) -> OptimizerState:
    """Flat heavy-ball step ``w + beta (w - w_prev) - h g``.

    Parameters
    ----------
    state : OptimizerState
    g : ndarray
        Gradient at ``state.w``.
    h : float
        Step size (``alpha^2`` in the friction form).
    beta : float
        Momentum coefficient.
    """
    if not h > 0:
        raise ContractError("step size must be positive")
    check_finite(g, "gradient")
    w_new = state.w + beta * (state.w - state.w_prev) - h * g
    return state.advance(w_new, beta=float(beta))


def heavy_ball_two_line(w: np.ndarray, p: np.ndarray, g: np.ndarray, alpha: float, friction: float):
    """Friction form: returns ``(w', p')``."""
    p_new = (1.0 - alpha * friction) * p - alpha * g
    return w + alpha * p_new, p_new


def friction_to_flat(alpha: float, friction: float):
    """Map ``(alpha, f)`` to ``(h, beta)``."""
    return alpha * alpha, 1.0 - alpha * friction


def nesterov_step(state: OptimizerState, grad_at: GradFn, h: float, beta: float) -> OptimizerState:
    """Look-ahead step ``y = w + beta (w - w_prev)``, ``w' = y - h grad(y)``."""
    if not h > 0:
        raise ContractError("step size must be positive")
    y = state.w + beta * (state.w - state.w_prev)
    g = grad_at(y)
    check_finite(g, "gradient")
    return state.advance(y - h * g, y=y, beta=float(beta))


def gamma_recursion(gamma: float, kappa_inv: float) -> float:
    """Positive root of ``g^2 = g kappa_inv + (1 - g) gamma^2``.

    Parameters
    ----------
    gamma : float
        Current value in ``(0, 1]``.
    kappa_inv : float
        Inverse condition number in ``[0, 1]``.
    """
    a = kappa_inv - gamma * gamma
    out = 0.5 * (a + np.sqrt(a * a + 4.0 * gamma * gamma))
    assert 0.0 < out <= 1.0 + 1e-15, out
    return float(min(out, 1.0))


def solve_gamma(L: float, mu: float, lam_prev: float) -> float:
    """Root in ``(0, 1]`` of ``L g^2 = g mu + (1 - g) lam_prev``."""
    b = lam_prev - mu
    disc = b * b + 4.0 * L * lam_prev
    # numerically stable form of (-b + sqrt(disc)) / (2L)
    if b <= 0:
        g = (-b + np.sqrt(disc)) / (2.0 * L)
    else:
        g = 2.0 * lam_prev / (b + np.sqrt(disc))
    assert 0.0 < g <= 1.0 + 1e-12, g
    return float(min(g, 1.0))


def general_schema_init(w0: np.ndarray, lam0: float) -> OptimizerState:
    """Initial state ``z_0 = w_0`` with estimate-sequence curvature ``lam0 > 0``."""
    if not lam0 > 0:
        raise ContractError("lambda_0 must be positive")
    w0 = np.array(w0, dtype=np.float64)
    return OptimizerState(w=w0, z=w0.copy(), lam=float(lam0))


def nesterov_general_schema_step(state: OptimizerState, p, L: float, mu: float) -> OptimizerState:
    """One iteration of the estimating-sequence scheme.

    Solves ``L g^2 = g mu + (1-g) lam_{n-1}`` for ``g = gamma_n``, sets
    ``lam_n``, the point ``y_n``, ``w_n = y_n - grad(y_n)/L`` and the new
    center ``z_n``.
    """
    if not (L >= mu >= 0):
        raise ContractError("need L >= mu >= 0")
    grad = _grad_fn(p)
    lam_prev = state.lam
    g_n = solve_gamma(L, mu, lam_prev)
    lam = g_n * mu + (1.0 - g_n) * lam_prev
    y = (lam * state.w + lam_prev * g_n * state.z) / (g_n * mu + lam_prev)
    gy = grad(y)
    check_finite(gy, "gradient")
    w_new = y - gy / L
    z = (g_n * mu * y + (1.0 - g_n) * lam_prev * state.z - g_n * gy) / lam
    return state.advance(w_new, y=y, z=z, lam=lam, gamma=g_n)


def dynamic_init(w0: np.ndarray, kappa0_inv: Optional[float] = None, gamma0: Optional[float] = None) -> OptimizerState:
    """Initial state with ``gamma_0 = sqrt(kappa0_inv)`` and ``w_{-1} = w_0``."""
    if gamma0 is None:
        if kappa0_inv is None or not kappa0_inv > 0:
            raise ContractError("need kappa0_inv > 0 or gamma0")
        gamma0 = np.sqrt(kappa0_inv)
    if not 0 < gamma0 <= 1:
        raise ContractError("gamma0 must lie in (0, 1]")
    return OptimizerState(w=np.array(w0, dtype=np.float64), gamma=float(gamma0))


def nesterov_dynamic_step(state: OptimizerState, grad_at: GradFn, L: float, kappa_inv: float) -> OptimizerState:
    """One step of Nesterov momentum with the gamma-driven coefficient.

    ``beta_n = g_n (1 - g_n) / (g_{n+1} + g_n^2)`` where ``g_{n+1}`` comes
    from :func:`gamma_recursion`.
    """
    if not (0.0 <= kappa_inv <= 1.0) or not L > 0:
        raise ContractError("need 0 <= kappa_inv <= 1 and L > 0")
    g_n = state.gamma
    g_next = gamma_recursion(g_n, kappa_inv)
    beta = g_n * (1.0 - g_n) / (g_next + g_n * g_n)
    y = state.w + beta * (state.w - state.w_prev)
    gy = _grad_fn(grad_at)(y)
    check_finite(gy, "gradient")
    return state.advance(y - gy / L, y=y, gamma=g_next, beta=beta)


def optimal_nesterov_init(w0: np.ndarray, grad_at: GradFn, L: float) -> OptimizerState:
    """Start of the optimal preset: a plain gradient step and ``gamma_1 = 1``.

    The returned state has ``n = 1``; continue with
    :func:`nesterov_dynamic_step`.
    """
    w0 = np.array(w0, dtype=np.float64)
    g = _grad_fn(grad_at)(w0)
    check_finite(g, "gradient")
    s = OptimizerState(w=w0, gamma=1.0)
    return s.advance(w0 - g / L, y=w0, gamma=1.0, beta=0.0)


def gamma_product(gammas) -> np.ndarray:
    """Running products ``Gamma^n = prod_{k=1}^n (1 - gamma_k)``, with ``Gamma^0 = 1``."""
    g = np.asarray(gammas, dtype=np.float64)
    return np.concatenate([[1.0], np.cumprod(1.0 - g)])


# Runners -----------------------------------------------------------------

def _tol_hit(problem, w, tol) -> bool:
    return tol is not None and np.linalg.norm(problem.gradient(w)) <= tol


def run_gd(problem, w0, alpha: float, iters: int, tol: Optional[float] = 1e-10, keep_iterates: bool = False):
    """Gradient descent with constant step.

    Returns
    -------
    trace : Trace
    iterates : list of ndarray or None
    """
    w = np.array(w0, dtype=np.float64)
    tr = Trace()
    tr.record(problem, w, 0, lr=alpha, beta=0.0)
    its = [w.copy()] if keep_iterates else None
    for n in range(1, iters + 1):
        if _tol_hit(problem, w, tol):
            break
        w = gd_step(w, problem.gradient(w), alpha)
        tr.record(problem, w, n, lr=alpha, beta=0.0)
        if keep_iterates:
            its.append(w.copy())
    return tr, its


def run_heavy_ball(problem, w0, h: float, beta: float, iters: int, tol: Optional[float] = 1e-10, keep_iterates: bool = False):
    """Heavy ball in flat form from ``w_{-1} = w_0``."""
    s = OptimizerState(w=np.array(w0, dtype=np.float64))
    tr = Trace()
    tr.record(problem, s.w, 0, lr=h, beta=beta)
    its = [s.w.copy()] if keep_iterates else None
    for n in range(1, iters + 1):
        if _tol_hit(problem, s.w, tol):
            break
        s = heavy_ball_step(s, problem.gradient(s.w), h, beta)
        tr.record(problem, s.w, n, lr=h, beta=beta)
        if keep_iterates:
            its.append(s.w.copy())
    return tr, its


def run_nesterov(problem, w0, h: float, beta: float, iters: int, tol: Optional[float] = 1e-10, keep_iterates: bool = False):
    """Nesterov momentum with constant ``(h, beta)``."""
    s = OptimizerState(w=np.array(w0, dtype=np.float64))
    tr = Trace()
    tr.record(problem, s.w, 0, lr=h, beta=beta)
    its = [s.w.copy()] if keep_iterates else None
    for n in range(1, iters + 1):
        if _tol_hit(problem, s.w, tol):
            break
        s = nesterov_step(s, problem.gradient, h, beta)
        tr.record(problem, s.w, n, lr=h, beta=beta)
        if keep_iterates:
            its.append(s.w.copy())
    return tr, its


def run_dynamic_nesterov(
    problem, w0, L: float, kappa_inv: float, iters: int, kappa0_inv: Optional[float] = None,
    optimal: bool = False, tol: Optional[float] = 1e-10, keep_iterates: bool = False,
):
    """Dynamic Nesterov momentum.

    With ``optimal=True`` the run starts with one plain gradient step and
    ``gamma_1 = 1``; otherwise ``gamma_0 = sqrt(kappa0_inv)``.

    Returns
    -------
    trace : Trace
        The ``gamma`` column holds the gamma attached to each iterate.
    iterates : list of ndarray or None
    """
    tr = Trace()
    w0 = np.array(w0, dtype=np.float64)
    its = [w0.copy()] if keep_iterates else None
    if optimal:
        tr.record(problem, w0, 0, lr=1.0 / L, beta=float("nan"), gamma=float("nan"))
        s = optimal_nesterov_init(w0, problem.gradient, L)
        tr.record(problem, s.w, 1, lr=1.0 / L, beta=0.0, gamma=s.gamma)
        if keep_iterates:
            its.append(s.w.copy())
    else:
        s = dynamic_init(w0, kappa0_inv)
        tr.record(problem, w0, 0, lr=1.0 / L, gamma=s.gamma)
    while s.n < iters:
        if _tol_hit(problem, s.w, tol):
            break
        s = nesterov_dynamic_step(s, problem.gradient, L, kappa_inv)
        tr.record(problem, s.w, s.n, lr=1.0 / L, beta=s.beta, gamma=s.gamma)
        if keep_iterates:
            its.append(s.w.copy())
    return tr, its


def run_general_schema(problem, w0, L: float, mu: float, lam0: float, iters: int, tol: Optional[float] = None, keep_iterates: bool = False):
    """Estimating-sequence scheme; ``gamma`` column holds ``gamma_n``."""
    s = general_schema_init(w0, lam0)
    tr = Trace()
    tr.record(problem, s.w, 0, lr=1.0 / L)
    its = [s.w.copy()] if keep_iterates else None
    for n in range(1, iters + 1):
        if _tol_hit(problem, s.w, tol):
            break
        s = nesterov_general_schema_step(s, problem, L, mu)
        tr.record(problem, s.w, n, lr=1.0 / L, gamma=s.gamma)
        if keep_iterates:
            its.append(s.w.copy())
    return tr, its


def nesterov_gap_bound(gammas, L: float, lam0: float, dist0_sq: float) -> np.ndarray:
    """``Gamma^n (L + lam0)/2 ||w0 - w*||^2`` for ``n = 0..len(gammas)``."""
    return gamma_product(gammas) * (L + lam0) / 2.0 * dist0_sq
