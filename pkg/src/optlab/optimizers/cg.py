"""Conjugate gradient descent on quadratics."""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from ..errors import ContractError
from .state import Trace


def cg_run(p, w0, max_iters: Optional[int] = None, tol: float = 1e-10) -> Tuple[Trace, List[np.ndarray]]:
    """Minimize a strictly convex quadratic by conjugate gradients.

    Directions follow ``d_1 = g_0`` and
    ``d_{n+1} = g_n + (||g_n||^2 / ||g_{n-1}||^2) d_n`` with the exact step
    ``alpha_n = <g_{n-1}, d_n> / <d_n, H d_n>`` and ``w_n = w_{n-1} - alpha_n d_n``.

    Parameters
    ----------
    p : object
        Quadratic exposing ``gradient`` and ``hvp``.
    w0 : ndarray
    max_iters : int, optional
        Defaults to the dimension.
    tol : float
        Stop once the gradient norm is at most ``tol``.

    Returns
    -------
    trace : Trace
        ``lr`` holds ``alpha_n`` and ``beta`` the direction coefficient.
    directions : list of ndarray
        The search directions actually used.
    """
    if not hasattr(p, "hvp"):
        raise ContractError("conjugate gradients need a Hessian-vector product")
    w = np.array(w0, dtype=np.float64)
    if max_iters is None:
        max_iters = w.size
    g = p.gradient(w)
    tr = Trace()
    tr.record(p, w, 0)
    dirs: List[np.ndarray] = []
    d = g.copy()
    gg = g @ g
    for n in range(1, max_iters + 1):
        if np.sqrt(gg) <= tol:
            break
        Hd = p.hvp(d)
        curv = d @ Hd
        if not curv > 0:
            raise ContractError("Hessian is not positive definite along a search direction")
        alpha = (g @ d) / curv
        w = w - alpha * d
        dirs.append(d)
        g = p.gradient(w)
        gg_new = g @ g
        beta = gg_new / gg
        tr.record(p, w, n, lr=alpha, beta=beta)
        d = g + beta * d
        gg = gg_new
    return tr, dirs


def conjugacy_residuals(directions, hvp) -> np.ndarray:
    """Matrix of ``|<d_i, H d_j>| / (||d_i||_H ||d_j||_H)`` with zero diagonal."""
    D = np.array(directions)
    HD = np.array([hvp(d) for d in D])
    G = D @ HD.T
    G = 0.5 * (G + G.T)
    s = np.sqrt(np.diag(G))
    R = np.abs(G) / np.outer(s, s)
    np.fill_diagonal(R, 0.0)
    return R
