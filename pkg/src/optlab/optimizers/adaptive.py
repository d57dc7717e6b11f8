"""Coordinate-wise adaptive methods.

All updates act on each coordinate independently. AdaGrad, RMSProp and
AdaDelta put ``eps`` inside the square root; the Adam family adds it to the
root, so the first Adam step is ``-alpha g / (|g| + eps)``.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, Optional

import numpy as np

from ..errors import ContractError
from .state import OptimizerState, check_finite

VARIANTS = ("AdaGrad", "RMSProp", "AdaDelta", "Adam", "AdaMax", "AMSGrad", "NAdam")

DEFAULTS: Dict[str, Dict[str, float]] = {
    "AdaGrad": {"alpha": 0.01, "eps": 1e-8},
    "RMSProp": {"alpha": 0.001, "gamma": 0.9, "eps": 1e-8},
    "AdaDelta": {"alpha": 1.0, "gamma": 0.95, "eps": 1e-6},
    "Adam": {"alpha": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "AdaMax": {"alpha": 0.002, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "AMSGrad": {"alpha": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "NAdam": {"alpha": 0.002, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
}


def _hyper(variant: str, hyper: Optional[dict]) -> dict:
    if variant not in VARIANTS:
        raise ContractError(f"unknown adaptive variant {variant!r}")
    h = dict(DEFAULTS[variant])
    if hyper:
        unknown = set(hyper) - set(h)
        if unknown:
            raise ContractError(f"{variant} does not take {sorted(unknown)}")
        h.update(hyper)
    if not h["eps"] > 0:
        raise ContractError("eps must be positive")
    return h


def _zeros_like(x, w):
    return np.zeros_like(w) if x is None else x


def adaptive_step(variant: str, state: OptimizerState, g: np.ndarray, hyper: Optional[dict] = None) -> OptimizerState:
    """One step of an adaptive method.

    Parameters
    ----------
    variant : str
        ``AdaGrad``, ``RMSProp``, ``AdaDelta``, ``Adam``, ``AdaMax``,
        ``AMSGrad`` or ``NAdam``.
    state : OptimizerState
        ``n`` counts completed steps; the bias corrections use ``k = n + 1``.
    g : ndarray
        (Stochastic) gradient at ``state.w``.
    hyper : dict, optional
        Overrides for :data:`DEFAULTS`.

    Returns
    -------
    OptimizerState
    """
    h = _hyper(variant, hyper)
    check_finite(g, "gradient")
    g = np.asarray(g, dtype=np.float64)
    w = state.w
    a, eps = h["alpha"], h["eps"]
    k = state.n + 1
    g2 = g * g

    if variant == "AdaGrad":
        G = _zeros_like(state.accumulated_sq, w) + g2
        return state.advance(w - a * g / np.sqrt(G + eps), accumulated_sq=G)

    if variant == "RMSProp":
        gam = h["gamma"]
        v = gam * _zeros_like(state.moment2, w) + (1 - gam) * g2
        return state.advance(w - a * g / np.sqrt(v + eps), moment2=v)

    if variant == "AdaDelta":
        gam = h["gamma"]
        v = gam * _zeros_like(state.moment2, w) + (1 - gam) * g2
        u = _zeros_like(state.delta_rms, w)
        delta = -np.sqrt(u + eps) / np.sqrt(v + eps) * g
        u = gam * u + (1 - gam) * delta * delta
        return state.advance(w + a * delta, moment2=v, delta_rms=u)

    b1, b2 = h["beta1"], h["beta2"]
    m = b1 * _zeros_like(state.moment1, w) + (1 - b1) * g

    if variant == "AdaMax":
        u = np.maximum(b2 * _zeros_like(state.moment2, w), np.abs(g))
        step = a / (1 - b1**k) * m / (u + eps)
        return state.advance(w - step, moment1=m, moment2=u)

    v = b2 * _zeros_like(state.moment2, w) + (1 - b2) * g2

    if variant == "Adam":
        m_hat = m / (1 - b1**k)
        v_hat = v / (1 - b2**k)
        return state.advance(w - a * m_hat / (np.sqrt(v_hat) + eps), moment1=m, moment2=v)

    if variant == "AMSGrad":
        vmax = np.maximum(_zeros_like(state.running_max, w), v)
        return state.advance(w - a * m / (np.sqrt(vmax) + eps), moment1=m, moment2=v, running_max=vmax)

    # NAdam: look-ahead momentum with constant beta1
    m_bar = b1 * m / (1 - b1 ** (k + 1)) + (1 - b1) * g / (1 - b1**k)
    v_hat = v / (1 - b2**k)
    return state.advance(w - a * m_bar / (np.sqrt(v_hat) + eps), moment1=m, moment2=v)


def run_adaptive(variant: str, problem, w0, iters: int, hyper: Optional[dict] = None,
                 oracle=None, stream=None, tol: Optional[float] = 1e-10):
    """Run an adaptive method; uses ``oracle.sample`` when given."""
    from .state import Trace

    s = OptimizerState(w=np.array(w0, dtype=np.float64))
    tr = Trace()
    lr = _hyper(variant, hyper)["alpha"]
    tr.record(problem, s.w, 0, lr=lr)
    for n in range(1, iters + 1):
        if tol is not None and oracle is None and np.linalg.norm(problem.gradient(s.w)) <= tol:
            break
        g = problem.gradient(s.w) if oracle is None else oracle.sample(s.w, stream).gradient
        s = adaptive_step(variant, s, g, hyper)
        tr.record(problem, s.w, n, lr=lr)
    return tr, s
